//! Planar distances, detours and corridors.
//!
//! A bundle is driven as `origin → depot → t1 → … → tℓ → destination`; its
//! detour is that path's length minus the direct origin–destination distance.

use alloc::collections::BTreeSet;
use core::fmt;

use crate::math;
use crate::model::{Bundle, DepotSpec, DriverSpec, Instance};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GeometryError {
    UnknownTask(u32),
    UnknownDepot(u32),
    NoFeasibleDepot,
    DegenerateDriver(u32),
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::UnknownTask(id) => write!(f, "unknown task id {id}"),
            GeometryError::UnknownDepot(id) => write!(f, "unknown depot id {id}"),
            GeometryError::NoFeasibleDepot => f.write_str("no depot serves every task of the set"),
            GeometryError::DegenerateDriver(id) => {
                write!(f, "driver {id} has identical origin and destination")
            }
        }
    }
}

#[inline]
pub fn distance(a: Point, b: Point) -> f64 {
    math::hypot(a.x - b.x, a.y - b.y)
}

/// Extra length of inserting `via` between `from` and `to`, clamped at zero
/// so rounding never produces a negative predictor.
#[inline]
pub fn insertion_detour(from: Point, via: Point, to: Point) -> f64 {
    let d = distance(from, via) + distance(via, to) - distance(from, to);
    if d > 0.0 {
        d
    } else {
        0.0
    }
}

/// Detour of the empty bundle picked up at `depot`.
pub fn initial_detour(driver: &DriverSpec, depot: &DepotSpec) -> f64 {
    insertion_detour(driver.origin, depot.location, driver.destination)
}

/// Detour growth when `task_location` is appended after `last`.
pub fn detour_increment(last: Point, task_location: Point, driver: &DriverSpec) -> f64 {
    insertion_detour(last, task_location, driver.destination)
}

/// Path length of the bundle's route minus the direct trip.
pub fn bundle_detour(instance: &Instance, driver: &DriverSpec, bundle: &Bundle) -> Result<f64, GeometryError> {
    let depot = instance.depot_by_id(bundle.depot_id).ok_or(GeometryError::UnknownDepot(bundle.depot_id))?;
    let mut length = distance(driver.origin, depot.location);
    let mut last = depot.location;
    for &id in &bundle.task_order {
        let t = instance.task_by_id(id).ok_or(GeometryError::UnknownTask(id))?;
        length += distance(last, t.location);
        last = t.location;
    }
    length += distance(last, driver.destination);
    let d = length - distance(driver.origin, driver.destination);
    Ok(if d > 0.0 { d } else { 0.0 })
}

/// Detour-minimizing depot among those serving every task in `tasks`, ties
/// broken by the smaller depot id.
pub fn best_depot(instance: &Instance, driver: &DriverSpec, tasks: &BTreeSet<u32>) -> Result<u32, GeometryError> {
    let mut idx = alloc::vec::Vec::with_capacity(tasks.len());
    for &id in tasks {
        idx.push(instance.task_index(id).ok_or(GeometryError::UnknownTask(id))?);
    }
    let mut best: Option<(f64, u32)> = None;
    for (d, depot) in instance.depots().iter().enumerate() {
        if !idx.iter().all(|&t| instance.depot_serves(d, t)) {
            continue;
        }
        let det = initial_detour(driver, depot);
        let better = match best {
            None => true,
            Some((bd, bid)) => det < bd || (det == bd && depot.id < bid),
        };
        if better {
            best = Some((det, depot.id));
        }
    }
    best.map(|(_, id)| id).ok_or(GeometryError::NoFeasibleDepot)
}

/// Unsigned angle in radians between `axis` and `v`; a zero `v` has angle 0.
pub fn angle_between(axis: Point, v: Point) -> f64 {
    if v.x == 0.0 && v.y == 0.0 {
        return 0.0;
    }
    let cross = axis.x * v.y - axis.y * v.x;
    let dot = axis.x * v.x + axis.y * v.y;
    math::abs(math::atan2(cross, dot))
}

/// Task indices inside the driver's corridor of half-angle `theta_degrees`.
pub fn corridor_indices(
    instance: &Instance,
    driver: &DriverSpec,
    theta_degrees: f64,
) -> Result<crate::taskset::TaskSet, GeometryError> {
    if driver.origin == driver.destination {
        return Err(GeometryError::DegenerateDriver(driver.id));
    }
    let theta = theta_degrees.to_radians();
    // at 180° the corridor is the whole plane, including points straight behind
    let inside = |angle: f64| theta_degrees >= 180.0 || angle < theta;
    let s = driver.origin;
    let axis = Point::new(driver.destination.x - s.x, driver.destination.y - s.y);
    let rel = |p: Point| Point::new(p.x - s.x, p.y - s.y);
    let depot_inside: alloc::vec::Vec<bool> =
        instance.depots().iter().map(|d| inside(angle_between(axis, rel(d.location)))).collect();
    let n = instance.tasks().len();
    let mut out = crate::taskset::TaskSet::empty(n);
    for (ti, task) in instance.tasks().iter().enumerate() {
        if !inside(angle_between(axis, rel(task.location))) {
            continue;
        }
        if (0..instance.depots().len()).any(|d| depot_inside[d] && instance.depot_serves(d, ti)) {
            out.insert(ti);
        }
    }
    Ok(out)
}

/// Task ids inside the driver's corridor.
pub fn corridor_tasks(
    instance: &Instance,
    driver: &DriverSpec,
    theta_degrees: f64,
) -> Result<BTreeSet<u32>, GeometryError> {
    let set = corridor_indices(instance, driver, theta_degrees)?;
    Ok(set.iter().map(|i| instance.tasks()[i].id).collect())
}
