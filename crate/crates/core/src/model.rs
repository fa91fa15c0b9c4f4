//! Problem data, offers and solutions.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::geometry::{self, Point};
use crate::probability::{self, BehaviorCoefficients, PredictorVector};
use crate::taskset::TaskSet;

/// Tolerance for recomputed offer and objective values.
pub const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaskSpec {
    pub id: u32,
    pub location: Point,
    pub load: f64,
    /// Price of shipping the task through the third-party carrier.
    pub outsource_cost: f64,
}

impl TaskSpec {
    pub fn new(id: u32, location: Point, load: f64, outsource_cost: f64) -> Self {
        TaskSpec { id, location, load, outsource_cost }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DepotSpec {
    pub id: u32,
    pub location: Point,
    pub servable_tasks: BTreeSet<u32>,
}

impl DepotSpec {
    pub fn new(id: u32, location: Point, servable: impl IntoIterator<Item = u32>) -> Self {
        DepotSpec { id, location, servable_tasks: servable.into_iter().collect() }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DriverSpec {
    pub id: u32,
    pub origin: Point,
    pub destination: Point,
    pub capacity: f64,
    pub behavior: BehaviorCoefficients,
    /// Behavioral class label, carried for reporting only.
    pub class_tag: Option<u8>,
}

impl DriverSpec {
    pub fn new(id: u32, origin: Point, destination: Point, capacity: f64, behavior: BehaviorCoefficients) -> Self {
        DriverSpec { id, origin, destination, capacity, behavior, class_tag: None }
    }

    pub fn with_class(mut self, class: u8) -> Self {
        self.class_tag = Some(class);
        self
    }
}

/// Additive bundle predictors beyond detour and size. Coefficients live in
/// [`BehaviorCoefficients::extra_bundle_coeffs`], in the order the instance
/// lists its predictors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ExtraPredictor {
    /// Total load of the bundle.
    TotalLoad,
}

impl ExtraPredictor {
    pub fn initial(&self) -> f64 {
        0.0
    }

    /// Growth when `task` is appended. Independent of the previous stop for
    /// the predictors defined so far.
    pub fn increment(&self, task: &TaskSpec) -> f64 {
        match self {
            ExtraPredictor::TotalLoad => task.load,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelError {
    DuplicateId { kind: &'static str, id: u32 },
    UnknownTask(u32),
    UnknownDepot(u32),
    UnknownDriver(u32),
    UnservedTask(u32),
    Invalid { what: String, reason: &'static str },
    EmptyBundle,
    RepeatedTask(u32),
    NotServable { depot: u32, task: u32 },
    NoFeasibleDepot,
    OverCapacity { driver: u32, load: f64, capacity: f64 },
    WorthlessOffer,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::DuplicateId { kind, id } => write!(f, "duplicate {kind} id {id}"),
            ModelError::UnknownTask(id) => write!(f, "unknown task id {id}"),
            ModelError::UnknownDepot(id) => write!(f, "unknown depot id {id}"),
            ModelError::UnknownDriver(id) => write!(f, "unknown driver id {id}"),
            ModelError::UnservedTask(id) => write!(f, "task {id} is not servable from any depot"),
            ModelError::Invalid { what, reason } => write!(f, "{what}: {reason}"),
            ModelError::EmptyBundle => f.write_str("bundle has no tasks"),
            ModelError::RepeatedTask(id) => write!(f, "task {id} appears twice in a bundle"),
            ModelError::NotServable { depot, task } => write!(f, "depot {depot} cannot serve task {task}"),
            ModelError::NoFeasibleDepot => f.write_str("no depot serves every task of the bundle"),
            ModelError::OverCapacity { driver, load, capacity } => {
                write!(f, "bundle load {load} exceeds capacity {capacity} of driver {driver}")
            }
            ModelError::WorthlessOffer => f.write_str("optimal compensation is not positive"),
        }
    }
}

/// Immutable, validated problem instance.
///
/// Tasks, depots and drivers keep their input order; solver internals address
/// them by position ("index") while files and offers use ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    name: String,
    seed: Option<u64>,
    tasks: Vec<TaskSpec>,
    depots: Vec<DepotSpec>,
    drivers: Vec<DriverSpec>,
    extra_predictors: Vec<ExtraPredictor>,
    task_index: BTreeMap<u32, usize>,
    depot_index: BTreeMap<u32, usize>,
    driver_index: BTreeMap<u32, usize>,
    depot_masks: Vec<TaskSet>,
}

fn invalid(what: impl fmt::Display, reason: &'static str) -> ModelError {
    ModelError::Invalid { what: alloc::format!("{what}"), reason }
}

fn index_ids(kind: &'static str, ids: impl Iterator<Item = u32>) -> Result<BTreeMap<u32, usize>, ModelError> {
    let mut map = BTreeMap::new();
    for (i, id) in ids.enumerate() {
        if map.insert(id, i).is_some() {
            return Err(ModelError::DuplicateId { kind, id });
        }
    }
    Ok(map)
}

impl Instance {
    pub fn new(
        name: impl Into<String>,
        seed: Option<u64>,
        tasks: Vec<TaskSpec>,
        depots: Vec<DepotSpec>,
        drivers: Vec<DriverSpec>,
    ) -> Result<Self, ModelError> {
        Self::with_extra_predictors(name, seed, tasks, depots, drivers, Vec::new())
    }

    pub fn with_extra_predictors(
        name: impl Into<String>,
        seed: Option<u64>,
        tasks: Vec<TaskSpec>,
        depots: Vec<DepotSpec>,
        drivers: Vec<DriverSpec>,
        extra_predictors: Vec<ExtraPredictor>,
    ) -> Result<Self, ModelError> {
        let task_index = index_ids("task", tasks.iter().map(|t| t.id))?;
        let depot_index = index_ids("depot", depots.iter().map(|d| d.id))?;
        let driver_index = index_ids("driver", drivers.iter().map(|w| w.id))?;

        for t in &tasks {
            if !t.location.is_finite() {
                return Err(invalid(alloc::format!("task {}", t.id), "location must be finite"));
            }
            if !(t.load > 0.0 && t.load.is_finite()) {
                return Err(invalid(alloc::format!("task {}", t.id), "load must be > 0"));
            }
            if !(t.outsource_cost > 0.0 && t.outsource_cost.is_finite()) {
                return Err(invalid(alloc::format!("task {}", t.id), "outsource cost must be > 0"));
            }
        }
        let mut depot_masks = Vec::with_capacity(depots.len());
        let mut served = TaskSet::empty(tasks.len());
        for d in &depots {
            if !d.location.is_finite() {
                return Err(invalid(alloc::format!("depot {}", d.id), "location must be finite"));
            }
            let mut mask = TaskSet::empty(tasks.len());
            for id in &d.servable_tasks {
                let ti = *task_index.get(id).ok_or(ModelError::UnknownTask(*id))?;
                mask.insert(ti);
                served.insert(ti);
            }
            depot_masks.push(mask);
        }
        if let Some(t) = tasks.iter().enumerate().find(|(i, _)| !served.contains(*i)) {
            return Err(ModelError::UnservedTask(t.1.id));
        }
        for w in &drivers {
            let what = || alloc::format!("driver {}", w.id);
            if !w.origin.is_finite() || !w.destination.is_finite() {
                return Err(invalid(what(), "locations must be finite"));
            }
            if !(w.capacity > 0.0 && w.capacity.is_finite()) {
                return Err(invalid(what(), "capacity must be > 0"));
            }
            w.behavior.check().map_err(|r| invalid(what(), r))?;
            if w.behavior.extra_bundle_coeffs.len() != extra_predictors.len() {
                return Err(invalid(what(), "one extra bundle coefficient per instance predictor is required"));
            }
            if let Some(c) = w.class_tag {
                if !(1..=3).contains(&c) {
                    return Err(invalid(what(), "class tag must be 1, 2 or 3"));
                }
            }
        }
        Ok(Instance {
            name: name.into(),
            seed,
            tasks,
            depots,
            drivers,
            extra_predictors,
            task_index,
            depot_index,
            driver_index,
            depot_masks,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    pub fn depots(&self) -> &[DepotSpec] {
        &self.depots
    }

    pub fn drivers(&self) -> &[DriverSpec] {
        &self.drivers
    }

    pub fn extra_predictors(&self) -> &[ExtraPredictor] {
        &self.extra_predictors
    }

    pub fn task_index(&self, id: u32) -> Option<usize> {
        self.task_index.get(&id).copied()
    }

    pub fn depot_index(&self, id: u32) -> Option<usize> {
        self.depot_index.get(&id).copied()
    }

    pub fn driver_index(&self, id: u32) -> Option<usize> {
        self.driver_index.get(&id).copied()
    }

    pub fn task_by_id(&self, id: u32) -> Option<&TaskSpec> {
        self.task_index(id).map(|i| &self.tasks[i])
    }

    pub fn depot_by_id(&self, id: u32) -> Option<&DepotSpec> {
        self.depot_index(id).map(|i| &self.depots[i])
    }

    pub fn driver_by_id(&self, id: u32) -> Option<&DriverSpec> {
        self.driver_index(id).map(|i| &self.drivers[i])
    }

    /// Tasks servable from the depot at `depot` (an index).
    pub fn depot_mask(&self, depot: usize) -> &TaskSet {
        &self.depot_masks[depot]
    }

    pub fn depot_serves(&self, depot: usize, task: usize) -> bool {
        self.depot_masks[depot].contains(task)
    }

    /// Predictor values of the route driver → depot → tasks (all indices).
    pub fn predictors(&self, driver: usize, depot: usize, tasks: &[usize]) -> PredictorVector {
        let w = &self.drivers[driver];
        let dep = &self.depots[depot];
        let mut detour = geometry::initial_detour(w, dep);
        let mut last = dep.location;
        let mut extras: Vec<f64> = self.extra_predictors.iter().map(|p| p.initial()).collect();
        for &t in tasks {
            let task = &self.tasks[t];
            detour += geometry::detour_increment(last, task.location, w);
            last = task.location;
            for (x, p) in extras.iter_mut().zip(&self.extra_predictors) {
                *x += p.increment(task);
            }
        }
        PredictorVector { detour, bundle_size: tasks.len() as f64, extras }
    }
}

/// An ordered bundle picked up at one depot.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bundle {
    pub depot_id: u32,
    pub task_order: Vec<u32>,
}

impl Bundle {
    pub fn new(depot_id: u32, task_order: Vec<u32>) -> Self {
        Bundle { depot_id, task_order }
    }
}

/// A bundle offered to a driver at a given compensation.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Offer {
    pub driver_id: u32,
    pub bundle: Bundle,
    pub compensation: f64,
    pub acceptance_probability: f64,
    pub expected_savings: f64,
    pub detour: f64,
}

/// Resolved indices of a bundle offered to a driver.
pub(crate) struct ResolvedBundle {
    pub driver: usize,
    pub depot: usize,
    pub tasks: Vec<usize>,
}

pub(crate) fn resolve_bundle(instance: &Instance, driver_id: u32, bundle: &Bundle) -> Result<ResolvedBundle, ModelError> {
    let driver = instance.driver_index(driver_id).ok_or(ModelError::UnknownDriver(driver_id))?;
    let depot = instance.depot_index(bundle.depot_id).ok_or(ModelError::UnknownDepot(bundle.depot_id))?;
    if bundle.task_order.is_empty() {
        return Err(ModelError::EmptyBundle);
    }
    let mut tasks = Vec::with_capacity(bundle.task_order.len());
    let mut seen = BTreeSet::new();
    let mut load = 0.0;
    for &id in &bundle.task_order {
        let t = instance.task_index(id).ok_or(ModelError::UnknownTask(id))?;
        if !seen.insert(id) {
            return Err(ModelError::RepeatedTask(id));
        }
        if !instance.depot_serves(depot, t) {
            return Err(ModelError::NotServable { depot: bundle.depot_id, task: id });
        }
        load += instance.tasks()[t].load;
        tasks.push(t);
    }
    let w = &instance.drivers()[driver];
    if load > w.capacity {
        return Err(ModelError::OverCapacity { driver: driver_id, load, capacity: w.capacity });
    }
    Ok(ResolvedBundle { driver, depot, tasks })
}

impl Offer {
    /// Prices `bundle` for `driver_id` at its optimal compensation.
    pub fn evaluate(instance: &Instance, driver_id: u32, bundle: Bundle) -> Result<Offer, ModelError> {
        let r = resolve_bundle(instance, driver_id, &bundle)?;
        let x = instance.predictors(r.driver, r.depot, &r.tasks);
        let cbar: f64 = r.tasks.iter().map(|&t| instance.tasks()[t].outsource_cost).sum();
        let coeffs = &instance.drivers()[r.driver].behavior;
        let v = probability::price_offer(coeffs, &x, cbar).ok_or(ModelError::WorthlessOffer)?;
        Ok(Offer {
            driver_id,
            bundle,
            compensation: v.compensation,
            acceptance_probability: v.acceptance_probability,
            expected_savings: v.expected_savings,
            detour: x.detour,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SolveStatus {
    Optimal,
    Heuristic,
    TimeLimit,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Heuristic => "heuristic",
            SolveStatus::TimeLimit => "time_limit",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "optimal" => Some(SolveStatus::Optimal),
            "heuristic" => Some(SolveStatus::Heuristic),
            "time_limit" => Some(SolveStatus::TimeLimit),
            _ => None,
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Solution {
    pub offers: Vec<Offer>,
    pub objective: f64,
    pub bound: Option<f64>,
    pub status: SolveStatus,
}

impl Solution {
    /// Offers nothing; every task goes to the carrier.
    pub fn empty(status: SolveStatus) -> Self {
        Solution { offers: Vec::new(), objective: 0.0, bound: None, status }
    }

    pub fn from_offers(offers: Vec<Offer>, bound: Option<f64>, status: SolveStatus) -> Self {
        let objective = offers.iter().map(|o| o.expected_savings).sum();
        Solution { offers, objective, bound, status }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    TaskMultiplicity { task: u32, count: usize },
    DriverMultiplicity { driver: u32, count: usize },
    Capacity { driver: u32, load: f64, capacity: f64 },
    DepotServability { depot: u32, task: u32 },
    UnknownId(ModelError),
    MalformedBundle { driver: u32, error: ModelError },
    OfferMismatch { driver: u32, field: &'static str, stored: f64, recomputed: f64 },
    ObjectiveMismatch { stored: f64, recomputed: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TaskMultiplicity { task, count } => write!(f, "task {task} offered {count} times"),
            Violation::DriverMultiplicity { driver, count } => {
                write!(f, "driver {driver} receives {count} offers")
            }
            Violation::Capacity { driver, load, capacity } => {
                write!(f, "driver {driver}: load {load} exceeds capacity {capacity}")
            }
            Violation::DepotServability { depot, task } => write!(f, "depot {depot} cannot serve task {task}"),
            Violation::UnknownId(e) => write!(f, "{e}"),
            Violation::MalformedBundle { driver, error } => write!(f, "offer to driver {driver}: {error}"),
            Violation::OfferMismatch { driver, field, stored, recomputed } => {
                write!(f, "offer to driver {driver}: {field} {stored} != recomputed {recomputed}")
            }
            Violation::ObjectiveMismatch { stored, recomputed } => {
                write!(f, "objective {stored} != sum of expected savings {recomputed}")
            }
        }
    }
}

/// Findings of [`validate_solution`]; empty iff the solution is feasible and
/// internally consistent.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= CONSISTENCY_TOL * 1f64.max(a.abs()).max(b.abs())
}

pub fn validate_solution(instance: &Instance, solution: &Solution) -> ValidationReport {
    let mut v = Vec::new();
    let mut task_count: BTreeMap<u32, usize> = BTreeMap::new();
    let mut driver_count: BTreeMap<u32, usize> = BTreeMap::new();
    for offer in &solution.offers {
        *driver_count.entry(offer.driver_id).or_default() += 1;
        for &t in &offer.bundle.task_order {
            *task_count.entry(t).or_default() += 1;
        }
        let Some(wi) = instance.driver_index(offer.driver_id) else {
            v.push(Violation::UnknownId(ModelError::UnknownDriver(offer.driver_id)));
            continue;
        };
        let Some(di) = instance.depot_index(offer.bundle.depot_id) else {
            v.push(Violation::UnknownId(ModelError::UnknownDepot(offer.bundle.depot_id)));
            continue;
        };
        let mut load = 0.0;
        let mut ok = true;
        let mut seen = BTreeSet::new();
        for &id in &offer.bundle.task_order {
            match instance.task_index(id) {
                None => {
                    v.push(Violation::UnknownId(ModelError::UnknownTask(id)));
                    ok = false;
                }
                Some(ti) => {
                    load += instance.tasks()[ti].load;
                    if !instance.depot_serves(di, ti) {
                        v.push(Violation::DepotServability { depot: offer.bundle.depot_id, task: id });
                    }
                }
            }
            if !seen.insert(id) {
                v.push(Violation::MalformedBundle { driver: offer.driver_id, error: ModelError::RepeatedTask(id) });
                ok = false;
            }
        }
        if offer.bundle.task_order.is_empty() {
            v.push(Violation::MalformedBundle { driver: offer.driver_id, error: ModelError::EmptyBundle });
            ok = false;
        }
        let w = &instance.drivers()[wi];
        if load > w.capacity {
            v.push(Violation::Capacity { driver: w.id, load, capacity: w.capacity });
        }
        if !ok {
            continue;
        }
        let tasks: Vec<usize> = offer.bundle.task_order.iter().filter_map(|&id| instance.task_index(id)).collect();
        let x = instance.predictors(wi, di, &tasks);
        let cbar: f64 = tasks.iter().map(|&t| instance.tasks()[t].outsource_cost).sum();
        let p = probability::acceptance_probability(&w.behavior, &x, offer.compensation);
        let es = probability::expected_savings(p, cbar, offer.compensation);
        let mut check = |field, stored: f64, recomputed: f64| {
            if !close(stored, recomputed) {
                v.push(Violation::OfferMismatch { driver: w.id, field, stored, recomputed });
            }
        };
        check("acceptance_probability", offer.acceptance_probability, p);
        check("expected_savings", offer.expected_savings, es);
        check("detour", offer.detour, x.detour);
        if !(offer.compensation >= 0.0) {
            v.push(Violation::OfferMismatch {
                driver: w.id,
                field: "compensation",
                stored: offer.compensation,
                recomputed: 0.0,
            });
        }
    }
    for (task, count) in task_count {
        if count > 1 {
            v.push(Violation::TaskMultiplicity { task, count });
        }
    }
    for (driver, count) in driver_count {
        if count > 1 {
            v.push(Violation::DriverMultiplicity { driver, count });
        }
    }
    let recomputed: f64 = solution.offers.iter().map(|o| o.expected_savings).sum();
    if !close(solution.objective, recomputed) {
        v.push(Violation::ObjectiveMismatch { stored: solution.objective, recomputed });
    }
    ValidationReport { violations: v }
}
