//! Benchmark library generation and result metrics.
//!
//! The library has ten full-scale bases of 120 tasks and 60 drivers. Each
//! base gets eight class patterns (three single-class, five mixed) and twenty
//! reductions that keep the first `|M|` tasks and the first `p·|M|` drivers,
//! 1,600 instances in all.
//!
//! Random numbers come from ChaCha8 and are turned into values with plain
//! integer arithmetic (see [`unit`] and [`int_in`]) so a port in another
//! language can reproduce the library exactly.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Point;
use crate::model::{DepotSpec, DriverSpec, Instance, Solution, TaskSpec};
use crate::orchestrator::{RunReport, Variant};
use crate::probability::BehaviorCoefficients;

/// SplitMix64 finalizer, used to derive independent stream seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `parts` under `master`.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(master), |s, &p| splitmix64(s ^ splitmix64(p)))
}

/// Uniform in `[0, 1)` from the top 53 bits.
pub fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Integer in `lo..=hi` (modulo reduction; the bias is below 2⁻⁵⁸ here).
pub fn int_in(rng: &mut impl RngCore, lo: u64, hi: u64) -> u64 {
    lo + rng.next_u64() % (hi - lo + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassPattern {
    /// Every driver in class 1, 2 or 3.
    Single(u8),
    /// Balanced classes, `1..=5` selecting the shuffle.
    Mixed(u8),
}

impl ClassPattern {
    pub const ALL: [ClassPattern; 8] = [
        ClassPattern::Single(1),
        ClassPattern::Single(2),
        ClassPattern::Single(3),
        ClassPattern::Mixed(1),
        ClassPattern::Mixed(2),
        ClassPattern::Mixed(3),
        ClassPattern::Mixed(4),
        ClassPattern::Mixed(5),
    ];

    pub fn index(&self) -> u64 {
        match self {
            ClassPattern::Single(c) => *c as u64 - 1,
            ClassPattern::Mixed(k) => 2 + *k as u64,
        }
    }

    pub fn parse(s: &str) -> Option<ClassPattern> {
        ClassPattern::ALL.into_iter().find(|p| p.to_string() == s)
    }
}

impl fmt::Display for ClassPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassPattern::Single(c) => write!(f, "c{c}"),
            ClassPattern::Mixed(k) => write!(f, "m{k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub n_full_instances: usize,
    pub full_tasks: usize,
    pub full_drivers: usize,
    pub task_sizes: Vec<usize>,
    pub driver_ratios: Vec<f64>,
    pub region_half_width: f64,
    pub load_range: (u64, u64),
    pub capacity: f64,
    pub outsource_cost: f64,
    pub class_coefficients: [BehaviorCoefficients; 3],
    pub patterns: Vec<ClassPattern>,
    pub master_seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_full_instances: 10,
            full_tasks: 120,
            full_drivers: 60,
            task_sizes: vec![30, 60, 90, 120],
            driver_ratios: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            region_half_width: 5.0,
            load_range: (10, 30),
            capacity: 100.0,
            outsource_cost: 4.95,
            class_coefficients: [1, 2, 3].map(|c| BehaviorCoefficients::class(c).expect("benchmark class")),
            patterns: ClassPattern::ALL.to_vec(),
            master_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorError {
    TooManyTasks { requested: usize, available: usize },
    TooManyDrivers { requested: usize, available: usize },
    UnknownPattern(String),
    BadName(String),
}

impl fmt::Display for GeneratorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorError::TooManyTasks { requested, available } => {
                write!(f, "{requested} tasks requested, the full-scale instance has {available}")
            }
            GeneratorError::TooManyDrivers { requested, available } => {
                write!(f, "{requested} drivers requested, the full-scale instance has {available}")
            }
            GeneratorError::UnknownPattern(p) => write!(f, "unknown class pattern {p:?}"),
            GeneratorError::BadName(n) => write!(f, "not a library instance name: {n:?}"),
        }
    }
}

/// Drivers for a task count and ratio (`p·|M|`, rounded).
pub fn driver_count(tasks: usize, ratio: f64) -> usize {
    crate::math::round(ratio * tasks as f64) as usize
}

pub fn instance_name(base: usize, pattern: ClassPattern, tasks: usize, ratio: f64) -> String {
    format!("inst{base:02}_{pattern}_{tasks}_{ratio:.1}")
}

/// Inverse of [`instance_name`].
pub fn parse_instance_name(name: &str) -> Result<(usize, ClassPattern, usize, f64), GeneratorError> {
    let bad = || GeneratorError::BadName(name.to_string());
    let parts: Vec<&str> = name.split('_').collect();
    let [b, p, m, r] = parts[..] else {
        return Err(bad());
    };
    let base = b.strip_prefix("inst").and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let pattern = ClassPattern::parse(p).ok_or_else(|| GeneratorError::UnknownPattern(p.to_string()))?;
    let tasks = m.parse().map_err(|_| bad())?;
    let ratio = r.parse().map_err(|_| bad())?;
    Ok((base, pattern, tasks, ratio))
}

/// Locations and loads of one full-scale base, shared by all its patterns.
struct Base {
    tasks: Vec<(Point, f64)>,
    destinations: Vec<Point>,
    seed: u64,
}

fn point(rng: &mut impl RngCore, half: f64) -> Point {
    let x = -half + 2.0 * half * unit(rng);
    let y = -half + 2.0 * half * unit(rng);
    Point::new(x, y)
}

fn base(config: &GeneratorConfig, index: usize) -> Base {
    let seed = derive_seed(config.master_seed, &[index as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tasks = (0..config.full_tasks)
        .map(|_| {
            let p = point(&mut rng, config.region_half_width);
            let q = int_in(&mut rng, config.load_range.0, config.load_range.1) as f64;
            (p, q)
        })
        .collect();
    let destinations = (0..config.full_drivers).map(|_| point(&mut rng, config.region_half_width)).collect();
    Base { tasks, destinations, seed }
}

/// Class of every full-scale driver. Mixed patterns shuffle `(1, 2, 3)` in
/// each consecutive block of three drivers, so every prefix whose length is
/// a multiple of three is exactly balanced.
pub fn driver_classes(config: &GeneratorConfig, base_index: usize, pattern: ClassPattern) -> Vec<u8> {
    match pattern {
        ClassPattern::Single(c) => vec![c; config.full_drivers],
        ClassPattern::Mixed(_) => {
            let seed = derive_seed(config.master_seed, &[base_index as u64, pattern.index()]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::with_capacity(config.full_drivers);
            while out.len() < config.full_drivers {
                let mut block = [1u8, 2, 3];
                for i in (1..3).rev() {
                    let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                    block.swap(i, j);
                }
                out.extend_from_slice(&block);
            }
            out.truncate(config.full_drivers);
            out
        }
    }
}

/// One library instance: the first `tasks` tasks and first `p·tasks`
/// drivers of base `base_index` under `pattern`.
pub fn generate_instance(
    config: &GeneratorConfig,
    base_index: usize,
    pattern: ClassPattern,
    tasks: usize,
    ratio: f64,
) -> Result<Instance, GeneratorError> {
    let drivers = driver_count(tasks, ratio);
    if tasks > config.full_tasks {
        return Err(GeneratorError::TooManyTasks { requested: tasks, available: config.full_tasks });
    }
    if drivers > config.full_drivers {
        return Err(GeneratorError::TooManyDrivers { requested: drivers, available: config.full_drivers });
    }
    let b = base(config, base_index);
    let classes = driver_classes(config, base_index, pattern);
    let origin = Point::new(0.0, 0.0);
    let task_specs: Vec<TaskSpec> = b.tasks[..tasks]
        .iter()
        .enumerate()
        .map(|(i, &(p, q))| TaskSpec::new(i as u32, p, q, config.outsource_cost))
        .collect();
    let depots = vec![DepotSpec::new(0, origin, 0..tasks as u32)];
    let driver_specs = (0..drivers)
        .map(|w| {
            let class = classes[w];
            let coeffs = config.class_coefficients[class as usize - 1].clone();
            DriverSpec::new(w as u32, origin, b.destinations[w], config.capacity, coeffs).with_class(class)
        })
        .collect();
    let name = instance_name(base_index, pattern, tasks, ratio);
    Ok(Instance::new(name, Some(b.seed), task_specs, depots, driver_specs).expect("generated instances are valid"))
}

/// `(base, pattern, tasks, ratio)` of every library member, in library order.
pub fn library_plan(config: &GeneratorConfig) -> Vec<(usize, ClassPattern, usize, f64)> {
    let mut plan = Vec::new();
    for b in 0..config.n_full_instances {
        for &p in &config.patterns {
            for &m in &config.task_sizes {
                for &r in &config.driver_ratios {
                    plan.push((b, p, m, r));
                }
            }
        }
    }
    plan
}

pub fn generate_library(config: &GeneratorConfig) -> Result<Vec<Instance>, GeneratorError> {
    library_plan(config).into_iter().map(|(b, p, m, r)| generate_instance(config, b, p, m, r)).collect()
}

/// A random instance small enough for the exhaustive oracle: 3 to 7 tasks,
/// 1 or 2 drivers, 1 or 2 depots, and a capacity that fits at most three
/// tasks.
pub fn tiny_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x7117]));
    let n = int_in(&mut rng, 3, 7) as usize;
    let m = int_in(&mut rng, 1, 2) as usize;
    let nd = int_in(&mut rng, 1, 2) as usize;
    let half = 3.0;
    let tasks: Vec<TaskSpec> = (0..n)
        .map(|i| {
            let p = point(&mut rng, half);
            TaskSpec::new(i as u32, p, int_in(&mut rng, 15, 30) as f64, 4.95)
        })
        .collect();
    let mut depots = Vec::new();
    for d in 0..nd {
        let loc = if d == 0 { Point::new(0.0, 0.0) } else { point(&mut rng, half) };
        let serves: Vec<u32> = if d == 0 && nd == 1 {
            (0..n as u32).collect()
        } else {
            (0..n as u32).filter(|_| rng.next_u64() % 3 != 0).collect()
        };
        depots.push(DepotSpec::new(d as u32, loc, serves));
    }
    // every task needs a depot
    for t in 0..n as u32 {
        if !depots.iter().any(|d| d.servable_tasks.contains(&t)) {
            let d = (rng.next_u64() % nd as u64) as usize;
            depots[d].servable_tasks.insert(t);
        }
    }
    let drivers = (0..m)
        .map(|w| {
            let class = int_in(&mut rng, 1, 3) as u8;
            let origin = point(&mut rng, half);
            let dest = point(&mut rng, half);
            DriverSpec::new(w as u32, origin, dest, 59.0, BehaviorCoefficients::class(class).expect("class"))
                .with_class(class)
        })
        .collect();
    Instance::new(format!("tiny{seed}"), Some(seed), tasks, depots, drivers).expect("tiny instances are valid")
}

/// Per-run metrics for tables.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub instance: String,
    pub variant: String,
    pub objective: f64,
    pub upper_bound: Option<f64>,
    pub lb_mip: Option<f64>,
    pub gap_h: Option<f64>,
    pub gap_opt: Option<f64>,
    pub gap_bk: Option<f64>,
    pub mean_acceptance: Option<f64>,
    pub mean_compensation: Option<f64>,
    pub mean_bundle_size: Option<f64>,
    pub mean_detour: Option<f64>,
    pub wall_time: f64,
}

pub const METRICS_HEADER: &str = "instance\tvariant\tobjective\tupper_bound\tgap_h\tgap_opt\tgap_bk\tmean_acceptance\tmean_compensation\tmean_bundle_size\tmean_detour\twall_time";

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

impl MetricsRow {
    pub fn from_report(report: &RunReport) -> Self {
        let offers = &report.solution.offers;
        MetricsRow {
            instance: report.instance_name.clone(),
            variant: report.variant.name().to_string(),
            objective: report.solution.objective,
            upper_bound: report.upper_bound,
            lb_mip: report.lb_mip,
            gap_h: report.gap_h,
            gap_opt: None,
            gap_bk: None,
            mean_acceptance: mean(offers.iter().map(|o| o.acceptance_probability)),
            mean_compensation: mean(offers.iter().map(|o| o.compensation)),
            mean_bundle_size: mean(offers.iter().map(|o| o.bundle.task_order.len() as f64)),
            mean_detour: mean(offers.iter().map(|o| o.detour)),
            wall_time: report.wall_time_seconds,
        }
    }

    /// One tab-separated line; absent values print as `-`.
    pub fn to_tsv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| String::from("-"), |x| format!("{x}"));
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.instance,
            self.variant,
            self.objective,
            opt(self.upper_bound),
            opt(self.gap_h),
            opt(self.gap_opt),
            opt(self.gap_bk),
            opt(self.mean_acceptance),
            opt(self.mean_compensation),
            opt(self.mean_bundle_size),
            opt(self.mean_detour),
            self.wall_time
        )
    }
}

/// `(reference − value)/reference`; absent for a non-positive reference.
pub fn relative_gap(reference: f64, value: f64) -> Option<f64> {
    (reference > 0.0).then(|| (reference - value) / reference)
}

/// Builds metric rows and fills the gaps. `references` maps instance names
/// to optimal or best-known objectives. Heuristic runs get the gap of their
/// MILP bound to the optimum; sequential runs get the gap of their objective
/// to the best known integrated one.
pub fn compute_gaps(reports: &[RunReport], references: &BTreeMap<String, f64>) -> Vec<MetricsRow> {
    reports
        .iter()
        .map(|r| {
            let mut row = MetricsRow::from_report(r);
            row.gap_h = crate::orchestrator::gap_h(r.upper_bound, r.lb_mip.unwrap_or(r.solution.objective));
            if let Some(&reference) = references.get(&r.instance_name) {
                if r.variant == Variant::Seq {
                    row.gap_bk = relative_gap(reference, r.solution.objective);
                } else {
                    row.gap_opt = relative_gap(reference, r.lb_mip.unwrap_or(r.solution.objective));
                }
            }
            row
        })
        .collect()
}

/// Best objective per instance over a set of reports.
pub fn best_known(reports: &[RunReport]) -> BTreeMap<String, f64> {
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    for r in reports {
        if r.variant == Variant::Seq {
            continue;
        }
        let e = best.entry(r.instance_name.clone()).or_insert(f64::NEG_INFINITY);
        *e = e.max(r.solution.objective);
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupBy {
    Class,
    Tasks,
    Ratio,
    Pattern,
}

impl GroupBy {
    pub fn parse(s: &str) -> Option<GroupBy> {
        match s.to_ascii_lowercase().as_str() {
            "class" => Some(GroupBy::Class),
            "tasks" => Some(GroupBy::Tasks),
            "ratio" => Some(GroupBy::Ratio),
            "pattern" => Some(GroupBy::Pattern),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityRow {
    pub group: String,
    pub offers: usize,
    pub mean_acceptance: f64,
    pub mean_compensation: f64,
    pub mean_bundle_size: f64,
    pub mean_detour: f64,
}

pub const SENSITIVITY_HEADER: &str = "group\toffers\tmean_acceptance\tmean_compensation\tmean_bundle_size\tmean_detour";

impl SensitivityRow {
    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.group, self.offers, self.mean_acceptance, self.mean_compensation, self.mean_bundle_size, self.mean_detour
        )
    }
}

/// Means of per-offer metrics grouped as requested. Groups without offers
/// do not appear.
pub fn sensitivity_summary(runs: &[(&Instance, &Solution)], group_by: GroupBy) -> Vec<SensitivityRow> {
    let mut acc: BTreeMap<String, [f64; 5]> = BTreeMap::new();
    for (inst, sol) in runs {
        for o in &sol.offers {
            let key = match group_by {
                GroupBy::Class => inst
                    .driver_by_id(o.driver_id)
                    .and_then(|w| w.class_tag)
                    .map_or_else(|| String::from("?"), |c| format!("class{c}")),
                GroupBy::Tasks => format!("{}", inst.tasks().len()),
                GroupBy::Ratio => {
                    format!("{:.1}", inst.drivers().len() as f64 / inst.tasks().len().max(1) as f64)
                }
                GroupBy::Pattern => parse_instance_name(inst.name())
                    .map(|(_, p, _, _)| p.to_string())
                    .unwrap_or_else(|_| String::from("?")),
            };
            let a = acc.entry(key).or_insert([0.0; 5]);
            a[0] += 1.0;
            a[1] += o.acceptance_probability;
            a[2] += o.compensation;
            a[3] += o.bundle.task_order.len() as f64;
            a[4] += o.detour;
        }
    }
    acc.into_iter()
        .map(|(group, a)| SensitivityRow {
            group,
            offers: a[0] as usize,
            mean_acceptance: a[1] / a[0],
            mean_compensation: a[2] / a[0],
            mean_bundle_size: a[3] / a[0],
            mean_detour: a[4] / a[0],
        })
        .collect()
}
