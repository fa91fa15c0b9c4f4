//! Labeling algorithm for the pricing subproblem.
//!
//! A label is a partial route `origin → depot → t1 → … → tℓ` of one driver
//! together with the tasks that can still be appended. Labels are extended
//! one task at a time from a max-reduced-cost queue. Three devices keep the
//! search small:
//!
//! * dominance between labels that end at the same task of the same depot,
//! * an upper bound on the reduced cost of every extension by `k` tasks,
//!   which prunes whole subtrees,
//! * a detour limit derived from the same bound, which removes successors
//!   whose first step already detours too far.
//!
//! In enumeration mode the search instead returns every column whose reduced
//! cost clears a floor, with dominance restricted to labels covering the same
//! task set.
//!
//! Tasks, depots and drivers are addressed by index here.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::clock::Budget;
use crate::geometry::{self, Point};
use crate::math;
use crate::model::{Bundle, DriverSpec, Instance, Offer};
use crate::probability::{self, lambert_w_of_exp, PredictorVector};
use crate::taskset::TaskSet;

/// Reduced costs above this count as positive.
pub const RC_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum PricingError {
    NotReachable(usize),
    NoExtension,
}

impl fmt::Display for PricingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PricingError::NotReachable(t) => write!(f, "task index {t} is not reachable from the label"),
            PricingError::NoExtension => f.write_str("label has no reachable task"),
        }
    }
}

/// Dual prices of the task and driver rows, by index.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPrices {
    pub task: Vec<f64>,
    pub driver: Vec<f64>,
}

impl DualPrices {
    pub fn zero(instance: &Instance) -> Self {
        DualPrices { task: vec![0.0; instance.tasks().len()], driver: vec![0.0; instance.drivers().len()] }
    }

    /// Negative entries (LP round-off) are clamped to zero.
    pub fn new(mut task: Vec<f64>, mut driver: Vec<f64>) -> Self {
        for v in task.iter_mut().chain(driver.iter_mut()) {
            if !(*v > 0.0) {
                *v = 0.0;
            }
        }
        DualPrices { task, driver }
    }
}

#[derive(Clone, Debug)]
pub struct PricingConfig {
    pub use_dominance: bool,
    pub use_rc_pruning: bool,
    pub use_detour_limit: bool,
    pub column_limit_per_driver: usize,
    pub enumeration_mode: bool,
    /// Reduced-cost floor of enumeration mode.
    pub enumeration_threshold: f64,
    /// Only these tasks may be bundled (corridor restriction).
    pub restrict_tasks: Option<TaskSet>,
    /// Abort the search (marking it incomplete) after this many labels.
    pub label_limit: Option<usize>,
}

impl Default for PricingConfig {
    fn default() -> Self {
        PricingConfig {
            use_dominance: true,
            use_rc_pruning: true,
            use_detour_limit: true,
            column_limit_per_driver: 100,
            enumeration_mode: false,
            enumeration_threshold: 0.0,
            restrict_tasks: None,
            label_limit: None,
        }
    }
}

impl PricingConfig {
    /// Everything off: the search visits every feasible ordered bundle.
    pub fn exhaustive() -> Self {
        PricingConfig {
            use_dominance: false,
            use_rc_pruning: false,
            use_detour_limit: false,
            column_limit_per_driver: usize::MAX,
            ..Default::default()
        }
    }

    fn floor(&self) -> Floor {
        if self.enumeration_mode {
            Floor { value: self.enumeration_threshold, inclusive: true }
        } else {
            Floor { value: 0.0, inclusive: false }
        }
    }
}

/// The reduced cost an extension must reach to matter: strictly above 0 in
/// standard mode, at least the threshold in enumeration mode.
#[derive(Clone, Copy, Debug)]
struct Floor {
    value: f64,
    inclusive: bool,
}

impl Floor {
    fn standard() -> Self {
        Floor { value: 0.0, inclusive: false }
    }

    /// True when a bound of `v` rules out every extension.
    fn excludes(&self, v: f64) -> bool {
        if self.inclusive {
            v < self.value
        } else {
            v <= self.value
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Label {
    pub driver: usize,
    pub depot: usize,
    pub tasks: Vec<usize>,
    pub used_capacity: f64,
    /// Detour includes the depot leg.
    pub predictors: PredictorVector,
    pub outsource_total: f64,
    pub reachable: TaskSet,
    pub dual_task_sum: f64,
    pub reduced_cost: f64,
}

impl Label {
    fn location(&self, instance: &Instance) -> Point {
        match self.tasks.last() {
            Some(&t) => instance.tasks()[t].location,
            None => instance.depots()[self.depot].location,
        }
    }

    /// `B·X + γC̄`, the label-dependent part of the pricing exponent.
    fn score(&self, instance: &Instance) -> f64 {
        let b = &instance.drivers()[self.driver].behavior;
        b.bundle_term(&self.predictors) + b.compensation_coeff * self.outsource_total
    }

    fn task_set(&self, universe: usize) -> TaskSet {
        TaskSet::from_indices(universe, self.tasks.iter().copied())
    }
}

/// A priced (driver, bundle) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub driver_id: u32,
    pub bundle: Bundle,
    pub compensation: f64,
    pub acceptance_probability: f64,
    pub expected_savings: f64,
    pub detour: f64,
    pub reduced_cost_at_generation: f64,
    pub driver_index: usize,
    pub task_indices: Vec<usize>,
}

impl Column {
    /// Prices a bundle given by indices; `None` for a worthless offer.
    pub fn price(instance: &Instance, driver: usize, depot: usize, tasks: &[usize], reduced_cost: f64) -> Option<Column> {
        let x = instance.predictors(driver, depot, tasks);
        let cbar: f64 = tasks.iter().map(|&t| instance.tasks()[t].outsource_cost).sum();
        Self::from_parts(instance, driver, depot, tasks, &x, cbar, reduced_cost)
    }

    fn from_parts(
        instance: &Instance,
        driver: usize,
        depot: usize,
        tasks: &[usize],
        x: &PredictorVector,
        cbar: f64,
        reduced_cost: f64,
    ) -> Option<Column> {
        let w = &instance.drivers()[driver];
        let v = probability::price_offer(&w.behavior, x, cbar)?;
        Some(Column {
            driver_id: w.id,
            bundle: Bundle::new(instance.depots()[depot].id, tasks.iter().map(|&t| instance.tasks()[t].id).collect()),
            compensation: v.compensation,
            acceptance_probability: v.acceptance_probability,
            expected_savings: v.expected_savings,
            detour: x.detour,
            reduced_cost_at_generation: reduced_cost,
            driver_index: driver,
            task_indices: tasks.to_vec(),
        })
    }

    pub fn to_offer(&self) -> Offer {
        Offer {
            driver_id: self.driver_id,
            bundle: self.bundle.clone(),
            compensation: self.compensation,
            acceptance_probability: self.acceptance_probability,
            expected_savings: self.expected_savings,
            detour: self.detour,
        }
    }

    pub fn load(&self, instance: &Instance) -> f64 {
        self.task_indices.iter().map(|&t| instance.tasks()[t].load).sum()
    }
}

fn capacity_filter(instance: &Instance, reachable: &mut TaskSet, used: f64, capacity: f64) {
    reachable.retain(|t| used + instance.tasks()[t].load <= capacity);
}

fn compute_rc(instance: &Instance, driver: usize, x: &PredictorVector, cbar: f64, pi: f64, mu: f64) -> f64 {
    probability::reduced_cost(&instance.drivers()[driver].behavior, x, cbar, pi, mu)
}

/// One empty label per depot.
pub fn init_labels(instance: &Instance, driver: usize, duals: &DualPrices, config: &PricingConfig) -> Vec<Label> {
    let w = &instance.drivers()[driver];
    let mu = duals.driver[driver];
    instance
        .depots()
        .iter()
        .enumerate()
        .map(|(d, depot)| {
            let mut reachable = instance.depot_mask(d).clone();
            if let Some(r) = &config.restrict_tasks {
                reachable.intersect_with(r);
            }
            capacity_filter(instance, &mut reachable, 0.0, w.capacity);
            let predictors = PredictorVector {
                detour: geometry::initial_detour(w, depot),
                bundle_size: 0.0,
                extras: instance.extra_predictors().iter().map(|p| p.initial()).collect(),
            };
            let reduced_cost = compute_rc(instance, driver, &predictors, 0.0, 0.0, mu);
            Label {
                driver,
                depot: d,
                tasks: Vec::new(),
                used_capacity: 0.0,
                predictors,
                outsource_total: 0.0,
                reachable,
                dual_task_sum: 0.0,
                reduced_cost,
            }
        })
        .collect()
}

fn extend_with(instance: &Instance, label: &Label, task: usize, increment: f64, duals: &DualPrices) -> Label {
    let w = &instance.drivers()[label.driver];
    let spec = &instance.tasks()[task];
    let mut predictors = label.predictors.clone();
    predictors.detour += increment;
    predictors.bundle_size += 1.0;
    for (x, p) in predictors.extras.iter_mut().zip(instance.extra_predictors()) {
        *x += p.increment(spec);
    }
    let used_capacity = label.used_capacity + spec.load;
    let mut reachable = label.reachable.clone();
    reachable.remove(task);
    capacity_filter(instance, &mut reachable, used_capacity, w.capacity);
    let outsource_total = label.outsource_total + spec.outsource_cost;
    let dual_task_sum = label.dual_task_sum + duals.task[task];
    let reduced_cost =
        compute_rc(instance, label.driver, &predictors, outsource_total, dual_task_sum, duals.driver[label.driver]);
    let mut tasks = Vec::with_capacity(label.tasks.len() + 1);
    tasks.extend_from_slice(&label.tasks);
    tasks.push(task);
    Label {
        driver: label.driver,
        depot: label.depot,
        tasks,
        used_capacity,
        predictors,
        outsource_total,
        reachable,
        dual_task_sum,
        reduced_cost,
    }
}

/// Appends `task` to the label.
pub fn extend(instance: &Instance, label: &Label, task: usize, duals: &DualPrices) -> Result<Label, PricingError> {
    if !label.reachable.contains(task) {
        return Err(PricingError::NotReachable(task));
    }
    let w = &instance.drivers()[label.driver];
    let inc = geometry::detour_increment(label.location(instance), instance.tasks()[task].location, w);
    Ok(extend_with(instance, label, task, inc, duals))
}

/// Dominance between labels of one driver ending at the same task of the
/// same depot: every extension of `lf` is matched by an extension of `lp`
/// with at least its reduced cost.
pub fn dominates(instance: &Instance, lp: &Label, lf: &Label) -> bool {
    dominates_scored(lp.score(instance), lp, lf.score(instance), lf)
}

fn dominates_scored(sp: f64, lp: &Label, sf: f64, lf: &Label) -> bool {
    sp >= sf
        && lp.dual_task_sum <= lf.dual_task_sum
        && lp.used_capacity <= lf.used_capacity
        && lp.reachable.is_superset(&lf.reachable)
}

/// Dominance between two orderings of the same task set.
pub fn route_dominates(lp: &Label, lf: &Label) -> bool {
    lp.reduced_cost > lf.reduced_cost && lp.reachable.is_superset(&lf.reachable)
}

/// Greedy bound on how many reachable tasks still fit.
pub fn k_max(instance: &Instance, label: &Label) -> usize {
    k_max_in_order(instance, label, &tasks_by_load(instance))
}

fn tasks_by_load(instance: &Instance) -> Vec<usize> {
    let mut order: Vec<usize> = (0..instance.tasks().len()).collect();
    order.sort_by(|&a, &b| instance.tasks()[a].load.total_cmp(&instance.tasks()[b].load).then(a.cmp(&b)));
    order
}

fn k_max_in_order(instance: &Instance, label: &Label, by_load: &[usize]) -> usize {
    let cap = instance.drivers()[label.driver].capacity;
    let mut used = label.used_capacity;
    let mut k = 0;
    for &t in by_load.iter().filter(|&&t| label.reachable.contains(t)) {
        let q = instance.tasks()[t].load;
        if used + q > cap {
            break;
        }
        used += q;
        k += 1;
    }
    k
}

/// Detour increments of one driver, precomputed for the bounds.
struct DriverView<'a> {
    instance: &'a Instance,
    driver: &'a DriverSpec,
    n: usize,
    /// `from_task[s * n + t]`
    from_task: Vec<f64>,
    /// For each target `t`, the sources `s ≠ t` in ascending increment order.
    sources_by_increment: Vec<Vec<u32>>,
    by_load: Vec<usize>,
    /// Descending outsourcing cost, so the maximum over a set is the first
    /// member found.
    by_cost: Vec<usize>,
    /// Ascending task dual.
    by_dual: Vec<usize>,
}

impl<'a> DriverView<'a> {
    fn new(instance: &'a Instance, driver: usize, duals: &DualPrices, with_bounds: bool) -> Self {
        let w = &instance.drivers()[driver];
        let n = instance.tasks().len();
        let mut from_task = Vec::new();
        let mut sources_by_increment = Vec::new();
        if with_bounds {
            from_task = vec![0.0; n * n];
            let tasks = instance.tasks();
            for s in 0..n {
                for t in 0..n {
                    if s != t {
                        from_task[s * n + t] = geometry::detour_increment(tasks[s].location, tasks[t].location, w);
                    }
                }
            }
            sources_by_increment = (0..n)
                .map(|t| {
                    let mut v: Vec<u32> = (0..n as u32).filter(|&s| s as usize != t).collect();
                    v.sort_by(|&a, &b| {
                        from_task[a as usize * n + t].total_cmp(&from_task[b as usize * n + t]).then(a.cmp(&b))
                    });
                    v
                })
                .collect();
        }
        let mut by_cost: Vec<usize> = (0..n).collect();
        by_cost.sort_by(|&a, &b| instance.tasks()[b].outsource_cost.total_cmp(&instance.tasks()[a].outsource_cost));
        let mut by_dual: Vec<usize> = (0..n).collect();
        by_dual.sort_by(|&a, &b| duals.task[a].total_cmp(&duals.task[b]));
        DriverView { instance, driver: w, n, from_task, sources_by_increment, by_load: tasks_by_load(instance), by_cost, by_dual }
    }

    fn increment(&self, label: &Label, t: usize) -> f64 {
        match label.tasks.last() {
            Some(&s) if !self.from_task.is_empty() => self.from_task[s * self.n + t],
            _ => geometry::detour_increment(label.location(self.instance), self.instance.tasks()[t].location, self.driver),
        }
    }

    /// Smallest detour increment over sources in `{last} ∪ R` and targets in
    /// `R`.
    fn min_increment(&self, label: &Label) -> f64 {
        let mut best = f64::INFINITY;
        for t in label.reachable.iter() {
            best = best.min(self.increment(label, t));
        }
        if best <= 0.0 {
            return best.max(0.0);
        }
        for t in label.reachable.iter() {
            if self.sources_by_increment.is_empty() {
                for s in label.reachable.iter().filter(|&s| s != t) {
                    let inc = geometry::detour_increment(
                        self.instance.tasks()[s].location,
                        self.instance.tasks()[t].location,
                        self.driver,
                    );
                    best = best.min(inc);
                }
            } else if let Some(&s) =
                self.sources_by_increment[t].iter().find(|&&s| label.reachable.contains(s as usize))
            {
                best = best.min(self.from_task[s as usize * self.n + t]);
            }
            if best <= 0.0 {
                return 0.0;
            }
        }
        best
    }
}

/// Extrema over the reachable set that the bounds are built from.
struct Extrema {
    k_max: usize,
    max_outsource_cost: f64,
    min_task_dual: f64,
    /// Per extra predictor, the increment bound matching its coefficient sign.
    extra_increment: Vec<f64>,
}

impl Extrema {
    fn compute(view: &DriverView<'_>, label: &Label, duals: &DualPrices) -> Option<Extrema> {
        if label.reachable.is_empty() {
            return None;
        }
        let inst = view.instance;
        let first = |order: &[usize]| *order.iter().find(|&&t| label.reachable.contains(t)).expect("non-empty");
        let cmax = inst.tasks()[first(&view.by_cost)].outsource_cost;
        let pimin = duals.task[first(&view.by_dual)];
        let coeffs = &view.driver.behavior.extra_bundle_coeffs;
        let extra_increment = inst
            .extra_predictors()
            .iter()
            .zip(coeffs)
            .map(|(p, &b)| {
                let incs = label.reachable.iter().map(|t| p.increment(&inst.tasks()[t]));
                if b >= 0.0 {
                    incs.fold(f64::NEG_INFINITY, f64::max)
                } else {
                    incs.fold(f64::INFINITY, f64::min)
                }
            })
            .collect();
        Some(Extrema {
            k_max: k_max_in_order(inst, label, &view.by_load),
            max_outsource_cost: cmax,
            min_task_dual: pimin,
            extra_increment,
        })
    }

    /// Pricing exponent of the optimistic `k`-extension, without the detour
    /// term.
    fn exponent_without_detour(&self, view: &DriverView<'_>, label: &Label, k: usize) -> f64 {
        let b = &view.driver.behavior;
        let kf = k as f64;
        let extras: f64 = b
            .extra_bundle_coeffs
            .iter()
            .zip(&label.predictors.extras)
            .zip(&self.extra_increment)
            .map(|((c, x), u)| c * (x + kf * u))
            .sum();
        b.intercept
            + b.size_coeff * (label.predictors.bundle_size + kf)
            + extras
            + b.driver_term()
            + b.compensation_coeff * (label.outsource_total + kf * self.max_outsource_cost)
            - 1.0
    }

    fn pi_hat(&self, label: &Label, k: usize) -> f64 {
        label.dual_task_sum + k as f64 * self.min_task_dual
    }

    /// `min_increment` is a lower bound on every detour increment of an
    /// extension ([`DriverView::min_increment`]).
    fn rc_bound(&self, view: &DriverView<'_>, label: &Label, duals: &DualPrices, k: usize, min_increment: f64) -> f64 {
        let b = &view.driver.behavior;
        let detour = label.predictors.detour + k as f64 * min_increment;
        let z = self.exponent_without_detour(view, label, k) + b.detour_coeff * detour;
        lambert_w_of_exp(z) / b.compensation_coeff - self.pi_hat(label, k) - duals.driver[label.driver]
    }

    fn detour_bound(&self, view: &DriverView<'_>, label: &Label, duals: &DualPrices, k: usize, floor: f64) -> f64 {
        let b = &view.driver.behavior;
        let eta = b.compensation_coeff * (self.pi_hat(label, k) + duals.driver[label.driver] + floor);
        if !(eta > 0.0) || b.detour_coeff == 0.0 {
            return f64::INFINITY;
        }
        (math::ln(eta) + eta - self.exponent_without_detour(view, label, k)) / b.detour_coeff
    }

    fn max_detour_bound(&self, view: &DriverView<'_>, label: &Label, duals: &DualPrices, floor: f64) -> f64 {
        (1..=self.k_max).map(|k| self.detour_bound(view, label, duals, k, floor)).fold(f64::NEG_INFINITY, f64::max)
    }

    fn prunable(&self, view: &DriverView<'_>, label: &Label, duals: &DualPrices, floor: Floor) -> bool {
        // the increment scan is the expensive part, so it is done only here
        let m = view.min_increment(label);
        (1..=self.k_max).all(|k| floor.excludes(self.rc_bound(view, label, duals, k, m)))
    }
}

/// Upper bound on the reduced cost of any extension by exactly `k` tasks.
pub fn rc_upper_bound(instance: &Instance, label: &Label, duals: &DualPrices, k: usize) -> Result<f64, PricingError> {
    let view = DriverView::new(instance, label.driver, duals, false);
    let ex = Extrema::compute(&view, label, duals).ok_or(PricingError::NoExtension)?;
    Ok(ex.rc_bound(&view, label, duals, k, view.min_increment(label)))
}

/// True when no extension of the label can have positive reduced cost.
pub fn can_prune(instance: &Instance, label: &Label, duals: &DualPrices) -> bool {
    let view = DriverView::new(instance, label.driver, duals, false);
    match Extrema::compute(&view, label, duals) {
        None => true,
        Some(ex) => ex.k_max == 0 || ex.prunable(&view, label, duals, Floor::standard()),
    }
}

/// Largest total detour at which an extension by `k` tasks can still have a
/// non-negative reduced cost; `+∞` when the duals impose no limit.
pub fn detour_bound(instance: &Instance, label: &Label, duals: &DualPrices, k: usize) -> f64 {
    let view = DriverView::new(instance, label.driver, duals, false);
    match Extrema::compute(&view, label, duals) {
        None => f64::INFINITY,
        Some(ex) => ex.detour_bound(&view, label, duals, k, 0.0),
    }
}

/// Returns the extrema of the trimmed label when trimming left it unchanged.
fn trim_with(view: &DriverView<'_>, label: &mut Label, duals: &DualPrices, floor: Floor) -> Option<Extrema> {
    let ex = Extrema::compute(view, label, duals)?;
    let limit = ex.max_detour_bound(view, label, duals, floor.value);
    if limit == f64::INFINITY {
        return Some(ex);
    }
    let before = label.reachable.len();
    let mut reachable = core::mem::take(&mut label.reachable);
    reachable.retain(|t| {
        let d = label.predictors.detour + view.increment(label, t);
        // at exactly the limit the bound equals the floor, which still
        // counts in enumeration mode
        if floor.inclusive {
            d <= limit
        } else {
            d < limit
        }
    });
    let unchanged = reachable.len() == before;
    label.reachable = reachable;
    unchanged.then_some(ex)
}

/// Drops successors whose first step already exceeds the detour limit.
pub fn trim_successors(instance: &Instance, label: &Label, duals: &DualPrices) -> Label {
    let view = DriverView::new(instance, label.driver, duals, false);
    let mut out = label.clone();
    trim_with(&view, &mut out, duals, Floor::standard());
    out
}

#[derive(Clone, Debug, Default)]
pub struct PricingOutcome {
    pub columns: Vec<Column>,
    pub labels_created: usize,
    /// False when the search stopped on the budget or the label limit.
    pub complete: bool,
}

#[derive(PartialEq)]
struct QueueEntry {
    rc: f64,
    id: usize,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rc.total_cmp(&other.rc).then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Search<'a> {
    view: DriverView<'a>,
    duals: &'a DualPrices,
    config: &'a PricingConfig,
    floor: Floor,
    labels: Vec<Label>,
    alive: Vec<bool>,
    /// `Label::score` per label, kept for dominance checks.
    scores: Vec<f64>,
    queue: BinaryHeap<QueueEntry>,
    buckets: BTreeMap<(usize, usize), Vec<usize>>,
    route_buckets: BTreeMap<(usize, usize, TaskSet), Vec<usize>>,
    columns: Vec<Column>,
    best_by_set: BTreeMap<TaskSet, usize>,
    done: bool,
}

impl<'a> Search<'a> {
    /// Trims, filters by dominance, emits and queues a fresh label.
    fn admit(&mut self, mut label: Label) {
        let inst = self.view.instance;
        let mut extrema = None;
        if self.config.use_detour_limit {
            extrema = trim_with(&self.view, &mut label, self.duals, self.floor);
        }
        let id = self.labels.len();
        let score = label.score(inst);
        if let Some(&last) = label.tasks.last() {
            if self.config.enumeration_mode {
                let key = (label.depot, last, label.task_set(inst.tasks().len()));
                let bucket = self.route_buckets.entry(key).or_default();
                if bucket.iter().any(|&o| route_dominates(&self.labels[o], &label)) {
                    return;
                }
                bucket.retain(|&o| {
                    let dominated = route_dominates(&label, &self.labels[o]);
                    if dominated {
                        self.alive[o] = false;
                    }
                    !dominated
                });
                bucket.push(id);
            } else if self.config.use_dominance {
                let bucket = self.buckets.entry((label.depot, last)).or_default();
                let (labels, scores) = (&self.labels, &self.scores);
                if bucket.iter().any(|&o| dominates_scored(scores[o], &labels[o], score, &label)) {
                    return;
                }
                bucket.retain(|&o| {
                    let dominated = dominates_scored(score, &label, scores[o], &labels[o]);
                    if dominated {
                        self.alive[o] = false;
                    }
                    !dominated
                });
                bucket.push(id);
            }
            self.emit(&label);
        }
        let extendable = !label.reachable.is_empty()
            && !(self.config.use_rc_pruning
                && extrema
                    .or_else(|| Extrema::compute(&self.view, &label, self.duals))
                    .map_or(true, |ex| ex.k_max == 0 || ex.prunable(&self.view, &label, self.duals, self.floor)));
        if extendable {
            self.queue.push(QueueEntry { rc: label.reduced_cost, id });
        }
        self.labels.push(label);
        self.alive.push(true);
        self.scores.push(score);
    }

    fn emit(&mut self, label: &Label) {
        let inst = self.view.instance;
        let wanted = if self.config.enumeration_mode {
            label.reduced_cost >= self.config.enumeration_threshold
        } else {
            label.reduced_cost > RC_TOL
        };
        if !wanted {
            return;
        }
        let Some(col) = Column::from_parts(
            inst,
            label.driver,
            label.depot,
            &label.tasks,
            &label.predictors,
            label.outsource_total,
            label.reduced_cost,
        ) else {
            return;
        };
        if self.config.enumeration_mode {
            // one ordering per task set: the best one
            let set = label.task_set(inst.tasks().len());
            match self.best_by_set.get(&set) {
                Some(&i) => {
                    if col.reduced_cost_at_generation > self.columns[i].reduced_cost_at_generation {
                        self.columns[i] = col;
                    }
                }
                None => {
                    self.best_by_set.insert(set, self.columns.len());
                    self.columns.push(col);
                }
            }
        } else {
            self.columns.push(col);
            if self.columns.len() >= self.config.column_limit_per_driver {
                self.done = true;
            }
        }
    }
}

/// Runs the labeling search for one driver.
pub fn price_driver(
    instance: &Instance,
    driver: usize,
    duals: &DualPrices,
    config: &PricingConfig,
    budget: &dyn Budget,
) -> PricingOutcome {
    let with_bounds = config.use_rc_pruning || config.use_detour_limit;
    let mut s = Search {
        view: DriverView::new(instance, driver, duals, with_bounds),
        duals,
        config,
        floor: config.floor(),
        labels: Vec::new(),
        alive: Vec::new(),
        scores: Vec::new(),
        queue: BinaryHeap::new(),
        buckets: BTreeMap::new(),
        route_buckets: BTreeMap::new(),
        columns: Vec::new(),
        best_by_set: BTreeMap::new(),
        done: false,
    };
    for label in init_labels(instance, driver, duals, config) {
        s.admit(label);
    }
    let mut complete = true;
    'search: while let Some(QueueEntry { id, .. }) = s.queue.pop() {
        if s.done {
            break;
        }
        if !s.alive[id] {
            continue;
        }
        let successors: Vec<usize> = s.labels[id].reachable.iter().collect();
        for t in successors {
            let parent = &s.labels[id];
            let child = extend_with(instance, parent, t, s.view.increment(parent, t), duals);
            s.admit(child);
            if s.done {
                break 'search;
            }
            let created = s.labels.len();
            if config.label_limit.is_some_and(|l| created >= l) || (created % 1024 == 0 && budget.exhausted()) {
                complete = false;
                break 'search;
            }
        }
    }
    PricingOutcome { columns: s.columns, labels_created: s.labels.len(), complete }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::Unlimited;
    use crate::model::{DepotSpec, TaskSpec};
    use crate::probability::BehaviorCoefficients;

    fn line_instance() -> Instance {
        let tasks = vec![
            TaskSpec::new(0, Point::new(1.0, 0.0), 10.0, 4.95),
            TaskSpec::new(1, Point::new(2.0, 0.0), 10.0, 4.95),
            TaskSpec::new(2, Point::new(3.0, 1.0), 30.0, 4.95),
        ];
        let depots = vec![DepotSpec::new(0, Point::new(0.0, 0.0), [0, 1, 2])];
        let drivers = vec![DriverSpec::new(
            0,
            Point::new(0.0, 0.0),
            Point::new(4.0, 0.0),
            45.0,
            BehaviorCoefficients::class(3).unwrap(),
        )];
        Instance::new("line", None, tasks, depots, drivers).unwrap()
    }

    #[test]
    fn init_and_extend() {
        let inst = line_instance();
        let mut duals = DualPrices::zero(&inst);
        duals.driver[0] = 0.5;
        let labels = init_labels(&inst, 0, &duals, &PricingConfig::default());
        assert_eq!(labels.len(), 1);
        let root = &labels[0];
        assert!((root.reduced_cost - (compute_rc(&inst, 0, &root.predictors, 0.0, 0.0, 0.5))).abs() < 1e-15);
        assert_eq!(root.predictors.detour, 0.0);

        let a = extend(&inst, root, 0, &duals).unwrap();
        assert_eq!(a.predictors.detour, 0.0);
        let b = extend(&inst, &a, 1, &duals).unwrap();
        assert_eq!(b.predictors.detour, 0.0);
        // 20 used, 30 more would exceed 45
        assert!(b.reachable.is_empty());
        assert!(extend(&inst, &b, 2, &duals).is_err());
        let x = inst.predictors(0, 0, &[0, 1]);
        let rc = compute_rc(&inst, 0, &x, 9.9, 0.0, 0.5);
        assert!((b.reduced_cost - rc).abs() < 1e-12);
    }

    #[test]
    fn restrict_to_nothing() {
        let inst = line_instance();
        let cfg = PricingConfig { restrict_tasks: Some(TaskSet::empty(3)), ..Default::default() };
        let labels = init_labels(&inst, 0, &DualPrices::zero(&inst), &cfg);
        assert!(labels[0].reachable.is_empty());
        let out = price_driver(&inst, 0, &DualPrices::zero(&inst), &cfg, &Unlimited);
        assert!(out.columns.is_empty());
        assert!(out.complete);
    }

    #[test]
    fn k_max_greedy() {
        let tasks = vec![
            TaskSpec::new(0, Point::new(1.0, 0.0), 10.0, 4.95),
            TaskSpec::new(1, Point::new(2.0, 0.0), 10.0, 4.95),
            TaskSpec::new(2, Point::new(3.0, 0.0), 30.0, 4.95),
            TaskSpec::new(3, Point::new(3.0, 1.0), 75.0, 4.95),
        ];
        let depots = vec![DepotSpec::new(0, Point::new(0.0, 0.0), [0, 1, 2, 3])];
        let drivers = vec![DriverSpec::new(
            0,
            Point::new(0.0, 0.0),
            Point::new(4.0, 0.0),
            100.0,
            BehaviorCoefficients::class(1).unwrap(),
        )];
        let inst = Instance::new("k", None, tasks, depots, drivers).unwrap();
        let duals = DualPrices::zero(&inst);
        let root = init_labels(&inst, 0, &duals, &PricingConfig::default()).remove(0);
        let l = extend(&inst, &root, 3, &duals).unwrap();
        // remaining capacity 25, loads {10, 10} reachable (30 is dropped)
        assert_eq!(k_max(&inst, &l), 2);
        let mut full = root.clone();
        full.reachable = TaskSet::from_indices(4, [0, 1, 2]);
        full.used_capacity = 75.0;
        assert_eq!(k_max(&inst, &full), 2);
        full.reachable = TaskSet::empty(4);
        assert_eq!(k_max(&inst, &full), 0);
    }

    #[test]
    fn single_reachable_bound_is_exact() {
        let inst = line_instance();
        let duals = DualPrices::zero(&inst);
        let root = init_labels(&inst, 0, &duals, &PricingConfig::default()).remove(0);
        let mut one = extend(&inst, &root, 0, &duals).unwrap();
        one.reachable = TaskSet::from_indices(3, [1]);
        let bound = rc_upper_bound(&inst, &one, &duals, 1).unwrap();
        let exact = extend(&inst, &one, 1, &duals).unwrap().reduced_cost;
        assert!((bound - exact).abs() < 1e-12);
        one.reachable = TaskSet::empty(3);
        assert_eq!(rc_upper_bound(&inst, &one, &duals, 1), Err(PricingError::NoExtension));
    }

    #[test]
    fn huge_duals_prune() {
        let inst = line_instance();
        let mut duals = DualPrices::zero(&inst);
        let root = init_labels(&inst, 0, &duals, &PricingConfig::default()).remove(0);
        assert!(!can_prune(&inst, &root, &duals));
        assert_eq!(detour_bound(&inst, &root, &duals, 1), f64::INFINITY);
        assert_eq!(trim_successors(&inst, &root, &duals), root);
        duals.task = vec![100.0; 3];
        let root = init_labels(&inst, 0, &duals, &PricingConfig::default()).remove(0);
        assert!(can_prune(&inst, &root, &duals));
        assert!(trim_successors(&inst, &root, &duals).reachable.is_empty());
    }

    #[test]
    fn detour_bound_vanishes() {
        // choose μ so that π̂ + μ = 1/γ and the remaining numerator is zero
        let inst = line_instance();
        let mut duals = DualPrices::zero(&inst);
        let b = &inst.drivers()[0].behavior;
        duals.driver[0] = 1.0 / b.compensation_coeff;
        let mut root = init_labels(&inst, 0, &duals, &PricingConfig::default()).remove(0);
        root.reachable = TaskSet::from_indices(3, [0]);
        // γ(1/γ − Ĉ) − α − β₂·1 + 1 = 0  ⇔  Ĉ = (2 − α − β₂)/γ
        let c_hat = (2.0 - b.intercept - b.size_coeff) / b.compensation_coeff;
        let tasks = vec![TaskSpec::new(0, Point::new(1.0, 0.0), 10.0, c_hat)];
        let depots = vec![DepotSpec::new(0, Point::new(0.0, 0.0), [0])];
        let inst2 = Instance::new("z", None, tasks, depots, inst.drivers().to_vec()).unwrap();
        let duals2 = DualPrices::new(vec![0.0], duals.driver.clone());
        let root2 = init_labels(&inst2, 0, &duals2, &PricingConfig::default()).remove(0);
        assert!(detour_bound(&inst2, &root2, &duals2, 1).abs() < 1e-12);
    }

    #[test]
    fn identical_labels_dominate_each_other() {
        let inst = line_instance();
        let duals = DualPrices::zero(&inst);
        let root = init_labels(&inst, 0, &duals, &PricingConfig::default()).remove(0);
        let a = extend(&inst, &root, 0, &duals).unwrap();
        let b = a.clone();
        assert!(dominates(&inst, &a, &b) && dominates(&inst, &b, &a));
        let mut c = a.clone();
        c.dual_task_sum += 1.0;
        assert!(dominates(&inst, &a, &c));
        assert!(!dominates(&inst, &c, &a));
        assert!(!route_dominates(&a, &b));
    }

    #[test]
    fn zero_duals_find_best_bundle() {
        let inst = line_instance();
        let duals = DualPrices::zero(&inst);
        let out = price_driver(&inst, 0, &duals, &PricingConfig::exhaustive(), &Unlimited);
        let best = out.columns.iter().map(|c| c.expected_savings).fold(f64::NEG_INFINITY, f64::max);
        let oracle = crate::oracle::all_columns(&inst).unwrap()[0]
            .iter()
            .map(|c| c.expected_savings)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((best - oracle).abs() < 1e-12);
        for cfg in [PricingConfig { column_limit_per_driver: usize::MAX, ..Default::default() }] {
            let out = price_driver(&inst, 0, &duals, &cfg, &Unlimited);
            let b = out.columns.iter().map(|c| c.expected_savings).fold(f64::NEG_INFINITY, f64::max);
            assert!((b - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn column_limit_stops_driver() {
        let inst = line_instance();
        let cfg = PricingConfig { column_limit_per_driver: 1, ..PricingConfig::exhaustive() };
        let out = price_driver(&inst, 0, &DualPrices::zero(&inst), &cfg, &Unlimited);
        assert_eq!(out.columns.len(), 1);
    }
}
