//! Column generation, the restricted MILP, enumeration and the solver
//! variants built from them.
//!
//! 1. Column generation over the set-packing relaxation gives an upper bound.
//! 2. The MILP over all generated columns gives a feasible solution.
//! 3. Optionally, every column whose reduced cost exceeds `LB − UB` is
//!    enumerated and the MILP re-solved, which proves optimality.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::clock::{Budget, Clock, Deadline, NoClock};
use crate::geometry;
use crate::lpsolve::{self, Disjunction, LinearProgram, MilpOptions, MilpStatus, Simplex};
use crate::model::{Instance, Solution, SolveStatus};
use crate::pricing::{self, Column, DualPrices, PricingConfig, PricingOutcome};
use crate::sequential;
use crate::taskset::TaskSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    HB,
    HD,
    HDD,
    HDDC,
    HC,
    EDD,
    EDDC,
    Seq,
}

impl Variant {
    pub const ALL: [Variant; 8] =
        [Variant::HB, Variant::HD, Variant::HDD, Variant::HDDC, Variant::HC, Variant::EDD, Variant::EDDC, Variant::Seq];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::HB => "H-B",
            Variant::HD => "H-D",
            Variant::HDD => "H-DD",
            Variant::HDDC => "H-DDC",
            Variant::HC => "H-C",
            Variant::EDD => "E-DD",
            Variant::EDDC => "E-DDC",
            Variant::Seq => "SEQ",
        }
    }

    /// Case-insensitive.
    pub fn parse(s: &str) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.name().eq_ignore_ascii_case(s))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Variant::EDD | Variant::EDDC)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariantConfig {
    pub variant: Variant,
    pub use_dominance: bool,
    /// Reduced-cost pruning goes together with the detour limit: both come
    /// from the same bound.
    pub use_rc_pruning: bool,
    pub use_detour_limit: bool,
    pub use_corridor_init: bool,
    pub do_enumeration: bool,
    pub theta_degrees: f64,
    pub column_limit: usize,
    /// Non-positive or infinite means no limit.
    pub time_limit_seconds: f64,
    pub rng_seed: u64,
    /// Enumeration stops (and the result is only heuristic) once the column
    /// pool would exceed this many columns.
    pub pool_cap: usize,
    /// Per-driver label cap of an enumeration search.
    pub enumeration_label_limit: usize,
}

impl VariantConfig {
    pub fn new(variant: Variant) -> Self {
        let (dom, detour, corridor, enumerate) = match variant {
            Variant::HB => (false, false, false, false),
            Variant::HD => (true, false, false, false),
            Variant::HDD => (true, true, false, false),
            Variant::HDDC | Variant::HC => (true, true, true, false),
            Variant::EDD => (true, true, false, true),
            Variant::EDDC => (true, true, true, true),
            Variant::Seq => (false, false, false, false),
        };
        VariantConfig {
            variant,
            use_dominance: dom,
            use_rc_pruning: detour,
            use_detour_limit: detour,
            use_corridor_init: corridor,
            do_enumeration: enumerate,
            theta_degrees: 36.0,
            column_limit: 100,
            time_limit_seconds: f64::INFINITY,
            rng_seed: 0,
            pool_cap: 2_000_000,
            enumeration_label_limit: 4_000_000,
        }
    }

    fn pricing(&self) -> PricingConfig {
        PricingConfig {
            use_dominance: self.use_dominance,
            use_rc_pruning: self.use_rc_pruning,
            use_detour_limit: self.use_detour_limit,
            column_limit_per_driver: self.column_limit.max(1),
            ..PricingConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub instance_name: String,
    pub variant: Variant,
    pub solution: Solution,
    /// Column-generation bound, present only after natural termination of an
    /// unrestricted column generation.
    pub upper_bound: Option<f64>,
    /// Objective of the returned solution.
    pub lower_bound: f64,
    /// Objective of the MILP over the column-generation pool, before any
    /// enumeration.
    pub lb_mip: Option<f64>,
    pub gap_h: Option<f64>,
    pub columns_generated: usize,
    pub enumerated_columns: usize,
    pub cg_iterations: usize,
    pub wall_time_seconds: f64,
    pub status: SolveStatus,
}

/// `(UB − LB)/UB`; absent when there is no bound or it is zero.
pub fn gap_h(upper: Option<f64>, lower: f64) -> Option<f64> {
    match upper {
        Some(u) if u > 0.0 => Some((u - lower) / u),
        _ => None,
    }
}

/// Runs per-driver pricing for all drivers. Results come back in driver
/// order whatever the execution strategy.
pub trait PricingExecutor: Sync {
    fn price_all(
        &self,
        instance: &Instance,
        duals: &DualPrices,
        configs: &[PricingConfig],
        budget: &dyn Budget,
    ) -> Vec<PricingOutcome>;
}

/// Prices the drivers one after another on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct SequentialExecutor;

impl PricingExecutor for SequentialExecutor {
    fn price_all(
        &self,
        instance: &Instance,
        duals: &DualPrices,
        configs: &[PricingConfig],
        budget: &dyn Budget,
    ) -> Vec<PricingOutcome> {
        configs.iter().enumerate().map(|(w, c)| pricing::price_driver(instance, w, duals, c, budget)).collect()
    }
}

/// Column pool plus the restricted master LP over it.
pub struct MasterProblem<'a> {
    instance: &'a Instance,
    columns: Vec<Column>,
    keys: BTreeSet<(usize, u32, Vec<usize>)>,
    lp: Simplex,
}

impl<'a> MasterProblem<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        let rows = instance.tasks().len() + instance.drivers().len();
        let lp = Simplex::new(&LinearProgram::new(rows, vec![1.0; rows]));
        MasterProblem { instance, columns: Vec::new(), keys: BTreeSet::new(), lp }
    }

    fn entries(&self, c: &Column) -> Vec<(usize, f64)> {
        let n = self.instance.tasks().len();
        let mut e: Vec<(usize, f64)> = c.task_indices.iter().map(|&t| (t, 1.0)).collect();
        e.push((n + c.driver_index, 1.0));
        e
    }

    /// Adds a column unless an identical one is pooled.
    pub fn add(&mut self, c: Column) -> bool {
        let key = (c.driver_index, c.bundle.depot_id, c.task_indices.clone());
        if !self.keys.insert(key) {
            return false;
        }
        let e = self.entries(&c);
        self.lp.add_column(c.expected_savings, &e, f64::INFINITY);
        self.columns.push(c);
        true
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    /// LP optimum and duals of the current pool.
    pub fn solve_lp(&mut self) -> (f64, DualPrices) {
        let r = self.lp.solve();
        debug_assert_eq!(r.status, lpsolve::LpStatus::Optimal);
        let n = self.instance.tasks().len();
        let duals = DualPrices::new(r.row_duals[..n].to_vec(), r.row_duals[n..].to_vec());
        (r.objective, duals)
    }

}

struct CgOutcome {
    objective: f64,
    duals: DualPrices,
    natural: bool,
    iterations: usize,
}

/// Column generation until no driver yields a new positive column, or the
/// budget runs out.
fn column_generation(
    master: &mut MasterProblem<'_>,
    base: &PricingConfig,
    restrict: Option<&[TaskSet]>,
    executor: &dyn PricingExecutor,
    deadline: &Deadline<'_>,
) -> CgOutcome {
    let inst = master.instance;
    let configs: Vec<PricingConfig> = (0..inst.drivers().len())
        .map(|w| PricingConfig { restrict_tasks: restrict.map(|r| r[w].clone()), ..base.clone() })
        .collect();
    let mut iterations = 0;
    loop {
        let (objective, duals) = master.solve_lp();
        if deadline.expired() {
            return CgOutcome { objective, duals, natural: false, iterations };
        }
        let outcomes = executor.price_all(inst, &duals, &configs, deadline);
        iterations += 1;
        let complete = outcomes.iter().all(|o| o.complete);
        let mut added = 0;
        for o in outcomes {
            for c in o.columns {
                if master.add(c) {
                    added += 1;
                }
            }
        }
        if !complete {
            return CgOutcome { objective, duals, natural: false, iterations };
        }
        if added == 0 {
            return CgOutcome { objective, duals, natural: true, iterations };
        }
    }
}

fn corridor_sets(instance: &Instance, theta: f64) -> Vec<TaskSet> {
    instance
        .drivers()
        .iter()
        .map(|w| {
            geometry::corridor_indices(instance, w, theta).unwrap_or_else(|_| TaskSet::empty(instance.tasks().len()))
        })
        .collect()
}

/// Result of the MILP over a column pool.
pub struct MilpOutcome {
    pub solution: Solution,
    pub bound: f64,
    pub hit_limit: bool,
    /// Pool indices of the selected columns.
    pub chosen: Vec<usize>,
}

/// Best selection of pooled columns.
pub fn milp_heuristic(instance: &Instance, columns: &[Column], budget: &dyn Budget) -> MilpOutcome {
    let mut master = MasterProblem::new(instance);
    for c in columns {
        master.add(c.clone());
    }
    solve_pool(&master, None, &[], budget)
}

/// MILP over the pooled columns with `keep[j]` set (all if `None`),
/// starting from the selection `start`.
fn solve_pool(master: &MasterProblem<'_>, keep: Option<&[bool]>, start: &[usize], budget: &dyn Budget) -> MilpOutcome {
    let rows = master.instance.tasks().len() + master.instance.drivers().len();
    let mut lp = LinearProgram::new(rows, vec![1.0; rows]);
    let mut index = Vec::new();
    for (j, c) in master.columns().iter().enumerate() {
        if keep.map_or(true, |k| k[j]) {
            lp.add_variable(c.expected_savings, 1.0, &master.entries(c));
            index.push(j);
        }
    }
    let mut y0 = vec![0.0; index.len()];
    for &j in start {
        if let Ok(k) = index.binary_search(&j) {
            y0[k] = 1.0;
        }
    }
    let binary = vec![true; lp.num_vars()];
    let disjunctions = driver_task_disjunctions(master, &index);
    let options = MilpOptions { start: (!start.is_empty()).then_some(&y0[..]), disjunctions: &disjunctions };
    let r = lpsolve::solve_milp_with(&lp, &binary, budget, &options).expect("pool program is well formed");
    let chosen: Vec<usize> = r.primal.iter().zip(&index).filter(|(&y, _)| y > 0.5).map(|(_, &j)| j).collect();
    let offers = chosen.iter().map(|&j| master.columns()[j].to_offer()).collect();
    let hit_limit = r.status == MilpStatus::Feasible;
    let status = if hit_limit { SolveStatus::TimeLimit } else { SolveStatus::Heuristic };
    MilpOutcome { solution: Solution::from_offers(offers, Some(r.bound), status), bound: r.bound, hit_limit, chosen }
}

/// Branching on "driver `w` serves task `t`": either no column of `w` with
/// `t` is used, or `t` goes to `w` and `w` takes no column without `t`.
/// `index` maps program variables to pool positions.
fn driver_task_disjunctions(master: &MasterProblem<'_>, index: &[usize]) -> Vec<Disjunction> {
    let inst = master.instance;
    let (n, m) = (inst.tasks().len(), inst.drivers().len());
    let mut by_driver = vec![Vec::new(); m];
    let mut by_task = vec![Vec::new(); n];
    for (k, &j) in index.iter().enumerate() {
        let c = &master.columns()[j];
        by_driver[c.driver_index].push(k);
        for &t in &c.task_indices {
            by_task[t].push(k);
        }
    }
    let mut out = Vec::new();
    for (w, own) in by_driver.iter().enumerate() {
        for (t, with_t) in by_task.iter().enumerate() {
            let covers = |k: usize| master.columns()[index[k]].task_indices.contains(&t);
            let left: Vec<usize> = own.iter().copied().filter(|&k| covers(k)).collect();
            if left.is_empty() {
                continue;
            }
            let mut right: Vec<usize> = with_t
                .iter()
                .copied()
                .filter(|&k| master.columns()[index[k]].driver_index != w)
                .chain(own.iter().copied().filter(|&k| !covers(k)))
                .collect();
            if right.is_empty() {
                continue;
            }
            right.sort_unstable();
            out.push(Disjunction { left, right });
        }
    }
    out
}

/// Runs variants with an injected clock and pricing executor.
pub struct Solver<'a> {
    clock: &'a dyn Clock,
    executor: &'a dyn PricingExecutor,
}

impl Default for Solver<'static> {
    fn default() -> Self {
        Solver { clock: &NoClock, executor: &SequentialExecutor }
    }
}

impl<'a> Solver<'a> {
    pub fn new(clock: &'a dyn Clock, executor: &'a dyn PricingExecutor) -> Self {
        Solver { clock, executor }
    }

    pub fn run(&self, instance: &Instance, config: &VariantConfig) -> RunReport {
        let limit = if config.time_limit_seconds > 0.0 { config.time_limit_seconds } else { f64::INFINITY };
        let deadline = Deadline::new(self.clock, limit);
        if config.variant == Variant::Seq {
            return sequential::sequential_baseline(instance, config, &deadline);
        }
        let base = config.pricing();
        let mut master = MasterProblem::new(instance);
        let mut timed_out = false;
        let mut iterations = 0;
        let mut upper_bound = None;
        let mut final_duals = DualPrices::zero(instance);

        if config.use_corridor_init || config.variant == Variant::HC {
            let sets = corridor_sets(instance, config.theta_degrees);
            let cg = column_generation(&mut master, &base, Some(&sets), self.executor, &deadline);
            iterations += cg.iterations;
            timed_out |= !cg.natural;
        }
        if config.variant != Variant::HC && !timed_out {
            let cg = column_generation(&mut master, &base, None, self.executor, &deadline);
            iterations += cg.iterations;
            if cg.natural {
                upper_bound = Some(cg.objective);
                final_duals = cg.duals;
            } else {
                timed_out = true;
            }
        }

        let step2 = solve_pool(&master, None, &[], &deadline);
        timed_out |= step2.hit_limit;
        let lb_mip = step2.solution.objective;
        let mut solution = step2.solution;
        let columns_generated = master.columns().len();
        let mut enumerated = 0;
        let mut status = if timed_out { SolveStatus::TimeLimit } else { SolveStatus::Heuristic };

        if config.do_enumeration && !timed_out {
            if let Some(ub) = upper_bound {
                let (outcome, count) = enumerate_and_reoptimize(
                    &mut master,
                    ub,
                    lb_mip,
                    &final_duals,
                    &step2.chosen,
                    config,
                    self.executor,
                    &deadline,
                );
                enumerated = count;
                status = outcome.status;
                solution = outcome.solution;
            }
        }
        solution.status = status;
        if status == SolveStatus::Optimal {
            solution.bound = Some(solution.objective);
        } else {
            solution.bound = upper_bound;
        }
        let lower_bound = solution.objective;
        RunReport {
            instance_name: String::from(instance.name()),
            variant: config.variant,
            gap_h: gap_h(upper_bound, if config.do_enumeration { lb_mip } else { lower_bound }),
            upper_bound,
            lower_bound,
            lb_mip: Some(lb_mip),
            solution,
            columns_generated,
            enumerated_columns: enumerated,
            cg_iterations: iterations,
            wall_time_seconds: deadline.elapsed(),
            status,
        }
    }
}

struct EnumerationOutcome {
    solution: Solution,
    status: SolveStatus,
}

/// Adds every column with reduced cost at least `LB − UB` and re-solves the
/// MILP over the enlarged pool.
fn enumerate_and_reoptimize(
    master: &mut MasterProblem<'_>,
    upper_bound: f64,
    lower_bound: f64,
    duals: &DualPrices,
    incumbent: &[usize],
    config: &VariantConfig,
    executor: &dyn PricingExecutor,
    deadline: &Deadline<'_>,
) -> (EnumerationOutcome, usize) {
    let mut added = 0;
    let mut lower_bound = lower_bound;
    let mut incumbent = incumbent.to_vec();
    // A cheaper pass over half the gap usually raises the lower bound, which
    // shrinks the full enumeration considerably.
    let half = 0.5 * (lower_bound - upper_bound);
    if half < -1e-6 {
        let (_, n) = enumerate_pass(master, half, duals, config, config.enumeration_label_limit / 4, executor, deadline);
        added += n;
        if !deadline.expired() {
            let milp = solve_pool(master, Some(&above_threshold(master, duals, half)), &incumbent, deadline);
            if milp.solution.objective > lower_bound {
                lower_bound = milp.solution.objective;
                incumbent = milp.chosen;
            }
        }
    }
    let threshold = lower_bound - upper_bound - 1e-9;
    let (complete, n) =
        enumerate_pass(master, threshold, duals, config, config.enumeration_label_limit, executor, deadline);
    added += n;
    let timed_out = deadline.expired();
    let milp = solve_pool(master, Some(&above_threshold(master, duals, threshold)), &incumbent, deadline);
    let status = if timed_out || milp.hit_limit {
        SolveStatus::TimeLimit
    } else if !complete {
        SolveStatus::Heuristic
    } else {
        SolveStatus::Optimal
    };
    (EnumerationOutcome { solution: milp.solution, status }, added)
}

/// Pools every column with reduced cost at least `threshold`. Returns whether
/// the enumeration was exhaustive and how many columns were new.
fn enumerate_pass(
    master: &mut MasterProblem<'_>,
    threshold: f64,
    duals: &DualPrices,
    config: &VariantConfig,
    label_limit: usize,
    executor: &dyn PricingExecutor,
    deadline: &Deadline<'_>,
) -> (bool, usize) {
    let inst = master.instance;
    let enum_config = PricingConfig {
        use_dominance: false,
        use_rc_pruning: true,
        use_detour_limit: true,
        column_limit_per_driver: usize::MAX,
        enumeration_mode: true,
        enumeration_threshold: threshold,
        restrict_tasks: None,
        label_limit: Some(label_limit),
    };
    let configs = vec![enum_config; inst.drivers().len()];
    let outcomes = executor.price_all(inst, duals, &configs, deadline);
    let mut complete = outcomes.iter().all(|o| o.complete);
    let mut added = 0;
    'merge: for o in outcomes {
        for c in o.columns {
            if master.columns().len() >= config.pool_cap {
                complete = false;
                break 'merge;
            }
            if master.add(c) {
                added += 1;
            }
        }
    }
    (complete, added)
}

/// Pool columns whose reduced cost under `duals` is at least `threshold`;
/// the others cannot be part of a solution within that distance of the
/// upper bound.
fn above_threshold(master: &MasterProblem<'_>, duals: &DualPrices, threshold: f64) -> Vec<bool> {
    master
        .columns()
        .iter()
        .map(|c| {
            let pi: f64 = c.task_indices.iter().map(|&t| duals.task[t]).sum();
            c.expected_savings - pi - duals.driver[c.driver_index] >= threshold
        })
        .collect()
}

/// Runs a variant without a clock (no time limit) on the calling thread.
pub fn run_variant(instance: &Instance, config: &VariantConfig) -> RunReport {
    Solver::default().run(instance, config)
}
