//! Sequential baseline: generate bundles first, price them, then assign.
//!
//! Bundles are grown from every seed task within the detour limit by
//! repeatedly appending one of the `K` cheapest feasible tasks at random.
//! Offers that are unlikely to be accepted or save little are dropped before
//! the assignment MILP.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clock::Deadline;
use crate::geometry;
use crate::model::{Instance, SolveStatus};
use crate::orchestrator::{milp_heuristic, RunReport, VariantConfig};
use crate::pricing::Column;

#[derive(Clone, Debug, PartialEq)]
pub struct SequentialParams {
    pub max_detour: f64,
    pub runs_per_seed: usize,
    pub top_k: usize,
    pub min_acceptance: f64,
    pub min_savings: f64,
}

impl Default for SequentialParams {
    fn default() -> Self {
        SequentialParams { max_detour: 5.0, runs_per_seed: 250, top_k: 5, min_acceptance: 0.8, min_savings: 1.0 }
    }
}

/// Candidate bundles before pricing: for each driver and task set, the
/// lowest-detour ordering found, as `(driver, depot, order)`.
pub fn generate_bundles(instance: &Instance, params: &SequentialParams, seed: u64) -> Vec<(usize, usize, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tasks = instance.tasks();
    // (driver, sorted task set) → (detour, depot, order)
    let mut best: BTreeMap<(usize, Vec<usize>), (f64, usize, Vec<usize>)> = BTreeMap::new();
    let mut record = |w: usize, d: usize, order: &[usize], detour: f64| {
        let mut key = order.to_vec();
        key.sort_unstable();
        match best.get(&(w, key.clone())) {
            Some((b, _, _)) if *b <= detour => {}
            _ => {
                best.insert((w, key), (detour, d, order.to_vec()));
            }
        }
    };
    for (d, depot) in instance.depots().iter().enumerate() {
        for (w, driver) in instance.drivers().iter().enumerate() {
            let base = geometry::initial_detour(driver, depot);
            for seed_task in 0..tasks.len() {
                if !instance.depot_serves(d, seed_task) || tasks[seed_task].load > driver.capacity {
                    continue;
                }
                let first = base + geometry::detour_increment(depot.location, tasks[seed_task].location, driver);
                if first > params.max_detour {
                    continue;
                }
                for _ in 0..params.runs_per_seed {
                    let mut order = alloc::vec![seed_task];
                    let mut load = tasks[seed_task].load;
                    let mut detour = first;
                    record(w, d, &order, detour);
                    loop {
                        let last = tasks[*order.last().expect("seeded")].location;
                        let mut cands: Vec<(f64, usize)> = (0..tasks.len())
                            .filter(|&t| {
                                instance.depot_serves(d, t) && !order.contains(&t) && load + tasks[t].load <= driver.capacity
                            })
                            .map(|t| (geometry::detour_increment(last, tasks[t].location, driver), t))
                            .filter(|&(inc, _)| detour + inc <= params.max_detour)
                            .collect();
                        if cands.is_empty() {
                            break;
                        }
                        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                        let k = params.top_k.max(1).min(cands.len());
                        let (inc, t) = cands[rng.gen_range(0..k)];
                        order.push(t);
                        load += tasks[t].load;
                        detour += inc;
                        record(w, d, &order, detour);
                    }
                }
            }
        }
    }
    best.into_iter().map(|((w, _), (_, d, order))| (w, d, order)).collect()
}

/// Priced bundles that survive the acceptance and savings filters.
pub fn sequential_pool(instance: &Instance, params: &SequentialParams, seed: u64) -> Vec<Column> {
    generate_bundles(instance, params, seed)
        .into_iter()
        .filter_map(|(w, d, order)| {
            let mut c = Column::price(instance, w, d, &order, 0.0)?;
            c.reduced_cost_at_generation = c.expected_savings;
            (c.acceptance_probability >= params.min_acceptance && c.expected_savings >= params.min_savings).then_some(c)
        })
        .collect()
}

pub fn sequential_baseline(instance: &Instance, config: &VariantConfig, deadline: &Deadline<'_>) -> RunReport {
    let pool = sequential_pool(instance, &SequentialParams::default(), config.rng_seed);
    let milp = milp_heuristic(instance, &pool, deadline);
    let mut solution = milp.solution;
    let status = if milp.hit_limit { SolveStatus::TimeLimit } else { SolveStatus::Heuristic };
    solution.status = status;
    solution.bound = None;
    RunReport {
        instance_name: String::from(instance.name()),
        variant: config.variant,
        upper_bound: None,
        lower_bound: solution.objective,
        lb_mip: Some(solution.objective),
        gap_h: None,
        solution,
        columns_generated: pool.len(),
        enumerated_columns: 0,
        cg_iterations: 0,
        wall_time_seconds: deadline.elapsed(),
        status,
    }
}
