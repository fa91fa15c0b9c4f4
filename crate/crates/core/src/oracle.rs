//! Exhaustive solver for tiny instances, used to check the real solvers.
//!
//! Every feasible ordered bundle is priced for every driver and depot, then a
//! subset DP over drivers picks the best assignment.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::model::{Instance, Solution, SolveStatus};
use crate::pricing::Column;

pub const MAX_TASKS: usize = 8;
pub const MAX_DRIVERS: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub enum OracleError {
    TooLarge { tasks: usize, drivers: usize },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::TooLarge { tasks, drivers } => write!(
                f,
                "instance with {tasks} tasks and {drivers} drivers is too large for exhaustive search \
                 (at most {MAX_TASKS} tasks and {MAX_DRIVERS} drivers)"
            ),
        }
    }
}

fn guard(instance: &Instance) -> Result<(), OracleError> {
    let (n, m) = (instance.tasks().len(), instance.drivers().len());
    if n > MAX_TASKS || m > MAX_DRIVERS {
        return Err(OracleError::TooLarge { tasks: n, drivers: m });
    }
    Ok(())
}

/// Every non-empty, elementary, capacity-feasible ordered bundle of the
/// driver, as `(depot index, task indices)`.
pub fn ordered_bundles(instance: &Instance, driver: usize) -> Vec<(usize, Vec<usize>)> {
    fn walk(instance: &Instance, depot: usize, cap: f64, used: f64, seq: &mut Vec<usize>, out: &mut Vec<(usize, Vec<usize>)>) {
        for t in 0..instance.tasks().len() {
            if seq.contains(&t) || !instance.depot_serves(depot, t) {
                continue;
            }
            let q = used + instance.tasks()[t].load;
            if q > cap {
                continue;
            }
            seq.push(t);
            out.push((depot, seq.clone()));
            walk(instance, depot, cap, q, seq, out);
            seq.pop();
        }
    }
    let cap = instance.drivers()[driver].capacity;
    let mut out = Vec::new();
    for d in 0..instance.depots().len() {
        walk(instance, d, cap, 0.0, &mut Vec::new(), &mut out);
    }
    out
}

/// All worthwhile columns of every driver (zero duals, so the stored reduced
/// cost is the expected savings).
pub fn all_columns(instance: &Instance) -> Result<Vec<Vec<Column>>, OracleError> {
    guard(instance)?;
    Ok((0..instance.drivers().len())
        .map(|w| {
            ordered_bundles(instance, w)
                .into_iter()
                .filter_map(|(d, tasks)| {
                    let mut c = Column::price(instance, w, d, &tasks, 0.0)?;
                    c.reduced_cost_at_generation = c.expected_savings;
                    Some(c)
                })
                .collect()
        })
        .collect())
}

fn mask_of(tasks: &[usize]) -> usize {
    tasks.iter().fold(0, |m, &t| m | 1 << t)
}

/// Best column per task set (bit mask) for each driver.
pub fn best_per_set(instance: &Instance) -> Result<Vec<BTreeMap<usize, Column>>, OracleError> {
    let cols = all_columns(instance)?;
    Ok(cols
        .into_iter()
        .map(|cs| {
            let mut best: BTreeMap<usize, Column> = BTreeMap::new();
            for c in cs {
                let m = mask_of(&c.task_indices);
                match best.get(&m) {
                    Some(b) if b.expected_savings >= c.expected_savings => {}
                    _ => {
                        best.insert(m, c);
                    }
                }
            }
            best
        })
        .collect())
}

/// Optimal expected savings by exhaustive search.
pub fn solve(instance: &Instance) -> Result<Solution, OracleError> {
    let best = best_per_set(instance)?;
    let full = 1usize << instance.tasks().len();
    // value[m]: best savings of the drivers seen so far using exactly tasks ⊆ m
    let mut value = vec![0.0f64; full];
    let mut choice: Vec<Vec<Option<usize>>> = Vec::new();
    for per_set in &best {
        let mut next = value.clone();
        let mut pick = vec![None; full];
        for m in 0..full {
            for (&s, col) in per_set {
                if s & m == s {
                    let v = value[m & !s] + col.expected_savings;
                    if v > next[m] {
                        next[m] = v;
                        pick[m] = Some(s);
                    }
                }
            }
        }
        value = next;
        choice.push(pick);
    }
    let mut offers = Vec::new();
    let mut m = full - 1;
    for (w, pick) in choice.iter().enumerate().rev() {
        if let Some(s) = pick[m] {
            offers.push(best[w][&s].to_offer());
            m &= !s;
        }
    }
    offers.reverse();
    let mut sol = Solution::from_offers(offers, None, SolveStatus::Optimal);
    sol.bound = Some(sol.objective);
    Ok(sol)
}
