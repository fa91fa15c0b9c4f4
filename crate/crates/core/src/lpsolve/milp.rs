//! Best-first branch and bound over binary variables.
//!
//! Nodes branch on a caller-supplied disjunction when the relaxation has
//! weight on both of its sides, otherwise on the most fractional variable.
//! Each node is re-optimized from its parent's basis.

use alloc::collections::BinaryHeap;
use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{LinearProgram, LpError, LpResult, LpStatus, Simplex, WarmStart};
use crate::clock::Budget;
use crate::math;

const INT_TOL: f64 = 1e-9;
const SIDE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    /// Stopped on the budget; `primal` is the incumbent.
    Feasible,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpResult {
    pub status: MilpStatus,
    pub primal: Vec<f64>,
    pub objective: f64,
    /// Upper bound on the optimum.
    pub bound: f64,
    pub nodes: usize,
}

/// Every integer-feasible point has all of `left` at zero or all of `right`
/// at zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Disjunction {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MilpOptions<'a> {
    /// A known solution, used as the first incumbent if feasible and integral.
    pub start: Option<&'a [f64]>,
    pub disjunctions: &'a [Disjunction],
}

#[derive(Clone, Copy)]
enum Branch {
    Var(usize, bool),
    /// Side of a disjunction forced to zero; `true` is `left`.
    Zero(usize, bool),
}

struct Fix {
    branch: Branch,
    parent: Option<Rc<Fix>>,
}

struct Node {
    bound: f64,
    id: usize,
    fixings: Option<Rc<Fix>>,
    warm: Rc<WarmStart>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn feasible(lp: &LinearProgram, y: &[f64]) -> bool {
    let tol = 1e-9;
    y.iter().zip(&lp.upper_bounds).all(|(&v, &u)| v >= -tol && v <= u + tol)
        && lp.activities(y).iter().zip(&lp.row_bounds).all(|(a, b)| *a <= b + tol * (1.0 + b.abs()))
}

fn objective(lp: &LinearProgram, y: &[f64]) -> f64 {
    lp.objective.iter().zip(y).map(|(c, v)| c * v).sum()
}

fn infeasible() -> LpResult {
    LpResult { status: LpStatus::Infeasible, primal: Vec::new(), objective: 0.0, row_duals: Vec::new(), iterations: 0 }
}

/// Re-optimizes the node LP from the parent basis with the branching
/// fixings applied on top of the original bounds.
fn node_lp(
    s: &mut Simplex,
    lp: &LinearProgram,
    disjunctions: &[Disjunction],
    fixings: &Option<Rc<Fix>>,
    warm: &WarmStart,
) -> LpResult {
    // 0 free, 1 fixed at zero, 2 fixed at one
    let mut fixed = vec![0u8; lp.num_vars()];
    let mut set = |j: usize, v: u8| {
        if fixed[j] != 0 && fixed[j] != v {
            return false;
        }
        fixed[j] = v;
        true
    };
    let mut link = fixings.as_deref();
    while let Some(f) = link {
        let ok = match f.branch {
            Branch::Var(j, one) => set(j, if one { 2 } else { 1 }),
            Branch::Zero(d, left) => {
                let side = if left { &disjunctions[d].left } else { &disjunctions[d].right };
                side.iter().all(|&j| set(j, 1))
            }
        };
        if !ok {
            return infeasible();
        }
        link = f.parent.as_deref();
    }
    for (k, (&u, &f)) in lp.upper_bounds.iter().zip(&fixed).enumerate() {
        match f {
            0 => s.set_bounds(k, 0.0, u),
            1 => s.set_bounds(k, 0.0, 0.0),
            _ => s.set_bounds(k, 1.0, 1.0),
        }
    }
    s.solve_from(warm)
}

fn most_fractional(y: &[f64], binary: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, (&v, &b)) in y.iter().zip(binary).enumerate() {
        if !b {
            continue;
        }
        let frac = v - math::floor(v);
        if frac <= INT_TOL || frac >= 1.0 - INT_TOL {
            continue;
        }
        let dist = (frac - 0.5).abs();
        if best.map_or(true, |(_, d)| dist < d) {
            best = Some((j, dist));
        }
    }
    best.map(|(j, _)| j)
}

/// The disjunction whose lighter side carries the most weight.
fn best_disjunction(y: &[f64], disjunctions: &[Disjunction]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (d, dj) in disjunctions.iter().enumerate() {
        let l: f64 = dj.left.iter().map(|&j| y[j]).sum();
        if l <= SIDE_TOL || best.is_some_and(|(_, b)| l <= b) {
            continue;
        }
        let r: f64 = dj.right.iter().map(|&j| y[j]).sum();
        let w = l.min(r);
        if w > SIDE_TOL && best.map_or(true, |(_, b)| w > b) {
            best = Some((d, w));
        }
    }
    best.map(|(d, _)| d)
}

/// Maximizes over `binary` variables restricted to {0, 1}. The root
/// relaxation is always solved; the budget is checked between nodes.
pub fn solve_milp(lp: &LinearProgram, binary: &[bool], budget: &dyn Budget) -> Result<MilpResult, LpError> {
    solve_milp_with(lp, binary, budget, &MilpOptions::default())
}

pub fn solve_milp_with(
    lp: &LinearProgram,
    binary: &[bool],
    budget: &dyn Budget,
    options: &MilpOptions<'_>,
) -> Result<MilpResult, LpError> {
    lp.check()?;
    let n = lp.num_vars();
    if binary.len() != n {
        return Err(LpError::DimensionMismatch("binary mask"));
    }
    let disjunctions = options.disjunctions;
    if disjunctions.iter().any(|d| d.left.iter().chain(&d.right).any(|&j| j >= n || !binary[j])) {
        return Err(LpError::DimensionMismatch("disjunction"));
    }
    let mut bounded = lp.clone();
    for (u, &b) in bounded.upper_bounds.iter_mut().zip(binary) {
        if b && *u > 1.0 {
            *u = 1.0;
        }
    }
    let lp = &bounded;
    let mut simplex = Simplex::new(lp);
    let root = simplex.solve();
    if root.status == LpStatus::Infeasible {
        return Ok(MilpResult { status: MilpStatus::Infeasible, primal: Vec::new(), objective: 0.0, bound: f64::NEG_INFINITY, nodes: 1 });
    }
    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let offer = |y: Vec<f64>, inc: &mut Option<(Vec<f64>, f64)>| {
        if feasible(lp, &y) {
            let v = objective(lp, &y);
            if inc.as_ref().map_or(true, |(_, o)| v > *o) {
                *inc = Some((y, v));
            }
        }
    };
    offer(vec![0.0; n], &mut incumbent);
    if let Some(y) = options.start {
        let integral = y.len() == n && y.iter().zip(binary).all(|(&v, &b)| !b || v == 0.0 || v == 1.0);
        if integral {
            offer(y.to_vec(), &mut incumbent);
        }
    }
    let rounded: Vec<f64> =
        root.primal.iter().zip(binary).map(|(&v, &b)| if b { math::floor(v + INT_TOL) } else { v }).collect();
    offer(rounded, &mut incumbent);

    let tol = |v: f64| 1e-9 * 1f64.max(v.abs());
    let mut heap = BinaryHeap::new();
    let mut next_id = 0;
    let mut nodes = 1;
    let mut pending = Some((root, None, simplex.warm_start()));
    let mut open_bound = f64::NEG_INFINITY;
    loop {
        if let Some((res, fixings, warm)) = pending.take() {
            let inc_val = incumbent.as_ref().map_or(f64::NEG_INFINITY, |(_, o)| *o);
            if res.status == LpStatus::Optimal && res.objective > inc_val + tol(inc_val) {
                let branches = match best_disjunction(&res.primal, disjunctions) {
                    Some(d) => Some([Branch::Zero(d, false), Branch::Zero(d, true)]),
                    None => most_fractional(&res.primal, binary).map(|j| [Branch::Var(j, true), Branch::Var(j, false)]),
                };
                match branches {
                    None => {
                        let y: Vec<f64> = res
                            .primal
                            .iter()
                            .zip(binary)
                            .map(|(&v, &b)| if b { math::round(v) } else { v })
                            .collect();
                        offer(y, &mut incumbent);
                    }
                    Some(pair) => {
                        let warm = Rc::new(warm);
                        for branch in pair {
                            let f = Rc::new(Fix { branch, parent: fixings.clone() });
                            heap.push(Node { bound: res.objective, id: next_id, fixings: Some(f), warm: Rc::clone(&warm) });
                            next_id += 1;
                        }
                    }
                }
            }
        }
        let inc_val = incumbent.as_ref().map_or(f64::NEG_INFINITY, |(_, o)| *o);
        if heap.peek().is_some_and(|n| n.bound <= inc_val + tol(inc_val)) {
            heap.clear();
        }
        let Some(node) = heap.pop() else {
            break;
        };
        if budget.exhausted() {
            open_bound = node.bound;
            break;
        }
        nodes += 1;
        let res = node_lp(&mut simplex, lp, disjunctions, &node.fixings, &node.warm);
        pending = Some((res, node.fixings, simplex.warm_start()));
    }
    let Some((primal, objective)) = incumbent else {
        // no integer point found (only possible with negative row bounds)
        return Ok(MilpResult { status: MilpStatus::Infeasible, primal: Vec::new(), objective: 0.0, bound: open_bound, nodes });
    };
    let (status, bound) = if open_bound > f64::NEG_INFINITY {
        (MilpStatus::Feasible, open_bound.max(objective))
    } else {
        (MilpStatus::Optimal, objective)
    };
    Ok(MilpResult { status, primal, objective, bound, nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::Unlimited;
    use alloc::vec;

    struct Spent;
    impl Budget for Spent {
        fn exhausted(&self) -> bool {
            true
        }
    }

    fn triangle() -> LinearProgram {
        // three pairwise-conflicting items: LP takes 1/2 of each
        let mut lp = LinearProgram::new(3, vec![1.0, 1.0, 1.0]);
        lp.add_variable(1.0, f64::INFINITY, &[(0, 1.0), (1, 1.0)]);
        lp.add_variable(1.0, f64::INFINITY, &[(1, 1.0), (2, 1.0)]);
        lp.add_variable(1.0, f64::INFINITY, &[(0, 1.0), (2, 1.0)]);
        lp
    }

    #[test]
    fn fractional_root() {
        let lp = triangle();
        let r = solve_milp(&lp, &[true; 3], &Unlimited).unwrap();
        assert_eq!(r.status, MilpStatus::Optimal);
        assert!((r.objective - 1.0).abs() < 1e-12);
        assert!(r.nodes > 1);
    }

    #[test]
    fn zero_budget_returns_incumbent_and_root_bound() {
        let lp = triangle();
        let r = solve_milp(&lp, &[true; 3], &Spent).unwrap();
        assert_eq!(r.status, MilpStatus::Feasible);
        assert_eq!(r.primal, vec![0.0; 3]);
        assert!((r.bound - 1.5).abs() < 1e-9);
    }

    #[test]
    fn integral_relaxation() {
        let mut lp = LinearProgram::new(2, vec![1.0, 1.0]);
        lp.add_variable(2.0, f64::INFINITY, &[(0, 1.0)]);
        lp.add_variable(1.0, f64::INFINITY, &[(1, 1.0)]);
        let r = solve_milp(&lp, &[true; 2], &Unlimited).unwrap();
        assert_eq!(r.status, MilpStatus::Optimal);
        assert!((r.objective - 3.0).abs() < 1e-12);
        assert_eq!(r.nodes, 1);
    }
}
