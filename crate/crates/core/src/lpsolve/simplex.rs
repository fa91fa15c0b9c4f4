//! Bounded primal revised simplex with an explicit dense basis inverse.
//!
//! Internal variables are the row slacks (first `m`), then the structural
//! columns in the order they were added, with phase-one artificials appended
//! as needed. Each artificial is the column `−e_i` of one row and is reused
//! whenever that row needs one again.

use alloc::vec;
use alloc::vec::Vec;

use super::{LinearProgram, LpResult, LpStatus};

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const SINGULAR_TOL: f64 = 1e-12;
const REFACTOR_EVERY: usize = 64;
const BLAND_AFTER: usize = 10_000;
const MAX_ITERATIONS: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

enum Outcome {
    Optimal,
    Unbounded,
}

/// Saved basis of a [`Simplex`], for restarting after bound changes.
#[derive(Clone, Debug)]
pub struct WarmStart {
    basis: Vec<usize>,
    state: Vec<State>,
}

/// A solver context that keeps its basis between solves, so columns can be
/// added and the program re-optimized from the previous optimum.
#[derive(Clone, Debug)]
pub struct Simplex {
    m: usize,
    b: Vec<f64>,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    state: Vec<State>,
    is_artificial: Vec<bool>,
    basis: Vec<usize>,
    /// Row-major `m × m`.
    binv: Vec<f64>,
    xb: Vec<f64>,
    structural: Vec<usize>,
    artificial: Vec<Option<usize>>,
    since_refactor: usize,
    degenerate: usize,
    bland: bool,
    iterations: usize,
}

impl Simplex {
    pub fn new(lp: &LinearProgram) -> Self {
        let m = lp.num_rows();
        let mut s = Simplex {
            m,
            b: lp.row_bounds.clone(),
            cols: Vec::new(),
            cost: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            state: Vec::new(),
            is_artificial: Vec::new(),
            basis: (0..m).collect(),
            binv: vec![0.0; m * m],
            xb: vec![0.0; m],
            structural: Vec::new(),
            artificial: vec![None; m],
            since_refactor: 0,
            degenerate: 0,
            bland: false,
            iterations: 0,
        };
        for i in 0..m {
            s.push_var(vec![(i, 1.0)], 0.0, 0.0, f64::INFINITY, State::Basic, false);
        }
        for (j, col) in lp.columns().into_iter().enumerate() {
            s.add_column(lp.objective[j], &col, lp.upper_bounds[j]);
        }
        s.reset_to_slack_basis();
        s
    }

    fn push_var(&mut self, col: Vec<(usize, f64)>, cost: f64, lower: f64, upper: f64, state: State, art: bool) -> usize {
        self.cols.push(col);
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.state.push(state);
        self.is_artificial.push(art);
        self.cols.len() - 1
    }

    pub fn num_structural(&self) -> usize {
        self.structural.len()
    }

    /// Adds a column at its lower bound 0; the current basis stays valid.
    pub fn add_column(&mut self, cost: f64, entries: &[(usize, f64)], upper: f64) -> usize {
        let v = self.push_var(entries.to_vec(), cost, 0.0, upper, State::Lower, false);
        self.structural.push(v);
        self.structural.len() - 1
    }

    /// Changes the bounds of structural variable `k`. The next solve starts
    /// over if the current basis becomes infeasible.
    pub fn set_bounds(&mut self, k: usize, lower: f64, upper: f64) {
        let v = self.structural[k];
        self.lower[v] = lower;
        self.upper[v] = upper;
        if self.state[v] == State::Upper && upper == f64::INFINITY {
            self.state[v] = State::Lower;
        }
    }

    fn value(&self, v: usize) -> f64 {
        match self.state[v] {
            State::Lower => self.lower[v],
            State::Upper => self.upper[v],
            State::Basic => {
                let r = self.basis.iter().position(|&x| x == v).expect("basic variable in basis");
                self.xb[r]
            }
        }
    }

    fn reset_to_slack_basis(&mut self) {
        for v in 0..self.cols.len() {
            self.state[v] = State::Lower;
        }
        for i in 0..self.m {
            self.basis[i] = i;
            self.state[i] = State::Basic;
        }
        self.refactor();
    }

    /// Rebuilds `B⁻¹` by Gauss–Jordan elimination and recomputes the basic
    /// values. A singular basis falls back to the slack basis.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (r, &v) in self.basis.iter().enumerate() {
            for &(i, x) in &self.cols[v] {
                a[i * m + r] = x;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        let mut ok = true;
        for c in 0..m {
            let p = (c..m).max_by(|&x, &y| a[x * m + c].abs().total_cmp(&a[y * m + c].abs()).then(y.cmp(&x)));
            let p = p.unwrap_or(c);
            if a[p * m + c].abs() < SINGULAR_TOL {
                ok = false;
                break;
            }
            if p != c {
                for k in 0..m {
                    a.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let d = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            for r in 0..m {
                if r != c {
                    let f = a[r * m + c];
                    if f != 0.0 {
                        for k in 0..m {
                            a[r * m + k] -= f * a[c * m + k];
                            inv[r * m + k] -= f * inv[c * m + k];
                        }
                    }
                }
            }
        }
        if !ok {
            for v in 0..self.cols.len() {
                if self.state[v] == State::Basic {
                    self.state[v] = State::Lower;
                }
            }
            for i in 0..m {
                self.basis[i] = i;
                self.state[i] = State::Basic;
            }
            inv.iter_mut().for_each(|x| *x = 0.0);
            for i in 0..m {
                // slack basis is the identity
                inv[i * m + i] = 1.0;
            }
        }
        self.binv = inv;
        self.since_refactor = 0;
        self.recompute_xb();
        ok
    }

    fn recompute_xb(&mut self) {
        let m = self.m;
        let mut r = self.b.clone();
        for v in 0..self.cols.len() {
            let x = match self.state[v] {
                State::Basic => continue,
                State::Lower => self.lower[v],
                State::Upper => self.upper[v],
            };
            if x != 0.0 {
                for &(i, a) in &self.cols[v] {
                    r[i] -= a * x;
                }
            }
        }
        for i in 0..m {
            self.xb[i] = (0..m).map(|k| self.binv[i * m + k] * r[k]).sum();
        }
    }

    fn basis_feasible(&self) -> bool {
        self.basis.iter().zip(&self.xb).all(|(&v, &x)| {
            x >= self.lower[v] - PRIMAL_TOL * (1.0 + self.lower[v].abs())
                && x <= self.upper[v] + PRIMAL_TOL * (1.0 + self.upper[v].abs())
        })
    }

    fn phase_cost(&self, v: usize, phase: Phase) -> f64 {
        match phase {
            Phase::One => {
                if self.is_artificial[v] {
                    -1.0
                } else {
                    0.0
                }
            }
            Phase::Two => self.cost[v],
        }
    }

    fn duals(&self, phase: Phase) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (r, &v) in self.basis.iter().enumerate() {
            let c = self.phase_cost(v, phase);
            if c != 0.0 {
                for k in 0..m {
                    y[k] += c * self.binv[r * m + k];
                }
            }
        }
        y
    }

    fn pivot_binv(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let p = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= p;
        }
        for i in 0..m {
            if i != r && alpha[i] != 0.0 {
                let f = alpha[i];
                for k in 0..m {
                    self.binv[i * m + k] -= f * self.binv[r * m + k];
                }
            }
        }
        self.since_refactor += 1;
    }

    fn column_alpha(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for &(i, a) in &self.cols[j] {
            for r in 0..m {
                alpha[r] += self.binv[r * m + i] * a;
            }
        }
        alpha
    }

    fn run(&mut self, phase: Phase) -> Outcome {
        let m = self.m;
        loop {
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor();
            }
            if self.iterations >= MAX_ITERATIONS {
                return Outcome::Optimal;
            }
            let y = self.duals(phase);
            // entering variable
            let mut enter: Option<(usize, f64)> = None;
            for v in 0..self.cols.len() {
                let st = self.state[v];
                if st == State::Basic || self.lower[v] == self.upper[v] {
                    continue;
                }
                let d = self.phase_cost(v, phase) - self.cols[v].iter().map(|&(i, a)| y[i] * a).sum::<f64>();
                let gain = match st {
                    State::Lower if d > DUAL_TOL => d,
                    State::Upper if d < -DUAL_TOL => -d,
                    _ => continue,
                };
                if self.bland {
                    enter = Some((v, gain));
                    break;
                }
                if enter.map_or(true, |(_, g)| gain > g) {
                    enter = Some((v, gain));
                }
            }
            let Some((j, _)) = enter else {
                return Outcome::Optimal;
            };
            let alpha = self.column_alpha(j);
            let dir = if self.state[j] == State::Lower { 1.0 } else { -1.0 };
            // ratio test; x_B(t) = x_B − t·dir·α
            let mut best_t = self.upper[j] - self.lower[j];
            let mut leave: Option<(usize, State)> = None;
            let mut best_piv = 0.0;
            for r in 0..m {
                let d = dir * alpha[r];
                let v = self.basis[r];
                let (t, hit) = if d > PIVOT_TOL {
                    ((self.xb[r] - self.lower[v]).max(0.0) / d, State::Lower)
                } else if d < -PIVOT_TOL && self.upper[v] < f64::INFINITY {
                    ((self.upper[v] - self.xb[r]).max(0.0) / -d, State::Upper)
                } else {
                    continue;
                };
                let better = match leave {
                    None => t < best_t || (best_t == f64::INFINITY && t < f64::INFINITY),
                    Some((lr, _)) => {
                        if t < best_t - 1e-12 {
                            true
                        } else if t <= best_t + 1e-12 {
                            if self.bland {
                                v < self.basis[lr]
                            } else {
                                d.abs() > best_piv
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    best_t = t;
                    leave = Some((r, hit));
                    best_piv = d.abs();
                }
            }
            if best_t == f64::INFINITY {
                return Outcome::Unbounded;
            }
            self.iterations += 1;
            if best_t < 1e-12 {
                self.degenerate += 1;
                if self.degenerate >= BLAND_AFTER {
                    self.bland = true;
                }
            }
            for r in 0..m {
                self.xb[r] -= best_t * dir * alpha[r];
            }
            match leave {
                None => {
                    // bound flip
                    self.state[j] = if self.state[j] == State::Lower { State::Upper } else { State::Lower };
                }
                Some((r, hit)) => {
                    let entering_value =
                        if self.state[j] == State::Lower { self.lower[j] + best_t } else { self.upper[j] - best_t };
                    let out = self.basis[r];
                    self.state[out] = hit;
                    self.state[j] = State::Basic;
                    self.basis[r] = j;
                    self.xb[r] = entering_value;
                    self.pivot_binv(r, &alpha);
                }
            }
        }
    }

    /// Puts an artificial in the basis of every row whose slack would be
    /// negative at the slack basis.
    fn start_phase_one(&mut self) -> bool {
        self.reset_to_slack_basis();
        let mut needed = false;
        for i in 0..self.m {
            if self.xb[i] < -PRIMAL_TOL {
                let a = match self.artificial[i] {
                    Some(a) => a,
                    None => {
                        let a = self.push_var(vec![(i, -1.0)], 0.0, 0.0, 0.0, State::Lower, true);
                        self.artificial[i] = Some(a);
                        a
                    }
                };
                self.upper[a] = f64::INFINITY;
                self.state[i] = State::Lower;
                self.state[a] = State::Basic;
                self.basis[i] = a;
                needed = true;
            }
        }
        if needed {
            self.refactor();
        }
        needed
    }

    pub fn solve(&mut self) -> LpResult {
        self.degenerate = 0;
        self.bland = false;
        self.refactor();
        if !self.basis_feasible() && self.start_phase_one() {
            self.run(Phase::One);
            let infeasibility: f64 = self
                .basis
                .iter()
                .zip(&self.xb)
                .filter(|(&v, _)| self.is_artificial[v])
                .map(|(_, &x)| x.max(0.0))
                .sum();
            let scale = self.b.iter().fold(1.0f64, |s, b| s.max(b.abs()));
            for v in 0..self.cols.len() {
                if self.is_artificial[v] {
                    self.upper[v] = 0.0;
                    if self.state[v] != State::Basic {
                        self.state[v] = State::Lower;
                    }
                }
            }
            if infeasibility > 1e-7 * scale {
                return self.result(LpStatus::Infeasible);
            }
            self.degenerate = 0;
            self.bland = false;
        }
        match self.run(Phase::Two) {
            Outcome::Optimal => self.result(LpStatus::Optimal),
            Outcome::Unbounded => self.result(LpStatus::Unbounded),
        }
    }

    pub fn warm_start(&self) -> WarmStart {
        WarmStart { basis: self.basis.clone(), state: self.state.clone() }
    }

    /// Re-optimizes from a basis saved by [`Simplex::warm_start`], typically
    /// after tightening bounds. A basis that is still dual feasible is
    /// repaired with dual simplex steps; anything else falls back to
    /// [`Simplex::solve`].
    pub fn solve_from(&mut self, warm: &WarmStart) -> LpResult {
        if warm.state.len() != self.cols.len() {
            return self.solve();
        }
        self.basis.clone_from(&warm.basis);
        self.state.clone_from(&warm.state);
        for v in 0..self.cols.len() {
            if self.state[v] == State::Upper && self.upper[v] == f64::INFINITY {
                self.state[v] = State::Lower;
            }
        }
        self.degenerate = 0;
        self.bland = false;
        if !self.refactor() {
            return self.solve();
        }
        match self.dual() {
            Some(true) => match self.run(Phase::Two) {
                Outcome::Optimal => self.result(LpStatus::Optimal),
                Outcome::Unbounded => self.result(LpStatus::Unbounded),
            },
            Some(false) => self.result(LpStatus::Infeasible),
            None => self.solve(),
        }
    }

    /// Dual simplex on a dual-feasible basis. `Some(true)` once the basis is
    /// primal feasible, `Some(false)` if the program is infeasible, `None`
    /// if it gave up.
    fn dual(&mut self) -> Option<bool> {
        let m = self.m;
        let limit = self.iterations + 50 * (m + 10);
        loop {
            if self.since_refactor >= REFACTOR_EVERY && !self.refactor() {
                return None;
            }
            if self.iterations >= limit {
                return None;
            }
            let mut leave: Option<(usize, f64)> = None;
            for (r, (&v, &x)) in self.basis.iter().zip(&self.xb).enumerate() {
                let (l, u) = (self.lower[v], self.upper[v]);
                let inf = if x < l - PRIMAL_TOL * (1.0 + l.abs()) {
                    l - x
                } else if x > u + PRIMAL_TOL * (1.0 + u.abs()) {
                    x - u
                } else {
                    continue;
                };
                if leave.map_or(true, |(_, b)| inf > b) {
                    leave = Some((r, inf));
                }
            }
            let Some((r, _)) = leave else {
                return Some(true);
            };
            let out = self.basis[r];
            let below = self.xb[r] < self.lower[out];
            let y = self.duals(Phase::Two);
            let row = &self.binv[r * m..(r + 1) * m];
            let mut enter: Option<(usize, f64, f64)> = None;
            for v in 0..self.cols.len() {
                let st = self.state[v];
                if st == State::Basic || self.lower[v] == self.upper[v] {
                    continue;
                }
                let a: f64 = self.cols[v].iter().map(|&(i, x)| row[i] * x).sum();
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let eligible = match st {
                    State::Lower => (a < 0.0) == below,
                    _ => (a > 0.0) == below,
                };
                if !eligible {
                    continue;
                }
                let d = self.cost[v] - self.cols[v].iter().map(|&(i, x)| y[i] * x).sum::<f64>();
                let slack = if st == State::Lower { (-d).max(0.0) } else { d.max(0.0) };
                let ratio = slack / a.abs();
                let better = match enter {
                    None => true,
                    Some((_, br, ba)) => ratio < br - 1e-12 || (ratio <= br + 1e-12 && a.abs() > ba),
                };
                if better {
                    enter = Some((v, ratio, a.abs()));
                }
            }
            let Some((q, _, _)) = enter else {
                return Some(false);
            };
            let alpha = self.column_alpha(q);
            let bound = if below { self.lower[out] } else { self.upper[out] };
            let delta = (self.xb[r] - bound) / alpha[r];
            let entering_value = self.value(q) + delta;
            for i in 0..m {
                self.xb[i] -= delta * alpha[i];
            }
            self.state[out] = if below { State::Lower } else { State::Upper };
            self.state[q] = State::Basic;
            self.basis[r] = q;
            self.xb[r] = entering_value;
            self.pivot_binv(r, &alpha);
            self.iterations += 1;
        }
    }

    fn result(&self, status: LpStatus) -> LpResult {
        let primal: Vec<f64> = self
            .structural
            .iter()
            .map(|&v| {
                let x = self.value(v);
                // snap round-off at the bounds
                if (x - self.lower[v]).abs() <= PRIMAL_TOL {
                    self.lower[v]
                } else if (x - self.upper[v]).abs() <= PRIMAL_TOL {
                    self.upper[v]
                } else {
                    x
                }
            })
            .collect();
        let objective =
            self.structural.iter().zip(&primal).map(|(&v, &x)| self.cost[v] * x).sum::<f64>();
        let row_duals = self.duals(Phase::Two).into_iter().map(|y| y.max(0.0)).collect();
        LpResult { status, primal, objective, row_duals, iterations: self.iterations }
    }
}
