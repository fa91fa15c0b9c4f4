//! Linear programming and binary branch and bound, sized for restricted
//! master problems with a few hundred rows.
//!
//! Every program is a maximization over `0 ≤ y ≤ u` subject to `A·y ≤ b`.

mod milp;
mod simplex;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};

pub use milp::{solve_milp, solve_milp_with, Disjunction, MilpOptions, MilpResult, MilpStatus};
pub use simplex::{Simplex, WarmStart};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    /// Sparse rows as `(variable, coefficient)` pairs.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub row_bounds: Vec<f64>,
    /// `f64::INFINITY` for no upper bound.
    pub upper_bounds: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpError {
    DimensionMismatch(&'static str),
    VariableOutOfRange { row: usize, var: usize },
    NotFinite(&'static str),
}

impl fmt::Display for LpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpError::DimensionMismatch(what) => write!(f, "dimension mismatch: {what}"),
            LpError::VariableOutOfRange { row, var } => write!(f, "row {row} references variable {var}"),
            LpError::NotFinite(what) => write!(f, "{what} must be finite"),
        }
    }
}

impl LinearProgram {
    pub fn new(num_rows: usize, row_bounds: Vec<f64>) -> Self {
        LinearProgram { objective: Vec::new(), rows: alloc::vec![Vec::new(); num_rows], row_bounds, upper_bounds: Vec::new() }
    }

    /// Appends a variable given by its column entries; returns its index.
    pub fn add_variable(&mut self, cost: f64, upper: f64, entries: &[(usize, f64)]) -> usize {
        let j = self.objective.len();
        self.objective.push(cost);
        self.upper_bounds.push(upper);
        for &(r, a) in entries {
            self.rows[r].push((j, a));
        }
        j
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn check(&self) -> Result<(), LpError> {
        if self.rows.len() != self.row_bounds.len() {
            return Err(LpError::DimensionMismatch("rows and row bounds"));
        }
        if self.objective.len() != self.upper_bounds.len() {
            return Err(LpError::DimensionMismatch("objective and upper bounds"));
        }
        if !self.row_bounds.iter().all(|b| b.is_finite()) {
            return Err(LpError::NotFinite("row bounds"));
        }
        if !self.objective.iter().all(|c| c.is_finite()) {
            return Err(LpError::NotFinite("objective coefficients"));
        }
        if self.upper_bounds.iter().any(|u| u.is_nan() || *u < 0.0) {
            return Err(LpError::NotFinite("upper bounds (must be >= 0)"));
        }
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                if j >= self.objective.len() {
                    return Err(LpError::VariableOutOfRange { row: i, var: j });
                }
                if !a.is_finite() {
                    return Err(LpError::NotFinite("constraint coefficients"));
                }
            }
        }
        Ok(())
    }

    /// Column-wise copy of the constraint matrix.
    pub(crate) fn columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols = alloc::vec![Vec::new(); self.objective.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                cols[j].push((i, a));
            }
        }
        cols
    }

    /// Row activities `A·y`.
    pub fn activities(&self, y: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| row.iter().map(|&(j, a)| a * y[j]).sum()).collect()
    }

    /// Plain-text dump:
    ///
    /// ```text
    /// maximize <c_0> <c_1> …
    /// upper <u_0> <u_1> …        (inf for no bound)
    /// row <b_i> : <j>:<a_ij> …   (one line per constraint)
    /// ```
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let num = |v: f64| if v == f64::INFINITY { String::from("inf") } else { alloc::format!("{v:?}") };
        s.push_str("maximize");
        for &c in &self.objective {
            let _ = write!(s, " {}", num(c));
        }
        s.push_str("\nupper");
        for &u in &self.upper_bounds {
            let _ = write!(s, " {}", num(u));
        }
        s.push('\n');
        for (row, b) in self.rows.iter().zip(&self.row_bounds) {
            let _ = write!(s, "row {} :", num(*b));
            for &(j, a) in row {
                let _ = write!(s, " {j}:{}", num(a));
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub objective: f64,
    /// One nonnegative price per row.
    pub row_duals: Vec<f64>,
    pub iterations: usize,
}

/// Solves from scratch.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpResult, LpError> {
    lp.check()?;
    let mut s = Simplex::new(lp);
    Ok(s.solve())
}
