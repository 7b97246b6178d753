use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// `+1` for minimisation, `-1` for maximisation.
    pub(crate) fn sign(self) -> f64 {
        match self {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Eq,
    Ge,
}

/// Dense linear program with bounded variables.
///
/// Variables default to `[0, +inf)`. Bounds may be infinite in either
/// direction.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub cost: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub kinds: Vec<RowKind>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of a simplex solve.
///
/// When optimal, `cost = A' duals + reduced_costs` holds in the problem's own
/// sense; reduced costs are nonzero only on variables sitting at a bound.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub(crate) fn without_point(status: LpStatus, n: usize, m: usize, iterations: usize) -> Self {
        Self {
            status,
            x: vec![0.0; n],
            objective: f64::NAN,
            duals: vec![0.0; m],
            reduced_costs: vec![0.0; n],
            iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

impl LinearProgram {
    pub fn new(sense: Sense, cost: Vec<f64>) -> Self {
        let n = cost.len();
        Self {
            sense,
            cost,
            rows: Vec::new(),
            kinds: Vec::new(),
            rhs: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, kind: RowKind, rhs: f64) -> usize {
        self.rows.push(coeffs);
        self.kinds.push(kind);
        self.rhs.push(rhs);
        self.rows.len() - 1
    }

    /// Adds a row given as `(column, coefficient)` pairs.
    pub fn add_sparse_row(&mut self, entries: &[(usize, f64)], kind: RowKind, rhs: f64) -> usize {
        let mut row = vec![0.0; self.n_vars()];
        for &(j, c) in entries {
            row[j] += c;
        }
        self.add_row(row, kind, rhs)
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn set_free(&mut self, j: usize) {
        self.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::InvalidArgument("bound vectors do not match the variable count".into()));
        }
        if self.kinds.len() != self.rows.len() || self.rhs.len() != self.rows.len() {
            return Err(Error::InvalidArgument("row metadata does not match the row count".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension { what: "constraint row width", expected: n, got: row.len() });
            }
            if !self.rhs[i].is_finite() || row.iter().any(|a| !a.is_finite()) {
                return Err(Error::InvalidArgument(format!("row {i} has non-finite data")));
            }
        }
        for j in 0..n {
            if !self.cost[j].is_finite() {
                return Err(Error::InvalidArgument(format!("cost of variable {j} is not finite")));
            }
            if self.lower[j] > self.upper[j] || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(Error::InvalidArgument(format!(
                    "variable {j} has empty bounds [{}, {}]",
                    self.lower[j], self.upper[j]
                )));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn row_activity(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].iter().zip(x).map(|(a, v)| a * v).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n_rows() {
            let act = self.row_activity(i, x);
            let v = match self.kinds[i] {
                RowKind::Le => act - self.rhs[i],
                RowKind::Ge => self.rhs[i] - act,
                RowKind::Eq => (act - self.rhs[i]).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.n_vars() && self.max_violation(x) <= tol
    }
}

impl fmt::Display for LinearProgram {
    /// Plain-text dump, one line per objective/row/bound.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sense = match self.sense {
            Sense::Minimize => "min",
            Sense::Maximize => "max",
        };
        write!(f, "{sense}")?;
        for c in &self.cost {
            write!(f, " {c:>10.4}")?;
        }
        writeln!(f)?;
        for (i, row) in self.rows.iter().enumerate() {
            write!(f, "r{i:<3}")?;
            for a in row {
                write!(f, " {a:>10.4}")?;
            }
            let op = match self.kinds[i] {
                RowKind::Le => "<=",
                RowKind::Eq => "==",
                RowKind::Ge => ">=",
            };
            writeln!(f, " {op} {:.6}", self.rhs[i])?;
        }
        write!(f, "lb ")?;
        for l in &self.lower {
            write!(f, " {l:>10.4}")?;
        }
        writeln!(f)?;
        write!(f, "ub ")?;
        for u in &self.upper {
            write!(f, " {u:>10.4}")?;
        }
        writeln!(f)
    }
}
