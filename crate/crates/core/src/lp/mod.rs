//! Linear and binary-mixed programming.
//!
//! Models are assembled with [`LinearProgram`] and solved by [`solve_lp`]
//! (bounded revised simplex) or [`solve_mip`] (best-bound branch-and-bound
//! over binary variables, LP relaxations solved by the same simplex).
//!
//! Dual values follow the shadow-price convention: the dual of a row is the
//! rate of change of the optimal objective with respect to its right-hand
//! side. For a minimization, `>=` rows therefore carry non-negative duals and
//! `<=` rows non-positive ones.

mod mip;
mod lu;
mod simplex;
mod solve;

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub use mip::solve_mip;
pub use solve::solve_lp;

/// Feasibility tolerance used when certifying solutions.
pub const FEAS_TOL: f64 = 1e-9;
/// Integrality tolerance for binary variables.
pub const INT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("model contains binary variables; use solve_mip")]
    BinaryInLp,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("branch-and-bound depth cap {0} exceeded")]
    DepthExceeded(usize),
    #[error("branch-and-bound node budget {0} exhausted")]
    NodeBudget(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub binary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Sparse coefficients, one entry per variable (merged on insertion).
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A linear model with optional binary variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    sense: Sense,
    vars: Vec<Variable>,
    objective: Vec<f64>,
    offset: f64,
    rows: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            vars: Vec::new(),
            objective: Vec::new(),
            offset: 0.0,
            rows: Vec::new(),
        }
    }

    pub fn minimize() -> Self {
        Self::new(Sense::Minimize)
    }

    pub fn maximize() -> Self {
        Self::new(Sense::Maximize)
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
            binary: false,
        });
        self.objective.push(0.0);
        VarId(self.vars.len() - 1)
    }

    /// Unbounded in both directions.
    pub fn add_free_var(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        let id = self.add_var(name, 0.0, 1.0);
        self.vars[id.0].binary = true;
        id
    }

    pub fn set_binary(&mut self, var: VarId, binary: bool) {
        self.vars[var.0].binary = binary;
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        self.vars[var.0].lower = lower;
        self.vars[var.0].upper = upper;
    }

    pub fn set_objective(&mut self, var: VarId, coeff: f64) {
        self.objective[var.0] = coeff;
    }

    pub fn add_objective(&mut self, var: VarId, coeff: f64) {
        self.objective[var.0] += coeff;
    }

    pub fn set_offset(&mut self, offset: f64) {
        self.offset = offset;
    }

    pub fn add_constraint<I>(
        &mut self,
        name: impl Into<String>,
        coeffs: I,
        relation: Relation,
        rhs: f64,
    ) -> RowId
    where
        I: IntoIterator<Item = (VarId, f64)>,
    {
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (v, a) in coeffs {
            if a == 0.0 {
                continue;
            }
            match merged.iter_mut().find(|(j, _)| *j == v.0) {
                Some(entry) => entry.1 += a,
                None => merged.push((v.0, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        self.rows.push(Constraint {
            name: name.into(),
            coeffs: merged,
            relation,
            rhs,
        });
        RowId(self.rows.len() - 1)
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn row(&self, id: RowId) -> &Constraint {
        &self.rows[id.0]
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn has_binaries(&self) -> bool {
        self.vars.iter().any(|v| v.binary)
    }

    pub fn binaries(&self) -> Vec<VarId> {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.binary)
            .map(|(j, _)| VarId(j))
            .collect()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        for v in &self.vars {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(LpError::InvalidModel(format!(
                    "variable {} has bounds [{}, {}]",
                    v.name, v.lower, v.upper
                )));
            }
            if v.binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(LpError::InvalidModel(format!(
                    "binary variable {} has bounds outside [0, 1]",
                    v.name
                )));
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(LpError::InvalidModel(format!("row {} has rhs {}", r.name, r.rhs)));
            }
            for &(j, a) in &r.coeffs {
                if j >= self.vars.len() {
                    return Err(LpError::InvalidModel(format!(
                        "row {} references undeclared variable {}",
                        r.name, j
                    )));
                }
                if !a.is_finite() {
                    return Err(LpError::InvalidModel(format!("row {} has coefficient {}", r.name, a)));
                }
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) || !self.offset.is_finite() {
            return Err(LpError::InvalidModel("non-finite objective".into()));
        }
        Ok(())
    }

    /// Objective value at `x` (including the constant offset).
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.offset + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    pub fn row_activity(&self, row: RowId, x: &[f64]) -> f64 {
        self.rows[row.0].coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, v) in self.vars.iter().enumerate() {
            worst = worst.max(v.lower - x[j]).max(x[j] - v.upper);
        }
        for (r, row) in self.rows.iter().enumerate() {
            let act = self.row_activity(RowId(r), x);
            let viol = match row.relation {
                Relation::Le => act - row.rhs,
                Relation::Ge => row.rhs - act,
                Relation::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Write the algebraic dump to `$AGRISK_LP_DUMP/<label>.lp` when that
    /// environment variable names a directory. Failures are logged, not fatal.
    pub fn debug_dump(&self, label: &str) {
        let Some(dir) = std::env::var_os("AGRISK_LP_DUMP") else {
            return;
        };
        let path = PathBuf::from(dir).join(format!("{label}.lp"));
        if let Err(err) = std::fs::write(&path, self.to_string()) {
            log::warn!("could not write model dump {}: {err}", path.display());
        }
    }
}

fn write_terms(f: &mut fmt::Formatter<'_>, terms: &[(usize, f64)], vars: &[Variable]) -> fmt::Result {
    if terms.is_empty() {
        return f.write_str("0");
    }
    for (k, &(j, a)) in terms.iter().enumerate() {
        let sign = if a < 0.0 { "-" } else { "+" };
        if k == 0 {
            if a < 0.0 {
                f.write_str("-")?;
            }
        } else {
            write!(f, " {sign} ")?;
        }
        let mag = a.abs();
        if mag == 1.0 {
            write!(f, "{}", vars[j].name)?;
        } else {
            write!(f, "{} {}", mag, vars[j].name)?;
        }
    }
    Ok(())
}

/// Human-readable algebraic form, one constraint per line.
impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<(usize, f64)> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, c)| (j, *c))
            .collect();
        f.write_str(match self.sense {
            Sense::Minimize => "minimize ",
            Sense::Maximize => "maximize ",
        })?;
        write_terms(f, &terms, &self.vars)?;
        if self.offset != 0.0 {
            write!(f, " + {}", self.offset)?;
        }
        writeln!(f)?;
        writeln!(f, "subject to")?;
        for row in &self.rows {
            write!(f, "  {}: ", row.name)?;
            write_terms(f, &row.coeffs, &self.vars)?;
            writeln!(f, " {} {}", row.relation, row.rhs)?;
        }
        writeln!(f, "bounds")?;
        for v in &self.vars {
            let kind = if v.binary { " binary" } else { "" };
            writeln!(f, "  {} <= {} <= {}{}", v.lower, v.name, v.upper, kind)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration budget exhausted before optimality could be certified.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    /// Objective in the model's own sense, offset included. NaN unless optimal.
    pub objective: f64,
    pub values: Vec<f64>,
    /// Row duals (empty for MIP solutions).
    pub duals: Vec<f64>,
    /// Reduced cost per variable, `c_j - sum_r dual_r a_rj` (empty for MIP).
    pub reduced_costs: Vec<f64>,
    /// Dual objective value for LP solutions (NaN for MIP).
    pub dual_objective: f64,
    pub iterations: usize,
    /// Branch-and-bound nodes processed (0 for LP).
    pub nodes: usize,
}

impl Solution {
    pub(crate) fn without_point(status: Status, nvars: usize, nrows: usize) -> Self {
        Self {
            status,
            objective: f64::NAN,
            values: vec![f64::NAN; nvars],
            duals: vec![f64::NAN; nrows],
            reduced_costs: vec![f64::NAN; nvars],
            dual_objective: f64::NAN,
            iterations: 0,
            nodes: 0,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }

    pub fn dual(&self, row: RowId) -> f64 {
        self.duals[row.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_merge_and_drop_zeros() {
        let mut lp = LinearProgram::minimize();
        let x = lp.add_var("x", 0.0, 1.0);
        let y = lp.add_var("y", 0.0, 1.0);
        let r = lp.add_constraint("r", [(x, 1.0), (y, 2.0), (x, 0.5), (y, -2.0)], Relation::Le, 1.0);
        assert_eq!(lp.row(r).coeffs, vec![(0, 1.5)]);
    }

    #[test]
    fn dump_is_one_line_per_constraint() {
        let mut lp = LinearProgram::minimize();
        let s = lp.add_free_var("s");
        let th = lp.add_var("theta_0", 0.0, f64::INFINITY);
        lp.set_objective(s, 0.5);
        lp.set_objective(th, 1.0);
        lp.add_constraint("P_0", [(th, 1.0), (s, 0.25)], Relation::Ge, 0.75);
        lp.add_constraint("cap", [(th, -2.0)], Relation::Le, 3.0);
        let text = lp.to_string();
        assert!(text.starts_with("minimize 0.5 s + theta_0"));
        assert!(text.contains("  P_0: theta_0 + 0.25 s >= 0.75\n"));
        assert!(text.contains("  cap: -2 theta_0 <= 3\n"));
    }

    #[test]
    fn validate_rejects_bad_bounds_and_binaries() {
        let mut lp = LinearProgram::minimize();
        lp.add_var("x", 1.0, 0.0);
        assert!(matches!(lp.validate(), Err(LpError::InvalidModel(_))));

        let mut lp = LinearProgram::minimize();
        let z = lp.add_var("z", 0.0, 2.0);
        lp.set_binary(z, true);
        assert!(lp.validate().is_err());
    }
}
