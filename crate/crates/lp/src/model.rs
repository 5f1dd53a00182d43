use std::collections::HashSet;
use std::fmt;

use crate::Error;

/// Direction of optimization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// Comparison operator of a constraint row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for RowSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowSense::Le => "<=",
            RowSense::Eq => "=",
            RowSense::Ge => ">=",
        })
    }
}

/// Column of the model.
#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
}

/// Sparse constraint row. Coefficients reference variables by index.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coefficients: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// Handle to a variable added through [`LpModel::add_var`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub usize);

/// Handle to a constraint added through [`LpModel::add_row`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Row(pub usize);

/// A linear program in row form:
///
/// ```text
/// max/min  c'x + offset
/// s.t.     a_i'x  (<=, =, >=)  b_i
///          l <= x <= u
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct LpModel {
    pub name: String,
    pub sense: Sense,
    /// Constant added to the objective value. Not seen by the solver.
    pub objective_offset: f64,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl LpModel {
    pub fn new(name: impl Into<String>, sense: Sense) -> Self {
        LpModel {
            name: name.into(),
            sense,
            objective_offset: 0.0,
            variables: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        objective: f64,
    ) -> Var {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            objective,
        });
        Var(self.variables.len() - 1)
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coefficients: impl IntoIterator<Item = (Var, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> Row {
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (v, a) in coefficients {
            match merged.iter_mut().find(|(j, _)| *j == v.0) {
                Some(entry) => entry.1 += a,
                None => merged.push((v.0, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        let coefficients = merged;
        self.constraints.push(Constraint {
            name: name.into(),
            coefficients,
            sense,
            rhs,
        });
        Row(self.constraints.len() - 1)
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_nonzeros(&self) -> usize {
        self.constraints.iter().map(|c| c.coefficients.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty() && self.constraints.is_empty()
    }

    /// Objective value of `x` including the constant offset.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset
            + self
                .variables
                .iter()
                .zip(x)
                .map(|(v, &xi)| v.objective * xi)
                .sum::<f64>()
    }

    /// Left-hand side value of every row at `x`.
    pub fn row_activities(&self, x: &[f64]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| c.coefficients.iter().map(|&(j, a)| a * x[j]).sum())
            .collect()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (c, act) in self.constraints.iter().zip(self.row_activities(x)) {
            let v = match c.sense {
                RowSense::Le => act - c.rhs,
                RowSense::Ge => c.rhs - act,
                RowSense::Eq => (act - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (v, &xi) in self.variables.iter().zip(x) {
            worst = worst.max(v.lower - xi).max(xi - v.upper);
        }
        worst
    }

    /// Checks the structural invariants: unique variable names, coefficients
    /// referencing declared variables at most once per row, finite
    /// right-hand sides and consistent bounds.
    pub fn validate(&self) -> Result<(), Error> {
        let mut seen = HashSet::with_capacity(self.variables.len());
        for v in &self.variables {
            if !seen.insert(v.name.as_str()) {
                return Err(Error::InvalidModel(format!(
                    "duplicate variable name `{}`",
                    v.name
                )));
            }
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(Error::InvalidModel(format!(
                    "variable `{}` has bounds [{}, {}]",
                    v.name, v.lower, v.upper
                )));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(Error::InvalidModel(format!(
                    "variable `{}` has an empty domain",
                    v.name
                )));
            }
            if !v.objective.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "variable `{}` has a non-finite objective coefficient",
                    v.name
                )));
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "row `{}` has a non-finite right-hand side",
                    c.name
                )));
            }
            let mut cols = HashSet::with_capacity(c.coefficients.len());
            for &(j, a) in &c.coefficients {
                if !cols.insert(j) {
                    return Err(Error::InvalidModel(format!(
                        "row `{}` references variable {} twice",
                        c.name, j
                    )));
                }
                if j >= self.variables.len() {
                    return Err(Error::InvalidModel(format!(
                        "row `{}` references undeclared variable {}",
                        c.name, j
                    )));
                }
                if !a.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "row `{}` has a non-finite coefficient",
                        c.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }
}
