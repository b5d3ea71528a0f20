//! Solver-agnostic linear model.
//!
//! Variables and constraints are named `<family>[<indices>]`, for example
//! `v[2,7]`, `z[1,7]`, `EB[3,7]` or `theta`. The objective is always maximized.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

/// Format a model name as `family[i,j,...]`.
pub fn name(family: &str, idx: &[usize]) -> String {
    if idx.is_empty() {
        return family.to_string();
    }
    let mut s = String::with_capacity(family.len() + 4 * idx.len() + 2);
    s.push_str(family);
    s.push('[');
    for (k, i) in idx.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        let _ = write!(s, "{i}");
    }
    s.push(']');
    s
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ModelIR {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Linear objective, maximized.
    pub objective: Vec<(usize, f64)>,
    #[serde(skip)]
    var_index: HashMap<String, usize>,
    #[serde(skip)]
    con_index: HashMap<String, usize>,
}

impl ModelIR {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: String, lower: f64, upper: f64) -> usize {
        self.push_var(name, lower, upper, false)
    }

    pub fn add_binary(&mut self, name: String) -> usize {
        self.push_var(name, 0.0, 1.0, true)
    }

    fn push_var(&mut self, name: String, lower: f64, upper: f64, integer: bool) -> usize {
        let id = self.variables.len();
        let prev = self.var_index.insert(name.clone(), id);
        debug_assert!(prev.is_none(), "duplicate variable {name}");
        self.variables.push(Variable {
            name,
            lower,
            upper,
            integer,
        });
        id
    }

    /// Add a row; repeated variables in `terms` are merged and exact zeros dropped.
    pub fn add_constraint(
        &mut self,
        name: String,
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        let id = self.constraints.len();
        let prev = self.con_index.insert(name.clone(), id);
        debug_assert!(prev.is_none(), "duplicate constraint {name}");
        self.constraints.push(Constraint {
            name,
            terms: merge_terms(terms),
            sense,
            rhs,
        });
        id
    }

    pub fn set_objective(&mut self, terms: Vec<(usize, f64)>) {
        self.objective = merge_terms(terms);
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_integer(&self) -> usize {
        self.variables.iter().filter(|v| v.integer).count()
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.var_index.get(name).copied()
    }

    pub fn constraint(&self, name: &str) -> Option<usize> {
        self.con_index.get(name).copied()
    }

    pub fn require_var(&self, name: &str) -> Result<usize> {
        self.var(name).ok_or_else(|| Error::UnknownName(name.to_string()))
    }

    pub fn require_constraint(&self, name: &str) -> Result<usize> {
        self.constraint(name)
            .ok_or_else(|| Error::UnknownName(name.to_string()))
    }

    /// Columns of all variables belonging to `family` (the part before `[`).
    pub fn family(&self, family: &str) -> Vec<usize> {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| family_of(&v.name) == family)
            .map(|(i, _)| i)
            .collect()
    }

    /// Rows of all constraints belonging to `family`.
    pub fn row_family(&self, family: &str) -> Vec<usize> {
        self.constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| family_of(&c.name) == family)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn set_integer(&mut self, var: usize, integer: bool) {
        self.variables[var].integer = integer;
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.variables[var].lower = lower;
        self.variables[var].upper = upper;
    }

    /// Rebuild name lookups, e.g. after deserializing.
    pub fn reindex(&mut self) {
        self.var_index = self
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect();
        self.con_index = self
            .constraints
            .iter()
            .enumerate()
            .map(|(i, c)| (c.name.clone(), i))
            .collect();
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, c)| c * x[j]).sum()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (v, &xj) in self.variables.iter().zip(x) {
            worst = worst.max(v.lower - xj).max(xj - v.upper);
        }
        for c in &self.constraints {
            worst = worst.max(c.violation(x));
        }
        worst
    }

    /// Check structural invariants: ordered bounds, valid references, unique names.
    pub fn check(&self) -> Result<()> {
        let n = self.variables.len();
        let mut seen = std::collections::HashSet::new();
        for v in &self.variables {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(Error::domain(format!("variable {} has bounds [{}, {}]", v.name, v.lower, v.upper)));
            }
            if !seen.insert(v.name.as_str()) {
                return Err(Error::domain(format!("duplicate variable name {}", v.name)));
            }
        }
        seen.clear();
        for c in &self.constraints {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::domain(format!("duplicate constraint name {}", c.name)));
            }
            if !c.rhs.is_finite() {
                return Err(Error::domain(format!("constraint {} has non-finite rhs", c.name)));
            }
            if c.terms.iter().any(|&(j, a)| j >= n || !a.is_finite()) {
                return Err(Error::domain(format!("constraint {} references an invalid term", c.name)));
            }
        }
        if self.objective.iter().any(|&(j, _)| j >= n) {
            return Err(Error::domain("objective references an unknown variable"));
        }
        Ok(())
    }

    /// Render in CPLEX LP text format. Brackets in names become parentheses
    /// because `[` is reserved by the format.
    pub fn to_lp_text(&self) -> String {
        let mut out = String::new();
        let nm = |s: &str| s.replace('[', "(").replace(']', ")");
        let term = |out: &mut String, first: bool, coef: f64, var: &str| {
            if coef < 0.0 {
                let _ = write!(out, " - {} {}", -coef, var);
            } else if first {
                let _ = write!(out, " {coef} {var}");
            } else {
                let _ = write!(out, " + {coef} {var}");
            }
        };
        out.push_str("\\ gridforge deterministic equivalent\n");
        out.push_str("Maximize\n obj:");
        if self.objective.is_empty() {
            out.push_str(" 0");
        }
        for (k, &(j, c)) in self.objective.iter().enumerate() {
            term(&mut out, k == 0, c, &nm(&self.variables[j].name));
        }
        out.push_str("\nSubject To\n");
        for c in &self.constraints {
            let _ = write!(out, " {}:", nm(&c.name));
            if c.terms.is_empty() {
                out.push_str(" 0");
            }
            for (k, &(j, a)) in c.terms.iter().enumerate() {
                term(&mut out, k == 0, a, &nm(&self.variables[j].name));
            }
            let op = match c.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", c.rhs);
        }
        out.push_str("Bounds\n");
        for v in &self.variables {
            let name = nm(&v.name);
            match (v.lower.is_finite(), v.upper.is_finite()) {
                (true, true) if v.lower == v.upper => {
                    let _ = writeln!(out, " {name} = {}", v.lower);
                }
                (true, true) => {
                    let _ = writeln!(out, " {} <= {name} <= {}", v.lower, v.upper);
                }
                (true, false) => {
                    let _ = writeln!(out, " {name} >= {}", v.lower);
                }
                (false, true) => {
                    let _ = writeln!(out, " -inf <= {name} <= {}", v.upper);
                }
                (false, false) => {
                    let _ = writeln!(out, " {name} free");
                }
            }
        }
        let ints: Vec<String> = self
            .variables
            .iter()
            .filter(|v| v.integer)
            .map(|v| nm(&v.name))
            .collect();
        if !ints.is_empty() {
            out.push_str("Binaries\n");
            for chunk in ints.chunks(8) {
                let _ = writeln!(out, " {}", chunk.join(" "));
            }
        }
        out.push_str("End\n");
        out
    }
}

pub(crate) fn family_of(name: &str) -> &str {
    name.split('[').next().unwrap_or(name)
}

fn merge_terms(mut terms: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    terms.sort_by_key(|&(j, _)| j);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for (j, a) in terms {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    out
}
