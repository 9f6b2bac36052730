use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use super::LpError;

/// Handle to a variable inside one [`LpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Affine expression `Σ coeff·var + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(Var, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(v: Var) -> Self {
        Self::term(v, 1.0)
    }

    pub fn term(v: Var, coeff: f64) -> Self {
        Self { terms: vec![(v, coeff)], constant: 0.0 }
    }

    pub fn add_term(&mut self, v: Var, coeff: f64) {
        self.terms.push((v, coeff));
    }

    pub fn add_scaled(&mut self, other: &LinExpr, scale: f64) {
        self.terms.extend(other.terms.iter().map(|&(v, c)| (v, c * scale)));
        self.constant += other.constant * scale;
    }

    pub fn scaled(&self, s: f64) -> LinExpr {
        LinExpr { terms: self.terms.iter().map(|&(v, c)| (v, c * s)).collect(), constant: self.constant * s }
    }

    /// No variable carries a nonzero coefficient.
    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|&(_, c)| c == 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.is_constant() && self.constant == 0.0
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v.0]).sum::<f64>() + self.constant
    }

    /// Merge duplicate variables (first-appearance order) and drop exact zeros.
    pub fn normalized(&self) -> LinExpr {
        let mut order: Vec<Var> = Vec::new();
        let mut acc: HashMap<Var, f64> = HashMap::new();
        for &(v, c) in &self.terms {
            match acc.get_mut(&v) {
                Some(x) => *x += c,
                None => {
                    order.push(v);
                    acc.insert(v, c);
                }
            }
        }
        let terms = order
            .into_iter()
            .filter_map(|v| {
                let c = acc[&v];
                (c != 0.0).then_some((v, c))
            })
            .collect();
        LinExpr { terms, constant: self.constant }
    }
}

impl From<Var> for LinExpr {
    fn from(v: Var) -> Self {
        LinExpr::var(v)
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl AddAssign<&LinExpr> for LinExpr {
    fn add_assign(&mut self, rhs: &LinExpr) {
        self.add_scaled(rhs, 1.0);
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, 1.0);
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, -1.0);
        self
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(self, rhs: f64) -> LinExpr {
        self.scaled(rhs)
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scaled(-1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
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

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub obj: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(Var, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, c)| c * x[v.0]).sum()
    }

    /// Positive amount by which `x` violates this row.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            RowSense::Le => (a - self.rhs).max(0.0),
            RowSense::Ge => (self.rhs - a).max(0.0),
            RowSense::Eq => (a - self.rhs).abs(),
        }
    }
}

/// Minimisation LP in insertion order. Built through [`LpBuilder`]; immutable afterwards.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpModel {
    pub(crate) variables: Vec<Variable>,
    pub(crate) rows: Vec<Row>,
    pub(crate) objective_offset: f64,
}

impl LpModel {
    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective_offset(&self) -> f64 {
        self.objective_offset
    }

    pub fn var_by_name(&self, name: &str) -> Option<Var> {
        self.variables.iter().position(|v| v.name == name).map(Var)
    }

    pub fn nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.coeffs.len()).sum()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.variables.iter().zip(x).map(|(v, xi)| v.obj * xi).sum::<f64>() + self.objective_offset
    }

    /// Largest row or bound violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x)).fold(0.0, f64::max);
        let bounds = self.variables.iter().zip(x).map(|(v, &xi)| (v.lower - xi).max(xi - v.upper).max(0.0)).fold(0.0, f64::max);
        rows.max(bounds)
    }
}

/// Single-threaded incremental LP builder.
#[derive(Debug, Default)]
pub struct LpBuilder {
    model: LpModel,
    var_names: HashMap<String, Var>,
    row_names: HashSet<String>,
}

impl LpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.model.variables.len()
    }

    pub fn num_rows(&self) -> usize {
        self.model.rows.len()
    }

    pub fn add_variable(&mut self, name: impl Into<String>, lower: f64, upper: f64, obj: f64) -> Result<Var, LpError> {
        let name = name.into();
        if self.var_names.contains_key(&name) {
            return Err(LpError::DuplicateName(name));
        }
        check_name(&name)?;
        if lower.is_nan() || upper.is_nan() || lower > upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(LpError::InvalidBounds { name, lower, upper });
        }
        if !obj.is_finite() {
            return Err(LpError::NonFinite(format!("objective coefficient of {name}")));
        }
        let v = Var(self.model.variables.len());
        self.var_names.insert(name.clone(), v);
        self.model.variables.push(Variable { name, lower, upper, obj });
        Ok(v)
    }

    pub fn free_variable(&mut self, name: impl Into<String>) -> Result<Var, LpError> {
        self.add_variable(name, f64::NEG_INFINITY, f64::INFINITY, 0.0)
    }

    pub fn set_bounds(&mut self, v: Var, lower: f64, upper: f64) -> Result<(), LpError> {
        let var = &mut self.model.variables[v.0];
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(LpError::InvalidBounds { name: var.name.clone(), lower, upper });
        }
        var.lower = lower;
        var.upper = upper;
        Ok(())
    }

    /// Add `expr` to the objective; its constant goes to the objective offset.
    pub fn add_objective(&mut self, expr: &LinExpr) -> Result<(), LpError> {
        for &(v, c) in &expr.terms {
            if !c.is_finite() {
                return Err(LpError::NonFinite("objective".into()));
            }
            self.var(v)?;
            self.model.variables[v.0].obj += c;
        }
        if !expr.constant.is_finite() {
            return Err(LpError::NonFinite("objective offset".into()));
        }
        self.model.objective_offset += expr.constant;
        Ok(())
    }

    /// Add `expr (sense) rhs`. The constant part of `expr` is moved to the right-hand side.
    pub fn add_row(&mut self, name: impl Into<String>, expr: &LinExpr, sense: RowSense, rhs: f64) -> Result<usize, LpError> {
        let name = name.into();
        if self.row_names.contains(&name) {
            return Err(LpError::DuplicateName(name));
        }
        check_name(&name)?;
        let expr = expr.normalized();
        for &(v, c) in &expr.terms {
            self.var(v)?;
            if !c.is_finite() {
                return Err(LpError::NonFinite(format!("coefficient in row {name}")));
            }
        }
        let rhs = rhs - expr.constant;
        if !rhs.is_finite() {
            return Err(LpError::NonFinite(format!("right-hand side of row {name}")));
        }
        self.row_names.insert(name.clone());
        self.model.rows.push(Row { name, coeffs: expr.terms, sense, rhs });
        Ok(self.model.rows.len() - 1)
    }

    fn var(&self, v: Var) -> Result<&Variable, LpError> {
        self.model.variables.get(v.0).ok_or(LpError::UnknownVariable(v.0))
    }

    pub fn finish(self) -> LpModel {
        self.model
    }
}

fn check_name(name: &str) -> Result<(), LpError> {
    let ok = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit() || c == '.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || "_.[]".contains(c));
    if ok {
        Ok(())
    } else {
        Err(LpError::InvalidName(name.to_string()))
    }
}
