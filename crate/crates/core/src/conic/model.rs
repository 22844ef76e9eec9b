//! Problem description: symmetric-matrix and scalar variables, affine
//! symmetric-matrix expressions, and a linear objective to minimize.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    /// Unconstrained symmetric matrix.
    Free,
    /// Symmetric positive semidefinite matrix.
    Psd,
    /// Symmetric matrix with nonnegative entries.
    Nonneg,
    /// Unconstrained real number.
    Scalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    /// Matrix side length (1 for scalars).
    pub dim: usize,
    /// Upper-triangle entries `(p, q)`, `p <= q`, that may be nonzero; all
    /// entries when `None`.
    pub support: Option<Vec<(usize, usize)>>,
}

impl Variable {
    /// Number of scalar unknowns.
    pub fn n_entries(&self) -> usize {
        match &self.support {
            Some(s) => s.len(),
            None => self.dim * (self.dim + 1) / 2,
        }
    }

    /// Upper-triangle entries carrying unknowns, in storage order.
    pub fn entries(&self) -> Vec<(usize, usize)> {
        match &self.support {
            Some(s) => s.clone(),
            None => (0..self.dim).flat_map(|p| (p..self.dim).map(move |q| (p, q))).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// `scale * (L X R + (L X R)^T)` for a matrix variable `X`.
    Congruence { var: VarId, left: DMatrix<f64>, right: DMatrix<f64>, scale: f64 },
    /// `x * coef` for a scalar variable `x` and symmetric `coef`.
    Scalar { var: VarId, coef: DMatrix<f64> },
}

impl Term {
    pub fn var(&self) -> VarId {
        match self {
            Term::Congruence { var, .. } | Term::Scalar { var, .. } => *var,
        }
    }
}

/// `constant + sum(terms)`, a symmetric `size x size` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineExpr {
    pub size: usize,
    pub constant: DMatrix<f64>,
    pub terms: Vec<Term>,
}

impl AffineExpr {
    pub fn new(constant: DMatrix<f64>) -> Self {
        let size = constant.nrows();
        AffineExpr { size, constant: symmetrize(&constant), terms: Vec::new() }
    }

    pub fn zeros(size: usize) -> Self {
        AffineExpr::new(DMatrix::zeros(size, size))
    }

    pub fn add_congruence(&mut self, var: VarId, left: DMatrix<f64>, right: DMatrix<f64>, scale: f64) -> &mut Self {
        self.terms.push(Term::Congruence { var, left, right, scale });
        self
    }

    pub fn add_scalar(&mut self, var: VarId, coef: DMatrix<f64>) -> &mut Self {
        self.terms.push(Term::Scalar { var, coef: symmetrize(&coef) });
        self
    }

    /// Value of the expression at the given variable values.
    pub fn evaluate(&self, values: &[DMatrix<f64>]) -> DMatrix<f64> {
        let mut out = self.constant.clone();
        for term in &self.terms {
            match term {
                Term::Congruence { var, left, right, scale } => {
                    let lxr = left * &values[var.0] * right;
                    out += (&lxr + lxr.transpose()) * *scale;
                }
                Term::Scalar { var, coef } => out += coef * values[var.0][(0, 0)],
            }
        }
        out
    }
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// Expression is negative semidefinite.
    Nsd,
    /// Expression vanishes.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub expr: AffineExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveTerm {
    pub var: VarId,
    /// Contributes `trace(coef * X)`; `1 x 1` for scalars.
    pub coef: DMatrix<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProblem {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<ObjectiveTerm>,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, dim: usize) -> VarId {
        let dim = if kind == VarKind::Scalar { 1 } else { dim };
        self.variables.push(Variable { name: name.into(), kind, dim, support: None });
        VarId(self.variables.len() - 1)
    }

    /// A symmetric matrix variable whose entries outside `support` (and its
    /// mirror) are fixed at zero.
    pub fn add_sparse_var(&mut self, name: impl Into<String>, kind: VarKind, dim: usize, support: Vec<(usize, usize)>) -> VarId {
        self.variables.push(Variable { name: name.into(), kind, dim, support: Some(support) });
        VarId(self.variables.len() - 1)
    }

    pub fn add_scalar(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, VarKind::Scalar, 1)
    }

    pub fn add_nsd(&mut self, expr: AffineExpr) {
        self.constraints.push(Constraint { kind: ConstraintKind::Nsd, expr });
    }

    pub fn add_zero(&mut self, expr: AffineExpr) {
        self.constraints.push(Constraint { kind: ConstraintKind::Zero, expr });
    }

    /// Add `weight * x` to the objective for a scalar `x`.
    pub fn minimize_scalar(&mut self, var: VarId, weight: f64) {
        self.objective.push(ObjectiveTerm { var, coef: DMatrix::from_element(1, 1, weight) });
    }

    /// Add `trace(coef * X)` to the objective.
    pub fn minimize_trace(&mut self, var: VarId, coef: DMatrix<f64>) {
        self.objective.push(ObjectiveTerm { var, coef: symmetrize(&coef) });
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    /// Check shapes and variable references of every expression.
    pub fn validate(&self) -> Result<()> {
        let var_ok = |id: VarId| id.0 < self.variables.len();
        for (k, c) in self.constraints.iter().enumerate() {
            let e = &c.expr;
            if e.constant.shape() != (e.size, e.size) {
                return Err(Error::DimensionMismatch(format!("constraint {k}: constant is not {0}x{0}", e.size)));
            }
            for t in &e.terms {
                if !var_ok(t.var()) {
                    return Err(Error::InvalidArgument(format!("constraint {k}: unknown variable")));
                }
                let v = &self.variables[t.var().0];
                match t {
                    Term::Congruence { left, right, .. } => {
                        if v.kind == VarKind::Scalar {
                            return Err(Error::InvalidArgument(format!("constraint {k}: congruence on scalar {}", v.name)));
                        }
                        if left.shape() != (e.size, v.dim) || right.shape() != (v.dim, e.size) {
                            return Err(Error::DimensionMismatch(format!(
                                "constraint {k}: factors of {} have shapes {:?}, {:?}",
                                v.name,
                                left.shape(),
                                right.shape()
                            )));
                        }
                    }
                    Term::Scalar { coef, .. } => {
                        if v.kind != VarKind::Scalar {
                            return Err(Error::InvalidArgument(format!("constraint {k}: {} is not a scalar", v.name)));
                        }
                        if coef.shape() != (e.size, e.size) {
                            return Err(Error::DimensionMismatch(format!("constraint {k}: coefficient of {}", v.name)));
                        }
                    }
                }
            }
        }
        for v in &self.variables {
            if let Some(sup) = &v.support {
                if matches!(v.kind, VarKind::Psd | VarKind::Scalar) {
                    return Err(Error::InvalidArgument(format!("{}: support needs a Free or Nonneg variable", v.name)));
                }
                let mut seen = std::collections::HashSet::new();
                if sup.iter().any(|&(p, q)| p > q || q >= v.dim || !seen.insert((p, q))) {
                    return Err(Error::InvalidArgument(format!("{}: bad support entry", v.name)));
                }
            }
        }
        for o in &self.objective {
            if !var_ok(o.var) {
                return Err(Error::InvalidArgument("objective references an unknown variable".into()));
            }
            let d = self.variables[o.var.0].dim;
            if o.coef.shape() != (d, d) {
                return Err(Error::DimensionMismatch("objective coefficient shape".into()));
            }
        }
        Ok(())
    }
}
