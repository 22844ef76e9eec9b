//! Lowering of a [`ConicProblem`] to block data
//! `max b'y  s.t.  C - sum_i y_i A_i >= 0 (block-diagonal),  E y = f`.
//!
//! Every scalar unknown `y_i` is an upper-triangle entry of some variable,
//! with `X = sum y_pq E_pq` and `E_pq = e_p e_q' + e_q e_p'` off the diagonal.
//! Each `A_i` restricted to a PSD block is kept in factored form
//! `sum_s c_s (d_a d_b' + d_b d_a')` over a per-block dictionary of vectors
//! `d_k` whose leading columns are the unit vectors.

use nalgebra::{DMatrix, DVector};

use super::model::{ConicProblem, ConstraintKind, Term, VarId, VarKind};
use crate::error::{Error, Result};

/// `(a, b, c)` stands for `c * (d_a d_b' + d_b d_a')`.
pub(crate) type Rank2 = (usize, usize, f64);

#[derive(Debug, Clone)]
pub(crate) struct PsdBlock {
    pub dim: usize,
    /// `C` restricted to this block.
    pub c: DMatrix<f64>,
    /// Dictionary, `dim x K`.
    pub dict: DMatrix<f64>,
    /// Global indices of the unknowns that appear in this block, ascending.
    pub vars: Vec<usize>,
    /// Factored `A_i` for each entry of `vars`.
    pub terms: Vec<Vec<Rank2>>,
}

impl PsdBlock {
    /// Dense `A_i` for the `k`-th local unknown.
    pub fn dense(&self, k: usize) -> DMatrix<f64> {
        let mut t = DMatrix::zeros(self.dict.ncols(), self.dict.ncols());
        for &(a, b, c) in &self.terms[k] {
            t[(a, b)] += c;
            t[(b, a)] += c;
        }
        &self.dict * t * self.dict.transpose()
    }
}

/// Scalar inequalities `c_k - a_k' y >= 0`.
#[derive(Debug, Clone, Default)]
pub(crate) struct LpBlock {
    pub c: Vec<f64>,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl LpBlock {
    pub fn len(&self) -> usize {
        self.c.len()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    /// Number of scalar unknowns.
    pub m: usize,
    pub b: DVector<f64>,
    pub psd: Vec<PsdBlock>,
    pub lp: LpBlock,
    pub eq_rows: Vec<Vec<(usize, f64)>>,
    pub eq_rhs: Vec<f64>,
    pub offsets: Vec<usize>,
}

pub(crate) fn layout(problem: &ConicProblem) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(problem.variables.len());
    let mut m = 0;
    for v in &problem.variables {
        offsets.push(m);
        m += v.n_entries();
    }
    (offsets, m)
}

struct DictBuilder {
    dim: usize,
    extra: Vec<DVector<f64>>,
}

impl DictBuilder {
    /// Returns the dictionary index and the scale folded out of `v`.
    fn intern(&mut self, v: DVector<f64>) -> Option<(usize, f64)> {
        let mut nz = v.iter().enumerate().filter(|(_, x)| **x != 0.0);
        let (r, s) = nz.next()?;
        let s = *s;
        if nz.next().is_none() {
            return Some((r, s));
        }
        self.extra.push(v);
        Some((self.dim + self.extra.len() - 1, 1.0))
    }

    fn finish(self) -> DMatrix<f64> {
        let k = self.dim + self.extra.len();
        let mut d = DMatrix::zeros(self.dim, k);
        d.view_mut((0, 0), (self.dim, self.dim)).fill_with_identity();
        for (j, v) in self.extra.iter().enumerate() {
            d.column_mut(self.dim + j).copy_from(v);
        }
        d
    }
}

/// Factored form of `F_i` for every unknown in `terms`, over a fresh dictionary.
fn factor_terms(
    problem: &ConicProblem,
    offsets: &[usize],
    size: usize,
    terms: &[Term],
) -> (DMatrix<f64>, Vec<usize>, Vec<Vec<Rank2>>) {
    let mut dict = DictBuilder { dim: size, extra: Vec::new() };
    let mut by_var: std::collections::BTreeMap<usize, Vec<Rank2>> = Default::default();
    for term in terms {
        match term {
            Term::Congruence { var, left, right, scale } => {
                let v = problem.variable(*var);
                let cols: Vec<_> = (0..v.dim).map(|p| dict.intern(left.column(p).into_owned())).collect();
                let rows: Vec<_> = (0..v.dim).map(|q| dict.intern(right.row(q).transpose())).collect();
                for (k, (p, q)) in v.entries().into_iter().enumerate() {
                    let entry = by_var.entry(offsets[var.0] + k).or_default();
                    let pairs: &[(usize, usize)] = if p == q { &[(p, p)] } else { &[(p, q), (q, p)] };
                    for &(i, j) in pairs {
                        if let (Some((a, sa)), Some((b, sb))) = (cols[i], rows[j]) {
                            entry.push((a, b, scale * sa * sb));
                        }
                    }
                }
            }
            Term::Scalar { var, coef } => {
                let idx = offsets[var.0];
                let entry = by_var.entry(idx).or_default();
                for i in 0..size {
                    for j in i..size {
                        let c = coef[(i, j)];
                        if c != 0.0 {
                            entry.push((i, j, if i == j { 0.5 * c } else { c }));
                        }
                    }
                }
            }
        }
    }
    by_var.retain(|_, t| !t.is_empty());
    let (vars, terms): (Vec<_>, Vec<_>) = by_var.into_iter().unzip();
    (dict.finish(), vars, terms)
}

/// One `F0 + sum y_i F_i` per constraint (and per PSD variable cone), as
/// `(kind, block)` with `block.c = -F0` and the factored `F_i`.
pub(crate) fn raw_blocks(problem: &ConicProblem, offsets: &[usize]) -> Vec<(ConstraintKind, PsdBlock)> {
    let mut out = Vec::new();
    for con in &problem.constraints {
        let e = &con.expr;
        let (dict, vars, terms) = factor_terms(problem, offsets, e.size, &e.terms);
        out.push((con.kind, PsdBlock { dim: e.size, c: -&e.constant, dict, vars, terms }));
    }
    for (i, v) in problem.variables.iter().enumerate() {
        if v.kind == VarKind::Psd {
            let eye = DMatrix::identity(v.dim, v.dim);
            let term = Term::Congruence { var: VarId(i), left: eye.clone(), right: eye, scale: -0.5 };
            let (dict, vars, terms) = factor_terms(problem, offsets, v.dim, std::slice::from_ref(&term));
            out.push((ConstraintKind::Nsd, PsdBlock { dim: v.dim, c: DMatrix::zeros(v.dim, v.dim), dict, vars, terms }));
        }
    }
    out
}

pub(crate) fn compile(problem: &ConicProblem) -> Result<Compiled> {
    problem.validate()?;
    let (offsets, m) = layout(problem);

    let mut b = DVector::zeros(m);
    for o in &problem.objective {
        let v = problem.variable(o.var);
        for (k, (p, q)) in v.entries().into_iter().enumerate() {
            let w = if p == q { o.coef[(p, p)] } else { 2.0 * o.coef[(p, q)] };
            b[offsets[o.var.0] + k] -= w;
        }
    }

    let mut psd = Vec::new();
    let mut lp = LpBlock::default();
    let mut eq_rows = Vec::new();
    let mut eq_rhs = Vec::new();
    for (kind, block) in raw_blocks(problem, &offsets) {
        match kind {
            ConstraintKind::Nsd if block.dim > 1 => psd.push(block),
            ConstraintKind::Nsd => {
                let row: Vec<(usize, f64)> = (0..block.vars.len())
                    .map(|k| (block.vars[k], block.dense(k)[(0, 0)]))
                    .filter(|e| e.1 != 0.0)
                    .collect();
                lp.c.push(block.c[(0, 0)]);
                lp.rows.push(row);
            }
            ConstraintKind::Zero => {
                let dense: Vec<DMatrix<f64>> = (0..block.vars.len()).map(|k| block.dense(k)).collect();
                for r in 0..block.dim {
                    for s in r..block.dim {
                        let row: Vec<(usize, f64)> = dense
                            .iter()
                            .enumerate()
                            .map(|(k, f)| (block.vars[k], f[(r, s)]))
                            .filter(|e| e.1.abs() > 1e-300)
                            .collect();
                        let rhs = block.c[(r, s)];
                        if row.is_empty() {
                            if rhs.abs() > 1e-12 {
                                return Err(Error::Infeasible);
                            }
                            continue;
                        }
                        eq_rows.push(row);
                        eq_rhs.push(rhs);
                    }
                }
            }
        }
    }
    for (i, v) in problem.variables.iter().enumerate() {
        if v.kind == VarKind::Nonneg {
            for k in 0..v.n_entries() {
                lp.c.push(0.0);
                lp.rows.push(vec![(offsets[i] + k, -1.0)]);
            }
        }
    }
    Ok(Compiled { m, b, psd, lp, eq_rows, eq_rhs, offsets })
}

/// Rebuild variable values from the flat vector of unknowns.
pub(crate) fn unflatten(problem: &ConicProblem, offsets: &[usize], y: &DVector<f64>) -> Vec<DMatrix<f64>> {
    problem
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut x = DMatrix::zeros(v.dim, v.dim);
            for (k, (p, q)) in v.entries().into_iter().enumerate() {
                let val = y[offsets[i] + k];
                x[(p, q)] = val;
                x[(q, p)] = val;
            }
            x
        })
        .collect()
}
