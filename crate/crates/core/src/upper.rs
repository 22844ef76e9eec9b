//! Upper bounds on the L2+ induced norm from a copositive multiplier.
//!
//! For the augmented system `(A_a, B_a, C_a, D_a)` the bound `gamma` holds
//! whenever some symmetric `P_a` and a multiplier `Q = S + M` (`S` PSD, `M`
//! entrywise nonnegative) satisfy
//!
//! ```text
//! [P A + A'P + C'C   P B + C'D  ]   [0 0]
//! [      *          D'D - t I   ] + [0 Q] <= 0,     t = gamma^2,
//! ```
//!
//! with `Q` acting on the nonnegative signal `[x_p; w]`. Since `S >= 0` can
//! only tighten the inequality, the default multiplier drops it.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::conic::{solve_with_retry, AffineExpr, ConicProblem, SolverOptions, SolverStatus, VarId, VarKind};
use crate::error::{Error, Result};
use crate::filter::{augment, build_filter, AugmentedSystem};
use crate::hinf::{hinf_norm, is_negligible};
use crate::linalg::{hstack, lyapunov, sigma_max_real, sym_max_eig, sym_min_eig, vstack};
use crate::lti::StateSpace;

/// Default filter poles swept by [`sweep`].
pub const DEFAULT_ALPHAS: [f64; 3] = [-0.8, -1.0, -1.2];
pub const DEFAULT_MAX_DEGREE: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Multiplier {
    /// No multiplier: the bounded-real lemma, which yields `||G||_2`.
    None,
    /// Entrywise nonnegative `M` only.
    Nonneg,
    /// `S + M` with `S` PSD and `M` nonnegative.
    PsdPlusNonneg,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperOptions {
    pub solver: SolverOptions,
    pub multiplier: Multiplier,
}

impl Default for UpperOptions {
    fn default() -> Self {
        UpperOptions { solver: SolverOptions::default(), multiplier: Multiplier::Nonneg }
    }
}

/// Handles to the variables of an assembled LMI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmiVars {
    pub p: VarId,
    pub s: Option<VarId>,
    pub m: Option<VarId>,
    pub t: VarId,
    /// The `C`, `D` data were multiplied by this factor.
    pub scale: f64,
}

/// Feasible point of the LMI, in unscaled units.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub p: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub m: DMatrix<f64>,
    /// `gamma^2`.
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    /// Largest eigenvalue of the LMI expression (should be `<= 0`).
    pub lmi_max_eig: f64,
    /// Smallest eigenvalue of `S` (should be `>= 0`).
    pub s_min_eig: f64,
    /// Smallest entry of `M` (should be `>= 0`).
    pub m_min_entry: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpperBoundResult {
    pub alpha: f64,
    pub degree: usize,
    /// Certified bound; `+inf` when the cell failed.
    pub gamma: f64,
    pub status: SolverStatus,
    /// Duality gap reported by the solver, in units of `gamma^2`.
    pub objective_gap: f64,
    pub certificate: Option<Certificate>,
}

impl UpperBoundResult {
    pub fn is_ok(&self) -> bool {
        matches!(self.status, SolverStatus::Optimal | SolverStatus::NearOptimal) && self.gamma.is_finite()
    }

    /// The cell for a system whose gain is at rounding level: `||G||_2`
    /// itself bounds the L2+ norm and the LMI is too degenerate to solve.
    fn negligible(alpha: f64, degree: usize, norm: f64) -> Self {
        UpperBoundResult {
            alpha,
            degree,
            gamma: norm * (1.0 + 1e-6),
            status: SolverStatus::Optimal,
            objective_gap: 0.0,
            certificate: None,
        }
    }

    fn failed(alpha: f64, degree: usize, err: &Error) -> Self {
        let status = match err {
            Error::Infeasible => SolverStatus::Infeasible,
            _ => SolverStatus::NumericalFailure,
        };
        UpperBoundResult { alpha, degree, gamma: f64::INFINITY, status, objective_gap: f64::NAN, certificate: None }
    }
}

/// Selector placing the multiplier on the trailing `[x_p; w]` block.
fn selector(aug: &AugmentedSystem) -> DMatrix<f64> {
    let size = aug.n_a() + aug.n_w;
    let k = aug.n_nonneg();
    DMatrix::from_fn(size, k, |r, c| if r == aug.n + c { 1.0 } else { 0.0 })
}

/// Entries of `M` that are not redundant: those coupling a filter state or
/// an input with an input. A nonnegative diagonal only adds a PSD term, and
/// the filter-filter block can be moved into `P` by a Lyapunov shift that
/// only raises the filter-input entries.
pub fn multiplier_support(aug: &AugmentedSystem) -> Vec<(usize, usize)> {
    let k = aug.n_nonneg();
    (0..k).flat_map(|p| (p + 1..k).filter(|&q| q >= aug.n_p).map(move |q| (p, q))).collect()
}

/// Build the LMI for `aug` with `C`, `D` multiplied by `scale`.
pub fn assemble_lmi(aug: &AugmentedSystem, multiplier: Multiplier, scale: f64) -> (ConicProblem, LmiVars) {
    let na = aug.n_a();
    let nw = aug.n_w;
    let size = na + nw;
    let cd = hstack(&(&aug.c * scale), &(&aug.d * scale));
    let mut expr = AffineExpr::new(cd.transpose() * &cd);

    let mut prob = ConicProblem::new();
    let p = prob.add_var("P_a", VarKind::Free, na);
    let t = prob.add_scalar("t");
    let left = vstack(&DMatrix::identity(na, na), &DMatrix::zeros(nw, na));
    let right = hstack(&aug.a, &aug.b);
    expr.add_congruence(p, left, right, 1.0);
    let mut tcoef = DMatrix::zeros(size, size);
    for i in na..size {
        tcoef[(i, i)] = -1.0;
    }
    expr.add_scalar(t, tcoef);

    let sel = selector(aug);
    let k = aug.n_nonneg();
    let (mut s, mut m) = (None, None);
    if multiplier != Multiplier::None {
        let mv = prob.add_sparse_var("M", VarKind::Nonneg, k, multiplier_support(aug));
        expr.add_congruence(mv, sel.clone(), sel.transpose(), 0.5);
        m = Some(mv);
    }
    if multiplier == Multiplier::PsdPlusNonneg {
        let sv = prob.add_var("S", VarKind::Psd, k);
        expr.add_congruence(sv, sel.clone(), sel.transpose(), 0.5);
        s = Some(sv);
    }
    prob.add_nsd(expr);
    prob.minimize_scalar(t, 1.0);
    (prob, LmiVars { p, s, m, t, scale })
}

/// The LMI expression at `cert`, unscaled.
pub fn lmi_value(aug: &AugmentedSystem, cert: &Certificate) -> DMatrix<f64> {
    let na = aug.n_a();
    let nw = aug.n_w;
    let cd = hstack(&aug.c, &aug.d);
    let pab = vstack(&(&cert.p * hstack(&aug.a, &aug.b)), &DMatrix::zeros(nw, na + nw));
    let mut f = cd.transpose() * &cd + &pab + pab.transpose();
    for i in na..na + nw {
        f[(i, i)] -= cert.t;
    }
    let sel = selector(aug);
    let q = if cert.s.is_empty() { cert.m.clone() } else { &cert.s + &cert.m };
    f += &sel * q * sel.transpose();
    f
}

pub fn residuals(aug: &AugmentedSystem, cert: &Certificate) -> Residuals {
    Residuals {
        lmi_max_eig: sym_max_eig(&lmi_value(aug, cert)),
        s_min_eig: if cert.s.is_empty() { 0.0 } else { sym_min_eig(&cert.s) },
        m_min_entry: if cert.m.is_empty() { 0.0 } else { cert.m.min() },
    }
}

/// Clip the multiplier into its cones and raise `(P, t)` until the LMI holds
/// with no positive eigenvalue.
///
/// If the LMI value is `<= eps I`, then `P + eps Y` with `A'Y + YA = -2I` and
/// `t + eps (1 + ||Y B||^2)` satisfy it exactly.
fn tighten(aug: &AugmentedSystem, mut cert: Certificate) -> Certificate {
    cert.m = cert.m.map(|x| x.max(0.0));
    if !cert.s.is_empty() {
        let eig = cert.s.clone().symmetric_eigen();
        let clipped = eig.eigenvalues.map(|l| l.max(0.0));
        cert.s = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    }
    let y = shift_direction(aug);
    let yb_norm = sigma_max_real(&(&y * &aug.b));
    for _ in 0..4 {
        let eps = sym_max_eig(&lmi_value(aug, &cert));
        if eps <= 0.0 {
            break;
        }
        // margin for roundoff in the eigenvalue evaluation itself
        let eps = eps * 1.01 + 1e-15 * (1.0 + cert.t);
        cert.p += &y * eps;
        cert.t += eps * (1.0 + yb_norm * yb_norm);
    }
    cert
}

/// Block-diagonal solution of `A_a'Y + Y A_a = -2I`, using the Kronecker
/// structure of the filter block.
fn shift_direction(aug: &AugmentedSystem) -> DMatrix<f64> {
    let two = |n: usize| DMatrix::identity(n, n) * 2.0;
    let a = aug.a.view((0, 0), (aug.n, aug.n)).into_owned();
    let y1 = lyapunov(&a, &two(aug.n)).unwrap_or_else(|| DMatrix::zeros(aug.n, aug.n));
    let mut y = DMatrix::zeros(aug.n_a(), aug.n_a());
    y.view_mut((0, 0), (aug.n, aug.n)).copy_from(&y1);
    if aug.n_p > 0 {
        let deg = aug.n_p / aug.n_w;
        // J is recovered from the first block column of the filter matrix
        let j = DMatrix::from_fn(deg, deg, |r, c| aug.a[(aug.n + r * aug.n_w, aug.n + c * aug.n_w)]);
        let yj = lyapunov(&j, &two(deg)).unwrap_or_else(|| DMatrix::zeros(deg, deg));
        let y2 = crate::linalg::kron(&yj, &DMatrix::identity(aug.n_w, aug.n_w));
        y.view_mut((aug.n, aug.n), (aug.n_p, aug.n_p)).copy_from(&y2);
    }
    y
}

/// Solve the LMI for an already augmented system. `norm_scale` is any
/// estimate of `||G||_2` used to condition the data.
pub fn solve_augmented(aug: &AugmentedSystem, norm_scale: f64, opts: &UpperOptions) -> Result<(f64, SolverStatus, f64, Certificate)> {
    let scale = 1.0 / norm_scale.max(1.0);
    let (prob, vars) = assemble_lmi(aug, opts.multiplier, scale);
    let sol = solve_with_retry(&prob, &opts.solver)?;
    let unscale = 1.0 / (scale * scale);
    let k = aug.n_nonneg();
    let pick = |v: Option<VarId>| v.map(|v| sol.value(v) * unscale).unwrap_or_else(|| DMatrix::zeros(k, k));
    let raw = Certificate {
        p: sol.value(vars.p) * unscale,
        s: if vars.s.is_some() { pick(vars.s) } else { DMatrix::zeros(0, 0) },
        m: pick(vars.m),
        t: sol.scalar(vars.t).max(0.0) * unscale,
    };
    let cert = tighten(aug, raw);
    Ok((cert.t.sqrt(), sol.status, sol.objective_gap * unscale, cert))
}

/// Upper bound with a degree-`degree` filter at pole `alpha` (`degree = 0`
/// gives the filter-free bound).
pub fn upper_bound(sys: &StateSpace, alpha: f64, degree: usize, opts: &UpperOptions) -> Result<UpperBoundResult> {
    sys.ensure_stable()?;
    let (norm, _) = hinf_norm(sys, 1e-6)?;
    if is_negligible(sys, norm) {
        build_filter(alpha, degree as i64, sys.n_w())?;
        return Ok(UpperBoundResult::negligible(alpha, degree, norm));
    }
    upper_bound_scaled(sys, alpha, degree, norm, opts)
}

fn upper_bound_scaled(sys: &StateSpace, alpha: f64, degree: usize, norm: f64, opts: &UpperOptions) -> Result<UpperBoundResult> {
    let filter = build_filter(alpha, degree as i64, sys.n_w())?;
    let aug = augment(sys, &filter)?;
    let (gamma, status, gap, cert) = solve_augmented(&aug, norm, opts)?;
    Ok(UpperBoundResult { alpha, degree, gamma, status, objective_gap: gap, certificate: Some(cert) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Cells ordered by `alpha` (input order), then degree.
    pub cells: Vec<UpperBoundResult>,
}

impl SweepResult {
    /// The least bound over all successful cells.
    pub fn best(&self) -> Option<&UpperBoundResult> {
        self.cells
            .iter()
            .filter(|c| c.is_ok())
            .min_by(|a, b| a.gamma.partial_cmp(&b.gamma).unwrap())
    }

    /// Bounds for one `alpha`, indexed by degree.
    pub fn sequence(&self, alpha: f64) -> Vec<&UpperBoundResult> {
        self.cells.iter().filter(|c| c.alpha == alpha).collect()
    }
}

/// Upper bounds for every `alpha` and every degree `0..=max_degree`.
///
/// The filter-free cell does not depend on `alpha` and is solved once.
pub fn sweep(sys: &StateSpace, alphas: &[f64], max_degree: usize, opts: &UpperOptions) -> Result<SweepResult> {
    sys.ensure_stable()?;
    if let Some(&a) = alphas.iter().find(|a| !(**a < 0.0)) {
        return Err(Error::InvalidAlpha(a));
    }
    let (norm, _) = hinf_norm(sys, 1e-6)?;
    if is_negligible(sys, norm) {
        let cells = alphas
            .iter()
            .flat_map(|&a| (0..=max_degree).map(move |n| UpperBoundResult::negligible(a, n, norm)))
            .collect();
        return Ok(SweepResult { cells });
    }
    let run = |alpha: f64, degree: usize| {
        upper_bound_scaled(sys, alpha, degree, norm, opts).unwrap_or_else(|e| UpperBoundResult::failed(alpha, degree, &e))
    };
    let base = run(alphas.first().copied().unwrap_or(-1.0), 0);
    let jobs: Vec<(f64, usize)> = alphas.iter().flat_map(|&a| (1..=max_degree).map(move |n| (a, n))).collect();
    let solved: Vec<UpperBoundResult> = jobs.par_iter().map(|&(a, n)| run(a, n)).collect();
    let mut cells = Vec::with_capacity(alphas.len() * (max_degree + 1));
    let mut it = solved.into_iter();
    for &a in alphas {
        cells.push(UpperBoundResult { alpha: a, ..base.clone() });
        for _ in 0..max_degree {
            cells.push(it.next().expect("one result per job"));
        }
    }
    Ok(SweepResult { cells })
}
