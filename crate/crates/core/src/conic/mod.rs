//! A small conic optimization layer: PSD and nonnegative cones over
//! symmetric-matrix variables, solved by a dense primal-dual interior-point
//! method.

mod compile;
mod dump;
mod ipm;
pub mod model;

pub use dump::write_triplets;
pub use model::{AffineExpr, ConicProblem, Constraint, ConstraintKind, Term, VarId, VarKind, Variable};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use ipm::{Ipm, IpmSettings, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolverStatus {
    Optimal,
    NearOptimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bound on the relative primal and dual residuals.
    pub abs_tol: f64,
    /// Bound on the relative duality gap.
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { abs_tol: 1e-8, rel_tol: 1e-8, max_iters: 100 }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions { abs_tol: tol, rel_tol: tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: SolverStatus,
    /// Attained value of the minimized objective.
    pub objective: f64,
    /// Lower bound on the optimal value from the dual iterate.
    pub dual_bound: f64,
    /// `objective - dual_bound`.
    pub objective_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    /// One matrix per declared variable (`1 x 1` for scalars).
    pub values: Vec<DMatrix<f64>>,
}

impl ConicSolution {
    pub fn value(&self, var: VarId) -> &DMatrix<f64> {
        &self.values[var.0]
    }

    pub fn scalar(&self, var: VarId) -> f64 {
        self.values[var.0][(0, 0)]
    }
}

/// Minimize the objective of `problem`.
///
/// Returns `Optimal` or `NearOptimal` solutions; infeasible problems and
/// stalled runs are reported as errors.
pub fn solve_conic(problem: &ConicProblem, opts: &SolverOptions) -> Result<ConicSolution> {
    let data = compile::compile(problem)?;
    if data.m == 0 {
        return Err(Error::InvalidArgument("problem has no unknowns".into()));
    }
    let settings = IpmSettings { gap_tol: opts.rel_tol, feas_tol: opts.abs_tol, max_iters: opts.max_iters };
    let res = Ipm::new(&data).run(settings);
    let status = match res.outcome {
        Outcome::Converged => SolverStatus::Optimal,
        Outcome::Near => SolverStatus::NearOptimal,
        Outcome::Infeasible => return Err(Error::Infeasible),
        Outcome::Unbounded => return Err(Error::NumericalFailure("objective is unbounded below".into())),
        Outcome::Failed => {
            return Err(Error::NumericalFailure(format!(
                "stalled after {} iterations (gap {:.1e}, residuals {:.1e}/{:.1e})",
                res.iterations, res.rel_gap, res.pinf, res.dinf
            )))
        }
    };
    Ok(ConicSolution {
        status,
        objective: -res.dual_obj,
        dual_bound: -res.primal_obj,
        objective_gap: res.primal_obj - res.dual_obj,
        primal_residual: res.dinf,
        dual_residual: res.pinf,
        iterations: res.iterations,
        values: compile::unflatten(problem, &data.offsets, &res.y),
    })
}

/// [`solve_conic`], retried once at `max(tol, 1e-6)` after a numerical failure.
pub fn solve_with_retry(problem: &ConicProblem, opts: &SolverOptions) -> Result<ConicSolution> {
    match solve_conic(problem, opts) {
        Err(Error::NumericalFailure(_)) if opts.abs_tol < 1e-6 || opts.rel_tol < 1e-6 => {
            let loose = SolverOptions { abs_tol: opts.abs_tol.max(1e-6), rel_tol: opts.rel_tol.max(1e-6), ..*opts };
            solve_conic(problem, &loose)
        }
        other => other,
    }
}
