//! Sampled version of the problem
//! `min 2 a0^2 + 1 + sum_{m=2}^N a_m^2  s.t.  a0 + cos t + sum a_m cos(m t) >= 0`,
//! whose infinite-order optimum is the rectified cosine with value 2.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::conic::{solve_with_retry, AffineExpr, ConicProblem, SolverOptions, SolverStatus, VarId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SipSolution {
    /// Optimal value of the sampled problem.
    pub value: f64,
    pub a0: f64,
    /// `a_2, ..., a_N`.
    pub a: Vec<f64>,
    pub status: SolverStatus,
}

/// Solve the problem with the constraint imposed on `grid_points` uniform
/// samples of `[0, pi]`.
pub fn sip_qp_oracle(n: usize, grid_points: usize, opts: &SolverOptions) -> Result<SipSolution> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("order must be at least 2, got {n}")));
    }
    if grid_points < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 grid points, got {grid_points}")));
    }
    let mut p = ConicProblem::new();
    let s = p.add_scalar("s");
    let a0 = p.add_scalar("a0");
    let a: Vec<VarId> = (2..=n).map(|m| p.add_scalar(format!("a{m}"))).collect();

    // [[s, u'], [u, I]] >= 0 with u = (sqrt2 a0, a_2, ..., a_N)
    let k = n + 1;
    let unit = |i: usize, j: usize, c: f64| {
        let mut e = DMatrix::zeros(k, k);
        e[(i, j)] = c;
        e[(j, i)] = c;
        e
    };
    let mut constant = DMatrix::identity(k, k);
    constant[(0, 0)] = 0.0;
    let mut schur = AffineExpr::new(-constant);
    schur.add_scalar(s, unit(0, 0, -1.0));
    schur.add_scalar(a0, unit(0, 1, -SQRT_2));
    for (i, &v) in a.iter().enumerate() {
        schur.add_scalar(v, unit(0, i + 2, -1.0));
    }
    p.add_nsd(schur);

    for g in 0..grid_points {
        let t = PI * g as f64 / (grid_points - 1) as f64;
        let mut row = AffineExpr::new(DMatrix::from_element(1, 1, -t.cos()));
        row.add_scalar(a0, DMatrix::from_element(1, 1, -1.0));
        for (i, &v) in a.iter().enumerate() {
            let c = ((i + 2) as f64 * t).cos();
            if c != 0.0 {
                row.add_scalar(v, DMatrix::from_element(1, 1, -c));
            }
        }
        p.add_nsd(row);
    }
    p.minimize_scalar(s, 1.0);

    let sol = solve_with_retry(&p, opts)?;
    let a0v = sol.scalar(a0);
    let av: Vec<f64> = a.iter().map(|&v| sol.scalar(v)).collect();
    let value = 2.0 * a0v * a0v + 1.0 + av.iter().map(|x| x * x).sum::<f64>();
    Ok(SipSolution { value, a0: a0v, a: av, status: sol.status })
}
