//! Bounds on `max_{x >= 0, |x| = 1} |M x|` for a constant matrix `M`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Column limit for the multi-start oracle.
pub const BRUTEFORCE_MAX_COLUMNS: usize = 6;

/// Unit top right singular vector of `m`, signed so that its nonnegative part
/// carries at least as much mass as its nonpositive part.
pub fn signed_top_vector(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    for (j, col) in m.column_iter().enumerate() {
        if let Some(i) = col.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteEntry { matrix: "M", row: i, col: j });
        }
    }
    if m.ncols() == 0 || m.iter().all(|x| *x == 0.0) {
        return Err(Error::ZeroMatrix);
    }
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::NumericalFailure("svd".into()))?;
    let (k, s) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    let mut v = vt.row(k).transpose();
    if positive_part(&v).norm() < positive_part(&-&v).norm() {
        v = -v;
    }
    Ok((s, v))
}

fn positive_part(v: &DVector<f64>) -> DVector<f64> {
    v.map(|x| x.max(0.0))
}

/// Lower bound `max((1/sqrt 2) sqrt(|M|^2 + |M |v||^2), |M v_+| / |v_+|)`.
pub fn matrix_l2plus_lower(m: &DMatrix<f64>) -> Result<f64> {
    let (s, v) = signed_top_vector(m)?;
    let v_abs = v.abs();
    let base = ((s * s + (m * &v_abs).norm_squared()) / 2.0).sqrt();
    let vp = positive_part(&v);
    let np = vp.norm();
    let plus = if np > 0.0 { (m * &vp).norm() / np } else { 0.0 };
    Ok(base.max(plus))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteforceOptions {
    pub random_starts: usize,
    pub seed: u64,
}

impl Default for BruteforceOptions {
    fn default() -> Self {
        BruteforceOptions { random_starts: 100, seed: 0 }
    }
}

/// Projected power iteration for `max |M x|^2` on the nonnegative unit sphere.
fn ascend(mtm: &DMatrix<f64>, shift: f64, mut x: DVector<f64>) -> DVector<f64> {
    for _ in 0..2000 {
        let y = (mtm * &x + &x * shift).map(|t| t.max(0.0));
        let n = y.norm();
        if n == 0.0 {
            break;
        }
        let y = y / n;
        let step = (&y - &x).norm();
        x = y;
        if step < 1e-15 {
            break;
        }
    }
    x
}

/// Multi-start search for `max_{x >= 0, |x| = 1} |M x|`. The result is the
/// value at a feasible point, so it never exceeds the true maximum.
pub fn matrix_l2plus_bruteforce(m: &DMatrix<f64>, opts: &BruteforceOptions) -> Result<f64> {
    if m.ncols() > BRUTEFORCE_MAX_COLUMNS {
        return Err(Error::TooManyColumns { max: BRUTEFORCE_MAX_COLUMNS, got: m.ncols() });
    }
    let (s, v) = signed_top_vector(m)?;
    let n = m.ncols();
    let mtm = m.transpose() * m;
    let shift = s * s;
    let mut starts: Vec<DVector<f64>> = (0..n).map(|i| DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 })).collect();
    starts.push(v.abs());
    let vp = positive_part(&v);
    if vp.norm() > 0.0 {
        starts.push(vp);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_starts {
        starts.push(DVector::from_fn(n, |_, _| rng.random::<f64>()));
    }
    let mut best = 0.0f64;
    for x0 in starts {
        let nrm = x0.norm();
        if nrm == 0.0 {
            continue;
        }
        let x = ascend(&mtm, shift, x0 / nrm);
        best = best.max((m * x).norm());
    }
    Ok(best)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Exact maximum by enumerating supports: on the optimal support the
    /// maximizer is a strictly positive eigenvector of the restricted Gram matrix.
    pub(crate) fn exact(m: &DMatrix<f64>) -> f64 {
        let n = m.ncols();
        let g = m.transpose() * m;
        let mut best = 0.0f64;
        for mask in 1u32..(1 << n) {
            let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| g[(idx[i], idx[j])]);
            let eig = sub.symmetric_eigen();
            for k in 0..idx.len() {
                let col = eig.eigenvectors.column(k);
                let sign = if col.sum() < 0.0 { -1.0 } else { 1.0 };
                if col.iter().all(|x| sign * x > 1e-12) {
                    best = best.max(eig.eigenvalues[k].max(0.0).sqrt());
                }
            }
        }
        best
    }

    #[test]
    fn difference_row() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        assert_relative_eq!(matrix_l2plus_lower(&m).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(matrix_l2plus_bruteforce(&m, &Default::default()).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_and_identity() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        assert_relative_eq!(matrix_l2plus_bruteforce(&m, &Default::default()).unwrap(), 2.0, epsilon = 1e-12);
        let eye = DMatrix::<f64>::identity(2, 2);
        assert_relative_eq!(matrix_l2plus_lower(&eye).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn nonnegative_matrix_reaches_norm() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.5, 0.0, 3.0, 1.0]);
        let s = m.singular_values().max();
        assert_relative_eq!(matrix_l2plus_lower(&m).unwrap(), s, epsilon = 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(matrix_l2plus_lower(&DMatrix::zeros(2, 2)), Err(Error::ZeroMatrix)));
        let wide = DMatrix::from_element(1, 7, 1.0);
        assert!(matches!(
            matrix_l2plus_bruteforce(&wide, &Default::default()),
            Err(Error::TooManyColumns { max: 6, got: 7 })
        ));
    }

    #[test]
    fn oracle_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let m = DMatrix::from_fn(3, 3, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let e = exact(&m);
            let b = matrix_l2plus_bruteforce(&m, &Default::default()).unwrap();
            let l = matrix_l2plus_lower(&m).unwrap();
            assert!(b <= e + 1e-9 && b >= e - 1e-7, "{b} vs {e}");
            assert!(l <= e + 1e-9);
        }
    }
}
