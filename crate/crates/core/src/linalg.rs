//! Small dense helpers shared by the analysis modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub(crate) fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Rotate `v` so that its largest-modulus entry is real and positive.
///
/// Ties on the modulus go to the lowest index.
pub fn normalize_phase(v: &mut DVector<Complex64>) {
    let mut best = 0;
    let mut best_mod = -1.0;
    for (i, z) in v.iter().enumerate() {
        // relative slack so that entries equal up to roundoff count as ties
        if z.norm() > best_mod * (1.0 + 1e-12) + 1e-300 {
            best = i;
            best_mod = z.norm();
        }
    }
    if best_mod <= 0.0 {
        return;
    }
    let rot = v[best].conj() / v[best].norm();
    for z in v.iter_mut() {
        *z *= rot;
    }
    v[best] = Complex64::new(v[best].norm(), 0.0);
}

/// Largest singular value of a complex matrix together with the unit right
/// singular vector, phase-normalized by [`normalize_phase`].
pub fn top_singular(m: &DMatrix<Complex64>) -> (f64, DVector<Complex64>) {
    let cols = m.ncols();
    if m.nrows() == 0 || cols == 0 {
        let mut v = DVector::zeros(cols);
        if cols > 0 {
            v[0] = Complex64::new(1.0, 0.0);
        }
        return (0.0, v);
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let (idx, sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    let mut v: DVector<Complex64> = v_t.row(idx).transpose().map(|z| z.conj());
    let nrm = v.norm();
    if nrm > 0.0 {
        v /= Complex64::new(nrm, 0.0);
    }
    normalize_phase(&mut v);
    (sigma.max(0.0), v)
}

pub fn sigma_max(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn sigma_max_real(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn sym_min_eig(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let s = (m + m.transpose()) * 0.5;
    s.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn sym_max_eig(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    -sym_min_eig(&(-m))
}

/// Block-diagonal concatenation of two matrices.
pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

/// Stack `a` on top of `b` (same column count).
pub fn vstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    debug_assert_eq!(a.ncols(), b.ncols());
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

/// Place `a` left of `b` (same row count).
pub fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    debug_assert_eq!(a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

/// Kronecker product.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Solve `A'Y + YA = -Q` by a Kronecker-product linear solve.
pub fn lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Some(DMatrix::zeros(0, 0));
    }
    let eye = DMatrix::identity(n, n);
    let at = a.transpose();
    let k = kron(&eye, &at) + kron(&at, &eye);
    let rhs = DVector::from_iterator(n * n, q.iter().map(|x| -x));
    let y = k.lu().solve(&rhs)?;
    let y = DMatrix::from_column_slice(n, n, y.as_slice());
    Some((&y + y.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_normalization_ties_go_to_lowest_index() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = DVector::from_vec(vec![Complex64::new(-s, 0.0), Complex64::new(s, 0.0)]);
        normalize_phase(&mut v);
        assert!((v[0].re - s).abs() < 1e-15 && v[0].im == 0.0);
        assert!((v[1].re + s).abs() < 1e-15);
    }

    #[test]
    fn top_singular_of_row_vector() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let (s, v) = top_singular(&to_complex(&m));
        assert!((s - 2f64.sqrt()).abs() < 1e-14);
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert!(v[0].re > 0.0 && v[1].re < 0.0);
    }

    #[test]
    fn lyapunov_residual() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, -3.0]);
        let q = DMatrix::identity(2, 2);
        let y = lyapunov(&a, &q).unwrap();
        let r = a.transpose() * &y + &y * &a + q;
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn kron_shapes() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let k = kron(&a, &DMatrix::identity(3, 3));
        assert_eq!(k.shape(), (6, 6));
        assert_eq!(k[(3, 0)], 3.0);
        assert_eq!(k[(3, 1)], 0.0);
    }
}
