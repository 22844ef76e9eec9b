//! Continuous-time state-space systems.
//!
//! A [`StateSpace`] holds `(A, B, C, D)` for
//!
//! ```text
//! x'(t) = A x(t) + B w(t)
//! z(t)  = C x(t) + D w(t)
//! ```
//!
//! Static systems (`n = 0`) are allowed and behave as the constant gain `D`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{block_diag, hstack, to_complex, vstack};

/// Sign tolerance used by the sampled external-positivity check.
pub const IMPULSE_SIGN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    name: Option<String>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl StateSpace {
    /// Build a system, checking dimensions and finiteness.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        validate(a, b, c, d)
    }

    /// A memoryless system `z = D w`.
    pub fn static_gain(d: DMatrix<f64>) -> Result<Self> {
        let (nz, nw) = d.shape();
        validate(DMatrix::zeros(0, 0), DMatrix::zeros(0, nw), DMatrix::zeros(nz, 0), d)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension.
    pub fn n_w(&self) -> usize {
        self.d.ncols()
    }

    /// Output dimension.
    pub fn n_z(&self) -> usize {
        self.d.nrows()
    }

    pub fn is_static(&self) -> bool {
        self.n() == 0
    }

    /// `c * G`, realized by scaling `C` and `D`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let mut out = validate(self.a.clone(), self.b.clone(), &self.c * c, &self.d * c)?;
        out.name = self.name.clone();
        Ok(out)
    }

    pub fn spectral_abscissa(&self) -> f64 {
        spectral_abscissa(&self.a)
    }

    pub fn ensure_stable(&self) -> Result<()> {
        let sa = self.spectral_abscissa();
        if sa < 0.0 {
            Ok(())
        } else {
            Err(Error::UnstableSystem(sa))
        }
    }

    /// `G(0) = D - C A^{-1} B`.
    pub fn dc_gain(&self) -> Result<DMatrix<f64>> {
        if self.is_static() {
            return Ok(self.d.clone());
        }
        let x = self
            .a
            .clone()
            .lu()
            .solve(&self.b)
            .ok_or(Error::SingularResolvent(0.0))?;
        Ok(&self.d - &self.c * x)
    }
}

/// Check dimensions and finiteness of `(A, B, C, D)` and wrap them.
pub fn validate(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<StateSpace> {
    let n = a.nrows();
    let (nz, nw) = d.shape();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(format!("A is {}x{}, must be square", n, a.ncols())));
    }
    if nw == 0 || nz == 0 {
        return Err(Error::DimensionMismatch(format!(
            "D is {nz}x{nw}; need at least one input and one output"
        )));
    }
    if b.shape() != (n, nw) {
        return Err(Error::DimensionMismatch(format!(
            "B is {}x{}, expected {n}x{nw}",
            b.nrows(),
            b.ncols()
        )));
    }
    if c.shape() != (nz, n) {
        return Err(Error::DimensionMismatch(format!(
            "C is {}x{}, expected {nz}x{n}",
            c.nrows(),
            c.ncols()
        )));
    }
    for (label, m) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
        if let Some(idx) = m.iter().position(|x| !x.is_finite()) {
            // nalgebra storage is column-major
            let rows = m.nrows();
            return Err(Error::NonFiniteEntry {
                matrix: label,
                row: idx % rows,
                col: idx / rows,
            });
        }
    }
    Ok(StateSpace { name: None, a, b, c, d })
}

/// Largest real part over the eigenvalues of `a` (`-inf` for an empty matrix).
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// True iff every eigenvalue of `a` has strictly negative real part.
pub fn is_hurwitz(a: &DMatrix<f64>) -> bool {
    spectral_abscissa(a) < 0.0
}

/// True iff every off-diagonal entry of `a` is nonnegative.
pub fn is_metzler(a: &DMatrix<f64>) -> bool {
    let (r, c) = a.shape();
    (0..r).all(|i| (0..c).all(|j| i == j || a[(i, j)] >= 0.0))
}

pub fn is_internally_positive(sys: &StateSpace) -> bool {
    let nonneg = |m: &DMatrix<f64>| m.iter().all(|&x| x >= 0.0);
    is_metzler(&sys.a) && nonneg(&sys.b) && nonneg(&sys.c) && nonneg(&sys.d)
}

/// Sampled evidence of external positivity.
///
/// Returns true iff `D >= 0` and the impulse response `C e^{At} B` is at least
/// `-1e-9` at every sample `t = 0, step, ..., horizon`. This can refute
/// external positivity but cannot certify it.
pub fn is_externally_positive_sampled(sys: &StateSpace, horizon: f64, step: f64) -> Result<bool> {
    if !(horizon > 0.0 && step > 0.0) {
        return Err(Error::InvalidArgument("horizon and step must be positive".into()));
    }
    sys.ensure_stable()?;
    if sys.d.iter().any(|&x| x < 0.0) {
        return Ok(false);
    }
    if sys.is_static() {
        return Ok(true);
    }
    let phi = (&sys.a * step).exp();
    let steps = (horizon / step).floor() as usize;
    let mut x = sys.b.clone();
    for k in 0..=steps {
        let y = &sys.c * &x;
        if y.iter().any(|&v| v < -IMPULSE_SIGN_TOL) {
            return Ok(false);
        }
        if k < steps {
            x = &phi * x;
        }
    }
    Ok(true)
}

/// `G(jw) = C (jwI - A)^{-1} B + D`.
pub fn freq_response(sys: &StateSpace, omega: f64) -> Result<DMatrix<Complex64>> {
    let d = to_complex(&sys.d);
    if sys.is_static() {
        return Ok(d);
    }
    let n = sys.n();
    let mut m = to_complex(&(-&sys.a));
    for i in 0..n {
        m[(i, i)] += Complex64::new(0.0, omega);
    }
    let x = m
        .lu()
        .solve(&to_complex(&sys.b))
        .ok_or(Error::SingularResolvent(omega))?;
    Ok(to_complex(&sys.c) * x + d)
}

/// Realization of `G1 - G2`: `A = diag(A1, A2)`, `B = [B1; B2]`, `C = [C1, -C2]`, `D = D1 - D2`.
pub fn subtract(g1: &StateSpace, g2: &StateSpace) -> Result<StateSpace> {
    if g1.n_w() != g2.n_w() || g1.n_z() != g2.n_z() {
        return Err(Error::DimensionMismatch(format!(
            "cannot subtract a {}x{} system from a {}x{} system",
            g2.n_z(),
            g2.n_w(),
            g1.n_z(),
            g1.n_w()
        )));
    }
    let a = block_diag(&g1.a, &g2.a);
    let b = vstack(&g1.b, &g2.b);
    let c = hstack(&g1.c, &(-&g2.c));
    let d = &g1.d - &g2.d;
    let mut out = validate(a, b, c, d)?;
    if let (Some(n1), Some(n2)) = (g1.name(), g2.name()) {
        out.name = Some(format!("{n1}-{n2}"));
    }
    Ok(out)
}
