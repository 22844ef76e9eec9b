//! Harmonic lower bounds on the L2+ induced norm.
//!
//! The test input is the entrywise rectified cosine
//! `w_i(t) = |v_i| max(2 cos(wt + theta_i), 0)`, whose Fourier series is
//! `a0 + cos(wt) + sum_{m>=2} a_m cos(m wt)` per channel with the phases
//! `m theta_i`. Its steady-state output splits over the harmonics, which
//! gives `upsilon_N` as a root-mean-square ratio.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hinf::{golden_max, hinf_norm, PeakInfo, PeakKind};
use crate::linalg::to_complex;
use crate::lti::StateSpace;

/// Default truncation order for lower bounds.
pub const DEFAULT_MAX_HARMONICS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicCoefficients {
    pub a0: f64,
    /// `a_2, ..., a_N`.
    pub a: Vec<f64>,
}

impl HarmonicCoefficients {
    /// Truncation order `N`.
    pub fn order(&self) -> usize {
        self.a.len() + 1
    }

    /// `a_m`, with `a_1 = 1`.
    pub fn get(&self, m: usize) -> f64 {
        match m {
            0 => self.a0,
            1 => 1.0,
            _ => self.a[m - 2],
        }
    }
}

/// Fourier coefficients of `max(2 cos t, 0)` up to order `n`.
pub fn fourier_coeffs(n: usize) -> Result<HarmonicCoefficients> {
    if n == 0 {
        return Err(Error::InvalidArgument("harmonic order must be at least 1".into()));
    }
    let a = (2..=n)
        .map(|m| {
            if m % 2 == 1 {
                return 0.0;
            }
            let p = (m / 2) as f64;
            let sign = if (m / 2) % 2 == 1 { 1.0 } else { -1.0 };
            sign * 4.0 / (PI * (2.0 * p + 1.0) * (2.0 * p - 1.0))
        })
        .collect();
    Ok(HarmonicCoefficients { a0: 2.0 / PI, a })
}

/// Partial Parseval sum `2 a0^2 + 1 + sum_{m=2}^n a_m^2`, which tends to 2.
pub fn parseval_check(n: usize) -> Result<f64> {
    let c = fourier_coeffs(n)?;
    Ok(2.0 * c.a0 * c.a0 + 1.0 + c.a.iter().map(|x| x * x).sum::<f64>())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicDirections {
    pub v: DVector<Complex64>,
    /// `v^[0], ..., v^[N]`.
    pub vs: Vec<DVector<Complex64>>,
}

/// Input directions `v^[m]` for the harmonics of the rectified cosine.
///
/// `v^[m]_i = |v_i| e^{j m theta_i}` with `theta_i = arg v_i`, so `theta_i` is
/// 0 or pi for the real vector of a peak at zero or infinity.
pub fn harmonic_directions(peak: &PeakInfo, n: usize) -> Result<HarmonicDirections> {
    if n == 0 {
        return Err(Error::InvalidArgument("harmonic order must be at least 1".into()));
    }
    let v = peak.v.clone();
    let vs = (0..=n)
        .map(|m| v.map(|z| if z.norm() == 0.0 { z } else { Complex64::from_polar(z.norm(), m as f64 * z.arg()) }))
        .collect();
    Ok(HarmonicDirections { v, vs })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    pub per_decade: usize,
    /// Decades covered on each side of the peak scale.
    pub decades: f64,
    /// Relative bracket width at which the golden-section polish stops.
    pub polish_rel_width: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions { per_decade: 200, decades: 3.0, polish_rel_width: 1e-6 }
    }
}

/// `upsilon_N` and the base frequency attaining it (`0` and `inf` stand for
/// the two limits).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Upsilon {
    pub n: usize,
    pub value: f64,
    pub omega: f64,
}

/// `G(jw) u`, by one resolvent solve.
fn response(sys: &StateSpace, w: f64, u: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    let d = to_complex(sys.d()) * u;
    if sys.is_static() {
        return Ok(d);
    }
    let n = sys.n();
    let mut m = to_complex(&(-sys.a()));
    for i in 0..n {
        m[(i, i)] += Complex64::new(0.0, w);
    }
    let x = m.lu().solve(&(to_complex(sys.b()) * u)).ok_or(Error::SingularResolvent(w))?;
    Ok(to_complex(sys.c()) * x + d)
}

/// Evaluates `2 h_N(w)^2` for every `N` up to a fixed order.
pub struct HarmonicObjective<'a> {
    sys: &'a StateSpace,
    coeffs: HarmonicCoefficients,
    dirs: HarmonicDirections,
    dc: DMatrix<Complex64>,
    peak: PeakInfo,
    /// `2 a0^2 |G(0) v^[0]|^2`.
    dc_term: f64,
}

impl<'a> HarmonicObjective<'a> {
    pub fn new(sys: &'a StateSpace, peak: &PeakInfo, n: usize) -> Result<Self> {
        let coeffs = fourier_coeffs(n)?;
        let dirs = harmonic_directions(peak, n)?;
        let dc = to_complex(&sys.dc_gain()?);
        let g0 = &dc * &dirs.vs[0];
        let dc_term = 2.0 * coeffs.a0 * coeffs.a0 * g0.norm_squared();
        Ok(HarmonicObjective { sys, coeffs, dirs, dc, peak: peak.clone(), dc_term })
    }

    pub fn order(&self) -> usize {
        self.coeffs.order()
    }

    /// Cumulative sums `s[k] = 2 h_{k}(w)^2` for `k = 0..=n` (`s[0]` is the DC term).
    pub fn cumulative(&self, w: f64, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n + 1);
        let mut acc = self.dc_term;
        out.push(acc);
        for m in 1..=n {
            let a = self.coeffs.get(m);
            if a != 0.0 {
                acc += a * a * response(self.sys, m as f64 * w, &self.dirs.vs[m])?.norm_squared();
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// `h_N(w)`.
    pub fn value(&self, w: f64, n: usize) -> Result<f64> {
        Ok((self.cumulative(w, n)?[n] / 2.0).sqrt())
    }

    /// `lim_{w -> 0} h_N(w)`.
    pub fn limit_zero(&self, n: usize) -> f64 {
        let mut acc = self.dc_term;
        for m in 1..=n {
            let a = self.coeffs.get(m);
            acc += a * a * (&self.dc * &self.dirs.vs[m]).norm_squared();
        }
        (acc / 2.0).sqrt()
    }

    /// `lim_{w -> inf} h_N(w)`.
    pub fn limit_infinity(&self, n: usize) -> f64 {
        let d = to_complex(self.sys.d());
        let mut acc = self.dc_term;
        for m in 1..=n {
            let a = self.coeffs.get(m);
            acc += a * a * (&d * &self.dirs.vs[m]).norm_squared();
        }
        (acc / 2.0).sqrt()
    }

    /// Log-spaced base frequencies around the peak scale.
    pub fn grid(&self, opts: &GridOptions) -> Vec<f64> {
        let mags: Vec<f64> = if self.sys.is_static() {
            Vec::new()
        } else {
            self.sys.a().complex_eigenvalues().iter().map(|z| z.norm()).filter(|m| *m > 0.0).collect()
        };
        let (mut lo, mut hi) = match self.peak.kind {
            PeakKind::AtFinite(w) => (w, w),
            _ => (1.0, 1.0),
        };
        if let PeakKind::AtZero | PeakKind::AtInfinity = self.peak.kind {
            if !mags.is_empty() {
                lo = mags.iter().cloned().fold(f64::INFINITY, f64::min);
                hi = mags.iter().cloned().fold(0.0, f64::max);
            }
        }
        let span = 10f64.powf(opts.decades);
        let (lo, hi) = (lo / span, hi * span);
        let count = ((hi / lo).log10() * opts.per_decade as f64).ceil().max(1.0) as usize + 1;
        (0..count).map(|k| lo * (hi / lo).powf(k as f64 / (count - 1).max(1) as f64)).collect()
    }
}

/// The peak of `sys` at the relative accuracy used for lower bounds.
fn peak_of(sys: &StateSpace) -> Result<PeakInfo> {
    Ok(hinf_norm(sys, 1e-9)?.1)
}

/// Maximize `h_n` given the grid values `vals[k] = 2 h_n(grid[k])^2` and extra
/// candidate frequencies that are evaluated as well.
fn maximize(obj: &HarmonicObjective, grid: &[f64], vals: &[f64], n: usize, extra: &[f64], opts: &GridOptions) -> Result<Upsilon> {
    let mut best = Upsilon { n, value: obj.limit_zero(n), omega: 0.0 };
    let inf = obj.limit_infinity(n);
    if inf > best.value {
        best = Upsilon { n, value: inf, omega: f64::INFINITY };
    }
    let (k, _) = vals
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    if !grid.is_empty() {
        let lo = grid[k.saturating_sub(1)];
        let hi = grid[(k + 1).min(grid.len() - 1)];
        let (w, v) = golden_max(|w| obj.value(w, n), lo, hi, opts.polish_rel_width)?;
        let at_grid = (vals[k] / 2.0).sqrt();
        let (w, v) = if at_grid > v { (grid[k], at_grid) } else { (w, v) };
        if v > best.value {
            best = Upsilon { n, value: v, omega: w };
        }
    }
    for &w in extra {
        if w.is_finite() && w > 0.0 {
            let v = obj.value(w, n)?;
            if v > best.value {
                best = Upsilon { n, value: v, omega: w };
            }
        }
    }
    Ok(best)
}

fn grid_values(obj: &HarmonicObjective, grid: &[f64], n: usize) -> Result<Vec<Vec<f64>>> {
    grid.par_iter().map(|&w| obj.cumulative(w, n)).collect()
}

/// `upsilon_n(sys)`, maximized over the base frequency.
pub fn upsilon(sys: &StateSpace, n: usize, grid: &GridOptions) -> Result<Upsilon> {
    let peak = peak_of(sys)?;
    let obj = HarmonicObjective::new(sys, &peak, n)?;
    let ws = obj.grid(grid);
    let vals: Vec<f64> = grid_values(&obj, &ws, n)?.into_iter().map(|c| c[n]).collect();
    maximize(&obj, &ws, &vals, n, &[peak.kind.omega()], grid)
}

/// Orders `1, 2, 4, 8, ...` below `n_max`, then `n_max`.
pub fn doubling_schedule(n_max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut n = 1;
    while n < n_max {
        out.push(n);
        n *= 2;
    }
    if n_max >= 1 {
        out.push(n_max);
    }
    out
}

/// `upsilon_N` on the doubling schedule up to `n_max`. Each order also
/// evaluates the maximizers of the lower orders, so the sequence is
/// non-decreasing.
pub fn upsilon_sequence(sys: &StateSpace, n_max: usize, grid: &GridOptions) -> Result<Vec<Upsilon>> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("harmonic order must be at least 1".into()));
    }
    let peak = peak_of(sys)?;
    let obj = HarmonicObjective::new(sys, &peak, n_max)?;
    let ws = obj.grid(grid);
    let cums = grid_values(&obj, &ws, n_max)?;
    let mut extra = vec![peak.kind.omega()];
    let mut out: Vec<Upsilon> = Vec::new();
    for n in doubling_schedule(n_max) {
        let vals: Vec<f64> = cums.iter().map(|c| c[n]).collect();
        let mut u = maximize(&obj, &ws, &vals, n, &extra, grid)?;
        if let Some(prev) = out.last() {
            // limits are monotone too, but guard against polish noise
            if u.value < prev.value {
                u = Upsilon { n, value: prev.value, omega: prev.omega };
            }
        }
        extra.push(u.omega);
        out.push(u);
    }
    Ok(out)
}

/// The largest entry of an `upsilon_sequence`.
pub fn best_upsilon(seq: &[Upsilon]) -> Option<Upsilon> {
    seq.iter().copied().fold(None, |acc, u| match acc {
        Some(b) if b.value >= u.value => Some(b),
        _ => Some(u),
    })
}

/// Write `(omega, h_n(omega))` over the grid as CSV.
pub fn write_curve_csv<W: Write>(sys: &StateSpace, n: usize, grid: &GridOptions, out: W) -> Result<()> {
    let peak = peak_of(sys)?;
    let obj = HarmonicObjective::new(sys, &peak, n)?;
    let ws = obj.grid(grid);
    let vals = grid_values(&obj, &ws, n)?;
    let rows = ws.iter().zip(vals).map(|(w, c)| vec![*w, (c[n] / 2.0).sqrt()]);
    crate::io::write_csv(out, &["omega", "h"], rows).map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// Write `(N, upsilon_N, omega)` rows as CSV.
pub fn write_sequence_csv<W: Write>(seq: &[Upsilon], out: W) -> Result<()> {
    let rows = seq.iter().map(|u| vec![u.n as f64, u.value, u.omega]);
    crate::io::write_csv(out, &["N", "upsilon", "omega"], rows).map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// `(1/sqrt 2) ||G||_2`, the floor every harmonic bound clears.
pub fn uniform_floor(l2_norm: f64) -> f64 {
    FRAC_1_SQRT_2 * l2_norm
}
