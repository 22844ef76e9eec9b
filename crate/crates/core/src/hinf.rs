//! L2 induced norm (H-infinity norm) and peak-frequency classification.
//!
//! The norm is bracketed by bisection on the Hamiltonian test: for
//! `gamma > sigma_max(D)`, `gamma` bounds the norm from above iff the
//! Hamiltonian matrix built from `(A, B, C, D, gamma)` has no eigenvalues on
//! the imaginary axis. Crossing frequencies seen at the last lower bracket
//! seed a golden-section polish of `sigma_max(G(jw))`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{sigma_max, sigma_max_real, to_complex, top_singular};
use crate::lti::{freq_response, StateSpace};

/// Relative slack used to decide whether the peak sits at a boundary
/// frequency (or whether two peaks tie).
pub const CLASSIFY_TOL: f64 = 1e-6;

/// Where the supremum of `sigma_max(G(jw))` is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PeakKind {
    AtZero,
    AtFinite(f64),
    AtInfinity,
}

impl PeakKind {
    /// The peak frequency, with `AtZero` as `0` and `AtInfinity` as `inf`.
    pub fn omega(&self) -> f64 {
        match *self {
            PeakKind::AtZero => 0.0,
            PeakKind::AtFinite(w) => w,
            PeakKind::AtInfinity => f64::INFINITY,
        }
    }

    pub fn frequency(&self) -> Frequency {
        match *self {
            PeakKind::AtZero => Frequency::Zero,
            PeakKind::AtFinite(w) => Frequency::Finite(w),
            PeakKind::AtInfinity => Frequency::Infinity,
        }
    }
}

/// A frequency argument that may be one of the two boundary points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frequency {
    Zero,
    Finite(f64),
    Infinity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakInfo {
    pub kind: PeakKind,
    /// `||G||_2`.
    pub gain: f64,
    /// Unit right singular vector of `G` at the peak, phase-normalized.
    pub v: DVector<Complex64>,
    /// Other frequencies attaining the same gain (within [`CLASSIFY_TOL`]).
    pub other_peaks: Vec<f64>,
}

/// Largest singular value of `G` at `freq` and its right singular vector.
///
/// The vector is real at `Zero` and `Infinity`; in every case its
/// largest-modulus entry is made real and positive (lowest index on ties).
pub fn max_singular(sys: &StateSpace, freq: Frequency) -> Result<(f64, DVector<Complex64>)> {
    let g = match freq {
        Frequency::Zero => to_complex(&sys.dc_gain()?),
        Frequency::Finite(w) => freq_response(sys, w)?,
        Frequency::Infinity => to_complex(sys.d()),
    };
    let (s, mut v) = top_singular(&g);
    if !matches!(freq, Frequency::Finite(_)) {
        for z in v.iter_mut() {
            z.im = 0.0;
        }
        let nrm = v.norm();
        if nrm > 0.0 {
            v /= Complex64::new(nrm, 0.0);
        }
    }
    Ok((s, v))
}

fn gain_at(sys: &StateSpace, w: f64) -> Result<f64> {
    Ok(sigma_max(&freq_response(sys, w)?))
}

/// Hamiltonian whose imaginary-axis eigenvalues are the frequencies where
/// `sigma_max(G(jw)) = gamma`. Requires `gamma > sigma_max(D)`.
fn hamiltonian(sys: &StateSpace, gamma: f64) -> Option<DMatrix<f64>> {
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d());
    let n = sys.n();
    let nw = sys.n_w();
    let nz = sys.n_z();
    let r = DMatrix::<f64>::identity(nw, nw) * (gamma * gamma) - d.transpose() * d;
    let r_inv = r.cholesky()?.inverse();
    let a_h = a + b * &r_inv * d.transpose() * c;
    let q = c.transpose() * (DMatrix::identity(nz, nz) + d * &r_inv * d.transpose()) * c;
    let g = b * &r_inv * b.transpose();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&a_h);
    h.view_mut((0, n), (n, n)).copy_from(&g);
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a_h.transpose()));
    Some(h)
}

/// Nonnegative frequencies of the (near) imaginary-axis Hamiltonian eigenvalues.
fn crossing_frequencies(sys: &StateSpace, gamma: f64) -> Vec<f64> {
    let Some(h) = hamiltonian(sys, gamma) else {
        // gamma <= sigma_max(D): the gain crosses gamma at high frequency
        return vec![f64::INFINITY];
    };
    let thresh = 1e-8 * h.norm();
    let mut out: Vec<f64> = h
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.re.abs() <= thresh && z.im >= 0.0)
        .map(|z| z.im)
        .collect();
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    out.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1e-12));
    out
}

/// Maximize `f` on `[lo, hi]` by golden-section search. Returns `(arg, value)`.
pub(crate) fn golden_max<F>(mut f: F, lo: f64, hi: f64, rel_width: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for _ in 0..200 {
        if (b - a) <= rel_width * b.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        for (x, v) in [(c, fc), (d, fd)] {
            if v > best.1 {
                best = (x, v);
            }
        }
    }
    Ok(best)
}

/// Candidate frequencies for the initial lower bound: a log grid spanning the
/// modal frequencies of `A`.
fn probe_grid(sys: &StateSpace) -> Vec<f64> {
    let mags: Vec<f64> = sys
        .a()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .filter(|m| *m > 0.0)
        .collect();
    let lo = mags.iter().cloned().fold(f64::INFINITY, f64::min).min(1.0) * 1e-2;
    let hi = mags.iter().cloned().fold(0.0, f64::max).max(1.0) * 1e2;
    let decades = (hi / lo).log10();
    let count = (decades * 20.0).ceil() as usize + 1;
    let mut grid: Vec<f64> = (0..count)
        .map(|k| lo * 10f64.powf(decades * k as f64 / (count - 1) as f64))
        .collect();
    grid.extend(
        sys.a()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.im.abs())
            .filter(|w| *w > 0.0),
    );
    grid.sort_by(|x, y| x.partial_cmp(y).unwrap());
    grid
}

/// Gains below this multiple of the data scale are treated as rounding noise:
/// the Hamiltonian test is meaningless there, so the sampled maximum is kept.
pub const NEGLIGIBLE_GAIN: f64 = 1e-9;

/// Whether `gain` is at rounding level relative to the size of the data.
pub fn is_negligible(sys: &StateSpace, gain: f64) -> bool {
    let mut scale = sys.d().norm();
    if !sys.is_static() {
        scale += sys.b().norm() * sys.c().norm() / -sys.spectral_abscissa();
    }
    gain <= NEGLIGIBLE_GAIN * scale
}

/// Compute `||G||_2` to relative accuracy `rel_tol` and locate its peak.
pub fn hinf_norm(sys: &StateSpace, rel_tol: f64) -> Result<(f64, PeakInfo)> {
    if !(rel_tol > 0.0 && rel_tol <= 1e-2) {
        return Err(Error::InvalidArgument(format!("rel_tol must lie in (0, 1e-2], got {rel_tol}")));
    }
    sys.ensure_stable()?;
    let d_gain = sigma_max_real(sys.d());
    if sys.is_static() {
        let (gain, v) = max_singular(sys, Frequency::Zero)?;
        let peak = PeakInfo { kind: PeakKind::AtZero, gain, v, other_peaks: Vec::new() };
        return Ok((gain, peak));
    }

    // (frequency, gain) of every point evaluated; 0 and inf are boundary points.
    let mut evaluated: Vec<(f64, f64)> = vec![(0.0, sigma_max_real(&sys.dc_gain()?)), (f64::INFINITY, d_gain)];
    let grid = probe_grid(sys);
    for &w in &grid {
        evaluated.push((w, gain_at(sys, w)?));
    }
    let mut lo = evaluated.iter().map(|e| e.1).fold(0.0, f64::max);

    if is_negligible(sys, lo) {
        return classify(sys, lo, evaluated);
    }
    let floor = 1e-12 * (1.0 + sys.d().norm() + sys.b().norm() * sys.c().norm());
    let mut hi = (1.01 * d_gain).max(1.0);
    while hi <= lo || !crossing_frequencies(sys, hi).is_empty() {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NumericalFailure("H-infinity upper bracket diverged".into()));
        }
    }

    let mut last_crossing: Option<(f64, Vec<f64>)> = None;
    while hi - lo > 2.0 * rel_tol * lo && hi > floor {
        let g = 0.5 * (lo + hi);
        let xs = crossing_frequencies(sys, g);
        if xs.is_empty() {
            hi = g;
            continue;
        }
        lo = g;
        // midpoints of consecutive crossings often sit near a peak
        for pair in xs.windows(2) {
            let mid = (pair[0] * pair[1]).sqrt();
            if mid.is_finite() && mid > 0.0 {
                let s = gain_at(sys, mid)?;
                evaluated.push((mid, s));
                lo = lo.max(s.min(hi));
            }
        }
        last_crossing = Some((g, xs));
    }

    // Polish inside every interval where the gain exceeded the last lower bracket.
    let mut polish_brackets: Vec<(f64, f64)> = Vec::new();
    if let Some((g, xs)) = &last_crossing {
        let mut bps = vec![0.0];
        bps.extend(xs.iter().cloned().filter(|w| w.is_finite() && *w > 0.0));
        bps.push(f64::INFINITY);
        for seg in bps.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let probe = if b.is_infinite() {
                (2.0 * a).max(a + 1.0)
            } else if a == 0.0 {
                0.5 * b
            } else {
                (a * b).sqrt()
            };
            if gain_at(sys, probe)? > *g {
                let upper = if b.is_infinite() { (10.0 * a).max(10.0) } else { b };
                polish_brackets.push((a, upper));
            }
        }
    }
    // and around the best probe point
    let (best_idx, _) = grid
        .iter()
        .enumerate()
        .map(|(i, &w)| (i, gain_at(sys, w).unwrap_or(0.0)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    if !grid.is_empty() {
        let a = if best_idx == 0 { 0.0 } else { grid[best_idx - 1] };
        let b = grid[(best_idx + 1).min(grid.len() - 1)];
        polish_brackets.push((a, b));
    }
    for (a, b) in polish_brackets {
        if b > a {
            let (w, s) = golden_max(|w| gain_at(sys, w), a, b, 1e-12)?;
            evaluated.push((w, s));
        }
    }

    let gain = evaluated.iter().map(|e| e.1).fold(0.0, f64::max);
    classify(sys, gain, evaluated)
}

/// Peak classification from every evaluated `(frequency, gain)` pair, with
/// `evaluated[0]` at `0` and `evaluated[1]` at infinity.
fn classify(sys: &StateSpace, gain: f64, evaluated: Vec<(f64, f64)>) -> Result<(f64, PeakInfo)> {
    let dc = evaluated[0].1;
    let d_gain = evaluated[1].1;
    let tie = (1.0 - CLASSIFY_TOL) * gain;

    let mut peaks: Vec<f64> = evaluated
        .iter()
        .filter(|e| e.0 > 0.0 && e.0.is_finite() && e.1 >= tie)
        .map(|e| e.0)
        .collect();
    peaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // collapse points that polish onto the same peak
    peaks.dedup_by(|x, y| (*x - *y).abs() <= 1e-4 * y.abs().max(1e-12));

    let kind = if dc >= tie {
        PeakKind::AtZero
    } else if d_gain >= tie {
        PeakKind::AtInfinity
    } else {
        PeakKind::AtFinite(peaks[0])
    };
    let other_peaks = match kind {
        PeakKind::AtFinite(w) => peaks.into_iter().filter(|&p| p != w).collect(),
        _ => peaks,
    };
    let (_, v) = max_singular(sys, kind.frequency())?;
    Ok((gain, PeakInfo { kind, gain, v, other_peaks }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use nalgebra::DMatrix;

    fn siso(a: f64, b: f64, c: f64, d: f64) -> StateSpace {
        StateSpace::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
            DMatrix::from_element(1, 1, c),
            DMatrix::from_element(1, 1, d),
        )
        .unwrap()
    }

    #[test]
    fn example_peak() {
        let (gain, peak) = hinf_norm(&fixtures::example6(), 1e-9).unwrap();
        assert!((gain - 7.0667).abs() < 1e-3, "gain {gain}");
        match peak.kind {
            PeakKind::AtFinite(w) => assert!((w - 0.1654).abs() < 1e-3, "w* {w}"),
            k => panic!("unexpected {k:?}"),
        }
        assert!((peak.v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn low_pass_peaks_at_dc() {
        let (gain, peak) = hinf_norm(&siso(-1.0, 1.0, 1.0, 0.0), 1e-9).unwrap();
        assert!((gain - 1.0).abs() < 1e-9);
        assert_eq!(peak.kind, PeakKind::AtZero);
    }

    #[test]
    fn high_pass_peaks_at_infinity() {
        // s/(s+1) = 1 - 1/(s+1)
        let (gain, peak) = hinf_norm(&siso(-1.0, 1.0, -1.0, 1.0), 1e-9).unwrap();
        assert!((gain - 1.0).abs() < 1e-9);
        assert_eq!(peak.kind, PeakKind::AtInfinity);
    }

    #[test]
    fn resonant_peak() {
        // w0^2/(s^2 + 2 z w0 s + w0^2), z = 0.1, w0 = 2: peak 1/(2z sqrt(1-z^2))
        let z: f64 = 0.1;
        let w0: f64 = 2.0;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -w0 * w0, -2.0 * z * w0]);
        let b = DMatrix::from_column_slice(2, 1, &[0.0, w0 * w0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let g = StateSpace::new(a, b, c, DMatrix::zeros(1, 1)).unwrap();
        let (gain, peak) = hinf_norm(&g, 1e-10).unwrap();
        let expect = 1.0 / (2.0 * z * (1.0 - z * z).sqrt());
        assert!((gain - expect).abs() < 1e-8 * expect);
        let wr = w0 * (1.0 - 2.0 * z * z).sqrt();
        match peak.kind {
            PeakKind::AtFinite(w) => assert!((w - wr).abs() < 1e-4),
            k => panic!("unexpected {k:?}"),
        }
    }

    #[test]
    fn unstable_rejected() {
        assert!(matches!(hinf_norm(&siso(1.0, 1.0, 1.0, 0.0), 1e-6), Err(Error::UnstableSystem(_))));
    }

    #[test]
    fn static_row_vector() {
        let (s, v) = max_singular(&fixtures::static_1m1(), Frequency::Zero).unwrap();
        assert!((s - 2f64.sqrt()).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[0].re - h).abs() < 1e-14 && (v[1].re + h).abs() < 1e-14);
    }

    #[test]
    fn identity_tie_break() {
        let g = StateSpace::static_gain(DMatrix::identity(2, 2)).unwrap();
        let (s, v) = max_singular(&g, Frequency::Zero).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
        assert!((v[0].re - 1.0).abs() < 1e-12 && v[1].norm() < 1e-12);
    }

    #[test]
    fn example_singular_value_at_peak() {
        let (s, _) = max_singular(&fixtures::example6(), Frequency::Finite(0.1654)).unwrap();
        assert!((s - 7.0667).abs() < 1e-3);
    }

    #[test]
    fn zero_system_has_zero_norm() {
        let g = fixtures::example6();
        let e = crate::lti::subtract(&g, &g).unwrap();
        let (gain, _) = hinf_norm(&e, 1e-9).unwrap();
        assert!(gain <= 1e-8, "{gain}");
    }
}
