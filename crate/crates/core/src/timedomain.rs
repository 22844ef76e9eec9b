//! Sampled simulation, finite-window signal norms, and the delay-system demo.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lti::StateSpace;

/// Uniformly sampled vector signal; sample `k` sits at `t0 + k dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    pub values: Vec<DVector<f64>>,
    pub dt: f64,
    pub t0: f64,
}

impl SampledSignal {
    pub fn new(values: Vec<DVector<f64>>, dt: f64, t0: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("sample step must be positive, got {dt}")));
        }
        let ch = values.first().map_or(0, |v| v.len());
        for (k, v) in values.iter().enumerate() {
            if v.len() != ch {
                return Err(Error::DimensionMismatch(format!("sample {k} has {} channels, expected {ch}", v.len())));
            }
            if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFiniteEntry { matrix: "signal", row: i, col: k });
            }
        }
        Ok(SampledSignal { values, dt, t0 })
    }

    /// Samples `f(t)` at `t0 + k dt` for `k < len`.
    pub fn from_fn(len: usize, dt: f64, t0: f64, mut f: impl FnMut(f64) -> DVector<f64>) -> Result<Self> {
        Self::new((0..len).map(|k| f(t0 + k as f64 * dt)).collect(), dt, t0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.values.first().map_or(0, |v| v.len())
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Length of the sampled window.
    pub fn duration(&self) -> f64 {
        self.len().saturating_sub(1) as f64 * self.dt
    }

    /// Samples `start..end`.
    pub fn window(&self, start: usize, end: usize) -> SampledSignal {
        SampledSignal { values: self.values[start..end].to_vec(), dt: self.dt, t0: self.time(start) }
    }
}

fn samples_for(t_end: f64, dt: f64) -> usize {
    let r = t_end / dt;
    let n = if (r - r.round()).abs() < 1e-9 * r.max(1.0) { r.round() } else { r.floor() };
    n as usize + 1
}

/// `w_i(t) = |v_i| max(2 cos(w t + theta_i), 0)` on `[0, t_end]`.
pub fn rectified_cosine_input(v: &DVector<Complex64>, omega: f64, t_end: f64, dt: f64) -> Result<SampledSignal> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidArgument(format!("frequency must be positive, got {omega}")));
    }
    let max = 2.0 * PI / (1000.0 * omega);
    if !(dt > 0.0) || dt > max {
        return Err(Error::StepTooCoarse { dt, max });
    }
    let mags: Vec<f64> = v.iter().map(|z| z.norm()).collect();
    let phases: Vec<f64> = v.iter().map(|z| z.arg()).collect();
    SampledSignal::from_fn(samples_for(t_end, dt), dt, 0.0, |t| {
        DVector::from_fn(mags.len(), |i, _| mags[i] * (2.0 * (omega * t + phases[i]).cos()).max(0.0))
    })
}

/// Zero-order-hold response from `x(0) = 0`.
pub fn simulate(sys: &StateSpace, w: &SampledSignal) -> Result<SampledSignal> {
    if w.channels() != sys.n_w() && !w.is_empty() {
        return Err(Error::DimensionMismatch(format!("input has {} channels, system has {}", w.channels(), sys.n_w())));
    }
    let (n, nw) = (sys.n(), sys.n_w());
    let d = sys.d();
    if n == 0 {
        return SampledSignal::new(w.values.iter().map(|u| d * u).collect(), w.dt, w.t0);
    }
    let mut blk = DMatrix::zeros(n + nw, n + nw);
    blk.view_mut((0, 0), (n, n)).copy_from(&(sys.a() * w.dt));
    blk.view_mut((0, n), (n, nw)).copy_from(&(sys.b() * w.dt));
    let e = blk.exp();
    let ad = e.view((0, 0), (n, n)).into_owned();
    let bd = e.view((0, n), (n, nw)).into_owned();
    let c = sys.c();
    let mut x = DVector::zeros(n);
    let mut out = Vec::with_capacity(w.len());
    for u in &w.values {
        out.push(c * &x + d * u);
        x = &ad * &x + &bd * u;
    }
    SampledSignal::new(out, w.dt, w.t0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NormOrder {
    One,
    Two,
    Infinity,
}

impl NormOrder {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(NormOrder::One),
            "2" => Ok(NormOrder::Two),
            "inf" | "infinity" => Ok(NormOrder::Infinity),
            _ => Err(Error::InvalidArgument(format!("norm order must be 1, 2 or inf, got {s}"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            NormOrder::One => "1",
            NormOrder::Two => "2",
            NormOrder::Infinity => "inf",
        }
    }

    /// `2^{(1-p)/p}`, with `1/2` for `p = inf`.
    pub fn uniform_constant(self) -> f64 {
        match self {
            NormOrder::One => 1.0,
            NormOrder::Two => std::f64::consts::FRAC_1_SQRT_2,
            NormOrder::Infinity => 0.5,
        }
    }
}

fn trapezoid(vals: impl Iterator<Item = f64>, dt: f64) -> f64 {
    let v: Vec<f64> = vals.collect();
    if v.len() < 2 {
        return 0.0;
    }
    dt * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]))
}

/// Finite-window `L_p` norm; finite `p` by the trapezoidal rule.
pub fn lp_norm(sig: &SampledSignal, p: NormOrder) -> f64 {
    match p {
        NormOrder::One => trapezoid(sig.values.iter().map(|v| v.lp_norm(1)), sig.dt),
        NormOrder::Two => trapezoid(sig.values.iter().map(|v| v.norm_squared()), sig.dt).sqrt(),
        NormOrder::Infinity => sig.values.iter().map(|v| v.amax()).fold(0.0, f64::max),
    }
}

/// `(1/T) int |w|^2`, over the sampled window.
pub fn mean_square(sig: &SampledSignal) -> f64 {
    let d = sig.duration();
    if d == 0.0 {
        return 0.0;
    }
    lp_norm(sig, NormOrder::Two).powi(2) / d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainOptions {
    /// Transient periods discarded before measuring; raised as needed so the
    /// slowest mode decays by `1e-6`.
    pub settle_periods: usize,
    pub measure_periods: usize,
    /// Sample step; `None` picks `period / 2000`.
    pub dt: Option<f64>,
}

impl Default for GainOptions {
    fn default() -> Self {
        GainOptions { settle_periods: 2, measure_periods: 4, dt: None }
    }
}

/// Transient periods needed for `e^{alpha t} < 1e-6`.
pub fn settle_periods_for(sys: &StateSpace, omega: f64) -> usize {
    if sys.is_static() {
        return 0;
    }
    let alpha = sys.spectral_abscissa();
    let t = (1e6f64).ln() / -alpha;
    (t * omega / (2.0 * PI)).ceil() as usize
}

/// RMS ratio of the steady-state output to the rectified-cosine input with
/// directions `v` at base frequency `omega`.
pub fn empirical_gain(sys: &StateSpace, omega: f64, v: &DVector<Complex64>, opts: &GainOptions) -> Result<f64> {
    sys.ensure_stable()?;
    if v.len() != sys.n_w() {
        return Err(Error::DimensionMismatch(format!("direction has {} entries, system has {} inputs", v.len(), sys.n_w())));
    }
    if opts.measure_periods == 0 {
        return Err(Error::InvalidArgument("need at least one measured period".into()));
    }
    let period = 2.0 * PI / omega;
    let per = (period / opts.dt.unwrap_or(period / 2000.0)).ceil() as usize;
    let dt = period / per as f64;
    let settle = opts.settle_periods.max(settle_periods_for(sys, omega));
    let total = settle + opts.measure_periods;
    let w = rectified_cosine_input(v, omega, total as f64 * period, dt)?;
    let z = simulate(sys, &w)?;
    let start = settle * per;
    let end = (total * per + 1).min(w.len());
    let (ww, zw) = (w.window(start, end), z.window(start, end));
    Ok((mean_square(&zw) / mean_square(&ww)).sqrt())
}

/// Pure delay `z(t) = w(t) - w(t - delay)` with `delay = shift * dt`.
pub fn delay_difference(w: &SampledSignal, shift: usize) -> SampledSignal {
    let values = (0..w.len())
        .map(|k| if k >= shift { &w.values[k] - &w.values[k - shift] } else { w.values[k].clone() })
        .collect();
    SampledSignal { values, dt: w.dt, t0: w.t0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayDemo {
    pub p: NormOrder,
    /// Gain reached by the signed input.
    pub achieved_norm: f64,
    /// Gain reached by the nonnegative input.
    pub achieved_plus_norm: f64,
    pub ratio: f64,
    /// Sample step actually used.
    pub dt: f64,
}

/// Gains of `1 - e^{-Ls}` for a signed and a nonnegative test input.
///
/// Signed inputs: a square wave of period `2L` (`p = 2, inf`) or a pulse pair
/// `L` apart with opposite signs (`p = 1`). Nonnegative inputs: the rectified
/// cosine of period `2L`, one indicator pulse of width `L`, or one narrow
/// pulse. Periodic inputs are measured after the first delay.
pub fn delay_demo(l: f64, p: NormOrder, dt: f64, horizon: f64) -> Result<DelayDemo> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidArgument(format!("delay must be positive, got {l}")));
    }
    let max = l / 1000.0;
    if !(dt > 0.0) || dt > max {
        return Err(Error::StepTooCoarse { dt, max });
    }
    if !(horizon >= 4.0 * l) {
        return Err(Error::InvalidArgument(format!("horizon must be at least 4 L, got {horizon}")));
    }
    let shift = (l / dt).ceil() as usize;
    let dt = l / shift as f64;
    let len = samples_for(horizon, dt);
    let scalar = |f: &dyn Fn(usize) -> f64| SampledSignal::from_fn(len, dt, 0.0, |t| DVector::from_element(1, f((t / dt).round() as usize)));
    let gain = |w: &SampledSignal, steady: bool| {
        let z = delay_difference(w, shift);
        let (w, z) = if steady { (w.window(shift, len), z.window(shift, len)) } else { (w.clone(), z) };
        lp_norm(&z, p) / lp_norm(&w, p)
    };
    // a pulse shorter than the delay
    let width = shift / 10;
    let square = |k: usize| if (k / shift) % 2 == 0 { 1.0 } else { -1.0 };
    let (signed, nonneg) = match p {
        NormOrder::Two => {
            let w = scalar(&square)?;
            let omega = PI / l;
            let cos = scalar(&|k: usize| (2.0 * (omega * k as f64 * dt).cos()).max(0.0))?;
            (gain(&w, true), gain(&cos, true))
        }
        NormOrder::Infinity => {
            let w = scalar(&square)?;
            let pulse = scalar(&|k: usize| if k < shift { 1.0 } else { 0.0 })?;
            (gain(&w, true), gain(&pulse, false))
        }
        NormOrder::One => {
            let pair = scalar(&|k: usize| {
                if k < width {
                    1.0
                } else if (shift..shift + width).contains(&k) {
                    -1.0
                } else {
                    0.0
                }
            })?;
            let pulse = scalar(&|k: usize| if k < width { 1.0 } else { 0.0 })?;
            (gain(&pair, false), gain(&pulse, false))
        }
    };
    Ok(DelayDemo { p, achieved_norm: signed, achieved_plus_norm: nonneg, ratio: nonneg / signed, dt })
}

/// Write `(t, w_1.., z_1..)` rows as CSV.
pub fn write_trajectory_csv<W: Write>(w: &SampledSignal, z: &SampledSignal, out: W) -> Result<()> {
    if w.len() != z.len() {
        return Err(Error::DimensionMismatch(format!("{} input samples, {} output samples", w.len(), z.len())));
    }
    let mut header = vec!["t".to_string()];
    header.extend((1..=w.channels()).map(|i| format!("w{i}")));
    header.extend((1..=z.channels()).map(|i| format!("z{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..w.len()).map(|k| {
        let mut r = vec![w.time(k)];
        r.extend(w.values[k].iter());
        r.extend(z.values[k].iter());
        r
    });
    crate::io::write_csv(out, &header, rows).map_err(|e| Error::InvalidArgument(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn first_order() -> StateSpace {
        StateSpace::new(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
        )
        .unwrap()
    }

    fn one() -> DVector<Complex64> {
        DVector::from_element(1, Complex64::new(1.0, 0.0))
    }

    #[test]
    fn rectified_cosine_samples() {
        let dt = 2.0 * PI / 4000.0;
        let w = rectified_cosine_input(&one(), 1.0, 2.0 * PI, dt).unwrap();
        assert_eq!(w.len(), 4001);
        assert_relative_eq!(w.values[0][0], 2.0);
        assert!(w.values[1000][0].abs() < 1e-12);
        assert_eq!(w.values[2000][0], 0.0);
        let mean = trapezoid(w.values.iter().map(|v| v[0]), dt) / (2.0 * PI);
        assert_relative_eq!(mean, 2.0 / PI, epsilon = 1e-6);
        assert_relative_eq!(mean_square(&w), 1.0, epsilon = 1e-6);
        assert!(matches!(rectified_cosine_input(&one(), 1.0, 1.0, 0.01), Err(Error::StepTooCoarse { .. })));
    }

    #[test]
    fn phases_shift_channels() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = DVector::from_vec(vec![Complex64::new(h, 0.0), Complex64::new(-h, 0.0)]);
        let w = rectified_cosine_input(&v, 1.0, 4.0 * PI, 2.0 * PI / 2000.0).unwrap();
        for k in 0..2000 {
            assert!((w.values[k + 1000][1] - w.values[k][0]).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_mean_square_is_two() {
        let dt = 2.0 * PI / 4000.0;
        let s = SampledSignal::from_fn(4001, dt, 0.0, |t| DVector::from_element(1, 2.0 * t.cos())).unwrap();
        assert_relative_eq!(mean_square(&s), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn step_response_matches_closed_form() {
        let dt = 1e-3;
        let w = SampledSignal::from_fn(5001, dt, 0.0, |_| DVector::from_element(1, 1.0)).unwrap();
        let z = simulate(&first_order(), &w).unwrap();
        for k in (0..5001).step_by(250) {
            assert!((z.values[k][0] - (1.0 - (-(k as f64) * dt).exp())).abs() < 1e-6);
        }
        let zero = SampledSignal::from_fn(10, dt, 0.0, |_| DVector::zeros(1)).unwrap();
        assert!(simulate(&first_order(), &zero).unwrap().values.iter().all(|v| v[0] == 0.0));
    }

    #[test]
    fn norms_of_constants() {
        let s = SampledSignal::from_fn(1001, 1e-3, 0.0, |_| DVector::from_element(1, 1.0)).unwrap();
        assert_relative_eq!(lp_norm(&s, NormOrder::Infinity), 1.0);
        assert_relative_eq!(lp_norm(&s, NormOrder::One), 1.0, epsilon = 1e-12);
        assert_relative_eq!(lp_norm(&s, NormOrder::Two), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dc_gain_at_low_frequency() {
        let g = empirical_gain(&first_order(), 1e-3, &one(), &GainOptions { measure_periods: 1, ..Default::default() }).unwrap();
        assert!((g - 1.0).abs() < 1e-2, "{g}");
    }

    #[test]
    fn delay_constants() {
        for p in [NormOrder::One, NormOrder::Two, NormOrder::Infinity] {
            let d = delay_demo(1.0, p, 1e-3, 200.0).unwrap();
            assert!((d.ratio / p.uniform_constant() - 1.0).abs() < 0.02, "{d:?}");
        }
        assert!(matches!(delay_demo(1.0, NormOrder::Two, 0.01, 10.0), Err(Error::StepTooCoarse { .. })));
    }
}
