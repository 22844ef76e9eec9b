//! Combined upper and lower bounds for one system, as a JSON-ready report.

use serde::{Serialize, Serializer};

use crate::conic::SolverStatus;
use crate::error::{Error, Result};
use crate::harmonic::{best_upsilon, uniform_floor, upsilon_sequence, GridOptions, Upsilon, DEFAULT_MAX_HARMONICS};
use crate::hinf::{hinf_norm, is_negligible, PeakInfo, PeakKind};
use crate::lti::StateSpace;
use crate::upper::{sweep, SweepResult, UpperOptions, DEFAULT_ALPHAS, DEFAULT_MAX_DEGREE};

pub const SCHEMA_VERSION: u32 = 1;

/// Slack allowed when checking the report invariants.
pub const REPORT_TOL: f64 = 1e-6;

fn finite_or_null<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakSummary {
    /// `"zero"`, `"finite"` or `"infinity"`.
    pub kind: &'static str,
    #[serde(serialize_with = "finite_or_null")]
    pub omega: f64,
    pub v_abs: Vec<f64>,
    /// Phases of `v` in radians.
    pub v_arg: Vec<f64>,
}

impl PeakSummary {
    pub fn from_peak(peak: &PeakInfo) -> Self {
        let kind = match peak.kind {
            PeakKind::AtZero => "zero",
            PeakKind::AtFinite(_) => "finite",
            PeakKind::AtInfinity => "infinity",
        };
        PeakSummary {
            kind,
            omega: peak.kind.omega(),
            v_abs: peak.v.iter().map(|z| z.norm()).collect(),
            v_arg: peak.v.iter().map(|z| if z.norm() == 0.0 { 0.0 } else { z.arg() }).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperRow {
    pub alpha: f64,
    #[serde(rename = "N")]
    pub degree: usize,
    /// `null` for failed cells.
    #[serde(serialize_with = "finite_or_null")]
    pub gamma: f64,
    pub status: SolverStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub upsilon: f64,
    /// `0` for the zero-frequency limit, `null` for the infinite one.
    #[serde(serialize_with = "finite_or_null")]
    pub omega_arg: f64,
}

impl From<&Upsilon> for LowerRow {
    fn from(u: &Upsilon) -> Self {
        LowerRow { n: u.n, upsilon: u.value, omega_arg: u.omega }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub schema: u32,
    pub system_name: Option<String>,
    pub l2_norm: f64,
    pub peak: PeakSummary,
    pub upper_bounds: Vec<UpperRow>,
    pub lower_bounds: Vec<LowerRow>,
    pub best_upper: f64,
    pub best_lower: f64,
    pub relative_gap: f64,
    /// `(1/sqrt 2) l2_norm`.
    pub uniform_floor: f64,
    pub lower_exceeds_floor: bool,
}

impl BoundsReport {
    /// Violations of `best_lower <= best_upper` and `best_lower >= floor`.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let slack = REPORT_TOL * self.best_upper.max(1.0);
        if self.best_lower > self.best_upper + slack {
            out.push(format!("best_lower {} exceeds best_upper {}", self.best_lower, self.best_upper));
        }
        if self.relative_gap < -REPORT_TOL {
            out.push(format!("relative_gap {} is negative", self.relative_gap));
        }
        if self.best_lower < self.uniform_floor - slack {
            out.push(format!("best_lower {} is below the floor {}", self.best_lower, self.uniform_floor));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {:.6} <= ||G||_2+ <= {:.6}  (relative gap {:.4}, ||G||_2 = {:.6})",
            self.system_name.as_deref().unwrap_or("system"),
            self.best_lower,
            self.best_upper,
            self.relative_gap,
            self.l2_norm
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyOptions {
    pub alphas: Vec<f64>,
    pub max_degree: usize,
    pub max_harmonics: usize,
    pub upper: UpperOptions,
    pub grid: GridOptions,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            alphas: DEFAULT_ALPHAS.to_vec(),
            max_degree: DEFAULT_MAX_DEGREE,
            max_harmonics: DEFAULT_MAX_HARMONICS,
            upper: UpperOptions::default(),
            grid: GridOptions::default(),
        }
    }
}

/// Assemble a report from computed parts. With no upper-bound cells the
/// L2 norm stands in as the upper bound.
pub fn build_report(sys: &StateSpace, l2: f64, peak: &PeakInfo, upper: &SweepResult, lower: &[Upsilon]) -> Result<BoundsReport> {
    let best_upper = if upper.cells.is_empty() {
        l2
    } else {
        upper
            .best()
            .map(|c| c.gamma)
            .ok_or_else(|| Error::NumericalFailure("no upper-bound cell succeeded".into()))?
    };
    let best_lower = best_upsilon(lower).map_or(0.0, |u| u.value);
    let floor = uniform_floor(l2);
    let relative_gap = if best_upper > 0.0 && !is_negligible(sys, best_upper) { (best_upper - best_lower) / best_upper } else { 0.0 };
    Ok(BoundsReport {
        schema: SCHEMA_VERSION,
        system_name: sys.name().map(str::to_string),
        l2_norm: l2,
        peak: PeakSummary::from_peak(peak),
        upper_bounds: upper
            .cells
            .iter()
            .map(|c| UpperRow { alpha: c.alpha, degree: c.degree, gamma: c.gamma, status: c.status })
            .collect(),
        lower_bounds: lower.iter().map(LowerRow::from).collect(),
        best_upper,
        best_lower,
        relative_gap,
        uniform_floor: floor,
        lower_exceeds_floor: best_lower >= floor - REPORT_TOL * floor.max(1.0),
    })
}

/// Upper-bound sweep plus harmonic lower bounds.
pub fn certify(sys: &StateSpace, opts: &CertifyOptions) -> Result<BoundsReport> {
    sys.ensure_stable()?;
    let (l2, peak) = hinf_norm(sys, 1e-9)?;
    let upper = sweep(sys, &opts.alphas, opts.max_degree, &opts.upper)?;
    let lower = upsilon_sequence(sys, opts.max_harmonics, &opts.grid)?;
    build_report(sys, l2, &peak, &upper, &lower)
}
