//! Bounds on the L2+ induced norm of stable LTI systems.

pub mod conic;
pub mod error;
pub mod filter;
pub mod fixtures;
pub mod harmonic;
pub mod hinf;
pub mod io;
pub mod linalg;
pub mod lti;
pub mod matrix;
pub mod report;
pub mod sip;
pub mod timedomain;
pub mod upper;

pub use error::{Error, Result};
pub use filter::{augment, build_filter, AugmentedSystem, PositiveFilter};
pub use hinf::{hinf_norm, max_singular, Frequency, PeakInfo, PeakKind};
pub use harmonic::{fourier_coeffs, parseval_check, upsilon, upsilon_sequence, GridOptions, HarmonicCoefficients, Upsilon};
pub use lti::StateSpace;
pub use matrix::{matrix_l2plus_bruteforce, matrix_l2plus_lower, BruteforceOptions};
pub use report::{certify, BoundsReport, CertifyOptions};
pub use timedomain::{delay_demo, empirical_gain, lp_norm, simulate, NormOrder, SampledSignal};
pub use upper::{sweep, upper_bound, UpperBoundResult, UpperOptions};
