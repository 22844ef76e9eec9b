//! Internally positive input filters and the augmented system they induce.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{block_diag, hstack, kron, vstack};
use crate::lti::StateSpace;

/// Filter `x_p' = A_p x_p + B_p w` with `A_p = J(alpha, N) (x) I` and
/// `B_p = e_N (x) I`, where `J` is upper bidiagonal with `alpha` on the
/// diagonal and ones above it.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveFilter {
    pub alpha: f64,
    pub degree: usize,
    pub n_w: usize,
    pub a_p: DMatrix<f64>,
    pub b_p: DMatrix<f64>,
}

impl PositiveFilter {
    /// Number of filter states, `N * n_w`.
    pub fn n_p(&self) -> usize {
        self.degree * self.n_w
    }
}

pub fn build_filter(alpha: f64, degree: i64, n_w: usize) -> Result<PositiveFilter> {
    if !(alpha < 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidAlpha(alpha));
    }
    if degree < 0 {
        return Err(Error::NegativeDegree(degree));
    }
    if n_w == 0 {
        return Err(Error::DimensionMismatch("filter needs n_w >= 1".into()));
    }
    let n = degree as usize;
    let j = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            alpha
        } else if c == r + 1 {
            1.0
        } else {
            0.0
        }
    });
    let e = DMatrix::from_fn(n, 1, |r, _| if r + 1 == n { 1.0 } else { 0.0 });
    let eye = DMatrix::identity(n_w, n_w);
    Ok(PositiveFilter { alpha, degree: n, n_w, a_p: kron(&j, &eye), b_p: kron(&e, &eye) })
}

/// `G` driven in parallel with the filter; the state is `[x; x_p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    /// States of the plant.
    pub n: usize,
    /// States of the filter.
    pub n_p: usize,
    pub n_w: usize,
}

impl AugmentedSystem {
    pub fn n_a(&self) -> usize {
        self.n + self.n_p
    }

    pub fn n_z(&self) -> usize {
        self.d.nrows()
    }

    /// Width of the nonnegative signal `[x_p; w]`.
    pub fn n_nonneg(&self) -> usize {
        self.n_p + self.n_w
    }

    pub fn to_state_space(&self) -> Result<StateSpace> {
        StateSpace::new(self.a.clone(), self.b.clone(), self.c.clone(), self.d.clone())
    }
}

pub fn augment(sys: &StateSpace, filter: &PositiveFilter) -> Result<AugmentedSystem> {
    if filter.n_w != sys.n_w() {
        return Err(Error::DimensionMismatch(format!(
            "filter has n_w = {} but the system has {} inputs",
            filter.n_w,
            sys.n_w()
        )));
    }
    let n_p = filter.n_p();
    Ok(AugmentedSystem {
        a: block_diag(sys.a(), &filter.a_p),
        b: vstack(sys.b(), &filter.b_p),
        c: hstack(sys.c(), &DMatrix::zeros(sys.n_z(), n_p)),
        d: sys.d().clone(),
        n: sys.n(),
        n_p,
        n_w: sys.n_w(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::lti::{is_hurwitz, is_internally_positive, is_metzler};

    #[test]
    fn degree_two_scalar() {
        let f = build_filter(-1.0, 2, 1).unwrap();
        assert_eq!(f.a_p, DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]));
        assert_eq!(f.b_p, DMatrix::from_column_slice(2, 1, &[0.0, 1.0]));
    }

    #[test]
    fn example_dimensions() {
        let f = build_filter(-0.8, 15, 3).unwrap();
        assert_eq!(f.a_p.shape(), (45, 45));
        assert_eq!(f.b_p.shape(), (45, 3));
        assert!(is_metzler(&f.a_p) && is_hurwitz(&f.a_p));
        assert!(f.b_p.iter().all(|&x| x >= 0.0));
        let aug = augment(&fixtures::example6(), &f).unwrap();
        assert_eq!(aug.a.shape(), (51, 51));
        assert_eq!(aug.n_nonneg(), 48);
    }

    #[test]
    fn degree_zero_is_identity() {
        let g = fixtures::example6();
        let aug = augment(&g, &build_filter(-1.0, 0, 3).unwrap()).unwrap();
        assert_eq!(&aug.a, g.a());
        assert_eq!(&aug.b, g.b());
        assert_eq!(&aug.c, g.c());
        assert_eq!(&aug.d, g.d());
    }

    #[test]
    fn bad_parameters() {
        assert_eq!(build_filter(0.0, 1, 1), Err(Error::InvalidAlpha(0.0)));
        assert_eq!(build_filter(-1.0, -1, 1), Err(Error::NegativeDegree(-1)));
        let f = build_filter(-1.0, 1, 2).unwrap();
        assert!(matches!(augment(&fixtures::example6(), &f), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn positivity_preserved() {
        let g = fixtures::pos_g1();
        let aug = augment(&g, &build_filter(-1.2, 4, g.n_w()).unwrap()).unwrap();
        assert!(is_internally_positive(&aug.to_state_space().unwrap()));
    }
}
