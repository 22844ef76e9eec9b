//! Bundled example systems (the JSON files under `fixtures/`).

use crate::io::parse_system;
use crate::lti::StateSpace;

pub const EXAMPLE6_JSON: &str = include_str!("../fixtures/example6.json");
pub const POS_G1_JSON: &str = include_str!("../fixtures/pos_g1.json");
pub const POS_G2_JSON: &str = include_str!("../fixtures/pos_g2.json");
pub const POS_G3_JSON: &str = include_str!("../fixtures/pos_g3.json");
pub const STATIC_1M1_JSON: &str = include_str!("../fixtures/static_1m1.json");

/// 6-state, 3-input, 3-output sign-indefinite system.
pub fn example6() -> StateSpace {
    parse_system(EXAMPLE6_JSON).expect("bundled fixture parses")
}

/// 6-state internally positive system.
pub fn pos_g1() -> StateSpace {
    parse_system(POS_G1_JSON).expect("bundled fixture parses")
}

/// 4-state internally positive reduced model of [`pos_g1`].
pub fn pos_g2() -> StateSpace {
    parse_system(POS_G2_JSON).expect("bundled fixture parses")
}

/// Second 4-state internally positive reduced model of [`pos_g1`].
pub fn pos_g3() -> StateSpace {
    parse_system(POS_G3_JSON).expect("bundled fixture parses")
}

/// The static gain `[1, -1]`.
pub fn static_1m1() -> StateSpace {
    parse_system(STATIC_1M1_JSON).expect("bundled fixture parses")
}

/// Seeded random stable system with entries in `[-1, 1]` and spectral
/// abscissa in `[-1, -0.1]`.
pub fn random_stable(seed: u64, n: usize, n_w: usize, n_z: usize) -> StateSpace {
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..=1.0));
    let mut a = draw(n, n);
    let (b, c, d) = (draw(n, n_w), draw(n_z, n), draw(n_z, n_w));
    if n > 0 {
        let margin = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9).random_range(0.1..=1.0);
        let shift = crate::lti::spectral_abscissa(&a) + margin;
        for i in 0..n {
            a[(i, i)] -= shift;
        }
    }
    StateSpace::new(a, b, c, d).expect("finite data").with_name(format!("random_{seed}"))
}
