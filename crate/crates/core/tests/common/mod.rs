#![allow(dead_code)]

use std::sync::OnceLock;

use ccl_core::space::SymmetricSpace;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SPECS: [&str; 7] = [
    "euclidean:3",
    "hyperbolic:3",
    "hyperbolic:2,kappa=2xeuclidean:1",
    "spd:2",
    "spd:3",
    "spd:3,lambda=1",
    "hyperbolic:2xspd:2",
];

/// Spaces are built once; SPD construction samples curvature.
pub fn spaces() -> &'static [SymmetricSpace] {
    static CELL: OnceLock<Vec<SymmetricSpace>> = OnceLock::new();
    CELL.get_or_init(|| SPECS.iter().map(|s| SymmetricSpace::parse(s).unwrap()).collect())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
