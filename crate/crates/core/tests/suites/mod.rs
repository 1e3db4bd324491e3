//! Seeded property suites shared by the `properties` and `acceptance`
//! test targets. Every property runs over seeds 1 through 20 and panics
//! with the offending seed on violation.

#![allow(dead_code)]

pub mod gp;
pub mod predictor;
pub mod scene;
pub mod simulator;
pub mod strategies;
pub mod trajgen;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SEEDS: std::ops::RangeInclusive<u64> = 1..=20;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub type Property = (&'static str, fn());

/// Every property, grouped by module, in a fixed order.
pub fn all() -> Vec<Property> {
    let mut v = Vec::new();
    v.extend_from_slice(gp::ALL);
    v.extend_from_slice(predictor::ALL);
    v.extend_from_slice(scene::ALL);
    v.extend_from_slice(strategies::ALL);
    v.extend_from_slice(simulator::ALL);
    v.extend_from_slice(trajgen::ALL);
    v
}
