//! Fixtures shared by the criterion benchmarks.

use glsampler::{ChainSpec, Circle, Configuration, World};
use nalgebra::Point2;

/// The eight-link arm used throughout the benchmarks.
pub fn arm() -> ChainSpec {
    ChainSpec::new(
        Point2::origin(),
        vec![2.0, 1.8, 1.6, 1.5, 1.4, 1.2, 1.1, 1.0],
    )
    .unwrap()
}

/// A close pair of circles ahead of the arm, gap 0.3.
pub fn pair_world() -> World {
    World::new(
        arm(),
        vec![
            Circle::new(6.0, 1.65, 1.5).unwrap(),
            Circle::new(6.0, -1.65, 1.5).unwrap(),
        ],
    )
}

pub fn bent(dof: usize) -> Configuration {
    Configuration::new((0..dof).map(|i| 0.3 * (i as f64 + 1.0).sin()).collect())
}
