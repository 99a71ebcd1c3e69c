//! Regular lattice over canonical primitive descriptors for offline
//! database builds.

use glsampler::{ChainSpec, Descriptor};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Box in the canonical primitive space. Circle `a` sits on the +x axis at
/// `distance_a`; circle `b` is at `(x_b, y_b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Chain the entries are built for.
    pub chain: ChainSpec,
    pub distance_a: [f64; 2],
    pub radius_a: [f64; 2],
    pub x_b: [f64; 2],
    pub y_b: [f64; 2],
    pub radius_b: [f64; 2],
    /// Only pairs at most this far apart (surface to surface) are kept.
    pub gap_threshold: f64,
    /// Retrieval threshold on squared descriptor distance.
    pub distance_threshold: f64,
}

/// Largest lattice pitch whose covering radius in 5 dimensions,
/// `h·√5 / 2`, stays below `√d`.
pub fn max_pitch(distance_threshold: f64) -> f64 {
    2.0 * (distance_threshold / 5.0).sqrt()
}

/// Number of lattice values on `[lo, hi]` with spacing strictly below `h`.
pub fn axis_count(range: [f64; 2], h: f64) -> usize {
    let span = range[1] - range[0];
    if span <= 0.0 {
        return 1;
    }
    (span / h).floor() as usize + 2
}

fn axis_values(range: [f64; 2], h: f64) -> Vec<f64> {
    let n = axis_count(range, h);
    if n == 1 {
        return vec![range[0]];
    }
    let step = (range[1] - range[0]) / (n - 1) as f64;
    (0..n).map(|i| range[0] + step * i as f64).collect()
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let ranges = [
            self.distance_a,
            self.radius_a,
            self.x_b,
            self.y_b,
            self.radius_b,
        ];
        if ranges
            .iter()
            .any(|r| !(r[0] <= r[1]) || !r[0].is_finite() || !r[1].is_finite())
        {
            return Err(CliError::Usage(
                "grid ranges must be finite with lo <= hi".into(),
            ));
        }
        if !(self.radius_a[0] > 0.0 && self.radius_b[0] > 0.0 && self.distance_a[0] > 0.0) {
            return Err(CliError::Usage(
                "grid radii and distance must be positive".into(),
            ));
        }
        if !(self.distance_threshold > 0.0 && self.gap_threshold > 0.0) {
            return Err(CliError::Usage("grid thresholds must be positive".into()));
        }
        self.chain.validate()?;
        Ok(())
    }

    pub fn pitch(&self) -> f64 {
        max_pitch(self.distance_threshold)
    }

    /// Lattice size per axis, before filtering.
    pub fn axis_counts(&self) -> [usize; 5] {
        let h = self.pitch();
        [
            self.distance_a,
            self.radius_a,
            self.x_b,
            self.y_b,
            self.radius_b,
        ]
        .map(|r| axis_count(r, h))
    }

    /// Lattice points describing a usable primitive: disjoint circles,
    /// gap within the threshold, and `b` no closer to the base than `a`.
    pub fn points(&self) -> Vec<Descriptor> {
        let h = self.pitch();
        let da = axis_values(self.distance_a, h);
        let ra = axis_values(self.radius_a, h);
        let xb = axis_values(self.x_b, h);
        let yb = axis_values(self.y_b, h);
        let rb = axis_values(self.radius_b, h);
        let mut out = Vec::new();
        for &d in &da {
            for &r_a in &ra {
                for &x in &xb {
                    for &y in &yb {
                        for &r_b in &rb {
                            let desc = [d, 0.0, r_a, x, y, r_b];
                            if self.keeps(&desc) {
                                out.push(desc);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn keeps(&self, d: &Descriptor) -> bool {
        let center_gap = ((d[3] - d[0]).powi(2) + d[4].powi(2)).sqrt();
        let gap = center_gap - d[2] - d[5];
        let farther = (d[3] * d[3] + d[4] * d[4]).sqrt() >= d[0];
        gap > 0.0 && gap <= self.gap_threshold && farther
    }
}
