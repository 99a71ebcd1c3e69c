//! Workspaces of circular obstacles, their decomposition into pairs of
//! close circles, and rotation canonicalization about the chain base.

use std::cmp::Ordering;

use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, ChainSpec, Circle};

/// Surface gap below which two circles form a primitive.
pub const DEFAULT_GAP_THRESHOLD: f64 = 1.5;
/// Squared descriptor distance below which a stored primitive is reused.
pub const DEFAULT_DISTANCE_THRESHOLD: f64 = 3.0;

const ORDER_TOL: f64 = 1e-9;

/// `(x_a, y_a, r_a, x_b, y_b, r_b)` in the chain base frame.
pub type Descriptor = [f64; 6];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub chain: ChainSpec,
    pub obstacles: Vec<Circle>,
}

impl World {
    pub fn new(chain: ChainSpec, obstacles: Vec<Circle>) -> Self {
        World { chain, obstacles }
    }

    /// The same chain with every obstacle rotated by `theta` about the base.
    pub fn rotated(&self, theta: f64) -> World {
        let base = self.chain.base();
        World {
            chain: self.chain.clone(),
            obstacles: self
                .obstacles
                .iter()
                .map(|c| c.rotated_about(base, theta))
                .collect(),
        }
    }
}

/// Two circles in canonical order together with their base-frame descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPrimitive {
    pub circle_a: Circle,
    pub circle_b: Circle,
    pub descriptor: Descriptor,
}

/// Orders circles by distance to `base`, then radius, then polar angle.
fn canonical_cmp(a: &Circle, b: &Circle, base: Point2<f64>) -> Ordering {
    let da = (a.center() - base).norm();
    let db = (b.center() - base).norm();
    if (da - db).abs() > ORDER_TOL {
        return da.total_cmp(&db);
    }
    if (a.r - b.r).abs() > ORDER_TOL {
        return a.r.total_cmp(&b.r);
    }
    let pa = (a.cy - base.y).atan2(a.cx - base.x);
    let pb = (b.cy - base.y).atan2(b.cx - base.x);
    pa.total_cmp(&pb)
}

impl LocalPrimitive {
    /// Builds a primitive from two circles, placing them in canonical order.
    pub fn new(c1: Circle, c2: Circle, base: Point2<f64>) -> Self {
        let (a, b) = match canonical_cmp(&c1, &c2, base) {
            Ordering::Greater => (c2, c1),
            _ => (c1, c2),
        };
        let descriptor = [
            a.cx - base.x,
            a.cy - base.y,
            a.r,
            b.cx - base.x,
            b.cy - base.y,
            b.r,
        ];
        LocalPrimitive {
            circle_a: a,
            circle_b: b,
            descriptor,
        }
    }

    /// Rebuilds a primitive from a base-frame descriptor.
    pub fn from_descriptor(d: &Descriptor, base: Point2<f64>) -> Result<Self> {
        let a = Circle::new(d[0] + base.x, d[1] + base.y, d[2])?;
        let b = Circle::new(d[3] + base.x, d[4] + base.y, d[5])?;
        Ok(LocalPrimitive::new(a, b, base))
    }

    pub fn circles(&self) -> [Circle; 2] {
        [self.circle_a, self.circle_b]
    }

    pub fn gap(&self) -> f64 {
        self.circle_a.gap_to(&self.circle_b)
    }

    pub fn rotated(&self, base: Point2<f64>, theta: f64) -> LocalPrimitive {
        LocalPrimitive::new(
            self.circle_a.rotated_about(base, theta),
            self.circle_b.rotated_about(base, theta),
            base,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalPrimitive {
    pub primitive: LocalPrimitive,
    /// Rotation about the base that maps the original onto `primitive`.
    pub theta: f64,
}

/// Every pair of obstacles whose surface gap is at most `gap_threshold`.
pub fn decompose(world: &World, gap_threshold: f64) -> Vec<LocalPrimitive> {
    assert!(gap_threshold > 0.0, "gap threshold must be positive");
    let base = world.chain.base();
    let obs = &world.obstacles;
    let mut out = Vec::new();
    for j in 0..obs.len() {
        for k in (j + 1)..obs.len() {
            if obs[j].gap_to(&obs[k]) <= gap_threshold {
                out.push(LocalPrimitive::new(obs[j], obs[k], base));
            }
        }
    }
    out
}

/// Rotates `lw` about `base` until `circle_a` sits on the positive x-axis.
pub fn canonicalize(lw: &LocalPrimitive, base: Point2<f64>) -> Result<CanonicalPrimitive> {
    let anchored = anchor_on(&lw.circle_a, lw, base)?;
    // Ties in distance and radius can flip the order after rotation; the
    // other circle then becomes the anchor.
    if anchored.primitive.circle_a != rotated_anchor(&lw.circle_a, &anchored, base) {
        return anchor_on(&lw.circle_b, lw, base);
    }
    Ok(anchored)
}

fn rotated_anchor(anchor: &Circle, c: &CanonicalPrimitive, base: Point2<f64>) -> Circle {
    snap_to_axis(anchor.rotated_about(base, c.theta), base)
}

fn anchor_on(
    anchor: &Circle,
    lw: &LocalPrimitive,
    base: Point2<f64>,
) -> Result<CanonicalPrimitive> {
    let dx = anchor.cx - base.x;
    let dy = anchor.cy - base.y;
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::CoincidentWithBase);
    }
    let theta = wrap_angle(-dy.atan2(dx));
    let other = if anchor == &lw.circle_a {
        lw.circle_b
    } else {
        lw.circle_a
    };
    let a = snap_to_axis(anchor.rotated_about(base, theta), base);
    let b = other.rotated_about(base, theta);
    Ok(CanonicalPrimitive {
        primitive: LocalPrimitive::new(a, b, base),
        theta,
    })
}

fn snap_to_axis(c: Circle, base: Point2<f64>) -> Circle {
    let d = (c.center() - base).norm();
    Circle {
        cx: base.x + d,
        cy: base.y,
        r: c.r,
    }
}

/// Negative squared Euclidean distance between descriptors.
pub fn similarity(a: &Descriptor, b: &Descriptor) -> f64 {
    -distance_sq(a, b)
}

pub fn distance_sq(a: &Descriptor, b: &Descriptor) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
