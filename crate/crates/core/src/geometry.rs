//! Planar geometry, forward kinematics of the fixed-base chain and the
//! validity predicates every planner and sampler relies on.
//!
//! Links are zero-width segments and touching an obstacle counts as a
//! collision. Angles are kept in `(-π, π]`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::Index;

use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default interpolation resolution for [`motion_valid`], max-norm radians.
pub const DEFAULT_MOTION_STEP: f64 = 0.05;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Signed shortest rotation taking `from` to `to`, in `(-π, π]`.
pub fn angle_diff(to: f64, from: f64) -> f64 {
    wrap_angle(to - from)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl Circle {
    pub fn new(cx: f64, cy: f64, r: f64) -> Result<Self> {
        let c = Circle { cx, cy, r };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) || !self.cx.is_finite() || !self.cy.is_finite() || !self.r.is_finite() {
            return Err(Error::InvalidInput(format!(
                "circle ({}, {}, {}) needs a finite positive radius",
                self.cx, self.cy, self.r
            )));
        }
        Ok(())
    }

    pub fn center(&self) -> Point2<f64> {
        Point2::new(self.cx, self.cy)
    }

    /// Rotates the center by `theta` about `pivot`; the radius is unchanged.
    pub fn rotated_about(&self, pivot: Point2<f64>, theta: f64) -> Circle {
        let p = rotate_about(self.center(), pivot, theta);
        Circle {
            cx: p.x,
            cy: p.y,
            r: self.r,
        }
    }

    /// Surface-to-surface gap; negative when the disks overlap.
    pub fn gap_to(&self, other: &Circle) -> f64 {
        (self.center() - other.center()).norm() - self.r - other.r
    }
}

pub fn rotate_about(p: Point2<f64>, pivot: Point2<f64>, theta: f64) -> Point2<f64> {
    let (s, c) = theta.sin_cos();
    let d = p - pivot;
    pivot + Vector2::new(c * d.x - s * d.y, s * d.x + c * d.y)
}

/// Closed joint interval in radians, a sub-interval of `[-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimit {
    pub lo: f64,
    pub hi: f64,
}

impl JointLimit {
    pub const FULL: JointLimit = JointLimit { lo: -PI, hi: PI };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || lo < -PI - 1e-12 || hi > PI + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "joint limit [{lo}, {hi}] must be a non-empty sub-interval of [-pi, pi]"
            )));
        }
        Ok(JointLimit { lo, hi })
    }

    /// A full-circle joint wraps around; interpolation takes the short way.
    pub fn is_full_circle(&self) -> bool {
        self.hi - self.lo >= TAU - 1e-9
    }

    pub fn contains(&self, a: f64) -> bool {
        self.is_full_circle() || (a >= self.lo && a <= self.hi)
    }

    pub fn clamp(&self, a: f64) -> f64 {
        if self.is_full_circle() {
            a
        } else {
            a.clamp(self.lo, self.hi)
        }
    }

    /// Maps an arbitrary angle onto this joint: wrapped for full circles,
    /// otherwise kept when inside the limits and clamped after wrapping.
    pub fn normalize(&self, a: f64) -> f64 {
        if self.is_full_circle() {
            wrap_angle(a)
        } else if a >= self.lo && a <= self.hi {
            a
        } else {
            wrap_angle(a).clamp(self.lo, self.hi)
        }
    }

    /// Displacement from `from` to `to` along this joint.
    pub fn delta(&self, from: f64, to: f64) -> f64 {
        if self.is_full_circle() {
            angle_diff(to, from)
        } else {
            to - from
        }
    }
}

impl Default for JointLimit {
    fn default() -> Self {
        JointLimit::FULL
    }
}

/// A point in configuration space: one angle per joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(Vec<f64>);

impl Configuration {
    /// Builds a configuration, wrapping every angle into `(-π, π]`.
    pub fn new(angles: Vec<f64>) -> Self {
        Configuration(angles.into_iter().map(wrap_angle).collect())
    }

    /// Wraps nothing; callers guarantee the angles already fit their joints.
    pub(crate) fn from_normalized(angles: Vec<f64>) -> Self {
        Configuration(angles)
    }

    pub fn zeros(dof: usize) -> Self {
        Configuration(vec![0.0; dof])
    }

    pub fn dof(&self) -> usize {
        self.0.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Copy with `theta` added to the first joint.
    pub fn rotated(&self, theta: f64) -> Configuration {
        let mut a = self.0.clone();
        if let Some(first) = a.first_mut() {
            *first = wrap_angle(*first + theta);
        }
        Configuration(a)
    }
}

impl Index<usize> for Configuration {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for Configuration {
    fn from(v: Vec<f64>) -> Self {
        Configuration::new(v)
    }
}

/// Fixed-base serial chain of revolute joints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub base_x: f64,
    pub base_y: f64,
    pub link_lengths: Vec<f64>,
    pub joint_limits: Vec<JointLimit>,
    #[serde(default = "default_true")]
    pub self_collision_enabled: bool,
}

fn default_true() -> bool {
    true
}

impl ChainSpec {
    /// Chain with full-circle joints and self-collision checking on.
    pub fn new(base: Point2<f64>, link_lengths: Vec<f64>) -> Result<Self> {
        let dof = link_lengths.len();
        let spec = ChainSpec {
            base_x: base.x,
            base_y: base.y,
            link_lengths,
            joint_limits: vec![JointLimit::FULL; dof],
            self_collision_enabled: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_self_collision(mut self, enabled: bool) -> Self {
        self.self_collision_enabled = enabled;
        self
    }

    pub fn with_joint_limits(mut self, limits: Vec<JointLimit>) -> Result<Self> {
        self.joint_limits = limits;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.link_lengths.is_empty() {
            return Err(Error::InvalidInput("chain needs at least one link".into()));
        }
        if let Some(l) = self
            .link_lengths
            .iter()
            .find(|l| !(**l > 0.0 && l.is_finite()))
        {
            return Err(Error::InvalidInput(format!(
                "link length {l} must be positive"
            )));
        }
        if self.joint_limits.len() != self.link_lengths.len() {
            return Err(Error::DimensionMismatch {
                expected: self.link_lengths.len(),
                actual: self.joint_limits.len(),
            });
        }
        for l in &self.joint_limits {
            JointLimit::new(l.lo, l.hi)?;
        }
        Ok(())
    }

    pub fn dof(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn base(&self) -> Point2<f64> {
        Point2::new(self.base_x, self.base_y)
    }

    pub fn reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    pub fn within_limits(&self, q: &Configuration) -> bool {
        q.dof() == self.dof()
            && q.angles()
                .iter()
                .zip(&self.joint_limits)
                .all(|(a, l)| l.contains(*a))
    }

    /// Per-joint displacement from `a` to `b`, honoring wrap-around joints.
    pub fn delta(&self, a: &Configuration, b: &Configuration) -> Vec<f64> {
        self.joint_limits
            .iter()
            .zip(a.angles().iter().zip(b.angles()))
            .map(|(l, (x, y))| l.delta(*x, *y))
            .collect()
    }

    /// Max-norm C-space distance over wrapped joint differences.
    pub fn distance(&self, a: &Configuration, b: &Configuration) -> f64 {
        self.joint_limits
            .iter()
            .zip(a.angles().iter().zip(b.angles()))
            .fold(0.0, |m, (l, (x, y))| f64::max(m, l.delta(*x, *y).abs()))
    }

    /// Point at fraction `t` of the straight C-space segment from `a` to `b`.
    pub fn interpolate(&self, a: &Configuration, b: &Configuration, t: f64) -> Configuration {
        let angles = self
            .joint_limits
            .iter()
            .zip(a.angles().iter().zip(b.angles()))
            .map(|(l, (x, y))| l.normalize(x + t * l.delta(*x, *y)))
            .collect();
        Configuration(angles)
    }

    /// Wraps and clamps an arbitrary angle vector into the joint limits.
    pub fn normalize(&self, angles: Vec<f64>) -> Configuration {
        Configuration(
            angles
                .into_iter()
                .zip(&self.joint_limits)
                .map(|(a, l)| l.normalize(a))
                .collect(),
        )
    }

    fn check_dof(&self, q: &Configuration) -> Result<()> {
        if q.dof() != self.dof() {
            return Err(Error::DimensionMismatch {
                expected: self.dof(),
                actual: q.dof(),
            });
        }
        Ok(())
    }
}

/// Joint positions of the chain: base first, then every link endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPose {
    pub joint_points: Vec<Point2<f64>>,
}

impl ChainPose {
    pub fn end_effector(&self) -> Point2<f64> {
        *self
            .joint_points
            .last()
            .expect("pose has at least the base point")
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point2<f64>, Point2<f64>)> + '_ {
        self.joint_points.windows(2).map(|w| (w[0], w[1]))
    }
}

pub fn forward_kinematics(spec: &ChainSpec, q: &Configuration) -> Result<ChainPose> {
    spec.check_dof(q)?;
    let mut joint_points = Vec::with_capacity(spec.dof() + 1);
    fk_into(spec, q.angles(), &mut joint_points);
    Ok(ChainPose { joint_points })
}

fn fk_into(spec: &ChainSpec, angles: &[f64], out: &mut Vec<Point2<f64>>) {
    out.clear();
    let mut p = spec.base();
    let mut phi = 0.0;
    out.push(p);
    for (len, a) in spec.link_lengths.iter().zip(angles) {
        phi += a;
        let (s, c) = phi.sin_cos();
        p = Point2::new(p.x + len * c, p.y + len * s);
        out.push(p);
    }
}

/// Squared distance from `c` to the closed segment `[p0, p1]`.
pub fn point_segment_distance_sq(p0: Point2<f64>, p1: Point2<f64>, c: Point2<f64>) -> f64 {
    let d = p1 - p0;
    let len_sq = d.norm_squared();
    let t = if len_sq > 0.0 {
        ((c - p0).dot(&d) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p0 + d * t - c).norm_squared()
}

/// True iff the segment comes within `c.r` of the circle center.
pub fn segment_circle_collides(p0: Point2<f64>, p1: Point2<f64>, c: &Circle) -> bool {
    point_segment_distance_sq(p0, p1, c.center()) <= c.r * c.r
}

fn orient(a: Point2<f64>, b: Point2<f64>, c: Point2<f64>) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: Point2<f64>, b: Point2<f64>, p: Point2<f64>) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test; touching counts.
pub fn segments_intersect(
    a0: Point2<f64>,
    a1: Point2<f64>,
    b0: Point2<f64>,
    b1: Point2<f64>,
) -> bool {
    let d1 = orient(b0, b1, a0);
    let d2 = orient(b0, b1, a1);
    let d3 = orient(a0, a1, b0);
    let d4 = orient(a0, a1, b1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(b0, b1, a0))
        || (d2 == 0.0 && on_segment(b0, b1, a1))
        || (d3 == 0.0 && on_segment(a0, a1, b0))
        || (d4 == 0.0 && on_segment(a0, a1, b1))
}

/// Minimum distance between two closed segments.
pub fn segment_segment_distance(
    a0: Point2<f64>,
    a1: Point2<f64>,
    b0: Point2<f64>,
    b1: Point2<f64>,
) -> f64 {
    if segments_intersect(a0, a1, b0, b1) {
        return 0.0;
    }
    [
        point_segment_distance_sq(b0, b1, a0),
        point_segment_distance_sq(b0, b1, a1),
        point_segment_distance_sq(a0, a1, b0),
        point_segment_distance_sq(a0, a1, b1),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min)
    .sqrt()
}

fn points_valid(spec: &ChainSpec, pts: &[Point2<f64>], circles: &[Circle]) -> bool {
    for w in pts.windows(2) {
        if circles
            .iter()
            .any(|c| segment_circle_collides(w[0], w[1], c))
        {
            return false;
        }
    }
    if spec.self_collision_enabled {
        let n = pts.len() - 1;
        for i in 0..n {
            for j in (i + 2)..n {
                if segments_intersect(pts[i], pts[i + 1], pts[j], pts[j + 1]) {
                    return false;
                }
            }
        }
    }
    true
}

/// Why a configuration is invalid. Links and joints are numbered from 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    JointLimit { joint: usize },
    Obstacle { link: usize, obstacle: usize },
    SelfCollision { link_a: usize, link_b: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::JointLimit { joint } => write!(f, "joint {joint} outside its limits"),
            Violation::Obstacle { link, obstacle } => {
                write!(f, "link {link} touches obstacle {obstacle}")
            }
            Violation::SelfCollision { link_a, link_b } => {
                write!(f, "link {link_a} intersects link {link_b}")
            }
        }
    }
}

/// First reason `q` fails [`config_valid`], or `None` when it is valid.
pub fn first_violation(
    spec: &ChainSpec,
    q: &Configuration,
    circles: &[Circle],
) -> Option<Violation> {
    if let Some(joint) = (0..spec.dof()).find(|&k| {
        q.angles()
            .get(k)
            .is_none_or(|a| !spec.joint_limits[k].contains(*a))
    }) {
        return Some(Violation::JointLimit { joint });
    }
    let mut pts = Vec::with_capacity(spec.dof() + 1);
    fk_into(spec, q.angles(), &mut pts);
    for (link, w) in pts.windows(2).enumerate() {
        if let Some(obstacle) = circles
            .iter()
            .position(|c| segment_circle_collides(w[0], w[1], c))
        {
            return Some(Violation::Obstacle { link, obstacle });
        }
    }
    if spec.self_collision_enabled {
        let n = pts.len() - 1;
        for i in 0..n {
            for j in (i + 2)..n {
                if segments_intersect(pts[i], pts[i + 1], pts[j], pts[j + 1]) {
                    return Some(Violation::SelfCollision {
                        link_a: i,
                        link_b: j,
                    });
                }
            }
        }
    }
    None
}

/// State validity: within limits, no link touches an obstacle, and (when
/// enabled) no two non-adjacent links intersect.
pub fn config_valid(spec: &ChainSpec, q: &Configuration, circles: &[Circle]) -> bool {
    let mut buf = Vec::with_capacity(spec.dof() + 1);
    config_valid_with(spec, q, circles, &mut buf)
}

fn config_valid_with(
    spec: &ChainSpec,
    q: &Configuration,
    circles: &[Circle],
    buf: &mut Vec<Point2<f64>>,
) -> bool {
    if !spec.within_limits(q) {
        return false;
    }
    fk_into(spec, q.angles(), buf);
    points_valid(spec, buf, circles)
}

/// Checks the straight C-space segment between `q_a` and `q_b` at a
/// resolution of `step` (max-norm), endpoints included. The result does
/// not depend on argument order.
pub fn motion_valid(
    spec: &ChainSpec,
    q_a: &Configuration,
    q_b: &Configuration,
    circles: &[Circle],
    step: f64,
) -> bool {
    assert!(step > 0.0, "motion step must be positive");
    let (a, b) = if lex_greater(q_a, q_b) {
        (q_b, q_a)
    } else {
        (q_a, q_b)
    };
    let mut buf = Vec::with_capacity(spec.dof() + 1);
    if !config_valid_with(spec, a, circles, &mut buf)
        || !config_valid_with(spec, b, circles, &mut buf)
    {
        return false;
    }
    let delta = spec.delta(a, b);
    let span = delta.iter().fold(0.0, |m: f64, d| m.max(d.abs()));
    let n = (span / step).ceil() as usize;
    let mut angles = vec![0.0; a.dof()];
    for i in 1..n {
        let t = i as f64 / n as f64;
        for (k, out) in angles.iter_mut().enumerate() {
            *out = spec.joint_limits[k].normalize(a[k] + t * delta[k]);
        }
        fk_into(spec, &angles, &mut buf);
        if !points_valid(spec, &buf, circles) {
            return false;
        }
    }
    true
}

fn lex_greater(a: &Configuration, b: &Configuration) -> bool {
    for (x, y) in a.angles().iter().zip(b.angles()) {
        if x != y {
            return x > y;
        }
    }
    false
}
