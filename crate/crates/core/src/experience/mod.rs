//! Offline construction of local samplers: solve small planning problems
//! around one pair of circles, shortcut the paths, merge mutually visible
//! configurations, and store the resulting mixture.

mod cliques;
mod database;

use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::{Point2, Vector2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    config_valid, forward_kinematics, motion_valid, point_segment_distance_sq,
    segment_segment_distance, ChainSpec, Circle, Configuration, DEFAULT_MOTION_STEP,
};
use crate::planners::{plan, Outcome, Path, PlannerConfig, PlannerKind};
use crate::sampling::{sample_uniform, GlSampler, GmmSampler, DEFAULT_SIGMA};
use crate::workspace::{canonicalize, LocalPrimitive, World};

pub use cliques::{
    greedy_clique_cover, merge_cliques, visibility_graph, Clique, COVARIANCE_JITTER,
};
pub use database::{
    to_precise_json, transform_sampler, DatabaseEntry, ExperienceDatabase, Inserted, Provenance,
    Retrieved, DEDUP_DISTANCE_SQ, FORMAT_VERSION,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperienceConfig {
    /// Planner runs per start/goal pair.
    pub runs_per_query: usize,
    pub queries_per_primitive: usize,
    pub sigma: f64,
    pub shortcut_iterations: usize,
    /// Configurations closer than this (max-norm) are merged before fitting.
    pub dedup_radius: f64,
    /// Radius of the capsule around the gap that counts as "between".
    pub gap_region_inflation: f64,
    /// Margin beyond the pair's bounding circle that counts as "out".
    pub clearance_radius: f64,
    /// Budget of each local planning run, seconds.
    pub plan_timeout: f64,
    pub plan_max_iterations: Option<u64>,
    pub rrt_step: f64,
    pub motion_step: f64,
    pub max_rejection_attempts: usize,
}

impl Default for ExperienceConfig {
    fn default() -> Self {
        ExperienceConfig {
            runs_per_query: 10,
            queries_per_primitive: 5,
            sigma: DEFAULT_SIGMA,
            shortcut_iterations: 100,
            dedup_radius: 0.05,
            gap_region_inflation: 0.5,
            clearance_radius: 0.5,
            plan_timeout: 5.0,
            plan_max_iterations: None,
            rrt_step: 0.3,
            motion_step: DEFAULT_MOTION_STEP,
            max_rejection_attempts: 100_000,
        }
    }
}

impl ExperienceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs_per_query < 1 || self.queries_per_primitive < 1 {
            return Err(Error::InvalidInput(
                "experience counts must be at least 1".into(),
            ));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidInput("sigma must be positive".into()));
        }
        if !(self.plan_timeout > 0.0) || !(self.motion_step > 0.0) || !(self.rrt_step > 0.0) {
            return Err(Error::InvalidInput(
                "planner budget and steps must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Region "between" two circles: a capsule around the segment joining
/// their facing boundary points.
#[derive(Debug, Clone, Copy)]
pub struct GapRegion {
    pub p0: Point2<f64>,
    pub p1: Point2<f64>,
    pub radius: f64,
}

impl GapRegion {
    pub fn new(lw: &LocalPrimitive, inflation: f64) -> Self {
        let (a, b) = (lw.circle_a, lw.circle_b);
        let d = b.center() - a.center();
        let u = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Vector2::x()
        };
        GapRegion {
            p0: a.center() + u * a.r,
            p1: b.center() - u * b.r,
            radius: inflation,
        }
    }

    pub fn touches_segment(&self, s0: Point2<f64>, s1: Point2<f64>) -> bool {
        segment_segment_distance(self.p0, self.p1, s0, s1) <= self.radius
    }
}

/// Smallest circle enclosing both circles of a primitive.
pub fn bounding_circle(lw: &LocalPrimitive) -> Circle {
    let (a, b) = (lw.circle_a, lw.circle_b);
    let d = (b.center() - a.center()).norm();
    if d + b.r <= a.r {
        return a;
    }
    if d + a.r <= b.r {
        return b;
    }
    let r = 0.5 * (d + a.r + b.r);
    let u = (b.center() - a.center()) / d;
    let c = a.center() + u * (r - a.r);
    Circle {
        cx: c.x,
        cy: c.y,
        r,
    }
}

fn sample_matching<R: Rng + ?Sized>(
    spec: &ChainSpec,
    obstacles: &[Circle],
    attempts: usize,
    rng: &mut R,
    accept: impl Fn(&[Point2<f64>]) -> bool,
) -> Option<Configuration> {
    for _ in 0..attempts {
        let q = sample_uniform(&spec.joint_limits, rng);
        if !config_valid(spec, &q, obstacles) {
            continue;
        }
        let pose = forward_kinematics(spec, &q).expect("sampled with the chain's own dof");
        if accept(&pose.joint_points) {
            return Some(q);
        }
    }
    None
}

/// Runs the local planning queries for one primitive and returns the
/// shortcut path waypoints, deduplicated at `cfg.dedup_radius`. Planning
/// happens in a world holding only the primitive's two circles.
pub fn generate_local_experience<R: Rng + ?Sized>(
    lw: &LocalPrimitive,
    chain: &ChainSpec,
    cfg: &ExperienceConfig,
    rng: &mut R,
) -> Result<Vec<Configuration>> {
    cfg.validate()?;
    let world = World::new(chain.clone(), lw.circles().to_vec());
    let gap = GapRegion::new(lw, cfg.gap_region_inflation);
    let bound = bounding_circle(lw);
    let keep_out = (bound.r + cfg.clearance_radius).powi(2);
    let between = |pts: &[Point2<f64>]| pts.windows(2).any(|w| gap.touches_segment(w[0], w[1]));
    let outside = |pts: &[Point2<f64>]| {
        pts.windows(2)
            .all(|w| point_segment_distance_sq(w[0], w[1], bound.center()) > keep_out)
    };
    let sampler = GlSampler::uniform(chain.joint_limits.clone(), 0);
    let mut collected: Vec<Configuration> = Vec::new();
    for _ in 0..cfg.queries_per_primitive {
        let start = sample_matching(
            chain,
            &world.obstacles,
            cfg.max_rejection_attempts,
            rng,
            between,
        )
        .ok_or_else(|| {
            Error::GenerationSkipped("no valid configuration between the circles".into())
        })?;
        let goal = sample_matching(
            chain,
            &world.obstacles,
            cfg.max_rejection_attempts,
            rng,
            outside,
        )
        .ok_or_else(|| {
            Error::GenerationSkipped("no valid configuration clear of the circles".into())
        })?;
        for _ in 0..cfg.runs_per_query {
            let pcfg = PlannerConfig {
                planner_kind: PlannerKind::Birrt,
                timeout: cfg.plan_timeout,
                rrt_step: cfg.rrt_step,
                motion_step: cfg.motion_step,
                rng_seed: rng.random(),
                max_iterations: cfg.plan_max_iterations,
                ..PlannerConfig::default()
            };
            let result = plan(&world, &start, &goal, &sampler, &pcfg)?;
            if let (Outcome::Solved, Some(path)) = (result.outcome, result.path) {
                let short = shortcut(&path, &world, cfg.shortcut_iterations, cfg.motion_step, rng);
                collected.extend(short.into_waypoints());
            }
        }
    }
    if collected.is_empty() {
        return Err(Error::GenerationSkipped("no local query was solved".into()));
    }
    Ok(dedup(chain, collected, cfg.dedup_radius))
}

/// Keeps each configuration unless one already kept lies within `radius`.
pub fn dedup(spec: &ChainSpec, configs: Vec<Configuration>, radius: f64) -> Vec<Configuration> {
    let mut kept: Vec<Configuration> = Vec::new();
    for q in configs {
        if kept.iter().all(|k| spec.distance(k, &q) > radius) {
            kept.push(q);
        }
    }
    kept
}

/// Random shortcutting: splice straight segments between random points on
/// the path when they are collision free and shorter, then drop waypoints
/// whose neighbors see each other directly.
pub fn shortcut<R: Rng + ?Sized>(
    path: &Path,
    world: &World,
    iterations: usize,
    motion_step: f64,
    rng: &mut R,
) -> Path {
    let spec = &world.chain;
    let obs = &world.obstacles;
    let mut pts = path.waypoints().to_vec();
    for _ in 0..iterations {
        if pts.len() < 3 {
            break;
        }
        let seg: Vec<f64> = pts
            .windows(2)
            .map(|w| spec.distance(&w[0], &w[1]))
            .collect();
        let total: f64 = seg.iter().sum();
        if total <= 0.0 {
            break;
        }
        let (mut s1, mut s2) = (rng.random::<f64>() * total, rng.random::<f64>() * total);
        if s1 > s2 {
            std::mem::swap(&mut s1, &mut s2);
        }
        let (i, t1) = locate(&seg, s1);
        let (j, t2) = locate(&seg, s2);
        if i == j {
            continue;
        }
        let p1 = spec.interpolate(&pts[i], &pts[i + 1], t1);
        let p2 = spec.interpolate(&pts[j], &pts[j + 1], t2);
        let direct = spec.distance(&p1, &p2);
        let along = spec.distance(&p1, &pts[i + 1])
            + seg[i + 1..j].iter().sum::<f64>()
            + spec.distance(&pts[j], &p2);
        if direct + 1e-12 < along && motion_valid(spec, &p1, &p2, obs, motion_step) {
            let tail = pts.split_off(j + 1);
            pts.truncate(i + 1);
            pts.push(p1);
            pts.push(p2);
            pts.extend(tail);
        }
    }
    let mut k = 1;
    while k + 1 < pts.len() {
        if motion_valid(spec, &pts[k - 1], &pts[k + 1], obs, motion_step) {
            pts.remove(k);
        } else {
            k += 1;
        }
    }
    Path::new(pts)
}

fn locate(seg: &[f64], s: f64) -> (usize, f64) {
    let mut acc = 0.0;
    for (i, len) in seg.iter().enumerate() {
        if s <= acc + len || i + 1 == seg.len() {
            let t = if *len > 0.0 {
                ((s - acc) / len).clamp(0.0, 1.0)
            } else {
                0.0
            };
            return (i, t);
        }
        acc += len;
    }
    (seg.len() - 1, 1.0)
}

/// Result of building one database entry.
#[derive(Debug, Clone)]
pub struct BuiltEntry {
    pub entry: DatabaseEntry,
    pub cliques: Vec<Clique>,
    /// Deduplicated configurations the cliques partition.
    pub configs: Vec<Configuration>,
}

/// Full offline pipeline for one primitive: canonicalize, generate, merge
/// cliques, and wrap the cliques as an equally weighted mixture.
pub fn build_entry<R: Rng + ?Sized>(
    lw: &LocalPrimitive,
    chain: &ChainSpec,
    cfg: &ExperienceConfig,
    rng: &mut R,
    source: &str,
) -> Result<BuiltEntry> {
    let origin = Point2::origin();
    let local = LocalPrimitive::from_descriptor(&lw.descriptor, origin)?;
    let canon = canonicalize(&local, origin)?;
    let mut local_chain = chain.clone();
    local_chain.base_x = 0.0;
    local_chain.base_y = 0.0;
    let configs = generate_local_experience(&canon.primitive, &local_chain, cfg, rng)?;
    let cliques = merge_cliques(
        &configs,
        &local_chain,
        &canon.primitive.circles(),
        cfg.motion_step,
        cfg.sigma,
    );
    let m = cliques.len();
    let sampler = GmmSampler::new(
        cliques.iter().map(|c| c.mean.clone()).collect(),
        cliques.iter().map(|c| c.covariance.clone()).collect(),
        vec![1.0 / m as f64; m],
    )?
    .with_limits(chain.joint_limits.clone())?;
    let entry = DatabaseEntry {
        canonical_descriptor: canon.primitive.descriptor,
        sampler,
        provenance: Provenance {
            source: source.to_string(),
            created: timestamp(),
            configs_before: configs.len(),
            configs_after: m,
        },
    };
    Ok(BuiltEntry {
        entry,
        cliques,
        configs,
    })
}

fn timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}
