//! RRT, connect-style BiRRT and incremental PRM. All three draw their
//! samples through a [`GlSampler`], so the same code runs uniform and
//! experience-biased planning.

mod prm;
mod tree;

use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    config_valid, motion_valid, ChainSpec, Circle, Configuration, DEFAULT_MOTION_STEP,
};
use crate::sampling::{seeded_rng, GlSampler, SamplerRng, DEFAULT_LAMBDA};
use crate::workspace::World;

pub use prm::{prm_grow, GrowStats, Roadmap};
pub use tree::{rrt_connect, rrt_extend, steer, Extend, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Rrt,
    Birrt,
    Prm,
}

impl PlannerKind {
    pub fn name(&self) -> &'static str {
        match self {
            PlannerKind::Rrt => "rrt",
            PlannerKind::Birrt => "birrt",
            PlannerKind::Prm => "prm",
        }
    }
}

impl std::fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PlannerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rrt" => Ok(PlannerKind::Rrt),
            "birrt" => Ok(PlannerKind::Birrt),
            "prm" => Ok(PlannerKind::Prm),
            other => Err(Error::InvalidInput(format!("unknown planner '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub planner_kind: PlannerKind,
    /// Bias probability handed to the sampler pipeline; [`plan`] itself
    /// uses the λ of the sampler it is given.
    pub lambda: f64,
    /// Wall-clock budget in seconds.
    pub timeout: f64,
    /// Steering distance, max-norm radians.
    pub rrt_step: f64,
    pub rrt_goal_bias: f64,
    pub prm_batch: usize,
    pub prm_k_neighbors: usize,
    pub motion_step: f64,
    pub rng_seed: u64,
    /// Optional cap on drawn samples, for runs that must not depend on
    /// machine speed.
    #[serde(default)]
    pub max_iterations: Option<u64>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            planner_kind: PlannerKind::Birrt,
            lambda: DEFAULT_LAMBDA,
            timeout: 30.0,
            rrt_step: 0.3,
            rrt_goal_bias: 0.05,
            prm_batch: 100,
            prm_k_neighbors: 10,
            motion_step: DEFAULT_MOTION_STEP,
            rng_seed: 0,
            max_iterations: None,
        }
    }
}

impl PlannerConfig {
    pub fn new(kind: PlannerKind) -> Self {
        PlannerConfig {
            planner_kind: kind,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if !(self.timeout > 0.0) {
            return bad("timeout must be positive");
        }
        if !(self.rrt_step > 0.0) {
            return bad("rrt_step must be positive");
        }
        if !(0.0..1.0).contains(&self.rrt_goal_bias) {
            return bad("goal bias must lie in [0, 1)");
        }
        if self.prm_k_neighbors < 1 {
            return bad("prm_k_neighbors must be at least 1");
        }
        if self.prm_batch < 1 {
            return bad("prm_batch must be at least 1");
        }
        if !(self.motion_step > 0.0) {
            return bad("motion_step must be positive");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Waypoints from start to goal, at least two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    waypoints: Vec<Configuration>,
}

impl Path {
    pub fn new(waypoints: Vec<Configuration>) -> Self {
        assert!(waypoints.len() >= 2, "a path needs at least two waypoints");
        Path { waypoints }
    }

    pub fn waypoints(&self) -> &[Configuration] {
        &self.waypoints
    }

    pub fn into_waypoints(self) -> Vec<Configuration> {
        self.waypoints
    }

    pub fn start(&self) -> &Configuration {
        &self.waypoints[0]
    }

    pub fn goal(&self) -> &Configuration {
        self.waypoints.last().expect("non-empty")
    }

    /// Summed max-norm length of the segments.
    pub fn length(&self, spec: &ChainSpec) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| spec.distance(&w[0], &w[1]))
            .sum()
    }

    /// Re-checks every segment with [`motion_valid`].
    pub fn is_valid(&self, spec: &ChainSpec, obstacles: &[Circle], motion_step: f64) -> bool {
        self.waypoints
            .windows(2)
            .all(|w| motion_valid(spec, &w[0], &w[1], obstacles, motion_step))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Solved,
    Timeout,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Solved => "solved",
            Outcome::Timeout => "timeout",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub outcome: Outcome,
    pub path: Option<Path>,
    /// Seconds.
    pub elapsed: f64,
    /// Samples drawn.
    pub iterations: u64,
    /// Samples that grew the graph: valid PRM vertices, or tree
    /// extensions that were not trapped.
    pub valid_sample_count: u64,
    /// Samples that came from the biased branch of the sampler.
    pub biased_sample_count: u64,
}

struct Run<'a> {
    spec: &'a ChainSpec,
    obstacles: &'a [Circle],
    sampler: &'a GlSampler,
    cfg: &'a PlannerConfig,
    rng: SamplerRng,
    started: Instant,
    timeout: Duration,
    iterations: u64,
    valid: u64,
    biased: u64,
}

impl Run<'_> {
    fn exhausted(&self) -> bool {
        self.cfg
            .max_iterations
            .is_some_and(|m| self.iterations >= m)
            || self.started.elapsed() >= self.timeout
    }

    fn draw(&mut self) -> Configuration {
        self.iterations += 1;
        let d = self.sampler.draw(&mut self.rng);
        if d.biased {
            self.biased += 1;
        }
        d.config
    }

    fn finish(&self, path: Option<Path>) -> PlanResult {
        PlanResult {
            outcome: if path.is_some() {
                Outcome::Solved
            } else {
                Outcome::Timeout
            },
            path,
            elapsed: self.started.elapsed().as_secs_f64(),
            iterations: self.iterations,
            valid_sample_count: self.valid,
            biased_sample_count: self.biased,
        }
    }
}

fn check_query(
    spec: &ChainSpec,
    q: &Configuration,
    obstacles: &[Circle],
    which: &'static str,
) -> Result<()> {
    if q.dof() != spec.dof() {
        return Err(Error::DimensionMismatch {
            expected: spec.dof(),
            actual: q.dof(),
        });
    }
    if !spec.within_limits(q) {
        return Err(Error::InvalidQuery {
            which,
            reason: "outside joint limits".into(),
        });
    }
    if !config_valid(spec, q, obstacles) {
        return Err(Error::InvalidQuery {
            which,
            reason: "in collision".into(),
        });
    }
    Ok(())
}

/// Runs one planning query. The sampling loop draws every sample through
/// `sampler`; goal bias (RRT only) replaces the draw on its iterations.
pub fn plan(
    world: &World,
    start: &Configuration,
    goal: &Configuration,
    sampler: &GlSampler,
    cfg: &PlannerConfig,
) -> Result<PlanResult> {
    cfg.validate()?;
    let spec = &world.chain;
    let obstacles = world.obstacles.as_slice();
    check_query(spec, start, obstacles, "start")?;
    check_query(spec, goal, obstacles, "goal")?;
    if sampler.joint_limits().len() != spec.dof() {
        return Err(Error::DimensionMismatch {
            expected: spec.dof(),
            actual: sampler.joint_limits().len(),
        });
    }
    let mut run = Run {
        spec,
        obstacles,
        sampler,
        cfg,
        rng: seeded_rng(cfg.rng_seed),
        started: Instant::now(),
        timeout: Duration::from_secs_f64(cfg.timeout),
        iterations: 0,
        valid: 0,
        biased: 0,
    };
    if motion_valid(spec, start, goal, obstacles, cfg.motion_step) {
        return Ok(run.finish(Some(Path::new(vec![start.clone(), goal.clone()]))));
    }
    let path = match cfg.planner_kind {
        PlannerKind::Rrt => run_rrt(&mut run, start, goal),
        PlannerKind::Birrt => run_birrt(&mut run, start, goal),
        PlannerKind::Prm => run_prm(&mut run, start, goal),
    };
    Ok(run.finish(path))
}

fn run_rrt(run: &mut Run, start: &Configuration, goal: &Configuration) -> Option<Path> {
    let (spec, obs, step, ms) = (
        run.spec,
        run.obstacles,
        run.cfg.rrt_step,
        run.cfg.motion_step,
    );
    let mut tree = Tree::new(start.clone());
    while !run.exhausted() {
        let target = if run.rng.random::<f64>() < run.cfg.rrt_goal_bias {
            run.iterations += 1;
            goal.clone()
        } else {
            run.draw()
        };
        let id = match rrt_extend(&mut tree, &target, step, spec, obs, ms) {
            Extend::Trapped => continue,
            Extend::Reached(id) | Extend::Advanced(id) => id,
        };
        run.valid += 1;
        let node = tree.node(id);
        if node == goal {
            return Some(Path::new(tree.branch(id)));
        }
        if spec.distance(node, goal) <= step && motion_valid(spec, node, goal, obs, ms) {
            let g = tree.add(goal.clone(), id);
            return Some(Path::new(tree.branch(g)));
        }
    }
    None
}

fn run_birrt(run: &mut Run, start: &Configuration, goal: &Configuration) -> Option<Path> {
    let (spec, obs, step, ms) = (
        run.spec,
        run.obstacles,
        run.cfg.rrt_step,
        run.cfg.motion_step,
    );
    let mut trees = [Tree::new(start.clone()), Tree::new(goal.clone())];
    // index of the tree grown toward the sample this round
    let mut active = 0;
    while !run.exhausted() {
        let x = run.draw();
        let (ta, tb) = split(&mut trees, active);
        if let Extend::Reached(id) | Extend::Advanced(id) = rrt_extend(ta, &x, step, spec, obs, ms)
        {
            run.valid += 1;
            let q_new = ta.node(id).clone();
            if let Extend::Reached(jd) = rrt_connect(tb, &q_new, step, spec, obs, ms) {
                let mut from_a = ta.branch(id);
                let mut from_b = tb.branch(jd);
                from_b.pop();
                from_b.reverse();
                from_a.extend(from_b);
                if active == 1 {
                    from_a.reverse();
                }
                return Some(Path::new(from_a));
            }
        }
        active = 1 - active;
    }
    None
}

fn split(trees: &mut [Tree; 2], active: usize) -> (&mut Tree, &mut Tree) {
    let (first, second) = trees.split_at_mut(1);
    if active == 0 {
        (&mut first[0], &mut second[0])
    } else {
        (&mut second[0], &mut first[0])
    }
}

fn run_prm(run: &mut Run, start: &Configuration, goal: &Configuration) -> Option<Path> {
    let (spec, obs, ms, k) = (
        run.spec,
        run.obstacles,
        run.cfg.motion_step,
        run.cfg.prm_k_neighbors,
    );
    let mut roadmap = Roadmap::new();
    let (s, _) = roadmap.insert(start.clone(), k, spec, obs, ms);
    let (g, _) = roadmap.insert(goal.clone(), k, spec, obs, ms);
    let mut batch = Vec::with_capacity(run.cfg.prm_batch);
    while !run.exhausted() {
        batch.clear();
        while batch.len() < run.cfg.prm_batch && !run.exhausted() {
            let q = run.draw();
            batch.push(q);
        }
        let stats = prm_grow(&mut roadmap, &batch, k, spec, obs, ms);
        run.valid += stats.added as u64;
        if roadmap.connected(s, g) {
            return roadmap.shortest_path(s, g).ok();
        }
    }
    None
}

/// Path between two roadmap vertices, or [`Error::NotConnected`].
pub fn extract_path(
    roadmap: &Roadmap,
    start: petgraph::graph::NodeIndex,
    goal: petgraph::graph::NodeIndex,
) -> Result<Path> {
    roadmap.shortest_path(start, goal)
}
