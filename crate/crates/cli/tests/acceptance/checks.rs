//! Criteria 1 to 4: properties and exhaustive oracles on small instances.

use std::collections::VecDeque;
use std::f64::consts::PI;

use glsampler::experience::{merge_cliques, visibility_graph};
use glsampler::geometry::point_segment_distance_sq;
use glsampler::planners::Roadmap;
use glsampler::{
    config_valid, forward_kinematics, motion_valid, plan, sample_gmm, sample_uniform, seeded_rng,
    segment_circle_collides, synthesize, ChainSpec, Circle, Configuration, CovarianceSpec,
    GlSampler, GmmSampler, JointLimit, Outcome, PlannerConfig, PlannerKind, SamplerRng, World,
};
use nalgebra::Point2;
use rand::Rng;

use crate::Verdict;

const MOTION_STEP: f64 = 0.05;

fn random_chain(rng: &mut SamplerRng, dof: usize) -> ChainSpec {
    ChainSpec::new(
        Point2::origin(),
        (0..dof).map(|_| rng.random_range(1.0..2.0)).collect(),
    )
    .unwrap()
}

fn random_config(rng: &mut SamplerRng, dof: usize) -> Configuration {
    sample_uniform(&vec![JointLimit::FULL; dof], rng)
}

fn random_circle(rng: &mut SamplerRng, extent: f64) -> Circle {
    Circle::new(
        rng.random_range(-extent..extent),
        rng.random_range(-extent..extent),
        rng.random_range(0.3..2.0),
    )
    .unwrap()
}

/// Distance from `c` to the segment by dense sampling, refined around the
/// best sample so the spacing ends up far below the tolerance.
fn dense_distance(p0: Point2<f64>, p1: Point2<f64>, c: Point2<f64>) -> f64 {
    let at = |t: f64| (p0 + (p1 - p0) * t - c).norm();
    let n: usize = 10_000;
    let best = (0..=n)
        .min_by(|&a, &b| at(a as f64 / n as f64).total_cmp(&at(b as f64 / n as f64)))
        .unwrap();
    let lo = best.saturating_sub(1) as f64 / n as f64;
    let hi = (best + 1).min(n) as f64 / n as f64;
    (0..=n)
        .map(|i| at(lo + (hi - lo) * i as f64 / n as f64))
        .fold(f64::INFINITY, f64::min)
}

pub fn geometry() -> Verdict {
    let mut rng = seeded_rng(101);
    let mut fk_err: f64 = 0.0;
    for _ in 0..1000 {
        let spec = random_chain(&mut rng, 8);
        let q = random_config(&mut rng, 8);
        let theta = rng.random_range(-PI..PI);
        let a = forward_kinematics(&spec, &q).unwrap();
        let b = forward_kinematics(&spec, &q.rotated(theta)).unwrap();
        let (s, c) = theta.sin_cos();
        for (p, r) in a.joint_points.iter().zip(&b.joint_points) {
            fk_err = fk_err.max((Point2::new(c * p.x - s * p.y, s * p.x + c * p.y) - r).norm());
        }
    }
    let mut dist_err: f64 = 0.0;
    let mut verdict_mismatch = 0;
    for _ in 0..1000 {
        let p0 = Point2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let p1 = Point2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let c = random_circle(&mut rng, 5.0);
        let exact = point_segment_distance_sq(p0, p1, c.center()).sqrt();
        let dense = dense_distance(p0, p1, c.center());
        dist_err = dist_err.max((dense - exact).abs());
        if (dense - c.r).abs() > 1e-6 && segment_circle_collides(p0, p1, &c) != (dense <= c.r) {
            verdict_mismatch += 1;
        }
    }
    Verdict::new(
        fk_err < 1e-9 && dist_err < 1e-6 && verdict_mismatch == 0,
        format!("FK max error {fk_err:.1e} (< 1e-9); segment distance max error {dist_err:.1e} (< 1e-6), {verdict_mismatch} verdict mismatches"),
    )
}

fn random_gmm(rng: &mut SamplerRng, dof: usize, m: usize) -> GmmSampler {
    let means = (0..m).map(|_| random_config(rng, dof)).collect();
    let covs = (0..m)
        .map(|i| {
            if i % 2 == 0 {
                CovarianceSpec::Sigma(rng.random_range(0.05..0.5))
            } else {
                let a: Vec<Vec<f64>> = (0..dof)
                    .map(|_| (0..dof).map(|_| rng.random_range(-0.3..0.3)).collect())
                    .collect();
                let rows = (0..dof)
                    .map(|r| {
                        (0..dof)
                            .map(|c| {
                                (0..dof).map(|k| a[r][k] * a[c][k]).sum::<f64>()
                                    + if r == c { 0.01 } else { 0.0 }
                            })
                            .collect()
                    })
                    .collect();
                CovarianceSpec::Matrix(rows)
            }
        })
        .collect();
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    GmmSampler::new(means, covs, raw.iter().map(|w| w / total).collect()).unwrap()
}

pub fn samplers() -> Verdict {
    const DRAWS: usize = 100_000;
    let mut rng = seeded_rng(102);

    let mut weight_err: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.random_range(1..6);
        let parts: Vec<GmmSampler> = (0..k)
            .map(|_| {
                let m = rng.random_range(1..6);
                random_gmm(&mut rng, 8, m)
            })
            .collect();
        let s = synthesize(parts).unwrap();
        weight_err = weight_err.max((s.local_weights().iter().sum::<f64>() - 1.0).abs());
        weight_err = weight_err.max((s.flatten().weights().iter().sum::<f64>() - 1.0).abs());
        for g in s.locals() {
            weight_err = weight_err.max((g.weights().iter().sum::<f64>() - 1.0).abs());
        }
    }

    let g = GmmSampler::isotropic(vec![Configuration::zeros(8)], 0.1).unwrap();
    let mut sq = [0.0; 8];
    for _ in 0..DRAWS {
        let q = sample_gmm(&g, &mut rng);
        for (s, a) in sq.iter_mut().zip(q.angles()) {
            *s += a * a;
        }
    }
    let stds: Vec<f64> = sq.iter().map(|s| (s / DRAWS as f64).sqrt()).collect();
    let std_ok = stds.iter().all(|s| (0.095..=0.105).contains(s));
    let (std_lo, std_hi) = stds.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| {
        (lo.min(s), hi.max(s))
    });

    let locals = synthesize(vec![GmmSampler::isotropic(
        vec![Configuration::zeros(8)],
        0.1,
    )
    .unwrap()])
    .unwrap();
    let gl = GlSampler::new(Some(locals), 0.5, vec![JointLimit::FULL; 8], 0).unwrap();
    let biased = (0..DRAWS).filter(|_| gl.draw(&mut rng).biased).count();
    let freq = biased as f64 / DRAWS as f64;

    let parts: Vec<GmmSampler> = [3, 1, 4]
        .iter()
        .map(|&m| random_gmm(&mut rng, 8, m))
        .collect();
    let s = synthesize(parts.clone()).unwrap();
    let total: usize = parts.iter().map(|g| g.mixture_count()).sum();
    let flat = s.flatten();
    let mut rel_err: f64 = 0.0;
    for i in 0..100 {
        let q = if i % 2 == 0 {
            sample_gmm(&flat, &mut rng)
        } else {
            random_config(&mut rng, 8)
        };
        let mut want = 0.0;
        for g in &parts {
            let a = g.mixture_count() as f64 / total as f64;
            for ((mean, cov), w) in g.means().zip(g.covariances()).zip(g.weights()) {
                let single =
                    GmmSampler::new(vec![mean.clone()], vec![cov.clone()], vec![1.0]).unwrap();
                want += a * w * single.density(&q);
            }
        }
        rel_err = rel_err.max((s.density(&q) - want).abs() / want.max(f64::MIN_POSITIVE));
    }

    Verdict::new(
        weight_err < 1e-9 && std_ok && (freq - 0.5).abs() < 0.005 && rel_err <= 1e-12,
        format!(
            "weights off by {weight_err:.1e} (< 1e-9); std in [{std_lo:.4}, {std_hi:.4}] (within [0.095, 0.105]); \
             biased fraction {freq:.4} (|f - 0.5| < 0.005); synthesized vs flat density {rel_err:.1e} (<= 1e-12)"
        ),
    )
}

const GRID: usize = 181;

fn grid_solvable(
    spec: &ChainSpec,
    obstacles: &[Circle],
    start: &Configuration,
    goal: &Configuration,
) -> bool {
    // index 180 is the same angle as index 0
    let n = GRID - 1;
    let angle = |i: usize| -PI + 2.0 * PI * i as f64 / n as f64;
    let free: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    config_valid(
                        spec,
                        &Configuration::new(vec![angle(i), angle(j)]),
                        obstacles,
                    )
                })
                .collect()
        })
        .collect();
    let index = |a: f64| ((((a + PI) / (2.0 * PI)) * n as f64).round() as usize) % n;
    let (s, g) = (
        (index(start[0]), index(start[1])),
        (index(goal[0]), index(goal[1])),
    );
    let mut seen = vec![vec![false; n]; n];
    let mut queue = VecDeque::from([s]);
    seen[s.0][s.1] = true;
    while let Some((i, j)) = queue.pop_front() {
        if (i, j) == g {
            return true;
        }
        for (di, dj) in [(1, 0), (n - 1, 0), (0, 1), (0, n - 1)] {
            let (a, b) = ((i + di) % n, (j + dj) % n);
            if free[a][b] && !seen[a][b] {
                seen[a][b] = true;
                queue.push_back((a, b));
            }
        }
    }
    false
}

fn min_clique_cover(adj: &[Vec<bool>]) -> usize {
    let n = adj.len();
    let full = (1usize << n) - 1;
    let mut is_clique = vec![true; 1 << n];
    for mask in 1..=full {
        let v = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        is_clique[mask] = is_clique[rest] && (0..n).all(|u| rest & (1 << u) == 0 || adj[v][u]);
    }
    let mut dp = vec![usize::MAX; 1 << n];
    dp[0] = 0;
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let others = mask ^ low;
        let mut sub = others;
        loop {
            let c = sub | low;
            if is_clique[c] && dp[mask ^ c] != usize::MAX {
                dp[mask] = dp[mask].min(dp[mask ^ c] + 1);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & others;
        }
    }
    dp[full]
}

fn valid_configs(
    rng: &mut SamplerRng,
    spec: &ChainSpec,
    obstacles: &[Circle],
    n: usize,
) -> Vec<Configuration> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let q = sample_uniform(&spec.joint_limits, rng);
        if config_valid(spec, &q, obstacles) {
            out.push(q);
        }
    }
    out
}

fn circle(x: f64, y: f64, r: f64) -> Circle {
    Circle::new(x, y, r).unwrap()
}

pub fn oracles() -> Verdict {
    let mut rng = seeded_rng(103);

    // clique cover against the exact minimum
    let spec3 = ChainSpec::new(Point2::origin(), vec![1.0; 3]).unwrap();
    let walls = [circle(2.0, 0.3, 0.5), circle(2.2, -1.3, 0.5)];
    let (mut worst_excess, mut invalid_cliques) = (i64::MIN, 0);
    for _ in 0..20 {
        let configs = valid_configs(&mut rng, &spec3, &walls, 15);
        let cliques = merge_cliques(&configs, &spec3, &walls, MOTION_STEP, 0.1);
        let best = min_clique_cover(&visibility_graph(&configs, &spec3, &walls, MOTION_STEP));
        worst_excess = worst_excess.max(cliques.len() as i64 - best as i64);
        for c in &cliques {
            for (i, &a) in c.members.iter().enumerate() {
                if c.members[i + 1..]
                    .iter()
                    .any(|&b| !motion_valid(&spec3, &configs[a], &configs[b], &walls, MOTION_STEP))
                {
                    invalid_cliques += 1;
                }
            }
        }
    }

    // roadmap connectivity against the all-pairs graph
    let spec4 = ChainSpec::new(Point2::origin(), vec![1.0; 4]).unwrap();
    let obs4 = [
        circle(2.0, 1.0, 0.6),
        circle(-1.0, -2.5, 0.8),
        circle(0.5, -2.0, 0.4),
    ];
    let mut prm_mismatch = 0;
    for _ in 0..20 {
        let qs = valid_configs(&mut rng, &spec4, &obs4, 20);
        let mut rm = Roadmap::new();
        let ids: Vec<_> = qs
            .iter()
            .map(|q| {
                rm.insert(q.clone(), qs.len() - 1, &spec4, &obs4, MOTION_STEP)
                    .0
            })
            .collect();
        let adj = visibility_graph(&qs, &spec4, &obs4, MOTION_STEP);
        for s in 0..qs.len() {
            let mut seen = vec![false; qs.len()];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(v) = stack.pop() {
                for w in 0..qs.len() {
                    if adj[v][w] && !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            prm_mismatch += (0..qs.len())
                .filter(|&t| rm.connected(ids[s], ids[t]) != seen[t])
                .count();
        }
    }

    // two-link solvability against the grid
    let spec2 = ChainSpec::new(Point2::origin(), vec![1.0, 1.0]).unwrap();
    let q = |a: f64, b: f64| Configuration::new(vec![a, b]);
    let cases = [
        (vec![], q(0.0, 0.0), q(PI, 0.5)),
        (
            vec![circle(1.5, 1.5, 0.3)],
            q(0.0, 0.0),
            q(PI / 2.0 + 0.3, 0.0),
        ),
        (
            vec![circle(0.0, 0.6, 0.15), circle(0.0, -0.6, 0.15)],
            q(0.0, 0.0),
            q(PI, 0.0),
        ),
        (
            vec![circle(0.0, 0.6, 0.15), circle(0.0, -1.6, 0.3)],
            q(0.0, 0.0),
            q(PI, 0.0),
        ),
        (
            vec![circle(0.0, 0.6, 0.15), circle(0.0, -1.5, 0.55)],
            q(0.0, 0.0),
            q(PI, 0.0),
        ),
    ];
    let mut planner_mismatch = 0;
    let mut solvable_count = 0;
    for (obstacles, start, goal) in &cases {
        let solvable = grid_solvable(&spec2, obstacles, start, goal);
        solvable_count += usize::from(solvable);
        let world = World::new(spec2.clone(), obstacles.clone());
        for kind in [PlannerKind::Rrt, PlannerKind::Birrt, PlannerKind::Prm] {
            let cfg = PlannerConfig {
                max_iterations: Some(if solvable { 200_000 } else { 3_000 }),
                ..PlannerConfig::new(kind)
            };
            let r = plan(
                &world,
                start,
                goal,
                &GlSampler::uniform(spec2.joint_limits.clone(), 1),
                &cfg,
            )
            .unwrap();
            planner_mismatch += usize::from((r.outcome == Outcome::Solved) != solvable);
        }
    }

    Verdict::new(
        worst_excess <= 2 && invalid_cliques == 0 && prm_mismatch == 0 && planner_mismatch == 0,
        format!(
            "greedy cover at most {worst_excess:+} vs minimum (<= +2), {invalid_cliques} invalid cliques; \
             {prm_mismatch} roadmap connectivity mismatches; {planner_mismatch} planner/grid disagreements \
             over 5 cases ({solvable_count} solvable) x 3 planners"
        ),
    )
}

pub fn transform() -> Verdict {
    let mut rng = seeded_rng(104);
    let (mut mismatches, mut valid) = (0, 0);
    for _ in 0..1000 {
        let spec = random_chain(&mut rng, 8);
        let q = random_config(&mut rng, 8);
        let k = rng.random_range(0..5);
        let world = World::new(
            spec.clone(),
            (0..k).map(|_| random_circle(&mut rng, 10.0)).collect(),
        );
        let theta = rng.random_range(-PI..PI);
        let before = config_valid(&spec, &q, &world.obstacles);
        let after = config_valid(&spec, &q.rotated(theta), &world.rotated(theta).obstacles);
        mismatches += usize::from(before != after);
        valid += usize::from(before);
    }
    Verdict::new(
        mismatches == 0,
        format!(
            "{mismatches} mismatches over 1000 triples ({valid} valid, {} in collision)",
            1000 - valid
        ),
    )
}
