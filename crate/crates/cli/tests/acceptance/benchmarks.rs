//! Criteria 5 to 9: benchmark sweeps on the bundled scenarios, determinism
//! and the database file.

use std::path::PathBuf;
use std::time::Instant;

use glsampler::experience::DatabaseEntry;
use glsampler::{
    build_entry, decompose, seeded_rng, ExperienceConfig, ExperienceDatabase, PlannerKind,
};
use glsampler_cli::{
    run_benchmark, summarize, write_csv, BenchmarkSpec, CellSummary, SamplerKind, Scenario,
};

use crate::Verdict;

const RUNS: usize = 20;
const TIMEOUT: f64 = 30.0;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn scenario(name: &str) -> Scenario {
    Scenario::load(data_dir().join(format!("{name}.json"))).expect("bundled scenario loads")
}

fn bundled_db() -> ExperienceDatabase {
    ExperienceDatabase::load(data_dir().join("experience.json")).expect("bundled database loads")
}

fn sweep(
    s: &Scenario,
    planner: PlannerKind,
    samplers: &[SamplerKind],
    db: &ExperienceDatabase,
) -> Vec<CellSummary> {
    let spec = BenchmarkSpec {
        planners: vec![planner],
        samplers: samplers.to_vec(),
        runs: RUNS,
        timeout: TIMEOUT,
        ..BenchmarkSpec::new(vec![s.clone()])
    };
    let rows = run_benchmark(&spec, Some(db)).expect("benchmark runs");
    let errors: Vec<_> = rows.iter().filter(|r| r.outcome == "error").collect();
    assert!(errors.is_empty(), "benchmark rows failed: {errors:?}");
    let cells = summarize(&rows, TIMEOUT);
    for c in &cells {
        println!("    {c}");
    }
    cells
}

fn cell(cells: &[CellSummary], sampler: SamplerKind) -> &CellSummary {
    cells
        .iter()
        .find(|c| c.sampler == sampler.name())
        .expect("cell present")
}

/// Squared descriptor distance of every primitive's retrieval, `None` for misses.
fn retrieval_distances(s: &Scenario, db: &ExperienceDatabase) -> Vec<Option<f64>> {
    decompose(&s.world(), s.gap_threshold)
        .iter()
        .map(|lw| db.retrieve(lw).map(|r| r.distance_sq))
        .collect()
}

fn fmt_distances(d: &[Option<f64>]) -> String {
    let parts: Vec<String> = d
        .iter()
        .map(|x| x.map_or("miss".into(), |v| format!("{v:.3}")))
        .collect();
    format!("[{}]", parts.join(", "))
}

pub fn scenario1() -> Verdict {
    let (s, db) = (scenario("scenario1"), bundled_db());
    let d = retrieval_distances(&s, &db);
    let exact = d.len() == 1 && d[0].is_some_and(|x| x < 1e-9);
    let cells = sweep(
        &s,
        PlannerKind::Birrt,
        &[SamplerKind::Uniform, SamplerKind::Gl],
        &db,
    );
    let (u, g) = (
        cell(&cells, SamplerKind::Uniform),
        cell(&cells, SamplerKind::Gl),
    );
    let ratio = u.median_s / g.median_s;
    Verdict::new(
        exact && g.solved == RUNS && g.median_s * 5.0 <= u.median_s,
        format!(
            "retrieval d² {}; gl-birrt {}/{RUNS} median {:.3}s, uniform-birrt {}/{RUNS} median {:.3}s, speedup {ratio:.1}x (>= 5x)",
            fmt_distances(&d),
            g.solved,
            g.median_s,
            u.solved,
            u.median_s
        ),
    )
}

pub fn scenario2() -> Verdict {
    let (s, db) = (scenario("scenario2"), bundled_db());
    let primitives = decompose(&s.world(), s.gap_threshold).len();
    let birrt = sweep(&s, PlannerKind::Birrt, &[SamplerKind::Gl], &db);
    let prm = sweep(
        &s,
        PlannerKind::Prm,
        &[SamplerKind::Uniform, SamplerKind::Gl],
        &db,
    );
    let g = cell(&birrt, SamplerKind::Gl);
    let (pu, pg) = (
        cell(&prm, SamplerKind::Uniform),
        cell(&prm, SamplerKind::Gl),
    );
    Verdict::new(
        (3..=4).contains(&primitives) && g.solved >= 18 && pu.solved < pg.solved,
        format!(
            "{primitives} primitives; gl-birrt {}/{RUNS} (>= 18); prm uniform {}/{RUNS} vs gl {}/{RUNS} (uniform < gl)",
            g.solved, pu.solved, pg.solved
        ),
    )
}

pub fn scenario3() -> Verdict {
    let (s, db) = (scenario("scenario3"), bundled_db());
    let d = retrieval_distances(&s, &db);
    let perturbed = !d.is_empty() && d.iter().all(|x| x.is_some_and(|v| v > 0.0 && v < 3.0));
    let cells = sweep(
        &s,
        PlannerKind::Birrt,
        &[SamplerKind::Uniform, SamplerKind::Gl],
        &db,
    );
    let (u, g) = (
        cell(&cells, SamplerKind::Uniform),
        cell(&cells, SamplerKind::Gl),
    );
    Verdict::new(
        perturbed && g.solved >= 15 && u.solved <= 5,
        format!(
            "retrieval d² {} (all in (0, 3)); gl-birrt {}/{RUNS} (>= 15), uniform-birrt {}/{RUNS} (<= 5)",
            fmt_distances(&d),
            g.solved,
            u.solved
        ),
    )
}

pub fn determinism() -> Verdict {
    let db = bundled_db();
    let spec = BenchmarkSpec {
        planners: vec![PlannerKind::Rrt, PlannerKind::Birrt, PlannerKind::Prm],
        runs: 3,
        max_iterations: Some(2_000),
        omit_timing: true,
        ..BenchmarkSpec::new(vec![scenario("scenario1"), scenario("scenario2")])
    };
    let csv = |workers: usize| {
        let rows = run_benchmark(
            &BenchmarkSpec {
                workers,
                ..spec.clone()
            },
            Some(&db),
        )
        .unwrap();
        let mut out = Vec::new();
        write_csv(&rows, &mut out).unwrap();
        out
    };
    let (a, b, c) = (csv(0), csv(0), csv(2));
    let rows = a.iter().filter(|&&b| b == b'\n').count() - 1;
    Verdict::new(
        a == b && a == c && rows == 2 * 3 * 2 * 3,
        format!(
            "{rows} rows, {} bytes; repeated run identical: {}; other worker count identical: {}",
            a.len(),
            a == b,
            a == c
        ),
    )
}

fn entry_floats(e: &DatabaseEntry) -> Vec<f64> {
    let mut v = e.canonical_descriptor.to_vec();
    for m in e.sampler.means() {
        v.extend_from_slice(m.angles());
    }
    for c in e.sampler.covariances() {
        match c {
            glsampler::CovarianceSpec::Sigma(s) => v.push(*s),
            glsampler::CovarianceSpec::Matrix(rows) => v.extend(rows.iter().flatten()),
        }
    }
    v.extend_from_slice(e.sampler.weights());
    v
}

pub fn database() -> Verdict {
    let db = bundled_db();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("copy.json");
    db.save(&path).unwrap();
    let back = ExperienceDatabase::load(&path).unwrap();
    let mut worst: f64 = 0.0;
    let mut shape_ok = back.len() == db.len() && back.dof == db.dof;
    for (a, b) in db.entries().iter().zip(back.entries()) {
        let (fa, fb) = (entry_floats(a), entry_floats(b));
        shape_ok &= fa.len() == fb.len() && a.provenance == b.provenance;
        worst = fa
            .iter()
            .zip(&fb)
            .fold(worst, |w, (x, y)| w.max((x - y).abs()));
    }

    // retrieval latency over the bundled scenarios
    let mut lookups = 0;
    let t = Instant::now();
    for name in ["scenario1", "scenario2", "scenario3"] {
        let s = scenario(name);
        for lw in decompose(&s.world(), s.gap_threshold) {
            lookups += usize::from(db.retrieve(&lw).is_some());
        }
    }
    let per_lookup_ms = t.elapsed().as_secs_f64() * 1e3 / lookups.max(1) as f64;

    // build cost of one entry, extrapolated to 800 pairs
    let s = scenario("scenario1");
    let lw = decompose(&s.world(), s.gap_threshold).remove(0);
    let t = Instant::now();
    let built = build_entry(
        &lw,
        &s.chain,
        &ExperienceConfig::default(),
        &mut seeded_rng(9),
        "acceptance",
    );
    let build_s = t.elapsed().as_secs_f64();
    println!(
        "    one entry built in {build_s:.1}s ({}); 800 pairs would take about {:.0} min on one core (reference: 10 min)",
        built.as_ref().map_or_else(|e| e.to_string(), |b| format!("{} mixtures", b.entry.sampler.mixture_count())),
        build_s * 800.0 / 60.0
    );
    println!("    retrieval {per_lookup_ms:.4} ms per primitive over {lookups} lookups (reference: a few ms)");
    Verdict::new(
        shape_ok && worst <= 1e-12,
        format!("{} entries, max float change {worst:.1e} (<= 1e-12); retrieval {per_lookup_ms:.4} ms/primitive", db.len()),
    )
}
