//! Seeded benchmark sweeps over scenarios, planners and samplers.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use glsampler::experience::{ExperienceConfig, ExperienceDatabase};
use glsampler::{plan, GlSampler, Outcome, PlannerConfig, PlannerKind};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::pipeline::{build_gl_sampler, PipelineOptions};
use crate::scenario::Scenario;

pub const CSV_HEADER: [&str; 9] = [
    "scenario",
    "planner",
    "sampler",
    "seed",
    "outcome",
    "elapsed_s",
    "iterations",
    "path_length_rad",
    "db_retrieve_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SamplerKind {
    Uniform,
    Gl,
}

impl SamplerKind {
    pub fn name(&self) -> &'static str {
        match self {
            SamplerKind::Uniform => "uniform",
            SamplerKind::Gl => "gl",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(SamplerKind::Uniform),
            "gl" => Ok(SamplerKind::Gl),
            other => Err(CliError::Usage(format!(
                "unknown sampler '{other}' (expected uniform or gl)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub scenarios: Vec<Scenario>,
    pub planners: Vec<PlannerKind>,
    pub samplers: Vec<SamplerKind>,
    pub runs: usize,
    pub timeout: f64,
    pub max_iterations: Option<u64>,
    pub lambda: f64,
    pub sigma: f64,
    pub seed_base: u64,
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
    /// Leave the wall-clock columns empty so output depends only on seeds.
    pub omit_timing: bool,
}

impl BenchmarkSpec {
    pub fn new(scenarios: Vec<Scenario>) -> Self {
        BenchmarkSpec {
            scenarios,
            planners: vec![PlannerKind::Birrt],
            samplers: vec![SamplerKind::Uniform, SamplerKind::Gl],
            runs: 20,
            timeout: 30.0,
            max_iterations: None,
            lambda: glsampler::sampling::DEFAULT_LAMBDA,
            sigma: glsampler::sampling::DEFAULT_SIGMA,
            seed_base: 0,
            workers: 0,
            omit_timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            return Err(CliError::Usage("runs must be at least 1".into()));
        }
        if self.scenarios.is_empty() || self.planners.is_empty() || self.samplers.is_empty() {
            return Err(CliError::Usage(
                "benchmark needs at least one scenario, planner and sampler".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub scenario: String,
    pub planner: String,
    pub sampler: String,
    pub seed: u64,
    pub outcome: String,
    pub elapsed_s: Option<f64>,
    pub iterations: u64,
    pub path_length_rad: Option<f64>,
    pub db_retrieve_ms: Option<f64>,
}

impl BenchmarkRow {
    pub fn solved(&self) -> bool {
        self.outcome == "solved"
    }
}

struct Cell<'a> {
    scenario: &'a Scenario,
    planner: PlannerKind,
    sampler: SamplerKind,
    seed: u64,
}

/// Runs every (scenario, planner, sampler, seed) cell. Rows come back in
/// that order whatever the completion order. Failures become rows.
pub fn run_benchmark(
    spec: &BenchmarkSpec,
    db: Option<&ExperienceDatabase>,
) -> Result<Vec<BenchmarkRow>> {
    spec.validate()?;
    if spec.samplers.contains(&SamplerKind::Gl) && db.is_none() {
        return Err(CliError::Usage(
            "the gl sampler needs a database (--db)".into(),
        ));
    }
    let mut cells = Vec::new();
    for scenario in &spec.scenarios {
        for &planner in &spec.planners {
            for &sampler in &spec.samplers {
                for r in 0..spec.runs {
                    cells.push(Cell {
                        scenario,
                        planner,
                        sampler,
                        seed: spec.seed_base + r as u64,
                    });
                }
            }
        }
    }
    let workers = match spec.workers {
        0 => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
        n => n,
    }
    .min(cells.len());
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<BenchmarkRow>>> = Mutex::new(vec![None; cells.len()]);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = cells.get(i) else { break };
                let row = run_cell(spec, db, cell);
                slots
                    .lock()
                    .expect("no worker panics while holding the lock")[i] = Some(row);
            });
        }
    });
    Ok(slots
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|r| r.expect("every cell ran"))
        .collect())
}

fn run_cell(spec: &BenchmarkSpec, db: Option<&ExperienceDatabase>, cell: &Cell) -> BenchmarkRow {
    let mut row = BenchmarkRow {
        scenario: cell.scenario.name.clone(),
        planner: cell.planner.name().to_string(),
        sampler: cell.sampler.name().to_string(),
        seed: cell.seed,
        outcome: "error".into(),
        elapsed_s: None,
        iterations: 0,
        path_length_rad: None,
        db_retrieve_ms: None,
    };
    let world = cell.scenario.world();
    let sampler = match cell.sampler {
        SamplerKind::Uniform => GlSampler::uniform(world.chain.joint_limits.clone(), cell.seed),
        SamplerKind::Gl => {
            let mut db = db.expect("checked before the sweep").clone();
            let opts = PipelineOptions {
                lambda: spec.lambda,
                gap_threshold: cell.scenario.gap_threshold,
                build_on_miss: false,
                experience: ExperienceConfig {
                    sigma: spec.sigma,
                    ..ExperienceConfig::default()
                },
                seed: cell.seed,
            };
            match build_gl_sampler(&world, &mut db, &opts) {
                Ok((s, report)) => {
                    row.db_retrieve_ms = Some(report.retrieve_ms);
                    s
                }
                Err(e) => {
                    log::error!("{}: {e}", cell.scenario.name);
                    return row;
                }
            }
        }
    };
    let cfg = PlannerConfig {
        timeout: spec.timeout,
        max_iterations: spec.max_iterations,
        rng_seed: cell.seed,
        ..PlannerConfig::new(cell.planner)
    };
    match plan(
        &world,
        &cell.scenario.start,
        &cell.scenario.goal,
        &sampler,
        &cfg,
    ) {
        Ok(r) => {
            row.outcome = match r.outcome {
                Outcome::Solved => "solved",
                Outcome::Timeout => "timeout",
            }
            .into();
            row.elapsed_s = Some(r.elapsed);
            row.iterations = r.iterations;
            row.path_length_rad = r.path.map(|p| p.length(&world.chain));
        }
        Err(e) => log::error!("{}: {e}", cell.scenario.name),
    }
    if spec.omit_timing {
        row.elapsed_s = None;
        row.db_retrieve_ms = None;
    }
    row
}

/// Writes the header and one line per row.
pub fn write_csv<W: Write>(rows: &[BenchmarkRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.planner.clone(),
            r.sampler.clone(),
            r.seed.to_string(),
            r.outcome.clone(),
            fmt_opt(r.elapsed_s, 6),
            r.iterations.to_string(),
            fmt_opt(r.path_length_rad, 6),
            fmt_opt(r.db_retrieve_ms, 4),
        ])?;
    }
    w.flush().map_err(|e| CliError::Io {
        path: "csv output".into(),
        source: e,
    })?;
    Ok(())
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_default()
}

/// Per-cell statistics. Times count timeouts at the full budget.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub scenario: String,
    pub planner: String,
    pub sampler: String,
    pub runs: usize,
    pub solved: usize,
    pub median_s: f64,
    pub min_s: f64,
    pub max_s: f64,
}

pub fn summarize(rows: &[BenchmarkRow], timeout: f64) -> Vec<CellSummary> {
    let mut out: Vec<CellSummary> = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let key = (&rows[i].scenario, &rows[i].planner, &rows[i].sampler);
        let j = i + rows[i..]
            .iter()
            .take_while(|r| (&r.scenario, &r.planner, &r.sampler) == key)
            .count();
        let cell = &rows[i..j];
        let mut times: Vec<f64> = cell
            .iter()
            .map(|r| {
                if r.solved() {
                    r.elapsed_s.unwrap_or(f64::NAN)
                } else {
                    timeout
                }
            })
            .collect();
        times.sort_by(f64::total_cmp);
        out.push(CellSummary {
            scenario: key.0.clone(),
            planner: key.1.clone(),
            sampler: key.2.clone(),
            runs: cell.len(),
            solved: cell.iter().filter(|r| r.solved()).count(),
            median_s: median(&times),
            min_s: times[0],
            max_s: times[times.len() - 1],
        });
        i = j;
    }
    out
}

/// Median of sorted values; the mean of the middle two for even counts.
pub fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

impl fmt::Display for CellSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<16} {:<6} {:<8} solved {:>3}/{:<3} median {:>8.3}s  min {:>8.3}s  max {:>8.3}s",
            self.scenario,
            self.planner,
            self.sampler,
            self.solved,
            self.runs,
            self.median_s,
            self.min_s,
            self.max_s
        )
    }
}
