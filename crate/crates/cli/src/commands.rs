//! Subcommand implementations behind the `glsampler` binary.

use std::fs;
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, Parser, Subcommand};
use glsampler::experience::{ExperienceConfig, ExperienceDatabase};
use glsampler::{
    plan, seeded_rng, ConfigSampler, Configuration, GlSampler, Outcome, Path, PlannerConfig,
    PlannerKind,
};
use serde::{Deserialize, Serialize};

use crate::bench::{run_benchmark, summarize, write_csv, BenchmarkSpec, SamplerKind};
use crate::build::{build_database, jobs_from_grid, jobs_from_scenarios};
use crate::error::{CliError, Result};
use crate::grid::GridSpec;
use crate::pipeline::{build_gl_sampler, PipelineOptions};
use crate::render::render_svg;
use crate::scenario::Scenario;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_TIMEOUT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "glsampler",
    version,
    about = "Experience-guided sampling for planar chains"
)]
pub struct Cli {
    /// Log verbosity (error, warn, info, debug).
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an experience database from scenarios or a primitive grid.
    BuildDb(BuildDbArgs),
    /// Solve one scenario.
    Plan(PlanArgs),
    /// Run a seeded benchmark sweep and write CSV.
    Bench(BenchArgs),
    /// Draw a scenario as SVG.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SamplerArgs {
    #[arg(long, default_value_t = glsampler::sampling::DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = glsampler::sampling::DEFAULT_SIGMA)]
    pub sigma: f64,
    /// Retrieval threshold on squared descriptor distance.
    #[arg(long = "threshold-d", default_value_t = glsampler::workspace::DEFAULT_DISTANCE_THRESHOLD)]
    pub threshold_d: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct BuildDbArgs {
    #[arg(long = "scenario")]
    pub scenarios: Vec<PathBuf>,
    /// JSON grid specification.
    #[arg(long, conflicts_with = "scenarios")]
    pub grid: Option<PathBuf>,
    /// Existing database to extend.
    #[arg(long)]
    pub db: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[arg(long, default_value_t = 10)]
    pub runs_per_query: usize,
    #[arg(long, default_value_t = 5)]
    pub queries_per_primitive: usize,
    /// Budget of each local planning run, seconds.
    #[arg(long, default_value_t = 5.0)]
    pub timeout: f64,
    /// Iteration cap of each local run; makes builds machine-independent.
    #[arg(long)]
    pub max_iterations: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    pub scenario: PathBuf,
    #[arg(long)]
    pub db: Option<PathBuf>,
    #[arg(long, default_value = "birrt")]
    pub planner: PlannerKind,
    #[arg(long, default_value = "gl")]
    pub sampler: SamplerKind,
    #[command(flatten)]
    pub sampler_args: SamplerArgs,
    #[arg(long, default_value_t = 30.0)]
    pub timeout: f64,
    #[arg(long)]
    pub max_iterations: Option<u64>,
    /// Build and store entries for primitives missing from the database.
    #[arg(long)]
    pub build_on_miss: bool,
    /// Write the path waypoints here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long = "scenario", required = true)]
    pub scenarios: Vec<PathBuf>,
    #[arg(long = "planner", default_values = ["birrt"])]
    pub planners: Vec<PlannerKind>,
    #[arg(long = "sampler", default_values = ["uniform", "gl"])]
    pub samplers: Vec<SamplerKind>,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    #[arg(long, default_value_t = 30.0)]
    pub timeout: f64,
    #[arg(long)]
    pub max_iterations: Option<u64>,
    #[arg(long)]
    pub db: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub sampler_args: SamplerArgs,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Leave timing columns empty so repeated runs give identical files.
    #[arg(long)]
    pub omit_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    pub scenario: PathBuf,
    /// Path file written by `plan --out`.
    #[arg(long)]
    pub path: Option<PathBuf>,
    /// JSON list of configurations to scatter.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Draw this many samples from the scenario's GL sampler (needs --db).
    #[arg(long)]
    pub draw: Option<usize>,
    #[arg(long)]
    pub db: Option<PathBuf>,
    #[command(flatten)]
    pub sampler_args: SamplerArgs,
    #[arg(long)]
    pub out: PathBuf,
}

/// Waypoints of a solved query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFile {
    pub format_version: u32,
    pub scenario: String,
    pub waypoints: Vec<Configuration>,
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::BuildDb(a) => cmd_build_db(&a),
        Command::Plan(a) => cmd_plan(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Render(a) => cmd_render(&a),
    }
}

fn load_db(path: &FsPath, threshold_d: f64) -> Result<ExperienceDatabase> {
    let mut db = ExperienceDatabase::load(path).map_err(|e| match e {
        glsampler::Error::Io(source) => CliError::io(path, source),
        other => CliError::Parse {
            path: path.display().to_string(),
            message: other.to_string(),
        },
    })?;
    db.distance_threshold = threshold_d;
    Ok(db)
}

fn write_text(path: &FsPath, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn cmd_build_db(a: &BuildDbArgs) -> Result<i32> {
    let cfg = ExperienceConfig {
        runs_per_query: a.runs_per_query,
        queries_per_primitive: a.queries_per_primitive,
        sigma: a.sampler.sigma,
        plan_timeout: a.timeout,
        plan_max_iterations: a.max_iterations,
        ..ExperienceConfig::default()
    };
    let (chain, jobs, warnings) = match &a.grid {
        Some(g) => {
            let text = fs::read_to_string(g).map_err(|e| CliError::io(g, e))?;
            let grid: GridSpec = serde_json::from_str(&text).map_err(|e| CliError::Parse {
                path: g.display().to_string(),
                message: e.to_string(),
            })?;
            let counts = grid.axis_counts();
            println!(
                "grid pitch {:.4} (d = {}), lattice {:?} = {} points, {} usable",
                grid.pitch(),
                grid.distance_threshold,
                counts,
                counts.iter().product::<usize>(),
                grid.points().len()
            );
            (grid.chain.clone(), jobs_from_grid(&grid)?, Vec::new())
        }
        None => {
            if a.scenarios.is_empty() {
                return Err(CliError::Usage(
                    "build-db needs --scenario or --grid".into(),
                ));
            }
            let scenarios = a
                .scenarios
                .iter()
                .map(Scenario::load)
                .collect::<Result<Vec<_>>>()?;
            jobs_from_scenarios(&scenarios)?
        }
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let mut db = match &a.db {
        Some(p) => load_db(p, a.sampler.threshold_d)?,
        None => ExperienceDatabase::new(chain.dof()).with_threshold(a.sampler.threshold_d),
    };
    db.sigma = a.sampler.sigma;
    let summary = build_database(&mut db, &jobs, &chain, &cfg, a.sampler.seed, a.workers)?;
    let text = db.to_json()?;
    write_text(&a.out, &text)?;
    for e in &summary.built {
        println!(
            "built {:<20} configs {:>4} -> mixtures {:>3}",
            e.source, e.configs_before, e.configs_after
        );
    }
    for (src, why) in &summary.skipped {
        println!("skipped {src}: {why}");
    }
    if db.is_empty() {
        eprintln!("warning: database is empty");
    }
    println!(
        "{} built, {} skipped, {} entries in {} ({:.1}s)",
        summary.built.len(),
        summary.skipped.len(),
        db.len(),
        a.out.display(),
        summary.elapsed_s
    );
    Ok(EXIT_OK)
}

pub fn cmd_plan(a: &PlanArgs) -> Result<i32> {
    let scenario = Scenario::load(&a.scenario)?;
    let world = scenario.world();
    let s = &a.sampler_args;
    let sampler = match a.sampler {
        SamplerKind::Uniform => GlSampler::uniform(world.chain.joint_limits.clone(), s.seed),
        SamplerKind::Gl => {
            let path =
                a.db.as_ref()
                    .ok_or_else(|| CliError::Usage("the gl sampler needs --db".into()))?;
            let mut db = if a.build_on_miss && !path.exists() {
                ExperienceDatabase::new(world.chain.dof()).with_threshold(s.threshold_d)
            } else {
                load_db(path, s.threshold_d)?
            };
            let opts = PipelineOptions {
                lambda: s.lambda,
                gap_threshold: scenario.gap_threshold,
                build_on_miss: a.build_on_miss,
                experience: ExperienceConfig {
                    sigma: s.sigma,
                    ..ExperienceConfig::default()
                },
                seed: s.seed,
            };
            let (sampler, report) = build_gl_sampler(&world, &mut db, &opts)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "primitives {}  retrieved {}  built {}  missed {}  retrieval {:.3} ms",
                report.primitives,
                report.retrieved,
                report.built,
                report.missed,
                report.retrieve_ms
            );
            if report.built > 0 {
                write_text(path, &db.to_json()?)?;
            }
            sampler
        }
    };
    let cfg = PlannerConfig {
        lambda: s.lambda,
        timeout: a.timeout,
        max_iterations: a.max_iterations,
        rng_seed: s.seed,
        ..PlannerConfig::new(a.planner)
    };
    let result = plan(&world, &scenario.start, &scenario.goal, &sampler, &cfg)?;
    println!(
        "{} {}: {:?} in {:.3}s, {} samples ({} biased, {} valid)",
        a.planner,
        a.sampler,
        result.outcome,
        result.elapsed,
        result.iterations,
        result.biased_sample_count,
        result.valid_sample_count
    );
    if let Some(p) = &result.path {
        println!(
            "path: {} waypoints, length {:.4} rad",
            p.waypoints().len(),
            p.length(&world.chain)
        );
        if let Some(out) = &a.out {
            let file = PathFile {
                format_version: 1,
                scenario: scenario.name.clone(),
                waypoints: p.waypoints().to_vec(),
            };
            write_text(out, &glsampler::experience::to_precise_json(&file)?)?;
        }
    }
    if let Some(svg) = &a.svg {
        write_text(svg, &render_svg(&scenario, result.path.as_ref(), &[]))?;
    }
    Ok(match result.outcome {
        Outcome::Solved => EXIT_OK,
        Outcome::Timeout => EXIT_TIMEOUT,
    })
}

pub fn cmd_bench(a: &BenchArgs) -> Result<i32> {
    let scenarios = a
        .scenarios
        .iter()
        .map(Scenario::load)
        .collect::<Result<Vec<_>>>()?;
    let db =
        a.db.as_ref()
            .map(|p| load_db(p, a.sampler_args.threshold_d))
            .transpose()?;
    let spec = BenchmarkSpec {
        planners: a.planners.clone(),
        samplers: a.samplers.clone(),
        runs: a.runs,
        timeout: a.timeout,
        max_iterations: a.max_iterations,
        lambda: a.sampler_args.lambda,
        sigma: a.sampler_args.sigma,
        seed_base: a.sampler_args.seed,
        workers: a.workers,
        omit_timing: a.omit_timing,
        ..BenchmarkSpec::new(scenarios)
    };
    let rows = run_benchmark(&spec, db.as_ref())?;
    let file = fs::File::create(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    write_csv(&rows, file)?;
    for s in summarize(&rows, spec.timeout) {
        println!("{s}");
    }
    Ok(EXIT_OK)
}

pub fn cmd_render(a: &RenderArgs) -> Result<i32> {
    let scenario = Scenario::load(&a.scenario)?;
    let path = match &a.path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            let file: PathFile = serde_json::from_str(&text).map_err(|e| CliError::Parse {
                path: p.display().to_string(),
                message: e.to_string(),
            })?;
            if file.waypoints.len() < 2 {
                return Err(CliError::Parse {
                    path: p.display().to_string(),
                    message: "fewer than 2 waypoints".into(),
                });
            }
            Some(Path::new(file.waypoints))
        }
        None => None,
    };
    let mut samples: Vec<Configuration> = match &a.samples {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::Parse {
                path: p.display().to_string(),
                message: e.to_string(),
            })?
        }
        None => Vec::new(),
    };
    if let Some(n) = a.draw {
        let db_path =
            a.db.as_ref()
                .ok_or_else(|| CliError::Usage("--draw needs --db".into()))?;
        let mut db = load_db(db_path, a.sampler_args.threshold_d)?;
        let opts = PipelineOptions {
            lambda: a.sampler_args.lambda,
            gap_threshold: scenario.gap_threshold,
            build_on_miss: false,
            experience: ExperienceConfig::default(),
            seed: a.sampler_args.seed,
        };
        let (sampler, _) = build_gl_sampler(&scenario.world(), &mut db, &opts)?;
        let mut rng = seeded_rng(a.sampler_args.seed);
        samples.extend((0..n).map(|_| sampler.sample(&mut rng)));
    }
    if let Some(bad) = samples.iter().find(|q| q.dof() != scenario.chain.dof()) {
        return Err(CliError::Usage(format!(
            "sample has {} angles, chain has {}",
            bad.dof(),
            scenario.chain.dof()
        )));
    }
    write_text(&a.out, &render_svg(&scenario, path.as_ref(), &samples))?;
    Ok(EXIT_OK)
}
