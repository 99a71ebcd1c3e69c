//! Offline database construction from scenarios or a primitive grid.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use glsampler::experience::{build_entry, BuiltEntry, ExperienceConfig, ExperienceDatabase};
use glsampler::{canonicalize, decompose, seeded_rng, ChainSpec, LocalPrimitive};
use nalgebra::Point2;

use crate::error::{CliError, Result};
use crate::grid::GridSpec;
use crate::scenario::Scenario;

/// One primitive to build, with a note on where it came from.
#[derive(Debug, Clone)]
pub struct BuildJob {
    pub primitive: LocalPrimitive,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryReport {
    pub source: String,
    pub descriptor: [f64; 6],
    pub configs_before: usize,
    pub configs_after: usize,
}

#[derive(Debug, Clone, Default)]
pub struct BuildSummary {
    pub built: Vec<EntryReport>,
    pub skipped: Vec<(String, String)>,
    pub warnings: Vec<String>,
    pub elapsed_s: f64,
}

/// Close pairs of every scenario, canonicalized and deduplicated. All
/// scenarios must share one chain.
pub fn jobs_from_scenarios(
    scenarios: &[Scenario],
) -> Result<(ChainSpec, Vec<BuildJob>, Vec<String>)> {
    let first = scenarios
        .first()
        .ok_or_else(|| CliError::Usage("no scenario given".into()))?;
    let chain = first.chain.clone();
    let mut jobs: Vec<BuildJob> = Vec::new();
    let mut warnings = Vec::new();
    for s in scenarios {
        if s.chain.link_lengths != chain.link_lengths || s.chain.joint_limits != chain.joint_limits
        {
            return Err(CliError::InvalidScenario {
                name: s.name.clone(),
                message: "chain differs from the first scenario's".into(),
            });
        }
        let prims = decompose(&s.world(), s.gap_threshold);
        if prims.is_empty() {
            warnings.push(format!("scenario {} has no close pairs", s.name));
        }
        for (i, lw) in prims.into_iter().enumerate() {
            let origin = Point2::origin();
            let canon = canonicalize(
                &LocalPrimitive::from_descriptor(&lw.descriptor, origin)?,
                origin,
            )?
            .primitive;
            let dup = jobs.iter().any(|j| {
                glsampler::workspace::distance_sq(&j.primitive.descriptor, &canon.descriptor)
                    < glsampler::experience::DEDUP_DISTANCE_SQ
            });
            if !dup {
                jobs.push(BuildJob {
                    primitive: canon,
                    source: format!("{}#{i}", s.name),
                });
            }
        }
    }
    Ok((chain, jobs, warnings))
}

pub fn jobs_from_grid(grid: &GridSpec) -> Result<Vec<BuildJob>> {
    grid.validate()?;
    grid.points()
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            Ok(BuildJob {
                primitive: LocalPrimitive::from_descriptor(&d, Point2::origin())?,
                source: format!("grid#{i}"),
            })
        })
        .collect()
}

/// Seed of job `index`; jobs get independent streams so the result does
/// not depend on how they are scheduled.
fn job_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Builds every job on `workers` threads and inserts the results into
/// `db` in job order.
pub fn build_database(
    db: &mut ExperienceDatabase,
    jobs: &[BuildJob],
    chain: &ChainSpec,
    cfg: &ExperienceConfig,
    seed: u64,
    workers: usize,
) -> Result<BuildSummary> {
    cfg.validate()?;
    if chain.dof() != db.dof {
        return Err(CliError::Usage(format!(
            "database has {} joints, chain has {}",
            db.dof,
            chain.dof()
        )));
    }
    let started = Instant::now();
    let workers = match workers {
        0 => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
        n => n,
    }
    .clamp(1, jobs.len().max(1));
    let next = AtomicUsize::new(0);
    type Slot = Option<glsampler::Result<BuiltEntry>>;
    let slots: Mutex<Vec<Slot>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let mut rng = seeded_rng(job_seed(seed, i));
                let t = Instant::now();
                let result = build_entry(&job.primitive, chain, cfg, &mut rng, &job.source);
                log::info!("{}: {:.1}s", job.source, t.elapsed().as_secs_f64());
                slots
                    .lock()
                    .expect("no worker panics while holding the lock")[i] = Some(result);
            });
        }
    });
    let mut summary = BuildSummary::default();
    for (job, slot) in jobs.iter().zip(slots.into_inner().expect("workers joined")) {
        match slot.expect("every job ran") {
            Ok(built) => {
                summary.built.push(EntryReport {
                    source: job.source.clone(),
                    descriptor: built.entry.canonical_descriptor,
                    configs_before: built.entry.provenance.configs_before,
                    configs_after: built.entry.provenance.configs_after,
                });
                db.insert(built.entry)?;
            }
            Err(e) => summary.skipped.push((job.source.clone(), e.to_string())),
        }
    }
    summary.elapsed_s = started.elapsed().as_secs_f64();
    Ok(summary)
}
