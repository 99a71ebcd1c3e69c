//! Query-time construction of the GL sampler: decompose the world, fetch
//! or build a local sampler per primitive, and combine them.

use std::time::Instant;

use glsampler::experience::{build_entry, ExperienceConfig, ExperienceDatabase};
use glsampler::{decompose, seeded_rng, synthesize, GlSampler, GmmSampler, World};
use log::{info, warn};

use crate::error::Result;

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub lambda: f64,
    pub gap_threshold: f64,
    /// Build and insert entries for primitives the database lacks.
    pub build_on_miss: bool,
    pub experience: ExperienceConfig,
    /// Seed of the sampler stream and of any on-miss builds.
    pub seed: u64,
}

/// What happened while assembling the sampler for one query.
#[derive(Debug, Clone, Default)]
pub struct PipelineReport {
    pub primitives: usize,
    pub retrieved: usize,
    pub built: usize,
    pub missed: usize,
    /// Wall time spent in database lookups, milliseconds.
    pub retrieve_ms: f64,
    pub warnings: Vec<String>,
}

/// Assembles the GL sampler for `world`. Primitives without a usable
/// entry are skipped; with none left the sampler is plain uniform.
pub fn build_gl_sampler(
    world: &World,
    db: &mut ExperienceDatabase,
    opts: &PipelineOptions,
) -> Result<(GlSampler, PipelineReport)> {
    let mut report = PipelineReport::default();
    let primitives = decompose(world, opts.gap_threshold);
    report.primitives = primitives.len();
    let mut locals: Vec<GmmSampler> = Vec::with_capacity(primitives.len());
    let mut build_rng = seeded_rng(opts.seed);
    for (i, lw) in primitives.iter().enumerate() {
        let t = Instant::now();
        let hit = db.retrieve(lw);
        report.retrieve_ms += t.elapsed().as_secs_f64() * 1e3;
        if let Some(r) = hit {
            info!(
                "primitive {i}: entry {} at distance² {:.4}",
                r.entry_index, r.distance_sq
            );
            report.retrieved += 1;
            locals.push(r.sampler);
            continue;
        }
        if !opts.build_on_miss {
            report.missed += 1;
            continue;
        }
        match build_entry(
            lw,
            &world.chain,
            &opts.experience,
            &mut build_rng,
            "build-on-miss",
        ) {
            Ok(built) => {
                db.insert(built.entry)?;
                report.built += 1;
                match db.retrieve(lw) {
                    Some(r) => locals.push(r.sampler),
                    None => report.missed += 1,
                }
            }
            Err(e) => {
                report.warnings.push(format!("primitive {i}: {e}"));
                report.missed += 1;
            }
        }
    }
    if report.missed > 0 {
        report.warnings.push(format!(
            "{} of {} primitives have no local sampler",
            report.missed, report.primitives
        ));
    }
    let limits = world.chain.joint_limits.clone();
    let sampler = if locals.is_empty() {
        report
            .warnings
            .push("no primitive matched; sampling uniformly".into());
        GlSampler::uniform(limits, opts.seed)
    } else {
        GlSampler::new(Some(synthesize(locals)?), opts.lambda, limits, opts.seed)?
    };
    for w in &report.warnings {
        warn!("{w}");
    }
    Ok((sampler, report))
}
