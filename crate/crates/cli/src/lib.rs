//! Command-line front end: scenario files, the GL sampler pipeline,
//! database building, benchmarking and SVG rendering.

pub mod bench;
pub mod build;
pub mod commands;
pub mod error;
pub mod grid;
pub mod pipeline;
pub mod render;
pub mod scenario;

pub use bench::{
    run_benchmark, summarize, write_csv, BenchmarkRow, BenchmarkSpec, CellSummary, SamplerKind,
};
pub use build::{build_database, jobs_from_grid, jobs_from_scenarios, BuildSummary};
pub use error::{CliError, Result};
pub use grid::GridSpec;
pub use pipeline::{build_gl_sampler, PipelineOptions, PipelineReport};
pub use render::render_svg;
pub use scenario::Scenario;
