//! Acceptance suite. Runs every criterion at its stated tolerance, prints
//! one PASS/FAIL line each, and exits nonzero if any fails.
//!
//! Set `ACCEPTANCE_ONLY=5,7` to run a subset.

mod benchmarks;
mod checks;

use std::process::ExitCode;
use std::time::Instant;

pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }
}

type Criterion = (u32, &'static str, fn() -> Verdict);

const CRITERIA: [Criterion; 9] = [
    (1, "geometry properties", checks::geometry),
    (2, "sampler properties", checks::samplers),
    (3, "oracle equivalence", checks::oracles),
    (4, "transform soundness", checks::transform),
    (5, "scenario 1, single close pair", benchmarks::scenario1),
    (6, "scenario 2, adjacent primitives", benchmarks::scenario2),
    (7, "similarity-error robustness", benchmarks::scenario3),
    (8, "benchmark determinism", benchmarks::determinism),
    (9, "database round trip", benchmarks::database),
];

fn selected() -> Option<Vec<u32>> {
    let only = std::env::var("ACCEPTANCE_ONLY").ok()?;
    Some(
        only.split(',')
            .filter_map(|s| s.trim().parse().ok())
            .collect(),
    )
}

fn main() -> ExitCode {
    let only = selected();
    let suite = Instant::now();
    let mut failed = 0;
    for (n, name, run) in CRITERIA {
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let t = Instant::now();
        let v = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Verdict::new(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        failed += usize::from(!v.pass);
        println!(
            "{} criterion {n} ({name}): {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance suite finished in {:.1}s, {failed} failed",
        suite.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
