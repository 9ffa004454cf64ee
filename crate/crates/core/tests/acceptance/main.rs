//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Criteria can be selected by number: `cargo test --test acceptance -- 1 7 8`.
//! The trend criteria (3, 4, 5) share trained models and dominate the runtime.

mod determinism;
mod fuzz;
mod gradients;
mod metrics;
mod oracles;
mod trends;

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

type Check = fn(&mut trends::Shared) -> Verdict;

const CRITERIA: [(u32, &str, Check); 9] = [
    (1, "gradient fidelity", |_| gradients::fidelity()),
    (2, "distribution soundness", |_| gradients::distributions()),
    (3, "copy ablation trend", trends::copy_ablation),
    (4, "hybrid dominance trend", trends::hybrid_dominance),
    (5, "selection-method ordering", trends::selection_methods),
    (6, "expert short-circuit fuzz", |_| fuzz::expert_short_circuit()),
    (7, "oracle equivalences", |_| oracles::all()),
    (8, "metric micro-oracles", |_| metrics::all()),
    (9, "determinism", |_| determinism::two_runs()),
];

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut shared = trends::Shared::default();
    let mut failed = 0;
    for (id, name, check) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let v = check(&mut shared);
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("[{status}] {id}. {name} ({:.1} s): {}", t.elapsed().as_secs_f64(), v.detail);
        if !v.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
