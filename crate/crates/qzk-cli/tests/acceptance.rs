//! Runs `qzk demo` and prints one pass/fail line per acceptance criterion.

use std::collections::BTreeMap;
use std::process::{Command, ExitCode};
use std::time::Instant;

use serde_json::Value;

const CRITERIA: [(u64, &str); 9] = [
    (1, "rewinding succeeds with probability 1/2 and reproduces the interaction"),
    (2, "parallelization: completeness, perfect zero knowledge, soundness"),
    (3, "public-coin conversion: completeness, coin structure, zero knowledge, soundness"),
    (4, "perfect completeness: acceptance 1, middle-view distance, soundness"),
    (5, "fidelity-chain converse and triangle chain over random instances"),
    (6, "parallel and sequential repetition"),
    (7, "failure-flag wrapper and amplification"),
    (8, "gate exactness and swap-select branch selection"),
    (9, "demo exits 0 within 5 minutes; protocol JSON round-trip is stable"),
];

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let out = dir.path().join("report.json");
    let start = Instant::now();
    let run = Command::new(env!("CARGO_BIN_EXE_qzk")).arg("demo").arg("--out").arg(&out).output().expect("qzk demo runs");
    let seconds = start.elapsed().as_secs_f64();
    let stdout = String::from_utf8_lossy(&run.stdout);
    let report: Value = std::fs::read_to_string(&out)
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
        .unwrap_or(Value::Null);

    let mut by_criterion: BTreeMap<u64, Vec<(String, bool)>> = BTreeMap::new();
    for c in report["checks"].as_array().into_iter().flatten() {
        let n = c["criterion"].as_u64().unwrap_or(0);
        let id = c["id"].as_str().unwrap_or("?").to_string();
        by_criterion.entry(n).or_default().push((id, c["pass"].as_bool() == Some(true)));
    }

    let mut all = true;
    for (n, what) in CRITERIA {
        let checks = by_criterion.get(&n).cloned().unwrap_or_default();
        let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(id, _)| id.as_str()).collect();
        let mut ok = !checks.is_empty() && failed.is_empty();
        let mut note = format!("{} checks", checks.len());
        if n == 1 {
            ok &= stdout.contains("measured 0.500000000 vs claimed 0.5");
        }
        if n == 9 {
            ok &= run.status.success() && seconds < 300.0;
            note = format!("{note}, exit {:?}, {seconds:.1}s", run.status.code());
        }
        if !failed.is_empty() {
            note = format!("{note}, failed: {}", failed.join(", "));
        }
        println!("criterion {n}: {} - {what} ({note})", if ok { "PASS" } else { "FAIL" });
        all &= ok;
    }
    if all {
        ExitCode::SUCCESS
    } else {
        eprintln!("{}", String::from_utf8_lossy(&run.stderr));
        ExitCode::FAILURE
    }
}
