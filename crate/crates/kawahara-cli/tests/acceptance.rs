//! Acceptance suite: runs each command in-process with its gate defaults and
//! prints one PASS/FAIL line per criterion. Exits nonzero if any fails.

use kawahara_cli::{execute, resolve, RunSummary};
use serde_json::Value;
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

fn run(command: &str, overrides: &[(&str, &str)], out: &Path) -> Result<(RunSummary, Duration), String> {
    let mut flags: Vec<(String, String)> = vec![("out".into(), out.display().to_string())];
    flags.extend(overrides.iter().map(|(k, v)| (k.to_string(), v.to_string())));
    let inv = resolve(command, None, &flags).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let summary = execute(&inv).map_err(|e| e.to_string())?;
    Ok((summary, start.elapsed()))
}

/// Gates whose name starts with any of `prefixes`.
fn gates<'a>(summary: &'a RunSummary, prefixes: &[&str]) -> Vec<&'a Value> {
    summary.report["gates"]
        .as_array()
        .map(|a| a.iter().filter(|g| prefixes.iter().any(|p| g["name"].as_str().unwrap_or("").starts_with(p))).collect())
        .unwrap_or_default()
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn judge(summary: &RunSummary, prefixes: &[&str], elapsed: Duration, budget: Duration) -> Verdict {
    let selected = gates(summary, prefixes);
    let mut pass = !selected.is_empty() && selected.iter().all(|g| g["pass"].as_bool() == Some(true));
    let mut parts: Vec<String> = selected
        .iter()
        .map(|g| format!("{} {} {} {}", g["name"].as_str().unwrap_or(""), g["value"], g["relation"].as_str().unwrap_or(""), g["limit"]))
        .collect();
    if elapsed > budget {
        pass = false;
    }
    parts.push(format!("{:.1} s of {} s", elapsed.as_secs_f64(), budget.as_secs()));
    Verdict { pass, detail: parts.join("; ") }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

/// Reduced configurations for the determinism check.
const SMALL: &[(&str, &[(&str, &str)])] = &[
    ("simulate", &[("n", "256"), ("t_end", "0.1")]),
    (
        "energy-track",
        &[("n", "128"), ("t_end", "0.01"), ("audit_points", "2"), ("proximity_grids", "64,128"), ("proximity_fields", "3")],
    ),
    (
        "gwp",
        &[("steps", "2"), ("length", "64pi"), ("n", "256"), ("N", "8"), ("sweep_N", "8,16"), ("sweep_n", "64"), ("sweep_cutoff", "20")],
    ),
    ("verify-bounds", &[("samples", "5000")]),
    ("resonance", &[("samples", "20000"), ("budget_factor", "2")]),
    ("knapp", &[("samples", "100000")]),
    ("strichartz", &[("k_max", "5"), ("trials", "4"), ("max_time_samples", "4096")]),
    ("xnorms", &[("n", "32"), ("time_samples", "256")]),
    ("duhamel", &[("intervals", "64")]),
    ("illposed", &[("N_list", "128,256,512,1024")]),
    ("identities", &[("samples", "2000")]),
];

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .map(|entries| {
            entries
                .filter_map(|e| e.ok())
                .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap_or_default()))
                .collect()
        })
        .unwrap_or_default()
}

fn determinism(root: &Path) -> Verdict {
    let mut failures = Vec::new();
    for (command, overrides) in SMALL {
        let mut seen = Vec::new();
        for (label, workers) in [("w1", "1"), ("w4a", "4"), ("w4b", "4")] {
            let dir = root.join(format!("{command}-{label}"));
            let mut flags = overrides.to_vec();
            flags.extend([("workers", workers), ("seed", "1"), ("no_gate", "true")]);
            match run(command, &flags, &dir) {
                Ok(_) => seen.push(artifacts(&dir)),
                Err(e) => failures.push(format!("{command}: {e}")),
            }
        }
        if seen.len() == 3 && !(seen[0] == seen[1] && seen[1] == seen[2]) {
            failures.push(format!("{command}: artifacts differ"));
        }
    }
    let detail = if failures.is_empty() {
        format!("{} commands byte-identical over workers 1, 4, 4", SMALL.len())
    } else {
        failures.join("; ")
    };
    Verdict { pass: failures.is_empty(), detail }
}

fn main() -> ExitCode {
    let root = tempfile::tempdir().expect("temporary directory");
    let out = |name: &str| root.path().join(name);
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut record = |id: u32, title: &'static str, verdict: Verdict| {
        println!("criterion {id:>2} {:<4} {title}: {}", if verdict.pass { "PASS" } else { "FAIL" }, verdict.detail);
        results.push((id, title, verdict));
    };
    let failed = |e: String| Verdict { pass: false, detail: e };

    match run("identities", &[], &out("identities")) {
        Ok((s, t)) => {
            record(1, "algebraic identities", judge(&s, &["power_sums", "theta"], t, secs(1)));
            record(2, "cancellation by construction", judge(&s, &["cancellation"], t, secs(10)));
        }
        Err(e) => {
            record(1, "algebraic identities", failed(e.clone()));
            record(2, "cancellation by construction", failed(e));
        }
    }
    record(
        3,
        "solver conservation",
        run("simulate", &[("n", "512")], &out("conservation"))
            .map_or_else(failed, |(s, t)| judge(&s, &["mean_drift", "l2_drift"], t, secs(10))),
    );
    record(
        4,
        "travelling-wave oracle",
        run("simulate", &[("datum", "wave"), ("length", "64"), ("n", "256")], &out("wave"))
            .map_or_else(failed, |(s, t)| judge(&s, &["wave_"], t, secs(30))),
    );
    match run("energy-track", &[], &out("energy")) {
        Ok((s, t)) => {
            record(5, "energy-derivative identity", judge(&s, &["resid3"], t, secs(120)));
            record(6, "E4-E2 proximity constant", judge(&s, &["proximity_drift"], t, secs(600)));
        }
        Err(e) => {
            record(5, "energy-derivative identity", failed(e.clone()));
            record(6, "E4-E2 proximity constant", failed(e));
        }
    }
    match run("gwp", &[], &out("gwp")) {
        Ok((s, t)) => {
            record(7, "almost-conservation trend", judge(&s, &["increment"], t, secs(1200)));
            record(8, "bootstrap bound", judge(&s, &["e2_below"], t, secs(1800)));
        }
        Err(e) => {
            record(7, "almost-conservation trend", failed(e.clone()));
            record(8, "bootstrap bound", failed(e));
        }
    }
    record(
        9,
        "resonance size",
        run("resonance", &[], &out("resonance")).map_or_else(failed, |(s, t)| judge(&s, &["mu="], t, secs(60))),
    );
    record(
        10,
        "linear estimates",
        run("strichartz", &[], &out("strichartz")).map_or_else(failed, |(s, t)| judge(&s, &["L", "unitarity"], t, secs(300))),
    );
    record(
        11,
        "Knapp sharpness",
        run("knapp", &[], &out("knapp")).map_or_else(failed, |(s, t)| judge(&s, &["j_scaled", "norm_scaled", "N1="], t, secs(300))),
    );
    record(
        12,
        "multiplier-bound audits",
        run("verify-bounds", &[], &out("bounds")).map_or_else(failed, |(s, t)| judge(&s, &["sigma3", "sigma4", "m5"], t, secs(900))),
    );
    record(
        13,
        "ill-posedness exponent",
        run("illposed", &[], &out("illposed")).map_or_else(failed, |(s, t)| judge(&s, &["slope_gap"], t, secs(1200))),
    );
    record(14, "determinism", determinism(&root.path().join("determinism")));

    let passed = results.iter().filter(|r| r.2.pass).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
