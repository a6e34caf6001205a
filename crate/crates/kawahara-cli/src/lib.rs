//! Batch front end: configuration resolution, command dispatch and report
//! emission for the `kawahara` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use crate::commands::Command;
use crate::config::{render, ConfigFile, Globals, Params};
use crate::error::CliError;
use crate::report::{gates_table, write_atomic, SCHEMA_VERSION};
use serde_json::json;
use std::path::{Path, PathBuf};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "KAWAHARA_OUT";
pub const DEFAULT_OUT: &str = "kawahara-out";

const GLOBAL_KEYS: [&str; 5] = ["seed", "format", "out", "workers", "no_gate"];

/// A fully resolved run.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: &'static Command,
    pub globals: Globals,
    pub params: Params,
}

impl std::fmt::Debug for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name)
    }
}

fn apply(globals: &mut Globals, params: &mut Params, key: &str, value: &str) -> Result<(), CliError> {
    if GLOBAL_KEYS.contains(&key) {
        globals.set(key, value)
    } else {
        params.set(key, value)
    }
}

/// Resolves defaults, then the config file, then `flags` (in order).
pub fn resolve(command: &str, file: Option<&ConfigFile>, flags: &[(String, String)]) -> Result<Invocation, CliError> {
    let cmd = commands::find(command).ok_or_else(|| CliError::UnknownKey { key: command.to_string() })?;
    let mut globals = Globals::default();
    let mut params = Params::defaults(cmd.params);
    if let Some(file) = file {
        for (k, v) in &file.top {
            globals.set(k, v)?;
        }
        for (section, entries) in &file.sections {
            let other = commands::find(section).ok_or_else(|| CliError::UnknownKey { key: format!("[{section}]") })?;
            if other.name == cmd.name {
                for (k, v) in entries {
                    apply(&mut globals, &mut params, k, v)?;
                }
            } else {
                let mut scratch = Params::defaults(other.params);
                let mut scratch_globals = Globals::default();
                for (k, v) in entries {
                    apply(&mut scratch_globals, &mut scratch, k, v)?;
                }
            }
        }
    }
    for (k, v) in flags {
        apply(&mut globals, &mut params, k, v)?;
    }
    Ok(Invocation { command: cmd, globals, params })
}

/// Splits `--key value`, `--key=value` and `--no-gate` tokens into pairs;
/// dashes in keys are read as underscores.
pub fn parse_overrides(tokens: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    let mut iter = tokens.iter();
    while let Some(token) = iter.next() {
        let body = token
            .strip_prefix("--")
            .ok_or_else(|| CliError::Invalid { key: token.clone(), reason: "expected a `--key value` flag".into() })?;
        let (key, inline) = match body.split_once('=') {
            Some((k, v)) => (k, Some(v.to_string())),
            None => (body, None),
        };
        let key = key.replace('-', "_");
        let value = match inline {
            Some(v) => v,
            None if key == "no_gate" => "true".to_string(),
            None => iter.next().cloned().ok_or_else(|| CliError::MissingValue { key: key.clone() })?,
        };
        out.push((key, value));
    }
    Ok(out)
}

pub fn out_dir(globals: &Globals) -> PathBuf {
    match &globals.out {
        Some(dir) => PathBuf::from(dir),
        None => std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub pass: bool,
    pub exit_code: i32,
    pub report: serde_json::Value,
    pub artifacts: Vec<PathBuf>,
}

/// Runs the command on its own worker pool and writes the report, tables
/// and manifest into the output directory.
pub fn execute(inv: &Invocation) -> Result<RunSummary, CliError> {
    let cmd = inv.command;
    let work = || (cmd.run)(&inv.params, &inv.globals);
    let outcome = match inv.globals.workers {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Invalid { key: "workers".into(), reason: e.to_string() })?
            .install(work),
        None => work(),
    }?;
    let pass = outcome.pass();
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": cmd.name,
        "seed": inv.globals.seed,
        "params": inv.params.to_json(),
        "gated": !inv.globals.no_gate,
        "gates": outcome.gates,
        "pass": pass,
        "result": outcome.result,
    });
    let dir = out_dir(&inv.globals);
    let mut artifacts = Vec::new();
    let mut write = |name: String, bytes: &[u8]| -> Result<(), CliError> {
        let path = dir.join(name);
        write_atomic(&path, bytes)?;
        artifacts.push(path);
        Ok(())
    };
    write(format!("{}.manifest", cmd.name), render(cmd.name, &inv.globals, &inv.params).as_bytes())?;
    if inv.globals.format.json() {
        let mut text = serde_json::to_string_pretty(&report).expect("serialisable report");
        text.push('\n');
        write(format!("{}.json", cmd.name), text.as_bytes())?;
    }
    if inv.globals.format.csv() {
        for table in outcome.tables.iter().chain([&gates_table(&outcome.gates)]) {
            write(format!("{}-{}.csv", cmd.name, table.name), table.csv.as_bytes())?;
        }
    }
    let _ = std::fs::remove_file(dir.join(format!("{}.failure.json", cmd.name)));
    let exit_code = if pass || inv.globals.no_gate { 0 } else { 1 };
    Ok(RunSummary { pass, exit_code, report, artifacts })
}

/// Machine-readable description of a failed run.
pub fn failure_record(command: &str, err: &CliError) -> serde_json::Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "error": err.kind(),
        "key": err.key(),
        "message": err.to_string(),
        "exit_code": err.exit_code(),
    })
}

/// Prints the failure record to stderr and, when possible, writes it next
/// to the other artifacts.
pub fn report_failure(command: &str, dir: Option<&Path>, err: &CliError) -> i32 {
    let record = failure_record(command, err);
    eprintln!("error: {err}");
    eprintln!("{record}");
    if let Some(dir) = dir {
        let text = serde_json::to_string_pretty(&record).expect("serialisable record") + "\n";
        let _ = write_atomic(&dir.join(format!("{command}.failure.json")), text.as_bytes());
    }
    err.exit_code()
}

fn cli() -> clap::Command {
    use clap::{Arg, ArgAction};
    let global = |name: &'static str, help: &'static str| Arg::new(name).long(name).global(true).help(help);
    let mut app = clap::Command::new("kawahara")
        .about("Numerical laboratory for the Kawahara equation")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(global("config", "config file of `key = value` lines with [command] sections").value_name("PATH"))
        .arg(global("seed", "random seed").value_name("U64"))
        .arg(global("out", "output directory (default $KAWAHARA_OUT or ./kawahara-out)").value_name("DIR"))
        .arg(global("format", "report format").value_name("csv|json|both"))
        .arg(global("workers", "worker threads").value_name("K"))
        .arg(
            Arg::new("no-gate")
                .long("no-gate")
                .global(true)
                .action(ArgAction::SetTrue)
                .help("exit 0 even when a gate fails"),
        );
    for c in commands::COMMANDS {
        let mut keys = String::from("Parameters (pass as --KEY VALUE):\n");
        for s in c.params {
            keys.push_str(&format!("  --{:<22} {} [default: {}]\n", s.key, s.help, s.default));
        }
        app = app.subcommand(
            clap::Command::new(c.name).about(c.about).after_help(keys).arg(
                Arg::new("params")
                    .num_args(0..)
                    .trailing_var_arg(true)
                    .allow_hyphen_values(true)
                    .value_name("--KEY VALUE"),
            ),
        );
    }
    app
}

/// Entry point of the binary; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let mut flags = Vec::new();
    for key in ["seed", "out", "format", "workers"] {
        if let Some(v) = sub.get_one::<String>(key) {
            flags.push((key.to_string(), v.clone()));
        }
    }
    if sub.get_flag("no-gate") {
        flags.push(("no_gate".to_string(), "true".to_string()));
    }
    let mut config_path = sub.get_one::<String>("config").cloned();
    let trailing: Vec<String> = sub.get_many::<String>("params").map(|v| v.cloned().collect()).unwrap_or_default();
    let fallback_dir = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let parsed = parse_overrides(&trailing).and_then(|extra| {
        for (k, v) in extra {
            if k == "config" {
                config_path = Some(v);
            } else {
                flags.push((k, v));
            }
        }
        let file = config_path.as_deref().map(|p| ConfigFile::read(Path::new(p))).transpose()?;
        resolve(name, file.as_ref(), &flags)
    });
    let inv = match parsed {
        Ok(inv) => inv,
        Err(e) => {
            let dir = flags.iter().rev().find(|(k, _)| k == "out").map_or(fallback_dir, |(_, v)| PathBuf::from(v));
            return report_failure(name, Some(&dir), &e);
        }
    };
    let dir = out_dir(&inv.globals);
    match execute(&inv) {
        Ok(summary) => {
            for g in summary.report["gates"].as_array().into_iter().flatten() {
                println!(
                    "{} {}: {} {} {}",
                    if g["pass"].as_bool() == Some(true) { "PASS" } else { "FAIL" },
                    g["name"].as_str().unwrap_or(""),
                    g["value"],
                    g["relation"].as_str().unwrap_or(""),
                    g["limit"]
                );
            }
            println!("{}: {} ({})", name, if summary.pass { "PASS" } else { "FAIL" }, dir.display());
            summary.exit_code
        }
        Err(e) => report_failure(name, Some(&dir), &e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(items: &[(&str, &str)]) -> Vec<(String, String)> {
        items.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn empty_file_gives_documented_defaults() {
        let file = ConfigFile::parse("").unwrap();
        let inv = resolve("simulate", Some(&file), &[]).unwrap();
        assert_eq!(inv.params.f64("length"), 256.0 * std::f64::consts::PI);
        assert_eq!(inv.params.usize("n"), 1024);
        assert_eq!(inv.params.f64("dt"), 1e-3);
        assert_eq!(inv.params.f64("mu"), 1.0);
    }

    #[test]
    fn flags_override_the_file() {
        let file = ConfigFile::parse("seed = 7\n[simulate]\nn = 512\n").unwrap();
        let inv = resolve("simulate", Some(&file), &pairs(&[("seed", "9")])).unwrap();
        assert_eq!(inv.globals.seed, 9);
        assert_eq!(inv.params.usize("n"), 512);
    }

    #[test]
    fn strict_keys_in_every_section() {
        let file = ConfigFile::parse("[gwp]\nbogus = 1\n").unwrap();
        let e = resolve("simulate", Some(&file), &[]).unwrap_err();
        assert_eq!(e.key().as_deref(), Some("bogus"));
        let file = ConfigFile::parse("[nosuch]\n").unwrap();
        assert!(resolve("simulate", Some(&file), &[]).is_err());
    }

    #[test]
    fn manifest_resolves_to_the_same_run() {
        for c in commands::COMMANDS {
            let inv = resolve(c.name, None, &pairs(&[("seed", "5"), ("format", "csv"), ("no_gate", "true")])).unwrap();
            let text = render(c.name, &inv.globals, &inv.params);
            let again = resolve(c.name, Some(&ConfigFile::parse(&text).unwrap()), &[]).unwrap();
            assert_eq!(again.params, inv.params, "{}", c.name);
            assert_eq!(again.globals, inv.globals, "{}", c.name);
        }
    }

    #[test]
    fn override_tokens() {
        let t: Vec<String> = ["--t-end", "2", "--s=-1.5", "--no-gate", "--mu", "-1"].iter().map(|s| s.to_string()).collect();
        assert_eq!(
            parse_overrides(&t).unwrap(),
            pairs(&[("t_end", "2"), ("s", "-1.5"), ("no_gate", "true"), ("mu", "-1")])
        );
        let e = parse_overrides(&["--dt".to_string()]).unwrap_err();
        assert!(matches!(e, CliError::MissingValue { .. }));
    }
}
