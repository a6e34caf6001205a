//! Gates, command outcomes and atomic artifact output.

use crate::error::CliError;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

/// One quantitative pass/fail check of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub relation: &'static str,
    pub pass: bool,
}

impl Gate {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Gate {
        Gate { name: name.into(), value, limit, relation: "<=", pass: value <= limit }
    }

    pub fn below(name: impl Into<String>, value: f64, limit: f64) -> Gate {
        Gate { name: name.into(), value, limit, relation: "<", pass: value < limit }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Gate {
        Gate { name: name.into(), value, limit, relation: ">=", pass: value >= limit }
    }

    /// A yes/no condition, recorded as value 1 or 0 against limit 1.
    pub fn holds(name: impl Into<String>, ok: bool) -> Gate {
        Gate { name: name.into(), value: if ok { 1.0 } else { 0.0 }, limit: 1.0, relation: "==", pass: ok }
    }
}

/// A CSV table; `csv` includes the header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub csv: String,
}

impl Table {
    pub fn new(name: &str, header: &str, rows: impl IntoIterator<Item = String>) -> Table {
        let mut csv = format!("{header}\n");
        for row in rows {
            csv.push_str(&row);
            csv.push('\n');
        }
        Table { name: name.to_string(), csv }
    }
}

/// What a command computed: a JSON result, its gates and its tables.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub result: serde_json::Value,
    pub gates: Vec<Gate>,
    pub tables: Vec<Table>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.gates.iter().all(|g| g.pass)
    }
}

/// Number formatting shared by every CSV artifact.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn gates_table(gates: &[Gate]) -> Table {
    Table::new(
        "gates",
        "gate,value,relation,limit,pass",
        gates.iter().map(|g| format!("{},{},{},{},{}", g.name, num(g.value), g.relation, num(g.limit), g.pass)),
    )
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial artifact.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io { path: path.display().to_string(), message: e.to_string() };
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp: PathBuf = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_relations() {
        assert!(Gate::at_most("a", 1.0, 1.0).pass);
        assert!(!Gate::below("a", 1.0, 1.0).pass);
        assert!(Gate::at_least("a", 2.0, 1.0).pass);
        assert!(!Gate::at_most("a", f64::NAN, 1.0).pass);
        assert!(!Gate::holds("a", false).pass);
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("x.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
