//! Line-oriented `key = value` configuration with one section per command.
//!
//! Resolution order: command defaults, then the config file (top-level keys
//! and the command's section), then command-line flags.

use crate::error::CliError;
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    Int,
    Bool,
    Floats,
    Ints,
    Choice(&'static [&'static str]),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(u64),
    Bool(bool),
    Floats(Vec<f64>),
    Ints(Vec<u64>),
    Choice(String),
}

impl Value {
    fn kind_name(kind: Kind) -> &'static str {
        match kind {
            Kind::Float => "a number",
            Kind::Int => "a non-negative integer",
            Kind::Bool => "true or false",
            Kind::Floats => "a comma-separated list of numbers",
            Kind::Ints => "a comma-separated list of non-negative integers",
            Kind::Choice(_) => "one of the listed choices",
        }
    }

    pub fn parse(key: &str, kind: Kind, text: &str) -> Result<Value, CliError> {
        let text = text.trim();
        let mismatch = || CliError::TypeMismatch { key: key.to_string(), expected: Self::kind_name(kind), got: text.to_string() };
        Ok(match kind {
            Kind::Float => Value::Float(parse_number(text).ok_or_else(mismatch)?),
            Kind::Int => Value::Int(text.parse().map_err(|_| mismatch())?),
            Kind::Bool => Value::Bool(match text {
                "true" => true,
                "false" => false,
                _ => return Err(mismatch()),
            }),
            Kind::Floats => Value::Floats(
                split_list(text).map(|t| parse_number(t).ok_or_else(mismatch)).collect::<Result<_, _>>()?,
            ),
            Kind::Ints => Value::Ints(split_list(text).map(|t| t.parse().map_err(|_| mismatch())).collect::<Result<_, _>>()?),
            Kind::Choice(options) => {
                if !options.contains(&text) {
                    return Err(CliError::TypeMismatch {
                        key: key.to_string(),
                        expected: "one of the listed choices",
                        got: format!("{text} (choices: {})", options.join(", ")),
                    });
                }
                Value::Choice(text.to_string())
            }
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Float(x) => serde_json::json!(x),
            Value::Int(x) => serde_json::json!(x),
            Value::Bool(x) => serde_json::json!(x),
            Value::Floats(x) => serde_json::json!(x),
            Value::Ints(x) => serde_json::json!(x),
            Value::Choice(x) => serde_json::json!(x),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |xs: Vec<String>| xs.join(",");
        match self {
            Value::Float(x) => write!(f, "{}", format_number(*x)),
            Value::Int(x) => write!(f, "{x}"),
            Value::Bool(x) => write!(f, "{x}"),
            Value::Floats(xs) => write!(f, "{}", join(xs.iter().map(|x| format_number(*x)).collect())),
            Value::Ints(xs) => write!(f, "{}", join(xs.iter().map(|x| x.to_string()).collect())),
            Value::Choice(x) => write!(f, "{x}"),
        }
    }
}

fn format_number(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:?}")
    }
}

fn split_list(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim).filter(|t| !t.is_empty())
}

/// Numbers as plain literals, fractions `a/b`, multiples of pi (`256pi`)
/// or `inf`.
pub fn parse_number(text: &str) -> Option<f64> {
    let text = text.trim();
    let value = if let Some(prefix) = text.strip_suffix("pi") {
        let factor = match prefix.trim() {
            "" => 1.0,
            "-" => -1.0,
            p => p.trim_end_matches('*').parse::<f64>().ok()?,
        };
        factor * std::f64::consts::PI
    } else if let Some((a, b)) = text.split_once('/') {
        a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?
    } else {
        match text {
            "inf" | "+inf" => f64::INFINITY,
            "-inf" => f64::NEG_INFINITY,
            _ => text.parse::<f64>().ok()?,
        }
    };
    (!value.is_nan()).then_some(value)
}

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub key: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub help: &'static str,
}

/// Resolved parameters of one command, in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    entries: Vec<(&'static str, Kind, Value)>,
}

impl Params {
    pub fn defaults(specs: &[ParamSpec]) -> Self {
        let entries = specs
            .iter()
            .map(|s| (s.key, s.kind, Value::parse(s.key, s.kind, s.default).expect("valid built-in default")))
            .collect();
        Params { entries }
    }

    pub fn set(&mut self, key: &str, text: &str) -> Result<(), CliError> {
        let entry = self
            .entries
            .iter_mut()
            .find(|(k, _, _)| *k == key)
            .ok_or_else(|| CliError::UnknownKey { key: key.to_string() })?;
        entry.2 = Value::parse(key, entry.1, text)?;
        Ok(())
    }

    fn get(&self, key: &str) -> &Value {
        &self.entries.iter().find(|(k, _, _)| *k == key).unwrap_or_else(|| panic!("undeclared parameter {key}")).2
    }

    pub fn f64(&self, key: &str) -> f64 {
        match self.get(key) {
            Value::Float(x) => *x,
            other => panic!("parameter {key} is not a number: {other:?}"),
        }
    }

    pub fn u64(&self, key: &str) -> u64 {
        match self.get(key) {
            Value::Int(x) => *x,
            other => panic!("parameter {key} is not an integer: {other:?}"),
        }
    }

    pub fn usize(&self, key: &str) -> usize {
        self.u64(key) as usize
    }

    pub fn bool(&self, key: &str) -> bool {
        match self.get(key) {
            Value::Bool(x) => *x,
            other => panic!("parameter {key} is not a flag: {other:?}"),
        }
    }

    pub fn floats(&self, key: &str) -> Vec<f64> {
        match self.get(key) {
            Value::Floats(x) => x.clone(),
            other => panic!("parameter {key} is not a list: {other:?}"),
        }
    }

    pub fn ints(&self, key: &str) -> Vec<u64> {
        match self.get(key) {
            Value::Ints(x) => x.clone(),
            other => panic!("parameter {key} is not a list: {other:?}"),
        }
    }

    pub fn choice(&self, key: &str) -> &str {
        match self.get(key) {
            Value::Choice(x) => x,
            other => panic!("parameter {key} is not a choice: {other:?}"),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &Value)> {
        self.entries.iter().map(|(k, _, v)| (*k, v))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(self.iter().map(|(k, v)| (k.to_string(), v.to_json())).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn parse(text: &str) -> Result<Format, CliError> {
        match text.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "both" => Ok(Format::Both),
            other => Err(CliError::TypeMismatch {
                key: "format".into(),
                expected: "one of the listed choices",
                got: format!("{other} (choices: csv, json, both)"),
            }),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Both => "both",
        }
    }

    pub fn csv(self) -> bool {
        self != Format::Json
    }

    pub fn json(self) -> bool {
        self != Format::Csv
    }
}

/// Settings shared by every command.
#[derive(Debug, Clone, PartialEq)]
pub struct Globals {
    pub seed: u64,
    pub format: Format,
    pub out: Option<String>,
    pub workers: Option<usize>,
    pub no_gate: bool,
}

impl Default for Globals {
    fn default() -> Self {
        Globals { seed: 0, format: Format::Both, out: None, workers: None, no_gate: false }
    }
}

impl Globals {
    pub fn set(&mut self, key: &str, text: &str) -> Result<(), CliError> {
        let mismatch = |expected| CliError::TypeMismatch { key: key.to_string(), expected, got: text.to_string() };
        match key {
            "seed" => self.seed = text.trim().parse().map_err(|_| mismatch("a non-negative integer"))?,
            "format" => self.format = Format::parse(text)?,
            "out" => self.out = Some(text.trim().to_string()),
            "workers" => {
                let k: usize = text.trim().parse().map_err(|_| mismatch("a positive integer"))?;
                if k == 0 {
                    return Err(mismatch("a positive integer"));
                }
                self.workers = Some(k);
            }
            "no_gate" => {
                self.no_gate = match text.trim() {
                    "true" => true,
                    "false" => false,
                    _ => return Err(mismatch("true or false")),
                }
            }
            _ => return Err(CliError::UnknownKey { key: key.to_string() }),
        }
        Ok(())
    }
}

/// Parsed config file: top-level assignments and per-section assignments,
/// each with its line number.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub top: Vec<(String, String)>,
    pub sections: Vec<(String, Vec<(String, String)>)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile, CliError> {
        let mut file = ConfigFile::default();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                file.sections.push((name.trim().to_string(), Vec::new()));
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Syntax { line: number + 1, text: raw.to_string() })?;
            let entry = (key.trim().to_string(), value.trim().to_string());
            if entry.0.is_empty() {
                return Err(CliError::Syntax { line: number + 1, text: raw.to_string() });
            }
            match file.sections.last_mut() {
                Some((_, entries)) => entries.push(entry),
                None => file.top.push(entry),
            }
        }
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<ConfigFile, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text)
    }
}

/// Renders a resolved configuration in the file format, so it can be fed
/// back through `--config`.
pub fn render(command: &str, globals: &Globals, params: &Params) -> String {
    let mut out = format!(
        "# kawahara {command}\nseed = {}\nformat = {}\nno_gate = {}\n\n[{command}]\n",
        globals.seed,
        globals.format.name(),
        globals.no_gate
    );
    for (k, v) in params.iter() {
        out.push_str(&format!("{k} = {v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(parse_number("256pi"), Some(256.0 * std::f64::consts::PI));
        assert_eq!(parse_number("-pi"), Some(-std::f64::consts::PI));
        assert_eq!(parse_number("2/3"), Some(2.0 / 3.0));
        assert_eq!(parse_number("-7/4"), Some(-1.75));
        assert_eq!(parse_number("1e-3"), Some(1e-3));
        assert_eq!(parse_number("inf"), Some(f64::INFINITY));
        assert_eq!(parse_number("nan"), None);
        assert_eq!(parse_number("abc"), None);
    }

    #[test]
    fn values_round_trip_through_text() {
        for (kind, text) in [
            (Kind::Float, "0.1"),
            (Kind::Floats, "6,8,inf"),
            (Kind::Ints, "4,5,6"),
            (Kind::Bool, "true"),
            (Kind::Choice(&["a", "b"]), "b"),
        ] {
            let v = Value::parse("k", kind, text).unwrap();
            assert_eq!(Value::parse("k", kind, &v.to_string()).unwrap(), v);
        }
        let pi = Value::parse("k", Kind::Float, "256pi").unwrap();
        assert_eq!(Value::parse("k", Kind::Float, &pi.to_string()).unwrap(), pi);
    }

    #[test]
    fn file_sections_and_errors() {
        let f = ConfigFile::parse("seed = 7 # comment\n\n[simulate]\nn = 512\n").unwrap();
        assert_eq!(f.top, vec![("seed".to_string(), "7".to_string())]);
        assert_eq!(f.sections[0].0, "simulate");
        assert!(matches!(ConfigFile::parse("[x]\nno equals\n"), Err(CliError::Syntax { line: 2, .. })));
    }

    #[test]
    fn unknown_keys_and_mismatches_name_the_key() {
        let mut p = Params::defaults(&[ParamSpec { key: "dt", kind: Kind::Float, default: "1e-3", help: "" }]);
        let e = p.set("dx", "1").unwrap_err();
        assert!(e.to_string().contains("dx"));
        let e = p.set("dt", "fast").unwrap_err();
        assert!(e.to_string().contains("dt"));
        p.set("dt", "5e-4").unwrap();
        assert_eq!(p.f64("dt"), 5e-4);
    }
}
