//! The subcommands, each a thin driver over one library operation.

mod bounds;
mod duhamel;
mod energy;
mod gwp;
mod identities;
mod illposed;
mod knapp;
mod resonance;
mod simulate;
mod strichartz;
mod xnorms;

use crate::config::{Globals, Kind, ParamSpec, Params};
use crate::error::CliError;
use crate::report::Outcome;
use kawahara::spectral::{japanese, Grid, SpectralField};

pub struct Command {
    pub name: &'static str,
    pub about: &'static str,
    pub params: &'static [ParamSpec],
    pub run: fn(&Params, &Globals) -> Result<Outcome, CliError>,
}

pub const COMMANDS: &[Command] = &[
    simulate::COMMAND,
    energy::COMMAND,
    gwp::COMMAND,
    bounds::COMMAND,
    resonance::COMMAND,
    knapp::COMMAND,
    strichartz::COMMAND,
    xnorms::COMMAND,
    duhamel::COMMAND,
    illposed::COMMAND,
    identities::COMMAND,
];

pub fn find(name: &str) -> Option<&'static Command> {
    COMMANDS.iter().find(|c| c.name == name)
}

const fn spec(key: &'static str, kind: Kind, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { key, kind, default, help }
}

fn invalid(key: &str, reason: impl Into<String>) -> CliError {
    CliError::Invalid { key: key.to_string(), reason: reason.into() }
}

/// Periodic grid from a length key and a mode-count key.
fn grid(p: &Params, length_key: &str, n_key: &str) -> Result<Grid, CliError> {
    let n = p.usize(n_key);
    if n < 8 || !n.is_power_of_two() {
        return Err(invalid(n_key, format!("n must be a power of two (at least 8), got {n}")));
    }
    let length = p.f64(length_key);
    if !(length.is_finite() && length > 0.0) {
        return Err(invalid(length_key, format!("box length must be positive, got {length}")));
    }
    Ok(Grid::new(length, n)?)
}

fn positive(p: &Params, key: &str) -> Result<f64, CliError> {
    let x = p.f64(key);
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(invalid(key, format!("must be positive, got {x}")))
    }
}

fn at_least_one(p: &Params, key: &str) -> Result<usize, CliError> {
    match p.usize(key) {
        0 => Err(invalid(key, "must be at least 1")),
        k => Ok(k),
    }
}

/// Random real field with coefficients `⟨ξ⟩^{−decay}`, scaled to the given peak value.
fn smooth_random(grid: Grid, seed: u64, peak: f64, decay: f64) -> SpectralField {
    let u = SpectralField::random_real(grid, seed, |xi| japanese(xi).powf(-decay));
    let max = u.to_physical().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if max == 0.0 {
        u
    } else {
        u.scale(peak / max)
    }
}

/// `max/min` of a list of positive quantities; `1` when all vanish.
fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 && min == 0.0 {
        1.0
    } else {
        max / min
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("serialisable report")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_defaults_parse() {
        for c in COMMANDS {
            let p = Params::defaults(c.params);
            assert_eq!(p.iter().count(), c.params.len(), "{}", c.name);
            let mut keys: Vec<&str> = c.params.iter().map(|s| s.key).collect();
            keys.sort();
            keys.dedup();
            assert_eq!(keys.len(), c.params.len(), "duplicate key in {}", c.name);
        }
        assert_eq!(COMMANDS.len(), 11);
    }

    #[test]
    fn spread_of_values() {
        assert_eq!(spread(&[2.0, 1.0, 1.5]), 2.0);
        assert_eq!(spread(&[0.0, 0.0]), 1.0);
    }
}
