//! Plain-text field format: a short `key = value` header followed by CSV rows `m,re,im`.

use super::field::SpectralField;
use super::grid::Grid;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::fmt::Write as _;

pub fn write_field(u: &SpectralField) -> String {
    let g = u.grid();
    let mut out = String::new();
    let _ = writeln!(out, "# kawahara spectral field");
    let _ = writeln!(out, "L = {:e}", g.length());
    let _ = writeln!(out, "n = {}", g.n());
    let _ = writeln!(out, "real = {}", u.is_real());
    out.push_str("m,re,im\n");
    let half = (g.n() / 2) as i64;
    for m in -half..half {
        let c = u.coeff(m);
        let _ = writeln!(out, "{m},{:e},{:e}", c.re, c.im);
    }
    out
}

pub fn read_field(text: &str) -> Result<SpectralField> {
    let mut length = None;
    let mut n = None;
    let mut real = None;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    for line in lines.by_ref() {
        if line.trim() == "m,re,im" {
            break;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("malformed header line `{line}`")))?;
        let v = v.trim();
        match k.trim() {
            "L" => length = Some(v.parse::<f64>().map_err(|e| Error::Parse(format!("L: {e}")))?),
            "n" => n = Some(v.parse::<usize>().map_err(|e| Error::Parse(format!("n: {e}")))?),
            "real" => real = Some(v.parse::<bool>().map_err(|e| Error::Parse(format!("real: {e}")))?),
            other => return Err(Error::Parse(format!("unknown header key `{other}`"))),
        }
    }
    let grid = Grid::new(
        length.ok_or_else(|| Error::Parse("missing L".into()))?,
        n.ok_or_else(|| Error::Parse("missing n".into()))?,
    )?;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.n()];
    let mut seen = 0usize;
    for line in lines {
        let mut parts = line.split(',');
        let mut next = |what: &str| {
            parts.next().ok_or_else(|| Error::Parse(format!("missing {what} in `{line}`")))
        };
        let m: i64 = next("m")?.trim().parse().map_err(|e| Error::Parse(format!("m: {e}")))?;
        let re: f64 = next("re")?.trim().parse().map_err(|e| Error::Parse(format!("re: {e}")))?;
        let im: f64 = next("im")?.trim().parse().map_err(|e| Error::Parse(format!("im: {e}")))?;
        let slot = grid.slot(m).ok_or_else(|| Error::Parse(format!("mode {m} off the lattice")))?;
        coeffs[slot] = Complex64::new(re, im);
        seen += 1;
    }
    if seen != grid.n() {
        return Err(Error::Parse(format!("expected {} rows, found {seen}", grid.n())));
    }
    SpectralField::from_coeffs(grid, coeffs, real.unwrap_or(false))
}
