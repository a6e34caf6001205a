//! Numerical audits of the dispersive estimates: resonance size, the
//! trilinear functional `J` and its Knapp example, linear estimates,
//! space-time norms, the Duhamel bilinear operator and pointwise bounds on
//! the I-method multipliers.

mod bounds;
mod knapp;
mod linear;
mod resonance;
mod spacetime;

pub use bounds::{
    m5_bound_audit, m5_bound_ratio, sigma3_bound_audit, sigma3_bound_ratio, sigma4_bound_audit, sigma4_bound_ratio,
    BoundAuditConfig,
};
pub use knapp::{
    j_functional, knapp_sharpness, IndicatorBox, JEstimate, KnappConfig, KnappReport, MC_MAX_DOUBLINGS,
    MC_RELATIVE_ERROR,
};
pub use linear::{linear_estimate_audit, EstimateKind, EstimateTable, LinearAuditConfig, LinearAuditReport};
pub use resonance::{resonance, resonance_ratio, resonance_size_audit, ResonanceAuditConfig};
pub use spacetime::{
    duhamel_bilinear, duhamel_step_sensitivity, fbar_norm, psi, shell_energy_fractions, xk_norm, xsb_norm,
    SpaceTimeField,
};

use crate::spectral::field_seed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Samples per deterministic random stream.
pub const CHUNK: usize = 4096;

pub(crate) fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(field_seed(seed, chunk as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub label: String,
    pub count: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Extremes of a sampled ratio `LHS/RHS`, overall and per dyadic scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckReport {
    pub bound_name: String,
    pub seed: u64,
    pub samples_evaluated: usize,
    pub samples_rejected: usize,
    pub min_ratio: f64,
    pub argmin: Vec<f64>,
    pub max_ratio: f64,
    pub argmax: Vec<f64>,
    pub scales: Vec<ScaleRow>,
}

impl BoundCheckReport {
    /// Aligned-text rendering.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{}: seed {} samples {} rejected {}\n  min {:.6e} at {:?}\n  max {:.6e} at {:?}\n",
            self.bound_name, self.seed, self.samples_evaluated, self.samples_rejected, self.min_ratio, self.argmin,
            self.max_ratio, self.argmax
        );
        for row in &self.scales {
            out.push_str(&format!(
                "  {:<28} {:>9} {:>14.6e} {:>14.6e}\n",
                row.label, row.count, row.min_ratio, row.max_ratio
            ));
        }
        out
    }
}

/// One accepted sample: the tuple, its ratio and its scale label.
pub(crate) struct Sample {
    pub tuple: Vec<f64>,
    pub ratio: f64,
    pub label: String,
    /// Further labelled ratios recorded in the scale table only.
    pub extra: Vec<(String, f64)>,
}

#[derive(Default)]
struct Extremes {
    count: usize,
    min: Option<(f64, Vec<f64>)>,
    max: Option<(f64, Vec<f64>)>,
}

impl Extremes {
    fn push(&mut self, ratio: f64, tuple: &[f64]) {
        self.count += 1;
        if self.min.as_ref().map_or(true, |(m, _)| ratio < *m) {
            self.min = Some((ratio, tuple.to_vec()));
        }
        if self.max.as_ref().map_or(true, |(m, _)| ratio > *m) {
            self.max = Some((ratio, tuple.to_vec()));
        }
    }

    fn merge(&mut self, other: Extremes) {
        self.count += other.count;
        if let Some((r, t)) = other.min {
            if self.min.as_ref().map_or(true, |(m, _)| r < *m) {
                self.min = Some((r, t));
            }
        }
        if let Some((r, t)) = other.max {
            if self.max.as_ref().map_or(true, |(m, _)| r > *m) {
                self.max = Some((r, t));
            }
        }
    }
}

#[derive(Default)]
struct ChunkResult {
    rejected: usize,
    overall: Extremes,
    scales: BTreeMap<String, Extremes>,
}

/// Draws `samples` accepted samples in fixed-size chunks with independent
/// streams and merges the chunks in order, so reports do not depend on the
/// number of workers. `draw` returns `None` for rejected candidates; after
/// `100·CHUNK` consecutive rejections a chunk gives up.
pub(crate) fn run_audit<F>(name: &str, seed: u64, samples: usize, draw: F) -> BoundCheckReport
where
    F: Fn(&mut ChaCha8Rng) -> Option<Sample> + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<ChunkResult> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let want = CHUNK.min(samples - c * CHUNK);
            let mut out = ChunkResult::default();
            let mut streak = 0usize;
            while out.overall.count < want && streak < 100 * CHUNK {
                match draw(&mut rng) {
                    Some(s) => {
                        streak = 0;
                        out.overall.push(s.ratio, &s.tuple);
                        out.scales.entry(s.label).or_default().push(s.ratio, &s.tuple);
                        for (label, ratio) in s.extra {
                            out.scales.entry(label).or_default().push(ratio, &s.tuple);
                        }
                    }
                    None => {
                        streak += 1;
                        out.rejected += 1;
                    }
                }
            }
            out
        })
        .collect();
    let mut total = ChunkResult::default();
    for p in parts {
        total.rejected += p.rejected;
        total.overall.merge(p.overall);
        for (k, v) in p.scales {
            total.scales.entry(k).or_default().merge(v);
        }
    }
    let (min_ratio, argmin) = total.overall.min.unwrap_or((f64::NAN, Vec::new()));
    let (max_ratio, argmax) = total.overall.max.unwrap_or((f64::NAN, Vec::new()));
    BoundCheckReport {
        bound_name: name.to_string(),
        seed,
        samples_evaluated: total.overall.count,
        samples_rejected: total.rejected,
        min_ratio,
        argmin,
        max_ratio,
        argmax,
        scales: total
            .scales
            .into_iter()
            .map(|(label, e)| ScaleRow {
                label,
                count: e.count,
                min_ratio: e.min.map_or(f64::NAN, |m| m.0),
                max_ratio: e.max.map_or(f64::NAN, |m| m.0),
            })
            .collect(),
    }
}

/// `⌊log₂|x|⌋`, the dyadic exponent with `2^k ≤ |x| < 2^{k+1}`.
pub(crate) fn dyadic_exponent(x: f64) -> i32 {
    x.abs().log2().floor() as i32
}

/// `2^{⌊log₂|x|⌋}`.
pub(crate) fn dyadic(x: f64) -> f64 {
    (dyadic_exponent(x) as f64).exp2()
}
