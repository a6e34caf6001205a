use super::{dyadic_exponent, run_audit, BoundCheckReport, Sample};
use crate::error::{invalid, Result};
use crate::spectral::Dispersion;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// `Ω(ξ₁, ξ₂) = ω(ξ₁) + ω(ξ₂) − ω(ξ₁+ξ₂)`.
pub fn resonance(xi1: f64, xi2: f64, disp: &Dispersion) -> f64 {
    disp.resonance(xi1, xi2)
}

fn extremes(xi1: f64, xi2: f64) -> (f64, f64) {
    let a = [xi1.abs(), xi2.abs(), (xi1 + xi2).abs()];
    (a.iter().copied().fold(0.0, f64::max), a.iter().copied().fold(f64::INFINITY, f64::min))
}

/// `|Ω| / (|ξ|⁴_max |ξ|_min)`; requires `|ξ|_max ≥ 10` and `|ξ|_min > 0`.
pub fn resonance_ratio(xi1: f64, xi2: f64, disp: &Dispersion) -> Result<f64> {
    let (big, small) = extremes(xi1, xi2);
    if !(big >= 10.0) {
        return Err(invalid("sample", format!("max(|xi1|, |xi2|, |xi1+xi2|) = {big} is below 10")));
    }
    if small == 0.0 {
        return Err(invalid("sample", "a frequency vanishes"));
    }
    Ok(resonance(xi1, xi2, disp).abs() / (big.powi(4) * small))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceAuditConfig {
    pub samples: usize,
    pub seed: u64,
    /// Magnitudes are drawn log-uniformly from `[10^lo, 10^hi]`.
    pub log10_range: (f64, f64),
}

impl Default for ResonanceAuditConfig {
    fn default() -> Self {
        Self { samples: 1_000_000, seed: 0, log10_range: (-1.0, 4.0) }
    }
}

/// Equal-frequency points `(10·2^k, 10·2^k)`, where the ratio takes its
/// smallest value `15/8` for `μ = 0`.
const ANCHORS: [f64; 4] = [10.0, 20.0, 40.0, 80.0];

/// Samples the resonance ratio over admissible pairs with random signs and
/// log-uniform magnitudes, plus the equal-frequency anchor points.
pub fn resonance_size_audit(disp: &Dispersion, config: &ResonanceAuditConfig) -> Result<BoundCheckReport> {
    if disp.mu().abs() > 1.0 {
        return Err(invalid("mu", format!("the audit covers |mu| <= 1, got {}", disp.mu())));
    }
    let (lo, hi) = config.log10_range;
    if !(lo < hi && hi.is_finite() && lo.is_finite()) || 10f64.powf(hi) < 10.0 {
        return Err(invalid("log10_range", format!("empty or inadmissible range ({lo}, {hi})")));
    }
    if config.samples == 0 {
        return Err(invalid("samples", "need at least one sample"));
    }
    let disp = *disp;
    let label = |xi1: f64, xi2: f64| format!("kmax={}", dyadic_exponent(extremes(xi1, xi2).0));
    let mut report = run_audit("resonance |Omega|/(|xi|max^4 |xi|min)", config.seed, config.samples, |rng| {
        let mut draw = || {
            let m = 10f64.powf(rng.gen_range(lo..hi));
            if rng.gen_bool(0.5) {
                m
            } else {
                -m
            }
        };
        let (xi1, xi2) = (draw(), draw());
        let ratio = resonance_ratio(xi1, xi2, &disp).ok()?;
        Some(Sample { tuple: vec![xi1, xi2], ratio, label: label(xi1, xi2), extra: Vec::new() })
    });
    for &a in &ANCHORS {
        let ratio = resonance_ratio(a, a, &disp)?;
        report.samples_evaluated += 1;
        if ratio < report.min_ratio {
            report.min_ratio = ratio;
            report.argmin = vec![a, a];
        }
        if ratio > report.max_ratio {
            report.max_ratio = ratio;
            report.argmax = vec![a, a];
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_values() {
        let d0 = Dispersion::new(0.0).unwrap();
        assert_eq!(resonance(1.0, 1.0, &d0), 30.0);
        assert_eq!(resonance(10.0, 10.0, &d0), 3_000_000.0);
        assert_eq!(resonance_ratio(10.0, 10.0, &d0).unwrap(), 1.875);
        assert!(resonance_ratio(1.0, 2.0, &d0).is_err());
    }

    #[test]
    fn audit_brackets_the_anchor() {
        let d0 = Dispersion::new(0.0).unwrap();
        let r = resonance_size_audit(&d0, &ResonanceAuditConfig { samples: 20_000, ..Default::default() }).unwrap();
        assert_eq!(r.min_ratio, 1.875);
        assert!(r.max_ratio < 5.0 && r.max_ratio > 4.5, "{}", r.max_ratio);
        assert!(r.min_ratio > 0.0);
    }

    proptest! {
        #[test]
        fn antisymmetric_pair_and_symmetry(a in -1e3f64..1e3, b in -1e3f64..1e3, mu in -1.0f64..1.0) {
            let d = Dispersion::new(mu).unwrap();
            prop_assert_eq!(resonance(a, -a, &d), 0.0);
            let (x, y) = (resonance(a, b, &d), resonance(b, a, &d));
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}
