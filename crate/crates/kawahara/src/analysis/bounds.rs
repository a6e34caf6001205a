use super::{dyadic, dyadic_exponent, run_audit, BoundCheckReport, Sample};
use crate::error::{invalid, Result};
use crate::imethod::Symbols;
use crate::spectral::{Dispersion, IMultiplier};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundAuditConfig {
    pub threshold: f64,
    pub s: f64,
    pub mu: f64,
    /// Dyadic shells run up to `2^cap_exponent`.
    pub cap_exponent: u32,
    pub samples: usize,
    pub seed: u64,
    /// Finite-difference step relative to the shell scale.
    pub fd_step: f64,
    /// Pair sums below this fraction of `|ξ|_max` count as singular and are skipped.
    pub singular_band: f64,
}

impl Default for BoundAuditConfig {
    fn default() -> Self {
        Self { threshold: 16.0, s: -1.75, mu: 1.0, cap_exponent: 6, samples: 100_000, seed: 0, fd_step: 1e-3, singular_band: 1e-6 }
    }
}

impl BoundAuditConfig {
    fn symbols(&self) -> Result<Symbols> {
        if self.samples == 0 {
            return Err(invalid("samples", "need at least one sample"));
        }
        if !(self.fd_step > 0.0 && self.fd_step < 0.1) {
            return Err(invalid("fd_step", format!("must lie in (0, 0.1), got {}", self.fd_step)));
        }
        if self.cap_exponent == 0 || self.cap_exponent > 20 {
            return Err(invalid("cap_exponent", format!("must lie in 1..=20, got {}", self.cap_exponent)));
        }
        Symbols::new(IMultiplier::new(self.threshold, self.s)?, Dispersion::new(self.mu)?)
    }
}

fn signed(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    let m = rng.gen_range(lo..hi);
    if rng.gen_bool(0.5) {
        m
    } else {
        -m
    }
}

fn log_uniform(rng: &mut impl Rng, top: f64) -> f64 {
    let m = rng.gen_range(0.0..top.log2()).exp2();
    if rng.gen_bool(0.5) {
        m
    } else {
        -m
    }
}

/// Half the draws log-uniform on `[1, top)`, half uniform on the threshold
/// shell `[N, 2N)` where `m` has its kink and the bounds are tightest.
fn near_threshold(rng: &mut impl Rng, top: f64, threshold: f64) -> f64 {
    let hi = (2.0 * threshold).min(top);
    if threshold >= hi || rng.gen_bool(0.5) {
        return log_uniform(rng, top);
    }
    let m = rng.gen_range(threshold..hi);
    if rng.gen_bool(0.5) {
        m
    } else {
        -m
    }
}

/// Extension of `σ₃` off the hyperplane: the symmetric numerator when the
/// shells are comparable, the numerator with `ξ₃` replaced by `−(ξ₁+ξ₂)`
/// when `|ξ₁|` is much smaller.
fn sigma3_extension(symbols: &Symbols, x: [f64; 3], separated: bool) -> f64 {
    let m = symbols.multiplier();
    let g = |xi: f64| m.eval_sq(xi) * xi;
    let numerator = if separated { g(x[0]) + g(x[1]) - g(x[0] + x[1]) } else { g(x[0]) + g(x[1]) + g(x[2]) };
    let q = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    numerator / (7.5 * x[0] * x[1] * x[2] * (q - 1.2 * symbols.dispersion().mu()))
}

const BETAS: [[u32; 3]; 10] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [2, 0, 0],
    [0, 2, 0],
    [0, 0, 2],
    [1, 1, 0],
    [1, 0, 1],
    [0, 1, 1],
];

/// Central finite difference `∂^β f` at `x` with per-axis steps `h`.
fn difference(f: &impl Fn([f64; 3]) -> f64, x: [f64; 3], beta: [u32; 3], h: [f64; 3]) -> f64 {
    let shifted = |d: [f64; 3]| f([x[0] + d[0], x[1] + d[1], x[2] + d[2]]);
    let axes: Vec<usize> = (0..3).flat_map(|i| std::iter::repeat(i).take(beta[i] as usize)).collect();
    match axes.as_slice() {
        [] => f(x),
        [i] => {
            let mut d = [0.0; 3];
            d[*i] = h[*i];
            (shifted(d) - shifted(d.map(|v| -v))) / (2.0 * h[*i])
        }
        [i, j] if i == j => {
            let mut d = [0.0; 3];
            d[*i] = h[*i];
            (shifted(d) - 2.0 * f(x) + shifted(d.map(|v| -v))) / (h[*i] * h[*i])
        }
        [i, j] => {
            let corner = |si: f64, sj: f64| {
                let mut d = [0.0; 3];
                d[*i] = si * h[*i];
                d[*j] = sj * h[*j];
                shifted(d)
            };
            (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0)) / (4.0 * h[*i] * h[*j])
        }
        _ => unreachable!("total order at most two"),
    }
}

/// `|σ₃| / (m²(λ) η^{−4})` on the hyperplane with `λ ∼ |ξ₁|`, `η ∼ max(|ξ₂|, |ξ₃|)`.
pub fn sigma3_bound_ratio(symbols: &Symbols, x: [f64; 3]) -> f64 {
    let lambda = dyadic(x[0]);
    let eta = dyadic(x[1].abs().max(x[2].abs()));
    symbols.sigma3(x[0], x[1], x[2]).abs() / (symbols.multiplier().eval_sq(lambda) * eta.powi(-4))
}

/// Samples `|ξ₁| ∈ [λ, 2λ)`, `|ξ₂| ∈ [η, 2η)` over shells `λ ≤ η ≤ 2^cap`,
/// keeps `|ξ₃| ∼ η`, and compares finite differences of the extended `σ₃`
/// of total order at most two with `m²(λ) η^{−4} λ^{−β₁} η^{−β₂−β₃}`.
pub fn sigma3_bound_audit(config: &BoundAuditConfig) -> Result<BoundCheckReport> {
    let symbols = config.symbols()?;
    let cap = config.cap_exponent as i32;
    let fd = config.fd_step;
    Ok(run_audit("sigma3 derivative bound", config.seed, config.samples, |rng| {
        let a = rng.gen_range(0..=cap);
        let b = rng.gen_range(a..=cap);
        let (lambda, eta) = ((a as f64).exp2(), (b as f64).exp2());
        let x1 = signed(rng, lambda, 2.0 * lambda);
        let x2 = signed(rng, eta, 2.0 * eta);
        let x3 = -(x1 + x2);
        if (dyadic_exponent(x3) - b).abs() > 1 || x3 == 0.0 {
            return None;
        }
        let separated = b - a >= 3;
        let f = |y: [f64; 3]| sigma3_extension(&symbols, y, separated);
        let x = [x1, x2, x3];
        let h = [fd * lambda, fd * eta, fd * eta];
        let bound0 = symbols.multiplier().eval_sq(lambda) * eta.powi(-4);
        let mut worst = 0.0f64;
        let mut extra = Vec::with_capacity(BETAS.len());
        for beta in BETAS {
            let scale = lambda.powi(-(beta[0] as i32)) * eta.powi(-((beta[1] + beta[2]) as i32));
            let r = difference(&f, x, beta, h).abs() / (bound0 * scale);
            worst = worst.max(r);
            extra.push((format!("beta=({},{},{})", beta[0], beta[1], beta[2]), r));
        }
        Some(Sample { tuple: x.to_vec(), ratio: worst, label: format!("lambda=2^{a} eta=2^{b}"), extra })
    }))
}

fn pair_sums_clear(x: &[f64], band: f64) -> bool {
    let top = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            if (x[i] + x[j]).abs() < band * top {
                return false;
            }
        }
    }
    true
}

/// `m²(min(N_i, N_jk)) / ((N+N₁)²(N+N₂)²(N+N₃)³(N+N₄))` with `N₁ ≥ ⋯ ≥ N₄`.
fn sigma4_rhs(symbols: &Symbols, x: [f64; 4]) -> f64 {
    let n = symbols.threshold();
    let mut sizes = x.map(dyadic);
    let pairs = [x[0] + x[1], x[0] + x[2], x[0] + x[3]].map(dyadic);
    let smallest = sizes.iter().chain(&pairs).copied().fold(f64::INFINITY, f64::min);
    sizes.sort_by(|a, b| b.total_cmp(a));
    symbols.multiplier().eval_sq(smallest)
        / ((n + sizes[0]).powi(2) * (n + sizes[1]).powi(2) * (n + sizes[2]).powi(3) * (n + sizes[3]))
}

/// `(|M₄|/|h₄ − v₄|) / RHS` at one hyperplane tuple.
pub fn sigma4_bound_ratio(symbols: &Symbols, x: [f64; 4]) -> f64 {
    symbols.sigma4(&x).abs() / sigma4_rhs(symbols, x)
}

fn shell_label(x: &[f64]) -> String {
    let mut k: Vec<i32> = x.iter().map(|v| dyadic_exponent(*v)).collect();
    k.sort_by(|a, b| b.cmp(a));
    format!("k={k:?}")
}

/// Log-uniform hyperplane 4-tuples with `1 ≤ |ξ_i| < 2^{cap+1}`, away from
/// the pair-sum singular band.
pub fn sigma4_bound_audit(config: &BoundAuditConfig) -> Result<BoundCheckReport> {
    let symbols = config.symbols()?;
    let top = (config.cap_exponent as f64 + 1.0).exp2();
    Ok(run_audit("sigma4 pointwise bound", config.seed, config.samples, |rng| {
        let (a, b, c) = (log_uniform(rng, top), log_uniform(rng, top), log_uniform(rng, top));
        let x = [a, b, c, -(a + b + c)];
        if x[3].abs() < 1.0 || x[3].abs() >= top || !pair_sums_clear(&x, config.singular_band) {
            return None;
        }
        Some(Sample { tuple: x.to_vec(), ratio: sigma4_bound_ratio(&symbols, x), label: shell_label(&x), extra: Vec::new() })
    }))
}

/// Symmetrised right-hand side for `|M₅|`: the mean over the ten pair
/// choices of `m²(N_*) N₄₅ / ((N+A)²(N+B)²(N+C)³(N+D))`, where `A ≥ B ≥ C ≥ D`
/// are the sorted sizes of the three singles and the merged pair.
fn m5_rhs(symbols: &Symbols, x: [f64; 5]) -> f64 {
    let n = symbols.threshold();
    let mut total = 0.0;
    for (i, j) in (0..5).flat_map(|i| (i + 1..5).map(move |j| (i, j))) {
        let singles: Vec<f64> = (0..5).filter(|&l| l != i && l != j).map(|l| x[l]).collect();
        let merged = x[i] + x[j];
        let mut sizes = [dyadic(singles[0]), dyadic(singles[1]), dyadic(singles[2]), dyadic(merged)];
        let inner = [singles[0] + singles[1], singles[0] + singles[2], singles[1] + singles[2]].map(dyadic);
        let smallest = sizes.iter().chain(&inner).copied().fold(f64::INFINITY, f64::min);
        let n45 = sizes[3];
        sizes.sort_by(|a, b| b.total_cmp(a));
        total += symbols.multiplier().eval_sq(smallest) * n45
            / ((n + sizes[0]).powi(2) * (n + sizes[1]).powi(2) * (n + sizes[2]).powi(3) * (n + sizes[3]));
    }
    total / 10.0
}

pub fn m5_bound_ratio(symbols: &Symbols, x: [f64; 5]) -> f64 {
    symbols.m5(&x).norm() / m5_rhs(symbols, x)
}

/// Hyperplane 5-tuples with `1 ≤ |ξ_i| < 2^{cap+1}`, away from the singular
/// band of every `σ₄` argument grouping. The largest ratios sit on tuples
/// with three entries just above `N`, which log-uniform draws rarely reach,
/// so each free entry comes from [`near_threshold`].
pub fn m5_bound_audit(config: &BoundAuditConfig) -> Result<BoundCheckReport> {
    let symbols = config.symbols()?;
    let top = (config.cap_exponent as f64 + 1.0).exp2();
    Ok(run_audit("M5 pointwise bound", config.seed, config.samples, |rng| {
        let y: [f64; 4] = std::array::from_fn(|_| near_threshold(rng, top, config.threshold));
        let x = [y[0], y[1], y[2], y[3], -(y[0] + y[1] + y[2] + y[3])];
        if x[4].abs() < 1.0 || x[4].abs() >= top || !pair_sums_clear(&x, config.singular_band) {
            return None;
        }
        Some(Sample { tuple: x.to_vec(), ratio: m5_bound_ratio(&symbols, x), label: shell_label(&x), extra: Vec::new() })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symbols() -> Symbols {
        Symbols::new(IMultiplier::new(16.0, -1.75).unwrap(), Dispersion::new(1.0).unwrap()).unwrap()
    }

    #[test]
    fn low_shells_give_zero() {
        let s = symbols();
        assert_eq!(sigma4_bound_ratio(&s, [3.0, 2.5, -1.5, -4.0]), 0.0);
        assert_eq!(sigma3_bound_ratio(&s, [2.0, 3.0, -5.0]), 0.0);
        assert_eq!(m5_bound_ratio(&s, [1.0, 2.0, 1.5, -2.25, -2.25]), 0.0);
    }

    #[test]
    fn high_shell_example_is_finite() {
        let s = symbols();
        let r = sigma4_bound_ratio(&s, [70.0, -66.0, 4.5, -8.5]);
        assert!(r.is_finite() && r > 0.0);
    }

    #[test]
    fn finite_differences_of_a_polynomial() {
        let f = |x: [f64; 3]| x[0] * x[0] * x[1] + x[2].powi(3);
        let x = [1.0, 2.0, 3.0];
        let h = [1e-3; 3];
        assert!((difference(&f, x, [1, 0, 0], h) - 4.0).abs() < 1e-6);
        assert!((difference(&f, x, [1, 1, 0], h) - 2.0).abs() < 1e-6);
        assert!((difference(&f, x, [0, 0, 2], h) - 18.0).abs() < 1e-4);
    }

    #[test]
    fn extension_agrees_on_the_hyperplane() {
        let s = symbols();
        for x in [[20.0, 30.0, -50.0], [2.0, 40.0, -42.0]] {
            let v = s.sigma3(x[0], x[1], x[2]);
            for sep in [false, true] {
                assert!((sigma3_extension(&s, x, sep) - v).abs() <= 1e-12 * v.abs());
            }
        }
    }

    #[test]
    fn audits_are_reproducible() {
        let c = BoundAuditConfig { samples: 2000, ..Default::default() };
        assert_eq!(sigma4_bound_audit(&c).unwrap(), sigma4_bound_audit(&c).unwrap());
        let r = sigma3_bound_audit(&c).unwrap();
        assert!(r.max_ratio.is_finite());
        assert!(r.scales.iter().any(|row| row.label == "beta=(1,1,0)"));
    }
}
