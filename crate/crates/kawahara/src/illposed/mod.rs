//! Cubic Picard iterate `A₃(f)` for data concentrated on two thin bands
//! `|ξ ∓ N| < r`, `r = (N^{3/2} log N)^{−1}`, and the fit of its `H^s`
//! growth in `N`.
//!
//! The bands are far thinner than any lattice spacing, so everything is
//! computed by tensor Gauss–Legendre quadrature in band coordinates
//! `ξ_i = ±N + r u_i`, `u_i ∈ [−1, 1]`, with exact time integrals. Fourier
//! transforms are normalised so that `(fg)^ = f̂ * ĝ`; absolute constants
//! are dropped and only exponents in `N` are fitted.

use crate::error::{invalid, Error, Result};
use crate::spectral::Dispersion;
use crate::sum::{ordered_sum, sum};
use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::num::NonZeroUsize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IllposedConfig {
    pub s: f64,
    pub n_list: Vec<f64>,
    pub t_eval: f64,
    /// Gauss–Legendre nodes per panel and dimension.
    pub nodes: usize,
    pub mu: f64,
    pub slope_tolerance: f64,
    /// Largest relative change of `‖G₁‖` allowed when the nodes double.
    pub refinement_tolerance: f64,
}

impl Default for IllposedConfig {
    fn default() -> Self {
        Self {
            s: -2.5,
            n_list: (7..=11).map(|k| (k as f64).exp2()).collect(),
            t_eval: 0.5,
            nodes: 16,
            mu: 1.0,
            slope_tolerance: 0.3,
            refinement_tolerance: 0.02,
        }
    }
}

impl IllposedConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.s.is_finite() {
            return Err(invalid("s", "must be finite"));
        }
        if !(self.t_eval > 0.0 && self.t_eval <= 1.0) {
            return Err(invalid("t_eval", format!("must lie in (0, 1], got {}", self.t_eval)));
        }
        if !(4..=256).contains(&self.nodes) {
            return Err(invalid("nodes", format!("must lie in 4..=256, got {}", self.nodes)));
        }
        if !self.mu.is_finite() || self.mu.abs() > 1e3 {
            return Err(invalid("mu", format!("must be finite and moderate, got {}", self.mu)));
        }
        if let Some(n) = self.n_list.iter().find(|n| !(n.is_finite() && **n >= 8.0)) {
            return Err(invalid("n_list", format!("frequencies must be at least 8, got {n}")));
        }
        Ok(())
    }

    /// `−2s − 9/2`, the exponent of the lower bound for `‖A₃(f)‖_{H^s}`.
    pub fn expected_exponent(&self) -> f64 {
        -2.0 * self.s - 4.5
    }
}

pub fn band_halfwidth(n: f64) -> f64 {
    1.0 / (n.powf(1.5) * n.ln())
}

fn japanese_pow(xi: f64, p: f64) -> f64 {
    (1.0 + xi * xi).powf(0.5 * p)
}

/// `f̂ = r^{−1/2} N^{−s}` on `|ξ ∓ N| < r`, zero elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBoxDatum {
    pub n: f64,
    pub halfwidth: f64,
    pub amplitude: f64,
    pub s: f64,
    /// `‖f‖²_{H^s}` by quadrature over the two bands.
    pub norm_sq: f64,
}

impl FrequencyBoxDatum {
    pub fn coefficient(&self, xi: f64) -> f64 {
        if (xi.abs() - self.n).abs() < self.halfwidth {
            self.amplitude
        } else {
            0.0
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq.sqrt()
    }
}

struct Rule(Vec<(f64, f64)>);

impl Rule {
    fn new(nodes: usize) -> Self {
        let degree = NonZeroUsize::new(nodes.max(1)).expect("positive degree");
        Rule(GaussLegendre::new(degree).into_node_weight_pairs().into_vec())
    }

    fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.0.iter().map(move |&(x, w)| (mid + half * x, half * w))
    }
}

pub fn build_datum(config: &IllposedConfig, n: f64) -> Result<FrequencyBoxDatum> {
    config.validate()?;
    let r = band_halfwidth(n);
    if r < 1e3 * f64::EPSILON * n {
        return Err(Error::Unresolvable(format!("band half-width {r:e} is below double resolution at N = {n}")));
    }
    let amplitude = r.powf(-0.5) * n.powf(-config.s);
    let rule = Rule::new(config.nodes);
    let band = sum(rule.on(-1.0, 1.0).map(|(u, w)| w * r * japanese_pow(n + r * u, 2.0 * config.s)));
    let norm_sq = 2.0 * amplitude * amplitude * band;
    if !(0.9..=1.1).contains(&(norm_sq / 4.0)) {
        return Err(invalid("n_list", format!("datum norm² {norm_sq} at N = {n} is not within 10% of 4")));
    }
    Ok(FrequencyBoxDatum { n, halfwidth: r, amplitude, s: config.s, norm_sq })
}

/// `θ = ω(ξ₁)+ω(ξ₂)+ω(ξ₃)−ω(ξ₁+ξ₂+ξ₃)` in factored form.
pub fn theta_eval(xi1: f64, xi2: f64, xi3: f64, disp: &Dispersion) -> f64 {
    let total = xi1 + xi2 + xi3;
    theta_factored([xi1 + xi2, xi1 + xi3, xi2 + xi3], [xi1, xi2, xi3], total, disp.mu())
}

pub fn theta_direct(xi1: f64, xi2: f64, xi3: f64, disp: &Dispersion) -> f64 {
    disp.omega(xi1) + disp.omega(xi2) + disp.omega(xi3) - disp.omega(xi1 + xi2 + xi3)
}

fn theta_factored(pairs: [f64; 3], x: [f64; 3], total: f64, mu: f64) -> f64 {
    let q = 0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) + 0.5 * total * total - 0.6 * mu;
    5.0 * pairs[0] * pairs[1] * pairs[2] * q
}

/// Largest discrepancy between the factored and direct `θ` over random
/// triples in `[−10, 10]³`, scaled by `Σ|ω(ξ_i)| + |ω(Σξ_i)|`. Triples with
/// `|θ|` below `1e−3` of that scale are skipped as degenerate.
pub fn theta_identity_audit(disp: &Dispersion, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut kept = 0;
    while kept < samples {
        let x: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-10.0..10.0));
        let scale = x.iter().map(|v| disp.omega(*v).abs()).sum::<f64>() + disp.omega(x[0] + x[1] + x[2]).abs();
        let direct = theta_direct(x[0], x[1], x[2], disp);
        if direct.abs() < 1e-3 * scale {
            continue;
        }
        kept += 1;
        worst = worst.max((theta_eval(x[0], x[1], x[2], disp) - direct).abs() / scale);
    }
    worst
}

/// `∫₀ᵗ e^{iτa} dτ = (e^{ita} − 1)/(ia)`, written as `t e^{ita/2} sinc(ta/2)`.
fn phase_integral(a: f64, t: f64) -> Complex64 {
    let h = 0.5 * t * a;
    let sinc = if h.abs() < 1e-4 { 1.0 - h * h / 6.0 } else { h.sin() / h };
    Complex64::from_polar(t * sinc, h)
}

fn phase_bound(a: f64, t: f64) -> f64 {
    t.min(2.0 / a.abs())
}

/// Band geometry for one frequency; sums of band points are formed in
/// band coordinates so opposite-sign cancellations stay exact.
struct Bands {
    n: f64,
    r: f64,
    s: f64,
    t: f64,
    mu: f64,
}

struct Triple {
    x: [f64; 3],
    pairs: [f64; 3],
    total: f64,
}

impl Bands {
    fn new(config: &IllposedConfig, n: f64) -> Self {
        Bands { n, r: band_halfwidth(n), s: config.s, t: config.t_eval, mu: config.mu }
    }

    fn triple(&self, signs: [f64; 3], u: [f64; 3]) -> Triple {
        let (n, r) = (self.n, self.r);
        let pair = |i: usize, j: usize| (signs[i] + signs[j]) * n + r * (u[i] + u[j]);
        Triple {
            x: std::array::from_fn(|i| signs[i] * n + r * u[i]),
            pairs: [pair(0, 1), pair(0, 2), pair(1, 2)],
            total: signs.iter().sum::<f64>() * n + r * (u[0] + u[1] + u[2]),
        }
    }

    fn theta(&self, p: &Triple) -> f64 {
        theta_factored(p.pairs, p.x, p.total, self.mu)
    }

    /// `(ω(ξ₂)+ω(ξ₃)−ω(ξ₂+ξ₃))/(ξ₂+ξ₃)`.
    fn inner_denominator(&self, p: &Triple) -> f64 {
        let (a, b) = (p.x[1], p.x[2]);
        a * b * (5.0 * (a * a + a * b + b * b) - 3.0 * self.mu)
    }

    /// `ω(ξ₁)+ω(ξ₂+ξ₃)−ω(ξ₁+ξ₂+ξ₃)`.
    fn outer_resonance(&self, p: &Triple) -> f64 {
        let (a, b) = (p.x[0], p.pairs[2]);
        a * b * p.total * (5.0 * (a * a + a * b + b * b) - 3.0 * self.mu)
    }

    /// Band coordinate `w` below which `t|θ'|` drops under one.
    fn resonant_width(&self) -> f64 {
        1.0 / (self.t * 5.0 * self.n.powi(4) * self.r)
    }
}

/// Breakpoints of `[0, b]` refined geometrically towards zero down to `finest`.
fn graded(b: f64, finest: Option<f64>) -> Vec<f64> {
    let levels = finest.map_or(0, |g| ((b / g).log2().ceil().max(0.0) as usize + 2).min(60));
    let mut cuts = vec![0.0];
    cuts.extend((0..=levels).rev().map(|k| b * (-(k as f64)).exp2()));
    cuts
}

/// Breakpoints of `[lo, hi]`, split at zero and graded towards it.
fn cuts_around_zero(lo: f64, hi: f64, finest: Option<f64>) -> Vec<f64> {
    if lo < 0.0 && hi > 0.0 {
        let mut left: Vec<f64> = graded(-lo, finest).into_iter().rev().map(|c| -c).collect();
        left.pop();
        left.extend(graded(hi, finest));
        left
    } else {
        vec![lo, hi]
    }
}

/// Quadrature points `(u, weight)` on the slice `u₁ + u₂ + u₃ = v` of the
/// cube, parameterised by `w = u₂ + u₃` and `u₂`.
fn slice_points(v: f64, rule: &Rule, finest: Option<f64>) -> Vec<([f64; 3], f64)> {
    let (lo, hi) = ((v - 1.0).max(-2.0), (v + 1.0).min(2.0));
    let mut out = Vec::new();
    if hi <= lo {
        return out;
    }
    for panel in cuts_around_zero(lo, hi, finest).windows(2) {
        for (w, ww) in rule.on(panel[0], panel[1]) {
            for (u2, wu) in rule.on((w - 1.0).max(-1.0), (w + 1.0).min(1.0)) {
                out.push(([v - w, u2, w - u2], ww * wu));
            }
        }
    }
    out
}

const MIXED: [[f64; 3]; 3] = [[1.0, 1.0, -1.0], [1.0, -1.0, 1.0], [-1.0, 1.0, 1.0]];
const ALIGNED: [f64; 3] = [1.0, 1.0, 1.0];

/// `∫∫ E(θ)/D₂₃ du₂du₃` over the mixed-sign patterns landing near `+N`.
fn resonant_slice(bands: &Bands, v: f64, rule: &Rule) -> Complex64 {
    let points = slice_points(v, rule, None);
    let mut acc = crate::sum::ComplexNeumaier::new();
    for signs in MIXED {
        for (u, w) in &points {
            let p = bands.triple(signs, *u);
            acc.add(phase_integral(bands.theta(&p), bands.t) * (w / bands.inner_denominator(&p)));
        }
    }
    acc.value()
}

/// Majorant of the remaining terms at output `v`: `|E(θ')|` on the mixed
/// patterns near `+N`, or `|E(θ)| + |E(θ')|` on the aligned pattern near `+3N`.
fn remainder_slice(bands: &Bands, v: f64, rule: &Rule, aligned: bool) -> f64 {
    let points = slice_points(v, rule, Some(bands.resonant_width()));
    let patterns: &[[f64; 3]] = if aligned { std::slice::from_ref(&ALIGNED) } else { &MIXED };
    let mut terms = Vec::with_capacity(points.len() * patterns.len());
    for signs in patterns {
        for (u, w) in &points {
            let p = bands.triple(*signs, *u);
            let mut bound = phase_bound(bands.outer_resonance(&p), bands.t);
            if aligned {
                bound += phase_bound(bands.theta(&p), bands.t);
            }
            terms.push(w * bound / bands.inner_denominator(&p).abs());
        }
    }
    sum(terms)
}

/// `2 r² N^{−6s} ∫ ⟨ξ⟩^{2s} ξ² |I(v)|² dv` over `ξ = centre·N + r v`, `v ∈ [−3, 3]`.
fn cubic_norm_sq(bands: &Bands, centre: f64, rule: &Rule, slice_sq: impl Fn(f64) -> f64 + Sync) -> f64 {
    let nodes: Vec<(f64, f64)> = [(-3.0, -1.0), (-1.0, 1.0), (1.0, 3.0)]
        .iter()
        .flat_map(|&(a, b)| rule.on(a, b).collect::<Vec<_>>())
        .collect();
    let integral = ordered_sum(nodes.len(), |k| {
        let (v, w) = nodes[k];
        let xi = centre * bands.n + bands.r * v;
        w * japanese_pow(xi, 2.0 * bands.s) * xi * xi * slice_sq(v)
    });
    2.0 * bands.r * bands.r * bands.n.powf(-6.0 * bands.s) * integral
}

/// `‖A₂(f)(t)‖²_{H^s}`. Output panels whose phase `tΩ` turns more than
/// `nodes/4` times use the phase-averaged `|∫e^{itΩ}/Ω|² + |∫1/Ω|²`.
fn quadratic_norm_sq(bands: &Bands, rule: &Rule, nodes: usize) -> f64 {
    let (n, r, t, mu) = (bands.n, bands.r, bands.t, bands.mu);
    let resonance = |sa: f64, sb: f64, u1: f64, v: f64| {
        let a = sa * n + r * u1;
        let b = sb * n + r * (v - u1);
        let xi = (sa + sb) * n + r * v;
        a * b * xi * (5.0 * (a * a + a * b + b * b) - 3.0 * mu)
    };
    let mut total = 0.0;
    for (patterns, weight, cuts) in [
        (&[(1.0, -1.0), (-1.0, 1.0)][..], 1.0, cuts_around_zero(-2.0, 2.0, Some(bands.resonant_width()))),
        (&[(1.0, 1.0)][..], 2.0, (0..=16).map(|k| -2.0 + 0.25 * k as f64).collect()),
    ] {
        let centre = patterns[0].0 + patterns[0].1;
        let panels: Vec<[f64; 2]> = cuts.windows(2).map(|c| [c[0], c[1]]).collect();
        let integral = ordered_sum(panels.len(), |k| {
            let [va, vb] = panels[k];
            let (sa, sb) = patterns[0];
            let turns = t * (resonance(sa, sb, 0.0, vb) - resonance(sa, sb, 0.0, va)).abs() / std::f64::consts::TAU;
            let averaged = turns > nodes as f64 / 4.0;
            sum(rule.on(va, vb).map(|(v, wv)| {
                let range = ((v - 1.0).max(-1.0), (v + 1.0).min(1.0));
                let (mut exact, mut wave, mut flat) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0.0);
                for &(sa, sb) in patterns {
                    for (u1, wu) in rule.on(range.0, range.1) {
                        let omega = resonance(sa, sb, u1, v);
                        if averaged {
                            wave += Complex64::from_polar(wu / omega, t * omega);
                            flat += wu / omega;
                        } else {
                            exact += phase_integral(omega, t) * wu;
                        }
                    }
                }
                let modulus_sq = if averaged { wave.norm_sqr() + flat * flat } else { exact.norm_sqr() };
                let xi = centre * n + r * v;
                wv * japanese_pow(xi, 2.0 * bands.s) * xi * xi * modulus_sq
            }))
        });
        total += weight * r * n.powf(-4.0 * bands.s) * integral;
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub n: f64,
    pub halfwidth: f64,
    /// `‖A₁(f)(t)‖_{H^s} = ‖f‖_{H^s}`.
    pub a1_norm: f64,
    pub a2_norm: f64,
    /// `H^s` norm of the near-resonant part `G₁`, taken as the estimate of `‖A₃‖`.
    pub g1_norm: f64,
    /// Majorant of the norm of everything else in `A₃`, `G₂` included.
    pub remainder_norm: f64,
    pub a3_lower: f64,
    pub a3_upper: f64,
    pub g1_share: f64,
    pub remainder_share: f64,
    /// Relative change of `‖G₁‖` when the quadrature nodes double.
    pub refinement_change: f64,
}

/// Norms of `A₁`, `A₂` and `A₃` at `t = t_eval` for one frequency `N`.
pub fn iterate_norms(config: &IllposedConfig, n: f64) -> Result<GrowthRow> {
    let datum = build_datum(config, n)?;
    let bands = Bands::new(config, n);
    let rule = Rule::new(config.nodes);
    let fine = Rule::new(2 * config.nodes);
    let g1 = |rule: &Rule| cubic_norm_sq(&bands, 1.0, rule, |v| resonant_slice(&bands, v, rule).norm_sqr()).sqrt();
    let (coarse, g1_norm) = (g1(&rule), g1(&fine));
    let refinement_change = (g1_norm - coarse).abs() / g1_norm;
    if !(refinement_change <= config.refinement_tolerance) {
        return Err(Error::Quadrature(format!(
            "G1 norm changed by {refinement_change:.3e} on refinement at N = {n}"
        )));
    }
    let remainder_sq = cubic_norm_sq(&bands, 1.0, &rule, |v| remainder_slice(&bands, v, &rule, false).powi(2))
        + cubic_norm_sq(&bands, 3.0, &rule, |v| remainder_slice(&bands, v, &rule, true).powi(2));
    let remainder_norm = remainder_sq.sqrt();
    let a2_norm = quadratic_norm_sq(&bands, &fine, 2 * config.nodes).sqrt();
    Ok(GrowthRow {
        n,
        halfwidth: bands.r,
        a1_norm: datum.norm(),
        a2_norm,
        g1_norm,
        remainder_norm,
        a3_lower: (g1_norm - remainder_norm).max(0.0),
        a3_upper: g1_norm + remainder_norm,
        g1_share: g1_norm / (g1_norm + remainder_norm),
        remainder_share: remainder_norm / (g1_norm + remainder_norm),
        refinement_change,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub config: IllposedConfig,
    pub rows: Vec<GrowthRow>,
    pub expected_exponent: f64,
    /// Slope of `log(‖A₃‖ · log N)` against `log N`.
    pub slope_corrected: f64,
    /// Slope of `log ‖A₃‖` against `log N`.
    pub slope_raw: f64,
    pub pass: bool,
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn growth_fit(config: &IllposedConfig) -> Result<GrowthFit> {
    config.validate()?;
    if config.n_list.len() < 4 {
        return Err(invalid("n_list", format!("need at least 4 frequencies, got {}", config.n_list.len())));
    }
    let rows = config.n_list.iter().map(|&n| iterate_norms(config, n)).collect::<Result<Vec<_>>>()?;
    let logn: Vec<f64> = rows.iter().map(|r| r.n.ln()).collect();
    let raw: Vec<f64> = rows.iter().map(|r| r.g1_norm.ln()).collect();
    let corrected: Vec<f64> = raw.iter().zip(&logn).map(|(y, l)| y + l.ln()).collect();
    let slope_raw = least_squares_slope(&logn, &raw);
    let slope_corrected = least_squares_slope(&logn, &corrected);
    let expected_exponent = config.expected_exponent();
    Ok(GrowthFit {
        config: config.clone(),
        rows,
        expected_exponent,
        slope_corrected,
        slope_raw,
        pass: (slope_corrected - expected_exponent).abs() <= config.slope_tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_examples() {
        let flat = Dispersion::new(0.0).unwrap();
        assert_eq!(theta_direct(1.0, 1.0, 1.0, &flat), 240.0);
        assert_eq!(theta_eval(1.0, 1.0, 1.0, &flat), 240.0);
        let disp = Dispersion::new(1.0).unwrap();
        assert_eq!(theta_eval(2.5, -2.5, 7.0, &disp), 0.0);
        assert!(theta_identity_audit(&disp, 10_000, 3) < 1e-11);
    }

    #[test]
    fn datum_norm_is_near_four() {
        let config = IllposedConfig::default();
        for n in [128.0, 256.0, 2048.0] {
            let d = build_datum(&config, n).unwrap();
            assert!((d.norm_sq / 4.0 - 1.0).abs() < 0.01, "{}", d.norm_sq);
            assert_eq!(d.coefficient(n + 0.5 * d.halfwidth), d.amplitude);
            assert_eq!(d.coefficient(n + 2.0 * d.halfwidth), 0.0);
        }
        let flat = IllposedConfig { s: 0.0, ..config };
        let d = build_datum(&flat, 512.0).unwrap();
        assert!((d.norm_sq - 4.0).abs() < 1e-12);
    }

    #[test]
    fn phase_integral_limits() {
        assert!((phase_integral(0.0, 0.5) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        let a = 3.7;
        let direct = (Complex64::from_polar(1.0, 0.5 * a) - 1.0) / Complex64::new(0.0, a);
        assert!((phase_integral(a, 0.5) - direct).norm() < 1e-14);
        let small = 1e-7;
        let taylor = phase_integral(small, 1.0);
        assert!((taylor.re - 1.0).abs() < 1e-12 && (taylor.im - 0.5e-7).abs() < 1e-15);
    }

    #[test]
    fn slice_quadrature_matches_midpoint_rule() {
        let config = IllposedConfig::default();
        let bands = Bands::new(&config, 128.0);
        let v = 0.3;
        let quad = resonant_slice(&bands, v, &Rule::new(16));
        let m = 1500;
        let h = 2.0 / m as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                let (u2, u3) = (-1.0 + h * (i as f64 + 0.5), -1.0 + h * (j as f64 + 0.5));
                let u1 = v - u2 - u3;
                if u1.abs() <= 1.0 {
                    for signs in MIXED {
                        let p = bands.triple(signs, [u1, u2, u3]);
                        acc += phase_integral(bands.theta(&p), bands.t) * (h * h / bands.inner_denominator(&p));
                    }
                }
            }
        }
        assert!((quad - acc).norm() < 5e-3 * acc.norm(), "{quad} vs {acc}");
    }

    #[test]
    fn quadratic_norm_matches_dense_sampling() {
        let config = IllposedConfig { n_list: vec![16.0], ..Default::default() };
        let bands = Bands::new(&config, 16.0);
        let rule = Rule::new(24);
        let fast = quadratic_norm_sq(&bands, &rule, 24);
        let (n, r, t) = (bands.n, bands.r, bands.t);
        let m = 400_000;
        let h = 4.0 / m as f64;
        let mut dense = 0.0;
        for (patterns, weight) in [(&[(1.0, -1.0), (-1.0, 1.0)][..], 1.0), (&[(1.0, 1.0)][..], 2.0)] {
            for i in 0..m {
                let v = -2.0 + h * (i as f64 + 0.5);
                let mut amp = Complex64::new(0.0, 0.0);
                for &(sa, sb) in patterns {
                    for (u1, wu) in rule.on((v - 1.0).max(-1.0), (v + 1.0).min(1.0)) {
                        let a = sa * n + r * u1;
                        let b = sb * n + r * (v - u1);
                        let xi = (sa + sb) * n + r * v;
                        amp += phase_integral(a * b * xi * (5.0 * (a * a + a * b + b * b) - 3.0), t) * wu;
                    }
                }
                let xi = (patterns[0].0 + patterns[0].1) * n + r * v;
                dense += weight * h * r * n.powf(-4.0 * bands.s) * japanese_pow(xi, 2.0 * bands.s) * xi * xi * amp.norm_sqr();
            }
        }
        assert!((fast / dense - 1.0).abs() < 0.03, "{fast} vs {dense}");
    }

    #[test]
    fn remainder_is_small_and_shrinking() {
        let config = IllposedConfig::default();
        let a = iterate_norms(&config, 128.0).unwrap();
        let b = iterate_norms(&config, 512.0).unwrap();
        assert!(a.remainder_share < 0.05 && b.remainder_share < a.remainder_share);
        assert!((a.a1_norm - 2.0).abs() < 0.01);
        assert!(a.refinement_change < 1e-3);
    }

    #[test]
    fn rejects_short_sweeps() {
        let config = IllposedConfig { n_list: vec![128.0, 256.0, 512.0], ..Default::default() };
        assert!(growth_fit(&config).is_err());
        assert!(IllposedConfig { n_list: vec![4.0], ..Default::default() }.validate().is_err());
    }
}
