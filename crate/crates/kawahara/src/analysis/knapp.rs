use super::chunk_rng;
use crate::error::{invalid, Error, Result};
use crate::spectral::Dispersion;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Relative standard-error target of the Monte-Carlo estimates.
pub const MC_RELATIVE_ERROR: f64 = 0.02;
/// Budget doublings tried before an estimate is reported as unconverged.
pub const MC_MAX_DOUBLINGS: u32 = 3;

const CHUNK: usize = 1 << 14;

/// Indicator of `[ξ_lo, ξ_hi] × [m_lo, m_hi]` in frequency and modulation
/// `τ − ω(ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorBox {
    pub xi: (f64, f64),
    pub modulation: (f64, f64),
}

impl IndicatorBox {
    pub fn new(xi: (f64, f64), modulation: (f64, f64)) -> Result<Self> {
        if !(xi.0 < xi.1 && modulation.0 < modulation.1) || !(xi.0.is_finite() && xi.1.is_finite()) {
            return Err(invalid("box", format!("empty or unbounded box {xi:?} x {modulation:?}")));
        }
        Ok(Self { xi, modulation })
    }

    pub fn area(&self) -> f64 {
        (self.xi.1 - self.xi.0) * (self.modulation.1 - self.modulation.0)
    }

    /// `‖1_box‖_{L²}`.
    pub fn l2_norm(&self) -> f64 {
        self.area().sqrt()
    }

    #[inline]
    pub fn contains(&self, xi: f64, modulation: f64) -> bool {
        xi >= self.xi.0 && xi <= self.xi.1 && modulation >= self.modulation.0 && modulation <= self.modulation.1
    }

    fn check_resolution(&self, resolution: Option<f64>) -> Result<()> {
        match resolution {
            Some(h) if self.xi.1 - self.xi.0 < h => Err(Error::Unresolvable(format!(
                "box width {:e} is below the lattice spacing {h:e}",
                self.xi.1 - self.xi.0
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub hits: u64,
    pub converged: bool,
}

/// Hit count over `samples` draws, split into fixed chunks with their own
/// streams so the count is independent of the worker count.
fn count_hits<F>(samples: usize, seed: u64, hit: F) -> u64
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> bool + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let n = CHUNK.min(samples - c * CHUNK);
            (0..n).filter(|_| hit(&mut rng)).count() as u64
        })
        .collect::<Vec<u64>>()
        .into_iter()
        .sum()
}

fn estimate<F>(measure: f64, samples: usize, seed: u64, hit: F) -> JEstimate
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> bool + Sync,
{
    let mut budget = samples;
    let mut doublings = 0;
    loop {
        let hits = count_hits(budget, seed, &hit);
        let p = hits as f64 / budget as f64;
        let value = measure * p;
        let std_error = measure * (p * (1.0 - p) / budget as f64).sqrt();
        let converged = std_error <= MC_RELATIVE_ERROR * value || hits == 0 || hits == budget as u64;
        if converged || doublings == MC_MAX_DOUBLINGS {
            return JEstimate { value, std_error, samples: budget, hits, converged };
        }
        budget *= 2;
        doublings += 1;
    }
}

/// Monte-Carlo value of
/// `J(f, g, h) = ∫ f(ξ₁, μ₁) g(ξ₂, μ₂) h(ξ₁+ξ₂, μ₁+μ₂+Ω(ξ₁, ξ₂))` for box
/// indicators: uniform draws from `f × g`, scaled by its measure.
pub fn j_functional(
    boxes: [&IndicatorBox; 3],
    disp: &Dispersion,
    samples: usize,
    seed: u64,
    resolution: Option<f64>,
) -> Result<JEstimate> {
    if samples == 0 {
        return Err(invalid("samples", "need at least one sample"));
    }
    for b in boxes {
        b.check_resolution(resolution)?;
    }
    let [f, g, h] = boxes.map(|b| *b);
    let disp = *disp;
    Ok(estimate(f.area() * g.area(), samples, seed, move |rng| {
        let xi1 = rng.gen_range(f.xi.0..=f.xi.1);
        let m1 = rng.gen_range(f.modulation.0..=f.modulation.1);
        let xi2 = rng.gen_range(g.xi.0..=g.xi.1);
        let m2 = rng.gen_range(g.modulation.0..=g.modulation.1);
        h.contains(xi1 + xi2, m1 + m2 + disp.resonance(xi1, xi2))
    }))
}

/// Knapp example at shell `N₁` with modulation scales `L₁ ≤ L₂`.
///
/// The first two boxes have frequency half-width `inner·w`, `w = N₁^{−3/2}L₂^{1/2}`,
/// around `N₁` and modulation half-widths `L₁`, `L₂`. The third is centred at
/// `2N₁` with half-width `outer·w` and constrains `τ − μξ³/4 + ξ⁵/16` to
/// `outer·L₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnappConfig {
    pub n1: f64,
    pub l1: f64,
    pub l2: f64,
    pub mu: f64,
    pub inner: f64,
    pub outer: f64,
    pub samples: usize,
    pub seed: u64,
    /// Lattice spacing the boxes must resolve; `None` for the continuum.
    pub resolution: Option<f64>,
}

impl Default for KnappConfig {
    fn default() -> Self {
        Self {
            n1: 256.0,
            l1: 1.0,
            l2: 16.0,
            mu: 1.0,
            inner: 0.25,
            outer: 4.0,
            samples: 1_000_000,
            seed: 0,
            resolution: None,
        }
    }
}

impl KnappConfig {
    pub fn width(&self) -> f64 {
        self.n1.powf(-1.5) * self.l2.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n1 >= 2.0 && self.n1.is_finite()) {
            return Err(invalid("n1", format!("must be at least 2, got {}", self.n1)));
        }
        if !(self.l1 > 0.0 && self.l1 <= self.l2) {
            return Err(invalid("l1", "need 0 < L1 <= L2"));
        }
        if self.l2 > self.n1.powi(5) {
            return Err(invalid("l2", "need L2 <= N1^5"));
        }
        if !(self.inner > 0.0 && self.outer > 0.0) {
            return Err(invalid("inner", "box constants must be positive"));
        }
        if self.samples == 0 {
            return Err(invalid("samples", "need at least one sample"));
        }
        Dispersion::new(self.mu)?;
        if let Some(h) = self.resolution {
            if self.n1 < 1024.0 * h {
                return Err(invalid("n1", "need N1 >= 2^10 lattice spacings"));
            }
            if self.inner * self.width() * 2.0 < h {
                return Err(Error::Unresolvable(format!(
                    "box width {:e} is below the lattice spacing {h:e}",
                    2.0 * self.inner * self.width()
                )));
            }
        }
        Ok(())
    }

    /// Whether every pair drawn from the first two boxes lands in the third,
    /// so that `J` equals the product of the first two box measures.
    pub fn full_hit(&self) -> bool {
        let w = self.width();
        let s_max = 2.0 * self.n1 + 2.0 * self.inner * w;
        let d_max = 2.0 * self.inner * w;
        let drift = 0.75 * self.mu.abs() * s_max * d_max * d_max
            + 0.625 * s_max.powi(3) * d_max * d_max
            + 0.3125 * s_max * d_max.powi(4);
        self.inner <= self.outer && self.l1 + self.l2 + drift <= self.outer * self.l2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnappReport {
    pub config: KnappConfig,
    pub width: f64,
    pub j: JEstimate,
    /// Product of the first two box measures when every pair hits the third.
    pub j_closed_form: Option<f64>,
    pub norm_product: f64,
    /// `J / (N₁^{−3} L₁ L₂²)`.
    pub j_scaled: f64,
    /// `Π‖f_i‖ / (N₁^{−9/4} L₁^{1/2} L₂^{7/4})`.
    pub norm_scaled: f64,
    /// `J / (2^{j_min/2} 2^{j_med/4} 2^{−3k_max/4} Π‖f_i‖)` with `2^{k_max} = 2N₁`.
    pub ratio: f64,
}

pub fn knapp_sharpness(config: &KnappConfig) -> Result<KnappReport> {
    config.validate()?;
    let w = config.width();
    let (n1, l1, l2, mu) = (config.n1, config.l1, config.l2, config.mu);
    let (a, big) = (config.inner * w, config.outer * w);
    let box_area = |half_xi: f64, half_mod: f64| 4.0 * half_xi * half_mod;
    let areas = [box_area(a, l1), box_area(a, l2), box_area(big, config.outer * l2)];
    let window = config.outer * l2;
    // Third-box modulation μ₁ + μ₂ + ω(ξ₁) + ω(ξ₂) − (μs³/4 − s⁵/16) with
    // s = ξ₁+ξ₂, d = ξ₁−ξ₂, written to avoid cancellation between ξ⁵ terms.
    let j = estimate(areas[0] * areas[1], config.samples, config.seed, move |rng| {
        let e1 = rng.gen_range(-a..=a);
        let m1 = rng.gen_range(-l1..=l1);
        let e2 = rng.gen_range(-a..=a);
        let m2 = rng.gen_range(-l2..=l2);
        let s = 2.0 * n1 + e1 + e2;
        let d = e1 - e2;
        let d2 = d * d;
        let shift = 0.75 * mu * s * d2 - 0.625 * s * s * s * d2 - 0.3125 * s * d2 * d2;
        (e1 + e2).abs() <= big && (m1 + m2 + shift).abs() <= window
    });
    let norm_product = (areas[0] * areas[1] * areas[2]).sqrt();
    let j_closed_form = config.full_hit().then_some(areas[0] * areas[1]);
    let kmax = (2.0 * n1).log2();
    let target = l1.sqrt() * l2.powf(0.25) * (-0.75 * kmax).exp2() * norm_product;
    Ok(KnappReport {
        config: config.clone(),
        width: w,
        j_scaled: j.value / (n1.powi(-3) * l1 * l2 * l2),
        norm_scaled: norm_product / (n1.powf(-2.25) * l1.sqrt() * l2.powf(1.75)),
        ratio: j.value / target,
        j,
        j_closed_form,
        norm_product,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_supports_vanish() {
        let d = Dispersion::default();
        let f = IndicatorBox::new((1.0, 2.0), (-1.0, 1.0)).unwrap();
        let h = IndicatorBox::new((100.0, 200.0), (-1.0, 1.0)).unwrap();
        let e = j_functional([&f, &f, &h], &d, 10_000, 1, None).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(e.converged);
    }

    #[test]
    fn full_hit_matches_closed_form() {
        let c = KnappConfig { samples: 20_000, ..KnappConfig::default() };
        assert!(c.full_hit());
        let r = knapp_sharpness(&c).unwrap();
        let exact = r.j_closed_form.unwrap();
        assert_eq!(r.j.value, exact);
        // 16 c² N₁⁻³ L₁ L₂² with c = 1/4.
        assert!((exact - 256f64.powi(-3) * 16.0 * 16.0).abs() < 1e-12 * exact);
        assert!((r.norm_scaled - 8.0 * 0.25 * 4.0).abs() < 1e-9);
    }

    #[test]
    fn partial_configuration_converges() {
        let c = KnappConfig { inner: 0.5, outer: 2.0, samples: 100_000, ..KnappConfig::default() };
        assert!(!c.full_hit());
        let r = knapp_sharpness(&c).unwrap();
        assert!(r.j.converged);
        assert!(r.j.value > 0.0 && r.j.value < 4.0 * 0.25 * r.width.powi(2) * 4.0 * c.l1 * c.l2);
    }

    #[test]
    fn unresolvable_width_is_reported() {
        let c = KnappConfig { n1: 1024.0, resolution: Some(1.0), ..KnappConfig::default() };
        assert!(matches!(knapp_sharpness(&c), Err(Error::Unresolvable(_))));
    }
}
