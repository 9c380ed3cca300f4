//! Synthetic scenario generators with known generative class probabilities,
//! and Monte Carlo estimation of the Bayes rate.
//!
//! Both scenarios place their signal in pairs of coordinates: crossing
//! Gaussian clusters ("xor") or an inner disk against a surrounding ring
//! ("double ring"). When more than two informative coordinates are requested
//! the pattern is replicated pairwise with independent draws; an odd leftover
//! coordinate carries no signal. All remaining coordinates are standard
//! Gaussian noise.

use alloc::string::ToString;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::metric::Dataset;

/// Cluster centers sit at `(±XOR_CENTER, ±XOR_CENTER)` with unit isotropic
/// noise (times `noise_scale`).
pub const XOR_CENTER: f64 = 1.5;
/// Inner-disk scale of the double ring.
pub const RING_SIGMA_IN: f64 = 0.85;
/// Ring radius.
pub const RING_RADIUS: f64 = 2.0;
/// Radial spread of the ring class.
pub const RING_SIGMA: f64 = 0.65;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Xor,
    DoubleRing,
}

/// Parameters of one synthetic dataset draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: ScenarioKind,
    pub n: usize,
    pub p: usize,
    /// Number of signal-bearing coordinates (paired; an odd one is noise).
    pub informative: usize,
    /// Scales the generative noise (cluster and radial spreads).
    pub noise_scale: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(name: ScenarioKind, n: usize, p: usize, informative: usize, seed: u64) -> Self {
        ScenarioSpec {
            name,
            n,
            p,
            informative,
            noise_scale: 1.0,
            seed,
        }
    }

    /// Convention used for the benchmark tables: 10% of the coordinates are
    /// informative.
    pub fn table_default(name: ScenarioKind, n: usize, p: usize, seed: u64) -> Self {
        let informative = ((math::round(0.10 * p as f64) as usize).max(2)).min(p);
        Self::new(name, n, p, informative, seed)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ScenarioSpec {
            seed,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::InvalidArgument("need n >= 4".to_string()));
        }
        if self.informative < 2 {
            return Err(Error::InvalidArgument(
                "need at least 2 informative coordinates".to_string(),
            ));
        }
        if self.informative > self.p {
            return Err(Error::InvalidArgument(
                "informative exceeds total dimensions".to_string(),
            ));
        }
        if !(self.noise_scale > 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::InvalidArgument("noise_scale must be > 0".to_string()));
        }
        Ok(())
    }
}

/// Exact generative class probabilities plus the matching sampler.
pub trait ClassOracle {
    /// Coordinates that carry signal (leading positions of a row).
    fn signal_dims(&self) -> usize;
    /// `P(y = +1 | x)`, using only the signal coordinates of `x`.
    fn prob_pos(&self, x: &[f64]) -> f64;
    /// Draws a label and the signal coordinates from the generative law.
    fn sample_signal(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, i8);
}

#[inline]
fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + math::ln(math::exp(a - m) + math::exp(b - m))
}

fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Four Gaussian clusters on the corners of a square; one diagonal is the
/// positive class.
#[derive(Clone, Debug)]
pub struct XorOracle {
    pairs: usize,
    center: f64,
    sigma: f64,
}

impl ClassOracle for XorOracle {
    fn signal_dims(&self) -> usize {
        2 * self.pairs
    }

    fn prob_pos(&self, x: &[f64]) -> f64 {
        let c = self.center;
        let s2 = 2.0 * self.sigma * self.sigma;
        let g = |a: f64, b: f64, ca: f64, cb: f64| {
            -((a - ca) * (a - ca) + (b - cb) * (b - cb)) / s2
        };
        let mut lp = 0.0;
        let mut ln = 0.0;
        for t in 0..self.pairs {
            let a = x[2 * t];
            let b = x[2 * t + 1];
            lp += log_sum_exp(g(a, b, c, c), g(a, b, -c, -c));
            ln += log_sum_exp(g(a, b, c, -c), g(a, b, -c, c));
        }
        1.0 / (1.0 + math::exp(ln - lp))
    }

    fn sample_signal(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, i8) {
        let y: i8 = if rng.gen_bool(0.5) { 1 } else { -1 };
        let mut coords = Vec::with_capacity(2 * self.pairs);
        for _ in 0..self.pairs {
            let s: f64 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let (ca, cb) = if y == 1 {
                (s * self.center, s * self.center)
            } else {
                (s * self.center, -s * self.center)
            };
            coords.push(ca + self.sigma * std_normal(rng));
            coords.push(cb + self.sigma * std_normal(rng));
        }
        (coords, y)
    }
}

/// Inner Gaussian disk (positive) against a ring with radial Gaussian spread
/// (negative).
#[derive(Clone, Debug)]
pub struct DoubleRingOracle {
    pairs: usize,
    sigma_in: f64,
    radius: f64,
    sigma_ring: f64,
}

impl DoubleRingOracle {
    fn log_density_pos(&self, r2: f64) -> f64 {
        let s2 = self.sigma_in * self.sigma_in;
        -r2 / (2.0 * s2) - math::ln(2.0 * core::f64::consts::PI * s2)
    }

    fn log_density_neg(&self, r: f64) -> f64 {
        let r = r.max(1e-300);
        let sr = self.sigma_ring;
        let a = -((r - self.radius) * (r - self.radius)) / (2.0 * sr * sr);
        let b = -((r + self.radius) * (r + self.radius)) / (2.0 * sr * sr);
        log_sum_exp(a, b)
            - math::ln(sr * math::sqrt(2.0 * core::f64::consts::PI))
            - math::ln(2.0 * core::f64::consts::PI * r)
    }
}

impl ClassOracle for DoubleRingOracle {
    fn signal_dims(&self) -> usize {
        2 * self.pairs
    }

    fn prob_pos(&self, x: &[f64]) -> f64 {
        let mut lp = 0.0;
        let mut ln = 0.0;
        for t in 0..self.pairs {
            let a = x[2 * t];
            let b = x[2 * t + 1];
            let r2 = a * a + b * b;
            lp += self.log_density_pos(r2);
            ln += self.log_density_neg(math::sqrt(r2));
        }
        1.0 / (1.0 + math::exp(ln - lp))
    }

    fn sample_signal(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, i8) {
        let y: i8 = if rng.gen_bool(0.5) { 1 } else { -1 };
        let mut coords = Vec::with_capacity(2 * self.pairs);
        for _ in 0..self.pairs {
            if y == 1 {
                coords.push(self.sigma_in * std_normal(rng));
                coords.push(self.sigma_in * std_normal(rng));
            } else {
                let r = math::abs(self.radius + self.sigma_ring * std_normal(rng));
                let theta = rng.gen_range(0.0..core::f64::consts::TAU);
                coords.push(r * math::cos(theta));
                coords.push(r * math::sin(theta));
            }
        }
        (coords, y)
    }
}

fn generate<O: ClassOracle>(spec: &ScenarioSpec, oracle: O) -> Result<(Dataset, O)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let signal = oracle.signal_dims();
    let mut x = Vec::with_capacity(spec.n * spec.p);
    let mut y = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let (coords, label) = oracle.sample_signal(&mut rng);
        x.extend_from_slice(&coords);
        for _ in signal..spec.p {
            x.push(std_normal(&mut rng));
        }
        y.push(label);
    }
    let ds = Dataset::new(x, spec.p, y, None)?;
    Ok((ds, oracle))
}

/// Crossing-clusters scenario. Returns the dataset and the exact generative
/// oracle for Bayes-rate estimation.
pub fn gen_xor(spec: &ScenarioSpec) -> Result<(Dataset, XorOracle)> {
    spec.validate()?;
    generate(
        spec,
        XorOracle {
            pairs: spec.informative / 2,
            center: XOR_CENTER,
            sigma: spec.noise_scale,
        },
    )
}

/// Disk-versus-ring scenario with overlapping classes.
pub fn gen_double_ring(spec: &ScenarioSpec) -> Result<(Dataset, DoubleRingOracle)> {
    spec.validate()?;
    generate(
        spec,
        DoubleRingOracle {
            pairs: spec.informative / 2,
            sigma_in: RING_SIGMA_IN * spec.noise_scale,
            radius: RING_RADIUS,
            sigma_ring: RING_SIGMA * spec.noise_scale,
        },
    )
}

/// Monte Carlo Bayes-rate estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BayesEstimate {
    pub rate: f64,
    pub std_error: f64,
}

/// Estimates `E[min(P(+1|x), P(-1|x))]` by sampling the generative law.
pub fn bayes_rate<O: ClassOracle>(
    oracle: &O,
    spec: &ScenarioSpec,
    mc_samples: usize,
) -> Result<BayesEstimate> {
    if mc_samples < 10_000 {
        return Err(Error::InvalidArgument(
            "need at least 10^4 Monte Carlo samples".to_string(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(7);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..mc_samples {
        let (coords, _) = oracle.sample_signal(&mut rng);
        let p = oracle.prob_pos(&coords);
        let v = p.min(1.0 - p);
        sum += v;
        sum_sq += v * v;
    }
    let n = mc_samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok(BayesEstimate {
        rate: mean,
        std_error: math::sqrt(var / n),
    })
}
