//! Laplace noise, smooth sensitivity bounds and privacy-budget arithmetic.
//!
//! Logarithms are base 2.

use rand_chacha::ChaCha8Rng;
use rand_core::RngCore;

use crate::error::{check_positive, check_unit_open, param, Result};
use crate::hash::rng_from_seed;
use crate::math::log2_at_least_one;

/// Seeded Laplace sampler using the inverse CDF.
#[derive(Clone, Debug)]
pub struct LaplaceSampler {
    rng: ChaCha8Rng,
}

impl LaplaceSampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: rng_from_seed(seed) }
    }

    /// Uniform on the open interval `(-1/2, 1/2)`.
    fn centered_uniform(&mut self) -> f64 {
        let bits = self.rng.next_u64() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64) - 0.5
    }

    /// One draw from `Lap(scale)`.
    pub fn sample(&mut self, scale: f64) -> Result<f64> {
        check_positive("scale", scale)?;
        Ok(self.draw(scale))
    }

    /// A draw from `Lap(scale)`; zero when `scale` is zero.
    pub(crate) fn draw(&mut self, scale: f64) -> f64 {
        let u = self.centered_uniform();
        if scale == 0.0 {
            return 0.0;
        }
        let mag = -scale * libm::log1p(-2.0 * u.abs());
        if u < 0.0 {
            -mag
        } else {
            mag
        }
    }
}

/// Parameters of the smooth upper bounds on local sensitivity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothBoundParams {
    pub epsilon: f64,
    pub alpha: f64,
    /// Upper bound on the stream length.
    pub stream_bound: u64,
    /// Scale applied to the accuracy constants; 1 is the nominal value.
    pub kappa: f64,
}

impl SmoothBoundParams {
    pub fn new(epsilon: f64, alpha: f64, stream_bound: u64, kappa: f64) -> Result<Self> {
        check_positive("epsilon", epsilon)?;
        check_unit_open("alpha", alpha)?;
        check_positive("kappa", kappa)?;
        if stream_bound == 0 {
            return Err(param("stream_bound", "must be at least 1"));
        }
        Ok(Self { epsilon, alpha, stream_bound, kappa })
    }

    /// `log2 m`, floored at 1.
    pub fn log_m(&self) -> f64 {
        log2_at_least_one(self.stream_bound as f64)
    }

    /// Smallest epsilon for which the sketch-based L2 guarantees are stated
    /// at window `w`: `kappa * 1000 log m / (alpha^3 sqrt(w))`.
    pub fn epsilon_floor(&self, window: u64) -> f64 {
        let a3 = self.alpha * self.alpha * self.alpha;
        self.kappa * 1000.0 * self.log_m() / (a3 * libm::sqrt(window as f64))
    }
}

/// Smooth bound for the L2 estimate: `kappa eps g / (200 log m) + 2`.
pub fn l2_smooth_bound(g: f64, p: &SmoothBoundParams) -> f64 {
    p.kappa * p.epsilon * g.max(0.0) / (200.0 * p.log_m()) + 2.0
}

/// Smooth bound for a frequency estimate:
/// `kappa alpha^3 eps h / (200 log m) + 2`.
pub fn freq_smooth_bound(h: f64, p: &SmoothBoundParams) -> f64 {
    let a3 = p.alpha * p.alpha * p.alpha;
    p.kappa * a3 * p.epsilon * h.max(0.0) / (200.0 * p.log_m()) + 2.0
}

/// Smoothness parameter of [`l2_smooth_bound`]: `kappa eps / (150 log m)`.
pub fn l2_smoothness(p: &SmoothBoundParams) -> f64 {
    p.kappa * p.epsilon / (150.0 * p.log_m())
}

/// Smoothness parameter of [`freq_smooth_bound`].
pub fn freq_smoothness(p: &SmoothBoundParams) -> f64 {
    let a3 = p.alpha * p.alpha * p.alpha;
    p.kappa * a3 * p.epsilon / (150.0 * p.log_m())
}

/// L1 sensitivity of releasing a Misra-Gries summary of a block.
pub fn mg_release_sensitivity(alpha: f64, block_length: u64) -> f64 {
    alpha * block_length as f64
}

/// Laplace scale `2 S / eps` for a smooth bound `S`.
pub fn smooth_laplace_scale(bound: f64, epsilon: f64) -> Result<f64> {
    check_positive("bound", bound)?;
    check_positive("epsilon", epsilon)?;
    Ok(2.0 * bound / epsilon)
}

/// Total budget of sequentially composed mechanisms.
pub fn basic_composition(parts: &[(f64, f64)]) -> (f64, f64) {
    parts.iter().fold((0.0, 0.0), |(e, d), &(pe, pd)| (e + pe, d + pd))
}

/// Advanced composition of `k` mechanisms, each `(eps, delta)`-private:
/// `(eps sqrt(2k ln(1/delta')) + k eps (e^eps - 1)/(e^eps + 1), k delta + delta')`.
pub fn advanced_composition(k: u64, epsilon: f64, delta: f64, delta_slack: f64) -> Result<(f64, f64)> {
    check_positive("epsilon", epsilon)?;
    check_unit_open("delta_slack", delta_slack)?;
    if !(0.0..1.0).contains(&delta) {
        return Err(param("delta", "must lie in [0, 1)"));
    }
    let k = k as f64;
    let e = libm::exp(epsilon);
    let eps =
        epsilon * libm::sqrt(2.0 * k * libm::log(1.0 / delta_slack)) + k * epsilon * (e - 1.0) / (e + 1.0);
    Ok((eps, k * delta + delta_slack))
}

/// Clamps an estimate into `[(1 - band) exact, (1 + band) exact]`.
pub fn clamp_to_band(estimate: f64, exact: f64, band: f64) -> f64 {
    estimate.clamp((1.0 - band) * exact, (1.0 + band) * exact)
}
