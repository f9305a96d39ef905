//! Zipf-Mandelbrot and Evert probability models.
//!
//! The Zipf-Mandelbrot law puts mass `C (k + t)^{-γ}` on rank `k >= 1`; its
//! normalizer is `1 / ζ(γ, 1 + t)` (Hurwitz zeta). The Evert law is the
//! matching distribution on frequencies, with mass proportional to
//! `B(f + 1 - α, α)` on `f = 1..=f_max`, `α = 1 + 1/γ`. Its normalizer comes
//! from the telescoping identity
//!
//! ```text
//! Σ_{f=1}^{F} B(f + 1 - α, α) = B(2 - α, α - 1) - B(F + 2 - α, α - 1)
//! ```
//!
//! which follows from `B(x, y) = B(x + 1, y) + B(x, y + 1)`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::FrequencyTable;
use crate::specfun::{ln_1m_exp, ln_beta_unchecked, ln_gamma_increment, ln_hurwitz_zeta_unchecked};

/// Default tail mass left out when sampling.
pub const DEFAULT_TAIL_EPSILON: f64 = 1e-9;

/// Largest truncation point the sampler accepts; ranks above it lose integer
/// precision in `k + t`.
pub const MAX_TRUNCATION: u64 = 1 << 53;

/// Number of ranks whose tail masses are tabulated for inverse-CDF lookup.
const HEAD_TABLE_LEN: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("gamma must be finite and > 1 (the normalizing sum diverges otherwise), got {0}")]
    Divergent(f64),
    #[error("shift t must be finite and >= 0, got {0}")]
    InvalidShift(f64),
    #[error("alpha must lie strictly between 1 and 2, got {0}")]
    InvalidAlpha(f64),
    #[error("f_max must be >= 1")]
    InvalidFMax,
    #[error("rank must be >= 1")]
    RankOutOfRange,
    #[error("frequency {f} outside 1..={f_max}")]
    FrequencyOutOfRange { f: u64, f_max: u64 },
    #[error("number of draws must be >= 1")]
    NoDraws,
    #[error("tail epsilon must lie in (0, 1e-6], got {0}")]
    InvalidTailEpsilon(f64),
    #[error("truncation point for tail mass {epsilon} exceeds 2^53; use a larger gamma or tail epsilon")]
    TruncationTooLarge { epsilon: f64 },
    #[error("quantile model needs M >= 1 and 1 <= k <= M")]
    InvalidQuantile,
}

/// Zipf-Mandelbrot parameters: exponent `γ > 1` and shift `t >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZmParams {
    gamma: f64,
    t: f64,
}

impl ZmParams {
    pub fn new(gamma: f64, t: f64) -> Result<Self, DistError> {
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(DistError::Divergent(gamma));
        }
        if !(t.is_finite() && t >= 0.0) {
            return Err(DistError::InvalidShift(t));
        }
        Ok(Self { gamma, t })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn t(&self) -> f64 {
        self.t
    }
}

/// Evert parameters: exponent `1 < α < 2` and support bound `f_max >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvertParams {
    alpha: f64,
    f_max: u64,
}

impl EvertParams {
    pub fn new(alpha: f64, f_max: u64) -> Result<Self, DistError> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(DistError::InvalidAlpha(alpha));
        }
        if f_max == 0 {
            return Err(DistError::InvalidFMax);
        }
        Ok(Self { alpha, f_max })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn f_max(&self) -> u64 {
        self.f_max
    }
}

/// `ln C` where `C Σ_{k>=1} (k + t)^{-γ} = 1`.
pub fn ln_zm_normalizer(params: &ZmParams) -> f64 {
    -ln_hurwitz_zeta_unchecked(params.gamma, 1.0 + params.t)
}

/// The Zipf-Mandelbrot normalizing constant `C`.
pub fn zm_normalizer(params: &ZmParams) -> f64 {
    ln_zm_normalizer(params).exp()
}

/// Unnormalized log mass of rank `k`: `-γ ln(k + t)`.
pub fn zm_log_weight(k: u64, params: &ZmParams) -> Result<f64, DistError> {
    if k == 0 {
        return Err(DistError::RankOutOfRange);
    }
    Ok(-params.gamma * (k as f64 + params.t).ln())
}

/// `P(X > k) = C ζ(γ, k + 1 + t)`.
pub fn zm_tail_mass(params: &ZmParams, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let ln_c = ln_zm_normalizer(params);
    (ln_c + ln_hurwitz_zeta_unchecked(params.gamma, k as f64 + 1.0 + params.t)).exp()
}

/// `ln C^α` with `C^α Σ_{f=1}^{f_max} B(f + 1 - α, α) = 1`, from the closed form.
pub fn evert_log_normalizer(params: &EvertParams) -> f64 {
    let a = params.alpha;
    let head = ln_beta_unchecked(2.0 - a, a - 1.0);
    // ln of B(f_max + 2 - α, α - 1)/B(2 - α, α - 1); the Γ(α - 1) factors cancel
    let ln_ratio = ln_gamma_increment(params.f_max as f64 + 1.0, 1.0 - a) - ln_gamma_increment(1.0, 1.0 - a);
    -(head + ln_1m_exp(ln_ratio))
}

/// `ln B(f + 1 - α, α)`, the unnormalized Evert log weight.
pub fn evert_log_weight(f: u64, alpha: f64) -> f64 {
    ln_beta_unchecked(f as f64 + 1.0 - alpha, alpha)
}

/// `ln(C^α B(f + 1 - α, α))`.
pub fn evert_log_pmf(f: u64, params: &EvertParams) -> Result<f64, DistError> {
    if f == 0 || f > params.f_max {
        return Err(DistError::FrequencyOutOfRange { f, f_max: params.f_max });
    }
    Ok(evert_log_normalizer(params) + evert_log_weight(f, params.alpha))
}

/// Input to [`sample_zm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSpec {
    pub params: ZmParams,
    pub n_draws: u64,
    pub seed: u64,
    pub tail_epsilon: f64,
}

impl SampleSpec {
    pub fn new(params: ZmParams, n_draws: u64, seed: u64) -> Self {
        Self { params, n_draws, seed, tail_epsilon: DEFAULT_TAIL_EPSILON }
    }

    pub fn with_tail_epsilon(mut self, tail_epsilon: f64) -> Self {
        self.tail_epsilon = tail_epsilon;
        self
    }

    fn validate(&self) -> Result<(), DistError> {
        if self.n_draws == 0 {
            return Err(DistError::NoDraws);
        }
        if !(self.tail_epsilon > 0.0 && self.tail_epsilon <= 1e-6) {
            return Err(DistError::InvalidTailEpsilon(self.tail_epsilon));
        }
        Ok(())
    }
}

/// Inverse-CDF sampler for the Zipf-Mandelbrot law restricted to `1..=L`,
/// where `L` is the smallest rank whose tail mass `P(X > L)` is below the
/// requested epsilon.
///
/// A draw is the smallest `k` with `P(X > k) < v`, `v` uniform on
/// `(P(X > L), 1]`. Tail masses for the first 65536 ranks are tabulated and
/// binary searched; deeper ranks are found by bisection on the tail mass
/// itself.
#[derive(Debug, Clone)]
pub struct ZmSampler {
    params: ZmParams,
    ln_c: f64,
    truncation: u64,
    head: Vec<f64>,
    tail_at_truncation: f64,
}

impl ZmSampler {
    pub fn new(params: ZmParams, tail_epsilon: f64) -> Result<Self, DistError> {
        if !(tail_epsilon > 0.0 && tail_epsilon <= 1e-6) {
            return Err(DistError::InvalidTailEpsilon(tail_epsilon));
        }
        let ln_c = ln_zm_normalizer(&params);
        let mut sampler = Self { params, ln_c, truncation: 0, head: vec![1.0], tail_at_truncation: 1.0 };
        sampler.truncation = sampler.find_truncation(tail_epsilon)?;
        let head_len = sampler.truncation.min(HEAD_TABLE_LEN);
        sampler.head = (0..=head_len).map(|k| sampler.tail_mass(k)).collect();
        sampler.tail_at_truncation = sampler.tail_mass(sampler.truncation);
        Ok(sampler)
    }

    /// `L`, the largest rank the sampler can produce.
    pub fn truncation(&self) -> u64 {
        self.truncation
    }

    pub fn params(&self) -> &ZmParams {
        &self.params
    }

    fn tail_mass(&self, k: u64) -> f64 {
        if k == 0 {
            return 1.0;
        }
        if let Some(&v) = self.head.get(k as usize) {
            return v;
        }
        let q = k as f64 + 1.0 + self.params.t;
        (self.ln_c + ln_hurwitz_zeta_unchecked(self.params.gamma, q)).exp()
    }

    fn find_truncation(&self, epsilon: f64) -> Result<u64, DistError> {
        let mut lo = 0u64; // tail_mass(lo) >= epsilon
        let mut hi = 1u64;
        while self.tail_mass(hi) >= epsilon {
            lo = hi;
            hi = hi.checked_mul(2).filter(|&h| h <= MAX_TRUNCATION).ok_or(DistError::TruncationTooLarge { epsilon })?;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.tail_mass(mid) >= epsilon {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }

    /// One rank in `1..=L`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let w = 1.0 - rng.random::<f64>();
        let v = self.tail_at_truncation + (1.0 - self.tail_at_truncation) * w;
        if v <= self.tail_at_truncation {
            return self.truncation;
        }
        let last = self.head.len() - 1;
        if v > self.head[last] {
            return self.head.partition_point(|&tail| tail >= v) as u64;
        }
        let (mut lo, mut hi) = (last as u64, self.truncation);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.tail_mass(mid) >= v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Per-rank counts of `n` draws.
    pub fn sample_counts<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> BTreeMap<u64, u64> {
        let mut head_counts = vec![0u64; self.head.len()];
        let mut deep = BTreeMap::new();
        for _ in 0..n {
            let k = self.draw(rng);
            match head_counts.get_mut(k as usize) {
                Some(c) => *c += 1,
                None => *deep.entry(k).or_insert(0) += 1,
            }
        }
        let mut out: BTreeMap<u64, u64> =
            head_counts.into_iter().enumerate().filter(|&(_, c)| c > 0).map(|(k, c)| (k as u64, c)).collect();
        out.extend(deep);
        out
    }
}

/// The generator behind every seeded sample: ChaCha8 seeded from a `u64`.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-rank counts of a seeded sample, with the truncation point used.
#[derive(Debug, Clone, PartialEq)]
pub struct CategorySample {
    pub counts: BTreeMap<u64, u64>,
    pub truncation: u64,
}

pub fn sample_zm_categories(spec: &SampleSpec) -> Result<CategorySample, DistError> {
    spec.validate()?;
    let sampler = ZmSampler::new(spec.params, spec.tail_epsilon)?;
    let mut rng = seeded_rng(spec.seed);
    let counts = sampler.sample_counts(spec.n_draws, &mut rng);
    Ok(CategorySample { counts, truncation: sampler.truncation() })
}

/// Draws `n_draws` ranks and returns the observed frequency table.
pub fn sample_zm(spec: &SampleSpec) -> Result<FrequencyTable, DistError> {
    let sample = sample_zm_categories(spec)?;
    let freqs = sample.counts.into_values().collect();
    Ok(FrequencyTable::from_freqs(freqs).expect("at least one draw, all counts positive"))
}

/// The bounded continuous power law `U(t/(t+M+1), 1)^{-γ}`, whose upper
/// `(M+1)`-quantiles reproduce the Zipf-Mandelbrot profile
/// `((t + k)/(t + M + 1))^{-γ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileModel {
    gamma: f64,
    t: f64,
    m: u64,
}

impl QuantileModel {
    pub fn new(gamma: f64, t: f64, m: u64) -> Result<Self, DistError> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(DistError::Divergent(gamma));
        }
        if !(t.is_finite() && t >= 0.0) {
            return Err(DistError::InvalidShift(t));
        }
        if m == 0 {
            return Err(DistError::InvalidQuantile);
        }
        Ok(Self { gamma, t, m })
    }

    /// Lower end of the uniform variable, `t / (t + M + 1)`.
    fn u_low(&self) -> f64 {
        self.t / (self.t + self.m as f64 + 1.0)
    }

    /// Upper end of the support, `(t / (t + M + 1))^{-γ}` (infinite at `t = 0`).
    pub fn upper_limit(&self) -> f64 {
        self.u_low().powf(-self.gamma)
    }

    /// `P(X > x)` for `x` in the support `[1, upper_limit]`.
    pub fn survival(&self, x: f64) -> f64 {
        let a = self.u_low();
        ((x.powf(-1.0 / self.gamma) - a) / (1.0 - a)).clamp(0.0, 1.0)
    }

    /// The value exceeded with probability `k / (M + 1)`, by inverting [`Self::survival`].
    pub fn upper_quantile(&self, k: u64) -> Result<f64, DistError> {
        if k == 0 || k > self.m {
            return Err(DistError::InvalidQuantile);
        }
        let a = self.u_low();
        let p = k as f64 / (self.m as f64 + 1.0);
        Ok((a + p * (1.0 - a)).powf(-self.gamma))
    }

    /// `((t + k) / (t + M + 1))^{-γ}`.
    pub fn zm_profile(&self, k: u64) -> f64 {
        ((self.t + k as f64) / (self.t + self.m as f64 + 1.0)).powf(-self.gamma)
    }
}
