//! Parameter estimation for Zipf-Mandelbrot corpora.
//!
//! Two estimators are provided:
//!
//! * [`fit_mle`] treats the multiset of observed frequencies as i.i.d. draws
//!   from the Evert distribution truncated at `F_max`, maximizes the
//!   likelihood over `α`, sets `γ = 1/(α - 1)`, and takes the shift
//!   `t = (M + 1)/(F_max^{1/γ} - 1)` that maximizes the likelihood of the
//!   bounded continuous power law whose quantiles follow the same profile.
//! * [`fit_chisq`] matches the observed low-frequency spectrum
//!   `#F⁻¹(1), #F⁻¹(2), ...` against [`expected_spectrum`] and minimizes the
//!   chi-squared statistic over `α`, with `t` solved so that the model's
//!   expected number of distinct categories equals the observed `M`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{legomena, FrequencyTable};
use crate::distributions::{
    evert_log_normalizer, evert_log_weight, ln_zm_normalizer, DistError, EvertParams, ZmParams,
};
use crate::specfun::{ln_factorial, ln_hurwitz_zeta_unchecked};

/// Search interval for `α`, kept away from the poles of `B(f + 1 - α, α)` at
/// `α = 2` (with `f = 1`) and of `γ = 1/(α - 1)` at `α = 1`.
pub const ALPHA_LOWER: f64 = 1.0 + 1e-6;
pub const ALPHA_UPPER: f64 = 2.0 - 1e-6;

const MLE_GRID_POINTS: usize = 200;
/// Local maxima this close to the best grid value count as competitors.
const MULTIMODAL_TOLERANCE: f64 = 1e-6;

/// Spectrum bins considered by the chi-squared fit.
pub const CHISQ_MAX_BINS: u64 = 15;
pub const CHISQ_MIN_BINS: u64 = 6;
/// Minimum expected count for a bin to extend the chi-squared range.
pub const CHISQ_MIN_EXPECTED: f64 = 5.0;

/// The Poisson-mixture sum switches to its closed-form tail once the Poisson
/// mean falls below this.
const SPECTRUM_TAIL_SWITCH: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("alpha must lie strictly between 1 and 2, got {0}")]
    InvalidAlpha(f64),
    #[error("tolerance must lie in (0, 1e-3], got {0}")]
    InvalidTolerance(f64),
    #[error("need at least {needed} distinct messages to fit, got {got}")]
    TooFewMessages { needed: usize, got: usize },
    #[error("need at least 4 non-empty spectrum bins among f = 1..={max}, got {got}", max = CHISQ_MAX_BINS)]
    TooFewBins { got: usize },
    #[error("shift formula needs F_max >= 2 and gamma > 0 (F_max = {f_max}, gamma = {gamma})")]
    ShiftUndefined { gamma: f64, f_max: u64 },
    #[error("spectrum cutoff must be >= 1")]
    InvalidCutoff,
    #[error("total count must be >= 1")]
    EmptyCorpus,
    #[error("no shift makes the model expect {m} distinct categories among {n_total} draws")]
    NoShiftMatchesTypes { m: f64, n_total: u64 },
    #[error(transparent)]
    Distribution(#[from] DistError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    Mle,
    Chisq,
}

impl std::fmt::Display for FitMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitMethod::Mle => "mle",
            FitMethod::Chisq => "chisq",
        })
    }
}

/// Conditions attached to a fit that a caller should look at.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitWarning {
    /// The optimum sits at the edge of the `α` search interval.
    BoundaryHit { alpha: f64 },
    /// Another, non-adjacent grid point is within 1e-6 of the best log-likelihood.
    MultiModal { competing_alpha: f64 },
    /// `F_max < 2`, so the shift estimate is unbounded.
    ShiftUndefined,
}

impl FitWarning {
    /// Whether the fit should be treated as failed.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, FitWarning::BoundaryHit { .. } | FitWarning::ShiftUndefined)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub method: FitMethod,
    pub alpha: f64,
    pub gamma: f64,
    pub t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_likelihood: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chisq_statistic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chisq_bins: Option<u64>,
    pub outliers_removed: usize,
    pub warnings: Vec<FitWarning>,
}

impl FitResult {
    pub fn is_degenerate(&self) -> bool {
        self.warnings.iter().any(FitWarning::is_degenerate)
    }

    pub fn zm_params(&self) -> Result<ZmParams, DistError> {
        ZmParams::new(self.gamma, self.t)
    }
}

fn check_alpha(alpha: f64) -> Result<(), FitError> {
    if alpha > 1.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(FitError::InvalidAlpha(alpha))
    }
}

/// `(f, #F⁻¹(f))` pairs of a table.
fn spectrum_pairs(table: &FrequencyTable) -> Vec<(u64, u64)> {
    legomena(table).iter().collect()
}

fn loglik_from_spectrum(alpha: f64, f_max: u64, m: usize, spectrum: &[(u64, u64)]) -> f64 {
    let params = EvertParams::new(alpha, f_max).expect("alpha checked by caller");
    let ln_c = evert_log_normalizer(&params);
    let weights: f64 = spectrum.iter().map(|&(f, count)| count as f64 * evert_log_weight(f, alpha)).sum();
    m as f64 * ln_c + weights
}

/// Evert log-likelihood of the observed frequencies, `M ln C^α + Σ_k ln B(F_k + 1 - α, α)`,
/// with the support truncated at the table's `F_max`.
pub fn evert_loglik(alpha: f64, table: &FrequencyTable) -> Result<f64, FitError> {
    check_alpha(alpha)?;
    Ok(loglik_from_spectrum(alpha, table.f_max(), table.m_distinct(), &spectrum_pairs(table)))
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`. Ties move the
/// bracket left, so a flat objective converges to `lo`.
fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximum-likelihood `α` with its log-likelihood and any warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaEstimate {
    pub alpha: f64,
    pub log_likelihood: f64,
    pub warnings: Vec<FitWarning>,
}

/// Maximizes [`evert_loglik`] over `α`: a 200-point grid scan locates the
/// best cell, then golden-section search refines it to width `tol`.
pub fn fit_alpha_mle(table: &FrequencyTable, tol: f64) -> Result<AlphaEstimate, FitError> {
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(FitError::InvalidTolerance(tol));
    }
    let m = table.m_distinct();
    if m < 2 {
        return Err(FitError::TooFewMessages { needed: 2, got: m });
    }
    let spectrum = spectrum_pairs(table);
    let f_max = table.f_max();
    let objective = |alpha: f64| loglik_from_spectrum(alpha, f_max, m, &spectrum);

    let step = (ALPHA_UPPER - ALPHA_LOWER) / (MLE_GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..MLE_GRID_POINTS).map(|i| ALPHA_LOWER + step * i as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&a| objective(a)).collect();

    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }

    // With F_max = 1 every α gives likelihood 1; report the lower edge.
    let worst = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if values[best] - worst <= 1e-12 * values[best].abs().max(1.0) {
        return Ok(AlphaEstimate {
            alpha: ALPHA_LOWER,
            log_likelihood: values[0],
            warnings: vec![FitWarning::BoundaryHit { alpha: ALPHA_LOWER }],
        });
    }

    let mut warnings = Vec::new();
    let last = MLE_GRID_POINTS - 1;
    let is_local_max = |i: usize| {
        (i == 0 || values[i] >= values[i - 1]) && (i == last || values[i] >= values[i + 1])
    };
    if let Some(other) = (0..MLE_GRID_POINTS)
        .filter(|&i| i.abs_diff(best) > 1 && is_local_max(i))
        .find(|&i| values[best] - values[i] <= MULTIMODAL_TOLERANCE)
    {
        warnings.push(FitWarning::MultiModal { competing_alpha: grid[other] });
    }

    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(last)];
    let (mut alpha, mut loglik) = golden_section_max(objective, lo, hi, tol);
    if values[best] > loglik {
        alpha = grid[best];
        loglik = values[best];
    }

    let at_edge = (best == 0 && alpha - ALPHA_LOWER <= 2.0 * tol) || (best == last && ALPHA_UPPER - alpha <= 2.0 * tol);
    if at_edge {
        warnings.insert(0, FitWarning::BoundaryHit { alpha });
    }
    Ok(AlphaEstimate { alpha, log_likelihood: loglik, warnings })
}

/// `γ = 1/(α - 1)`.
pub fn gamma_from_alpha(alpha: f64) -> Result<f64, FitError> {
    check_alpha(alpha)?;
    Ok(1.0 / (alpha - 1.0))
}

/// Maximum-likelihood shift `t = (M + 1)/(F_max^{1/γ} - 1)`.
pub fn shift_from_prop2(gamma: f64, m: u64, f_max: u64) -> Result<f64, FitError> {
    if f_max < 2 || !(gamma.is_finite() && gamma > 0.0) {
        return Err(FitError::ShiftUndefined { gamma, f_max });
    }
    let denom = ((f_max as f64).ln() / gamma).exp_m1();
    Ok((m as f64 + 1.0) / denom)
}

/// Evert maximum-likelihood fit of `(α, γ, t)`.
///
/// A table with `F_max = 1` has a flat likelihood; the result then carries
/// [`FitWarning::BoundaryHit`] and [`FitWarning::ShiftUndefined`] with
/// `t = +∞`.
pub fn fit_mle(table: &FrequencyTable, tol: f64) -> Result<FitResult, FitError> {
    let estimate = fit_alpha_mle(table, tol)?;
    let gamma = gamma_from_alpha(estimate.alpha)?;
    let mut warnings = estimate.warnings;
    let t = match shift_from_prop2(gamma, table.m_distinct() as u64, table.f_max()) {
        Ok(t) => t,
        Err(_) => {
            warnings.push(FitWarning::ShiftUndefined);
            f64::INFINITY
        }
    };
    Ok(FitResult {
        method: FitMethod::Mle,
        alpha: estimate.alpha,
        gamma,
        t,
        log_likelihood: Some(estimate.log_likelihood),
        chisq_statistic: None,
        chisq_bins: None,
        outliers_removed: table.dropped_top(),
        warnings,
    })
}

/// Expected `f`-legomena counts for `f = 1..=f_cut` under a Zipf-Mandelbrot
/// model with `N` draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumExpectation {
    pub params: ZmParams,
    pub n_total: u64,
    /// `expected[f - 1] = E[#F⁻¹(f)]`
    pub expected: Vec<f64>,
}

impl SpectrumExpectation {
    pub fn get(&self, f: u64) -> f64 {
        self.expected[(f - 1) as usize]
    }
}

/// Evaluates the Poisson mixture `E[#F⁻¹(f)] = Σ_ℓ λ_ℓ^f e^{-λ_ℓ} / f!`,
/// `λ_ℓ = N C (ℓ + t)^{-γ}`.
///
/// Ranks whose Poisson mean is so large that every `f <= f_cut` term is
/// below `e^{-50}` are skipped. The sum then runs term by term until
/// `λ_ℓ < 2`; the remaining tail is expanded as
/// `Σ_j (-1)^j/(f! j!) (NC)^{f+j} ζ(γ(f+j), ℓ + t)`, which converges
/// quickly because `λ < 2` there.
pub fn expected_spectrum(params: &ZmParams, n_total: u64, f_cut: u64) -> Result<SpectrumExpectation, FitError> {
    if f_cut == 0 {
        return Err(FitError::InvalidCutoff);
    }
    if n_total == 0 {
        return Err(FitError::EmptyCorpus);
    }
    let gamma = params.gamma();
    let t = params.t();
    let ln_nc = (n_total as f64).ln() + ln_zm_normalizer(params);
    let ln_fact: Vec<f64> = (0..=f_cut).map(ln_factorial).collect();

    // Smallest λ above which all f <= f_cut terms are negligible.
    let fc = f_cut as f64;
    let mut lambda_hi = fc + 10.0;
    while (1..=f_cut).any(|f| f as f64 * lambda_hi.ln() - lambda_hi - ln_fact[f as usize] > -50.0) {
        lambda_hi *= 1.25;
    }
    let x_start = ((ln_nc - lambda_hi.ln()) / gamma).exp() - t;
    let mut ell = if x_start > 1.0 { x_start.floor() as u64 } else { 1 };

    let mut sums = vec![0.0; f_cut as usize];
    loop {
        let x = ell as f64 + t;
        let ln_lambda = ln_nc - gamma * x.ln();
        let lambda = ln_lambda.exp();
        if lambda < SPECTRUM_TAIL_SWITCH {
            break;
        }
        let mut p = (ln_lambda - lambda).exp();
        for (f, s) in sums.iter_mut().enumerate() {
            if f > 0 {
                p *= lambda / (f + 1) as f64;
            }
            *s += p;
        }
        ell += 1;
    }

    let q = ell as f64 + t;
    for (idx, s) in sums.iter_mut().enumerate() {
        let f = (idx + 1) as u64;
        let mut tail = 0.0;
        let mut j = 0u64;
        loop {
            let power = (f + j) as f64;
            let ln_term = power * ln_nc + ln_hurwitz_zeta_unchecked(gamma * power, q) - ln_fact[f as usize] - ln_factorial(j);
            let term = ln_term.exp();
            tail += if j % 2 == 0 { term } else { -term };
            j += 1;
            if term <= 1e-17 * tail.abs() || term == 0.0 || j > 200 {
                break;
            }
        }
        *s += tail.max(0.0);
    }

    Ok(SpectrumExpectation { params: *params, n_total, expected: sums })
}

/// Expected number of distinct categories among `N` draws,
/// `E[M] = Σ_ℓ (1 - e^{-λ_ℓ})`, using the same rank split as [`expected_spectrum`].
pub fn expected_types(params: &ZmParams, n_total: u64) -> Result<f64, FitError> {
    if n_total == 0 {
        return Err(FitError::EmptyCorpus);
    }
    let gamma = params.gamma();
    let t = params.t();
    let ln_nc = (n_total as f64).ln() + ln_zm_normalizer(params);
    // ranks with λ > 40 are seen with probability 1 - e^{-40} or more
    let x_start = ((ln_nc - 40f64.ln()) / gamma).exp() - t;
    let mut ell = if x_start > 1.0 { x_start.floor() as u64 } else { 1 };
    let mut total = (ell - 1) as f64;
    loop {
        let lambda = (ln_nc - gamma * (ell as f64 + t).ln()).exp();
        if lambda < SPECTRUM_TAIL_SWITCH {
            break;
        }
        total += -(-lambda).exp_m1();
        ell += 1;
    }
    let q = ell as f64 + t;
    let mut tail = 0.0;
    for j in 1..=200u64 {
        let power = j as f64;
        let term = (power * ln_nc + ln_hurwitz_zeta_unchecked(gamma * power, q) - ln_factorial(j)).exp();
        tail += if j % 2 == 1 { term } else { -term };
        if term <= 1e-17 * tail.abs() || term == 0.0 {
            break;
        }
    }
    Ok(total + tail.max(0.0))
}

/// Chi-squared statistic over bins `1..=K`, where `K` is the largest `f`
/// with expected count `>= 5`, clamped to `[6, 15]`.
fn chisq_statistic(observed: &[f64], expected: &[f64]) -> (f64, u64) {
    let last_rich = expected
        .iter()
        .rposition(|&e| e >= CHISQ_MIN_EXPECTED)
        .map(|i| i as u64 + 1)
        .unwrap_or(CHISQ_MIN_BINS);
    let bins = last_rich.clamp(CHISQ_MIN_BINS, CHISQ_MAX_BINS);
    let stat = (0..bins as usize)
        .map(|i| {
            let e = expected[i].max(f64::MIN_POSITIVE);
            let d = observed[i] - e;
            d * d / e
        })
        .sum();
    (stat, bins)
}

/// Outcome of a spectrum fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumFit {
    pub alpha: f64,
    pub t: f64,
    pub statistic: f64,
    pub bins: u64,
}

/// Upper limit of `ln(1 + t)` when solving for the shift.
const MAX_LN_SHIFT: f64 = 50.0;

/// The shift at which the expected number of distinct categories among
/// `n_total` draws equals `m`. `Some(0.0)` when `t = 0` already expects at
/// least `m`; `None` when no shift up to `e^50` expects that many.
pub fn shift_matching_types(gamma: f64, n_total: u64, m: f64) -> Result<Option<f64>, FitError> {
    let types = |u: f64| -> Result<f64, FitError> { expected_types(&ZmParams::new(gamma, u.exp_m1())?, n_total) };
    if types(0.0)? >= m {
        return Ok(Some(0.0));
    }
    // expected types grow with t; bisect on u = ln(1 + t)
    let (mut lo, mut hi) = (0.0, 1.0);
    while types(hi)? < m {
        lo = hi;
        hi *= 2.0;
        if hi > MAX_LN_SHIFT {
            return Ok(None);
        }
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if types(mid)? < m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some((0.5 * (lo + hi)).exp_m1()))
}

/// Chi-squared statistic, bins used, and the shift tied to `alpha`.
fn chisq_objective(observed: &[f64], n_total: u64, m: f64, alpha: f64) -> (f64, u64, f64) {
    const FAILED: (f64, u64, f64) = (f64::INFINITY, 0, f64::NAN);
    if !(ALPHA_LOWER..=ALPHA_UPPER).contains(&alpha) {
        return FAILED;
    }
    let gamma = 1.0 / (alpha - 1.0);
    let t = match shift_matching_types(gamma, n_total, m) {
        Ok(Some(t)) => t,
        _ => return FAILED,
    };
    let Ok(params) = ZmParams::new(gamma, t) else { return FAILED };
    match expected_spectrum(&params, n_total, CHISQ_MAX_BINS) {
        Ok(exp) => {
            let (stat, bins) = chisq_statistic(observed, &exp.expected);
            if stat.is_finite() {
                (stat, bins, t)
            } else {
                FAILED
            }
        }
        Err(_) => FAILED,
    }
}

const CHISQ_GRID_POINTS: usize = 99;

/// Minimizes the chi-squared distance between an observed spectrum
/// (`observed[f - 1] = #F⁻¹(f)`, zeros allowed, padded to 15 bins) and
/// [`expected_spectrum`] over `(α, t)`, with `t` tied to `α` so that the
/// model expects exactly `m_distinct` distinct categories.
///
/// `α` is scanned on a 99-point grid over `[1.01, 1.99]` (evaluated in
/// parallel, reduced in grid order), then refined by golden-section search
/// around the best cell. The cells at either end extend to the full search
/// interval.
pub fn fit_chisq_spectrum(observed: &[f64], n_total: u64, m_distinct: f64) -> Result<SpectrumFit, FitError> {
    if n_total == 0 {
        return Err(FitError::EmptyCorpus);
    }
    let mut obs = observed.to_vec();
    obs.resize(obs.len().max(CHISQ_MAX_BINS as usize), 0.0);
    let nonempty = obs[..CHISQ_MAX_BINS as usize].iter().filter(|&&o| o > 0.0).count();
    if nonempty < 4 {
        return Err(FitError::TooFewBins { got: nonempty });
    }

    let last = CHISQ_GRID_POINTS - 1;
    let grid: Vec<f64> = (0..CHISQ_GRID_POINTS).map(|i| 1.01 + 0.98 * i as f64 / last as f64).collect();
    let scores: Vec<f64> = grid.par_iter().map(|&a| chisq_objective(&obs, n_total, m_distinct, a).0).collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    if !scores[best].is_finite() {
        return Err(FitError::NoShiftMatchesTypes { m: m_distinct, n_total });
    }

    let lo = if best == 0 { ALPHA_LOWER } else { grid[best - 1] };
    let hi = if best == last { ALPHA_UPPER } else { grid[best + 1] };
    let (mut alpha, _) = golden_section_max(|a| -chisq_objective(&obs, n_total, m_distinct, a).0, lo, hi, 1e-8);
    if chisq_objective(&obs, n_total, m_distinct, alpha).0 > scores[best] {
        alpha = grid[best];
    }
    let (statistic, bins, t) = chisq_objective(&obs, n_total, m_distinct, alpha);
    Ok(SpectrumFit { alpha, t, statistic, bins })
}

/// Chi-squared spectrum fit of `(α, γ, t)` for a frequency table.
pub fn fit_chisq(table: &FrequencyTable, n_total: u64) -> Result<FitResult, FitError> {
    if table.m_distinct() < 4 {
        return Err(FitError::TooFewMessages { needed: 4, got: table.m_distinct() });
    }
    let observed: Vec<f64> = legomena(table).head(CHISQ_MAX_BINS).into_iter().map(|c| c as f64).collect();
    let fit = fit_chisq_spectrum(&observed, n_total, table.m_distinct() as f64)?;
    let mut warnings = Vec::new();
    if fit.alpha - ALPHA_LOWER < 1e-4 || ALPHA_UPPER - fit.alpha < 1e-4 {
        warnings.push(FitWarning::BoundaryHit { alpha: fit.alpha });
    }
    Ok(FitResult {
        method: FitMethod::Chisq,
        alpha: fit.alpha,
        gamma: 1.0 / (fit.alpha - 1.0),
        t: fit.t,
        log_likelihood: None,
        chisq_statistic: Some(fit.statistic),
        chisq_bins: Some(fit.bins),
        outliers_removed: table.dropped_top(),
        warnings,
    })
}
