//! Log-gamma, log-beta and the Hurwitz zeta function.
//!
//! `ln Γ` uses the Stirling asymptotic series (Bernoulli-number coefficients,
//! Abramowitz & Stegun 6.1.40) for `x >= 10` and the upward recurrence
//! `Γ(x) = Γ(x + n) / (x (x+1) ... (x+n-1))` below that. `ln B(x, y)` with a
//! large argument is formed from the Stirling remainder directly, so that the
//! large `ln Γ` terms never cancel against each other.
//!
//! Every public function is pure and works in log space.

use thiserror::Error;

/// `ln(sqrt(2π))`
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this, `ln Γ` is shifted upward before the asymptotic series is used.
const STIRLING_CUTOFF: f64 = 10.0;

/// `B_{2k} / (2k (2k - 1))` for k = 1..8.
const STIRLING_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// `B_{2j} / (2j)!` for j = 1..8, used by the Euler-Maclaurin tail.
const EM_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
    1.0 / 74_724_249_600.0,
    -3617.0 / 10_670_622_842_880_000.0,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("{name} must be a finite positive number, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("Hurwitz zeta requires s > 1 (series diverges), got s = {0}")]
    Divergent(f64),
}

/// A strictly positive, finite real.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PositiveReal(f64);

impl PositiveReal {
    pub fn new(value: f64) -> Result<Self, DomainError> {
        check_positive("x", value).map(Self)
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PositiveReal {
    type Error = DomainError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<f64, DomainError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(DomainError::NotPositive { name, value })
    }
}

/// Stirling remainder `ln Γ(x) - [(x - 1/2) ln x - x + ln sqrt(2π)]` for `x >= 10`.
fn stirling_remainder(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Horner in 1/x^2, then one factor of 1/x.
    let mut acc = 0.0;
    for c in STIRLING_COEFFS.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

fn ln_gamma_large(x: f64) -> f64 {
    (x - 0.5) * x.ln() - x + LN_SQRT_2PI + stirling_remainder(x)
}

/// `ln Γ(x)` for `x > 0`, no argument checking.
pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x >= STIRLING_CUTOFF {
        return ln_gamma_large(x);
    }
    let mut shifted = x;
    let mut prod = 1.0;
    while shifted < STIRLING_CUTOFF {
        prod *= shifted;
        shifted += 1.0;
    }
    ln_gamma_large(shifted) - prod.ln()
}

/// `ln B(x, y)` for `x, y > 0`, no argument checking.
pub(crate) fn ln_beta_unchecked(x: f64, y: f64) -> f64 {
    let (big, small) = if x >= y { (x, y) } else { (y, x) };
    if big < STIRLING_CUTOFF {
        return ln_gamma_unchecked(big) + ln_gamma_unchecked(small) - ln_gamma_unchecked(big + small);
    }
    // ln Γ(big) - ln Γ(big + small), expanded so the O(big ln big) parts cancel analytically.
    let sum = big + small;
    let ratio_part = -(big - 0.5) * (small / big).ln_1p();
    let corr = stirling_remainder(big) - stirling_remainder(sum);
    ln_gamma_unchecked(small) + ratio_part - small * sum.ln() + small + corr
}

/// `ln Γ(z + δ) - ln Γ(z)`, accurate relative to its own size even when
/// `δ` is tiny or `z` is huge. Needs `z > 0` and `z + δ > 0`.
pub(crate) fn ln_gamma_increment(z: f64, delta: f64) -> f64 {
    // shift up so both arguments stay in the Stirling range
    let mut shift = 0.0;
    let mut recurrence = 0.0;
    while z + shift < STIRLING_CUTOFF + 1.0 || z + shift + delta < STIRLING_CUTOFF {
        recurrence += (delta / (z + shift)).ln_1p();
        shift += 1.0;
    }
    let z = z + shift;
    let moved = z + delta;
    (z - 0.5) * (delta / z).ln_1p() + delta * moved.ln() - delta + stirling_remainder(moved)
        - stirling_remainder(z)
        - recurrence
}

/// Natural log of the gamma function.
///
/// Absolute error stays below 1e-12 wherever `|ln Γ(x)|` is below ~1e3; for
/// larger values the error is a few ulps of the result.
pub fn log_gamma(x: f64) -> Result<f64, DomainError> {
    check_positive("x", x).map(ln_gamma_unchecked)
}

/// Natural log of the beta function `B(x, y) = Γ(x) Γ(y) / Γ(x + y)`.
///
/// Symmetric in its arguments bit for bit.
pub fn log_beta(x: f64, y: f64) -> Result<f64, DomainError> {
    let x = check_positive("x", x)?;
    let y = check_positive("y", y)?;
    Ok(ln_beta_unchecked(x, y))
}

/// `ln ζ(s, q)` where `ζ(s, q) = Σ_{k >= 0} (k + q)^{-s}`.
///
/// Sums directly until the argument reaches `max(16, 2s)` and closes the
/// remaining tail with an eight-term Euler-Maclaurin expansion. The sum is
/// carried relative to `q^{-s}`, so results far below `f64::MIN_POSITIVE`
/// are still representable.
pub fn ln_hurwitz_zeta(s: f64, q: f64) -> Result<f64, DomainError> {
    if !(s.is_finite() && s > 1.0) {
        return Err(DomainError::Divergent(s));
    }
    let q = check_positive("q", q)?;
    Ok(ln_hurwitz_zeta_unchecked(s, q))
}

pub(crate) fn ln_hurwitz_zeta_unchecked(s: f64, q: f64) -> f64 {
    let start = 16f64.max(2.0 * s);
    let direct_terms = if q >= start { 0 } else { (start - q).ceil() as u64 };

    // Scaled by q^s: every term is ((q + k) / q)^{-s}.
    let mut sum = 0.0;
    let mut comp = 0.0;
    for k in 0..direct_terms {
        let term = (-s * (k as f64 / q).ln_1p()).exp();
        // Neumaier summation.
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        // Remaining terms are bounded by term * (1 + x/(s-1)).
        let x = q + k as f64;
        if k > 0 && term * (1.0 + x / (s - 1.0)) < 1e-18 * sum {
            return -s * q.ln() + (sum + comp).ln();
        }
    }

    let a = q + direct_terms as f64;
    let inv_a = 1.0 / a;
    let inv_a2 = inv_a * inv_a;
    // a^s * Σ_{k >= 0} (a + k)^{-s}
    let mut tail = a / (s - 1.0) + 0.5;
    let mut poch = s; // s (s+1) ... (s + 2j - 2)
    let mut pow = inv_a; // a^{1 - 2j}
    for (j, c) in EM_COEFFS.iter().enumerate() {
        tail += c * poch * pow;
        let m = 2.0 * j as f64;
        poch *= (s + m + 1.0) * (s + m + 2.0);
        pow *= inv_a2;
    }
    let scale = (-s * (a / q).ln()).exp();
    let total = sum + comp + scale * tail;
    -s * q.ln() + total.ln()
}

/// `ln(1 - exp(x))` for `x < 0`, accurate near both ends.
pub(crate) fn ln_1m_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln(n!)` via `ln Γ(n + 1)`.
pub(crate) fn ln_factorial(n: u64) -> f64 {
    ln_gamma_unchecked(n as f64 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;

    /// Independent reference: Lanczos approximation with g = 7, n = 9
    /// (Godfrey's coefficients), valid for x >= 0.5.
    fn lanczos_ln_gamma(x: f64) -> f64 {
        const G: f64 = 7.0;
        const C: [f64; 9] = [
            0.999_999_999_999_809_9,
            676.520_368_121_885_1,
            -1_259.139_216_722_402_8,
            771.323_428_777_653_1,
            -176.615_029_162_140_6,
            12.507_343_278_686_905,
            -0.138_571_095_265_720_12,
            9.984_369_578_019_572e-6,
            1.505_632_735_149_311_6e-7,
        ];
        let x = x - 1.0;
        let mut a = C[0];
        let t = x + G + 0.5;
        for (i, c) in C.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }

    #[test]
    fn log_gamma_trivial_points() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-14);
        assert!((log_gamma(2.0).unwrap()).abs() < 1e-14);
        assert!((log_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn log_gamma_half() {
        let v = log_gamma(0.5).unwrap();
        assert!((v - LN_SQRT_PI).abs() < 1e-13, "{v}");
        assert!((v - 0.5 * PI.ln()).abs() < 1e-13);
        assert!((v - lanczos_ln_gamma(0.5)).abs() < 1e-12);
    }

    #[test]
    fn log_gamma_against_lanczos_reference() {
        let mut x = 0.5;
        while x < 200.0 {
            let ours = log_gamma(x).unwrap();
            let reference = lanczos_ln_gamma(x);
            let tol = 1e-12 * reference.abs().max(1.0);
            assert!((ours - reference).abs() < tol, "x={x}: {ours} vs {reference}");
            x *= 1.07;
        }
    }

    #[test]
    fn log_gamma_small_argument_uses_reflection_free_identity() {
        // Γ(x) = Γ(x+1)/x
        for &x in &[1e-3, 0.01, 0.1, 0.37] {
            let lhs = log_gamma(x).unwrap();
            let rhs = log_gamma(x + 1.0).unwrap() - x.ln();
            assert!((lhs - rhs).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn log_gamma_large_argument_relative() {
        // ln Γ(1e7) from Stirling with exact x: compare with recurrence from 1e7 - 1.
        let x = 1e7;
        let lhs = log_gamma(x + 1.0).unwrap() - log_gamma(x).unwrap();
        assert!((lhs - x.ln()).abs() < 1e-7);
        let v = log_gamma(x).unwrap();
        let stirling = (x - 0.5) * x.ln() - x + LN_SQRT_2PI + 1.0 / (12.0 * x);
        assert!(((v - stirling) / v).abs() < 1e-15);
    }

    #[test]
    fn log_gamma_integers_match_factorials() {
        let mut fact = 1.0f64;
        for n in 1..=15u32 {
            if n > 1 {
                fact *= (n - 1) as f64;
            }
            let g = log_gamma(n as f64).unwrap().exp();
            assert!(((g - fact) / fact).abs() <= 1e-12, "n={n}: {g} vs {fact}");
        }
    }

    #[test]
    fn log_gamma_rejects_bad_input() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
        assert!(log_gamma(f64::NAN).is_err());
        assert!(log_gamma(f64::INFINITY).is_err());
        assert!(PositiveReal::new(-2.0).is_err());
        assert_eq!(PositiveReal::try_from(3.0).unwrap().get(), 3.0);
    }

    #[test]
    fn log_beta_examples() {
        assert!(log_beta(1.0, 1.0).unwrap().abs() < 1e-13);
        // B(2,3) = 1!·2!/4! = 1/12
        assert!((log_beta(2.0, 3.0).unwrap() - (1.0f64 / 12.0).ln()).abs() < 1e-12);
        assert_eq!(log_beta(0.7, 2.3).unwrap(), log_beta(2.3, 0.7).unwrap());
        assert!(log_beta(0.0, 1.0).is_err());
        assert!(log_beta(1.0, -3.0).is_err());
    }

    #[test]
    fn log_beta_recurrence_grid() {
        // B(x+1, y) = B(x, y) · x / (x + y)
        let grid: Vec<f64> = (1..=100).map(|i| i as f64 * 0.1).collect();
        for &x in &grid {
            for &y in &grid {
                let d = log_beta(x + 1.0, y).unwrap() - log_beta(x, y).unwrap();
                assert!((d - (x / (x + y)).ln()).abs() < 1e-10, "x={x} y={y}");
            }
        }
    }

    #[test]
    fn log_beta_large_first_argument() {
        // B(n + 1/2, 1/2) for large n: the naive difference of ln Γ loses ~1e-9;
        // compare with the telescoped ratio from a moderate starting point.
        let mut reference = log_beta(10.5, 0.5).unwrap();
        let mut a: f64 = 10.5;
        while a < 1e5 {
            reference += (a / (a + 0.5)).ln();
            a += 1.0;
        }
        let ours = log_beta(a, 0.5).unwrap();
        assert!((ours - reference).abs() < 1e-10, "{ours} vs {reference}");
    }

    #[test]
    fn hurwitz_zeta_known_values() {
        // ζ(2, 1) = π²/6
        let v = ln_hurwitz_zeta(2.0, 1.0).unwrap().exp();
        assert!((v - PI * PI / 6.0).abs() < 1e-14);
        // ζ(4, 1) = π⁴/90
        let v = ln_hurwitz_zeta(4.0, 1.0).unwrap().exp();
        assert!((v - PI.powi(4) / 90.0).abs() < 1e-14);
        // ζ(2, 1/2) = π²/2
        let v = ln_hurwitz_zeta(2.0, 0.5).unwrap().exp();
        assert!((v - PI * PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn hurwitz_zeta_shift_identity() {
        // ζ(s, q) = q^{-s} + ζ(s, q + 1)
        for &s in &[1.01, 1.3, 2.5, 6.3, 40.0, 250.0] {
            for &q in &[0.2, 1.0, 7.5, 61.0, 1e6] {
                let lhs = ln_hurwitz_zeta(s, q).unwrap();
                let rhs = ln_hurwitz_zeta(s, q + 1.0).unwrap();
                let rhs = (rhs.exp() + (-s * q.ln()).exp()).ln();
                if rhs.is_finite() {
                    assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "s={s} q={q}");
                }
            }
        }
    }

    #[test]
    fn hurwitz_zeta_tiny_values_stay_finite() {
        let v = ln_hurwitz_zeta(400.0, 10.0).unwrap();
        assert!((v - (-400.0 * 10f64.ln())).abs() < 1e-12);
        assert!(ln_hurwitz_zeta(1.0, 1.0).is_err());
    }

    #[test]
    fn gamma_increment_matches_direct_difference() {
        for &(z, d) in &[(0.5, 0.3), (1.0, -0.5), (3.0, -0.999), (20.0, 0.25), (1e6, -0.4), (2.0, 1.5)] {
            let direct = ln_gamma_unchecked(z + d) - ln_gamma_unchecked(z);
            // the direct difference itself carries a few ulps of ln Γ(z)
            let tol = 1e-12 * direct.abs().max(1.0) + 1e-15 * ln_gamma_unchecked(z).abs();
            assert!((ln_gamma_increment(z, d) - direct).abs() < tol, "{z} {d}");
        }
        // Γ(z + 1)/Γ(z) = z
        for &z in &[0.1, 1.0, 7.5, 123.0] {
            assert!((ln_gamma_increment(z, 1.0) - f64::ln(z)).abs() < 1e-13 * f64::ln(z).abs().max(1.0));
        }
        // Γ(2 + δ)/Γ(1 + δ) = 1 + δ for tiny δ: relative accuracy, not absolute
        let d = -1e-7;
        let ratio = ln_gamma_increment(2.0, d) - ln_gamma_increment(1.0, d);
        assert!((ratio - d.ln_1p()).abs() < 1e-12 * d.abs());
    }

    #[test]
    fn ln_1m_exp_branches() {
        for &x in &[-1e-10f64, -1e-4, -0.1, -0.69, -0.7, -5.0, -50.0] {
            // 1 - e^x = -x (1 + x/2 + x²/6 + ...) avoids the cancellation near 0
            let reference =
                if x > -1e-3 { (-x).ln() + x / 2.0 + x * x / 24.0 } else { (1.0 - x.exp()).ln() };
            assert!((ln_1m_exp(x) - reference).abs() < 1e-9 * reference.abs().max(1e-3));
        }
    }
}
