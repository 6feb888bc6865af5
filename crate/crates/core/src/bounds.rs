//! Approximation-ratio quantities and sample-size thresholds.
//!
//! The proportional scheme's guarantee is `f(S) ≥ g(m,n,k)^{-1/m} · ŵ` with
//!
//! ```text
//! g(m,n,k) = max { Σ_{τ=0}^{m}  C(n-m, k-τ) / ((n-m)^{m-τ} C(n-m, k-m))
//!                             · C(m,τ) / m^τ · (k-y)^{m-τ} y^τ
//!                : mk/n ≤ y ≤ m }
//! ```
//!
//! and satisfies `g^{1/m} ≤ min(e, 1 + k/(k-m+1))`, hence the universal
//! `1/e` floor. The with-repetitions scheme has the sharper
//! `g(m,k) = [(k-m)! k^m / k!]^{1/m} ≤ min(e, k/(k-m+1))`.
//!
//! Threshold forms: the Bernoulli scheme is a `(1-ε)`-approximation once
//! `k ≥ 4m/ε + (12/ε²) ln(1/ε)` (natural logarithm; the underlying tail
//! bound is an e-exponential), and the with-repetitions scheme once
//! `k ≥ (m-1)/ε`.
//!
//! All binomials and factorials are evaluated as log-gamma sums; `n, k` up
//! to a few hundred overflow direct factorials.

use crate::error::{Error, Result};
use serde::Serialize;

/// Which rounding scheme a certificate covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    #[serde(rename = "proportional")]
    Proportional,
    #[serde(rename = "asymptotic")]
    Asymptotic,
    #[serde(rename = "repetitions")]
    Repetitions,
}

/// A certified lower bound `f(S) ≥ alpha · ŵ` for a scheme at the given
/// parameters, with any threshold context that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct ApproximationCertificate {
    pub scheme: Scheme,
    /// Guaranteed ratio in `(0, 1]`.
    pub alpha: f64,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Budget threshold attached to an `eps`-dependent guarantee.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<u64>,
    /// `0.5 - ε` floor when the large-budget regime applies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corollary_floor: Option<f64>,
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

fn ln_binomial(n: usize, r: usize) -> Option<f64> {
    if r > n {
        return None;
    }
    Some(ln_factorial(n) - ln_factorial(r) - ln_factorial(n - r))
}

/// The maximand of `g(m,n,k)` at a fixed `y`.
fn g_poly(m: usize, n: usize, k: usize, y: f64) -> f64 {
    let mut total = 0.0;
    for tau in 0..=m {
        let Some(top) = ln_binomial(n - m, k - tau) else {
            continue; // C(n-m, k-τ) = 0: no completions of that shape
        };
        // (k-y)^{m-τ} vanishes at the y = k endpoint (only when n = k)
        if k as f64 - y <= 0.0 && tau < m {
            continue;
        }
        let mut ln_term = top - ln_binomial(n - m, k - m).expect("k <= n");
        if m - tau > 0 {
            ln_term -= (m - tau) as f64 * ((n - m) as f64).ln();
            ln_term += (m - tau) as f64 * (k as f64 - y).ln();
        }
        ln_term += ln_binomial(m, tau).expect("tau <= m");
        if tau > 0 {
            ln_term -= tau as f64 * (m as f64).ln();
            ln_term += tau as f64 * y.ln();
        }
        total += ln_term.exp();
    }
    total
}

/// Worst-case correlation gap `g(m,n,k)` for the proportional scheme.
///
/// The single-variable maximand is scanned on a 1024-point grid over
/// `[mk/n, m]` (endpoints included) and the best bracket is refined by
/// golden-section search to `|Δy| ≤ 1e-10`; the grid guards against any
/// non-unimodality, the refinement supplies the precision.
pub fn g_without_reps(m: usize, n: usize, k: usize) -> Result<f64> {
    if !(1 <= m && m <= k && k <= n) {
        return Err(Error::InvalidParams(format!(
            "need 1 <= m <= k <= n, got m={m} k={k} n={n}"
        )));
    }
    let lo = m as f64 * k as f64 / n as f64;
    let hi = m as f64;
    if hi - lo <= 0.0 {
        return Ok(g_poly(m, n, k, hi));
    }
    const GRID: usize = 1024;
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..=GRID {
        let y = lo + (hi - lo) * i as f64 / GRID as f64;
        let v = g_poly(m, n, k, y);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    // golden-section refinement on the bracket around the best grid point
    let mut a = lo + (hi - lo) * best_i.saturating_sub(1) as f64 / GRID as f64;
    let mut b = lo + (hi - lo) * (best_i + 1).min(GRID) as f64 / GRID as f64;
    let inv_phi = 0.618_033_988_749_894_9;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = g_poly(m, n, k, c);
    let mut fd = g_poly(m, n, k, d);
    while b - a > 1e-10 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = g_poly(m, n, k, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = g_poly(m, n, k, d);
        }
    }
    Ok(best_v.max(fc).max(fd))
}

/// Certificate for the proportional scheme: `alpha = g(m,n,k)^{-1/m} ≥ 1/e`.
pub fn ratio_without_reps(m: usize, n: usize, k: usize) -> Result<ApproximationCertificate> {
    let g = g_without_reps(m, n, k)?;
    let alpha = g.powf(-1.0 / m as f64);
    debug_assert!(alpha >= 1.0 / std::f64::consts::E - 1e-12);
    Ok(ApproximationCertificate {
        scheme: Scheme::Proportional,
        alpha,
        m,
        n: Some(n),
        k,
        eps: None,
        threshold: None,
        corollary_floor: None,
    })
}

/// Large-budget floor for the proportional scheme: `Some(0.5 - ε)` when
/// `k ≥ (m-1)/(2ε)`.
pub fn corollary_floor(m: usize, k: usize, eps: f64) -> Result<Option<f64>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParams(format!("eps must lie in (0,1), got {eps}")));
    }
    Ok((k as f64 >= (m as f64 - 1.0) / (2.0 * eps)).then_some(0.5 - eps))
}

/// Budget threshold past which the Bernoulli scheme is `(1-ε)`-optimal:
/// `ceil(4m/ε + (12/ε²) ln(1/ε))`.
pub fn threshold_asymptotic(m: usize, eps: f64) -> Result<u64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParams(format!("eps must lie in (0,1), got {eps}")));
    }
    let v = 4.0 * m as f64 / eps + 12.0 / (eps * eps) * (1.0 / eps).ln();
    Ok(v.ceil() as u64)
}

/// Certified ratio for the Bernoulli scheme, when one applies.
///
/// `(1-ε)` once `k` clears [`threshold_asymptotic`]; otherwise the tail
/// bound `(1+ε)^{-1} (1 - e^{-(εk-(1+ε)m)² / (k(2+ε)(1+ε))})^{1/m}` when it
/// is positive. `None` when neither regime certifies anything.
pub fn ratio_asymptotic(
    m: usize,
    n: usize,
    k: usize,
    eps: f64,
) -> Result<Option<ApproximationCertificate>> {
    let threshold = threshold_asymptotic(m, eps)?;
    let cert = |alpha: f64| ApproximationCertificate {
        scheme: Scheme::Asymptotic,
        alpha,
        m,
        n: Some(n),
        k,
        eps: Some(eps),
        threshold: Some(threshold),
        corollary_floor: None,
    };
    if k as u64 >= threshold {
        return Ok(Some(cert(1.0 - eps)));
    }
    let margin = eps * k as f64 - (1.0 + eps) * m as f64;
    if margin > 0.0 {
        let tail = 1.0 - (-margin * margin / (k as f64 * (2.0 + eps) * (1.0 + eps))).exp();
        if tail > 0.0 {
            let alpha = tail.powf(1.0 / m as f64) / (1.0 + eps);
            return Ok(Some(cert(alpha)));
        }
    }
    Ok(None)
}

/// With-repetitions gap `g(m,k) = [(k-m)! k^m / k!]^{1/m}`, in log space.
pub fn g_with_reps(m: usize, k: usize) -> Result<f64> {
    if !(1 <= m && m <= k) {
        return Err(Error::InvalidParams(format!("need 1 <= m <= k, got m={m} k={k}")));
    }
    let ln_g = (ln_factorial(k - m) + m as f64 * (k as f64).ln() - ln_factorial(k)) / m as f64;
    Ok(ln_g.exp())
}

/// Certificate for the with-repetitions scheme: `alpha = 1/g(m,k)`, plus the
/// `(1-ε)` threshold `ceil((m-1)/ε)` for the queried `ε`.
pub fn ratio_with_reps(m: usize, k: usize, eps_query: f64) -> Result<ApproximationCertificate> {
    if !(eps_query > 0.0 && eps_query < 1.0) {
        return Err(Error::InvalidParams(format!("eps must lie in (0,1), got {eps_query}")));
    }
    let g = g_with_reps(m, k)?;
    let threshold = ((m as f64 - 1.0) / eps_query).ceil() as u64;
    Ok(ApproximationCertificate {
        scheme: Scheme::Repetitions,
        alpha: 1.0 / g,
        m,
        n: None,
        k,
        eps: Some(eps_query),
        threshold: Some(threshold),
        corollary_floor: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn g_is_one_for_unit_budget() {
        // closed form at m = k = 1: y + (n-k)(k-y)/(k(n-1)) ≡ 1
        for n in 1..=10 {
            let g = g_without_reps(1, n, 1).unwrap();
            assert!((g - 1.0).abs() < 1e-9, "g(1,{n},1) = {g}");
        }
    }

    #[test]
    fn g_forced_instance_is_one() {
        let g = g_without_reps(2, 2, 2).unwrap();
        assert!((g - 1.0).abs() < 1e-9, "g(2,2,2) = {g}");
    }

    #[test]
    fn proposition_cap_on_grid() {
        for m in 1..=5usize {
            for k in m..=12 {
                for n in k..=24 {
                    let root = g_without_reps(m, n, k).unwrap().powf(1.0 / m as f64);
                    let cap = E.min(1.0 + k as f64 / (k - m + 1) as f64);
                    assert!(
                        root <= cap + 1e-9,
                        "g(m={m},n={n},k={k})^(1/m) = {root} > {cap}"
                    );
                }
            }
        }
    }

    #[test]
    fn g_monotone_in_n() {
        for m in 1..=5usize {
            for k in m..=12 {
                let mut prev = 0.0;
                for n in k..=24 {
                    let g = g_without_reps(m, n, k).unwrap();
                    assert!(g >= prev - 1e-9, "g(m={m},n={n},k={k}) decreased: {g} < {prev}");
                    prev = g;
                }
            }
        }
    }

    #[test]
    fn ratio_floor_one_over_e() {
        for m in 1..=5usize {
            for k in m..=10 {
                for n in k..=20 {
                    let cert = ratio_without_reps(m, n, k).unwrap();
                    assert!(cert.alpha >= 1.0 / E - 1e-12);
                    assert!(cert.alpha <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn ratio_unit_dimension() {
        let cert = ratio_without_reps(1, 6, 1).unwrap();
        assert!((cert.alpha - 1.0).abs() < 1e-9);
    }

    #[test]
    fn corollary_regime_arithmetic() {
        // m=2, ε̃=0.25: threshold k ≥ 2, floor 0.25
        assert_eq!(corollary_floor(2, 2, 0.25).unwrap(), Some(0.25));
        assert_eq!(corollary_floor(2, 1, 0.25).unwrap(), None);
    }

    #[test]
    fn asymptotic_threshold_values() {
        assert_eq!(threshold_asymptotic(2, 0.5).unwrap(), 50);
        assert_eq!(threshold_asymptotic(1, 0.9).unwrap(), 7);
    }

    #[test]
    fn asymptotic_threshold_limit() {
        // log term vanishes as ε → 1⁻
        let t = threshold_asymptotic(3, 0.999_999).unwrap();
        assert_eq!(t, 13); // ceil(12.000012…)
    }

    #[test]
    fn threshold_eps_range_checked() {
        assert!(threshold_asymptotic(2, 0.0).is_err());
        assert!(threshold_asymptotic(2, 1.0).is_err());
    }

    #[test]
    fn g_with_reps_values() {
        assert!((g_with_reps(1, 5).unwrap() - 1.0).abs() < 1e-12);
        assert!((g_with_reps(2, 2).unwrap() - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn g_with_reps_capped() {
        for m in 1..=6usize {
            for k in m.max(6)..=20 {
                let g = g_with_reps(m, k).unwrap();
                assert!(g <= E.min(k as f64 / (k - m + 1) as f64) + 1e-12);
            }
            for k in m..=20 {
                assert!(g_with_reps(m, k).unwrap() <= E + 1e-12);
            }
        }
    }

    #[test]
    fn with_reps_certificate() {
        let cert = ratio_with_reps(2, 2, 0.25).unwrap();
        assert!((cert.alpha - 1.0 / 2.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(cert.threshold, Some(4)); // ceil(1/0.25)
    }

    #[test]
    fn asymptotic_certificate_regimes() {
        // past the threshold: exactly 1 - ε
        let c = ratio_asymptotic(2, 100, 60, 0.5).unwrap().unwrap();
        assert!((c.alpha - 0.5).abs() < 1e-12);
        // below the threshold but with positive margin: tail bound in (0, 1)
        let c = ratio_asymptotic(2, 40, 20, 0.5).unwrap().unwrap();
        assert!(c.alpha > 0.0 && c.alpha < 0.5);
        // no certificate when the margin is nonpositive
        assert!(ratio_asymptotic(3, 10, 5, 0.3).unwrap().is_none());
    }

    #[test]
    fn invalid_parameter_orders() {
        assert!(g_without_reps(3, 4, 2).is_err());
        assert!(g_with_reps(3, 2).is_err());
    }
}
