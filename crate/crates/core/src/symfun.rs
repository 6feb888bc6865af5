//! Elementary symmetric polynomials and univariate polynomial utilities.
//!
//! `e_r(x_1..x_t) = Σ_{|S|=r} Π_{i∈S} x_i` is the coefficient of `y^r` in
//! `Π_i (1 + x_i y)`. It is evaluated by the `O(t·r)` in-place dynamic
//! program rather than FFT product trees: all additions are of nonnegative
//! terms (no cancellation) and desk-scale `t` keeps the DP faster anyway.
//!
//! Coefficient extraction for determinant polynomials goes through plain
//! evaluation at positive integer nodes followed by Newton divided-difference
//! interpolation (Leja-ordered). Accuracy advisory: the monomial basis on
//! integer nodes is exponentially ill-conditioned in the degree, so
//! individual coefficients of high-degree polynomials lose precision —
//! noticeably past degree ~12, severely past a few tens. The conditional
//! expectation ratios built on these extractions are dominated by low-order,
//! all-positive terms and hold 1e-8-level accuracy at desk scale (n ≤ ~12,
//! verified against enumeration oracles); callers pushing n much beyond that
//! should expect the extracted coefficients, and eventually the ratios, to
//! degrade gradually rather than fail loudly.

use crate::error::{Error, Result};

/// Dense univariate polynomial, `coeffs[r]` multiplying `y^r`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialCoeffs {
    pub coeffs: Vec<f64>,
}

impl PolynomialCoeffs {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Horner evaluation.
    pub fn evaluate(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
}

/// `e_r` of the given weights; `e_0 = 1` always.
pub fn elem_sym(weights: &[f64], r: usize) -> Result<f64> {
    Ok(*elem_sym_prefix(weights, r)?.last().expect("prefix is nonempty"))
}

/// All of `e_0 .. e_{r_max}` in one DP sweep.
pub fn elem_sym_prefix(weights: &[f64], r_max: usize) -> Result<Vec<f64>> {
    if r_max > weights.len() {
        return Err(Error::InvalidOrder { order: r_max, len: weights.len() });
    }
    let mut e = vec![0.0; r_max + 1];
    e[0] = 1.0;
    for (t, &x) in weights.iter().enumerate() {
        let top = r_max.min(t + 1);
        for r in (1..=top).rev() {
            e[r] += x * e[r - 1];
        }
    }
    Ok(e)
}

/// Interpolates the unique degree-`≤ d` polynomial through `d+1` points with
/// pairwise distinct abscissae, returning monomial coefficients.
///
/// Newton divided differences expanded to the monomial basis. Nodes are
/// visited in Leja order (greedily maximizing the distance product to the
/// nodes already taken), which keeps the Newton basis balanced and buys an
/// order of magnitude of coefficient accuracy at the degrees used here.
pub fn interpolate(points: &[(f64, f64)]) -> Result<PolynomialCoeffs> {
    if points.is_empty() {
        return Err(Error::InvalidParams("no interpolation points".into()));
    }
    let d = points.len();
    for i in 0..d {
        for j in i + 1..d {
            if points[i].0 == points[j].0 {
                return Err(Error::DegenerateNodes);
            }
        }
    }
    let points = leja_ordered(points);
    let ts: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mut dd: Vec<f64> = points.iter().map(|p| p.1).collect();
    for j in 1..d {
        for i in (j..d).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (ts[i] - ts[i - j]);
        }
    }
    // expand Newton basis products into monomials
    let mut coeffs = vec![0.0; d];
    let mut basis = vec![0.0; d];
    basis[0] = 1.0;
    coeffs[0] = dd[0];
    for j in 1..d {
        // basis <- basis * (y - ts[j-1])
        for i in (0..j).rev() {
            basis[i + 1] += basis[i];
            basis[i] *= -ts[j - 1];
        }
        for (c, b) in coeffs.iter_mut().zip(&basis) {
            *c += dd[j] * b;
        }
    }
    Ok(PolynomialCoeffs { coeffs })
}

fn leja_ordered(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut remaining: Vec<(f64, f64)> = points.to_vec();
    let mut ordered = Vec::with_capacity(remaining.len());
    let first = remaining
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.abs().partial_cmp(&b.1 .0.abs()).expect("finite nodes"))
        .map(|(i, _)| i)
        .expect("nonempty");
    ordered.push(remaining.swap_remove(first));
    while !remaining.is_empty() {
        let next = remaining
            .iter()
            .enumerate()
            .max_by(|a, b| {
                let score = |p: &(f64, f64)| -> f64 {
                    ordered.iter().map(|q: &(f64, f64)| (p.0 - q.0).abs().ln()).sum()
                };
                score(a.1).partial_cmp(&score(b.1)).expect("finite nodes")
            })
            .map(|(i, _)| i)
            .expect("nonempty");
        ordered.push(remaining.swap_remove(next));
    }
    ordered
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e0_is_one() {
        assert_eq!(elem_sym(&[0.3, 9.0, 2.5], 0).unwrap(), 1.0);
        assert_eq!(elem_sym(&[], 0).unwrap(), 1.0);
    }

    #[test]
    fn direct_expansion_small() {
        // e_2(1, 0.5, 0.5) = 0.5 + 0.5 + 0.25
        let v = elem_sym(&[1.0, 0.5, 0.5], 2).unwrap();
        assert!((v - 1.25).abs() < 1e-15);
    }

    #[test]
    fn all_ones_counts_subsets() {
        let t = 9;
        let w = vec![1.0; t];
        let binom = |n: usize, r: usize| -> f64 {
            let mut v = 1.0;
            for i in 0..r {
                v = v * (n - i) as f64 / (i + 1) as f64;
            }
            v
        };
        for r in 0..=t {
            assert!((elem_sym(&w, r).unwrap() - binom(t, r)).abs() < 1e-9);
        }
    }

    #[test]
    fn order_out_of_range() {
        assert_eq!(
            elem_sym(&[1.0, 2.0], 3),
            Err(Error::InvalidOrder { order: 3, len: 2 })
        );
    }

    #[test]
    fn prefix_expands_product() {
        // (1+y)(1+2y)(1+3y) = 1 + 6y + 11y² + 6y³
        let p = elem_sym_prefix(&[1.0, 2.0, 3.0], 3).unwrap();
        assert_eq!(p, vec![1.0, 6.0, 11.0, 6.0]);
    }

    #[test]
    fn prefix_trivial_cases() {
        assert_eq!(elem_sym_prefix(&[], 0).unwrap(), vec![1.0]);
        assert_eq!(elem_sym_prefix(&[0.7], 1).unwrap(), vec![1.0, 0.7]);
    }

    #[test]
    fn prefix_matches_single_orders() {
        let w = [0.9, 0.1, 0.4, 0.8, 0.2];
        let p = elem_sym_prefix(&w, 5).unwrap();
        for r in 0..=5 {
            assert_eq!(p[r], elem_sym(&w, r).unwrap());
        }
    }

    #[test]
    fn interpolate_line() {
        let p = interpolate(&[(0.0, 1.0), (1.0, 2.0)]).unwrap();
        assert_eq!(p.coeffs, vec![1.0, 1.0]);
    }

    #[test]
    fn interpolate_square_symmetric_nodes() {
        let p = interpolate(&[(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert!(p.coeffs[0].abs() < 1e-15);
        assert!(p.coeffs[1].abs() < 1e-15);
        assert!((p.coeffs[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interpolate_expanded_product() {
        // (1+2t)(1+3t) sampled at 0,1,2 -> 1 + 5t + 6t²
        let f = |t: f64| (1.0 + 2.0 * t) * (1.0 + 3.0 * t);
        let p = interpolate(&[(0.0, f(0.0)), (1.0, f(1.0)), (2.0, f(2.0))]).unwrap();
        for (c, want) in p.coeffs.iter().zip([1.0, 5.0, 6.0]) {
            assert!((c - want).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicate_nodes_rejected() {
        assert_eq!(
            interpolate(&[(1.0, 0.0), (1.0, 1.0)]),
            Err(Error::DegenerateNodes)
        );
    }

    #[test]
    fn newton_identity_spot_check() {
        // e1² - 2 e2 = Σ x_i²
        let w = [0.3, 1.7, 0.2, 0.9, 2.4];
        let e1 = elem_sym(&w, 1).unwrap();
        let e2 = elem_sym(&w, 2).unwrap();
        let sumsq: f64 = w.iter().map(|x| x * x).sum();
        assert!((e1 * e1 - 2.0 * e2 - sumsq).abs() < 1e-9);
    }
}
