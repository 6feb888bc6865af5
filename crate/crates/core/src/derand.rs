//! Deterministic counterparts of the samplers by the method of conditional
//! expectations.
//!
//! Each scheme admits a closed form for
//! `H(S) = E[det(Σ_{i∈𝒮} a_i a_iᵀ) | S ⊆ 𝒮, scheme conditioning]`,
//! and the greedy loop repeatedly adds the candidate maximizing `H(S ∪ {j})`.
//! Every step satisfies `max_j H(S∪{j}) ≥ H(S)`, so the final design's
//! determinant is at least `H(∅)`, turning the samplers' expectation
//! guarantees into deterministic ones.
//!
//! The conditional expectations reduce to univariate coefficient
//! extraction. For the proportional scheme with chosen set `S` (`s = |S|`):
//!
//! ```text
//! N(t) = Π_{i∉S} (1 + x̂_i t) · det( Σ_{i∈S} a_i a_iᵀ
//!                                  + Σ_{i∉S} (x̂_i t / (1 + x̂_i t)) a_i a_iᵀ )
//! H(S) = [t^{k-s}] N(t) / e_{k-s}(x̂ restricted off S)
//! ```
//!
//! Expanding `det` by the weighted subset-determinant identity shows
//! `[t^{k-s}] N(t)` is exactly the sum over m-subsets `R` of
//! `Π_{j∈R∖S} x̂_j · det(Σ_{i∈R} a_i a_iᵀ) · e_{k-s-|R∖S|}(x̂ off S∪R)`,
//! the numerator of the conditional expectation. `N` is a polynomial of
//! degree ≤ n−s, so its coefficients come from evaluation at the positive
//! integer nodes `1..=n-s+1` and Newton interpolation (positive nodes stay
//! clear of the poles `t = -1/x̂_i` of the rational weight factors).
//!
//! The conditioned-Bernoulli scheme uses the same construction with
//! transformed weights `z_i = x̂_i / (1+ε−x̂_i)` and sums coefficients
//! `0..=k-s` in both numerator and denominator (one term per admissible
//! outcome size). The with-repetitions scheme needs only the degree-m
//! polynomial `det(t·M(x̂) + Σ_{i∈S} a_i a_iᵀ)`: with coefficients `c_r`,
//!
//! ```text
//! H(S) = c_0 + Σ_{r=1}^{min(k-s,m)} (k-s)(k-s-1)…(k-s-r+1) / k^r · c_r
//! ```
//!
//! (the `c_0` term is `det(Σ_{i∈S} a_i a_iᵀ)`, nonzero once `S` spans; it
//! belongs to the conditional expectation and is kept.)

use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::linalg;
use crate::model::{Design, FractionalDesign, Instance, Mode};
use crate::sampling::pick_by_leverage;
use crate::symfun::{elem_sym_prefix, interpolate};

/// A conditional expectation value attached to its conditioning set.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalExpectation {
    /// Conditioning index collection (sorted; multiset with repetitions).
    pub base_set: Vec<usize>,
    /// `H(base_set) ≥ 0`.
    pub value: f64,
}

impl ConditionalExpectation {
    pub fn proportional(
        inst: &Instance,
        frac: &FractionalDesign,
        base_set: &[usize],
    ) -> Result<Self> {
        Ok(ConditionalExpectation {
            base_set: sorted(base_set),
            value: cond_exp_proportional(inst, frac, base_set)?,
        })
    }

    pub fn asymptotic(
        inst: &Instance,
        frac: &FractionalDesign,
        eps: f64,
        base_set: &[usize],
    ) -> Result<Self> {
        Ok(ConditionalExpectation {
            base_set: sorted(base_set),
            value: cond_exp_asymptotic(inst, frac, eps, base_set)?,
        })
    }

    pub fn repetitions(
        inst: &Instance,
        frac: &FractionalDesign,
        base_set: &[usize],
    ) -> Result<Self> {
        Ok(ConditionalExpectation {
            base_set: sorted(base_set),
            value: cond_exp_repetitions(inst, frac, base_set)?,
        })
    }
}

fn sorted(s: &[usize]) -> Vec<usize> {
    let mut v = s.to_vec();
    v.sort_unstable();
    v
}

fn validate_subset(inst: &Instance, s: &[usize], allow_dups: bool) -> Result<()> {
    if s.len() > inst.k() {
        return Err(Error::InvalidParams(format!(
            "conditioning set of size {} exceeds budget {}",
            s.len(),
            inst.k()
        )));
    }
    let mut seen = vec![false; inst.n()];
    for &i in s {
        if i >= inst.n() {
            return Err(Error::InvalidIndex { index: i, n: inst.n() });
        }
        if !allow_dups {
            if seen[i] {
                return Err(Error::ModeViolation(format!("index {i} repeated in subset")));
            }
            seen[i] = true;
        }
    }
    Ok(())
}

/// Coefficients of `N(t)` for effective off-set weights `w` (entries of `w`
/// at positions in `s` are ignored). Degree ≤ n − |s|.
fn numerator_coeffs(inst: &Instance, w: &[f64], s: &[usize]) -> Result<Vec<f64>> {
    let n = inst.n();
    let mut in_s = vec![false; n];
    for &i in s {
        in_s[i] = true;
    }
    let base = linalg::gram_of_members(inst, s)?;
    let degree = n - s.len();
    let mut points = Vec::with_capacity(degree + 1);
    for node in 1..=degree + 1 {
        let t = node as f64;
        let mut g = base.clone();
        let mut prefactor = 1.0;
        for i in 0..n {
            if in_s[i] || w[i] == 0.0 {
                continue;
            }
            let wt = w[i] * t;
            g.add_scaled_outer(inst.vector(i), wt / (1.0 + wt));
            prefactor *= 1.0 + wt;
        }
        points.push((t, prefactor * g.determinant()));
    }
    Ok(interpolate(&points)?.coeffs)
}

/// `H(S)` for the proportional scheme.
///
/// Errors with [`Error::UnreachableCondition`] when fewer than `k−s`
/// positive weights remain outside `S` (the conditioning event has
/// probability zero).
pub fn cond_exp_proportional(
    inst: &Instance,
    frac: &FractionalDesign,
    s: &[usize],
) -> Result<f64> {
    require_mode(inst, frac, Mode::WithoutRepetitions)?;
    validate_subset(inst, s, false)?;
    let k = inst.k();
    if s.len() == k {
        return Ok(linalg::gram_of_members(inst, s)?.determinant().max(0.0));
    }
    let need = k - s.len();
    let off: Vec<f64> = off_weights(inst, frac.weights(), s);
    let den = elem_sym_prefix(&off, need)?[need];
    if den <= 0.0 {
        return Err(Error::UnreachableCondition);
    }
    let num = numerator_coeffs(inst, frac.weights(), s)?[need];
    Ok((num / den).max(0.0))
}

/// `H(S)` for the conditioned-Bernoulli scheme at inflation `ε`.
pub fn cond_exp_asymptotic(
    inst: &Instance,
    frac: &FractionalDesign,
    eps: f64,
    s: &[usize],
) -> Result<f64> {
    require_mode(inst, frac, Mode::WithoutRepetitions)?;
    validate_subset(inst, s, false)?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParams(format!("eps must be positive, got {eps}")));
    }
    let k = inst.k();
    if s.len() == k {
        return Ok(linalg::gram_of_members(inst, s)?.determinant().max(0.0));
    }
    let need = k - s.len();
    let z: Vec<f64> = frac.weights().iter().map(|&x| x / (1.0 + eps - x)).collect();
    let off = off_weights(inst, &z, s);
    let den: f64 = elem_sym_prefix(&off, need)?.iter().sum();
    if den <= 0.0 {
        return Err(Error::UnreachableCondition);
    }
    let coeffs = numerator_coeffs(inst, &z, s)?;
    let num: f64 = coeffs[..=need].iter().sum();
    Ok((num / den).max(0.0))
}

/// `H(S)` for the with-repetitions scheme (`S` a multiset).
pub fn cond_exp_repetitions(
    inst: &Instance,
    frac: &FractionalDesign,
    s: &[usize],
) -> Result<f64> {
    require_mode(inst, frac, Mode::WithRepetitions)?;
    validate_subset(inst, s, true)?;
    let k = inst.k();
    let base = linalg::gram_of_members(inst, s)?;
    if s.len() == k {
        return Ok(base.determinant().max(0.0));
    }
    let m = inst.m();
    let gram_x = linalg::gram(inst, frac.weights())?;
    let mut points = Vec::with_capacity(m + 1);
    for node in 1..=m + 1 {
        let t = node as f64;
        let mut g = base.clone();
        for r in 0..m {
            for c in 0..m {
                g.set(r, c, g.get(r, c) + t * gram_x.get(r, c));
            }
        }
        points.push((t, g.determinant()));
    }
    let coeffs = interpolate(&points)?.coeffs;
    let remaining = k - s.len();
    let mut h = coeffs[0];
    let mut fac = 1.0;
    for r in 1..=remaining.min(m) {
        fac *= (remaining - (r - 1)) as f64 / k as f64;
        h += fac * coeffs[r];
    }
    Ok(h.max(0.0))
}

fn require_mode(inst: &Instance, frac: &FractionalDesign, want: Mode) -> Result<()> {
    if frac.weights().len() != inst.n() {
        return Err(Error::DimensionError { expected: inst.n(), got: frac.weights().len() });
    }
    if inst.mode() != want || frac.mode() != want {
        return Err(Error::ModeViolation(format!(
            "conditional expectation requires {want} (instance: {}, fractional: {})",
            inst.mode(),
            frac.mode()
        )));
    }
    Ok(())
}

fn off_weights(inst: &Instance, w: &[f64], s: &[usize]) -> Vec<f64> {
    let mut in_s = vec![false; inst.n()];
    for &i in s {
        in_s[i] = true;
    }
    (0..inst.n()).filter(|&i| !in_s[i]).map(|i| w[i]).collect()
}

/// Which conditional expectation the greedy loop maximizes.
#[derive(Clone, Copy)]
enum Scheme {
    Proportional,
    Asymptotic(f64),
    Repetitions,
}

/// Greedy derandomization of the proportional scheme.
pub fn derandomize_proportional(inst: &Instance, frac: &FractionalDesign) -> Result<Design> {
    greedy(inst, frac, Scheme::Proportional)
}

/// Greedy derandomization of the conditioned-Bernoulli scheme.
pub fn derandomize_asymptotic(
    inst: &Instance,
    frac: &FractionalDesign,
    eps: f64,
) -> Result<Design> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParams(format!("eps must be positive, got {eps}")));
    }
    greedy(inst, frac, Scheme::Asymptotic(eps))
}

/// Greedy derandomization of the with-repetitions scheme. Candidates are all
/// `n` indices at every step (repetition allowed).
pub fn derandomize_repetitions(inst: &Instance, frac: &FractionalDesign) -> Result<Design> {
    greedy(inst, frac, Scheme::Repetitions)
}

fn greedy(inst: &Instance, frac: &FractionalDesign, scheme: Scheme) -> Result<Design> {
    let n = inst.n();
    let k = inst.k();
    let mut members: Vec<usize> = Vec::with_capacity(k);
    while members.len() < k {
        let candidates: Vec<usize> = match scheme {
            Scheme::Repetitions => (0..n).collect(),
            _ => {
                let mut in_s = vec![false; n];
                for &i in &members {
                    in_s[i] = true;
                }
                (0..n).filter(|&j| !in_s[j]).collect()
            }
        };
        // candidate evaluations are independent; run them data-parallel
        let values: Vec<Result<f64>> = map_indexed(candidates.len(), |ci| {
            let mut trial = members.clone();
            trial.push(candidates[ci]);
            trial.sort_unstable();
            match scheme {
                Scheme::Proportional => cond_exp_proportional(inst, frac, &trial),
                Scheme::Asymptotic(eps) => cond_exp_asymptotic(inst, frac, eps, &trial),
                Scheme::Repetitions => cond_exp_repetitions(inst, frac, &trial),
            }
        });
        let mut best: Option<(usize, f64)> = None;
        for (ci, value) in values.into_iter().enumerate() {
            let value = value?;
            match best {
                Some((_, bv)) if bv >= value => {}
                _ => best = Some((candidates[ci], value)),
            }
        }
        let (j, value) = best.expect("candidate list is nonempty");
        if value > 0.0 {
            members.push(j);
        } else {
            // every extension keeps the expected determinant at zero; rank
            // the candidates by leverage instead so the design gains span
            members.push(pick_by_leverage(inst, &members, &candidates)?);
        }
        members.sort_unstable();
    }
    Design::new(inst, members)
}
