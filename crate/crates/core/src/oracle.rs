//! Brute-force reference implementations for desk-scale verification.
//!
//! Deliberately naive: full enumeration of designs and laws, hard caps
//! instead of sampling. The one subtlety is conditioning for multiset laws:
//! the with-repetitions scheme builds its output by sequential draws, so
//! "given S" means "given the first |S| draws formed S". Relative to the
//! unordered outcome law that weights each outcome R by the number of
//! ordered embeddings of S into R, `Π_i (M_R(i))·(M_R(i)-1)…`, a falling
//! factorial per index. For set-valued laws the weight collapses to the
//! plain containment indicator, recovering
//! `Σ_{R ⊇ S} Pr[R] det(R) / Pr[S ⊆ 𝒮]`.

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{Design, FractionalDesign, Instance, Mode};
use crate::sampling::expansion_counts;
use itertools::Itertools;

/// How many enumeration states the oracles will touch before refusing.
pub const STATE_CAP: u128 = 1_000_000;

/// Largest `n` for full law enumeration.
pub const LAW_N_CAP: usize = 12;

/// A fully enumerated outcome distribution.
///
/// Outcomes are sorted index lists (multisets with repetitions); probs are
/// nonnegative and sum to 1 within 1e-12. Zero-probability outcomes are
/// dropped.
#[derive(Debug, Clone)]
pub struct ExactLaw {
    pub outcomes: Vec<Vec<usize>>,
    pub probs: Vec<f64>,
}

impl ExactLaw {
    fn normalized(outcomes: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::UnreachableCondition);
        }
        let mut o = Vec::new();
        let mut p = Vec::new();
        for (outcome, w) in outcomes.into_iter().zip(weights) {
            if w > 0.0 {
                o.push(outcome);
                p.push(w / total);
            }
        }
        debug_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        Ok(ExactLaw { outcomes: o, probs: p })
    }

    /// Empirical distribution of sampled outcomes (each a sorted index list).
    pub fn empirical(samples: &[Vec<usize>]) -> Self {
        let mut counts: std::collections::BTreeMap<Vec<usize>, usize> = Default::default();
        for s in samples {
            *counts.entry(s.clone()).or_default() += 1;
        }
        let n = samples.len() as f64;
        let (outcomes, probs) =
            counts.into_iter().map(|(o, c)| (o, c as f64 / n)).unzip();
        ExactLaw { outcomes, probs }
    }
}

/// Total variation distance `½ Σ |p - q|` over the union of supports.
pub fn total_variation(a: &ExactLaw, b: &ExactLaw) -> f64 {
    let mut merged: std::collections::BTreeMap<&[usize], (f64, f64)> = Default::default();
    for (o, p) in a.outcomes.iter().zip(&a.probs) {
        merged.entry(o).or_default().0 += p;
    }
    for (o, p) in b.outcomes.iter().zip(&b.probs) {
        merged.entry(o).or_default().1 += p;
    }
    0.5 * merged.values().map(|(p, q)| (p - q).abs()).sum::<f64>()
}

fn binomial_u128(n: u128, r: u128) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

fn check_cap(states: u128) -> Result<()> {
    if states > STATE_CAP {
        return Err(Error::TooLarge { states, cap: STATE_CAP });
    }
    Ok(())
}

/// Exhaustive optimum of the selection problem. Ties resolve to the
/// lexicographically smallest member list.
pub fn brute_force_optimum(inst: &Instance) -> Result<Design> {
    let n = inst.n();
    let k = inst.k();
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut consider = |members: Vec<usize>, value: f64| match &best {
        Some((_, bv)) if *bv >= value => {}
        _ => best = Some((members, value)),
    };
    match inst.mode() {
        Mode::WithoutRepetitions => {
            check_cap(binomial_u128(n as u128, k as u128))?;
            for members in (0..n).combinations(k) {
                let value = crate::model::objective_of_design(inst, &members)?;
                consider(members, value);
            }
        }
        Mode::WithRepetitions => {
            check_cap(binomial_u128((n + k - 1) as u128, k as u128))?;
            for members in (0..n).combinations_with_replacement(k) {
                let value = crate::model::objective_of_design(inst, &members)?;
                consider(members, value);
            }
        }
    }
    let (members, _) = best.expect("feasible design exists");
    Design::new(inst, members)
}

/// Closed-form law of the proportional scheme: `Pr[S] ∝ Π_{j∈S} x̂_j`.
pub fn exact_law_proportional(inst: &Instance, frac: &FractionalDesign) -> Result<ExactLaw> {
    if inst.mode() != Mode::WithoutRepetitions {
        return Err(Error::ModeViolation("proportional law needs the set mode".into()));
    }
    let n = inst.n();
    let k = inst.k();
    if n > LAW_N_CAP {
        return Err(Error::TooLarge { states: n as u128, cap: LAW_N_CAP as u128 });
    }
    check_cap(binomial_u128(n as u128, k as u128))?;
    let x = frac.weights();
    let mut outcomes = Vec::new();
    let mut weights = Vec::new();
    for members in (0..n).combinations(k) {
        let w: f64 = members.iter().map(|&i| x[i]).product();
        outcomes.push(members);
        weights.push(w);
    }
    ExactLaw::normalized(outcomes, weights)
}

/// Closed-form law of the with-repetitions scheme: multinomial over `k`
/// categorical draws with probabilities `x̂_i/k`.
pub fn exact_law_multinomial(inst: &Instance, frac: &FractionalDesign) -> Result<ExactLaw> {
    if inst.mode() != Mode::WithRepetitions {
        return Err(Error::ModeViolation("multinomial law needs the multiset mode".into()));
    }
    let n = inst.n();
    let k = inst.k();
    if n > LAW_N_CAP {
        return Err(Error::TooLarge { states: n as u128, cap: LAW_N_CAP as u128 });
    }
    check_cap(binomial_u128((n + k - 1) as u128, k as u128))?;
    let x = frac.weights();
    let kf = k as f64;
    let ln_fact = |r: usize| -> f64 { (2..=r).map(|i| (i as f64).ln()).sum() };
    let mut outcomes = Vec::new();
    let mut weights = Vec::new();
    for members in (0..n).combinations_with_replacement(k) {
        let mut ln_p = ln_fact(k);
        let mut ok = true;
        for &i in &members {
            if x[i] <= 0.0 {
                ok = false;
                break;
            }
            ln_p += (x[i] / kf).ln();
        }
        if !ok {
            continue;
        }
        // divide by Π multiplicity!
        let mut j = 0;
        while j < members.len() {
            let mut r = j + 1;
            while r < members.len() && members[r] == members[j] {
                r += 1;
            }
            ln_p -= ln_fact(r - j);
            j = r;
        }
        outcomes.push(members);
        weights.push(ln_p.exp());
    }
    ExactLaw::normalized(outcomes, weights)
}

/// Law of one inflated-Bernoulli draw conditioned on producing at most `k`
/// indices. Outcomes of every size `0..=k` appear.
pub fn exact_law_bernoulli_conditioned(
    inst: &Instance,
    frac: &FractionalDesign,
    eps: f64,
) -> Result<ExactLaw> {
    if inst.mode() != Mode::WithoutRepetitions {
        return Err(Error::ModeViolation("Bernoulli law needs the set mode".into()));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParams(format!("eps must be positive, got {eps}")));
    }
    let n = inst.n();
    let k = inst.k();
    if n > LAW_N_CAP {
        return Err(Error::TooLarge { states: n as u128, cap: LAW_N_CAP as u128 });
    }
    check_cap(1u128 << n)?;
    let p: Vec<f64> = frac.weights().iter().map(|&w| w / (1.0 + eps)).collect();
    let mut outcomes = Vec::new();
    let mut weights = Vec::new();
    for mask in 0u64..(1u64 << n) {
        if (mask.count_ones() as usize) > k {
            continue;
        }
        let mut w = 1.0;
        let mut members = Vec::new();
        for i in 0..n {
            if mask >> i & 1 == 1 {
                w *= p[i];
                members.push(i);
            } else {
                w *= 1.0 - p[i];
            }
        }
        outcomes.push(members);
        weights.push(w);
    }
    ExactLaw::normalized(outcomes, weights)
}

/// Law of the finite-resolution expanded sampler at factor `q`:
/// `Pr[R] = Π_i C(q·x̂_i, M_R(i)) / C(qk, k)`.
pub fn exact_law_expanded(inst: &Instance, frac: &FractionalDesign, q: u64) -> Result<ExactLaw> {
    if inst.mode() != Mode::WithRepetitions {
        return Err(Error::ModeViolation("expanded law needs the multiset mode".into()));
    }
    let n = inst.n();
    let k = inst.k();
    if n > LAW_N_CAP {
        return Err(Error::TooLarge { states: n as u128, cap: LAW_N_CAP as u128 });
    }
    check_cap(binomial_u128((n + k - 1) as u128, k as u128))?;
    let counts = expansion_counts(frac, q)?;
    let mut outcomes = Vec::new();
    let mut weights = Vec::new();
    for members in (0..n).combinations_with_replacement(k) {
        let mut w = 1.0f64;
        let mut j = 0;
        while j < members.len() {
            let idx = members[j];
            let mut r = j + 1;
            while r < members.len() && members[r] == idx {
                r += 1;
            }
            w *= binomial_u128(counts[idx] as u128, (r - j) as u128) as f64;
            j = r;
        }
        if w > 0.0 {
            outcomes.push(members);
            weights.push(w);
        }
    }
    ExactLaw::normalized(outcomes, weights)
}

/// Conditional expectation of the outcome determinant given the (multi)set
/// `s`, with embedding-count conditioning (see the module docs).
pub fn exact_conditional_expectation(
    law: &ExactLaw,
    inst: &Instance,
    s: &[usize],
) -> Result<f64> {
    let mut s_mult = vec![0usize; inst.n()];
    for &i in s {
        if i >= inst.n() {
            return Err(Error::InvalidIndex { index: i, n: inst.n() });
        }
        s_mult[i] += 1;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let mut r_mult = vec![0usize; inst.n()];
    for (outcome, &p) in law.outcomes.iter().zip(&law.probs) {
        r_mult.iter_mut().for_each(|c| *c = 0);
        for &i in outcome {
            r_mult[i] += 1;
        }
        let mut w = 1.0f64;
        for i in 0..inst.n() {
            for d in 0..s_mult[i] {
                w *= (r_mult[i] as f64) - d as f64;
            }
            if w <= 0.0 {
                w = 0.0;
                break;
            }
        }
        if w > 0.0 {
            den += p * w;
            if !outcome.is_empty() {
                num += p * w * linalg::gram_of_members(inst, outcome)?.determinant().max(0.0);
            }
        }
    }
    if den <= 0.0 {
        return Err(Error::UnreachableCondition);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym3(mode: Mode) -> (Instance, FractionalDesign) {
        let inst = Instance::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            2,
            mode,
        )
        .unwrap();
        let frac = FractionalDesign::new(&inst, vec![2.0 / 3.0; 3]).unwrap();
        (inst, frac)
    }

    #[test]
    fn brute_force_basis() {
        let inst = Instance::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            2,
            Mode::WithoutRepetitions,
        )
        .unwrap();
        let d = brute_force_optimum(&inst).unwrap();
        assert_eq!(d.members(), &[0, 1]);
        assert!((d.value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn brute_force_lexicographic_tie() {
        let (inst, _) = sym3(Mode::WithoutRepetitions);
        let d = brute_force_optimum(&inst).unwrap();
        assert_eq!(d.members(), &[0, 1], "all pairs tie at value 1");
    }

    #[test]
    fn brute_force_duplicated_basis() {
        let inst = Instance::new(
            vec![
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
            ],
            2,
            Mode::WithoutRepetitions,
        )
        .unwrap();
        let d = brute_force_optimum(&inst).unwrap();
        assert_eq!(d.members(), &[0, 1]);
        assert!((d.value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn proportional_law_enumeration() {
        let (inst, _) = sym3(Mode::WithoutRepetitions);
        let frac = FractionalDesign::new(&inst, vec![1.0, 0.5, 0.5]).unwrap();
        let law = exact_law_proportional(&inst, &frac).unwrap();
        let lookup = |s: &[usize]| -> f64 {
            law.outcomes
                .iter()
                .position(|o| o == s)
                .map(|i| law.probs[i])
                .unwrap_or(0.0)
        };
        assert!((lookup(&[0, 1]) - 0.4).abs() < 1e-12);
        assert!((lookup(&[0, 2]) - 0.4).abs() < 1e-12);
        assert!((lookup(&[1, 2]) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn multinomial_law_two_coins() {
        let inst = Instance::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            2,
            Mode::WithRepetitions,
        )
        .unwrap();
        let frac = FractionalDesign::new(&inst, vec![1.0, 1.0]).unwrap();
        let law = exact_law_multinomial(&inst, &frac).unwrap();
        let lookup = |s: &[usize]| -> f64 {
            law.outcomes
                .iter()
                .position(|o| o == s)
                .map(|i| law.probs[i])
                .unwrap_or(0.0)
        };
        assert!((lookup(&[0, 0]) - 0.25).abs() < 1e-12);
        assert!((lookup(&[0, 1]) - 0.5).abs() < 1e-12);
        assert!((lookup(&[1, 1]) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_conditioned_normalizes() {
        let (inst, frac) = sym3(Mode::WithoutRepetitions);
        let law = exact_law_bernoulli_conditioned(&inst, &frac, 0.5).unwrap();
        assert!((law.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(law.outcomes.iter().all(|o| o.len() <= 2));
        assert!(law.outcomes.iter().any(|o| o.is_empty()));
    }

    #[test]
    fn conditional_expectation_unconditioned() {
        // multinomial law, S = ∅, symmetric instance: 6 of 9 ordered draws
        // give determinant 1
        let (inst, frac) = sym3(Mode::WithRepetitions);
        let law = exact_law_multinomial(&inst, &frac).unwrap();
        let e = exact_conditional_expectation(&law, &inst, &[]).unwrap();
        assert!((e - 2.0 / 3.0).abs() < 1e-12, "E[det] = {e}");
    }

    #[test]
    fn conditional_expectation_proportional_symmetric() {
        let (inst, frac) = sym3(Mode::WithoutRepetitions);
        let law = exact_law_proportional(&inst, &frac).unwrap();
        let e = exact_conditional_expectation(&law, &inst, &[]).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expanded_law_pair_counting() {
        // q = 2, x̂ = (1,1): pool {0,0,1,1}; Pr[{0,1}] = 4/6
        let inst = Instance::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            2,
            Mode::WithRepetitions,
        )
        .unwrap();
        let frac = FractionalDesign::new(&inst, vec![1.0, 1.0]).unwrap();
        let law = exact_law_expanded(&inst, &frac, 2).unwrap();
        let lookup = |s: &[usize]| -> f64 {
            law.outcomes
                .iter()
                .position(|o| o == s)
                .map(|i| law.probs[i])
                .unwrap_or(0.0)
        };
        assert!((lookup(&[0, 1]) - 4.0 / 6.0).abs() < 1e-12);
        assert!((lookup(&[0, 0]) - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn expanded_q1_point_mass() {
        let inst = Instance::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            2,
            Mode::WithRepetitions,
        )
        .unwrap();
        let frac = FractionalDesign::new(&inst, vec![1.0, 1.0]).unwrap();
        let law = exact_law_expanded(&inst, &frac, 1).unwrap();
        assert_eq!(law.outcomes, vec![vec![0, 1]]);
        assert!((law.probs[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cap_enforced() {
        let vectors: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![(i as f64).cos(), (i as f64).sin()])
            .collect();
        let inst = Instance::new(vectors, 30, Mode::WithoutRepetitions).unwrap();
        assert!(matches!(brute_force_optimum(&inst), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn unreachable_conditioning() {
        let (inst, frac) = sym3(Mode::WithoutRepetitions);
        let law = exact_law_proportional(&inst, &frac).unwrap();
        // conditioning on a triple under a pair law is unreachable
        assert_eq!(
            exact_conditional_expectation(&law, &inst, &[0, 0, 0, 0]),
            Err(Error::UnreachableCondition)
        );
    }
}
