//! Randomized rounding of a fractional design into a budget-`k` design.
//!
//! Three schemes:
//!
//! * [`sample_proportional`] — draws a size-`k` subset with probability
//!   proportional to `Π_{j∈S} x̂_j`, implemented sequentially: index `j` is
//!   included with probability `x̂_j · e_{k-1-|S|}(rest) / e_{k-|S|}(undecided)`
//!   where the elementary symmetric values run over the not-yet-decided
//!   indices. Exact early termination once `k` are chosen or the rest are
//!   forced in.
//! * [`sample_bernoulli_fill`] — includes each index independently with the
//!   deflated probability `x̂_i/(1+ε)`, rejects draws larger than `k`, and
//!   completes undersized draws greedily by best objective gain.
//! * [`sample_with_repetitions`] — `k` independent categorical draws with
//!   probabilities `x̂_i/k` (multiset output).
//!
//! [`sample_expanded`] realizes the with-repetitions scheme at a finite
//! rational resolution `q`: it draws a uniform `k`-subset of a pool holding
//! `q·x̂_i` copies of index `i`; its law converges to the categorical scheme
//! as `q` grows.
//!
//! All samplers are deterministic functions of `(inputs, seed)`; the stream
//! generator is ChaCha8 keyed by the 64-bit seed, so runs are reproducible
//! across platforms. Monte Carlo batches derive per-trial seeds as
//! `seed ^ trial_index`.

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{Design, FractionalDesign, Instance, Mode};
use crate::symfun::elem_sym_prefix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// Seed for the crate's counter-stream generator (ChaCha8).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Per-trial derived seed for Monte Carlo batches.
    pub fn for_trial(self, trial: u64) -> RngSeed {
        RngSeed(self.0 ^ trial)
    }
}

pub(crate) fn rng_from(seed: RngSeed) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.0)
}

/// Rejection cap for the Bernoulli scheme before falling back to the
/// proportional sampler.
pub const MAX_BERNOULLI_ATTEMPTS: usize = 1_000_000;

fn check_frac(inst: &Instance, frac: &FractionalDesign, want: Mode) -> Result<()> {
    if frac.weights().len() != inst.n() {
        return Err(Error::DimensionError { expected: inst.n(), got: frac.weights().len() });
    }
    if inst.mode() != want || frac.mode() != want {
        return Err(Error::ModeViolation(format!(
            "sampler requires {want} (instance: {}, fractional: {})",
            inst.mode(),
            frac.mode()
        )));
    }
    Ok(())
}

/// Inclusion probability of index `j` given `s` already chosen, with
/// `rest` the weights of indices still undecided after `j`.
///
/// Numerator and denominator come from one DP table over `rest`; the
/// denominator adds the `j`-containing completions, so the ratio is a
/// probability by construction.
fn step_probability(xj: f64, rest: &[f64], need: usize) -> Result<f64> {
    debug_assert!(need >= 1);
    let pref = elem_sym_prefix(rest, need)?;
    let with_j = xj * pref[need - 1];
    let den = pref[need] + with_j;
    if den <= 0.0 {
        return Err(Error::UnreachableCondition);
    }
    Ok(with_j / den)
}

/// Size-`k` subset distributed proportionally to the product of weights.
pub fn sample_proportional(
    inst: &Instance,
    frac: &FractionalDesign,
    seed: RngSeed,
) -> Result<Design> {
    check_frac(inst, frac, Mode::WithoutRepetitions)?;
    let mut rng = rng_from(seed);
    let members = proportional_walk(inst, frac, &mut rng)?;
    Design::new(inst, members)
}

fn proportional_walk(
    inst: &Instance,
    frac: &FractionalDesign,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    let n = inst.n();
    let k = inst.k();
    let x = frac.weights();
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for j in 0..n {
        let s = chosen.len();
        if s == k {
            break;
        }
        if n - j == k - s {
            chosen.extend(j..n); // every remaining index is forced in
            break;
        }
        let p = step_probability(x[j], &x[j + 1..], k - s)?;
        if rng.gen::<f64>() < p {
            chosen.push(j);
        }
    }
    Ok(chosen)
}

/// Probability that the sequential walk outputs exactly `subset`
/// (a sorted size-`k` index set), as the product of its per-step
/// inclusion/exclusion probabilities. Used to check the walk against the
/// closed-form subset law.
pub fn sequential_subset_probability(
    inst: &Instance,
    frac: &FractionalDesign,
    subset: &[usize],
) -> Result<f64> {
    check_frac(inst, frac, Mode::WithoutRepetitions)?;
    let n = inst.n();
    let k = inst.k();
    if subset.len() != k {
        return Err(Error::InvalidParams(format!("subset size {} != k={k}", subset.len())));
    }
    let member = |j: usize| subset.binary_search(&j).is_ok();
    let x = frac.weights();
    let mut prob = 1.0;
    let mut s = 0usize;
    for j in 0..n {
        if s == k {
            if member(j) {
                return Ok(0.0); // subset larger than the walk's output
            }
            continue;
        }
        if n - j == k - s {
            // forced completion: the walk takes everything that is left
            return if (j..n).all(member) { Ok(prob) } else { Ok(0.0) };
        }
        let p = step_probability(x[j], &x[j + 1..], k - s)?;
        if member(j) {
            prob *= p;
            s += 1;
        } else {
            prob *= 1.0 - p;
        }
    }
    Ok(if s == k { prob } else { 0.0 })
}

/// One unconditioned inflated-Bernoulli draw: index `i` enters with
/// probability `x̂_i/(1+ε)`.
pub fn sample_bernoulli_once(
    frac: &FractionalDesign,
    eps: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let infl = 1.0 + eps;
    frac.weights()
        .iter()
        .enumerate()
        .filter(|(_, &w)| rng.gen::<f64>() < w / infl)
        .map(|(i, _)| i)
        .collect()
}

/// Bernoulli scheme: rejected while the draw exceeds `k`, greedily filled to
/// exactly `k` afterwards.
///
/// The rejection loop is capped at [`MAX_BERNOULLI_ATTEMPTS`]; past the cap
/// the proportional sampler takes over on the same stream, so the call still
/// terminates deterministically for a fixed seed.
pub fn sample_bernoulli_fill(
    inst: &Instance,
    frac: &FractionalDesign,
    eps: f64,
    seed: RngSeed,
) -> Result<Design> {
    check_frac(inst, frac, Mode::WithoutRepetitions)?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParams(format!("eps must be positive, got {eps}")));
    }
    let k = inst.k();
    let mut rng = rng_from(seed);
    for _ in 0..MAX_BERNOULLI_ATTEMPTS {
        let mut draw = sample_bernoulli_once(frac, eps, &mut rng);
        if draw.len() <= k {
            greedy_fill(inst, &mut draw, k)?;
            return Design::new(inst, draw);
        }
    }
    let members = proportional_walk(inst, frac, &mut rng)?;
    Design::new(inst, members)
}

/// Adds indices until `members` has `target` entries, each time taking the
/// candidate maximizing the objective of the extended design (ties to the
/// lowest index). While every candidate still leaves the information matrix
/// singular, candidates are ranked by leverage against the regularized
/// matrix instead so the fill makes spanning progress.
pub(crate) fn greedy_fill(inst: &Instance, members: &mut Vec<usize>, target: usize) -> Result<()> {
    while members.len() < target {
        let in_set: Vec<bool> = {
            let mut b = vec![false; inst.n()];
            for &i in members.iter() {
                b[i] = true;
            }
            b
        };
        let mut best: Option<(usize, f64)> = None;
        for j in 0..inst.n() {
            if in_set[j] {
                continue;
            }
            members.push(j);
            let val = crate::model::objective_of_design(inst, members)?;
            members.pop();
            match best {
                Some((_, bv)) if bv >= val => {}
                _ => best = Some((j, val)),
            }
        }
        let (j, val) = best.ok_or(Error::InvalidParams("no candidates left to fill".into()))?;
        if val > 0.0 {
            members.push(j);
        } else {
            let candidates: Vec<usize> = (0..inst.n()).filter(|j| !in_set[*j]).collect();
            members.push(pick_by_leverage(inst, members, &candidates)?);
        }
        members.sort_unstable();
    }
    Ok(())
}

/// Highest `a_jᵀ (G_S + 1e-8 I)⁻¹ a_j` among candidates, ties to lowest
/// index. Resolves argmax steps where every extension has objective zero.
pub(crate) fn pick_by_leverage(
    inst: &Instance,
    members: &[usize],
    candidates: &[usize],
) -> Result<usize> {
    let mut g = linalg::gram_of_members(inst, members)?;
    g.add_diagonal(1e-8);
    let lu = g.factor().regular()?;
    let mut best: Option<(usize, f64)> = None;
    for &j in candidates {
        let a = inst.vector(j);
        let z = lu.solve(a);
        let score: f64 = a.iter().zip(&z).map(|(ai, zi)| ai * zi).sum();
        match best {
            Some((_, bv)) if bv >= score => {}
            _ => best = Some((j, score)),
        }
    }
    best.map(|(j, _)| j)
        .ok_or(Error::InvalidParams("no candidates for leverage fill".into()))
}

/// With-repetitions scheme: `k` categorical draws with probabilities `x̂_i/k`.
pub fn sample_with_repetitions(
    inst: &Instance,
    frac: &FractionalDesign,
    seed: RngSeed,
) -> Result<Design> {
    check_frac(inst, frac, Mode::WithRepetitions)?;
    let mut rng = rng_from(seed);
    let k = inst.k();
    let x = frac.weights();
    let total: f64 = x.iter().sum();
    let mut members = Vec::with_capacity(k);
    for _ in 0..k {
        members.push(categorical(x, total, rng.gen::<f64>()));
    }
    Design::new(inst, members)
}

fn categorical(weights: &[f64], total: f64, u: f64) -> usize {
    let target = u * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if target < acc {
                return i;
            }
        }
    }
    last_positive // u landed on the terminal rounding sliver
}

/// Finite-resolution with-repetitions sampler: uniform `k`-subset of a pool
/// with `q·x̂_i` copies of index `i`.
///
/// Requires every `q·x̂_i` to be integral within `1e-9`.
pub fn sample_expanded(
    inst: &Instance,
    frac: &FractionalDesign,
    q: u64,
    seed: RngSeed,
) -> Result<Design> {
    check_frac(inst, frac, Mode::WithRepetitions)?;
    if q == 0 {
        return Err(Error::InvalidParams("expansion factor q must be positive".into()));
    }
    let counts = expansion_counts(frac, q)?;
    let pool: u64 = counts.iter().sum();
    debug_assert_eq!(pool, q * inst.k() as u64);
    // cumulative slot boundaries for slot -> index lookup
    let mut bounds = Vec::with_capacity(counts.len());
    let mut acc = 0u64;
    for &c in &counts {
        acc += c;
        bounds.push(acc);
    }
    let mut rng = rng_from(seed);
    let slots = sparse_sample_without_replacement(pool, inst.k(), &mut rng);
    let members: Vec<usize> =
        slots.into_iter().map(|s| bounds.partition_point(|&b| b <= s)).collect();
    Design::new(inst, members)
}

/// Copy counts `q·x̂_i`, validated integral.
pub(crate) fn expansion_counts(frac: &FractionalDesign, q: u64) -> Result<Vec<u64>> {
    let mut counts = Vec::with_capacity(frac.weights().len());
    for (i, &w) in frac.weights().iter().enumerate() {
        let scaled = w * q as f64;
        let rounded = scaled.round();
        if (scaled - rounded).abs() > 1e-9 || rounded < 0.0 {
            return Err(Error::NotRationalized { index: i, value: scaled });
        }
        counts.push(rounded as u64);
    }
    Ok(counts)
}

/// Uniform `k`-subset of `0..pool` via sparse Fisher-Yates (O(k) memory).
fn sparse_sample_without_replacement(pool: u64, k: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut swapped: HashMap<u64, u64> = HashMap::new();
    let mut out = Vec::with_capacity(k);
    for i in 0..k as u64 {
        let j = rng.gen_range(i..pool);
        let vi = *swapped.get(&i).unwrap_or(&i);
        let vj = *swapped.get(&j).unwrap_or(&j);
        out.push(vj);
        swapped.insert(j, vi);
    }
    out
}
