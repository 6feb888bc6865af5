//! Randomized self-verification: runs the oracle-backed property suite on
//! seeded instances and reports pass/fail counts per check.
//!
//! Every instance goes through the same fixed list of checks, so the grand
//! total is `num_instances × CHECK_NAMES.len()`. Failures record the
//! instance seed for replay.

use crate::bounds;
use crate::derand;
use crate::error::Result;
use crate::exec::map_indexed;
use crate::gen::{self, Family};
use crate::linalg;
use crate::model::{objective_of_design, objective_of_weights, FractionalDesign, Instance, Mode};
use crate::oracle;
use crate::relaxation::{solve_relaxation, SolverConfig};
use crate::sampling::{sequential_subset_probability, RngSeed};
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Suite configuration; defaults mirror the documented verification scale.
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub max_n: usize,
    pub max_m: usize,
    pub max_k: usize,
    pub seed: u64,
    pub num_instances: usize,
    /// Test-only negative control: multiplies every computed conditional
    /// expectation by `1 + h_bias` before oracle comparison. Zero in
    /// production; any sizable bias must drive the suite to failure.
    pub h_bias: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { max_n: 8, max_m: 3, max_k: 4, seed: 0, num_instances: 50, h_bias: 0.0 }
    }
}

/// One check's aggregate over all instances.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passes: usize,
    pub failures: usize,
    pub first_failure_seed: Option<u64>,
}

/// Fixed check list; one outcome per (instance, check).
pub const CHECK_NAMES: [&str; 10] = [
    "cauchy-binet-set",
    "cauchy-binet-weighted",
    "sequential-law-exact",
    "h-proportional-vs-oracle",
    "h-asymptotic-vs-oracle",
    "h-repetitions-vs-oracle",
    "greedy-monotone",
    "floor-proportional",
    "floor-repetitions",
    "relaxation-dominance",
];

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
    pub instances: usize,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.failures == 0)
    }

    pub fn total_checks(&self) -> usize {
        self.checks.iter().map(|c| c.passes + c.failures).sum()
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<28} {:>8} {:>8}  {}\n",
            "check", "passes", "failures", "first failing seed"
        ));
        for c in &self.checks {
            out.push_str(&format!(
                "{:<28} {:>8} {:>8}  {}\n",
                c.name,
                c.passes,
                c.failures,
                c.first_failure_seed.map_or(String::from("-"), |s| s.to_string())
            ));
        }
        out.push_str(&format!(
            "{} instances x {} checks = {} results, {}\n",
            self.instances,
            self.checks.len(),
            self.total_checks(),
            if self.ok() { "all passing" } else { "FAILURES PRESENT" }
        ));
        out
    }
}

struct InstanceChecks {
    seed: u64,
    results: Vec<bool>,
}

/// Runs the whole suite. Pure given the config; instances are generated from
/// `seed` and checked independently (data-parallel under the feature).
pub fn run_suite(cfg: &VerifyConfig) -> VerifyReport {
    let per_instance: Vec<InstanceChecks> = map_indexed(cfg.num_instances, |i| {
        let seed = cfg.seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let results = check_one_instance(seed, cfg).unwrap_or_else(|_| vec![false; CHECK_NAMES.len()]);
        InstanceChecks { seed, results }
    });
    let mut checks: Vec<CheckOutcome> = CHECK_NAMES
        .iter()
        .map(|name| CheckOutcome { name, passes: 0, failures: 0, first_failure_seed: None })
        .collect();
    for inst in &per_instance {
        for (c, &ok) in checks.iter_mut().zip(&inst.results) {
            if ok {
                c.passes += 1;
            } else {
                c.failures += 1;
                c.first_failure_seed.get_or_insert(inst.seed);
            }
        }
    }
    VerifyReport { checks, instances: cfg.num_instances }
}

fn check_one_instance(seed: u64, cfg: &VerifyConfig) -> Result<Vec<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(1..=cfg.max_m);
    let n = rng.gen_range((m + 1).max(3)..=cfg.max_n.max(m + 1).max(3));
    let k = rng.gen_range(m..=cfg.max_k.min(n).max(m));
    let mode = if seed % 2 == 0 { Mode::WithoutRepetitions } else { Mode::WithRepetitions };
    let inst_set =
        gen::generate_instance(m, n, k, Mode::WithoutRepetitions, Family::Gaussian, RngSeed(seed))?;
    let inst_rep = Instance::new(inst_set.vectors().to_vec(), k, Mode::WithRepetitions)?;
    let frac_set = gen::random_fraction_with(&inst_set, &mut rng)?;
    let frac_rep = gen::random_fraction_with(&inst_rep, &mut rng)?;
    let bias = 1.0 + cfg.h_bias;

    let mut results = Vec::with_capacity(CHECK_NAMES.len());

    results.push(check_cauchy_binet_set(&inst_set));
    results.push(check_cauchy_binet_weighted(&inst_set, &mut rng));
    results.push(check_sequential_law(&inst_set, &frac_set).unwrap_or(false));
    results.push(check_h_proportional(&inst_set, &frac_set, bias).unwrap_or(false));
    results.push(check_h_asymptotic(&inst_set, &frac_set, 0.5, bias).unwrap_or(false));
    results.push(check_h_repetitions(&inst_rep, &frac_rep, bias).unwrap_or(false));
    results.push(check_greedy_monotone(&inst_set, &frac_set, &inst_rep, &frac_rep).unwrap_or(false));
    results.push(check_floor_proportional(&inst_set, &frac_set).unwrap_or(false));
    results.push(check_floor_repetitions(&inst_rep, &frac_rep).unwrap_or(false));
    let inst_mode = if mode == Mode::WithoutRepetitions { &inst_set } else { &inst_rep };
    results.push(check_relaxation_dominance(inst_mode).unwrap_or(false));

    Ok(results)
}

/// Mixed relative/absolute comparison for determinant-scale quantities:
/// relative 1e-8 on meaningful values, plus an absolute floor tied to the
/// instance's determinant scale. Exactly-zero conditional expectations
/// (rank-deficient conditioning sets) come back as interpolation noise of a
/// few ulps of the determinant polynomial's value range, which is what the
/// floor absorbs.
fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-8 * a.abs().max(b.abs()) + 1e-10 * scale.max(1.0)
}

fn det_scale(inst: &Instance, frac: &FractionalDesign) -> f64 {
    objective_of_weights(inst, frac.weights())
        .map(|f| f.powi(inst.m() as i32))
        .unwrap_or(1.0)
}

fn check_cauchy_binet_set(inst: &Instance) -> bool {
    let n = inst.n();
    let m = inst.m();
    let all: Vec<usize> = (0..n).collect();
    let lhs = match linalg::gram_of_members(inst, &all) {
        Ok(g) => g.determinant(),
        Err(_) => return false,
    };
    let mut rhs = 0.0;
    for subset in (0..n).combinations(m) {
        match linalg::gram_of_members(inst, &subset) {
            Ok(g) => rhs += g.determinant().max(0.0),
            Err(_) => return false,
        }
    }
    (lhs - rhs).abs() <= 1e-8 * lhs.abs().max(rhs.abs()).max(1e-9)
}

fn check_cauchy_binet_weighted(inst: &Instance, rng: &mut ChaCha8Rng) -> bool {
    let n = inst.n();
    let m = inst.m();
    let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let lhs = match linalg::gram(inst, &x) {
        Ok(g) => g.determinant(),
        Err(_) => return false,
    };
    let mut rhs = 0.0;
    for subset in (0..n).combinations(m) {
        let w: f64 = subset.iter().map(|&i| x[i]).product();
        match linalg::gram_of_members(inst, &subset) {
            Ok(g) => rhs += w * g.determinant().max(0.0),
            Err(_) => return false,
        }
    }
    (lhs - rhs).abs() <= 1e-8 * lhs.abs().max(rhs.abs()).max(1e-9)
}

fn check_sequential_law(inst: &Instance, frac: &FractionalDesign) -> Result<bool> {
    let law = oracle::exact_law_proportional(inst, frac)?;
    for (outcome, &p) in law.outcomes.iter().zip(&law.probs) {
        let q = sequential_subset_probability(inst, frac, outcome)?;
        if (p - q).abs() > 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_h_proportional(inst: &Instance, frac: &FractionalDesign, bias: f64) -> Result<bool> {
    let law = oracle::exact_law_proportional(inst, frac)?;
    let scale = det_scale(inst, frac);
    for size in 0..=inst.k() {
        for s in (0..inst.n()).combinations(size) {
            let h = bias * derand::cond_exp_proportional(inst, frac, &s)?;
            let o = oracle::exact_conditional_expectation(&law, inst, &s)?;
            if !close(h, o, scale) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn check_h_asymptotic(
    inst: &Instance,
    frac: &FractionalDesign,
    eps: f64,
    bias: f64,
) -> Result<bool> {
    let law = oracle::exact_law_bernoulli_conditioned(inst, frac, eps)?;
    let scale = det_scale(inst, frac);
    for size in 0..=inst.k() {
        for s in (0..inst.n()).combinations(size) {
            let h = bias * derand::cond_exp_asymptotic(inst, frac, eps, &s)?;
            let o = oracle::exact_conditional_expectation(&law, inst, &s)?;
            if !close(h, o, scale) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn check_h_repetitions(inst: &Instance, frac: &FractionalDesign, bias: f64) -> Result<bool> {
    let law = oracle::exact_law_multinomial(inst, frac)?;
    let scale = det_scale(inst, frac);
    for size in 0..=inst.k() {
        for s in (0..inst.n()).combinations_with_replacement(size) {
            let h = bias * derand::cond_exp_repetitions(inst, frac, &s)?;
            let o = oracle::exact_conditional_expectation(&law, inst, &s)?;
            if !close(h, o, scale) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

enum SchemeTag {
    Proportional,
    Asymptotic(f64),
    Repetitions,
}

/// Walks the greedy path step by step, asserting the best candidate never
/// drops the conditional expectation and the final determinant clears H(∅).
fn check_greedy_monotone(
    inst_set: &Instance,
    frac_set: &FractionalDesign,
    inst_rep: &Instance,
    frac_rep: &FractionalDesign,
) -> Result<bool> {
    for tag in [SchemeTag::Proportional, SchemeTag::Asymptotic(0.5), SchemeTag::Repetitions] {
        let (inst, frac) = match tag {
            SchemeTag::Repetitions => (inst_rep, frac_rep),
            _ => (inst_set, frac_set),
        };
        let h_of = |s: &[usize]| -> Result<f64> {
            match tag {
                SchemeTag::Proportional => derand::cond_exp_proportional(inst, frac, s),
                SchemeTag::Asymptotic(eps) => derand::cond_exp_asymptotic(inst, frac, eps, s),
                SchemeTag::Repetitions => derand::cond_exp_repetitions(inst, frac, s),
            }
        };
        let mut members: Vec<usize> = Vec::new();
        let h_empty = h_of(&[])?;
        let mut h_cur = h_empty;
        while members.len() < inst.k() {
            let candidates: Vec<usize> = match tag {
                SchemeTag::Repetitions => (0..inst.n()).collect(),
                _ => (0..inst.n()).filter(|j| !members.contains(j)).collect(),
            };
            let mut best: Option<(usize, f64)> = None;
            for &j in &candidates {
                let mut trial = members.clone();
                trial.push(j);
                trial.sort_unstable();
                let h = h_of(&trial)?;
                match best {
                    Some((_, bv)) if bv >= h => {}
                    _ => best = Some((j, h)),
                }
            }
            let (j, h_best) = best.expect("candidates nonempty");
            if h_best < h_cur - 1e-9 {
                return Ok(false);
            }
            members.push(j);
            members.sort_unstable();
            h_cur = h_best;
        }
        let final_det = objective_of_design(inst, &members)?.powi(inst.m() as i32);
        if final_det < h_empty - 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_floor_proportional(inst: &Instance, frac: &FractionalDesign) -> Result<bool> {
    let d = derand::derandomize_proportional(inst, frac)?;
    let g = bounds::g_without_reps(inst.m(), inst.n(), inst.k())?;
    let lhs = d.value().powi(inst.m() as i32);
    let rhs = frac.value().powi(inst.m() as i32) / g;
    Ok(lhs >= rhs - 1e-6)
}

fn check_floor_repetitions(inst: &Instance, frac: &FractionalDesign) -> Result<bool> {
    let d = derand::derandomize_repetitions(inst, frac)?;
    let g = bounds::g_with_reps(inst.m(), inst.k())?;
    let lhs = d.value().powi(inst.m() as i32);
    let rhs = frac.value().powi(inst.m() as i32) / g.powi(inst.m() as i32);
    Ok(lhs >= rhs - 1e-6)
}

fn check_relaxation_dominance(inst: &Instance) -> Result<bool> {
    let out = solve_relaxation(inst, &SolverConfig::default())?;
    let best = oracle::brute_force_optimum(inst)?;
    Ok(out.fractional.value() >= best.value() - 1e-6)
}
