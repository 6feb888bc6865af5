//! Problem instance, fractional and integral designs, and the objective
//! function `f(S) = det(Σ_{i∈S} a_i a_iᵀ)^{1/m}` in both its set/multiset and
//! weighted forms.
//!
//! Index convention: experiments are numbered `0..n` everywhere, including
//! the JSON interchange format.

use crate::error::{Error, Result};
use crate::linalg;
use serde::{Deserialize, Serialize};

/// Whether an experiment may be chosen more than once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "without_reps")]
    WithoutRepetitions,
    #[serde(rename = "with_reps")]
    WithRepetitions,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::WithoutRepetitions => write!(f, "without_reps"),
            Mode::WithRepetitions => write!(f, "with_reps"),
        }
    }
}

/// On-disk form of an instance: `{"m":…, "n":…, "k":…, "mode":…, "vectors":[[…],…]}`
/// with `vectors` a length-`n` outer list of length-`m` rows.
#[derive(Serialize, Deserialize)]
struct InstanceJson {
    m: usize,
    n: usize,
    k: usize,
    mode: Mode,
    vectors: Vec<Vec<f64>>,
}

/// A selection problem: `n` experiment vectors in `m` dimensions, a budget of
/// `k` picks, and the repetition mode.
///
/// Valid instances satisfy `n ≥ k ≥ m ≥ 1`, carry only finite entries, and
/// span all of `R^m` (full column rank); violations are construction errors.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    vectors: Vec<Vec<f64>>,
    m: usize,
    k: usize,
    mode: Mode,
}

impl Instance {
    pub fn new(vectors: Vec<Vec<f64>>, k: usize, mode: Mode) -> Result<Self> {
        let n = vectors.len();
        if n == 0 {
            return Err(Error::BadInstance("no experiment vectors".into()));
        }
        let m = vectors[0].len();
        if m == 0 {
            return Err(Error::BadInstance("zero-dimensional vectors".into()));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != m {
                return Err(Error::BadInstance(format!(
                    "vector {i} has {} entries, expected {m}",
                    v.len()
                )));
            }
            if v.iter().any(|e| !e.is_finite()) {
                return Err(Error::BadInstance(format!("vector {i} has non-finite entries")));
            }
        }
        if !(m <= k && k <= n) {
            return Err(Error::BadInstance(format!(
                "need n >= k >= m >= 1, got n={n} k={k} m={m}"
            )));
        }
        let inst = Instance { vectors, m, k, mode };
        if !inst.has_full_rank() {
            return Err(Error::InfeasibleRank);
        }
        Ok(inst)
    }

    /// Rank-m check on the unweighted information matrix, by pivoted
    /// elimination with a `1e-10 * largest-pivot` threshold.
    fn has_full_rank(&self) -> bool {
        let m = self.m;
        let mut g = match linalg::gram(self, &vec![1.0; self.n()]) {
            Ok(g) => g,
            Err(_) => return false,
        };
        let mut largest_pivot = 0.0f64;
        for col in 0..m {
            let mut best = col;
            let mut best_mag = g.get(col, col).abs();
            for r in col + 1..m {
                if g.get(r, col).abs() > best_mag {
                    best = r;
                    best_mag = g.get(r, col).abs();
                }
            }
            largest_pivot = largest_pivot.max(best_mag);
            if best_mag <= 1e-10 * largest_pivot {
                return false;
            }
            if best != col {
                for c in 0..m {
                    let t = g.get(col, c);
                    g.set(col, c, g.get(best, c));
                    g.set(best, c, t);
                }
            }
            let pivot = g.get(col, col);
            for r in col + 1..m {
                let factor = g.get(r, col) / pivot;
                for c in col..m {
                    g.set(r, c, g.get(r, c) - factor * g.get(col, c));
                }
            }
        }
        true
    }

    pub fn n(&self) -> usize {
        self.vectors.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: InstanceJson =
            serde_json::from_str(s).map_err(|e| Error::BadInstance(e.to_string()))?;
        if raw.vectors.len() != raw.n {
            return Err(Error::BadInstance(format!(
                "field n={} disagrees with {} vectors",
                raw.n,
                raw.vectors.len()
            )));
        }
        if raw.vectors.first().map(Vec::len) != Some(raw.m) {
            return Err(Error::BadInstance(format!("field m={} disagrees with vectors", raw.m)));
        }
        Instance::new(raw.vectors, raw.k, raw.mode)
    }

    pub fn to_json_string(&self) -> String {
        let raw = InstanceJson {
            m: self.m,
            n: self.n(),
            k: self.k,
            mode: self.mode,
            vectors: self.vectors.clone(),
        };
        serde_json::to_string_pretty(&raw).expect("instance serialization cannot fail")
    }
}

/// Objective of an index collection: `det(Σ_{i∈members} a_i a_iᵀ)^{1/m}`.
///
/// Exactly `0` when the information matrix is singular (a legal design with
/// zero objective, not an error). Duplicates are rejected in
/// [`Mode::WithoutRepetitions`].
pub fn objective_of_design(inst: &Instance, members: &[usize]) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::InvalidParams("empty member list".into()));
    }
    for &i in members {
        if i >= inst.n() {
            return Err(Error::InvalidIndex { index: i, n: inst.n() });
        }
    }
    if inst.mode() == Mode::WithoutRepetitions {
        let mut seen = vec![false; inst.n()];
        for &i in members {
            if seen[i] {
                return Err(Error::ModeViolation(format!(
                    "index {i} repeated in without-repetitions mode"
                )));
            }
            seen[i] = true;
        }
    }
    let g = linalg::gram_of_members(inst, members)?;
    Ok(root_det(&g, inst.m()))
}

/// Weighted objective `f(x) = det(Σ_i x_i a_i a_iᵀ)^{1/m}` for `x ≥ 0`.
pub fn objective_of_weights(inst: &Instance, x: &[f64]) -> Result<f64> {
    if x.len() != inst.n() {
        return Err(Error::DimensionError { expected: inst.n(), got: x.len() });
    }
    if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidParams("weights must be finite and nonnegative".into()));
    }
    let g = linalg::gram(inst, x)?;
    Ok(root_det(&g, inst.m()))
}

/// `det(g)^{1/m}` through the log-pivot sum; `0` on singular or non-positive
/// determinants.
pub(crate) fn root_det(g: &linalg::SquareMatrix, m: usize) -> f64 {
    match g.log_det_pos() {
        Some(ld) => (ld / m as f64).exp(),
        None => 0.0,
    }
}

/// Feasible point of the continuous relaxation: nonnegative weights summing
/// to `k` (capped at 1 without repetitions) with its objective value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionalDesign {
    weights: Vec<f64>,
    value: f64,
    mode: Mode,
}

impl FractionalDesign {
    /// Validates feasibility and records `value = f(weights)`.
    ///
    /// Tolerances: `|Σx - k| ≤ 1e-9·k`; caps respected within `1e-12`.
    pub fn new(inst: &Instance, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != inst.n() {
            return Err(Error::DimensionError { expected: inst.n(), got: weights.len() });
        }
        let k = inst.k() as f64;
        let sum: f64 = weights.iter().sum();
        if (sum - k).abs() > 1e-9 * k {
            return Err(Error::InvalidParams(format!("weights sum to {sum}, expected {k}")));
        }
        for (i, w) in weights.iter().enumerate() {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidParams(format!("weight {w} at index {i}")));
            }
            if inst.mode() == Mode::WithoutRepetitions && *w > 1.0 + 1e-12 {
                return Err(Error::ModeViolation(format!(
                    "weight {w} at index {i} exceeds 1 in without-repetitions mode"
                )));
            }
        }
        let value = objective_of_weights(inst, &weights)?;
        Ok(FractionalDesign { weights, value, mode: inst.mode() })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }
}

/// Chosen experiment indices (sorted; duplicates only with repetitions) and
/// the attained objective value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Design {
    members: Vec<usize>,
    value: f64,
}

impl Design {
    pub fn new(inst: &Instance, mut members: Vec<usize>) -> Result<Self> {
        if members.len() != inst.k() {
            return Err(Error::InvalidParams(format!(
                "design has {} members, budget is {}",
                members.len(),
                inst.k()
            )));
        }
        members.sort_unstable();
        let value = objective_of_design(inst, &members)?;
        Ok(Design { members, value })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Multiplicity of index `i`.
    pub fn multiplicity(&self, i: usize) -> usize {
        self.members.iter().filter(|&&j| j == i).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(m: usize) -> Vec<Vec<f64>> {
        (0..m)
            .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    fn sym3() -> Instance {
        Instance::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            2,
            Mode::WithoutRepetitions,
        )
        .unwrap()
    }

    #[test]
    fn objective_of_basis_pair_is_one() {
        let inst = Instance::new(basis(2), 2, Mode::WithoutRepetitions).unwrap();
        assert_eq!(objective_of_design(&inst, &[0, 1]).unwrap(), 1.0);
    }

    #[test]
    fn repeated_vector_gives_zero_with_reps() {
        let inst = Instance::new(basis(2), 2, Mode::WithRepetitions).unwrap();
        assert_eq!(objective_of_design(&inst, &[0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn repeated_vector_is_mode_violation_without_reps() {
        let inst = Instance::new(basis(2), 2, Mode::WithoutRepetitions).unwrap();
        assert!(matches!(
            objective_of_design(&inst, &[0, 0]),
            Err(Error::ModeViolation(_))
        ));
    }

    #[test]
    fn objective_mixed_pair_hand_determinant() {
        // det([[2,1],[1,1]])^{1/2} = 1
        let inst = sym3();
        let v = objective_of_design(&inst, &[0, 2]).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_objective_symbolic_expansion() {
        // det = x1 x2 + x1 x3 + x2 x3 = 3*(4/9) = 4/3 at x = (2/3, 2/3, 2/3)
        let inst = sym3();
        let v = objective_of_weights(&inst, &[2.0 / 3.0; 3].to_vec()).unwrap();
        assert!((v - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn weighted_objective_zero_vector() {
        let inst = sym3();
        assert_eq!(objective_of_weights(&inst, &[0.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn indicator_weights_agree_with_design_objective() {
        let inst = sym3();
        let by_design = objective_of_design(&inst, &[1, 2]).unwrap();
        let by_weights = objective_of_weights(&inst, &[0.0, 1.0, 1.0]).unwrap();
        assert!((by_design - by_weights).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_index_rejected() {
        let inst = sym3();
        assert_eq!(
            objective_of_design(&inst, &[0, 7]),
            Err(Error::InvalidIndex { index: 7, n: 3 })
        );
    }

    #[test]
    fn weight_length_mismatch_rejected() {
        let inst = sym3();
        assert_eq!(
            objective_of_weights(&inst, &[1.0, 1.0]),
            Err(Error::DimensionError { expected: 3, got: 2 })
        );
    }

    #[test]
    fn rank_deficient_instance_rejected() {
        let err = Instance::new(
            vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![3.0, 0.0]],
            2,
            Mode::WithoutRepetitions,
        );
        assert_eq!(err.unwrap_err(), Error::InfeasibleRank);
    }

    #[test]
    fn budget_ordering_enforced() {
        assert!(Instance::new(basis(3), 2, Mode::WithoutRepetitions).is_err());
    }

    #[test]
    fn fractional_design_validation() {
        let inst = sym3();
        let fd = FractionalDesign::new(&inst, vec![2.0 / 3.0; 3]).unwrap();
        assert!((fd.value() - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(FractionalDesign::new(&inst, vec![1.0, 1.0, 1.0]).is_err()); // sums to 3
        assert!(FractionalDesign::new(&inst, vec![1.5, 0.25, 0.25]).is_err()); // cap
    }

    #[test]
    fn design_sorts_members() {
        let inst = sym3();
        let d = Design::new(&inst, vec![2, 0]).unwrap();
        assert_eq!(d.members(), &[0, 2]);
        assert!((d.value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let inst = sym3();
        let s = inst.to_json_string();
        let back = Instance::from_json_str(&s).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn json_field_mismatch_rejected() {
        let s = r#"{"m":2,"n":5,"k":2,"mode":"without_reps","vectors":[[1,0],[0,1]]}"#;
        assert!(Instance::from_json_str(s).is_err());
    }
}
