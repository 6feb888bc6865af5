//! Seeded instance and fractional-design generators used by the CLI, the
//! verification suite and the tests.

use crate::error::{Error, Result};
use crate::model::{FractionalDesign, Instance, Mode};
use crate::sampling::RngSeed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Built-in instance families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// I.i.d. standard normal entries.
    Gaussian,
    /// Gaussian with columns mixed by a random rotation times
    /// `diag(1, 1/2, …, 1/m)`: anisotropic, mildly ill-conditioned.
    Correlated,
    /// Standard basis vectors cycled: `a_i = e_{i mod m}`.
    DuplicatedBasis,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Family::Gaussian),
            "correlated" => Ok(Family::Correlated),
            "duplicated-basis" => Ok(Family::DuplicatedBasis),
            other => Err(Error::InvalidParams(format!("unknown family '{other}'"))),
        }
    }
}

/// Box-Muller standard normal draw.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Deterministic instance from `(family, seed)`.
pub fn generate_instance(
    m: usize,
    n: usize,
    k: usize,
    mode: Mode,
    family: Family,
    seed: RngSeed,
) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    // a degenerate random draw is astronomically unlikely but cheap to retry
    for _ in 0..16 {
        let vectors = match family {
            Family::Gaussian => gaussian_vectors(m, n, &mut rng),
            Family::Correlated => {
                let x = gaussian_vectors(m, n, &mut rng);
                let q = random_rotation(m, &mut rng);
                // A = X · (Q · diag(1, 1/2, …, 1/m))
                x.iter()
                    .map(|row| {
                        (0..m)
                            .map(|c| {
                                let col_scale = 1.0 / (c + 1) as f64;
                                row.iter()
                                    .enumerate()
                                    .map(|(t, v)| v * q[t][c])
                                    .sum::<f64>()
                                    * col_scale
                            })
                            .collect()
                    })
                    .collect()
            }
            Family::DuplicatedBasis => (0..n)
                .map(|i| (0..m).map(|j| if i % m == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        };
        match Instance::new(vectors, k, mode) {
            Ok(inst) => return Ok(inst),
            Err(Error::InfeasibleRank) if family != Family::DuplicatedBasis => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InfeasibleRank)
}

fn gaussian_vectors(m: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..m).map(|_| normal(rng)).collect()).collect()
}

/// Random rotation by Gram-Schmidt on a Gaussian matrix, determinant +1.
fn random_rotation(m: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..m).map(|_| normal(rng)).collect())
        .collect();
    for c in 0..m {
        for prev in 0..c {
            let dot: f64 = (0..m).map(|r| cols[c][r] * cols[prev][r]).sum();
            for r in 0..m {
                cols[c][r] -= dot * cols[prev][r];
            }
        }
        let norm: f64 = cols[c].iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in cols[c].iter_mut() {
            *v /= norm;
        }
    }
    // determinant sign fix: flip the last column if the rotation is improper
    if rotation_det_sign(&cols) < 0.0 {
        for r in 0..m {
            cols[m - 1][r] = -cols[m - 1][r];
        }
    }
    // return row-major Q with Q[r][c] = cols[c][r]
    (0..m).map(|r| (0..m).map(|c| cols[c][r]).collect()).collect()
}

fn rotation_det_sign(cols: &[Vec<f64>]) -> f64 {
    let m = cols.len();
    let entries: Vec<f64> = (0..m)
        .flat_map(|r| (0..m).map(move |c| cols[c][r]))
        .collect();
    match crate::linalg::SquareMatrix::from_rows(m, entries) {
        Ok(q) => q.determinant().signum(),
        Err(_) => 1.0,
    }
}

/// Random feasible fractional design: `Σx = k`, box respected, strictly
/// positive weights (so every conditioning event is reachable).
pub fn random_fraction(inst: &Instance, seed: RngSeed) -> Result<FractionalDesign> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    random_fraction_with(inst, &mut rng)
}

/// Harness entry mirroring the verification suite's stream consumption.
pub fn random_fraction_harness(inst: &Instance, rng: &mut ChaCha8Rng) -> Result<FractionalDesign> {
    random_fraction_with(inst, rng)
}

pub(crate) fn random_fraction_with(
    inst: &Instance,
    rng: &mut ChaCha8Rng,
) -> Result<FractionalDesign> {
    let n = inst.n();
    let k = inst.k() as f64;
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let sum: f64 = x.iter().sum();
    for v in x.iter_mut() {
        *v *= k / sum;
    }
    if inst.mode() == Mode::WithoutRepetitions {
        // clip at the cap and push the excess onto coordinates with room
        for _ in 0..64 {
            for v in x.iter_mut() {
                *v = v.min(1.0);
            }
            let deficit = k - x.iter().sum::<f64>();
            if deficit <= 1e-12 * k {
                break;
            }
            let room: f64 = x.iter().map(|v| 1.0 - v).sum();
            for v in x.iter_mut() {
                *v += deficit * (1.0 - *v) / room;
            }
        }
    }
    FractionalDesign::new(inst, x)
}
