//! Dense small-matrix kernel: LU factorization, determinants, linear solves,
//! information-matrix assembly and leverage scores.
//!
//! Everything here operates on matrices of order `m` or `n` at desk scale
//! (order capped at [`MAX_ORDER`]). Singularity is decided uniformly across
//! the crate by one rule: a pivot whose magnitude falls below
//! `PIVOT_RTOL * max_row_norm` of the input matrix is treated as zero.

use crate::error::{Error, Result};
use crate::model::Instance;

/// Hard cap on matrix order; everything in this crate is m×m or n×n.
pub const MAX_ORDER: usize = 512;

/// Relative pivot cutoff defining singularity for LU factorizations.
pub const PIVOT_RTOL: f64 = 1e-12;

/// Dense square matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    order: usize,
    entries: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(order: usize) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::InvalidParams(format!(
                "matrix order {order} outside 1..={MAX_ORDER}"
            )));
        }
        Ok(SquareMatrix { order, entries: vec![0.0; order * order] })
    }

    pub fn identity(order: usize) -> Result<Self> {
        let mut m = Self::zeros(order)?;
        for i in 0..order {
            m.entries[i * order + i] = 1.0;
        }
        Ok(m)
    }

    /// Builds a matrix from `order * order` row-major entries.
    pub fn from_rows(order: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != order * order {
            return Err(Error::DimensionError { expected: order * order, got: entries.len() });
        }
        if order == 0 || order > MAX_ORDER {
            return Err(Error::InvalidParams(format!(
                "matrix order {order} outside 1..={MAX_ORDER}"
            )));
        }
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(Error::BadInstance("matrix entries must be finite".into()));
        }
        Ok(SquareMatrix { order, entries })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.order + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.entries[r * self.order + c] = v;
    }

    /// Adds `c * v vᵀ` in place.
    pub fn add_scaled_outer(&mut self, v: &[f64], c: f64) {
        debug_assert_eq!(v.len(), self.order);
        for r in 0..self.order {
            let cr = c * v[r];
            for s in 0..self.order {
                self.entries[r * self.order + s] += cr * v[s];
            }
        }
    }

    /// Adds `c` to every diagonal entry.
    pub fn add_diagonal(&mut self, c: f64) {
        for i in 0..self.order {
            self.entries[i * self.order + i] += c;
        }
    }

    pub fn matmul(&self, other: &SquareMatrix) -> Result<SquareMatrix> {
        if other.order != self.order {
            return Err(Error::DimensionError { expected: self.order, got: other.order });
        }
        let n = self.order;
        let mut out = SquareMatrix::zeros(n)?;
        for r in 0..n {
            for t in 0..n {
                let a = self.entries[r * n + t];
                if a == 0.0 {
                    continue;
                }
                for c in 0..n {
                    out.entries[r * n + c] += a * other.entries[t * n + c];
                }
            }
        }
        Ok(out)
    }

    /// Signed determinant by LU with partial pivoting.
    ///
    /// Returns exactly `0.0` as soon as a pivot magnitude drops below
    /// `PIVOT_RTOL` times the largest Euclidean row norm of the input.
    pub fn determinant(&self) -> f64 {
        match self.factor() {
            Factorization::Singular => 0.0,
            Factorization::Regular(lu) => {
                let mut det = lu.perm_sign;
                for i in 0..lu.order {
                    det *= lu.data[i * lu.order + i];
                }
                det
            }
        }
    }

    /// `ln det` for a positive-definite-by-pivots matrix.
    ///
    /// `None` when the matrix is singular under the pivot cutoff or the
    /// signed determinant is not positive.
    pub fn log_det_pos(&self) -> Option<f64> {
        match self.factor() {
            Factorization::Singular => None,
            Factorization::Regular(lu) => {
                let mut sign = lu.perm_sign;
                let mut ld = 0.0;
                for i in 0..lu.order {
                    let p = lu.data[i * lu.order + i];
                    if p < 0.0 {
                        sign = -sign;
                    }
                    ld += p.abs().ln();
                }
                (sign > 0.0).then_some(ld)
            }
        }
    }

    /// Solves `self * z = rhs` for a single right-hand side.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let lu = match self.factor() {
            Factorization::Singular => return Err(Error::SingularGram),
            Factorization::Regular(lu) => lu,
        };
        if rhs.len() != self.order {
            return Err(Error::DimensionError { expected: self.order, got: rhs.len() });
        }
        Ok(lu.solve(rhs))
    }

    /// One-shot factorization reusable across several solves.
    pub fn factor(&self) -> Factorization {
        let n = self.order;
        let mut data = self.entries.clone();
        // scale for the relative pivot cutoff: largest Euclidean row norm
        let mut scale = 0.0f64;
        for r in 0..n {
            let s: f64 = (0..n).map(|c| data[r * n + c] * data[r * n + c]).sum();
            scale = scale.max(s.sqrt());
        }
        if scale == 0.0 {
            return Factorization::Singular;
        }
        let cutoff = PIVOT_RTOL * scale;
        let mut perm = Vec::with_capacity(n);
        let mut perm_sign = 1.0;
        for col in 0..n {
            let mut best = col;
            let mut best_mag = data[col * n + col].abs();
            for r in col + 1..n {
                let mag = data[r * n + col].abs();
                if mag > best_mag {
                    best = r;
                    best_mag = mag;
                }
            }
            if best_mag < cutoff {
                return Factorization::Singular;
            }
            if best != col {
                for c in 0..n {
                    data.swap(col * n + c, best * n + c);
                }
                perm_sign = -perm_sign;
            }
            perm.push(best);
            let pivot = data[col * n + col];
            for r in col + 1..n {
                let factor = data[r * n + col] / pivot;
                data[r * n + col] = factor;
                for c in col + 1..n {
                    data[r * n + c] -= factor * data[col * n + c];
                }
            }
        }
        Factorization::Regular(LuFactors { order: n, data, perm, perm_sign })
    }
}

/// Outcome of [`SquareMatrix::factor`].
pub enum Factorization {
    /// A pivot fell below the relative cutoff.
    Singular,
    Regular(LuFactors),
}

impl Factorization {
    pub fn regular(self) -> Result<LuFactors> {
        match self {
            Factorization::Singular => Err(Error::SingularGram),
            Factorization::Regular(lu) => Ok(lu),
        }
    }
}

/// Packed LU factors with the pivoting row swaps.
pub struct LuFactors {
    order: usize,
    data: Vec<f64>,
    perm: Vec<usize>,
    perm_sign: f64,
}

impl LuFactors {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.order;
        debug_assert_eq!(rhs.len(), n);
        let mut z = rhs.to_vec();
        // apply every row interchange first: the stored unit-lower factors
        // are in the fully pivoted row order
        for col in 0..n {
            z.swap(col, self.perm[col]);
        }
        for col in 0..n {
            for r in col + 1..n {
                z[r] -= self.data[r * n + col] * z[col];
            }
        }
        for col in (0..n).rev() {
            z[col] /= self.data[col * n + col];
            for r in 0..col {
                z[r] -= self.data[r * n + col] * z[col];
            }
        }
        z
    }

    /// `ln det` when positive, as in [`SquareMatrix::log_det_pos`].
    pub fn log_det_pos(&self) -> Option<f64> {
        let mut sign = self.perm_sign;
        let mut ld = 0.0;
        for i in 0..self.order {
            let p = self.data[i * self.order + i];
            if p < 0.0 {
                sign = -sign;
            }
            ld += p.abs().ln();
        }
        (sign > 0.0).then_some(ld)
    }
}

/// Weighted information matrix `Σ_i x_i a_i a_iᵀ` (m×m, exactly symmetric).
///
/// Symmetry is enforced by computing the upper triangle and mirroring it.
pub fn gram(inst: &Instance, x: &[f64]) -> Result<SquareMatrix> {
    if x.len() != inst.n() {
        return Err(Error::DimensionError { expected: inst.n(), got: x.len() });
    }
    let m = inst.m();
    let mut g = SquareMatrix::zeros(m)?;
    for (i, xi) in x.iter().enumerate() {
        if *xi == 0.0 {
            continue;
        }
        let a = inst.vector(i);
        for r in 0..m {
            let c_r = xi * a[r];
            for c in r..m {
                g.entries[r * m + c] += c_r * a[c];
            }
        }
    }
    for r in 0..m {
        for c in r + 1..m {
            g.entries[c * m + r] = g.entries[r * m + c];
        }
    }
    Ok(g)
}

/// Information matrix of an index multiset (unit weights, multiplicity-aware).
pub fn gram_of_members(inst: &Instance, members: &[usize]) -> Result<SquareMatrix> {
    let m = inst.m();
    let mut g = SquareMatrix::zeros(m)?;
    for &i in members {
        if i >= inst.n() {
            return Err(Error::InvalidIndex { index: i, n: inst.n() });
        }
        let a = inst.vector(i);
        for r in 0..m {
            for c in r..m {
                g.entries[r * m + c] += a[r] * a[c];
            }
        }
    }
    for r in 0..m {
        for c in r + 1..m {
            g.entries[c * m + r] = g.entries[r * m + c];
        }
    }
    Ok(g)
}

/// Leverage scores `a_iᵀ M(x)⁻¹ a_i` for all i.
///
/// These are the partial derivatives of `ln det M(x)` with respect to the
/// weights, hence the gradient used by the relaxation solver. Computed by
/// solving `M z = a_i` per index rather than forming the inverse.
pub fn leverage_scores(inst: &Instance, x: &[f64]) -> Result<Vec<f64>> {
    let g = gram(inst, x)?;
    let lu = g.factor().regular()?;
    let mut scores = Vec::with_capacity(inst.n());
    for i in 0..inst.n() {
        let a = inst.vector(i);
        let z = lu.solve(a);
        scores.push(a.iter().zip(&z).map(|(ai, zi)| ai * zi).sum());
    }
    Ok(scores)
}
