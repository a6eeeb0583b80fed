//! Small dense complex linear algebra on top of `nalgebra`.
//!
//! Every matrix in this crate is at most a few dozen states wide, so all
//! routines are direct dense methods.

use alloc::vec::Vec;

use crate::{CMatrix, Error, Result, C64};

/// `max |m - m^dag|` over all entries.
pub fn max_hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

/// `max |m_ij|`.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Induced 1-norm (max column sum).
pub fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Replace `m` by `(m + m^dag) / 2`.
pub fn symmetrize(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

pub fn inverse(m: &CMatrix) -> Option<CMatrix> {
    m.clone().lu().try_inverse()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(m: &CMatrix) -> Self {
        let n = m.nrows();
        if n == 0 {
            return Self {
                values: Vec::new(),
                vectors: CMatrix::zeros(0, 0),
            };
        }
        let eig = m.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        Self { values, vectors }
    }

    /// `e^{-iMt}`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let n = self.values.len();
        let phases = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(0.0, -self.values[i] * t).exp()
            } else {
                C64::new(0.0, 0.0)
            }
        });
        &self.vectors * phases * self.vectors.adjoint()
    }
}

/// Eigendecomposition of a general (diagonalisable) complex matrix.
#[derive(Debug, Clone)]
pub struct GeneralEigen {
    pub values: Vec<C64>,
    /// Unit-norm right eigenvectors as columns.
    pub vectors: CMatrix,
    /// Inverse of `vectors`.
    pub inverse: CMatrix,
    /// `||V||_1 ||V^-1||_1`.
    pub condition: f64,
}

impl GeneralEigen {
    /// Complex Schur form followed by back-substitution on the triangular
    /// factor. Fails when the eigenvector matrix is numerically singular.
    pub fn new(m: &CMatrix) -> Result<Self> {
        let n = m.nrows();
        if n == 0 {
            return Ok(Self {
                values: Vec::new(),
                vectors: CMatrix::zeros(0, 0),
                inverse: CMatrix::zeros(0, 0),
                condition: 1.0,
            });
        }
        let schur = m
            .clone()
            .try_schur(f64::EPSILON, 100_000)
            .ok_or(Error::Defective(f64::INFINITY))?;
        let (q, t) = schur.unpack();
        let scale = max_abs(&t).max(f64::MIN_POSITIVE);
        let tiny = scale * f64::EPSILON;

        let values: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
        let mut y = CMatrix::zeros(n, n);
        for k in 0..n {
            y[(k, k)] = C64::new(1.0, 0.0);
            for i in (0..k).rev() {
                let mut s = C64::new(0.0, 0.0);
                for j in (i + 1)..=k {
                    s += t[(i, j)] * y[(j, k)];
                }
                let mut d = t[(i, i)] - t[(k, k)];
                if d.norm() < tiny {
                    d = C64::new(tiny, 0.0);
                }
                y[(i, k)] = -s / d;
            }
        }
        let mut vectors = q * y;
        for mut col in vectors.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col.unscale_mut(norm);
            }
        }
        let inverse = inverse(&vectors).ok_or(Error::Defective(f64::INFINITY))?;
        let condition = one_norm(&vectors) * one_norm(&inverse);
        if !condition.is_finite() {
            return Err(Error::Defective(condition));
        }
        Ok(Self {
            values,
            vectors,
            inverse,
            condition,
        })
    }
}

/// Eigenvalues of a general complex matrix (Schur diagonal).
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let t = m
        .clone()
        .try_schur(f64::EPSILON, 100_000)
        .ok_or(Error::Defective(f64::INFINITY))?
        .unpack()
        .1;
    Ok((0..m.nrows()).map(|k| t[(k, k)]).collect())
}

/// Smallest and largest eigenvalue magnitudes, for Hermitian or general input.
pub fn eigenvalue_magnitude_range(m: &CMatrix) -> Result<(f64, f64)> {
    if m.nrows() == 0 {
        return Ok((f64::INFINITY, 0.0));
    }
    let mags: Vec<f64> = if max_hermitian_deviation(m) <= 1e-12 * max_abs(m).max(1.0) {
        HermitianEigen::new(m).values.iter().map(|v| v.abs()).collect()
    } else {
        eigenvalues(m)?.iter().map(|v| v.norm()).collect()
    };
    let lo = mags.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mags.iter().copied().fold(0.0, f64::max);
    Ok((lo, hi))
}
