//! Dense vector helpers and the QR orthonormalization used by the block power method.
//!
//! Matrices that matter here are tall and skinny (d × k with k small), so they are
//! stored as a list of columns.

use crate::error::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Column-major d × k matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ColMatrix {
    rows: usize,
    cols: Vec<Vec<f64>>,
}

impl ColMatrix {
    pub fn zeros(rows: usize, ncols: usize) -> Self {
        Self {
            rows,
            cols: vec![vec![0.0; rows]; ncols],
        }
    }

    pub fn from_columns(cols: Vec<Vec<f64>>) -> Result<Self> {
        let rows = cols.first().map_or(0, Vec::len);
        if let Some(bad) = cols.iter().find(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch {
                expected: rows,
                actual: bad.len(),
            });
        }
        Ok(Self { rows, cols })
    }

    /// Builds from a row-major list of rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut cols = vec![Vec::with_capacity(rows.len()); ncols];
        for r in rows {
            if r.len() != ncols {
                return Err(Error::DimensionMismatch {
                    expected: ncols,
                    actual: r.len(),
                });
            }
            for (c, v) in cols.iter_mut().zip(r) {
                c.push(*v);
            }
        }
        Ok(Self {
            rows: rows.len(),
            cols,
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.cols[j]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.cols[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cols[j][i]
    }

    pub fn fill_zero(&mut self) {
        for c in &mut self.cols {
            c.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// `Mᵀ x`, one entry per column.
    pub fn t_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.cols.iter().map(|c| dot(c, x)).collect()
    }

    /// `M y` for a length-k coefficient vector.
    pub fn mul_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (c, &yj) in self.cols.iter().zip(y) {
            axpy(yj, c, &mut out);
        }
        out
    }

    /// `R M` for a row-major square matrix `R` (rows × rows).
    pub fn left_mul(&self, r: &[Vec<f64>]) -> ColMatrix {
        let cols = self
            .cols
            .iter()
            .map(|c| r.iter().map(|row| dot(row, c)).collect())
            .collect();
        ColMatrix {
            rows: r.len(),
            cols,
        }
    }

    /// Largest absolute entry of `MᵀM − I`.
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.ncols();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(&self.cols[i], &self.cols[j]) - target).abs());
            }
        }
        worst
    }

    /// Residual of `x` after projecting onto the column span: `(I − MMᵀ) x`.
    /// Only meaningful when the columns are orthonormal.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = x.to_vec();
        for c in &self.cols {
            let a = dot(c, x);
            axpy(-a, c, &mut r);
        }
        r
    }
}

/// Relative threshold under which a Gram-Schmidt column counts as collapsed.
const COLLAPSE_TOL: f64 = 1e-12;

/// Thin QR orthonormalization by modified Gram-Schmidt with one round of
/// re-orthogonalization. Returns Q with the sign convention `diag(R) >= 0`.
pub fn qr_orthonormalize(m: &ColMatrix) -> Result<ColMatrix> {
    orthonormalize(m, false)
}

/// Like [`qr_orthonormalize`] but a collapsed column is replaced by the standard
/// basis vector with the largest residual against the columns accepted so far.
/// Fails only when every column of `m` is zero.
pub fn qr_orthonormalize_completing(m: &ColMatrix) -> Result<ColMatrix> {
    orthonormalize(m, true)
}

fn orthonormalize(m: &ColMatrix, complete: bool) -> Result<ColMatrix> {
    let d = m.nrows();
    let k = m.ncols();
    if k > d {
        return Err(Error::RankDeficient { column: d });
    }
    let scale = m.cols.iter().map(|c| norm(c)).fold(0.0f64, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::RankDeficient { column: 0 });
    }
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (j, col) in m.cols.iter().enumerate() {
        let mut v = col.clone();
        for _ in 0..2 {
            for qi in &q {
                let a = dot(qi, &v);
                axpy(-a, qi, &mut v);
            }
        }
        let nv = norm(&v);
        if nv <= COLLAPSE_TOL * scale {
            if !complete {
                return Err(Error::RankDeficient { column: j });
            }
            v = completion_vector(&q, d);
        } else {
            v.iter_mut().for_each(|x| *x /= nv);
        }
        q.push(v);
    }
    Ok(ColMatrix { rows: d, cols: q })
}

fn completion_vector(q: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut best = Vec::new();
    let mut best_norm = -1.0;
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        for _ in 0..2 {
            for qi in q {
                let a = dot(qi, &e);
                axpy(-a, qi, &mut e);
            }
        }
        let n = norm(&e);
        if n > best_norm + 1e-12 {
            best_norm = n;
            best = e;
        }
    }
    best.iter_mut().for_each(|x| *x /= best_norm);
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_input_is_fixed() {
        let m = ColMatrix::from_columns(vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let q = qr_orthonormalize(&m).unwrap();
        assert_eq!(q, m);
    }

    #[test]
    fn axis_scaling_removed() {
        let m = ColMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 3.0], vec![0.0, 0.0]]).unwrap();
        let q = qr_orthonormalize(&m).unwrap();
        assert_eq!(q.col(0), &[1.0, 0.0, 0.0]);
        assert_eq!(q.col(1), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn sign_convention_nonnegative_diagonal() {
        let m = ColMatrix::from_columns(vec![vec![-1.0, 0.0], vec![1.0, -4.0]]).unwrap();
        let q = qr_orthonormalize(&m).unwrap();
        // r_jj = <q_j, m_j> must be >= 0
        for j in 0..2 {
            assert!(dot(q.col(j), m.col(j)) > 0.0);
        }
    }

    #[test]
    fn rank_deficient_rejected() {
        let m = ColMatrix::from_columns(vec![vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]]).unwrap();
        assert_eq!(qr_orthonormalize(&m), Err(Error::RankDeficient { column: 1 }));
        let z = ColMatrix::zeros(3, 2);
        assert!(qr_orthonormalize(&z).is_err());
    }

    #[test]
    fn completing_variant_fills_collapsed_column() {
        let m = ColMatrix::from_columns(vec![vec![1.0, 0.0, 0.0], vec![-3.0, 0.0, 0.0]]).unwrap();
        let q = qr_orthonormalize_completing(&m).unwrap();
        assert!(q.orthonormality_defect() < 1e-15);
        assert_eq!(q.col(0), &[1.0, 0.0, 0.0]);
        assert!(qr_orthonormalize_completing(&ColMatrix::zeros(3, 2)).is_err());
    }
}
