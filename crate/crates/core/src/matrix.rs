//! Small dense and Toeplitz matrix types plus the solvers built on them.

use crate::error::{Error, Result};

/// Square matrix in row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    /// Rows and columns `idx` of `self`.
    pub fn submatrix(&self, idx: &[usize]) -> DenseMatrix {
        let k = idx.len();
        let mut out = DenseMatrix::zeros(k);
        for (a, &i) in idx.iter().enumerate() {
            let row = self.row(i);
            let dst = &mut out.data[a * k..(a + 1) * k];
            for (d, &j) in dst.iter_mut().zip(idx) {
                *d = row[j];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Lower Cholesky factor; fails if the matrix is not positive definite.
    pub fn cholesky(&self) -> Result<Cholesky> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let (done, rest) = l.split_at_mut(j * n);
            let row_j = &mut rest[..n];
            // row j of L: entries k < j
            for k in 0..j {
                let row_k = &done[k * n..k * n + k];
                let s = self.data[j * n + k] - dot(&row_j[..k], row_k);
                row_j[k] = s / done[k * n + k];
            }
            let d = self.data[j * n + j] - dot(&row_j[..j], &row_j[..j]);
            if !(d > 0.0) {
                return Err(Error::numerical(format!(
                    "Cholesky factorization failed at pivot {j} (value {d:e}); the matrix is not positive definite"
                )));
            }
            row_j[j] = d.sqrt();
        }
        Ok(Cholesky { n, l })
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators let the compiler vectorize
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for k in 0..4 {
            acc[k] += a[4 * c + k] * b[4 * c + k];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let s = dot(&self.l[i * n..i * n + i], &y[..i]);
            y[i] = (y[i] - s) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

/// Symmetric Toeplitz matrix given by its first row. Entries beyond the
/// stored row are zero (banded).
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricToeplitz {
    n: usize,
    first_row: Vec<f64>,
}

impl SymmetricToeplitz {
    pub fn new(n: usize, mut first_row: Vec<f64>) -> Self {
        first_row.truncate(n);
        SymmetricToeplitz { n, first_row }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Value at lag `k = |i − j|`.
    #[inline]
    pub fn lag(&self, k: usize) -> f64 {
        self.first_row.get(k).copied().unwrap_or(0.0)
    }

    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    /// Number of stored super-diagonals.
    pub fn bandwidth(&self) -> usize {
        self.first_row.len().saturating_sub(1)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, |i, j| self.lag(i.abs_diff(j)))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let bw = self.bandwidth();
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(bw);
                let hi = (i + bw + 1).min(self.n);
                (lo..hi).map(|j| self.first_row[i.abs_diff(j)] * x[j]).sum()
            })
            .collect()
    }
}

/// Stiffness matrix over the free nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum Stiffness {
    Dense(DenseMatrix),
    Toeplitz(SymmetricToeplitz),
}

/// Above this size linear solves switch from dense Cholesky to conjugate
/// gradients on the Toeplitz form.
pub const DENSE_SOLVE_LIMIT: usize = 6000;

impl Stiffness {
    pub fn dim(&self) -> usize {
        match self {
            Stiffness::Dense(m) => m.dim(),
            Stiffness::Toeplitz(t) => t.dim(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Stiffness::Dense(m) => m.get(i, j),
            Stiffness::Toeplitz(t) => t.lag(i.abs_diff(j)),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Stiffness::Dense(m) => m.matvec(x),
            Stiffness::Toeplitz(t) => t.matvec(x),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Stiffness::Dense(m) => m.clone(),
            Stiffness::Toeplitz(t) => t.to_dense(),
        }
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    /// `self + c · other`, where `other` is tridiagonal.
    pub fn plus_scaled(&self, c: f64, other: &Tridiagonal) -> Stiffness {
        match self {
            Stiffness::Toeplitz(t) if other.is_toeplitz() => {
                let mut row = t.first_row.clone();
                row.resize(row.len().max(2).min(t.n), 0.0);
                row[0] += c * other.diag.first().copied().unwrap_or(0.0);
                if t.n > 1 {
                    row[1] += c * other.off[0];
                }
                Stiffness::Toeplitz(SymmetricToeplitz::new(t.n, row))
            }
            _ => {
                let mut m = self.to_dense();
                for i in 0..m.dim() {
                    m.add(i, i, c * other.diag[i]);
                    if i + 1 < m.dim() {
                        m.add(i, i + 1, c * other.off[i]);
                        m.add(i + 1, i, c * other.off[i]);
                    }
                }
                Stiffness::Dense(m)
            }
        }
    }
}

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    fn is_toeplitz(&self) -> bool {
        self.diag.windows(2).all(|w| w[0] == w[1]) && self.off.windows(2).all(|w| w[0] == w[1])
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        DenseMatrix::from_fn(n, |i, j| match i.abs_diff(j) {
            0 => self.diag[i],
            1 => self.off[i.min(j)],
            _ => 0.0,
        })
    }

    /// Thomas algorithm (no pivoting; fine for diagonally dominant input).
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        for i in 0..n {
            if i > 0 {
                denom = self.diag[i] - self.off[i - 1] * c[i - 1];
            }
            if denom == 0.0 || !denom.is_finite() {
                return Err(Error::numerical("zero pivot in tridiagonal solve"));
            }
            c[i] = if i + 1 < n { self.off[i] / denom } else { 0.0 };
            let prev = if i > 0 { self.off[i - 1] * d[i - 1] } else { 0.0 };
            d[i] = (b[i] - prev) / denom;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }
}

/// Conjugate gradients for an SPD operator given as a closure.
pub fn conjugate_gradient<F: Fn(&[f64]) -> Vec<f64>>(
    apply: F,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = rel_tol * norm2(b);
    if rr.sqrt() <= target {
        return Ok(x);
    }
    for _ in 0..max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::numerical("conjugate gradients hit a non-positive curvature"));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            return Ok(x);
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::numerical(format!(
        "conjugate gradients did not reach {rel_tol:e} in {max_iter} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> DenseMatrix {
        DenseMatrix::from_fn(n, |i, j| {
            if i == j {
                4.0 + i as f64
            } else {
                1.0 / (1.0 + (i as f64 - j as f64).abs())
            }
        })
    }

    #[test]
    fn cholesky_solves() {
        let a = spd(37);
        let x: Vec<f64> = (0..37).map(|i| (i as f64).sin()).collect();
        let b = a.matvec(&x);
        let y = a.cholesky().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = spd(5);
        a.set(2, 2, -1.0);
        assert!(a.cholesky().is_err());
    }

    #[test]
    fn toeplitz_matvec_matches_dense() {
        let t = SymmetricToeplitz::new(9, vec![3.0, -1.0, -0.25, -0.1]);
        let x: Vec<f64> = (0..9).map(|i| i as f64 * 0.3 - 1.0).collect();
        let d = t.to_dense();
        assert_eq!(d.get(0, 3), -0.1);
        assert_eq!(d.get(0, 4), 0.0);
        for (u, v) in t.matvec(&x).iter().zip(d.matvec(&x)) {
            assert!((u - v).abs() < 1e-14);
        }
        let y = conjugate_gradient(|v| t.matvec(v), &x, 1e-13, 100).unwrap();
        let back = t.matvec(&y);
        for (u, v) in back.iter().zip(&x) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn thomas() {
        let t = Tridiagonal {
            diag: vec![2.0; 6],
            off: vec![-1.0; 5],
        };
        let x = vec![1.0, 2.0, 0.5, -1.0, 3.0, 0.0];
        let b = t.matvec(&x);
        let y = t.solve(&b).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn submatrix_picks_rows_and_columns() {
        let a = spd(6);
        let s = a.submatrix(&[1, 4]);
        assert_eq!(s.get(0, 1), a.get(1, 4));
        assert_eq!(s.get(1, 1), a.get(4, 4));
    }
}
