//! Dense linear algebra and seeded Gaussian sampling.
//!
//! Everything here is deliberately small: row-major dense matrices, owned
//! vectors, a Cholesky factorization and a power iteration for the top
//! eigenvalue of `AᵀA`. Randomness comes from [`GaussianSource`], a ChaCha8
//! stream fed through the Box–Muller transform, so a seed pins every sample
//! bit-for-bit on every platform.

use std::f64::consts::PI;
use std::ops::{Index, IndexMut};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Owned dense vector of `f64`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn zeros(len: usize) -> Self {
        Vector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Number of nonzero entries.
    pub fn count_nonzero(&self) -> usize {
        self.0.iter().filter(|v| **v != 0.0).count()
    }

    /// `‖self − other‖²` without allocating.
    pub fn dist_sq(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn dist(&self, other: &Vector) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn scaled(&self, s: f64) -> Vector {
        Vector(self.0.iter().map(|v| v * s).collect())
    }

    /// `a·self + b·other`
    pub fn combine(&self, a: f64, other: &Vector, b: f64) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }

    /// `self += s·other`
    pub fn axpy(&mut self, s: f64, other: &Vector) {
        debug_assert_eq!(self.len(), other.len());
        for (x, y) in self.0.iter_mut().zip(&other.0) {
            *x += s * y;
        }
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        self.combine(1.0, other, -1.0)
    }

    pub fn add(&self, other: &Vector) -> Vector {
        self.combine(1.0, other, 1.0)
    }
}

impl From<Vec<f64>> for Vector {
    fn from(data: Vec<f64>) -> Self {
        Vector(data)
    }
}

impl FromIterator<f64> for Vector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Vector(iter.into_iter().collect())
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entry"));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `A·v`
    pub fn mul_vec(&self, v: &Vector) -> Vector {
        assert_eq!(v.len(), self.cols, "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v.as_slice())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `Aᵀ·v`
    pub fn tr_mul_vec(&self, v: &Vector) -> Vector {
        assert_eq!(v.len(), self.rows, "tr_mul_vec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            if *vi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += vi * a;
            }
        }
        Vector(out)
    }

    pub fn mul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `A·Aᵀ` (rows × rows), exploiting symmetry.
    pub fn gram_rows(&self) -> DenseMatrix {
        let mut out = Self::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in 0..=i {
                let v: f64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    /// `AᵀA` (cols × cols).
    pub fn gram_cols(&self) -> DenseMatrix {
        let mut out = Self::zeros(self.cols, self.cols);
        for k in 0..self.rows {
            let r = self.row(k);
            for i in 0..self.cols {
                let a = r[i];
                if a == 0.0 {
                    continue;
                }
                let row = &mut out.data[i * self.cols..=i * self.cols + i];
                for (o, &b) in row.iter_mut().zip(&r[..=i]) {
                    *o += a * b;
                }
            }
        }
        for i in 0..self.cols {
            for j in 0..i {
                out.data[j * self.cols + i] = out.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Adds `s` to every diagonal entry.
    pub fn add_diagonal(&mut self, s: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += s;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.data.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol * scale))
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Seeded stream of standard normal samples.
///
/// Uniforms come from `ChaCha8Rng`, whose output sequence is fixed by the
/// `rand_chacha` crate independent of platform and endianness. Pairs of
/// uniforms `(u1, u2)` are mapped by Box–Muller to
/// `sqrt(-2 ln u1)·cos(2π u2)` and `sqrt(-2 ln u1)·sin(2π u2)`, in that order.
#[derive(Debug, Clone)]
pub struct GaussianSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianSource {
    pub fn new(seed: u64) -> Self {
        GaussianSource {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(s) = self.spare.take() {
            return s;
        }
        // u1 ∈ (0, 1] keeps the logarithm finite.
        let u1 = 1.0 - self.rng.gen::<f64>();
        let u2 = self.rng.gen::<f64>();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * PI * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    pub fn vector(&mut self, len: usize) -> Vector {
        (0..len).map(|_| self.sample()).collect()
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        let data = (0..rows * cols).map(|_| self.sample()).collect();
        DenseMatrix { rows, cols, data }
    }

    /// Uniform index in `0..upper`.
    pub fn index_below(&mut self, upper: usize) -> usize {
        self.rng.gen_range(0..upper)
    }

    /// `count` distinct indices from `0..n`, chosen by a partial Fisher–Yates
    /// shuffle, in draw order.
    pub fn choose_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        assert!(count <= n);
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..count {
            let j = i + self.index_below(n - i);
            idx.swap(i, j);
        }
        idx.truncate(count);
        idx
    }
}

/// `rows × cols` matrix of i.i.d. N(0,1) entries; a pure function of `seed`.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    assert!(rows >= 1 && cols >= 1, "gaussian_matrix needs a nonempty shape");
    GaussianSource::new(seed).matrix(rows, cols)
}

const POWER_ITERATION_SEED: u64 = 0x5_eed0_fa7a;

/// Largest eigenvalue of `AᵀA` by power iteration.
///
/// Iterates until the eigen-residual `‖AᵀAv − ρv‖` drops below `tol·ρ`
/// (with `ρ` the Rayleigh quotient of the unit iterate). The start vector is
/// Gaussian from a fixed seed, so results are reproducible.
pub fn spectral_norm_sq(a: &DenseMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    if tol <= 0.0 || !tol.is_finite() {
        return Err(Error::InvalidConfig(format!("power iteration tol must be positive, got {tol}")));
    }
    if a.data.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidConfig("power iteration on a zero matrix".into()));
    }
    let mut v = GaussianSource::new(POWER_ITERATION_SEED).vector(a.cols());
    let n0 = v.norm();
    v = v.scaled(1.0 / n0);
    let mut estimate = 0.0;
    for _ in 0..max_iter {
        let av = a.mul_vec(&v);
        let mv = a.tr_mul_vec(&av);
        let rho = av.norm_sq();
        estimate = rho;
        let residual = mv.combine(1.0, &v, -rho).norm();
        let norm = mv.norm();
        if residual <= tol * rho {
            return Ok(rho);
        }
        if norm == 0.0 {
            // v landed in the null space; restart is pointless for a fixed seed.
            break;
        }
        v = mv.scaled(1.0 / norm);
    }
    Err(Error::PowerIterationNotConverged { estimate })
}

/// Upper estimate of `λ_max(AᵀA)` safe to use as a Lipschitz modulus:
/// the power-iteration value inflated by `1 + 1e-6`.
pub fn lipschitz_upper_bound(a: &DenseMatrix) -> Result<f64> {
    let lam = spectral_norm_sq(a, 1e-10, 100_000)?;
    Ok(lam * (1.0 + 1e-6))
}

/// Lower-triangular Cholesky factor `L` with `LLᵀ = M`.
#[derive(Debug, Clone)]
pub struct SpdFactorization {
    dim: usize,
    lower: Vec<f64>,
}

impl SpdFactorization {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> DenseMatrix {
        DenseMatrix {
            rows: self.dim,
            cols: self.dim,
            data: self.lower.clone(),
        }
    }

    /// Solves `M x = rhs`.
    pub fn solve(&self, rhs: &Vector) -> Result<Vector> {
        if rhs.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rhs.len(),
            });
        }
        let n = self.dim;
        let l = &self.lower;
        let mut x = rhs.clone().into_inner();
        for i in 0..n {
            let row = &l[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = 0.0;
            for k in i + 1..n {
                s += l[k * n + i] * x[k];
            }
            x[i] = (x[i] - s) / l[i * n + i];
        }
        Ok(Vector(x))
    }
}

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// Fails with [`Error::NotPositiveDefinite`] when a pivot falls to or below
/// `1e-12·trace(M)/dim`.
pub fn spd_factor(m: &DenseMatrix) -> Result<SpdFactorization> {
    if m.rows != m.cols {
        return Err(Error::DimensionMismatch {
            expected: m.rows,
            found: m.cols,
        });
    }
    let n = m.rows;
    if n == 0 {
        return Err(Error::NotPositiveDefinite { pivot: 0, value: 0.0 });
    }
    let floor = 1e-12 * m.trace() / n as f64;
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > floor) || d <= 0.0 {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
            s -= ri.iter().zip(rj).map(|(a, b)| a * b).sum::<f64>();
            l[i * n + j] = s / djj;
        }
    }
    Ok(SpdFactorization { dim: n, lower: l })
}

/// Solves `M x = rhs` against a factorization produced by [`spd_factor`].
pub fn solve(factor: &SpdFactorization, rhs: &Vector) -> Result<Vector> {
    factor.solve(rhs)
}
