//! Prior precision matrices and the Gaussian full conditional of β.
//!
//! The fused prior gives a tridiagonal precision; the all-pairs prior gives a
//! dense one. In both cases `βᵀ B⁻¹ β` equals the penalty sum in the prior
//! exponent, which is what the tests check.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::{floored, Scalar};

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ v`.
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    /// `selfᵀ self`.
    pub fn gram(&self) -> Matrix<T> {
        let p = self.cols;
        let mut g = Matrix::zeros(p, p);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..p {
                let ra = r[a];
                for b in a..p {
                    g.data[a * p + b] += ra * r[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g.data[a * p + b] = g.data[b * p + a];
            }
        }
        g
    }

    pub fn quad_form(&self, v: &[T]) -> T {
        dot(v, &self.mul_vec(v))
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    /// Keeps only the listed rows.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix<T> {
        let data = idx.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Lower-triangle storage index for unordered pairs `{j, k}`, `j != k`.
///
/// Pairs are enumerated `(1,0), (2,0), (2,1), (3,0), ...` (0-based, `j > k`).
#[inline]
pub fn pair_index(j: usize, k: usize) -> usize {
    let (hi, lo) = if j > k { (j, k) } else { (k, j) };
    debug_assert!(hi != lo);
    hi * (hi - 1) / 2 + lo
}

pub fn pair_count(p: usize) -> usize {
    p * p.saturating_sub(1) / 2
}

/// Iterates `(j, k)` with `j > k` in storage order.
pub fn pairs(p: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..p).flat_map(|j| (0..j).map(move |k| (j, k)))
}

#[derive(Clone, Debug, PartialEq)]
pub enum PrecisionMatrix<T> {
    /// Symmetric tridiagonal: `diag[i]` and `off[i] = B⁻¹(i, i+1)`.
    Tridiagonal { diag: Vec<T>, off: Vec<T> },
    Dense(Matrix<T>),
}

impl<T: Scalar> PrecisionMatrix<T> {
    pub fn order(&self) -> usize {
        match self {
            PrecisionMatrix::Tridiagonal { diag, .. } => diag.len(),
            PrecisionMatrix::Dense(m) => m.rows(),
        }
    }

    pub fn to_dense(&self) -> Matrix<T> {
        match self {
            PrecisionMatrix::Dense(m) => m.clone(),
            PrecisionMatrix::Tridiagonal { diag, off } => {
                let mut m = Matrix::zeros(diag.len(), diag.len());
                for (i, &d) in diag.iter().enumerate() {
                    m[(i, i)] = d;
                }
                for (i, &o) in off.iter().enumerate() {
                    m[(i, i + 1)] = o;
                    m[(i + 1, i)] = o;
                }
                m
            }
        }
    }

    pub fn quad_form(&self, v: &[T]) -> T {
        match self {
            PrecisionMatrix::Dense(m) => m.quad_form(v),
            PrecisionMatrix::Tridiagonal { diag, off } => {
                let two = T::lit(2.0);
                let d: T = diag.iter().zip(v).map(|(&a, &x)| a * x * x).sum();
                let o: T = off.iter().enumerate().map(|(i, &a)| two * a * v[i] * v[i + 1]).sum();
                d + o
            }
        }
    }

    /// Adds the matrix into `target` in place.
    pub fn add_into(&self, target: &mut Matrix<T>) {
        match self {
            PrecisionMatrix::Dense(m) => {
                for (t, &a) in target.data.iter_mut().zip(&m.data) {
                    *t += a;
                }
            }
            PrecisionMatrix::Tridiagonal { diag, off } => {
                for (i, &d) in diag.iter().enumerate() {
                    target[(i, i)] += d;
                }
                for (i, &o) in off.iter().enumerate() {
                    target[(i, i + 1)] += o;
                    target[(i + 1, i)] += o;
                }
            }
        }
    }
}

fn check_positive<T: Scalar>(name: &'static str, xs: &[T]) -> Result<()> {
    match xs.iter().find(|&&x| !(x > T::zero()) || !x.is_finite()) {
        Some(&bad) => Err(Error::domain(name, bad.to_f64_lossy())),
        None => Ok(()),
    }
}

/// Tridiagonal precision of the fused prior.
///
/// `lambda2[i]` is the local scale of the difference `β_{i+1} − β_i`
/// (0-based), so it has `p − 1` entries.
pub fn build_fused_precision<T: Scalar>(
    tau2: &[T],
    lambda2: &[T],
    tilde_tau2: T,
) -> Result<PrecisionMatrix<T>> {
    let p = tau2.len();
    if p == 0 || lambda2.len() + 1 != p {
        return Err(Error::DimensionMismatch(format!(
            "fused precision needs p = {p} >= 1 and p - 1 difference scales, got {}",
            lambda2.len()
        )));
    }
    check_positive("tau2", tau2)?;
    check_positive("lambda2", lambda2)?;
    check_positive("tilde_tau2", &[tilde_tau2])?;
    let w: Vec<T> = lambda2
        .iter()
        .map(|&l| T::one() / floored(l * tilde_tau2))
        .collect();
    let mut diag: Vec<T> = tau2.iter().map(|&t| T::one() / floored(t)).collect();
    for (i, &wi) in w.iter().enumerate() {
        diag[i] += wi;
        diag[i + 1] += wi;
    }
    let off = w.iter().map(|&wi| -wi).collect();
    Ok(PrecisionMatrix::Tridiagonal { diag, off })
}

/// Same matrix as [`build_fused_precision`], assembled entry by entry in dense
/// storage.
pub fn build_fused_precision_dense<T: Scalar>(
    tau2: &[T],
    lambda2: &[T],
    tilde_tau2: T,
) -> Result<PrecisionMatrix<T>> {
    // validates
    build_fused_precision(tau2, lambda2, tilde_tau2)?;
    let p = tau2.len();
    let mut m = Matrix::zeros(p, p);
    for i in 0..p {
        m[(i, i)] = T::one() / floored(tau2[i]);
        if i > 0 {
            m[(i, i)] += T::one() / floored(lambda2[i - 1] * tilde_tau2);
            m[(i, i - 1)] = -T::one() / floored(lambda2[i - 1] * tilde_tau2);
        }
        if i + 1 < p {
            m[(i, i)] += T::one() / floored(lambda2[i] * tilde_tau2);
            m[(i, i + 1)] = -T::one() / floored(lambda2[i] * tilde_tau2);
        }
    }
    Ok(PrecisionMatrix::Dense(m))
}

/// Dense precision of the all-pairs prior. `lambda2_pairs` is indexed by
/// [`pair_index`]. Off-diagonals carry the global factor: `−1/(λ²_{ij} τ̃²)`.
pub fn build_horses_precision<T: Scalar>(
    tau2: &[T],
    lambda2_pairs: &[T],
    tilde_tau2: T,
) -> Result<PrecisionMatrix<T>> {
    let p = tau2.len();
    if p == 0 || lambda2_pairs.len() != pair_count(p) {
        return Err(Error::DimensionMismatch(format!(
            "HORSES precision with p = {p} needs {} pair scales, got {}",
            pair_count(p),
            lambda2_pairs.len()
        )));
    }
    check_positive("tau2", tau2)?;
    check_positive("lambda2_pairs", lambda2_pairs)?;
    check_positive("tilde_tau2", &[tilde_tau2])?;
    let mut m = Matrix::zeros(p, p);
    for i in 0..p {
        m[(i, i)] = T::one() / floored(tau2[i]);
    }
    for (j, k) in pairs(p) {
        let w = T::one() / floored(lambda2_pairs[pair_index(j, k)] * tilde_tau2);
        m[(j, j)] += w;
        m[(k, k)] += w;
        m[(j, k)] = -w;
        m[(k, j)] = -w;
    }
    Ok(PrecisionMatrix::Dense(m))
}

/// Lower Cholesky factor `L` with `A + jitter·I = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    l: Matrix<T>,
    jitter: T,
}

impl<T: Scalar> Cholesky<T> {
    fn try_factor(a: &Matrix<T>, jitter: T) -> Option<Matrix<T>> {
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)] + jitter;
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Some(l)
    }

    /// Plain factorization first, then diagonal jitter `10⁻¹⁰·tr(A)/n`
    /// growing by ×10 for up to three attempts.
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::DimensionMismatch("Cholesky of non-square matrix".into()));
        }
        if let Some(l) = Self::try_factor(a, T::zero()) {
            return Ok(Self { l, jitter: T::zero() });
        }
        let n = T::lit(a.rows().max(1) as f64);
        let mut jitter = T::lit(1e-10) * (a.trace() / n).abs();
        if !(jitter > T::zero()) {
            jitter = T::lit(1e-10);
        }
        let mut attempted = Vec::with_capacity(3);
        for _ in 0..3 {
            attempted.push(jitter.to_f64_lossy());
            if let Some(l) = Self::try_factor(a, jitter) {
                return Ok(Self { l, jitter });
            }
            jitter *= T::lit(10.0);
        }
        Err(Error::NumericalSingularity { attempted })
    }

    pub fn jitter(&self) -> T {
        self.jitter
    }

    pub fn factor_l(&self) -> &Matrix<T> {
        &self.l
    }

    /// Solves `L x = b` in place.
    pub fn solve_lower(&self, b: &mut [T]) {
        let n = self.l.rows();
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[(i, k)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn solve_upper(&self, b: &mut [T]) {
        let n = self.l.rows();
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_lower(&mut x);
        self.solve_upper(&mut x);
        x
    }
}

/// The Gaussian full conditional `N(A⁻¹Xᵀy, σ²A⁻¹)` with `A = XᵀX + B⁻¹`.
#[derive(Clone, Debug)]
pub struct GaussianConditional<T> {
    pub mean: Vec<T>,
    pub sigma2: T,
    chol: Cholesky<T>,
}

impl<T: Scalar> GaussianConditional<T> {
    pub fn new(xtx: &Matrix<T>, xty: &[T], binv: &PrecisionMatrix<T>, sigma2: T) -> Result<Self> {
        let p = xty.len();
        if xtx.rows() != p || xtx.cols() != p || binv.order() != p {
            return Err(Error::DimensionMismatch(format!(
                "XtX {}x{}, Xty {p}, B^-1 order {}",
                xtx.rows(),
                xtx.cols(),
                binv.order()
            )));
        }
        if !(sigma2 > T::zero()) || !sigma2.is_finite() {
            return Err(Error::domain("sigma2", sigma2.to_f64_lossy()));
        }
        let mut a = xtx.clone();
        binv.add_into(&mut a);
        let chol = Cholesky::factor(&a)?;
        let mut w = xty.to_vec();
        chol.solve_lower(&mut w);
        let mut mean = w;
        chol.solve_upper(&mut mean);
        Ok(Self { mean, sigma2, chol })
    }

    /// `σ² A⁻¹` as a dense matrix.
    pub fn covariance(&self) -> Matrix<T> {
        let p = self.mean.len();
        let mut cov = Matrix::zeros(p, p);
        for j in 0..p {
            let mut e = vec![T::zero(); p];
            e[j] = T::one();
            let col = self.chol.solve(&e);
            for i in 0..p {
                cov[(i, j)] = self.sigma2 * col[i];
            }
        }
        cov
    }

    /// `mean + σ L⁻ᵀ z` with `z ~ N(0, I)`.
    pub fn sample(&self, rng: &mut RngStream) -> Vec<T> {
        let sd = self.sigma2.sqrt();
        let mut z: Vec<T> = (0..self.mean.len()).map(|_| rng.std_normal::<T>() * sd).collect();
        self.chol.solve_upper(&mut z);
        z.iter_mut().zip(&self.mean).for_each(|(zi, &m)| *zi += m);
        z
    }
}

/// One exact draw of β from its Gaussian full conditional.
pub fn sample_beta_conditional<T: Scalar>(
    xtx: &Matrix<T>,
    xty: &[T],
    binv: &PrecisionMatrix<T>,
    sigma2: T,
    rng: &mut RngStream,
) -> Result<Vec<T>> {
    Ok(GaussianConditional::new(xtx, xty, binv, sigma2)?.sample(rng))
}
