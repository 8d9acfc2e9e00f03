//! Dense linear algebra used by the kernel methods.
//!
//! Two symmetric eigensolvers are provided: a full Householder + implicit QL
//! decomposition for matrices up to a few thousand rows, and a Lanczos
//! iteration with full reorthogonalization for the leading part of the
//! spectrum of larger kernels.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::invalid;
use crate::rng::Rng;
use crate::{Error, Result};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid!("matrix data has {} entries, expected {}x{}", data.len(), rows, cols));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (i, o) in out.iter_mut().enumerate().take(self.rows) {
            *o = dot(self.row(i), x);
        }
    }

    /// Largest absolute entry of `self - selfᵀ`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators keep the loop vectorizable; summation order is fixed.
    let n = a.len().min(b.len());
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    let chunks = n / 4;
    for c in 0..chunks {
        let k = 4 * c;
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    let mut s = (s0 + s1) + (s2 + s3);
    for k in 4 * chunks..n {
        s += a[k] * b[k];
    }
    s
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Median of a slice (mean of the two central values for even length).
/// The slice is reordered.
pub fn median_in_place(v: &mut [f64]) -> Option<f64> {
    let n = v.len();
    if n == 0 {
        return None;
    }
    let cmp = |a: &f64, b: &f64| a.total_cmp(b);
    let mid = n / 2;
    let (lower, upper, _) = v.select_nth_unstable_by(mid, cmp);
    let upper = *upper;
    if n % 2 == 1 {
        Some(upper)
    } else {
        let lower = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(0.5 * (lower + upper))
    }
}

/// Eigenpairs sorted by descending eigenvalue. `vectors[k]` belongs to
/// `values[k]` and has unit 2-norm.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl SymmetricEigen {
    fn sorted_descending(mut pairs: Vec<(f64, Vec<f64>)>) -> Self {
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (values, vectors) = pairs.into_iter().unzip();
        SymmetricEigen { values, vectors }
    }
}

/// Full eigendecomposition of a symmetric matrix (Householder
/// tridiagonalization followed by implicit QL).
pub fn symmetric_eigen(a: &Matrix) -> Result<SymmetricEigen> {
    let n = a.rows();
    if n != a.cols() {
        return Err(invalid!("eigendecomposition needs a square matrix, got {}x{}", a.rows(), a.cols()));
    }
    if n == 0 {
        return Ok(SymmetricEigen { values: Vec::new(), vectors: Vec::new() });
    }
    // `z` holds the transformation transposed: row i is the i-th column of
    // the orthogonal factor. The input is symmetric so it can be copied as-is.
    let mut z = a.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut z, &mut d, &mut e);
    tql2(n, &mut z, &mut d, &mut e)?;
    let pairs = (0..n).map(|i| (d[i], z[i * n..(i + 1) * n].to_vec())).collect();
    Ok(SymmetricEigen::sorted_descending(pairs))
}

/// Eigendecomposition of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off` (`off[i]` couples `i` and `i + 1`).
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<SymmetricEigen> {
    let n = diag.len();
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    let mut d = diag.to_vec();
    // tql2 expects the sub-diagonal in e[1..n].
    let mut e = vec![0.0; n];
    for i in 1..n {
        e[i] = off[i - 1];
    }
    tql2(n, &mut z, &mut d, &mut e)?;
    let pairs = (0..n).map(|i| (d[i], z[i * n..(i + 1) * n].to_vec())).collect();
    Ok(SymmetricEigen::sorted_descending(pairs))
}

// Householder reduction to tridiagonal form. `z` is stored transposed
// (z[j * n + k] is element (k, j) of the working matrix).
fn tred2(n: usize, z: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let at = |k: usize, j: usize| j * n + k;
    for j in 0..n {
        d[j] = z[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = z[at(i - 1, j)];
                z[at(i, j)] = 0.0;
                z[at(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                z[at(j, i)] = f;
                g = e[j] + z[at(j, j)] * f;
                let col = &z[j * n..j * n + i];
                for k in (j + 1)..i {
                    g += col[k] * d[k];
                    e[k] += col[k] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let col = &mut z[j * n..j * n + i];
                for k in j..i {
                    col[k] -= f * e[k] + g * d[k];
                }
                d[j] = z[at(i - 1, j)];
                z[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..(n - 1) {
        z[at(n - 1, i)] = z[at(i, i)];
        z[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = z[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let (lo, hi) = z.split_at_mut((i + 1) * n);
                let next = &hi[..n];
                let col = &mut lo[j * n..j * n + n];
                let g = dot(&next[..=i], &col[..=i]);
                for k in 0..=i {
                    col[k] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            z[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = z[at(n - 1, j)];
        z[at(n - 1, j)] = 0.0;
    }
    z[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

// Implicit QL on the tridiagonal (d, e[1..]). Row i of `z` accumulates the
// i-th eigenvector.
fn tql2(n: usize, z: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::NoConvergence { iterations: iter });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..i * n + n];
                    let zi1 = &mut hi[..n];
                    for k in 0..n {
                        let t = zi1[k];
                        zi1[k] = s * zi[k] + c * t;
                        zi[k] = c * zi[k] - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Options for [`lanczos_top`].
#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    /// Converged when every requested Ritz residual is below
    /// `tol * |largest Ritz value|`.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { tol: 1e-13, max_iter: 800, seed: 0 }
    }
}

/// Leading `k` eigenpairs of a symmetric operator of size `n` given as a
/// matrix-vector product. Uses Lanczos with full (twice-applied)
/// reorthogonalization and no restarts.
pub fn lanczos_top(
    n: usize,
    k: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    opts: LanczosOptions,
) -> Result<SymmetricEigen> {
    if k == 0 || k > n {
        return Err(invalid!("requested {} eigenpairs of an operator of size {}", k, n));
    }
    let max_iter = opts.max_iter.min(n).max(k);
    let mut rng = Rng::new(opts.seed, crate::rng::streams::LANCZOS);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    let mut q: Vec<f64> = (0..n).map(|_| rng.uniform() - 0.5).collect();
    let qn = norm(&q);
    q.iter_mut().for_each(|x| *x /= qn);
    let mut w = vec![0.0; n];

    loop {
        apply(&q, &mut w);
        let alpha = dot(&q, &w);
        axpy(-alpha, &q, &mut w);
        if let Some(prev) = basis.last() {
            axpy(-betas[betas.len() - 1], prev, &mut w);
        }
        basis.push(q);
        alphas.push(alpha);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                axpy(-c, b, &mut w);
            }
        }
        let mut beta = norm(&w);
        let m = basis.len();

        let exhausted = m >= max_iter;
        let breakdown = beta <= 1e-14 * alphas.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
        let check = m >= k && (m % 5 == 0 || exhausted || breakdown || m == n);
        if check {
            let t = tridiagonal_eigen(&alphas, &betas)?;
            let scale = t.values.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
            let converged = (0..k).all(|i| (beta * t.vectors[i][m - 1]).abs() <= opts.tol * scale);
            if converged || breakdown || m == n {
                if !converged && !breakdown && m < n {
                    return Err(Error::NoConvergence { iterations: m });
                }
                if breakdown && m < k {
                    // Invariant subspace smaller than k: continue with a fresh
                    // direction orthogonal to the basis.
                } else {
                    return Ok(ritz_pairs(&basis, &t, k, n));
                }
            } else if exhausted {
                return Err(Error::NoConvergence { iterations: m });
            }
        }
        if breakdown {
            // Restart in a random direction orthogonal to everything so far.
            w = (0..n).map(|_| rng.uniform() - 0.5).collect();
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &w);
                    axpy(-c, b, &mut w);
                }
            }
            beta = 0.0;
            let wn = norm(&w);
            w.iter_mut().for_each(|x| *x /= wn);
            betas.push(beta);
            q = core::mem::replace(&mut w, vec![0.0; n]);
            continue;
        }
        betas.push(beta);
        let mut next = core::mem::replace(&mut w, vec![0.0; n]);
        next.iter_mut().for_each(|x| *x /= beta);
        q = next;
    }
}

fn ritz_pairs(basis: &[Vec<f64>], t: &SymmetricEigen, k: usize, n: usize) -> SymmetricEigen {
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    for i in 0..k {
        let mut y = vec![0.0; n];
        for (b, &s) in basis.iter().zip(&t.vectors[i]) {
            axpy(s, b, &mut y);
        }
        let yn = norm(&y);
        y.iter_mut().for_each(|x| *x /= yn);
        values.push(t.values[i]);
        vectors.push(y);
    }
    SymmetricEigen { values, vectors }
}

/// Solves `a x = b` for a small dense system by Gaussian elimination with
/// partial pivoting. `a` is `n x n` row-major. Returns `None` if singular.
pub fn solve_small(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))?;
        if m[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                m.swap(col * n + j, pivot * n + j);
            }
            x.swap(col, pivot);
        }
        let diag = m[col * n + col];
        for r in (col + 1)..n {
            let factor = m[r * n + col] / diag;
            if factor != 0.0 {
                for j in col..n {
                    m[r * n + j] -= factor * m[col * n + j];
                }
                x[r] -= factor * x[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for j in (col + 1)..n {
            s -= m[col * n + j] * x[j];
        }
        x[col] = s / m[col * n + col];
    }
    Some(x)
}

/// Singular values of the `rows x cols` matrix (row-major), descending.
pub fn singular_values(rows: usize, cols: usize, data: &[f64]) -> Result<Vec<f64>> {
    let gram = Matrix::from_fn(cols, cols, |i, j| (0..rows).map(|r| data[r * cols + i] * data[r * cols + j]).sum());
    let eig = symmetric_eigen(&gram)?;
    Ok(eig.values.iter().map(|&v| libm::sqrt(v.max(0.0))).collect())
}
