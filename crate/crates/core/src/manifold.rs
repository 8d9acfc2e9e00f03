//! Diffusion maps on observation windows and Nyström restriction of unseen
//! windows onto the learned coordinates.

use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::Trajectory;
use crate::error::invalid;
use crate::linalg::{self, LanczosOptions, Matrix};
use crate::rng::{streams, Rng};
use crate::{Error, Result};

/// Contiguous windows cut from a set of trajectories.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSet {
    pub window_len: usize,
    /// `N x window_len`, one window per row.
    pub windows: Matrix,
    /// `(trajectory index, start sample)` of every row.
    pub provenance: Vec<(usize, usize)>,
}

impl WindowSet {
    pub fn from_rows(window_len: usize, rows: &[&[f64]]) -> Result<Self> {
        if window_len == 0 {
            return Err(invalid!("window length must be positive"));
        }
        let mut data = Vec::with_capacity(rows.len() * window_len);
        for r in rows {
            if r.len() != window_len {
                return Err(invalid!("window of length {} in a set of length {window_len}", r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(WindowSet {
            window_len,
            windows: Matrix::from_rows(rows.len(), window_len, data)?,
            provenance: (0..rows.len()).map(|i| (i, 0)).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.windows.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.windows.row(i)
    }

    /// The given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> WindowSet {
        let l = self.window_len;
        let mut data = Vec::with_capacity(rows.len() * l);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        WindowSet {
            window_len: l,
            windows: Matrix::from_rows(rows.len(), l, data).expect("shape is consistent"),
            provenance: rows.iter().map(|&r| self.provenance[r]).collect(),
        }
    }

    /// Uniform subsample of at most `cap` rows, kept in original order.
    pub fn subsample(&self, cap: usize, seed: u64) -> WindowSet {
        if self.len() <= cap {
            return self.clone();
        }
        let rows = Rng::new(seed, streams::SUBSAMPLE).subsample(self.len(), cap);
        self.select(&rows)
    }
}

/// Every window of length `l` starting at multiples of `stride`.
pub fn extract_windows(trajectories: &[Trajectory], l: usize, stride: usize) -> Result<WindowSet> {
    if l == 0 || stride == 0 {
        return Err(invalid!("window length and stride must be positive"));
    }
    let mut data = Vec::new();
    let mut provenance = Vec::new();
    for (ti, t) in trajectories.iter().enumerate() {
        if l > t.len() {
            return Err(invalid!("window length {l} exceeds trajectory {ti} of {} samples", t.len()));
        }
        for start in (0..=t.len() - l).step_by(stride) {
            data.extend_from_slice(&t.u[start..start + l]);
            provenance.push((ti, start));
        }
    }
    let n = provenance.len();
    Ok(WindowSet { window_len: l, windows: Matrix::from_rows(n, l, data)?, provenance })
}

/// Median of the squared pairwise distances over distinct pairs `i < j`.
pub fn median_epsilon(x: &WindowSet) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(invalid!("need at least two windows, got {n}"));
    }
    let mut d2 = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d2.push(linalg::sq_dist(x.row(i), x.row(j)));
        }
    }
    let eps = linalg::median_in_place(&mut d2).expect("at least one pair");
    if !(eps > 0.0) {
        return Err(invalid!("median squared distance is zero; windows are mostly identical"));
    }
    Ok(eps)
}

/// [`median_epsilon`] on a seeded subsample of at most `max_points` windows.
pub fn median_epsilon_subsampled(x: &WindowSet, max_points: usize, seed: u64) -> Result<f64> {
    median_epsilon(&x.subsample(max_points, seed))
}

#[inline]
fn kernel(d2: f64, epsilon: f64) -> f64 {
    libm::exp(-d2 / (2.0 * epsilon))
}

fn check_hyper(epsilon: f64, alpha: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid!("epsilon must be positive and finite, got {epsilon}"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid!("alpha must lie in [0, 1], got {alpha}"));
    }
    Ok(())
}

/// Symmetric Gaussian kernel on the windows.
pub fn kernel_matrix(x: &WindowSet, epsilon: f64) -> Matrix {
    let n = x.len();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        k.set(i, i, 1.0);
        for j in (i + 1)..n {
            let v = kernel(linalg::sq_dist(x.row(i), x.row(j)), epsilon);
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
    k
}

/// Density-normalizes `k` in place to `P^-a K P^-a`; returns `(p, s)` where
/// `p` are the row sums of the raw kernel and `s` those of the normalized one.
fn normalize_density(k: &mut Matrix, alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = k.rows();
    let p: Vec<f64> = (0..n).map(|i| k.row(i).iter().sum()).collect();
    if alpha != 0.0 {
        let scale: Vec<f64> = p.iter().map(|&pi| libm::pow(pi, -alpha)).collect();
        for i in 0..n {
            let si = scale[i];
            for (v, &sj) in k.row_mut(i).iter_mut().zip(&scale) {
                *v *= si * sj;
            }
        }
    }
    let s: Vec<f64> = (0..n).map(|i| k.row(i).iter().sum()).collect();
    for (row, &sum) in s.iter().enumerate() {
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::DegenerateKernel { row, sum });
        }
    }
    Ok((p, s))
}

/// Row-stochastic diffusion operator `S^-1 P^-a K P^-a` and the raw kernel
/// row sums `p`.
pub fn build_markov(x: &WindowSet, epsilon: f64, alpha: f64) -> Result<(Matrix, Vec<f64>)> {
    check_hyper(epsilon, alpha)?;
    let mut k = kernel_matrix(x, epsilon);
    let (p, s) = normalize_density(&mut k, alpha)?;
    for (i, &si) in s.iter().enumerate() {
        k.row_mut(i).iter_mut().for_each(|v| *v /= si);
    }
    Ok((k, p))
}

/// Fitted diffusion map. Eigenvector `k` is `eigenvectors[k]`, with unit
/// 2-norm and its largest-magnitude entry positive.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionMap {
    pub epsilon: f64,
    pub alpha: f64,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    /// Indices of the coordinates used downstream, usually `[1, 2]`.
    pub selected: Vec<usize>,
    pub windows: WindowSet,
    /// Row sums of the raw training kernel.
    pub p: Vec<f64>,
}

/// Matrices up to this size are decomposed densely; larger ones use Lanczos.
pub const DENSE_LIMIT: usize = 1500;

/// Leading `n_eig` eigenpairs of the diffusion operator on `x`.
pub fn fit_dmaps(x: &WindowSet, epsilon: f64, alpha: f64, n_eig: usize) -> Result<DiffusionMap> {
    check_hyper(epsilon, alpha)?;
    let n = x.len();
    if n_eig == 0 || n_eig > n {
        return Err(invalid!("cannot compute {n_eig} eigenpairs from {n} windows"));
    }
    let mut a = kernel_matrix(x, epsilon);
    let (p, s) = normalize_density(&mut a, alpha)?;
    let root: Vec<f64> = s.iter().map(|&v| libm::sqrt(v)).collect();
    for i in 0..n {
        let ri = root[i];
        for (v, &rj) in a.row_mut(i).iter_mut().zip(&root) {
            *v /= ri * rj;
        }
    }
    let eig = if n <= DENSE_LIMIT {
        let mut e = linalg::symmetric_eigen(&a)?;
        e.values.truncate(n_eig);
        e.vectors.truncate(n_eig);
        e
    } else {
        linalg::lanczos_top(n, n_eig, |v, out| a.mul_vec(v, out), LanczosOptions::default())?
    };
    drop(a);
    let eigenvectors = eig
        .vectors
        .into_iter()
        .map(|v| {
            let mut phi: Vec<f64> = v.iter().zip(&root).map(|(x, r)| x / r).collect();
            normalize_with_sign(&mut phi);
            phi
        })
        .collect();
    let selected = if n_eig >= 3 { vec![1, 2] } else { (1..n_eig).collect() };
    Ok(DiffusionMap { epsilon, alpha, eigenvalues: eig.values, eigenvectors, selected, windows: x.clone(), p })
}

fn normalize_with_sign(v: &mut [f64]) {
    let n = linalg::norm(v);
    let mut peak = 0.0f64;
    for &x in v.iter() {
        if x.abs() > peak.abs() {
            peak = x;
        }
    }
    let scale = if peak < 0.0 { -1.0 / n } else { 1.0 / n };
    v.iter_mut().for_each(|x| *x *= scale);
}

/// Knobs of the harmonic-rejection scan in [`select_independent`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelectionConfig {
    /// Keep a coordinate when its normalized regression residual exceeds this.
    pub threshold: f64,
    /// Smoother bandwidth as a fraction of the median pairwise distance in the
    /// already-kept coordinates.
    pub bandwidth_factor: f64,
    /// Coordinates whose eigenvalue falls below this fraction of the first
    /// non-trivial one are not considered.
    pub min_eigenvalue_ratio: f64,
    /// Regression runs on a seeded subsample of at most this many points.
    pub max_points: usize,
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig { threshold: 0.5, bandwidth_factor: 0.3, min_eigenvalue_ratio: 0.05, max_points: 3000, seed: 0 }
    }
}

/// Greedy scan over `k = 1, 2, ...`: coordinate `k` is kept when a local
/// linear regression on the coordinates kept so far cannot explain it.
pub fn select_independent(dmap: &DiffusionMap, r2_threshold: f64) -> Vec<usize> {
    select_independent_with(dmap, &SelectionConfig { threshold: r2_threshold, ..SelectionConfig::default() })
}

pub fn select_independent_with(dmap: &DiffusionMap, cfg: &SelectionConfig) -> Vec<usize> {
    let n_eig = dmap.eigenvectors.len();
    if n_eig < 2 {
        return Vec::new();
    }
    let n = dmap.windows.len();
    let rows = Rng::new(cfg.seed, streams::SUBSAMPLE).subsample(n, cfg.max_points);
    let lead = dmap.eigenvalues[1].abs();
    let mut kept = vec![1];
    for k in 2..n_eig {
        if dmap.eigenvalues[k].abs() < cfg.min_eigenvalue_ratio * lead {
            break;
        }
        let coords: Vec<Vec<f64>> =
            rows.iter().map(|&r| kept.iter().map(|&c| dmap.eigenvectors[c][r]).collect()).collect();
        let target: Vec<f64> = rows.iter().map(|&r| dmap.eigenvectors[k][r]).collect();
        if local_linear_residual(&coords, &target, cfg.bandwidth_factor) > cfg.threshold {
            kept.push(k);
        }
    }
    kept
}

/// Leave-one-out local linear regression of `y` on `x`; returns
/// `||y - y_hat|| / ||y||`.
pub fn local_linear_residual(x: &[Vec<f64>], y: &[f64], bandwidth_factor: f64) -> f64 {
    let m = x.len();
    if m < 2 {
        return 1.0;
    }
    let dim = x[0].len();
    let mut dists = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            dists.push(libm::sqrt(linalg::sq_dist(&x[i], &x[j])));
        }
    }
    let bw = linalg::median_in_place(&mut dists).unwrap_or(0.0) * bandwidth_factor;
    drop(dists);
    if !(bw > 0.0) {
        return 1.0;
    }
    let inv_bw2 = 1.0 / (bw * bw);
    let p = dim + 1;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut ata = vec![0.0; p * p];
    let mut atb = vec![0.0; p];
    let mut z = vec![0.0; p];
    for i in 0..m {
        ata.iter_mut().for_each(|v| *v = 0.0);
        atb.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..m {
            if j == i {
                continue;
            }
            let w = libm::exp(-linalg::sq_dist(&x[i], &x[j]) * inv_bw2);
            if w == 0.0 {
                continue;
            }
            z[0] = 1.0;
            for d in 0..dim {
                z[d + 1] = x[j][d] - x[i][d];
            }
            for r in 0..p {
                let wz = w * z[r];
                atb[r] += wz * y[j];
                for c in r..p {
                    ata[r * p + c] += wz * z[c];
                }
            }
        }
        for r in 0..p {
            ata[r * p + r] += 1e-12;
            for c in 0..r {
                ata[r * p + c] = ata[c * p + r];
            }
        }
        let fit = linalg::solve_small(&ata, &atb).map(|b| b[0]).unwrap_or(0.0);
        num += (y[i] - fit) * (y[i] - fit);
        den += y[i] * y[i];
    }
    if den == 0.0 {
        0.0
    } else {
        libm::sqrt(num / den)
    }
}

/// All diffusion coordinates (including the trivial one) of an unseen window.
pub fn nystrom_extend(dmap: &DiffusionMap, x_new: &[f64]) -> Result<Vec<f64>> {
    let n = dmap.windows.len();
    if x_new.len() != dmap.windows.window_len {
        return Err(invalid!("window has {} samples, the map was fitted on {}", x_new.len(), dmap.windows.window_len));
    }
    if x_new.iter().any(|v| !v.is_finite()) {
        return Err(invalid!("window contains non-finite values"));
    }
    let mut w: Vec<f64> = (0..n).map(|j| kernel(linalg::sq_dist(x_new, dmap.windows.row(j)), dmap.epsilon)).collect();
    let p_new: f64 = w.iter().sum();
    if !(p_new >= 1e-300) {
        return Err(Error::OutOfSupport { sum: p_new });
    }
    if dmap.alpha != 0.0 {
        let a = libm::pow(p_new, -dmap.alpha);
        for (wj, &pj) in w.iter_mut().zip(&dmap.p) {
            *wj *= a * libm::pow(pj, -dmap.alpha);
        }
    }
    let s_new: f64 = w.iter().sum();
    if !(s_new >= 1e-300) {
        return Err(Error::OutOfSupport { sum: s_new });
    }
    Ok(dmap
        .eigenvectors
        .iter()
        .zip(&dmap.eigenvalues)
        .map(|(phi, &lambda)| linalg::dot(&w, phi) / (s_new * lambda))
        .collect())
}

impl DiffusionMap {
    /// Selected coordinates of training window `i`.
    pub fn training_coordinates(&self, i: usize) -> Vec<f64> {
        self.selected.iter().map(|&k| self.eigenvectors[k][i]).collect()
    }

    /// Selected coordinates of every training window, one row each.
    pub fn embedding(&self) -> Vec<Vec<f64>> {
        (0..self.windows.len()).map(|i| self.training_coordinates(i)).collect()
    }

    /// Selected coordinates of an unseen window.
    pub fn restrict(&self, x_new: &[f64]) -> Result<Vec<f64>> {
        let all = nystrom_extend(self, x_new)?;
        Ok(self.selected.iter().map(|&k| all[k]).collect())
    }
}

/// Multiplier on the median squared distance. At the bare median the
/// leading pair of coordinates folds the limit cycle onto a single axis for
/// short windows; a wider kernel lets them parametrize the state.
pub const DEFAULT_EPSILON_SCALE: f64 = 8.0;

/// End-to-end settings for fitting a map on a window set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DmapConfig {
    /// Bandwidth; `epsilon_scale` times the median squared distance when
    /// `None`.
    pub epsilon: Option<f64>,
    pub epsilon_scale: f64,
    pub alpha: f64,
    pub n_eig: usize,
    /// Windows beyond this count are uniformly subsampled before fitting.
    pub max_points: usize,
    pub selection: SelectionConfig,
    pub seed: u64,
}

impl Default for DmapConfig {
    fn default() -> Self {
        DmapConfig {
            epsilon: None,
            epsilon_scale: DEFAULT_EPSILON_SCALE,
            alpha: 0.0,
            n_eig: 10,
            max_points: 6000,
            selection: SelectionConfig::default(),
            seed: 0,
        }
    }
}

/// Subsample, pick the bandwidth, fit and select independent coordinates.
pub fn fit_with_config(x: &WindowSet, cfg: &DmapConfig) -> Result<DiffusionMap> {
    if !(cfg.epsilon_scale > 0.0 && cfg.epsilon_scale.is_finite()) {
        return Err(invalid!("epsilon scale must be positive, got {}", cfg.epsilon_scale));
    }
    let sample = x.subsample(cfg.max_points, cfg.seed);
    let epsilon = match cfg.epsilon {
        Some(e) => e,
        None => median_epsilon(&sample)? * cfg.epsilon_scale,
    };
    let mut dmap = fit_dmaps(&sample, epsilon, cfg.alpha, cfg.n_eig.min(sample.len()))?;
    dmap.selected = select_independent_with(&dmap, &SelectionConfig { seed: cfg.seed, ..cfg.selection });
    Ok(dmap)
}
