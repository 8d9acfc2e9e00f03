//! Geometric harmonics on the diffusion coordinates.
//!
//! A second Gaussian kernel on the reduced coordinates gives an orthonormal
//! basis in which any function sampled on the manifold can be projected and
//! then extended to new points. Used to map a short window to mature LSTM
//! states and to impute the hidden variable from sporadic measurements.

use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::Trajectory;
use crate::error::invalid;
use crate::linalg::{self, Matrix};
use crate::lstm::{self, InternalState, LstmModel};
use crate::manifold::{DiffusionMap, WindowSet};
use crate::rng::{streams, Rng};
use crate::{Error, Result};

/// Windows paired with the teacher-forced state reached after consuming the
/// window's last sample, restricted to times after the maturity horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct MatureStateTable {
    pub windows: WindowSet,
    /// Time index `t` of the window's last sample.
    pub times: Vec<usize>,
    /// `(c_t, h_t)` concatenated.
    pub states: Vec<[f64; 2 * lstm::D]>,
    pub maturity: usize,
}

impl MatureStateTable {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Runs `model` teacher-forced from zero over each trajectory and records
/// `(u_{t-l+1..t}, c_t, h_t)` for every `t > maturity`.
pub fn collect_mature_states(
    model: &LstmModel,
    trajectories: &[Trajectory],
    window_len: usize,
    maturity: usize,
) -> Result<MatureStateTable> {
    if window_len == 0 {
        return Err(invalid!("window length must be positive"));
    }
    let mut data = Vec::new();
    let mut provenance = Vec::new();
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (ti, traj) in trajectories.iter().enumerate() {
        let tf = lstm::teacher_forced_states(model, &traj.u);
        let first = (maturity + 1).max(window_len - 1);
        for t in first..traj.len() {
            let start = t + 1 - window_len;
            data.extend_from_slice(&traj.u[start..=t]);
            provenance.push((ti, start));
            times.push(t);
            states.push(tf[t].to_vec());
        }
    }
    let windows = WindowSet { window_len, windows: Matrix::from_rows(times.len(), window_len, data)?, provenance };
    Ok(MatureStateTable { windows, times, states, maturity })
}

/// How targets are rescaled before projection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Standardize {
    None,
    /// Divide each output by its root mean square.
    Scale,
    /// Subtract the mean and divide by the standard deviation.
    MeanScale,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometricHarmonics {
    pub epsilon_star: f64,
    pub delta: f64,
    /// Kept eigenvalues, descending.
    pub sigma: Vec<f64>,
    /// Kept eigenvectors over the training points.
    pub psi: Vec<Vec<f64>>,
    /// `coefficients[a][j]`: projection of output `j` on `psi[a]`.
    pub coefficients: Vec<Vec<f64>>,
    /// Training coordinates, one row per point.
    pub phi: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

/// Fits geometric harmonics of the raw targets `f` (one row per point) over
/// the coordinates `phi`, keeping eigenvectors with `sigma > delta * sigma_1`.
pub fn fit_gh(phi: &[Vec<f64>], f: &[Vec<f64>], epsilon_star: f64, delta: f64) -> Result<GeometricHarmonics> {
    fit_gh_with(phi, f, epsilon_star, delta, Standardize::None)
}

pub fn fit_gh_with(
    phi: &[Vec<f64>],
    f: &[Vec<f64>],
    epsilon_star: f64,
    delta: f64,
    standardize: Standardize,
) -> Result<GeometricHarmonics> {
    let m = phi.len();
    if m < 2 {
        return Err(invalid!("need at least two points, got {m}"));
    }
    if f.len() != m {
        return Err(invalid!("{m} coordinates but {} targets", f.len()));
    }
    let d = phi[0].len();
    let q = f[0].len();
    if phi.iter().any(|r| r.len() != d || r.iter().any(|x| !x.is_finite()))
        || f.iter().any(|r| r.len() != q || r.iter().any(|x| !x.is_finite()))
    {
        return Err(invalid!("coordinates and targets must be finite and rectangular"));
    }
    if !(epsilon_star > 0.0 && epsilon_star.is_finite()) {
        return Err(invalid!("epsilon* must be positive, got {epsilon_star}"));
    }
    if delta >= 1.0 {
        return Err(Error::EmptyTruncation { delta });
    }
    if !(delta > 0.0) {
        return Err(invalid!("delta must lie in (0, 1), got {delta}"));
    }

    let (offset, scale) = standardization(f, standardize);
    let c = Matrix::from_fn(m, m, |i, j| {
        if i == j {
            1.0
        } else {
            libm::exp(-linalg::sq_dist(&phi[i], &phi[j]) / (2.0 * epsilon_star))
        }
    });
    let eig = linalg::symmetric_eigen(&c)?;
    drop(c);
    let s1 = eig.values[0];
    let kept = eig.values.iter().take_while(|&&s| s > delta * s1).count();
    if kept == 0 {
        return Err(Error::EmptyTruncation { delta });
    }
    let sigma = eig.values[..kept].to_vec();
    let psi: Vec<Vec<f64>> = eig.vectors.into_iter().take(kept).collect();
    let coefficients = psi
        .iter()
        .map(|p| {
            (0..q)
                .map(|j| p.iter().zip(f).map(|(pi, fi)| pi * (fi[j] - offset[j]) / scale[j]).sum())
                .collect()
        })
        .collect();
    Ok(GeometricHarmonics { epsilon_star, delta, sigma, psi, coefficients, phi: phi.to_vec(), offset, scale })
}

fn standardization(f: &[Vec<f64>], how: Standardize) -> (Vec<f64>, Vec<f64>) {
    let q = f[0].len();
    let m = f.len() as f64;
    let mut offset = vec![0.0; q];
    let mut scale = vec![1.0; q];
    if how == Standardize::None {
        return (offset, scale);
    }
    for j in 0..q {
        let mean = f.iter().map(|r| r[j]).sum::<f64>() / m;
        if how == Standardize::MeanScale {
            offset[j] = mean;
        }
        let ss = f.iter().map(|r| (r[j] - offset[j]) * (r[j] - offset[j])).sum::<f64>() / m;
        let s = libm::sqrt(ss);
        scale[j] = if s > 0.0 { s } else { 1.0 };
    }
    (offset, scale)
}

/// Extension of the fitted function to `phi_new`.
pub fn evaluate_gh(gh: &GeometricHarmonics, phi_new: &[f64]) -> Vec<f64> {
    let q = gh.offset.len();
    let k: Vec<f64> =
        gh.phi.iter().map(|p| libm::exp(-linalg::sq_dist(phi_new, p) / (2.0 * gh.epsilon_star))).collect();
    let mut out = vec![0.0; q];
    for ((psi, &sigma), coef) in gh.psi.iter().zip(&gh.sigma).zip(&gh.coefficients) {
        let psi_new = linalg::dot(&k, psi) / sigma;
        for j in 0..q {
            out[j] += psi_new * coef[j];
        }
    }
    for j in 0..q {
        out[j] = out[j] * gh.scale[j] + gh.offset[j];
    }
    out
}

/// Truncated projection of the training targets, evaluated on the training
/// points without the extension formula.
pub fn training_reconstruction(gh: &GeometricHarmonics) -> Vec<Vec<f64>> {
    let m = gh.phi.len();
    let q = gh.offset.len();
    (0..m)
        .map(|i| {
            (0..q)
                .map(|j| {
                    let z: f64 = gh.psi.iter().zip(&gh.coefficients).map(|(p, c)| p[i] * c[j]).sum();
                    z * gh.scale[j] + gh.offset[j]
                })
                .collect()
        })
        .collect()
}

/// Median squared pairwise distance among the rows of `phi`.
pub fn median_sq_distance(phi: &[Vec<f64>]) -> Result<f64> {
    let m = phi.len();
    if m < 2 {
        return Err(invalid!("need at least two points, got {m}"));
    }
    let mut d2 = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            d2.push(linalg::sq_dist(&phi[i], &phi[j]));
        }
    }
    let med = linalg::median_in_place(&mut d2).expect("at least one pair");
    if !(med > 0.0) {
        return Err(invalid!("coordinates are mostly coincident"));
    }
    Ok(med)
}

/// Settings for fitting the window-to-state map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GhConfig {
    /// Bandwidth; `epsilon_scale` times the median squared distance among
    /// the training coordinates when `None`.
    pub epsilon_star: Option<f64>,
    pub epsilon_scale: f64,
    pub delta: f64,
    pub standardize: Standardize,
    /// Table rows beyond this count are uniformly subsampled.
    pub max_points: usize,
    pub seed: u64,
}

impl Default for GhConfig {
    fn default() -> Self {
        GhConfig {
            epsilon_star: None,
            epsilon_scale: 1.0,
            delta: 1e-3,
            standardize: Standardize::MeanScale,
            max_points: 1500,
            seed: 0,
        }
    }
}

/// Fits geometric harmonics from restricted window coordinates to `targets`.
pub fn fit_on_windows(
    dmap: &DiffusionMap,
    windows: &WindowSet,
    targets: &[Vec<f64>],
    cfg: &GhConfig,
) -> Result<GeometricHarmonics> {
    if windows.len() != targets.len() {
        return Err(invalid!("{} windows but {} targets", windows.len(), targets.len()));
    }
    let rows = Rng::new(cfg.seed, streams::SUBSAMPLE).subsample(windows.len(), cfg.max_points);
    let phi = rows.iter().map(|&r| dmap.restrict(windows.row(r))).collect::<Result<Vec<_>>>()?;
    let f: Vec<Vec<f64>> = rows.iter().map(|&r| targets[r].clone()).collect();
    let eps = match cfg.epsilon_star {
        Some(e) => e,
        None => median_sq_distance(&phi)? * cfg.epsilon_scale,
    };
    fit_gh_with(&phi, &f, eps, cfg.delta, cfg.standardize)
}

/// Fits the window-to-state map on a mature state table.
pub fn fit_state_map(dmap: &DiffusionMap, table: &MatureStateTable, cfg: &GhConfig) -> Result<GeometricHarmonics> {
    let targets: Vec<Vec<f64>> = table.states.iter().map(|s| s.to_vec()).collect();
    fit_on_windows(dmap, &table.windows, &targets, cfg)
}

/// Consistent initial state for a window: restrict, then extend.
pub fn coldstart_states(dmap: &DiffusionMap, gh: &GeometricHarmonics, window: &[f64]) -> Result<InternalState> {
    let phi = dmap.restrict(window)?;
    InternalState::from_slice(&evaluate_gh(gh, &phi))
}

/// Fewest sporadic measurements accepted by [`impute_observable`].
pub const MIN_MEASUREMENTS: usize = 20;

/// Imputes a scalar observable at `queries` from sporadic `(window, value)`
/// measurements through geometric harmonics on the restricted coordinates.
pub fn impute_observable(
    dmap: &DiffusionMap,
    measurements: &[(Vec<f64>, f64)],
    queries: &[Vec<f64>],
    cfg: &GhConfig,
) -> Result<Vec<f64>> {
    if measurements.len() < MIN_MEASUREMENTS {
        return Err(invalid!("need at least {MIN_MEASUREMENTS} measurements, got {}", measurements.len()));
    }
    if queries.is_empty() {
        return Ok(Vec::new());
    }
    let rows: Vec<&[f64]> = measurements.iter().map(|(w, _)| w.as_slice()).collect();
    let windows = WindowSet::from_rows(dmap.windows.window_len, &rows)?;
    let targets: Vec<Vec<f64>> = measurements.iter().map(|(_, v)| vec![*v]).collect();
    let gh = fit_on_windows(dmap, &windows, &targets, cfg)?;
    queries.iter().map(|w| Ok(evaluate_gh(&gh, &dmap.restrict(w)?)[0])).collect()
}
