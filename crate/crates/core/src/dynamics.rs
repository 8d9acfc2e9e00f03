//! Brusselator ground truth and the partially observed datasets built from it.

use alloc::vec::Vec;

use crate::error::invalid;
use crate::rng::{streams, Rng};
use crate::{Error, Result};

/// Rate constants of the Brusselator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrusselatorParams {
    a: f64,
    b: f64,
}

impl BrusselatorParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
            return Err(invalid!("Brusselator rates must be positive and finite (a = {a}, b = {b})"));
        }
        Ok(BrusselatorParams { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// The unique equilibrium `(a, b / a)`.
    pub fn fixed_point(&self) -> (f64, f64) {
        (self.a, self.b / self.a)
    }
}

impl Default for BrusselatorParams {
    /// `a = 1`, `b = 2.1`: a stable limit cycle just past the Hopf point.
    fn default() -> Self {
        BrusselatorParams { a: 1.0, b: 2.1 }
    }
}

/// `(du/dt, dv/dt)` at `(u, v)`.
#[inline]
pub fn brusselator_rhs(state: (f64, f64), params: &BrusselatorParams) -> (f64, f64) {
    let (u, v) = state;
    let u2v = u * u * v;
    (params.a + u2v - (params.b + 1.0) * u, params.b * u - u2v)
}

/// A uniformly sampled time series. `v` is the hidden variable; it is kept
/// for evaluation but never fed to the models.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub u: Vec<f64>,
    pub v: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn new(dt: f64, u: Vec<f64>, v: Option<Vec<f64>>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid!("sampling interval must be positive, got {dt}"));
        }
        if let Some(v) = &v {
            if v.len() != u.len() {
                return Err(invalid!("u has {} samples but v has {}", u.len(), v.len()));
            }
        }
        let all_finite = u.iter().chain(v.iter().flatten()).all(|x| x.is_finite());
        if !all_finite {
            return Err(invalid!("trajectory contains non-finite samples"));
        }
        Ok(Trajectory { dt, u, v })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.u.len()).map(move |i| i as f64 * self.dt)
    }

    /// Observed-only copy.
    pub fn observed(&self) -> Trajectory {
        Trajectory { dt: self.dt, u: self.u.clone(), v: None }
    }
}

/// Number of RK4 steps per output sample used by [`integrate_and_sample`].
pub const SUBSTEPS: usize = 20;

/// Integrates with classical RK4 at `h = dt_sample / SUBSTEPS` and records
/// both variables every `dt_sample`, including `t = 0`.
pub fn integrate_and_sample(
    params: &BrusselatorParams,
    ic: (f64, f64),
    t_end: f64,
    dt_sample: f64,
) -> Result<Trajectory> {
    integrate_with_substeps(params, ic, t_end, dt_sample, SUBSTEPS)
}

/// Same as [`integrate_and_sample`] with an explicit number of internal steps
/// per sample.
pub fn integrate_with_substeps(
    params: &BrusselatorParams,
    ic: (f64, f64),
    t_end: f64,
    dt_sample: f64,
    substeps: usize,
) -> Result<Trajectory> {
    if !(t_end > 0.0 && dt_sample > 0.0 && t_end.is_finite() && dt_sample.is_finite()) {
        return Err(invalid!("need t_end > 0 and dt_sample > 0 (got {t_end}, {dt_sample})"));
    }
    if substeps == 0 {
        return Err(invalid!("substeps must be at least 1"));
    }
    if !(ic.0.is_finite() && ic.1.is_finite()) {
        return Err(invalid!("initial condition must be finite"));
    }
    let samples = libm::round(t_end / dt_sample) as usize;
    let h = dt_sample / substeps as f64;
    let mut u = Vec::with_capacity(samples + 1);
    let mut v = Vec::with_capacity(samples + 1);
    let mut state = ic;
    u.push(state.0);
    v.push(state.1);
    for s in 0..samples {
        for _ in 0..substeps {
            state = rk4_step(state, h, params);
        }
        if !(state.0.is_finite() && state.1.is_finite()) {
            return Err(Error::IntegrationDiverged { t: (s + 1) as f64 * dt_sample });
        }
        u.push(state.0);
        v.push(state.1);
    }
    Ok(Trajectory { dt: dt_sample, u, v: Some(v) })
}

#[inline]
fn rk4_step(y: (f64, f64), h: f64, p: &BrusselatorParams) -> (f64, f64) {
    let k1 = brusselator_rhs(y, p);
    let k2 = brusselator_rhs((y.0 + 0.5 * h * k1.0, y.1 + 0.5 * h * k1.1), p);
    let k3 = brusselator_rhs((y.0 + 0.5 * h * k2.0, y.1 + 0.5 * h * k2.1), p);
    let k4 = brusselator_rhs((y.0 + h * k3.0, y.1 + h * k3.1), p);
    (
        y.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        y.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

/// Box of initial conditions `(u0 in [low, high], v0 in [low, high])`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IcRanges {
    pub u: (f64, f64),
    pub v: (f64, f64),
}

impl Default for IcRanges {
    fn default() -> Self {
        IcRanges { u: (0.0, 2.0), v: (0.0, 3.0) }
    }
}

/// Sampling protocol shared by every trajectory of a dataset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingConfig {
    pub params: BrusselatorParams,
    pub ic_ranges: IcRanges,
    pub t_end: f64,
    pub dt_sample: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { params: BrusselatorParams::default(), ic_ranges: IcRanges::default(), t_end: 20.0, dt_sample: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub train: Vec<Trajectory>,
    pub val: Vec<Trajectory>,
    pub test: Vec<Trajectory>,
    pub seed: u64,
    pub sampling: SamplingConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Dataset {
    pub fn split(&self, split: Split) -> &[Trajectory] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Initial condition of trajectory `index` (global index over
/// train, then val, then test). Each index owns its own random stream.
pub fn initial_condition(seed: u64, index: u64, ranges: &IcRanges) -> (f64, f64) {
    let mut rng = Rng::new(seed, streams::TRAJECTORIES + index);
    let u0 = rng.uniform_in(ranges.u.0, ranges.u.1);
    let v0 = rng.uniform_in(ranges.v.0, ranges.v.1);
    (u0, v0)
}

/// Dataset with the default sampling protocol.
pub fn generate_dataset(n_train: usize, n_val: usize, n_test: usize, seed: u64) -> Result<Dataset> {
    generate_dataset_with(n_train, n_val, n_test, seed, &SamplingConfig::default())
}

pub fn generate_dataset_with(
    n_train: usize,
    n_val: usize,
    n_test: usize,
    seed: u64,
    sampling: &SamplingConfig,
) -> Result<Dataset> {
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(invalid!("every split needs at least one trajectory"));
    }
    let mut all = Vec::with_capacity(n_train + n_val + n_test);
    for index in 0..(n_train + n_val + n_test) {
        let ic = initial_condition(seed, index as u64, &sampling.ic_ranges);
        all.push(integrate_and_sample(&sampling.params, ic, sampling.t_end, sampling.dt_sample)?);
    }
    let test = all.split_off(n_train + n_val);
    let val = all.split_off(n_train);
    Ok(Dataset { train: all, val, test, seed, sampling: *sampling })
}
