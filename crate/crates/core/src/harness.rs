//! Metrics and experiment drivers.

use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::{BrusselatorParams, Trajectory};
use crate::error::invalid;
use crate::harmonics::{self, GeometricHarmonics};
use crate::linalg;
use crate::lstm::{self, InternalState, LstmModel};
use crate::manifold::DiffusionMap;
use crate::Result;

/// First sample index included in the long-horizon error.
pub const LONG_HORIZON_START: usize = 20;
/// Number of trailing samples compared by [`phase_error`].
pub const PHASE_TAIL: usize = 50;

/// Mean squared error over indices `from..` of two aligned series.
pub fn long_horizon_mse(pred: &[f64], truth: &[f64], from: usize) -> f64 {
    let n = pred.len().min(truth.len());
    if from >= n {
        return f64::NAN;
    }
    let sse: f64 = (from..n).map(|i| (pred[i] - truth[i]) * (pred[i] - truth[i])).sum();
    sse / (n - from) as f64
}

/// Circular lag, in samples, that best aligns `pred` with `truth` over their
/// final `tail` samples. Returned as a magnitude in `0..=tail/2`.
pub fn phase_error(pred: &[f64], truth: &[f64], tail: usize) -> f64 {
    let n = pred.len().min(truth.len());
    let tail = tail.min(n);
    if tail < 2 {
        return 0.0;
    }
    let p = &pred[pred.len() - tail..];
    let t = &truth[truth.len() - tail..];
    let pm = p.iter().sum::<f64>() / tail as f64;
    let tm = t.iter().sum::<f64>() / tail as f64;
    let mut best = (f64::NEG_INFINITY, 0usize);
    for lag in 0..tail {
        let c: f64 = (0..tail).map(|i| (p[(i + lag) % tail] - pm) * (t[i] - tm)).sum();
        if c > best.0 + 1e-12 * c.abs().max(1.0) {
            best = (c, lag);
        }
    }
    let lag = best.1;
    lag.min(tail - lag) as f64
}

/// Natural cubic spline through uniformly spaced samples.
struct Spline {
    dt: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    /// Not-a-knot end conditions: the third derivative is continuous at the
    /// second and the second-to-last knot.
    fn new(dt: f64, y: &[f64]) -> Self {
        let n = y.len();
        let mut m = vec![0.0; n];
        if n == 3 {
            m.fill((y[2] - 2.0 * y[1] + y[0]) / (dt * dt));
        } else if n > 3 {
            // Rows m[i] + 4 m[i+1] + m[i+2] = r[i]. Eliminating the end values
            // fixes m[1] and m[n-2]; the rest is tridiagonal.
            let r: Vec<f64> = (0..n - 2).map(|i| 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]) / (dt * dt)).collect();
            let k = n - 2;
            m[1] = r[0] / 6.0;
            m[n - 2] = r[k - 1] / 6.0;
            let inner = k.saturating_sub(2);
            let mut c = vec![0.0; inner];
            let mut d = vec![0.0; inner];
            for j in 0..inner {
                let mut rhs = r[j + 1];
                if j == 0 {
                    rhs -= m[1];
                }
                if j + 1 == inner {
                    rhs -= m[n - 2];
                }
                let (prev_c, prev_d) = if j == 0 { (0.0, 0.0) } else { (c[j - 1], d[j - 1]) };
                let den = 4.0 - prev_c;
                c[j] = 1.0 / den;
                d[j] = (rhs - prev_d) / den;
            }
            for j in (0..inner).rev() {
                let next = if j + 1 < inner { m[j + 3] } else { 0.0 };
                m[j + 2] = d[j] - c[j] * next;
            }
            m[0] = 2.0 * m[1] - m[2];
            m[n - 1] = 2.0 * m[n - 2] - m[n - 3];
        }
        Spline { dt, y: y.to_vec(), m }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.y.len();
        if n == 1 {
            return self.y[0];
        }
        let i = ((t / self.dt) as usize).min(n - 2);
        let a = (t - i as f64 * self.dt) / self.dt;
        let b = 1.0 - a;
        let h2 = self.dt * self.dt / 6.0;
        b * self.y[i] + a * self.y[i + 1] + ((b * b * b - b) * self.m[i] + (a * a * a - a) * self.m[i + 1]) * h2
    }
}

/// Synchronization error of a forced copy of the hidden equation.
#[derive(Clone, Debug, PartialEq)]
pub struct SyncDemo {
    pub times: Vec<f64>,
    /// `v_ref - v_nn` at every sample time.
    pub e1: Vec<f64>,
    /// Hidden variable driven by the interpolated forcing from the true `v(0)`.
    pub v_ref: Vec<f64>,
    /// Hidden variable driven by the same forcing from `v_nn0`.
    pub v_nn: Vec<f64>,
}

/// Integrates `dv/dt = b u(t) - u(t)^2 v` from the true `v(0)` and from
/// `v_nn0`, with `u(t)` a not-a-knot cubic spline through the samples. Both
/// copies see identical forcing, so their difference obeys
/// `de/dt = -u(t)^2 e`.
pub fn sync_error_demo(params: &BrusselatorParams, v_nn0: f64, trajectory: &Trajectory) -> Result<SyncDemo> {
    let v0 = match &trajectory.v {
        Some(v) if !v.is_empty() => v[0],
        _ => return Err(invalid!("trajectory has no hidden variable")),
    };
    if !v_nn0.is_finite() {
        return Err(invalid!("initial surrogate value must be finite"));
    }
    let spline = Spline::new(trajectory.dt, &trajectory.u);
    let b = params.b();
    let rhs = |t: f64, v: f64| {
        let u = spline.eval(t);
        b * u - u * u * v
    };
    let substeps = crate::dynamics::SUBSTEPS;
    let h = trajectory.dt / substeps as f64;
    let n = trajectory.len();
    let mut v_ref = Vec::with_capacity(n);
    let mut v_nn = Vec::with_capacity(n);
    let (mut a, mut z) = (v0, v_nn0);
    v_ref.push(a);
    v_nn.push(z);
    for k in 0..n.saturating_sub(1) {
        for s in 0..substeps {
            let t = k as f64 * trajectory.dt + s as f64 * h;
            a = rk4_scalar(&rhs, t, a, h);
            z = rk4_scalar(&rhs, t, z, h);
        }
        v_ref.push(a);
        v_nn.push(z);
    }
    let e1 = v_ref.iter().zip(&v_nn).map(|(r, s)| r - s).collect();
    Ok(SyncDemo { times: trajectory.times().collect(), e1, v_ref, v_nn })
}

fn rk4_scalar(f: &impl Fn(f64, f64) -> f64, t: f64, y: f64, h: f64) -> f64 {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
    let k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
    let k4 = f(t + h, y + h * k3);
    y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// How a rollout is initialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Zero state, then this many true observations.
    Warmup(usize),
    /// State inferred from the first [`ComparisonConfig::window_len`]
    /// observations.
    ColdStart,
}

impl core::fmt::Display for Strategy {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Strategy::Warmup(n) => write!(f, "warmup-{n}"),
            Strategy::ColdStart => f.write_str("coldstart"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonConfig {
    pub warmups: Vec<usize>,
    pub include_coldstart: bool,
    pub window_len: usize,
    /// Sample index where each run starts observing.
    pub window_start: usize,
    pub long_horizon_start: usize,
    pub phase_tail: usize,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        ComparisonConfig {
            warmups: vec![50, 25, 5, 0],
            include_coldstart: true,
            window_len: 5,
            window_start: 0,
            long_horizon_start: LONG_HORIZON_START,
            phase_tail: PHASE_TAIL,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub trajectory: usize,
    pub strategy: Strategy,
    pub long_mse: f64,
    pub phase_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrategySummary {
    pub strategy: Strategy,
    pub mean_mse: f64,
    pub median_mse: f64,
    pub mean_phase: f64,
    pub median_phase: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub config: ComparisonConfig,
    /// Ordered by trajectory, then strategy.
    pub rows: Vec<ComparisonRow>,
    pub summaries: Vec<StrategySummary>,
}

impl ComparisonReport {
    pub fn strategies(&self) -> Vec<Strategy> {
        self.summaries.iter().map(|s| s.strategy).collect()
    }

    pub fn rows_for(&self, strategy: Strategy) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(move |r| r.strategy == strategy)
    }

    pub fn summary(&self, strategy: Strategy) -> Option<&StrategySummary> {
        self.summaries.iter().find(|s| s.strategy == strategy)
    }

    /// Fraction of trajectories on which `a` has strictly lower long-horizon
    /// error than `b`.
    pub fn win_rate(&self, a: Strategy, b: Strategy) -> f64 {
        let xa: Vec<f64> = self.rows_for(a).map(|r| r.long_mse).collect();
        let xb: Vec<f64> = self.rows_for(b).map(|r| r.long_mse).collect();
        if xa.is_empty() || xa.len() != xb.len() {
            return f64::NAN;
        }
        xa.iter().zip(&xb).filter(|(x, y)| x < y).count() as f64 / xa.len() as f64
    }
}

/// Prediction of `u` for the whole trajectory under one strategy, aligned so
/// that `out[i]` estimates `u[i]`. Samples before the first prediction are NaN.
pub fn strategy_prediction(
    model: &LstmModel,
    cold: Option<(&DiffusionMap, &GeometricHarmonics)>,
    u: &[f64],
    strategy: Strategy,
    cfg: &ComparisonConfig,
) -> Result<Vec<f64>> {
    let s = cfg.window_start;
    let mut out = vec![f64::NAN; u.len()];
    match strategy {
        Strategy::Warmup(n) => {
            if s + 1 >= u.len() {
                return Err(invalid!("window start {s} leaves nothing to predict"));
            }
            let r = lstm::rollout_series(model, &u[s..], n, &InternalState::zeros())?;
            out[s + 1..].copy_from_slice(&r.predictions);
        }
        Strategy::ColdStart => {
            let (dmap, gh) = cold.ok_or_else(|| invalid!("cold start needs a diffusion map and harmonics"))?;
            let end = s + cfg.window_len;
            if end >= u.len() {
                return Err(invalid!("window ending at {end} leaves nothing to predict"));
            }
            let window = &u[s..end];
            let init = harmonics::coldstart_states(dmap, gh, window)?;
            let r = lstm::coldstart_rollout(model, window, &init, u.len() - end)?;
            out[end..].copy_from_slice(&r.predictions);
        }
    }
    Ok(out)
}

/// Runs every strategy on every trajectory and scores the predictions.
pub fn compare_initialization(
    model: &LstmModel,
    cold: Option<(&DiffusionMap, &GeometricHarmonics)>,
    trajectories: &[Trajectory],
    cfg: &ComparisonConfig,
) -> Result<ComparisonReport> {
    let mut strategies: Vec<Strategy> = cfg.warmups.iter().map(|&n| Strategy::Warmup(n)).collect();
    if cfg.include_coldstart {
        strategies.push(Strategy::ColdStart);
    }
    let mut rows = Vec::with_capacity(trajectories.len() * strategies.len());
    for (ti, t) in trajectories.iter().enumerate() {
        for &strategy in &strategies {
            let pred = strategy_prediction(model, cold, &t.u, strategy, cfg)?;
            rows.push(ComparisonRow {
                trajectory: ti,
                strategy,
                long_mse: long_horizon_mse(&pred, &t.u, cfg.long_horizon_start),
                phase_error: phase_error(&pred, &t.u, cfg.phase_tail),
            });
        }
    }
    let summaries = strategies
        .iter()
        .map(|&strategy| {
            let mut mse: Vec<f64> = rows.iter().filter(|r| r.strategy == strategy).map(|r| r.long_mse).collect();
            let mut ph: Vec<f64> = rows.iter().filter(|r| r.strategy == strategy).map(|r| r.phase_error).collect();
            StrategySummary {
                strategy,
                mean_mse: mean(&mse),
                median_mse: linalg::median_in_place(&mut mse).unwrap_or(f64::NAN),
                mean_phase: mean(&ph),
                median_phase: linalg::median_in_place(&mut ph).unwrap_or(f64::NAN),
            }
        })
        .collect();
    Ok(ComparisonReport { config: cfg.clone(), rows, summaries })
}

fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        f64::NAN
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

/// Cell-state point cloud used as the reference for attraction measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct MatureCloud {
    pub points: Vec<[f64; lstm::D]>,
}

impl MatureCloud {
    pub fn from_table(table: &harmonics::MatureStateTable) -> Self {
        MatureCloud {
            points: table
                .states
                .iter()
                .map(|s| {
                    let mut c = [0.0; lstm::D];
                    c.copy_from_slice(&s[..lstm::D]);
                    c
                })
                .collect(),
        }
    }

    /// Euclidean distance from `c` to the nearest cloud point.
    pub fn distance(&self, c: &[f64; lstm::D]) -> f64 {
        let best = self.points.iter().map(|p| linalg::sq_dist(p, c)).fold(f64::INFINITY, f64::min);
        libm::sqrt(best)
    }
}

/// Free-running trajectories of the internal state and their approach to the
/// mature cloud. Step `t` is the state after `t` consumed inputs; step 0 is
/// the zero initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateManifoldReport {
    /// `states[i][t]` for trajectory `i`.
    pub states: Vec<Vec<InternalState>>,
    /// `distances[i][t]`: distance of `c_t` to the mature cloud.
    pub distances: Vec<Vec<f64>>,
    /// Per-step median of `distances` over trajectories.
    pub median_distance: Vec<f64>,
}

impl StateManifoldReport {
    /// Fraction of trajectories whose distance at step `t` is at most
    /// `ratio` times their distance at step 1.
    pub fn attracted_fraction(&self, t: usize, ratio: f64) -> f64 {
        let ok = self.distances.iter().filter(|d| t < d.len() && d[t] <= ratio * d[1]).count();
        ok as f64 / self.distances.len().max(1) as f64
    }
}

/// Zero-warmup autoregressive rollouts of `trajectories`, measured against
/// `cloud`.
pub fn state_manifold_report(
    model: &LstmModel,
    trajectories: &[Trajectory],
    cloud: &MatureCloud,
) -> Result<StateManifoldReport> {
    let mut states = Vec::with_capacity(trajectories.len());
    let mut distances = Vec::with_capacity(trajectories.len());
    for t in trajectories {
        let r = lstm::rollout(model, t, 0, &InternalState::zeros())?;
        let mut s = Vec::with_capacity(r.states.len() + 1);
        s.push(InternalState::zeros());
        s.extend(r.states);
        distances.push(s.iter().map(|x| cloud.distance(&x.c)).collect::<Vec<_>>());
        states.push(s);
    }
    let steps = distances.iter().map(|d| d.len()).min().unwrap_or(0);
    let median_distance = (0..steps)
        .map(|k| {
            let mut col: Vec<f64> = distances.iter().map(|d| d[k]).collect();
            linalg::median_in_place(&mut col).unwrap_or(f64::NAN)
        })
        .collect();
    Ok(StateManifoldReport { states, distances, median_distance })
}
