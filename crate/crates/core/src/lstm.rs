//! Single-layer LSTM with four cells and a linear read-out.
//!
//! Parameters live in one flat vector. Each of the four gate blocks (input,
//! forget, candidate, output) holds an input weight column, a 4×4 recurrent
//! matrix and a bias, followed by the decoder row and decoder bias.

use alloc::vec;
use alloc::vec::Vec;

use crate::adam::{Adam, PlateauHalving};
use crate::dynamics::{Dataset, Trajectory};
use crate::error::invalid;
use crate::rng::{streams, Rng};
use crate::{Error, Result};

/// Number of LSTM cells.
pub const D: usize = 4;
const GATE_LEN: usize = D + D * D + D;
const DECODER: usize = 4 * GATE_LEN;
/// Total number of scalar parameters.
pub const N_PARAMS: usize = DECODER + D + 1;

/// Gate order inside the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Candidate = 2,
    Output = 3,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Candidate, Gate::Output];

    pub fn name(self) -> &'static str {
        match self {
            Gate::Input => "input",
            Gate::Forget => "forget",
            Gate::Candidate => "candidate",
            Gate::Output => "output",
        }
    }
}

/// A named, shaped slice of the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

/// Parameter blocks in storage order.
pub const BLOCKS: [Block; 14] = {
    const fn gate(i: usize, names: [&'static str; 3]) -> [Block; 3] {
        let base = i * GATE_LEN;
        [
            Block { name: names[0], rows: D, cols: 1, offset: base },
            Block { name: names[1], rows: D, cols: D, offset: base + D },
            Block { name: names[2], rows: D, cols: 1, offset: base + D + D * D },
        ]
    }
    let i = gate(0, ["input.w_in", "input.w_rec", "input.bias"]);
    let f = gate(1, ["forget.w_in", "forget.w_rec", "forget.bias"]);
    let g = gate(2, ["candidate.w_in", "candidate.w_rec", "candidate.bias"]);
    let o = gate(3, ["output.w_in", "output.w_rec", "output.bias"]);
    [
        i[0],
        i[1],
        i[2],
        f[0],
        f[1],
        f[2],
        g[0],
        g[1],
        g[2],
        o[0],
        o[1],
        o[2],
        Block { name: "decoder.weight", rows: 1, cols: D, offset: DECODER },
        Block { name: "decoder.bias", rows: 1, cols: 1, offset: DECODER + D },
    ]
};

#[derive(Clone, Debug, PartialEq)]
pub struct LstmModel {
    params: Vec<f64>,
}

impl LstmModel {
    pub fn zeros() -> Self {
        LstmModel { params: vec![0.0; N_PARAMS] }
    }

    pub fn from_params(params: Vec<f64>) -> Result<Self> {
        if params.len() != N_PARAMS {
            return Err(invalid!("expected {N_PARAMS} LSTM parameters, got {}", params.len()));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(invalid!("LSTM parameters must be finite"));
        }
        Ok(LstmModel { params })
    }

    /// Every parameter uniform in `[-1/sqrt(D), 1/sqrt(D)]`.
    pub fn random(seed: u64) -> Self {
        let mut rng = Rng::new(seed, streams::LSTM_INIT);
        let r = 1.0 / libm::sqrt(D as f64);
        LstmModel { params: (0..N_PARAMS).map(|_| rng.uniform_in(-r, r)).collect() }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn block(&self, name: &str) -> Option<&[f64]> {
        BLOCKS.iter().find(|b| b.name == name).map(|b| &self.params[b.offset..b.offset + b.rows * b.cols])
    }

    pub fn block_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let b = BLOCKS.iter().find(|b| b.name == name)?;
        Some(&mut self.params[b.offset..b.offset + b.rows * b.cols])
    }

    pub fn gate_bias_mut(&mut self, gate: Gate) -> &mut [f64] {
        let base = gate as usize * GATE_LEN + D + D * D;
        &mut self.params[base..base + D]
    }

    /// `W·h + b`.
    pub fn decode(&self, h: &[f64; D]) -> f64 {
        let w = &self.params[DECODER..DECODER + D];
        w[0] * h[0] + w[1] * h[1] + w[2] * h[2] + w[3] * h[3] + self.params[DECODER + D]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InternalState {
    pub c: [f64; D],
    pub h: [f64; D],
}

impl InternalState {
    pub fn zeros() -> Self {
        Self::default()
    }

    /// `c` followed by `h`.
    pub fn to_vec(&self) -> [f64; 2 * D] {
        let mut out = [0.0; 2 * D];
        out[..D].copy_from_slice(&self.c);
        out[D..].copy_from_slice(&self.h);
        out
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        if x.len() != 2 * D {
            return Err(invalid!("a state has {} components, got {}", 2 * D, x.len()));
        }
        let mut s = InternalState::zeros();
        s.c.copy_from_slice(&x[..D]);
        s.h.copy_from_slice(&x[D..]);
        Ok(s)
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Activated gates of one step plus `tanh(c')`, kept for backpropagation.
#[derive(Clone, Copy, Default)]
struct StepCache {
    x: f64,
    prev: InternalState,
    gates: [[f64; D]; 4],
    tanh_c: [f64; D],
    next: InternalState,
}

#[inline]
fn forward_step(p: &[f64], x: f64, prev: &InternalState) -> StepCache {
    let mut gates = [[0.0; D]; 4];
    for (k, gate) in gates.iter_mut().enumerate() {
        let base = k * GATE_LEN;
        for j in 0..D {
            let rec = &p[base + D + j * D..base + D + j * D + D];
            let a = p[base + j] * x
                + rec[0] * prev.h[0]
                + rec[1] * prev.h[1]
                + rec[2] * prev.h[2]
                + rec[3] * prev.h[3]
                + p[base + D + D * D + j];
            gate[j] = if k == Gate::Candidate as usize { libm::tanh(a) } else { sigmoid(a) };
        }
    }
    let [i, f, g, o] = gates;
    let mut next = InternalState::zeros();
    let mut tanh_c = [0.0; D];
    for j in 0..D {
        next.c[j] = f[j] * prev.c[j] + i[j] * g[j];
        tanh_c[j] = libm::tanh(next.c[j]);
        next.h[j] = o[j] * tanh_c[j];
    }
    StepCache { x, prev: *prev, gates, tanh_c, next }
}

/// Consumes `u_t`, returning the new state and the decoded `û_{t+1}`.
pub fn cell_step(u_t: f64, prev: &InternalState, model: &LstmModel) -> (InternalState, f64) {
    let step = forward_step(&model.params, u_t, prev);
    (step.next, model.decode(&step.next.h))
}

/// Output of an autoregressive run.
#[derive(Clone, Debug, PartialEq)]
pub struct RolloutRecord {
    /// One-step predictions in time order.
    pub predictions: Vec<f64>,
    /// State after each consumed input.
    pub states: Vec<InternalState>,
    pub warmup_len: usize,
}

/// Runs the model over `trajectory` from `init`.
///
/// The first `max(warmup_len, 1)` inputs are true observations, after which
/// predictions are fed back. `predictions[k]` estimates `u[k + 1]`, so a run
/// over `n` samples yields `n - 1` predictions and `n - 1` states.
/// `warmup_len = n - 1` is plain teacher forcing.
pub fn rollout(model: &LstmModel, trajectory: &Trajectory, warmup_len: usize, init: &InternalState) -> Result<RolloutRecord> {
    rollout_series(model, &trajectory.u, warmup_len, init)
}

/// [`rollout`] on a bare slice of observations.
pub fn rollout_series(model: &LstmModel, u: &[f64], warmup_len: usize, init: &InternalState) -> Result<RolloutRecord> {
    if u.len() < 2 {
        return Err(invalid!("rollout needs at least two samples, got {}", u.len()));
    }
    if warmup_len + 1 > u.len() {
        return Err(invalid!("warmup of {warmup_len} steps exceeds a trajectory of {} samples", u.len()));
    }
    let n = u.len() - 1;
    let n_true = warmup_len.max(1);
    let mut predictions = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    let mut state = *init;
    let mut x = u[0];
    for k in 0..n {
        if k < n_true {
            x = u[k];
        }
        let (next, y) = cell_step(x, &state, model);
        state = next;
        predictions.push(y);
        states.push(state);
        x = y;
    }
    Ok(RolloutRecord { predictions, states, warmup_len })
}

/// Teacher-forced states after consuming each of `u[0..]`.
pub fn teacher_forced_states(model: &LstmModel, u: &[f64]) -> Vec<InternalState> {
    let mut state = InternalState::zeros();
    u.iter()
        .map(|&x| {
            state = forward_step(&model.params, x, &state).next;
            state
        })
        .collect()
}

/// Autoregressive run from a state that has already consumed the last element
/// of `window`. The first prediction is read off `init` directly.
/// `states` starts with `init` and gains one entry per fed-back prediction.
pub fn coldstart_rollout(model: &LstmModel, window: &[f64], init: &InternalState, horizon: usize) -> Result<RolloutRecord> {
    if window.iter().any(|x| !x.is_finite()) {
        return Err(invalid!("window contains non-finite observations"));
    }
    let mut predictions = Vec::with_capacity(horizon);
    let mut states = Vec::with_capacity(horizon.max(1));
    let mut state = *init;
    states.push(state);
    if horizon > 0 {
        let mut y = model.decode(&state.h);
        predictions.push(y);
        for _ in 1..horizon {
            let (next, y_next) = cell_step(y, &state, model);
            state = next;
            states.push(state);
            predictions.push(y_next);
            y = y_next;
        }
    }
    Ok(RolloutRecord { predictions, states, warmup_len: 0 })
}

/// Sum of squared one-step errors over a teacher-forced sequence, with its
/// gradient accumulated (scaled by `scale`) into `grad`.
fn sequence_loss_grad(p: &[f64], u: &[f64], scale: f64, grad: &mut [f64], cache: &mut Vec<StepCache>) -> f64 {
    let n = u.len() - 1;
    cache.clear();
    let mut state = InternalState::zeros();
    let mut sse = 0.0;
    for &x in &u[..n] {
        let step = forward_step(p, x, &state);
        state = step.next;
        cache.push(step);
    }
    let w = &p[DECODER..DECODER + D];
    let b = p[DECODER + D];
    let mut dh_next = [0.0; D];
    let mut dc_next = [0.0; D];
    for k in (0..n).rev() {
        let s = &cache[k];
        let h = &s.next.h;
        let y = w[0] * h[0] + w[1] * h[1] + w[2] * h[2] + w[3] * h[3] + b;
        let r = y - u[k + 1];
        sse += r * r;
        let dy = 2.0 * r * scale;
        for j in 0..D {
            grad[DECODER + j] += dy * h[j];
        }
        grad[DECODER + D] += dy;

        let [i, f, g, o] = s.gates;
        let mut da = [[0.0; D]; 4];
        let mut dc_prev = [0.0; D];
        for j in 0..D {
            let dh = dh_next[j] + dy * w[j];
            let tc = s.tanh_c[j];
            let dc = dc_next[j] + dh * o[j] * (1.0 - tc * tc);
            da[0][j] = dc * g[j] * i[j] * (1.0 - i[j]);
            da[1][j] = dc * s.prev.c[j] * f[j] * (1.0 - f[j]);
            da[2][j] = dc * i[j] * (1.0 - g[j] * g[j]);
            da[3][j] = dh * tc * o[j] * (1.0 - o[j]);
            dc_prev[j] = dc * f[j];
        }
        let mut dh_prev = [0.0; D];
        for (kg, dak) in da.iter().enumerate() {
            let base = kg * GATE_LEN;
            for j in 0..D {
                let a = dak[j];
                grad[base + j] += a * s.x;
                let row = base + D + j * D;
                for m in 0..D {
                    grad[row + m] += a * s.prev.h[m];
                    dh_prev[m] += p[row + m] * a;
                }
                grad[base + D + D * D + j] += a;
            }
        }
        dh_next = dh_prev;
        dc_next = dc_prev;
    }
    sse
}

/// Mean squared one-step error over `trajectories` under teacher forcing, and
/// its gradient with respect to the flat parameter vector.
pub fn loss_and_grad(model: &LstmModel, trajectories: &[&[f64]]) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; N_PARAMS];
    let count: usize = trajectories.iter().map(|u| u.len().saturating_sub(1)).sum();
    if count == 0 {
        return (0.0, grad);
    }
    let scale = 1.0 / count as f64;
    let mut cache = Vec::new();
    let mut sse = 0.0;
    for u in trajectories.iter().filter(|u| u.len() >= 2) {
        sse += sequence_loss_grad(&model.params, u, scale, &mut grad, &mut cache);
    }
    (sse * scale, grad)
}

/// Teacher-forced mean squared one-step error.
pub fn teacher_forced_mse(model: &LstmModel, trajectories: &[Trajectory]) -> f64 {
    let mut sse = 0.0;
    let mut count = 0usize;
    for t in trajectories {
        let mut state = InternalState::zeros();
        for k in 0..t.u.len().saturating_sub(1) {
            let (next, y) = cell_step(t.u[k], &state, model);
            state = next;
            let r = y - t.u[k + 1];
            sse += r * r;
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sse / count as f64
    }
}

/// Optimisation schedule shared by the LSTM and the latent model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub lr_halving_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 1000, batch_size: 128, lr0: 5e-3, lr_halving_patience: 25, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(invalid!("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(invalid!("batch size must be at least 1"));
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return Err(invalid!("learning rate must be positive, got {}", self.lr0));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean of the minibatch losses seen during the epoch.
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport<M> {
    /// Parameters at the epoch with the lowest validation loss.
    pub model: M,
    pub best_epoch: usize,
    pub history: Vec<EpochStats>,
}

/// Teacher-forced training with Adam over minibatches of whole trajectories.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<TrainReport<LstmModel>> {
    train_with_progress(dataset, config, |_| {})
}

pub fn train_with_progress(
    dataset: &Dataset,
    config: &TrainConfig,
    mut progress: impl FnMut(&EpochStats),
) -> Result<TrainReport<LstmModel>> {
    config.validate()?;
    if dataset.train.is_empty() {
        return Err(invalid!("training split is empty"));
    }
    let mut model = LstmModel::random(config.seed);
    let mut opt = Adam::new(N_PARAMS, config.lr0);
    let mut plateau = PlateauHalving::new(config.lr_halving_patience);
    let mut shuffle = Rng::new(config.seed, streams::LSTM_SHUFFLE);
    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    let mut best = (f64::INFINITY, 0usize, model.clone());
    let mut history = Vec::with_capacity(config.epochs);
    let mut batch: Vec<&[f64]> = Vec::with_capacity(config.batch_size);

    for epoch in 1..=config.epochs {
        shuffle.shuffle(&mut order);
        let mut weighted = 0.0;
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| dataset.train[i].u.as_slice()));
            let (loss, grad) = loss_and_grad(&model, &batch);
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch, loss });
            }
            opt.step(&mut model.params, &grad);
            weighted += loss * chunk.len() as f64;
        }
        let train_loss = weighted / dataset.train.len() as f64;
        let val_loss = if dataset.val.is_empty() { train_loss } else { teacher_forced_mse(&model, &dataset.val) };
        if !val_loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch, loss: val_loss });
        }
        if val_loss < best.0 {
            best = (val_loss, epoch, model.clone());
        }
        let stats = EpochStats { epoch, train_loss, val_loss, lr: opt.lr };
        progress(&stats);
        history.push(stats);
        if plateau.observe(train_loss) {
            opt.lr *= 0.5;
        }
    }
    Ok(TrainReport { model: best.2, best_epoch: best.1, history })
}
