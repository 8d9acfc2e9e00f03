//! One-step dynamics on the diffusion coordinates, learned by a small
//! feed-forward network with swish activations.

use alloc::vec;
use alloc::vec::Vec;

use crate::adam::{Adam, PlateauHalving};
use crate::dynamics::Trajectory;
use crate::error::invalid;
use crate::lstm::{EpochStats, TrainConfig, TrainReport};
use crate::manifold::{extract_windows, DiffusionMap};
use crate::rng::{streams, Rng};
use crate::{Error, Result};

/// Layer widths, input to output.
pub const WIDTHS: [usize; 5] = [2, 64, 64, 64, 2];
const LAYERS: usize = WIDTHS.len() - 1;

const fn param_count() -> usize {
    let mut n = 0;
    let mut l = 0;
    while l < LAYERS {
        n += WIDTHS[l + 1] * (WIDTHS[l] + 1);
        l += 1;
    }
    n
}

/// Total number of scalar parameters.
pub const N_PARAMS: usize = param_count();

/// Offset of layer `l`'s weight matrix (row-major, `out x in`); its bias
/// follows immediately.
const fn layer_offset(l: usize) -> usize {
    let mut n = 0;
    let mut k = 0;
    while k < l {
        n += WIDTHS[k + 1] * (WIDTHS[k] + 1);
        k += 1;
    }
    n
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// `x * sigmoid(x)`.
#[inline]
pub fn swish(x: f64) -> f64 {
    x * sigmoid(x)
}

#[inline]
fn swish_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s + x * s * (1.0 - s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatentModel {
    params: Vec<f64>,
    pub in_mean: [f64; 2],
    pub in_std: [f64; 2],
    pub out_mean: [f64; 2],
    pub out_std: [f64; 2],
}

impl LatentModel {
    /// Default PyTorch-style init: uniform in `±1/sqrt(fan_in)`.
    pub fn random(seed: u64) -> Self {
        let mut rng = Rng::new(seed, streams::LATENT_INIT);
        let mut params = Vec::with_capacity(N_PARAMS);
        for l in 0..LAYERS {
            let r = 1.0 / libm::sqrt(WIDTHS[l] as f64);
            for _ in 0..WIDTHS[l + 1] * (WIDTHS[l] + 1) {
                params.push(rng.uniform_in(-r, r));
            }
        }
        LatentModel { params, in_mean: [0.0; 2], in_std: [1.0; 2], out_mean: [0.0; 2], out_std: [1.0; 2] }
    }

    pub fn from_parts(
        params: Vec<f64>,
        in_mean: [f64; 2],
        in_std: [f64; 2],
        out_mean: [f64; 2],
        out_std: [f64; 2],
    ) -> Result<Self> {
        if params.len() != N_PARAMS {
            return Err(invalid!("expected {N_PARAMS} latent parameters, got {}", params.len()));
        }
        let stats = in_mean.iter().chain(&in_std).chain(&out_mean).chain(&out_std);
        if params.iter().chain(stats).any(|x| !x.is_finite()) || in_std.iter().chain(&out_std).any(|&s| s <= 0.0) {
            return Err(invalid!("latent parameters must be finite with positive scales"));
        }
        Ok(LatentModel { params, in_mean, in_std, out_mean, out_std })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Network output on standardized input.
    pub fn forward_standardized(&self, z: [f64; 2]) -> [f64; 2] {
        let mut a: Vec<f64> = z.to_vec();
        for l in 0..LAYERS {
            let (n_in, n_out) = (WIDTHS[l], WIDTHS[l + 1]);
            let w = &self.params[layer_offset(l)..];
            let mut next = vec![0.0; n_out];
            for (o, y) in next.iter_mut().enumerate() {
                let row = &w[o * n_in..(o + 1) * n_in];
                let pre = row.iter().zip(&a).map(|(wi, ai)| wi * ai).sum::<f64>() + w[n_out * n_in + o];
                *y = if l + 1 < LAYERS { swish(pre) } else { pre };
            }
            a = next;
        }
        [a[0], a[1]]
    }

    /// `g(phi)` in embedding units.
    pub fn step(&self, phi: [f64; 2]) -> [f64; 2] {
        let z = [(phi[0] - self.in_mean[0]) / self.in_std[0], (phi[1] - self.in_mean[1]) / self.in_std[1]];
        let y = self.forward_standardized(z);
        [y[0] * self.out_std[0] + self.out_mean[0], y[1] * self.out_std[1] + self.out_mean[1]]
    }
}

/// Consecutive coordinate pairs, one trajectory at a time.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct TransitionSet {
    pub inputs: Vec<[f64; 2]>,
    pub outputs: Vec<[f64; 2]>,
    /// Source trajectory of every pair.
    pub trajectory: Vec<usize>,
}

impl TransitionSet {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn push(&mut self, from: [f64; 2], to: [f64; 2], trajectory: usize) {
        self.inputs.push(from);
        self.outputs.push(to);
        self.trajectory.push(trajectory);
    }

    fn subset(&self, keep: impl Fn(usize) -> bool) -> TransitionSet {
        let mut out = TransitionSet::default();
        for i in 0..self.len() {
            if keep(self.trajectory[i]) {
                out.push(self.inputs[i], self.outputs[i], self.trajectory[i]);
            }
        }
        out
    }
}

/// Restricts every unit-stride window of every trajectory and pairs each
/// with its successor.
pub fn build_transitions(dmap: &DiffusionMap, trajectories: &[Trajectory], window_len: usize) -> Result<TransitionSet> {
    if dmap.selected.len() < 2 {
        return Err(invalid!("the diffusion map has {} selected coordinates, need 2", dmap.selected.len()));
    }
    if window_len != dmap.windows.window_len {
        return Err(invalid!("window length {window_len} does not match the map's {}", dmap.windows.window_len));
    }
    let mut out = TransitionSet::default();
    for (ti, t) in trajectories.iter().enumerate() {
        let w = extract_windows(core::slice::from_ref(t), window_len, 1)?;
        let phi = (0..w.len())
            .map(|i| dmap.restrict(w.row(i)).map(|p| [p[0], p[1]]))
            .collect::<Result<Vec<_>>>()?;
        for k in 1..phi.len() {
            out.push(phi[k - 1], phi[k], ti);
        }
    }
    Ok(out)
}

fn mean_std(x: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    let n = x.len() as f64;
    let mut mean = [0.0; 2];
    let mut std = [0.0; 2];
    for d in 0..2 {
        mean[d] = x.iter().map(|v| v[d]).sum::<f64>() / n;
        let var = x.iter().map(|v| (v[d] - mean[d]) * (v[d] - mean[d])).sum::<f64>() / n;
        std[d] = if var > 0.0 { libm::sqrt(var) } else { 1.0 };
    }
    (mean, std)
}

/// Activations of one minibatch, kept for the backward pass.
struct Batch {
    /// `pre[l]`: pre-activations of layer `l`, `b x WIDTHS[l + 1]`.
    pre: Vec<Vec<f64>>,
    /// `act[l]`: input to layer `l`, `b x WIDTHS[l]`.
    act: Vec<Vec<f64>>,
}

fn forward_batch(p: &[f64], x: &[f64], b: usize) -> Batch {
    let mut act = vec![x.to_vec()];
    let mut pre = Vec::with_capacity(LAYERS);
    for l in 0..LAYERS {
        let (n_in, n_out) = (WIDTHS[l], WIDTHS[l + 1]);
        let w = &p[layer_offset(l)..layer_offset(l) + n_out * n_in];
        let bias = &p[layer_offset(l) + n_out * n_in..layer_offset(l) + n_out * (n_in + 1)];
        let a = &act[l];
        let mut z = vec![0.0; b * n_out];
        for s in 0..b {
            let xs = &a[s * n_in..(s + 1) * n_in];
            for o in 0..n_out {
                z[s * n_out + o] = crate::linalg::dot(&w[o * n_in..(o + 1) * n_in], xs) + bias[o];
            }
        }
        if l + 1 < LAYERS {
            act.push(z.iter().map(|&v| swish(v)).collect());
        }
        pre.push(z);
    }
    Batch { pre, act }
}

/// Mean squared error of standardized predictions and its gradient.
fn batch_loss_grad(p: &[f64], x: &[f64], y: &[f64], b: usize, grad: &mut [f64]) -> f64 {
    let cache = forward_batch(p, x, b);
    let out = &cache.pre[LAYERS - 1];
    let n_last = WIDTHS[LAYERS];
    let count = (b * n_last) as f64;
    let mut loss = 0.0;
    let mut delta: Vec<f64> = out
        .iter()
        .zip(y)
        .map(|(o, t)| {
            let r = o - t;
            loss += r * r;
            2.0 * r / count
        })
        .collect();
    for l in (0..LAYERS).rev() {
        let (n_in, n_out) = (WIDTHS[l], WIDTHS[l + 1]);
        let off = layer_offset(l);
        let a = &cache.act[l];
        {
            let (gw, gb) = grad[off..off + n_out * (n_in + 1)].split_at_mut(n_out * n_in);
            for s in 0..b {
                let xs = &a[s * n_in..(s + 1) * n_in];
                for o in 0..n_out {
                    let d = delta[s * n_out + o];
                    if d != 0.0 {
                        gw[o * n_in..(o + 1) * n_in].iter_mut().zip(xs).for_each(|(g, xi)| *g += d * xi);
                        gb[o] += d;
                    }
                }
            }
        }
        if l == 0 {
            break;
        }
        let w = &p[off..off + n_out * n_in];
        let z_prev = &cache.pre[l - 1];
        let mut next = vec![0.0; b * n_in];
        for s in 0..b {
            let dst = &mut next[s * n_in..(s + 1) * n_in];
            for o in 0..n_out {
                let d = delta[s * n_out + o];
                dst.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]).for_each(|(v, wi)| *v += d * wi);
            }
            for (v, &z) in dst.iter_mut().zip(&z_prev[s * n_in..(s + 1) * n_in]) {
                *v *= swish_grad(z);
            }
        }
        delta = next;
    }
    loss / count
}

fn standardized(set: &TransitionSet, m: &LatentModel) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(2 * set.len());
    let mut y = Vec::with_capacity(2 * set.len());
    for (i, o) in set.inputs.iter().zip(&set.outputs) {
        for d in 0..2 {
            x.push((i[d] - m.in_mean[d]) / m.in_std[d]);
            y.push((o[d] - m.out_mean[d]) / m.out_std[d]);
        }
    }
    (x, y)
}

/// One-step mean squared error in standardized output units.
pub fn one_step_mse(model: &LatentModel, set: &TransitionSet) -> f64 {
    if set.is_empty() {
        return f64::NAN;
    }
    let mut sse = 0.0;
    for (i, o) in set.inputs.iter().zip(&set.outputs) {
        let p = model.step(*i);
        for d in 0..2 {
            let r = (p[d] - o[d]) / model.out_std[d];
            sse += r * r;
        }
    }
    sse / (2 * set.len()) as f64
}

/// Fraction of trajectories held out for validation.
pub const VALIDATION_FRACTION: f64 = 0.1;

/// Adam training with minibatches of transitions. A seeded 10% of the
/// source trajectories is held out for checkpoint selection.
pub fn train_latent(transitions: &TransitionSet, config: &TrainConfig) -> Result<TrainReport<LatentModel>> {
    train_latent_with_progress(transitions, config, |_| {})
}

pub fn train_latent_with_progress(
    transitions: &TransitionSet,
    config: &TrainConfig,
    mut progress: impl FnMut(&EpochStats),
) -> Result<TrainReport<LatentModel>> {
    config.validate()?;
    if transitions.is_empty() {
        return Err(invalid!("no transitions to train on"));
    }
    let mut ids: Vec<usize> = transitions.trajectory.clone();
    ids.sort_unstable();
    ids.dedup();
    let (train, val) = if ids.len() >= 2 {
        let n_val = (libm::round(ids.len() as f64 * VALIDATION_FRACTION) as usize).clamp(1, ids.len() - 1);
        let mut shuffled = ids.clone();
        Rng::new(config.seed, streams::SPLIT).shuffle(&mut shuffled);
        let mut held = shuffled[..n_val].to_vec();
        held.sort_unstable();
        (
            transitions.subset(|t| held.binary_search(&t).is_err()),
            transitions.subset(|t| held.binary_search(&t).is_ok()),
        )
    } else {
        (transitions.clone(), TransitionSet::default())
    };

    let mut model = LatentModel::random(config.seed);
    (model.in_mean, model.in_std) = mean_std(&train.inputs);
    (model.out_mean, model.out_std) = mean_std(&train.outputs);
    let (x, y) = standardized(&train, &model);
    let n = train.len();

    let mut opt = Adam::new(N_PARAMS, config.lr0);
    let mut plateau = PlateauHalving::new(config.lr_halving_patience);
    let mut shuffle = Rng::new(config.seed, streams::LATENT_SHUFFLE);
    let mut order: Vec<usize> = (0..n).collect();
    let mut best = (f64::INFINITY, 0usize, model.clone());
    let mut history = Vec::with_capacity(config.epochs);
    let mut grad = vec![0.0; N_PARAMS];
    let mut bx = Vec::with_capacity(2 * config.batch_size);
    let mut by = Vec::with_capacity(2 * config.batch_size);

    for epoch in 1..=config.epochs {
        shuffle.shuffle(&mut order);
        let mut weighted = 0.0;
        for chunk in order.chunks(config.batch_size) {
            bx.clear();
            by.clear();
            for &i in chunk {
                bx.extend_from_slice(&x[2 * i..2 * i + 2]);
                by.extend_from_slice(&y[2 * i..2 * i + 2]);
            }
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss = batch_loss_grad(&model.params, &bx, &by, chunk.len(), &mut grad);
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch, loss });
            }
            opt.step(&mut model.params, &grad);
            weighted += loss * chunk.len() as f64;
        }
        let train_loss = weighted / n as f64;
        let val_loss = if val.is_empty() { train_loss } else { one_step_mse(&model, &val) };
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

/// `[phi0, g(phi0), g(g(phi0)), ...]` with `horizon + 1` entries.
pub fn rollout_latent(model: &LatentModel, phi0: [f64; 2], horizon: usize) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(horizon + 1);
    out.push(phi0);
    let mut phi = phi0;
    for _ in 0..horizon {
        phi = model.step(phi);
        out.push(phi);
    }
    out
}
