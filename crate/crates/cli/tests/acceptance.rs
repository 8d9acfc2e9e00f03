//! Acceptance run: every criterion at its pinned tolerance, one line each.
//!
//! Run with `cargo test --release -p coldstart --test acceptance`. The target
//! has its own `main`, prints `PASS`/`FAIL` per criterion and exits nonzero
//! when any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use coldstart_core::dynamics::{
    brusselator_rhs, generate_dataset, integrate_and_sample, integrate_with_substeps, BrusselatorParams, Dataset,
    IcRanges,
};
use coldstart_core::harmonics::{
    self, evaluate_gh, fit_gh, fit_gh_with, median_sq_distance, training_reconstruction, GhConfig, MatureStateTable,
};
use coldstart_core::harness::{self, ComparisonConfig, MatureCloud, Strategy};
use coldstart_core::latent::{self, LatentModel};
use coldstart_core::lstm::{self, LstmModel, TrainConfig, N_PARAMS};
use coldstart_core::manifold::{self, DiffusionMap, DmapConfig, WindowSet};
use coldstart_core::rng::Rng;

const SEED: u64 = 0;
const WINDOW: usize = 5;
const MATURITY: usize = 10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Shared artifacts, built once in criterion order.
struct Pipeline {
    data: Dataset,
    model: Option<LstmModel>,
    dmap: Option<DiffusionMap>,
    table: Option<MatureStateTable>,
}

impl Pipeline {
    fn model(&self) -> &LstmModel {
        self.model.as_ref().expect("criterion 3 trains the model")
    }

    fn dmap(&mut self) -> &DiffusionMap {
        let data = &self.data;
        self.dmap.get_or_insert_with(|| {
            let w = manifold::extract_windows(&data.train, WINDOW, 1).unwrap();
            manifold::fit_with_config(&w, &DmapConfig { seed: SEED, ..DmapConfig::default() }).unwrap()
        })
    }

    fn table(&mut self) -> &MatureStateTable {
        if self.table.is_none() {
            let t = harmonics::collect_mature_states(self.model(), &self.data.train, WINDOW, MATURITY).unwrap();
            self.table = Some(t);
        }
        self.table.as_ref().unwrap()
    }
}

fn rel_l2(est: &[Vec<f64>], truth: &[Vec<f64>]) -> f64 {
    let num: f64 = est.iter().zip(truth).flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2))).sum();
    let den: f64 = truth.iter().flat_map(|b| b.iter().map(|y| y * y)).sum();
    (num / den).sqrt()
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

// ---------------------------------------------------------------- 1

fn dynamics_correctness() -> Outcome {
    let p = BrusselatorParams::default();
    let (du, dv) = brusselator_rhs(p.fixed_point(), &p);
    let residual = du.abs().max(dv.abs());

    let reference = integrate_with_substeps(&p, (0.5, 2.5), 20.0, 0.2, 400).unwrap();
    let end = |t: &coldstart_core::dynamics::Trajectory| (*t.u.last().unwrap(), *t.v.as_ref().unwrap().last().unwrap());
    let (ur, vr) = end(&reference);
    let err = |s| {
        let (u, v) = end(&integrate_with_substeps(&p, (0.5, 2.5), 20.0, 0.2, s).unwrap());
        ((u - ur).powi(2) + (v - vr).powi(2)).sqrt()
    };
    let ratio = err(4) / err(8);

    let start = Instant::now();
    let ds = generate_dataset(400, 50, 50, SEED).unwrap();
    let secs = start.elapsed().as_secs_f64();

    let pass = residual <= 1e-12 && (16.0 * 0.7..=16.0 * 1.3).contains(&ratio) && secs < 10.0 && ds.len() == 500;
    outcome(pass, format!("fixed-point residual {residual:.1e}, RK4 halving ratio {ratio:.2}, 500 trajectories in {secs:.2}s"))
}

// ---------------------------------------------------------------- 2

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let h = 1e-5;
    for instance in 0..50u64 {
        let model = LstmModel::random(1000 + instance);
        let mut rng = Rng::new(instance, 7);
        let len = 5 + rng.below(26);
        let count = 1 + rng.below(3);
        let seqs: Vec<Vec<f64>> = (0..count).map(|_| (0..len).map(|_| rng.uniform_in(0.0, 4.0)).collect()).collect();
        let refs: Vec<&[f64]> = seqs.iter().map(|s| s.as_slice()).collect();
        let (_, g) = lstm::loss_and_grad(&model, &refs);
        let mut fd = vec![0.0; N_PARAMS];
        for (i, fdi) in fd.iter_mut().enumerate() {
            let mut m = model.clone();
            m.params_mut()[i] += h;
            let lp = lstm::loss_and_grad(&m, &refs).0;
            m.params_mut()[i] -= 2.0 * h;
            let lm = lstm::loss_and_grad(&m, &refs).0;
            *fdi = (lp - lm) / (2.0 * h);
        }
        let diff: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = fd.iter().map(|b| b * b).sum::<f64>().sqrt();
        worst = worst.max(diff / scale);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-5 && secs < 60.0, format!("worst relative error {worst:.2e} over 50 instances in {secs:.1}s"))
}

// ---------------------------------------------------------------- 3

/// Test MSE contributed by the first prediction of the best possible
/// predictor, which sees `u_0` only and must average over the unseen `v_0`.
fn first_step_floor(data: &Dataset) -> f64 {
    let p = data.sampling.params;
    let IcRanges { v: (lo, hi), .. } = data.sampling.ic_ranges;
    let dt = data.sampling.dt_sample;
    let grid = 300;
    let mut total = 0.0;
    for t in &data.test {
        let mean: f64 = (0..grid)
            .map(|k| {
                let v0 = lo + (hi - lo) * (k as f64 + 0.5) / grid as f64;
                integrate_and_sample(&p, (t.u[0], v0), dt, dt).unwrap().u[1]
            })
            .sum::<f64>()
            / grid as f64;
        total += (t.u[1] - mean).powi(2) / (t.len() - 1) as f64;
    }
    total / data.test.len() as f64
}

fn training(pipe: &mut Pipeline) -> Outcome {
    let start = Instant::now();
    let report = lstm::train(&pipe.data, &TrainConfig { seed: SEED, ..TrainConfig::default() }).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let mse = lstm::teacher_forced_mse(&report.model, &pipe.data.test);
    let floor = first_step_floor(&pipe.data);
    pipe.model = Some(report.model);
    outcome(
        mse <= 1e-3,
        format!(
            "test MSE {mse:.4e} (best epoch {}, {secs:.0}s); unavoidable first-step share {floor:.4e}",
            report.best_epoch
        ),
    )
}

// ---------------------------------------------------------------- 4

fn manifold_dimension(pipe: &Pipeline) -> Outcome {
    let w10 = manifold::extract_windows(&pipe.data.train, 10, 1).unwrap();
    let dm = manifold::fit_with_config(&w10, &DmapConfig { seed: SEED, ..DmapConfig::default() }).unwrap();

    let n = 500;
    let theta: Vec<f64> = (0..n).map(|k| std::f64::consts::TAU * k as f64 / n as f64).collect();
    let rows: Vec<Vec<f64>> = theta.iter().map(|t| vec![t.cos(), 0.6 * t.sin(), 0.8 * t.sin()]).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let circle = WindowSet::from_rows(3, &refs).unwrap();
    let cm = manifold::fit_dmaps(&circle, 0.1 * manifold::median_epsilon(&circle).unwrap(), 0.0, 4).unwrap();
    let est: Vec<f64> = (0..n).map(|i| cm.eigenvectors[2][i].atan2(cm.eigenvectors[1][i])).collect();
    let corr = |sign: f64| {
        let (c, s) = est.iter().zip(&theta).fold((0.0, 0.0), |(c, s), (e, t)| {
            let d = e - sign * t;
            (c + d.cos(), s + d.sin())
        });
        (c * c + s * s).sqrt() / n as f64
    };
    let r = corr(1.0).max(corr(-1.0));
    outcome(
        dm.selected.len() == 2 && r >= 0.999,
        format!("l=10 selected {:?} from {} windows; circle angle correlation {r:.6}", dm.selected, dm.windows.len()),
    )
}

// ---------------------------------------------------------------- 5

fn diffusion_algebra(pipe: &mut Pipeline) -> Outcome {
    let dm = pipe.dmap().clone();
    let sub = dm.windows.subsample(1500, SEED);
    let k = manifold::kernel_matrix(&sub, dm.epsilon);
    let asym = k.asymmetry();
    drop(k);
    let (d, _) = manifold::build_markov(&sub, dm.epsilon, dm.alpha).unwrap();
    let row_err = (0..d.rows()).map(|i| (d.row(i).iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
    drop(d);
    let l0 = (dm.eigenvalues[0] - 1.0).abs();
    let mut nys = 0.0f64;
    for i in 0..dm.windows.len() {
        let ext = manifold::nystrom_extend(&dm, dm.windows.row(i)).unwrap();
        for (k, e) in ext.iter().enumerate() {
            nys = nys.max((e - dm.eigenvectors[k][i]).abs());
        }
    }
    outcome(
        asym == 0.0 && row_err <= 1e-12 && l0 <= 1e-10 && nys <= 1e-10,
        format!(
            "K asymmetry {asym:.1e}, row-sum error {row_err:.1e}, |lambda0-1| {l0:.1e}, Nystrom error {nys:.1e} over {} windows x {} modes",
            dm.windows.len(),
            dm.eigenvalues.len()
        ),
    )
}

// ---------------------------------------------------------------- 6

fn state_attraction(pipe: &mut Pipeline) -> Outcome {
    let cloud = MatureCloud::from_table(pipe.table());
    let rollouts = &pipe.data.test[..25];
    let report = harness::state_manifold_report(pipe.model(), rollouts, &cloud).unwrap();
    let frac = report.attracted_fraction(MATURITY, 0.1);
    outcome(
        frac >= 0.95,
        format!(
            "{:.0}% of 25 rollouts within 10% of their step-1 distance at step {MATURITY}; median distance {:.3e} -> {:.3e}",
            100.0 * frac,
            report.median_distance[1],
            report.median_distance[MATURITY]
        ),
    )
}

// ---------------------------------------------------------------- 7

fn gh_interpolation(pipe: &mut Pipeline) -> Outcome {
    let dm = pipe.dmap().clone();
    let table = pipe.table().clone();
    let cfg = GhConfig { seed: SEED, ..GhConfig::default() };
    let rows = Rng::new(SEED, coldstart_core::rng::streams::SUBSAMPLE).subsample(table.len(), cfg.max_points);
    let phi: Vec<Vec<f64>> = rows.iter().map(|&r| dm.restrict(table.windows.row(r)).unwrap()).collect();
    let f: Vec<Vec<f64>> = rows.iter().map(|&r| table.states[r].to_vec()).collect();
    let folds = 10;
    let mut est = vec![Vec::new(); phi.len()];
    for fold in 0..folds {
        let (tr, te): (Vec<usize>, Vec<usize>) = (0..phi.len()).partition(|i| i % folds != fold);
        let p: Vec<Vec<f64>> = tr.iter().map(|&i| phi[i].clone()).collect();
        let y: Vec<Vec<f64>> = tr.iter().map(|&i| f[i].clone()).collect();
        let eps = median_sq_distance(&p).unwrap() * cfg.epsilon_scale;
        let gh = fit_gh_with(&p, &y, eps, cfg.delta, cfg.standardize).unwrap();
        for &i in &te {
            est[i] = evaluate_gh(&gh, &phi[i]);
        }
    }
    let cv = rel_l2(&est, &f);

    let eps = median_sq_distance(&phi).unwrap();
    let probe = fit_gh(&phi, &f, eps, cfg.delta).unwrap();
    let span: Vec<Vec<f64>> = (0..phi.len()).map(|i| vec![probe.psi[1][i] - 0.5 * probe.psi[4][i]]).collect();
    let gh = fit_gh(&phi, &span, eps, cfg.delta).unwrap();
    let rec = training_reconstruction(&gh);
    let exact = rec.iter().zip(&span).map(|(a, b)| (a[0] - b[0]).abs()).fold(0.0, f64::max);
    outcome(
        cv <= 0.05 && exact <= 1e-10,
        format!("10-fold relative error {:.2}% on {} rows; in-span reconstruction error {exact:.1e}", 100.0 * cv, phi.len()),
    )
}

// ---------------------------------------------------------------- 8 and 9

fn comparison(pipe: &mut Pipeline) -> harness::ComparisonReport {
    let dm = pipe.dmap().clone();
    let gh = harmonics::fit_state_map(&dm, pipe.table(), &GhConfig { seed: SEED, ..GhConfig::default() }).unwrap();
    let cfg = ComparisonConfig::default();
    harness::compare_initialization(pipe.model(), Some((&dm, &gh)), &pipe.data.test, &cfg).unwrap()
}

fn coldstart_beats_warmup(report: &harness::ComparisonReport) -> Outcome {
    let w5 = Strategy::Warmup(5);
    let win = report.win_rate(Strategy::ColdStart, w5);
    let cold = report.summary(Strategy::ColdStart).unwrap();
    let warm = report.summary(w5).unwrap();
    outcome(
        win >= 0.9 && cold.median_phase < warm.median_phase,
        format!(
            "cold start wins {:.0}% vs warmup-5; median MSE {:.4} vs {:.4}; median phase error {} vs {}",
            100.0 * win,
            cold.median_mse,
            warm.median_mse,
            cold.median_phase,
            warm.median_phase
        ),
    )
}

fn warmup_monotonicity(report: &harness::ComparisonReport) -> Outcome {
    let means: Vec<f64> = [0, 5, 25, 50].iter().map(|&n| report.summary(Strategy::Warmup(n)).unwrap().mean_mse).collect();
    let pass = means.windows(2).all(|w| w[1] <= w[0]);
    outcome(pass, format!("mean long-horizon MSE for warmup 0/5/25/50: {:.4} {:.4} {:.4} {:.4}", means[0], means[1], means[2], means[3]))
}

// ---------------------------------------------------------------- 10

fn synchronization(pipe: &Pipeline) -> Outcome {
    let p = pipe.data.sampling.params;
    let (mut worst, mut monotone) = (0.0f64, true);
    for t in &pipe.data.test {
        let demo = harness::sync_error_demo(&p, 0.0, t).unwrap();
        let e0 = demo.e1[0].abs();
        // Composite Simpson quadrature of u^2 on the samples.
        let mut integral = 0.0;
        for m in 1..=(t.len() - 1) / 2 {
            let k = 2 * m;
            integral += t.dt / 3.0 * (t.u[k - 2].powi(2) + 4.0 * t.u[k - 1].powi(2) + t.u[k].powi(2));
            let want = e0 * (-integral).exp();
            if want > 1e-250 {
                worst = worst.max((demo.e1[k].abs() / want - 1.0).abs());
            }
        }
        monotone &= demo.e1.windows(2).all(|w| w[1].abs() <= w[0].abs());
    }
    outcome(
        worst <= 0.01 && monotone,
        format!("worst relative deviation {:.3}% over {} trajectories; |e1| non-increasing: {monotone}", 100.0 * worst, pipe.data.test.len()),
    )
}

// ---------------------------------------------------------------- 11

fn latent_model(pipe: &mut Pipeline) -> Outcome {
    let dm = pipe.dmap().clone();
    let start = Instant::now();
    let train = latent::build_transitions(&dm, &pipe.data.train, WINDOW).unwrap();
    let test = latent::build_transitions(&dm, &pipe.data.test, WINDOW).unwrap();
    let report = latent::train_latent(&train, &TrainConfig { seed: SEED, ..TrainConfig::default() }).unwrap();
    let g: &LatentModel = &report.model;
    let secs = start.elapsed().as_secs_f64();
    let one_step = latent::one_step_mse(g, &test);

    // Embedded limit cycle from a long run past the transient.
    let long = integrate_and_sample(&pipe.data.sampling.params, (1.5, 2.0), 200.0, 0.2).unwrap();
    let tail = &long.u[700..];
    let cycle: Vec<[f64; 2]> = (0..=tail.len() - WINDOW)
        .map(|i| {
            let r = dm.restrict(&tail[i..i + WINDOW]).unwrap();
            [r[0], r[1]]
        })
        .collect();
    let diameter = cycle.iter().flat_map(|a| cycle.iter().map(move |b| dist(*a, *b))).fold(0.0, f64::max);

    let horizon = 50;
    let mut worst_rmse = 0.0f64;
    for t in &pipe.data.test {
        let w = manifold::extract_windows(std::slice::from_ref(t), WINDOW, 1).unwrap();
        let truth: Vec<[f64; 2]> = (0..=horizon)
            .map(|i| {
                let r = dm.restrict(w.row(i)).unwrap();
                [r[0], r[1]]
            })
            .collect();
        let pred = latent::rollout_latent(g, truth[0], horizon);
        let best = (-5i64..=5)
            .map(|lag| {
                let pairs: Vec<f64> = (0..=horizon as i64)
                    .filter(|i| (0..=horizon as i64).contains(&(i + lag)))
                    .map(|i| dist(pred[i as usize], truth[(i + lag) as usize]).powi(2))
                    .collect();
                (pairs.iter().sum::<f64>() / pairs.len() as f64).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        worst_rmse = worst_rmse.max(best / diameter);
    }

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &train.inputs {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let inside = |p: &[f64; 2]| {
        (0..2).all(|d| {
            let (c, r) = (0.5 * (lo[d] + hi[d]), 0.5 * (hi[d] - lo[d]));
            (p[d] - c).abs() <= 2.0 * r
        })
    };
    let starts: Vec<[f64; 2]> = test.inputs.iter().step_by(test.len() / 20).take(20).copied().collect();
    let bounded = starts.iter().all(|&s| latent::rollout_latent(g, s, 500).iter().all(inside));

    outcome(
        one_step <= 1e-4 && worst_rmse <= 0.1 && bounded,
        format!(
            "one-step MSE {one_step:.2e}; worst 50-step aligned RMSE {:.1}% of diameter; 500-step rollouts bounded: {bounded} ({secs:.0}s)",
            100.0 * worst_rmse
        ),
    )
}

// ---------------------------------------------------------------- 12

fn imputation(pipe: &mut Pipeline) -> Outcome {
    let dm = pipe.dmap().clone();
    let data = &pipe.data;
    let train_w = manifold::extract_windows(&data.train, WINDOW, 1).unwrap();
    let value = |ds: &[coldstart_core::dynamics::Trajectory], w: &WindowSet, i: usize| {
        let (ti, start) = w.provenance[i];
        ds[ti].v.as_ref().unwrap()[start + WINDOW - 1]
    };
    let picks = Rng::new(SEED, coldstart_core::rng::streams::SUBSAMPLE).subsample(train_w.len(), 200);
    let measurements: Vec<(Vec<f64>, f64)> =
        picks.iter().map(|&i| (train_w.row(i).to_vec(), value(&data.train, &train_w, i))).collect();
    let test_w = manifold::extract_windows(&data.test, WINDOW, 1).unwrap();
    let queries: Vec<Vec<f64>> = (0..test_w.len()).map(|i| test_w.row(i).to_vec()).collect();
    let est = harmonics::impute_observable(&dm, &measurements, &queries, &GhConfig { seed: SEED, ..GhConfig::default() })
        .unwrap();
    let truth: Vec<Vec<f64>> = (0..test_w.len()).map(|i| vec![value(&data.test, &test_w, i)]).collect();
    let est: Vec<Vec<f64>> = est.into_iter().map(|v| vec![v]).collect();
    let err = rel_l2(&est, &truth);
    outcome(err <= 0.1, format!("relative L2 error {:.2}% on {} held-out windows from 200 measurements", 100.0 * err, queries.len()))
}

// ---------------------------------------------------------------- 13

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_coldstart")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn pipeline_outputs(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let (data, model, dmap, gh, latent, cmp) = (p("data"), p("model.txt"), p("dmap.txt"), p("gh.txt"), p("g.txt"), p("cmp"));
    run_cli(&["generate-data", "--n-train", "40", "--n-val", "6", "--n-test", "8", "--seed", "3", "--out", &data])?;
    run_cli(&["train-lstm", "--data", &data, "--epochs", "40", "--batch", "16", "--out", &model])?;
    run_cli(&["fit-manifold", "--data", &data, "--max-points", "1200", "--out", &dmap])?;
    run_cli(&["fit-gh", "--data", &data, "--dmap", &dmap, "--model", &model, "--max-points", "600", "--out", &gh])?;
    run_cli(&["train-latent", "--data", &data, "--dmap", &dmap, "--epochs", "5", "--out", &latent])?;
    run_cli(&["compare-init", "--data", &data, "--model", &model, "--dmap", &dmap, "--gh", &gh, "--out", &cmp])?;
    let mut files = Vec::new();
    for name in ["model.txt", "dmap.txt", "gh.txt", "g.txt", "cmp/report.csv", "cmp/summary.json"] {
        files.push((name.to_string(), std::fs::read(dir.join(name)).map_err(|e| e.to_string())?));
    }
    Ok(files)
}

fn determinism() -> Outcome {
    let run = || -> Result<Vec<(String, Vec<u8>)>, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        pipeline_outputs(dir.path())
    };
    match (run(), run()) {
        (Ok(a), Ok(b)) => {
            let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0.as_str()).collect();
            let bytes: usize = a.iter().map(|f| f.1.len()).sum();
            outcome(
                differing.is_empty(),
                if differing.is_empty() {
                    format!("two seeded CLI pipelines produced identical artifacts and reports ({} files, {bytes} bytes)", a.len())
                } else {
                    format!("outputs differ: {differing:?}")
                },
            )
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, format!("pipeline failed: {e}")),
    }
}

// ----------------------------------------------------------------

fn main() {
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut record = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!("[{}] {id:>2} {name}: {} [{secs:.1}s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o, secs));
    };

    let data = generate_dataset(400, 50, 50, SEED).unwrap();
    let mut pipe = Pipeline { data, model: None, dmap: None, table: None };

    record(1, "dynamics correctness", &mut dynamics_correctness);
    record(2, "LSTM gradient suite", &mut gradient_suite);
    record(3, "training", &mut || training(&mut pipe));
    record(4, "manifold dimension", &mut || manifold_dimension(&pipe));
    record(5, "diffusion-map algebra", &mut || diffusion_algebra(&mut pipe));
    record(6, "state-manifold attraction", &mut || state_attraction(&mut pipe));
    record(7, "geometric-harmonics interpolation", &mut || gh_interpolation(&mut pipe));
    let report = comparison(&mut pipe);
    record(8, "cold start beats warmup", &mut || coldstart_beats_warmup(&report));
    record(9, "warmup monotonicity", &mut || warmup_monotonicity(&report));
    record(10, "synchronization law", &mut || synchronization(&pipe));
    record(11, "latent model", &mut || latent_model(&mut pipe));
    record(12, "imputation", &mut || imputation(&mut pipe));
    record(13, "determinism", &mut determinism);

    let passed = results.iter().filter(|r| r.2.pass).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
