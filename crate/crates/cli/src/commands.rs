//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::Path;

use coldstart_core::dynamics::{self, BrusselatorParams, Dataset};
use coldstart_core::harmonics::{self, GeometricHarmonics, GhConfig};
use coldstart_core::harness::{self, ComparisonConfig, ComparisonReport};
use coldstart_core::latent;
use coldstart_core::lstm::{self, InternalState, LstmModel, TrainConfig, D};
use coldstart_core::manifold::{self, DiffusionMap, DmapConfig, SelectionConfig};

use crate::error::{check_lineage, CliError, CliResult};
use crate::format::{self, content_hash, read_text, write_text};
use crate::{Artifacts, Cli, Command, GlobalArgs};

pub fn run(cli: &Cli) -> CliResult<()> {
    let g = &cli.global;
    match &cli.command {
        Command::GenerateData(a) => generate_data(g, a),
        Command::TrainLstm(a) => train_lstm(g, a),
        Command::Rollout(a) => rollout(g, a),
        Command::FitManifold(a) => fit_manifold(g, a),
        Command::Restrict(a) => restrict(g, a),
        Command::FitGh(a) => fit_gh(g, a),
        Command::Coldstart(a) => coldstart(g, a),
        Command::Impute(a) => impute(g, a),
        Command::CompareInit(a) => compare_init(g, a),
        Command::TrainLatent(a) => train_latent(g, a),
        Command::RolloutLatent(a) => rollout_latent(g, a),
        Command::SyncDemo(a) => sync_demo(g, a),
        Command::ReproduceFigures(a) => crate::figures::reproduce(g, a),
    }
}

pub(crate) fn out_path(g: &GlobalArgs) -> CliResult<&Path> {
    g.out.as_deref().ok_or_else(|| CliError::config("this command needs --out"))
}

/// A parsed artifact together with the hash of the file it came from.
pub struct Loaded<T> {
    pub value: T,
    pub hash: String,
}

fn load<T>(path: &Path, parse: impl Fn(&str, &Path) -> CliResult<T>) -> CliResult<Loaded<T>> {
    let text = read_text(path)?;
    Ok(Loaded { value: parse(&text, path)?, hash: content_hash(text.as_bytes()) })
}

pub fn load_dataset(dir: &Path) -> CliResult<Loaded<Dataset>> {
    let (value, hash) = format::read_dataset(dir)?;
    Ok(Loaded { value, hash })
}

pub fn load_lstm(path: &Path) -> CliResult<Loaded<format::LstmArtifact>> {
    load(path, format::parse_lstm)
}

pub fn load_dmap(path: &Path) -> CliResult<Loaded<format::DmapArtifact>> {
    load(path, format::parse_dmap)
}

pub fn load_gh(path: &Path) -> CliResult<Loaded<format::GhArtifact>> {
    load(path, format::parse_gh)
}

pub fn load_latent(path: &Path) -> CliResult<Loaded<format::LatentArtifact>> {
    load(path, format::parse_latent)
}

/// Dataset, model, map and harmonics with their lineage verified.
pub struct Chain {
    pub dataset: Dataset,
    pub model: LstmModel,
    pub dmap: DiffusionMap,
    pub dmap_hash: String,
    pub gh: GeometricHarmonics,
    pub maturity: usize,
}

pub fn load_chain(a: &Artifacts) -> CliResult<Chain> {
    let data = load_dataset(&a.data)?;
    let model = load_lstm(&a.model)?;
    let dmap = load_dmap(&a.dmap)?;
    let gh = load_gh(&a.gh)?;
    check_lineage("model", &data.hash, &model.value.data_hash)?;
    check_lineage("diffusion map", &data.hash, &dmap.value.data_hash)?;
    check_lineage("harmonics (map)", &dmap.hash, &gh.value.dmap_hash)?;
    check_lineage("harmonics (model)", &model.hash, &gh.value.model_hash)?;
    Ok(Chain {
        dataset: data.value,
        model: model.value.model,
        dmap: dmap.value.dmap,
        dmap_hash: dmap.hash,
        gh: gh.value.gh,
        maturity: gh.value.maturity,
    })
}

fn generate_data(g: &GlobalArgs, a: &crate::GenerateData) -> CliResult<()> {
    let out = out_path(g)?;
    let ds = dynamics::generate_dataset(a.n_train, a.n_val, a.n_test, g.seed)?;
    format::write_dataset(out, &ds)?;
    println!("wrote {} trajectories to {}", ds.len(), out.display());
    Ok(())
}

fn train_lstm(g: &GlobalArgs, a: &crate::TrainLstm) -> CliResult<()> {
    let out = out_path(g)?;
    let data = load_dataset(&a.data)?;
    let cfg = TrainConfig { epochs: a.epochs, batch_size: a.batch, lr0: a.lr, lr_halving_patience: a.patience, seed: g.seed };
    let report = lstm::train_with_progress(&data.value, &cfg, |s| {
        if s.epoch % 50 == 0 || s.epoch + 1 == cfg.epochs {
            eprintln!("epoch {:4}  train {:.3e}  val {:.3e}  lr {:.2e}", s.epoch, s.train_loss, s.val_loss, s.lr);
        }
    })?;
    write_text(out, &format::lstm_text(&report.model, &data.hash))?;
    if let Some(h) = &a.history {
        let mut csv = String::from("epoch,train_loss,val_loss,lr\n");
        for s in &report.history {
            let _ = writeln!(csv, "{},{:?},{:?},{:?}", s.epoch, s.train_loss, s.val_loss, s.lr);
        }
        write_text(h, &csv)?;
    }
    let test = lstm::teacher_forced_mse(&report.model, &data.value.test);
    println!("best epoch {}  test teacher-forced MSE {test:.4e}", report.best_epoch);
    Ok(())
}

/// CSV row per sample. Row `k > 0` holds the prediction of `u_k` and the
/// state that produced it; row 0 holds the initial state and no prediction.
pub fn rollout_csv(dt: f64, u: &[f64], record: &lstm::RolloutRecord) -> String {
    let mut s = String::from("t,u_true,u_pred,c1,c2,c3,c4,h1,h2,h3,h4\n");
    let zero = InternalState::zeros();
    for (k, &uk) in u.iter().enumerate() {
        let (pred, state) = if k == 0 {
            (f64::NAN, &zero)
        } else {
            (record.predictions[k - 1], &record.states[k - 1])
        };
        let _ = write!(s, "{:?},{uk:?},{pred:?}", k as f64 * dt);
        for x in state.to_vec() {
            let _ = write!(s, ",{x:?}");
        }
        s.push('\n');
    }
    s
}

fn rollout(g: &GlobalArgs, a: &crate::Rollout) -> CliResult<()> {
    let out = out_path(g)?;
    let model = load_lstm(&a.model)?.value.model;
    let traj = format::parse_trajectory_csv(&read_text(&a.traj)?, &a.traj)?;
    let record = lstm::rollout(&model, &traj, a.warmup, &InternalState::zeros())?;
    write_text(out, &rollout_csv(traj.dt, &traj.u, &record))
}

fn fit_manifold(g: &GlobalArgs, a: &crate::FitManifold) -> CliResult<()> {
    let out = out_path(g)?;
    let data = load_dataset(&a.data)?;
    let windows = manifold::extract_windows(&data.value.train, a.window_len, a.stride)?;
    let cfg = DmapConfig {
        epsilon: a.epsilon,
        epsilon_scale: a.epsilon_scale,
        alpha: a.alpha,
        n_eig: a.n_eig,
        max_points: a.max_points,
        selection: SelectionConfig { threshold: a.threshold, ..SelectionConfig::default() },
        seed: g.seed,
    };
    let dmap = manifold::fit_with_config(&windows, &cfg)?;
    write_text(out, &format::dmap_text(&dmap, &data.hash))?;
    println!(
        "{} windows, epsilon {:.4e}, selected coordinates {:?}, eigenvalues {:?}",
        dmap.windows.len(),
        dmap.epsilon,
        dmap.selected,
        dmap.eigenvalues.iter().map(|l| (l * 1e4).round() / 1e4).collect::<Vec<_>>()
    );
    Ok(())
}

fn header(prefix: &str, n: usize) -> String {
    (1..=n).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>().join(",")
}

fn csv_row(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")
}

fn restrict(g: &GlobalArgs, a: &crate::Restrict) -> CliResult<()> {
    let out = out_path(g)?;
    let dmap = load_dmap(&a.dmap)?.value.dmap;
    let phi = dmap.restrict(&a.window)?;
    write_text(out, &format!("{}\n{}\n", header("phi", phi.len()), csv_row(phi)))
}

fn fit_gh(g: &GlobalArgs, a: &crate::FitGh) -> CliResult<()> {
    let out = out_path(g)?;
    let data = load_dataset(&a.data)?;
    let dmap = load_dmap(&a.dmap)?;
    let model = load_lstm(&a.model)?;
    check_lineage("diffusion map", &data.hash, &dmap.value.data_hash)?;
    check_lineage("model", &data.hash, &model.value.data_hash)?;
    let dm = &dmap.value.dmap;
    let table = harmonics::collect_mature_states(&model.value.model, &data.value.train, dm.windows.window_len, a.maturity)?;
    let cfg = GhConfig {
        epsilon_star: a.epsilon_star,
        epsilon_scale: a.epsilon_scale,
        delta: a.delta,
        max_points: a.max_points,
        seed: g.seed,
        ..GhConfig::default()
    };
    let gh = harmonics::fit_state_map(dm, &table, &cfg)?;
    write_text(out, &format::gh_text(&gh, &dmap.hash, &model.hash, a.maturity))?;
    println!(
        "{} mature rows, fitted on {}, epsilon* {:.4e}, {} harmonics kept",
        table.len(),
        gh.phi.len(),
        gh.epsilon_star,
        gh.sigma.len()
    );
    Ok(())
}

fn coldstart(g: &GlobalArgs, a: &crate::Coldstart) -> CliResult<()> {
    let out = out_path(g)?;
    let dmap = load_dmap(&a.dmap)?;
    let gh = load_gh(&a.gh)?;
    check_lineage("harmonics (map)", &dmap.hash, &gh.value.dmap_hash)?;
    let state = harmonics::coldstart_states(&dmap.value.dmap, &gh.value.gh, &a.window)?;
    let head = format!("{},{}", header("c", D), header("h", D));
    write_text(out, &format!("{head}\n{}\n", csv_row(state.to_vec())))
}

fn impute(g: &GlobalArgs, a: &crate::Impute) -> CliResult<()> {
    let out = out_path(g)?;
    let dmap = load_dmap(&a.dmap)?.value.dmap;
    let l = dmap.windows.window_len;
    let (mh, mrows) = format::parse_numeric_csv(&read_text(&a.measurements)?, &a.measurements)?;
    if mh.len() != l + 1 {
        return Err(CliError::parse(&a.measurements, format!("expected {l} window columns and a value column")));
    }
    let (qh, qrows) = format::parse_numeric_csv(&read_text(&a.queries)?, &a.queries)?;
    if qh.len() != l {
        return Err(CliError::parse(&a.queries, format!("expected {l} window columns")));
    }
    let measurements: Vec<(Vec<f64>, f64)> = mrows.into_iter().map(|mut r| {
        let v = r.pop().unwrap_or(f64::NAN);
        (r, v)
    }).collect();
    let cfg = GhConfig { delta: a.delta, seed: g.seed, ..GhConfig::default() };
    let values = harmonics::impute_observable(&dmap, &measurements, &qrows, &cfg)?;
    let mut s = String::from("value\n");
    for v in values {
        let _ = writeln!(s, "{v:?}");
    }
    write_text(out, &s)
}

pub fn report_csv(report: &ComparisonReport) -> String {
    let mut s = String::from("trajectory,strategy,long_mse,phase_error\n");
    for r in &report.rows {
        let _ = writeln!(s, "{},{},{:?},{:?}", r.trajectory, r.strategy, r.long_mse, r.phase_error);
    }
    s
}

pub fn report_summary(report: &ComparisonReport) -> String {
    let strategies: Vec<_> = report
        .summaries
        .iter()
        .map(|s| {
            serde_json::json!({
                "strategy": s.strategy.to_string(),
                "mean_long_mse": s.mean_mse,
                "median_long_mse": s.median_mse,
                "mean_phase_error": s.mean_phase,
                "median_phase_error": s.median_phase,
            })
        })
        .collect();
    let cold = harness::Strategy::ColdStart;
    let win_rates: serde_json::Map<String, serde_json::Value> = report
        .config
        .warmups
        .iter()
        .filter(|_| report.config.include_coldstart)
        .map(|&n| {
            let w = harness::Strategy::Warmup(n);
            (format!("coldstart_vs_{w}"), serde_json::json!(report.win_rate(cold, w)))
        })
        .collect();
    let c = &report.config;
    let doc = serde_json::json!({
        "config": {
            "warmups": c.warmups,
            "include_coldstart": c.include_coldstart,
            "window_len": c.window_len,
            "window_start": c.window_start,
            "long_horizon_start": c.long_horizon_start,
            "phase_tail": c.phase_tail,
            "trajectories": report.rows.iter().map(|r| r.trajectory).max().map_or(0, |m| m + 1),
        },
        "strategies": strategies,
        "win_rates": win_rates,
    });
    let mut text = serde_json::to_string_pretty(&doc).unwrap_or_default();
    text.push('\n');
    text
}

pub fn comparison(chain: &Chain, warmups: &[usize], window_start: usize) -> CliResult<ComparisonReport> {
    let cfg = ComparisonConfig {
        warmups: warmups.to_vec(),
        window_len: chain.dmap.windows.window_len,
        window_start,
        ..ComparisonConfig::default()
    };
    Ok(harness::compare_initialization(&chain.model, Some((&chain.dmap, &chain.gh)), &chain.dataset.test, &cfg)?)
}

fn compare_init(g: &GlobalArgs, a: &crate::CompareInit) -> CliResult<()> {
    let out = out_path(g)?;
    let chain = load_chain(&a.artifacts)?;
    let report = comparison(&chain, &a.warmups, a.window_start)?;
    write_text(&out.join("report.csv"), &report_csv(&report))?;
    write_text(&out.join("summary.json"), &report_summary(&report))?;
    println!("{:<12} {:>12} {:>12} {:>10}", "strategy", "mean mse", "median mse", "med phase");
    for s in &report.summaries {
        println!("{:<12} {:>12.4e} {:>12.4e} {:>10.1}", s.strategy.to_string(), s.mean_mse, s.median_mse, s.median_phase);
    }
    Ok(())
}

fn train_latent(g: &GlobalArgs, a: &crate::TrainLatent) -> CliResult<()> {
    let out = out_path(g)?;
    let data = load_dataset(&a.data)?;
    let dmap = load_dmap(&a.dmap)?;
    check_lineage("diffusion map", &data.hash, &dmap.value.data_hash)?;
    let dm = &dmap.value.dmap;
    let l = dm.windows.window_len;
    let train = latent::build_transitions(dm, &data.value.train, l)?;
    let cfg = TrainConfig { epochs: a.epochs, batch_size: a.batch, lr0: a.lr, lr_halving_patience: a.patience, seed: g.seed };
    let report = latent::train_latent_with_progress(&train, &cfg, |s| {
        if s.epoch % 50 == 0 || s.epoch + 1 == cfg.epochs {
            eprintln!("epoch {:4}  train {:.3e}  val {:.3e}  lr {:.2e}", s.epoch, s.train_loss, s.val_loss, s.lr);
        }
    })?;
    write_text(out, &format::latent_text(&report.model, &dmap.hash))?;
    let test = latent::build_transitions(dm, &data.value.test, l)?;
    println!("best epoch {}  test one-step MSE {:.4e}", report.best_epoch, latent::one_step_mse(&report.model, &test));
    Ok(())
}

fn rollout_latent(g: &GlobalArgs, a: &crate::RolloutLatent) -> CliResult<()> {
    let out = out_path(g)?;
    let model = load_latent(&a.model)?.value.model;
    let [p1, p2] = a.phi0[..] else {
        return Err(CliError::config(format!("--phi0 needs two values, got {}", a.phi0.len())));
    };
    let mut s = String::from("step,phi1,phi2\n");
    for (k, p) in latent::rollout_latent(&model, [p1, p2], a.horizon).iter().enumerate() {
        let _ = writeln!(s, "{k},{:?},{:?}", p[0], p[1]);
    }
    write_text(out, &s)
}

fn sync_demo(g: &GlobalArgs, a: &crate::SyncDemoArgs) -> CliResult<()> {
    let out = out_path(g)?;
    let params = BrusselatorParams::new(a.a, a.b)?;
    let traj = format::parse_trajectory_csv(&read_text(&a.traj)?, &a.traj)?;
    let demo = harness::sync_error_demo(&params, a.v_nn0, &traj)?;
    write_text(out, &sync_csv(&demo))
}

pub fn sync_csv(demo: &harness::SyncDemo) -> String {
    let mut s = String::from("t,v_ref,v_nn,e1\n");
    for k in 0..demo.times.len() {
        let _ = writeln!(s, "{:?},{:?},{:?},{:?}", demo.times[k], demo.v_ref[k], demo.v_nn[k], demo.e1[k]);
    }
    s
}
