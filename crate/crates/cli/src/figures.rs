//! Plot data for every figure, one CSV per panel.

use std::fmt::Write as _;

use coldstart_core::harmonics::{self, evaluate_gh};
use coldstart_core::harness::{self, ComparisonConfig, MatureCloud, Strategy};
use coldstart_core::latent;
use coldstart_core::lstm::D;
use coldstart_core::manifold;

use crate::commands::{self, load_chain, load_latent, out_path};
use crate::error::{check_lineage, CliResult};
use crate::format::write_text;
use crate::{GlobalArgs, ReproduceFigures};

/// Training trajectories shown in the data overview.
const OVERVIEW_TRAJECTORIES: usize = 5;
/// Test trajectories shown in the per-trajectory prediction panels.
const PANEL_TRAJECTORIES: usize = 3;
/// Free-running rollouts in the state-attraction panel.
const STATE_ROLLOUTS: usize = 25;
/// Latent rollout length.
const LATENT_STEPS: usize = 50;

fn row(s: &mut String, head: impl core::fmt::Display, values: impl IntoIterator<Item = f64>) {
    let _ = write!(s, "{head}");
    for v in values {
        let _ = write!(s, ",{v:?}");
    }
    s.push('\n');
}

fn state_header(prefix: &str, suffix: &str) -> String {
    (1..=D).map(|i| format!("{prefix}{i}{suffix}")).collect::<Vec<_>>().join(",")
}

pub fn reproduce(g: &GlobalArgs, a: &ReproduceFigures) -> CliResult<()> {
    let dir = out_path(g)?;
    let chain = load_chain(&a.artifacts)?;
    let ds = &chain.dataset;
    let model = &chain.model;
    let dmap = &chain.dmap;
    let l = dmap.windows.window_len;
    let cfg = ComparisonConfig { window_len: l, ..ComparisonConfig::default() };
    let panel = &ds.test[..PANEL_TRAJECTORIES.min(ds.test.len())];

    let mut s = String::from("trajectory,t,u,v\n");
    for (i, t) in ds.train.iter().take(OVERVIEW_TRAJECTORIES).enumerate() {
        for (k, time) in t.times().enumerate() {
            row(&mut s, i, [time, t.u[k], t.v.as_ref().map_or(f64::NAN, |v| v[k])]);
        }
    }
    write_text(&dir.join("fig2_trajectories.csv"), &s)?;

    for n in [50, 25, 5, 0] {
        let mut s = String::from("trajectory,t,u_true,u_pred\n");
        for (i, t) in panel.iter().enumerate() {
            let pred = harness::strategy_prediction(model, None, &t.u, Strategy::Warmup(n), &cfg)?;
            for (k, time) in t.times().enumerate() {
                row(&mut s, i, [time, t.u[k], pred[k]]);
            }
        }
        write_text(&dir.join(format!("fig3_warmup_{n}.csv")), &s)?;
    }

    let (p1, p2) = selected_pair(dmap);
    let mut s = String::from("phi1,phi2,u1_color\n");
    for i in 0..dmap.windows.len() {
        let _ = writeln!(s, "{:?},{:?},{:?}", dmap.eigenvectors[p1][i], dmap.eigenvectors[p2][i], dmap.windows.row(i)[0]);
    }
    write_text(&dir.join("fig4_embedding.csv"), &s)?;

    let train_table = harmonics::collect_mature_states(model, &ds.train, l, chain.maturity)?;
    let cloud = MatureCloud::from_table(&train_table);
    let rollouts = &ds.test[..STATE_ROLLOUTS.min(ds.test.len())];
    let report = harness::state_manifold_report(model, rollouts, &cloud)?;
    let mut s = format!("trajectory,step,{},{}\n", state_header("c", ""), state_header("h", ""));
    for (i, states) in report.states.iter().enumerate() {
        for (k, st) in states.iter().enumerate() {
            row(&mut s, format!("{i},{k}"), st.to_vec());
        }
    }
    write_text(&dir.join("fig5_states.csv"), &s)?;
    let mut s = String::from("step,median_distance\n");
    for (k, d) in report.median_distance.iter().enumerate() {
        row(&mut s, k, [*d]);
    }
    write_text(&dir.join("fig5_attraction.csv"), &s)?;

    let mut s = String::from("trajectory,t,u_true,warmup5,coldstart\n");
    for (i, t) in panel.iter().enumerate() {
        let warm = harness::strategy_prediction(model, None, &t.u, Strategy::Warmup(5), &cfg)?;
        let cold = harness::strategy_prediction(model, Some((dmap, &chain.gh)), &t.u, Strategy::ColdStart, &cfg)?;
        for (k, time) in t.times().enumerate() {
            row(&mut s, i, [time, t.u[k], warm[k], cold[k]]);
        }
    }
    write_text(&dir.join("fig6_coldstart.csv"), &s)?;

    if let Some(path) = &a.latent {
        let g_model = load_latent(path)?;
        check_lineage("latent model", &chain.dmap_hash, &g_model.value.dmap_hash)?;
        let mut s = String::from("trajectory,step,phi1_true,phi2_true,phi1_pred,phi2_pred\n");
        for (i, t) in ds.test.iter().take(PANEL_TRAJECTORIES).enumerate() {
            let w = manifold::extract_windows(core::slice::from_ref(t), l, 1)?;
            let truth = (0..w.len()).map(|k| dmap.restrict(w.row(k))).collect::<coldstart_core::Result<Vec<_>>>()?;
            let steps = LATENT_STEPS.min(truth.len() - 1);
            let pred = latent::rollout_latent(&g_model.value.model, [truth[0][0], truth[0][1]], steps);
            for (k, p) in pred.iter().enumerate() {
                row(&mut s, format!("{i},{k}"), [truth[k][0], truth[k][1], p[0], p[1]]);
            }
        }
        write_text(&dir.join("fig7_latent.csv"), &s)?;
    } else {
        eprintln!("no --latent model given; skipping fig7_latent.csv");
    }

    let test_table = harmonics::collect_mature_states(model, &ds.test, l, chain.maturity)?;
    let mut s8 = format!(
        "phi1,phi2,{},{},{},{}\n",
        state_header("c", ""),
        state_header("h", ""),
        state_header("c", "_gh"),
        state_header("h", "_gh")
    );
    let mut s9 = String::from("c1,c2,c3,u_color\n");
    for (i, st) in test_table.states.iter().enumerate() {
        let w = test_table.windows.row(i);
        let phi = dmap.restrict(w)?;
        let est = evaluate_gh(&chain.gh, &phi);
        row(&mut s8, format!("{:?},{:?}", phi[0], phi[1]), st.iter().copied().chain(est));
        row(&mut s9, format!("{:?},{:?},{:?}", st[0], st[1], st[2]), [w[l - 1]]);
    }
    write_text(&dir.join("fig8_harmonics.csv"), &s8)?;
    write_text(&dir.join("fig9_projections.csv"), &s9)?;

    let comparison = commands::comparison(&chain, &cfg.warmups, 0)?;
    write_text(&dir.join("report.csv"), &commands::report_csv(&comparison))?;
    write_text(&dir.join("summary.json"), &commands::report_summary(&comparison))?;
    println!("wrote figure data to {}", dir.display());
    Ok(())
}

fn selected_pair(dmap: &manifold::DiffusionMap) -> (usize, usize) {
    match dmap.selected[..] {
        [a, b, ..] => (a, b),
        [a] => (a, (a + 1).min(dmap.eigenvectors.len() - 1)),
        [] => (1, 2.min(dmap.eigenvectors.len() - 1)),
    }
}
