use std::path::Path;
use std::process::{Command, Output};

fn coldstart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coldstart")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = coldstart(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn end_to_end_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (data, model, dmap, gh, g) = (d.join("data"), d.join("model.txt"), d.join("dmap.txt"), d.join("gh.txt"), d.join("g.txt"));

    ok(&["generate-data", "--n-train", "30", "--n-val", "4", "--n-test", "6", "--seed", "2", "--out", s(&data)]);
    assert!(read(&data.join("manifest.txt")).starts_with("coldstart-dataset v1\n"));
    let first = read(&data.join("test/0000.csv"));
    assert!(first.starts_with("t,u,v\n"));
    assert_eq!(first.lines().count(), 102);

    ok(&["train-lstm", "--data", s(&data), "--epochs", "5", "--batch", "8", "--history", s(&d.join("h.csv")), "--out", s(&model)]);
    assert_eq!(read(&d.join("h.csv")).lines().count(), 6);
    assert!(read(&model).contains("\ndecoder.bias 1 1 "));

    ok(&["rollout", "--model", s(&model), "--traj", s(&data.join("test/0001.csv")), "--warmup", "5", "--out", s(&d.join("pred.csv"))]);
    let pred = read(&d.join("pred.csv"));
    assert!(pred.starts_with("t,u_true,u_pred,c1,c2,c3,c4,h1,h2,h3,h4\n"));
    assert_eq!(pred.lines().count(), 102);

    ok(&["fit-manifold", "--data", s(&data), "--max-points", "800", "--out", s(&dmap)]);
    ok(&["restrict", "--dmap", s(&dmap), "--window", "1.0,1.1,1.2,1.1,1.0", "--out", s(&d.join("phi.csv"))]);
    let phi = read(&d.join("phi.csv"));
    let header = phi.lines().next().unwrap();
    assert!(header.starts_with("phi1,phi2"));
    assert_eq!(phi.lines().nth(1).unwrap().split(',').count(), header.split(',').count());

    ok(&["fit-gh", "--data", s(&data), "--dmap", s(&dmap), "--model", s(&model), "--max-points", "300", "--out", s(&gh)]);
    ok(&["coldstart", "--dmap", s(&dmap), "--gh", s(&gh), "--window", "1.0,1.1,1.2,1.1,1.0", "--out", s(&d.join("state.csv"))]);
    let state = read(&d.join("state.csv"));
    assert_eq!(state.lines().count(), 2);
    assert_eq!(state.lines().nth(1).unwrap().split(',').count(), 8);

    let cmp = d.join("cmp");
    ok(&["compare-init", "--data", s(&data), "--model", s(&model), "--dmap", s(&dmap), "--gh", s(&gh), "--out", s(&cmp)]);
    let report = read(&cmp.join("report.csv"));
    assert_eq!(report.lines().count(), 1 + 6 * 5);
    let summary: serde_json::Value = serde_json::from_str(&read(&cmp.join("summary.json"))).unwrap();
    assert_eq!(summary["strategies"].as_array().unwrap().len(), 5);

    ok(&["train-latent", "--data", s(&data), "--dmap", s(&dmap), "--epochs", "2", "--out", s(&g)]);
    ok(&["rollout-latent", "--model", s(&g), "--phi0", "0.01,-0.02", "--horizon", "0", "--out", s(&d.join("r0.csv"))]);
    assert_eq!(read(&d.join("r0.csv")), "step,phi1,phi2\n0,0.01,-0.02\n");
    ok(&["rollout-latent", "--model", s(&g), "--phi0", "0.01,-0.02", "--horizon", "200", "--out", s(&d.join("r.csv"))]);
    assert_eq!(read(&d.join("r.csv")).lines().count(), 202);

    let mut measurements = String::from("u1,u2,u3,u4,u5,v\n");
    let mut queries = String::from("u1,u2,u3,u4,u5\n");
    for i in 0..6 {
        let traj = read(&data.join(format!("train/{i:04}.csv")));
        let rows: Vec<Vec<&str>> = traj.lines().skip(1).map(|l| l.split(',').collect()).collect();
        for start in (0..90).step_by(9) {
            let w: Vec<&str> = (start..start + 5).map(|k| rows[k][1]).collect();
            measurements.push_str(&format!("{},{}\n", w.join(","), rows[start + 4][2]));
            queries.push_str(&format!("{}\n", w.join(",")));
        }
    }
    std::fs::write(d.join("m.csv"), measurements).unwrap();
    std::fs::write(d.join("q.csv"), queries).unwrap();
    ok(&["impute", "--dmap", s(&dmap), "--measurements", s(&d.join("m.csv")), "--queries", s(&d.join("q.csv")), "--out", s(&d.join("v.csv"))]);
    assert_eq!(read(&d.join("v.csv")).lines().count(), 61);

    ok(&["sync-demo", "--traj", s(&data.join("test/0002.csv")), "--v-nn0", "-1", "--out", s(&d.join("sync.csv"))]);
    assert!(read(&d.join("sync.csv")).starts_with("t,v_ref,v_nn,e1\n"));

    let figs = |out: &Path| {
        ok(&[
            "reproduce-figures", "--data", s(&data), "--model", s(&model), "--dmap", s(&dmap), "--gh", s(&gh), "--latent", s(&g),
            "--out", s(out),
        ]);
    };
    let (f1, f2) = (d.join("figs1"), d.join("figs2"));
    figs(&f1);
    figs(&f2);
    let names = [
        "fig2_trajectories.csv", "fig3_warmup_50.csv", "fig3_warmup_25.csv", "fig3_warmup_5.csv", "fig3_warmup_0.csv",
        "fig4_embedding.csv", "fig5_states.csv", "fig5_attraction.csv", "fig6_coldstart.csv", "fig7_latent.csv",
        "fig8_harmonics.csv", "fig9_projections.csv", "report.csv", "summary.json",
    ];
    for name in names {
        assert_eq!(std::fs::read(f1.join(name)).unwrap(), std::fs::read(f2.join(name)).unwrap(), "{name} differs");
    }
    let fig4 = read(&f1.join("fig4_embedding.csv"));
    assert_eq!(fig4.lines().next().unwrap(), "phi1,phi2,u1_color");
    // One row per window the map was fitted on.
    assert_eq!(fig4.lines().count(), 1 + 800);

    // A harmonics file built against another model breaks the chain.
    let other = d.join("other.txt");
    ok(&["train-lstm", "--data", s(&data), "--epochs", "1", "--seed", "9", "--out", s(&other)]);
    let out = coldstart(&["compare-init", "--data", s(&data), "--model", s(&other), "--dmap", s(&dmap), "--gh", s(&gh), "--out", s(&cmp)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lineage"));
}

#[test]
fn config_file_supplies_defaults_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small dataset\nn_train = 3\nn_val = 1\nn_test = 2\nseed = 5\n").unwrap();
    let a = dir.path().join("a");
    ok(&["--config", s(&cfg), "generate-data", "--n-train", "4", "--out", s(&a)]);
    let manifest = read(&a.join("manifest.txt"));
    assert!(manifest.contains("\nseed 5\n"));
    assert!(manifest.contains("\ntrain 4\n") && manifest.contains("\ntest 2\n"));

    std::fs::write(&cfg, "no equals sign\n").unwrap();
    assert_eq!(coldstart(&["--config", s(&cfg), "generate-data", "--out", s(&a)]).status.code(), Some(2));
    std::fs::write(&cfg, "bogus_flag = 1\n").unwrap();
    assert_eq!(coldstart(&["--config", s(&cfg), "generate-data", "--out", s(&a)]).status.code(), Some(2));
}

#[test]
fn usage_and_input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(coldstart(&["generate-data"]).status.code(), Some(2));
    assert_eq!(coldstart(&["no-such-command"]).status.code(), Some(2));
    let missing = dir.path().join("missing");
    assert_eq!(coldstart(&["train-lstm", "--data", s(&missing), "--out", s(&dir.path().join("m.txt"))]).status.code(), Some(2));
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "coldstart-lstm v1\ndata x\n").unwrap();
    let traj = dir.path().join("t.csv");
    std::fs::write(&traj, "t,u\n0,1\n0.2,1.1\n").unwrap();
    let out = coldstart(&["rollout", "--model", s(&bad), "--traj", s(&traj), "--out", s(&dir.path().join("p.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(coldstart(&["--help"]).status.success());
}
