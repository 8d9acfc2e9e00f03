use coldstart_core::latent::{one_step_mse, rollout_latent, train_latent, LatentModel, TransitionSet};
use coldstart_core::lstm::TrainConfig;
use coldstart_core::rng::Rng;

fn identity_set(n: usize) -> TransitionSet {
    let mut rng = Rng::new(3, 0);
    let mut set = TransitionSet::default();
    for i in 0..n {
        let p = [rng.uniform_in(-1.0, 1.0), rng.uniform_in(-0.5, 0.5)];
        set.push(p, p, i % 40);
    }
    set
}

#[test]
fn learns_the_identity_map() {
    let set = identity_set(800);
    let cfg = TrainConfig { epochs: 1000, batch_size: 128, ..TrainConfig::default() };
    let report = train_latent(&set, &cfg).unwrap();
    let g = &report.model;
    let mut worst = 0.0f64;
    for x in -10..=10 {
        for y in -5..=5 {
            let p = [x as f64 / 10.0, y as f64 / 10.0];
            let q = g.step(p);
            worst = worst.max((q[0] - p[0]).abs()).max((q[1] - p[1]).abs());
        }
    }
    assert!(worst <= 1e-2, "max deviation {worst}");
    let h = &report.history;
    assert!(h.last().unwrap().train_loss < h[0].train_loss);
}

#[test]
fn training_is_deterministic() {
    let set = identity_set(200);
    let cfg = TrainConfig { epochs: 5, batch_size: 32, ..TrainConfig::default() };
    let a = train_latent(&set, &cfg).unwrap();
    let b = train_latent(&set, &cfg).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(one_step_mse(&a.model, &set), one_step_mse(&b.model, &set));
}

#[test]
fn rollout_length_and_start() {
    let g = LatentModel::random(1);
    assert_eq!(rollout_latent(&g, [0.3, -0.2], 0), vec![[0.3, -0.2]]);
    let r = rollout_latent(&g, [0.3, -0.2], 7);
    assert_eq!(r.len(), 8);
    assert_eq!(r[1], g.step(r[0]));
}
