use coldstart_core::dynamics::generate_dataset;
use coldstart_core::manifold::{
    build_markov, extract_windows, fit_dmaps, kernel_matrix, median_epsilon, median_epsilon_subsampled, nystrom_extend,
    WindowSet, DENSE_LIMIT,
};
use coldstart_core::rng::Rng;
use proptest::prelude::*;

fn windows(rows: &[Vec<f64>]) -> WindowSet {
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    WindowSet::from_rows(rows[0].len(), &refs).unwrap()
}

/// Median of all squared distances by full sort, written independently of
/// the library path.
fn sorted_median(x: &WindowSet) -> f64 {
    let mut d = Vec::new();
    for i in 0..x.len() {
        for j in 0..i {
            d.push(x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = d.len();
    if m % 2 == 1 {
        d[m / 2]
    } else {
        0.5 * (d[m / 2 - 1] + d[m / 2])
    }
}

#[test]
fn median_epsilon_matches_sorting_oracle() {
    let mut rng = Rng::new(4, 0);
    for n in [2, 3, 10, 57] {
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.normal()).collect()).collect();
        let x = windows(&rows);
        assert_eq!(median_epsilon(&x).unwrap(), sorted_median(&x));
        assert_eq!(median_epsilon_subsampled(&x, 1000, 1).unwrap(), sorted_median(&x));
    }
}

#[test]
fn subsampled_median_tracks_the_full_one() {
    let ds = generate_dataset(20, 1, 1, 0).unwrap();
    let x = extract_windows(&ds.train, 5, 1).unwrap();
    let exact = median_epsilon(&x).unwrap();
    let approx = median_epsilon_subsampled(&x, 600, 3).unwrap();
    assert!((approx / exact - 1.0).abs() < 0.1, "{approx} vs {exact}");
}

#[test]
fn toy_circle_is_recovered_by_the_first_pair() {
    let n = 400;
    let theta: Vec<f64> = (0..n).map(|k| std::f64::consts::TAU * k as f64 / n as f64).collect();
    // A circle tilted in 3-D.
    let rows: Vec<Vec<f64>> = theta.iter().map(|t| vec![t.cos(), 0.6 * t.sin(), 0.8 * t.sin()]).collect();
    let x = windows(&rows);
    let dm = fit_dmaps(&x, median_epsilon(&x).unwrap() * 0.1, 0.0, 5).unwrap();
    let est: Vec<f64> = (0..n).map(|i| dm.eigenvectors[2][i].atan2(dm.eigenvectors[1][i])).collect();
    // Circular correlation allowing a rotation and a reflection.
    let corr = |sign: f64| {
        let (c, s) = est.iter().zip(&theta).fold((0.0, 0.0), |(c, s), (e, t)| {
            let d = e - sign * t;
            (c + d.cos(), s + d.sin())
        });
        (c * c + s * s).sqrt() / n as f64
    };
    let r = corr(1.0).max(corr(-1.0));
    assert!(r >= 0.999, "angle correlation {r}");
    assert!((dm.eigenvalues[1] - dm.eigenvalues[2]).abs() < 1e-6);
}

#[test]
fn markov_algebra_on_brusselator_windows() {
    let ds = generate_dataset(8, 1, 1, 2).unwrap();
    let x = extract_windows(&ds.train, 5, 1).unwrap();
    let eps = median_epsilon(&x).unwrap();
    let k = kernel_matrix(&x, eps);
    assert_eq!(k.asymmetry(), 0.0);
    let (d, _) = build_markov(&x, eps, 0.5).unwrap();
    for i in 0..d.rows() {
        let s: f64 = d.row(i).iter().sum();
        assert!((s - 1.0).abs() <= 1e-12);
    }
    let dm = fit_dmaps(&x, eps, 0.0, 6).unwrap();
    assert!((dm.eigenvalues[0] - 1.0).abs() <= 1e-10);
    let phi0 = &dm.eigenvectors[0];
    assert!(phi0.iter().all(|v| (v - phi0[0]).abs() < 1e-10));
}

#[test]
fn nystrom_reproduces_training_points_on_both_solver_paths() {
    let ds = generate_dataset(20, 1, 1, 3).unwrap();
    let all = extract_windows(&ds.train, 5, 1).unwrap();
    for n in [400, DENSE_LIMIT + 100] {
        let x = all.subsample(n, 0);
        let eps = 8.0 * median_epsilon(&x).unwrap();
        for alpha in [0.0, 1.0] {
            let dm = fit_dmaps(&x, eps, alpha, 6).unwrap();
            for i in (0..x.len()).step_by(37) {
                let ext = nystrom_extend(&dm, x.row(i)).unwrap();
                for k in 0..6 {
                    let err = (ext[k] - dm.eigenvectors[k][i]).abs();
                    assert!(err <= 1e-10, "n={n} alpha={alpha} i={i} k={k} err={err:e}");
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn markov_rows_are_stochastic(
        pts in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 4..40),
        eps in 0.05f64..10.0,
        alpha in 0.0f64..=1.0,
    ) {
        let x = windows(&pts);
        let (d, p) = build_markov(&x, eps, alpha).unwrap();
        for i in 0..d.rows() {
            let s: f64 = d.row(i).iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
            prop_assert!(d.row(i).iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!(p[i] >= 1.0);
        }
    }

    #[test]
    fn median_epsilon_is_translation_invariant(
        pts in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 3..30),
        shift in -5.0f64..5.0,
    ) {
        let a = windows(&pts);
        let shifted: Vec<Vec<f64>> = pts.iter().map(|r| r.iter().map(|v| v + shift).collect()).collect();
        let b = windows(&shifted);
        if let (Ok(ea), Ok(eb)) = (median_epsilon(&a), median_epsilon(&b)) {
            prop_assert!((ea - eb).abs() <= 1e-9 * ea.max(1.0));
        }
    }
}
