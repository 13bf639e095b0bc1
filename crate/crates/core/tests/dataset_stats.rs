mod common;

use common::rng;

use srgan::dataset::{
    build_bundle, generate_example, sample_coeffs, DatasetBundle, OBSERVATION_COUNT,
};

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[test]
fn coefficient_statistics() {
    let mut r = rng(100);
    let draws: Vec<_> = (0..10_000).map(|_| sample_coeffs(&mut r)).collect();
    let mean_a3 = draws.iter().map(|c| c.a3).sum::<f64>() / draws.len() as f64;
    assert!(mean_a3.abs() < 0.05, "mean a3 {mean_a3}");
    // Var U(-1,1) = 1/3
    let var_a3 = draws.iter().map(|c| c.a3 * c.a3).sum::<f64>() / draws.len() as f64;
    assert!((var_a3 - 1.0 / 3.0).abs() < 0.02, "var a3 {var_a3}");
    for c in &draws {
        assert_eq!(c.a1, 1.0);
        assert!((1.0..=2.0).contains(&c.a2.abs()));
        assert!((1.0..=2.0).contains(&c.a4.abs()));
    }
    // Bernoulli(1/2) sign for a2 and a4
    let neg_a2 = draws.iter().filter(|c| c.a2 < 0.0).count() as f64 / draws.len() as f64;
    let neg_a4 = draws.iter().filter(|c| c.a4 < 0.0).count() as f64 / draws.len() as f64;
    assert!((neg_a2 - 0.5).abs() < 0.03 && (neg_a4 - 0.5).abs() < 0.03);
}

#[test]
fn distractor_polynomials_carry_no_label_signal() {
    let bundle = build_bundle(3, 0, 0, 20_000, 0.1).unwrap();
    let labels: Vec<f64> = bundle.test.iter().map(|e| e.label.unwrap()).collect();
    let column = |j: usize| -> Vec<f64> { bundle.test.iter().map(|e| e.observations[j]).collect() };
    // |rho| for independent columns is ~ 1/sqrt(20000) ≈ 0.007
    for j in 10..OBSERVATION_COUNT {
        let rho = pearson(&column(j), &labels);
        assert!(rho.abs() < 0.04, "position {j}: rho {rho}");
    }
    // the first polynomial does carry it: y(1) = 1 + a2 + a3 + a4
    let rho = pearson(&column(9), &labels);
    assert!(rho > 0.2, "position 9: rho {rho}");
}

#[test]
fn noise_has_requested_scale() {
    let sigma = 0.3;
    let mut a = rng(5);
    let mut b = rng(5);
    let mut residuals = Vec::new();
    for _ in 0..2_000 {
        let noisy = generate_example(&mut a, sigma).unwrap();
        // the same stream position with sigma 0 reproduces the clean values,
        // because noise draws happen regardless of sigma
        let clean = generate_example(&mut b, 0.0).unwrap();
        assert_eq!(noisy.label, clean.label);
        residuals.extend(noisy.observations.iter().zip(&clean.observations).map(|(n, c)| n - c));
    }
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let sd = (residuals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n).sqrt();
    assert!(mean.abs() < 0.01, "noise mean {mean}");
    assert!((sd - sigma).abs() < 0.01, "noise sd {sd}");
}

#[test]
fn bundle_csv_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = build_bundle(8, 7, 5, 6, 0.1).unwrap();
    let path = dir.path().join("bundle.csv");
    bundle.write_csv(&path).unwrap();
    let back = DatasetBundle::read_csv(&path).unwrap();
    assert_eq!(back, bundle);
    assert_eq!(back.checksum(), bundle.checksum());
    assert!(back.unlabeled.iter().all(|e| e.label.is_none()));
}

#[test]
fn seeds_give_different_data() {
    let a = build_bundle(0, 50, 0, 10, 0.1).unwrap();
    let b = build_bundle(1, 50, 0, 10, 0.1).unwrap();
    assert_ne!(a.labeled, b.labeled);
    let again = build_bundle(0, 50, 0, 10, 0.1).unwrap();
    assert_eq!(a, again);
}
