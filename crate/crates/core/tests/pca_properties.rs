//! Statistical identities of the fitted reducer on random data.

use edgeward_core::dataset::Dataset;
use edgeward_core::pca::{covariance, eigen_sym, fit_pca, project};
use edgeward_core::Matrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Correlated random data: latent Gaussian-ish factors mixed into d columns.
fn random_data(seed: u64, n: usize, d: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let latent = rng.random_range(1..=d);
    let mix: Vec<f64> = (0..latent * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let z: Vec<f64> = (0..latent).map(|_| rng.random_range(-1.0..1.0)).collect();
        for j in 0..d {
            let v: f64 = (0..latent).map(|l| z[l] * mix[l * d + j]).sum();
            data.push(v + 0.01 * rng.random_range(-1.0..1.0));
        }
    }
    let labels = (0..n).map(|i| i % 2).collect();
    Dataset::new(Matrix::from_vec(n, d, data).unwrap(), labels, 2).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projected_variances_and_reconstruction(seed in any::<u64>(), n in 2usize..=500, d in 1usize..=32) {
        let data = random_data(seed, n, d);
        let model = fit_pca(&data, 1.0).unwrap();
        let top = model.eigenvalues[0];

        // orthonormal rows
        let s = &model.subspace;
        for i in 0..model.k {
            for j in 0..model.k {
                let dot: f64 = s.row(i).iter().zip(s.row(j)).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - target).abs() < 1e-8);
            }
        }

        // per-component variance (1/N) equals the eigenvalue
        let p = project(&model, &data).unwrap();
        for comp in 0..model.k {
            let lambda = model.eigenvalues[comp];
            if lambda < 1e-8 * top {
                continue;
            }
            let var = p.features.iter_rows().map(|r| r[comp] * r[comp]).sum::<f64>() / n as f64;
            prop_assert!(rel(var, lambda) < 1e-6, "comp {comp}: {var} vs {lambda}");
        }
    }

    #[test]
    fn reconstruction_error_is_tail_mass(seed in any::<u64>(), n in 20usize..=500, d in 2usize..=32, target in 0.5f64..0.99) {
        let data = random_data(seed, n, d);
        let model = fit_pca(&data, target).unwrap();
        prop_assert!(model.captured_ratio >= target);
        let tail: f64 = model.eigenvalues[model.k..].iter().sum();
        let p = project(&model, &data).unwrap();
        let mut err = 0.0;
        for (orig, proj) in data.features.iter_rows().zip(p.features.iter_rows()) {
            for (j, (&x, &mu)) in orig.iter().zip(&model.mean).enumerate() {
                let recon: f64 = (0..model.k).map(|c| proj[c] * model.subspace[(c, j)]).sum();
                let e = x - mu - recon;
                err += e * e;
            }
        }
        err /= n as f64;
        let total: f64 = model.eigenvalues.iter().sum();
        if tail > 1e-8 * total {
            prop_assert!(rel(err, tail) < 1e-6, "{err} vs {tail}");
        } else {
            prop_assert!(err < 1e-8 * total);
        }
    }

    #[test]
    fn full_rotation_preserves_distances(seed in any::<u64>(), n in 2usize..60, d in 1usize..10) {
        let data = random_data(seed, n, d);
        let model = fit_pca(&data, 1.0).unwrap();
        prop_assume!(model.k == d);
        let p = project(&model, &data).unwrap();
        for i in 0..n.min(10) {
            for j in 0..n.min(10) {
                let a: f64 = data.features.row(i).iter().zip(data.features.row(j)).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                let b: f64 = p.features.row(i).iter().zip(p.features.row(j)).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fit_is_deterministic(seed in any::<u64>()) {
        let data = random_data(seed, 40, 6);
        prop_assert_eq!(fit_pca(&data, 0.95).unwrap(), fit_pca(&data, 0.95).unwrap());
    }

    #[test]
    fn covariance_diagonal_nonnegative(seed in any::<u64>(), n in 1usize..50, d in 1usize..8) {
        let data = random_data(seed, n, d);
        let v = covariance(&data);
        for i in 0..d {
            prop_assert!(v[(i, i)] >= 0.0);
        }
    }

    /// 2×2 symmetric matrices against the roots of λ² − tr·λ + det.
    #[test]
    fn two_by_two_matches_quadratic(a in -10.0f64..10.0, b in -10.0f64..10.0, c in -10.0f64..10.0) {
        let m = Matrix::from_rows(&[vec![a, b], vec![b, c]]).unwrap();
        let r = eigen_sym(&m).unwrap();
        let tr = a + c;
        let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
        let hi = 0.5 * (tr + disc);
        let lo = 0.5 * (tr - disc);
        prop_assert!((r.values[0] - hi).abs() < 1e-10);
        prop_assert!((r.values[1] - lo).abs() < 1e-10);
    }
}
