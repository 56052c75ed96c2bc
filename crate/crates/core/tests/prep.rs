mod common;

use common::max_abs;
use mdiica::prep::identity_deviation;
use mdiica::study::SourceSpec;
use mdiica::{fit_whitening, random_orthonormal, symmetric_decorrelation, DataMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_matrix(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |_, _| rng.sample(StandardNormal))
}

/// `U Vᵀ` from the SVD `w = U Σ Vᵀ`, the orthogonal polar factor of `w`.
fn polar_factor(w: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = w.clone().svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

#[test]
fn decorrelation_matches_polar_factor() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 50 {
        let w = random_matrix(3, &mut rng);
        if mdiica::study::condition_number(&w) >= 100.0 {
            continue;
        }
        let ours = symmetric_decorrelation(&w).unwrap();
        assert!(max_abs(&(ours.matrix() - polar_factor(&w))) < 1e-10);
        checked += 1;
    }
}

#[test]
fn whitening_population_covariance_is_near_identity() {
    // With Cov(s) = I exactly, the whitened population covariance is (KA)(KA)ᵀ;
    // the fitted K only sees 1000 samples.
    let mut worst = 0.0f64;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(3, &mut rng);
        let s = DMatrix::from_fn(1000, 3, |_, _| SourceSpec::Uniform.sample(&mut rng));
        let x = DataMatrix::new(&s * a.transpose()).unwrap();
        let t = fit_whitening(&x).unwrap();
        let ka = &t.whitener * &a;
        worst = worst.max(identity_deviation(&(&ka * ka.transpose())));
    }
    assert!(worst < 0.15, "{worst}");
}

#[test]
fn random_rotation_angles_are_uniform() {
    // chi-square on 8 angular bins, df = 7, critical value at p = 0.001
    const CRITICAL: f64 = 24.321_886;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut bins = [0usize; 8];
    for _ in 0..1000 {
        let w = random_orthonormal(2, &mut rng);
        let angle = w.matrix()[(1, 0)].atan2(w.matrix()[(0, 0)]);
        let unit = (angle + std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
        bins[((unit * 8.0) as usize).min(7)] += 1;
    }
    let expected = 125.0;
    let chi2: f64 = bins.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    assert!(chi2 < CRITICAL, "chi2 = {chi2}, bins = {bins:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decorrelation_is_idempotent_and_scale_free(seed in any::<u64>(), m in 2usize..6, c in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_matrix(m, &mut rng);
        prop_assume!(mdiica::study::condition_number(&w) < 1e3);
        let once = symmetric_decorrelation(&w).unwrap();
        let twice = symmetric_decorrelation(once.matrix()).unwrap();
        prop_assert!(max_abs(&(once.matrix() - twice.matrix())) < 1e-10);
        let scaled = symmetric_decorrelation(&(&w * c)).unwrap();
        prop_assert!(max_abs(&(once.matrix() - scaled.matrix())) < 1e-10);
        prop_assert!(identity_deviation(&(once.matrix() * once.matrix().transpose())) < 1e-10);
    }

    #[test]
    fn whitening_gives_unit_covariance(seed in any::<u64>(), m in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(m, &mut rng);
        prop_assume!(mdiica::study::condition_number(&a) < 1e3);
        let s = DMatrix::from_fn(400, m, |_, _| rng.sample::<f64, _>(StandardNormal) + 3.0);
        let x = DataMatrix::new(&s * a.transpose()).unwrap();
        let t = fit_whitening(&x).unwrap();
        let z = t.apply(&x).unwrap();
        prop_assert!(identity_deviation(&z.covariance()) < 1e-6);
        prop_assert!(z.column_means().amax() < 1e-10);
        prop_assert!(identity_deviation(&(&t.whitener * &t.dewhitener)) < 1e-8);
    }
}
