mod common;

use common::gauss_solve;
use mdiica::density::std_normal_pdf;
use mdiica::study::SourceSpec;
use mdiica::{build_histogram, fit_tilt_wls, fit_tilt_wls_ridge, kl_min, partition_integral, BasisSet, TiltModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn draws(spec: &SourceSpec, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| spec.sample(&mut rng)).collect()
}

/// Composite Simpson rule on `[lo, hi]`.
fn simpson(lo: f64, hi: f64, intervals: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (hi - lo) / intervals as f64;
    let mut acc = f(lo) + f(hi);
    for k in 1..intervals {
        acc += f(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn gaussian_histogram_tracks_bin_masses() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let s: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
    let h = build_histogram(&s, 500, (-5.0, 5.0)).unwrap();
    // binomial 5σ bound per bin: 5·sqrt(max Δφ / N) ≈ 1.4e-3
    let worst = h
        .centers()
        .iter()
        .zip(h.freqs())
        .map(|(&c, &q)| (q - h.step() * std_normal_pdf(c)).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.006, "{worst}");
    assert!(worst < 5.0 * (h.step() * std_normal_pdf(0.0) / 1e5).sqrt());
}

#[test]
fn fit_matches_independent_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for trial in 0..20 {
        let id = SourceSpec::PRESETS[trial % SourceSpec::PRESETS.len()];
        let n = rng.random_range(500..5000);
        let bins = rng.random_range(20..500);
        let s = draws(&SourceSpec::preset(id).unwrap(), n, trial as u64);
        let h = build_histogram(&s, bins, (-5.0, 5.0)).unwrap();
        let basis = BasisSet::mica2();
        let fit = fit_tilt_wls_ridge(&h, &basis, 0.0).unwrap();

        // dense Dᵀ diag(w) D β = Dᵀ diag(w) r with r = (q - w) / w, written out in full
        let rows: Vec<(f64, f64, f64, f64)> = h
            .centers()
            .iter()
            .zip(h.freqs())
            .map(|(&c, &q)| {
                let w = h.step() * (-0.5 * c * c).exp() / (2.0 * std::f64::consts::PI).sqrt();
                (w, c * (-0.5 * c * c).exp(), (-0.5 * c * c).exp(), (q - w) / w)
            })
            .collect();
        let mut a = vec![vec![0.0; 2]; 2];
        let mut b = vec![0.0; 2];
        for &(w, g1, g2, r) in &rows {
            let d = [g1, g2];
            for i in 0..2 {
                b[i] += d[i] * w * r;
                for j in 0..2 {
                    a[i][j] += d[i] * w * d[j];
                }
            }
        }
        let oracle = gauss_solve(a, b);
        for k in 0..2 {
            let scale = oracle[k].abs().max(1.0);
            assert!((fit.beta[k] - oracle[k]).abs() < 1e-10 * scale, "{id}: {:?} vs {oracle:?}", fit.beta);
        }
    }
}

#[test]
fn bimodal_kl_agrees_with_quadrature() {
    let s = draws(&SourceSpec::preset("mix2-sym").unwrap(), 20_000, 5);
    let h = build_histogram(&s, 500, (-5.0, 5.0)).unwrap();
    let m = fit_tilt_wls(&h, &BasisSet::mica2()).unwrap();
    let kl = kl_min(&m, &h);
    assert!(kl > 0.0, "{kl}");
    // ∫φ e^f f dy − ∫φ e^f dy + 1 on the grid range
    let tilted = simpson(-5.0, 5.0, 20_000, |y| {
        let f = m.eval(y).f;
        std_normal_pdf(y) * f.exp() * f
    });
    let partition = simpson(-5.0, 5.0, 20_000, |y| std_normal_pdf(y) * m.eval(y).f.exp());
    let continuous = tilted - partition + 1.0;
    assert!((kl - continuous).abs() < 2e-2, "{kl} vs {continuous}");
}

#[test]
fn fitted_tilt_is_a_local_maximum_on_small_tilts() {
    for (k, id) in ["uniform", "mix2-sym", "t5", "laplace"].iter().enumerate() {
        let s = draws(&SourceSpec::preset(id).unwrap(), 50_000, 40 + k as u64);
        let h = build_histogram(&s, 500, (-5.0, 5.0)).unwrap();
        let fit = fit_tilt_wls(&h, &BasisSet::mica2()).unwrap();
        let base = kl_min(&fit, &h);
        for coord in 0..2 {
            for delta in [-0.05, 0.05] {
                let mut beta = fit.beta.clone();
                beta[coord] += delta;
                let moved = TiltModel::new(beta, BasisSet::mica2()).unwrap();
                let gain = kl_min(&moved, &h) - base;
                assert!(gain <= 1e-6, "{id}: coordinate {coord} {delta:+} gains {gain}");
            }
        }
    }
}

#[test]
fn doubling_bins_barely_moves_kl() {
    for (k, id) in ["uniform", "exponential", "laplace", "mix2-sym", "mix2-asym"].iter().enumerate() {
        let s = draws(&SourceSpec::preset(id).unwrap(), 10_000, 70 + k as u64);
        let kl_at = |bins: usize| {
            let h = build_histogram(&s, bins, (-5.0, 5.0)).unwrap();
            kl_min(&fit_tilt_wls(&h, &BasisSet::mica2()).unwrap(), &h)
        };
        let (a, b) = (kl_at(500), kl_at(1000));
        assert!((a - b).abs() < 5e-3, "{id}: {a} vs {b}");
    }
}

#[test]
fn gaussian_samples_fit_a_null_tilt() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
    let h = build_histogram(&s, 500, (-5.0, 5.0)).unwrap();
    let m = fit_tilt_wls(&h, &BasisSet::mica2()).unwrap();
    assert!(m.beta_norm() < 0.05, "{:?}", m.beta);
    assert!(kl_min(&m, &h) < 0.01);
    assert!((partition_integral(&m, &h) - 1.0).abs() < 0.05);
}

#[test]
fn mild_non_gaussian_partition_stays_near_one() {
    for (k, id) in ["uniform", "mix2-sym", "t5"].iter().enumerate() {
        let s = draws(&SourceSpec::preset(id).unwrap(), 10_000, 90 + k as u64);
        let h = build_histogram(&s, 500, (-5.0, 5.0)).unwrap();
        let z = partition_integral(&fit_tilt_wls(&h, &BasisSet::mica2()).unwrap(), &h);
        assert!((z - 1.0).abs() < 0.1, "{id}: {z}");
    }
}
