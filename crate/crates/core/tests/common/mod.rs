#![allow(dead_code)]

use mdiica::study::{make_trial, trial_rng, SourceSpec, Trial};
use nalgebra::DMatrix;

/// Paired synthetic problem: `m` copies of a preset law, study-style seeding.
pub fn preset_trial(id: &str, m: usize, n: usize, seed: u64, rep: usize) -> Trial {
    let specs = vec![SourceSpec::preset(id).unwrap(); m];
    make_trial(&specs, n, &mut trial_rng(seed, 0, rep)).unwrap()
}

pub fn specs_trial(specs: &[SourceSpec], n: usize, seed: u64, rep: usize) -> Trial {
    make_trial(specs, n, &mut trial_rng(seed, 0, rep)).unwrap()
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}
