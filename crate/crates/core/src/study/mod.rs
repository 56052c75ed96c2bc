//! Replication harness: synthetic sources, random mixing, Amari scoring.

mod config;
mod report;
mod sources;

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisFunction, BasisSet};
use crate::error::{Error, Result};
use crate::prep::{fit_whitening, DataMatrix};
use crate::solver::{fastica_single, mdiica, SolverConfig, SolverResult};

pub use config::{ConfigIssue, DistributionEntry, StudyConfig};
pub use report::{summarize, summary_table, trials_csv, MethodSummary, StudySummary};
pub use sources::{generate_sources, SourceSpec};

/// Condition number above which a random mixing draw is rejected.
pub const MAX_MIXING_CONDITION: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "mica2")]
    Mica2,
    #[serde(rename = "mica4")]
    Mica4,
    #[serde(rename = "fastica-g0")]
    FasticaG0,
    #[serde(rename = "fastica-g1")]
    FasticaG1,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mica2, Method::Mica4, Method::FasticaG0, Method::FasticaG1];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mica2 => "mica2",
            Method::Mica4 => "mica4",
            Method::FasticaG0 => "fastica-g0",
            Method::FasticaG1 => "fastica-g1",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{name}`")))
    }

    /// Runs the method on whitened data; the basis in `cfg` is overridden for
    /// the MDIICA variants.
    pub fn run(self, data_whitened: &DataMatrix, cfg: &SolverConfig) -> Result<SolverResult> {
        match self {
            Method::Mica2 => mdiica(data_whitened, &SolverConfig { basis: BasisSet::mica2(), ..cfg.clone() }),
            Method::Mica4 => mdiica(data_whitened, &SolverConfig { basis: BasisSet::mica4(), ..cfg.clone() }),
            Method::FasticaG0 => fastica_single(data_whitened, BasisFunction::G0, cfg),
            Method::FasticaG1 => fastica_single(data_whitened, BasisFunction::G1, cfg),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Amari index of `R = W W₀⁻¹`, divided by `m − 1` so that it lies in `[0, 1]`.
pub fn amari_metric(w: &DMatrix<f64>, w0_true: &DMatrix<f64>) -> Result<f64> {
    let m = w0_true.nrows();
    if !w0_true.is_square() || w.shape() != w0_true.shape() {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: w.nrows(),
        });
    }
    if m < 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: m });
    }
    let inv = w0_true.clone().try_inverse().ok_or(Error::Singular)?;
    let r = (w * inv).abs();
    let mut rows = 0.0;
    for i in 0..m {
        let row = r.row(i);
        let max = row.max();
        if !(max > 0.0) {
            return Err(Error::Singular);
        }
        rows += row.sum() / max - 1.0;
    }
    let mut cols = 0.0;
    for j in 0..m {
        let col = r.column(j);
        let max = col.max();
        if !(max > 0.0) {
            return Err(Error::Singular);
        }
        cols += col.sum() / max - 1.0;
    }
    let raw = (rows + cols) / (2.0 * m as f64);
    Ok(raw / (m - 1) as f64)
}

pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().singular_values();
    let min = sv.min();
    if min > 0.0 {
        sv.max() / min
    } else {
        f64::INFINITY
    }
}

/// Standard normal `m x m` matrix, redrawn until its condition number is at most 1e3.
pub fn random_mixing<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DMatrix<f64> {
    assert!(m >= 2, "random_mixing requires m >= 2");
    loop {
        let a = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
        if condition_number(&a) <= MAX_MIXING_CONDITION {
            return a;
        }
    }
}

/// One synthetic separation problem.
#[derive(Debug, Clone)]
pub struct Trial {
    pub sources: DataMatrix,
    pub mixing: DMatrix<f64>,
    pub mixed: DataMatrix,
    pub whitened: DataMatrix,
    /// Ground-truth unmixing in whitened coordinates, `(whitener · A)⁻¹`.
    pub w_true: DMatrix<f64>,
    /// Seed handed to every solver on this trial.
    pub solver_seed: u64,
}

/// Per-trial rng: the study seed with a stream keyed by `(entry, rep)`.
pub fn trial_rng(seed: u64, entry: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((entry as u64) << 32) | rep as u64);
    rng
}

/// Draws sources, mixes them and whitens the mixture.
pub fn make_trial<R: Rng + ?Sized>(specs: &[SourceSpec], n: usize, rng: &mut R) -> Result<Trial> {
    let sources = generate_sources(specs, n, rng)?;
    let mixing = random_mixing(specs.len(), rng);
    let mixed = DataMatrix::new(sources.values() * mixing.transpose())?;
    let t = fit_whitening(&mixed)?;
    let whitened = t.apply(&mixed)?;
    let w_true = (&t.whitener * &mixing).try_inverse().ok_or(Error::Singular)?;
    let solver_seed = rng.next_u64();
    Ok(Trial {
        sources,
        mixing,
        mixed,
        whitened,
        w_true,
        solver_seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub method: Method,
    pub spec_id: String,
    pub rep: usize,
    /// `NaN` when the trial failed.
    pub amari: f64,
    pub elapsed: Duration,
    pub seed: u64,
    pub converged: bool,
    pub iterations: usize,
    /// False when two or more sources are Gaussian.
    pub identifiable: bool,
    pub error: Option<String>,
}

impl TrialResult {
    pub fn amari_x100(&self) -> f64 {
        100.0 * self.amari
    }

    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

fn score(method: Method, trial: &Trial, cfg: &SolverConfig) -> (Result<(f64, SolverResult)>, Duration) {
    let cfg = SolverConfig {
        seed: trial.solver_seed,
        ..cfg.clone()
    };
    let start = Instant::now();
    let run = method.run(&trial.whitened, &cfg);
    let elapsed = start.elapsed();
    let scored = run.and_then(|r| Ok((amari_metric(r.w.matrix(), &trial.w_true)?, r)));
    (scored, elapsed)
}

/// Runs every method on every `(distribution, rep)` trial. Trials execute on
/// the current rayon pool; output is ordered by distribution, rep, method.
pub fn run_study(cfg: &StudyConfig) -> std::result::Result<Vec<TrialResult>, ConfigIssue> {
    let entries = cfg.resolve()?;
    let solver = cfg.solver_config();
    let jobs: Vec<(usize, usize)> = (0..entries.len())
        .flat_map(|e| (0..cfg.reps).map(move |r| (e, r)))
        .collect();
    let results: Vec<Vec<TrialResult>> = jobs
        .par_iter()
        .map(|&(e, rep)| {
            let (id, specs) = &entries[e];
            let identifiable = specs.iter().filter(|s| s.is_gaussian()).count() < 2;
            let mut rng = trial_rng(cfg.seed, e, rep);
            let trial = make_trial(specs, cfg.n, &mut rng);
            cfg.methods
                .iter()
                .map(|&method| {
                    let base = TrialResult {
                        method,
                        spec_id: id.clone(),
                        rep,
                        amari: f64::NAN,
                        elapsed: Duration::ZERO,
                        seed: 0,
                        converged: false,
                        iterations: 0,
                        identifiable,
                        error: None,
                    };
                    let trial = match &trial {
                        Ok(t) => t,
                        Err(err) => return TrialResult { error: Some(err.to_string()), ..base },
                    };
                    let (scored, elapsed) = score(method, trial, &solver);
                    let base = TrialResult {
                        elapsed,
                        seed: trial.solver_seed,
                        ..base
                    };
                    match scored {
                        Ok((amari, r)) => TrialResult {
                            amari,
                            converged: r.converged,
                            iterations: r.iterations,
                            ..base
                        },
                        Err(err) => TrialResult {
                            error: Some(err.to_string()),
                            ..base
                        },
                    }
                })
                .collect()
        })
        .collect();
    Ok(results.into_iter().flatten().collect())
}
