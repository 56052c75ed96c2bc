//! Fixed-point solvers on whitened data.
//!
//! [`mdiica`] alternates two stages until the rows of `W` stop moving:
//! a tilted-Gaussian density fit for every projection `yᵢ = wᵢᵀx`, followed by
//! one symmetric fixed-point sweep
//! `wᵢ ← E{x f′ᵢ(wᵢᵀx)} − E{f″ᵢ(wᵢᵀx)} wᵢ`, `W ← (W Wᵀ)^{-1/2} W`.
//! [`fastica_single`] runs the same sweep with a fixed nonlinearity.
//!
//! All sample expectations use correctly rounded sums, so the result depends
//! on the data only through the set of rows, not their order.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisFunction, BasisSet};
use crate::density::{fit_component, GridConfig, TiltModel};
use crate::error::{Error, Result};
use crate::prep::{
    identity_deviation, random_orthonormal, symmetric_decorrelation, DataMatrix, UnmixingMatrix,
    WhiteningTransform,
};
use crate::sum::ExactSum;

/// Loose bound on `max |cov - I|` accepted as whitened input.
pub const WHITENED_TOLERANCE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_outer_iters: usize,
    /// Fixed-point sweeps between density refits.
    pub max_inner_iters: usize,
    pub tol: f64,
    pub grid: GridConfig,
    pub basis: BasisSet,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 50,
            max_inner_iters: 1,
            tol: 1e-6,
            grid: GridConfig::default(),
            basis: BasisSet::mica2(),
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_outer_iters == 0 || self.max_inner_iters == 0 {
            return Err(Error::InvalidConfig("iteration counts must be >= 1".into()));
        }
        self.grid.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub w: UnmixingMatrix,
    /// Final per-component tilts; empty for FastICA.
    pub tilts: Vec<TiltModel>,
    /// Objective after each outer iteration: total KL^min for MDIICA, the
    /// squared-contrast sum for FastICA.
    pub kl_trace: Vec<f64>,
    /// Objective at the initial unmixing matrix.
    pub kl_initial: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest `max |W Wᵀ − I|` seen after any outer iteration.
    pub max_ortho_deviation: f64,
}

fn ortho_deviation(w: &UnmixingMatrix) -> f64 {
    identity_deviation(&(w.matrix() * w.matrix().transpose()))
}

fn check_whitened(data: &DataMatrix) -> Result<()> {
    if data.n_samples() < 2 {
        return Err(Error::InsufficientSamples {
            n_samples: data.n_samples(),
            m_channels: data.n_channels(),
        });
    }
    let deviation = identity_deviation(&data.covariance());
    if !(deviation < WHITENED_TOLERANCE) {
        return Err(Error::NotWhitened { deviation });
    }
    Ok(())
}

fn check_init(data: &DataMatrix, init: &UnmixingMatrix) -> Result<()> {
    if init.dim() != data.n_channels() {
        return Err(Error::DimensionMismatch {
            expected: data.n_channels(),
            found: init.dim(),
        });
    }
    Ok(())
}

#[inline]
fn project(x: &DMatrix<f64>, w: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    let mut y = 0.0;
    for k in 0..x.ncols() {
        y += x[(j, k)] * w[(i, k)];
    }
    y
}

fn projection(x: &DMatrix<f64>, w: &DMatrix<f64>, i: usize) -> Vec<f64> {
    (0..x.nrows()).map(|j| project(x, w, i, j)).collect()
}

/// Pre-decorrelation update `zᵢ = E{x g(yᵢ)} − E{g′(yᵢ)} wᵢ` for every row;
/// `deriv(i, y)` returns `(g, g′)` for component `i`.
fn sweep<F>(x: &DMatrix<f64>, w: &DMatrix<f64>, deriv: F) -> DMatrix<f64>
where
    F: Fn(usize, f64) -> (f64, f64) + Sync,
{
    let (n, m) = (x.nrows(), x.ncols());
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![ExactSum::new(); m];
            let mut curv = ExactSum::new();
            for j in 0..n {
                let (g, dg) = deriv(i, project(x, w, i, j));
                for (k, a) in acc.iter_mut().enumerate() {
                    a.add(x[(j, k)] * g);
                }
                curv.add(dg);
            }
            let nf = n as f64;
            let c = curv.value() / nf;
            (0..m).map(|k| acc[k].value() / nf - c * w[(i, k)]).collect()
        })
        .collect();
    DMatrix::from_fn(m, m, |i, k| rows[i][k])
}

/// `1 − min_i |⟨aᵢ, bᵢ⟩|` for unit-norm rows.
fn row_change(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let worst = (0..a.nrows())
        .map(|i| a.row(i).dot(&b.row(i)).abs())
        .fold(f64::INFINITY, f64::min);
    1.0 - worst
}

fn fit_all(x: &DMatrix<f64>, w: &DMatrix<f64>, cfg: &SolverConfig) -> Result<(Vec<TiltModel>, f64)> {
    let fits: Vec<(TiltModel, f64)> = (0..x.ncols())
        .into_par_iter()
        .map(|i| fit_component(&projection(x, w, i), &cfg.grid, &cfg.basis))
        .collect::<Result<_>>()?;
    let total = fits.iter().map(|(_, kl)| kl).sum();
    Ok((fits.into_iter().map(|(t, _)| t).collect(), total))
}

/// MDIICA from a random orthonormal start seeded by `cfg.seed`.
pub fn mdiica(data_whitened: &DataMatrix, cfg: &SolverConfig) -> Result<SolverResult> {
    let init = random_orthonormal(
        data_whitened.n_channels(),
        &mut ChaCha8Rng::seed_from_u64(cfg.seed),
    );
    mdiica_from(data_whitened, cfg, init)
}

/// MDIICA from an explicit initial unmixing matrix.
pub fn mdiica_from(
    data_whitened: &DataMatrix,
    cfg: &SolverConfig,
    init: UnmixingMatrix,
) -> Result<SolverResult> {
    cfg.validate()?;
    check_whitened(data_whitened)?;
    check_init(data_whitened, &init)?;
    let x = data_whitened.values();

    let mut w = init;
    let (mut tilts, kl_initial) = fit_all(x, w.matrix(), cfg)?;
    let mut kl_trace = Vec::with_capacity(cfg.max_outer_iters);
    let mut converged = false;
    let mut max_ortho_deviation = 0.0f64;

    for _ in 0..cfg.max_outer_iters {
        let mut next = w.clone();
        for _ in 0..cfg.max_inner_iters {
            let z = sweep(x, next.matrix(), |i, y| {
                let t = tilts[i].eval(y);
                (t.f1, t.f2)
            });
            next = symmetric_decorrelation(&z)?;
        }
        let change = row_change(next.matrix(), w.matrix());
        w = next;
        max_ortho_deviation = max_ortho_deviation.max(ortho_deviation(&w));
        let (fitted, kl) = fit_all(x, w.matrix(), cfg)?;
        tilts = fitted;
        kl_trace.push(kl);
        if change < cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(SolverResult {
        w,
        tilts,
        iterations: kl_trace.len(),
        kl_trace,
        kl_initial,
        converged,
        max_ortho_deviation,
    })
}

/// `1 − |cos|` between each pre-decorrelation MDIICA update direction and
/// the current row `wᵢ`, using the tilts fitted at `w`.
pub fn update_alignment(data_whitened: &DataMatrix, w: &UnmixingMatrix, tilts: &[TiltModel]) -> Result<Vec<f64>> {
    check_init(data_whitened, w)?;
    if tilts.len() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            found: tilts.len(),
        });
    }
    let z = sweep(data_whitened.values(), w.matrix(), |i, y| {
        let t = tilts[i].eval(y);
        (t.f1, t.f2)
    });
    Ok((0..w.dim())
        .map(|i| {
            let zi = z.row(i);
            let cos = zi.dot(&w.matrix().row(i)) / zi.norm();
            1.0 - cos.abs()
        })
        .collect())
}

/// `1 − min_i |cos|` between the rows of `(Z Zᵀ)^{-1/2} Z` and `W`, where `Z`
/// is the MDIICA update at `w`. Zero exactly when `Z Wᵀ` is symmetric
/// positive definite, the stationarity condition under `W Wᵀ = I`.
pub fn fixed_point_residual(data_whitened: &DataMatrix, w: &UnmixingMatrix, tilts: &[TiltModel]) -> Result<f64> {
    check_init(data_whitened, w)?;
    if tilts.len() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            found: tilts.len(),
        });
    }
    let z = sweep(data_whitened.values(), w.matrix(), |i, y| {
        let t = tilts[i].eval(y);
        (t.f1, t.f2)
    });
    let next = symmetric_decorrelation(&z)?;
    Ok(row_change(next.matrix(), w.matrix()))
}

/// `E{G(ν)}` for a standard normal `ν`.
pub fn gaussian_expectation(g: BasisFunction) -> f64 {
    static LOG_COSH: OnceLock<f64> = OnceLock::new();
    match g {
        BasisFunction::G0 => 0.75,
        BasisFunction::G1 => *LOG_COSH.get_or_init(|| gaussian_quadrature(|y| BasisFunction::G1.eval(y).0)),
        BasisFunction::G2bar => std::f64::consts::FRAC_1_SQRT_2,
        BasisFunction::G1bar => 0.0,
    }
}

/// Composite Simpson rule for `∫ φ(y) h(y) dy` on `[-12, 12]`.
fn gaussian_quadrature(h: impl Fn(f64) -> f64) -> f64 {
    const HALF: f64 = 12.0;
    const INTERVALS: usize = 24_000;
    let step = 2.0 * HALF / INTERVALS as f64;
    let mut acc = ExactSum::new();
    for k in 0..=INTERVALS {
        let y = -HALF + k as f64 * step;
        let weight = if k == 0 || k == INTERVALS {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc.add(weight * crate::density::std_normal_pdf(y) * h(y));
    }
    acc.value() * step / 3.0
}

fn contrast(x: &DMatrix<f64>, w: &DMatrix<f64>, g: BasisFunction) -> f64 {
    let baseline = gaussian_expectation(g);
    (0..x.ncols())
        .into_par_iter()
        .map(|i| {
            let mut acc = ExactSum::new();
            for j in 0..x.nrows() {
                acc.add(g.eval(project(x, w, i, j)).0);
            }
            let dev = acc.value() / x.nrows() as f64 - baseline;
            dev * dev
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .sum()
}

/// Symmetric FastICA with a single nonlinearity (`G0` or `G1`), seeded start.
pub fn fastica_single(
    data_whitened: &DataMatrix,
    nonlinearity: BasisFunction,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    let init = random_orthonormal(
        data_whitened.n_channels(),
        &mut ChaCha8Rng::seed_from_u64(cfg.seed),
    );
    fastica_from(data_whitened, nonlinearity, cfg, init)
}

pub fn fastica_from(
    data_whitened: &DataMatrix,
    nonlinearity: BasisFunction,
    cfg: &SolverConfig,
    init: UnmixingMatrix,
) -> Result<SolverResult> {
    if !matches!(nonlinearity, BasisFunction::G0 | BasisFunction::G1) {
        return Err(Error::InvalidConfig(format!(
            "FastICA nonlinearity must be g0 or g1, got {}",
            nonlinearity.name()
        )));
    }
    cfg.validate()?;
    check_whitened(data_whitened)?;
    check_init(data_whitened, &init)?;
    let x = data_whitened.values();

    let mut w = init;
    let kl_initial = contrast(x, w.matrix(), nonlinearity);
    let mut kl_trace = Vec::with_capacity(cfg.max_outer_iters);
    let mut converged = false;
    let mut max_ortho_deviation = 0.0f64;
    for _ in 0..cfg.max_outer_iters {
        let z = sweep(x, w.matrix(), |_, y| {
            let (_, g, dg) = nonlinearity.eval(y);
            (g, dg)
        });
        let next = symmetric_decorrelation(&z)?;
        let change = row_change(next.matrix(), w.matrix());
        w = next;
        max_ortho_deviation = max_ortho_deviation.max(ortho_deviation(&w));
        kl_trace.push(contrast(x, w.matrix(), nonlinearity));
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(SolverResult {
        w,
        tilts: Vec::new(),
        iterations: kl_trace.len(),
        kl_trace,
        kl_initial,
        converged,
        max_ortho_deviation,
    })
}

/// Source estimates `y = W · whitener · (x − mean)` for every row of `raw`.
pub fn recover_sources(
    w: &UnmixingMatrix,
    t: &WhiteningTransform,
    raw: &DataMatrix,
) -> Result<DataMatrix> {
    if w.dim() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            found: w.dim(),
        });
    }
    let z = t.apply(raw)?;
    DataMatrix::new(z.values() * w.matrix().transpose())
}
