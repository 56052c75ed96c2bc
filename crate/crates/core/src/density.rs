//! Exponentially tilted Gaussian density fits on a fixed grid.
//!
//! A projection `y` is summarized by its binned frequencies `q_l` on `L`
//! equally spaced centers. The tilt `f = βᵀḠ` of the Gaussian prior is then
//! found by a single weighted least squares problem with weights `Δφ(y_l)`
//! and targets `(q_l - Δφ(y_l)) / Δφ(y_l)`, the quadratic surrogate of the
//! discretized minimum discrimination information.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{tilt_at, BasisSet, TiltValue};
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 500;
pub const DEFAULT_HALF_WIDTH: f64 = 5.0;
pub const DEFAULT_RIDGE: f64 = 1e-8;
/// Tilt values are clipped to `[-EXP_CLAMP, EXP_CLAMP]` before exponentiation.
pub const EXP_CLAMP: f64 = 30.0;
const MAX_CONDITION: f64 = 1e12;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(y: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * y * y).exp()
}

/// Grid layout shared by every component fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub bins: usize,
    /// Grid covers `(-half_width, half_width]`.
    pub half_width: f64,
    pub ridge: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            bins: DEFAULT_BINS,
            half_width: DEFAULT_HALF_WIDTH,
            ridge: DEFAULT_RIDGE,
        }
    }
}

impl GridConfig {
    pub fn range(&self) -> (f64, f64) {
        (-self.half_width, self.half_width)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::InvalidConfig(format!("grid needs at least 2 bins, got {}", self.bins)));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::InvalidRange {
                lo: -self.half_width,
                hi: self.half_width,
            });
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::InvalidConfig(format!("ridge must be >= 0, got {}", self.ridge)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridHistogram {
    lo: f64,
    step: f64,
    centers: Vec<f64>,
    freqs: Vec<f64>,
    n_samples: usize,
    clipped: usize,
}

impl GridHistogram {
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Samples that fell outside `(lo, hi]`.
    pub fn clipped(&self) -> usize {
        self.clipped
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.lo + self.step * self.centers.len() as f64)
    }

    /// Gaussian bin masses `Δφ(y_l)`, the WLS weights.
    pub fn gaussian_weights(&self) -> Vec<f64> {
        self.centers.iter().map(|&c| self.step * std_normal_pdf(c)).collect()
    }

    /// Builds a histogram from explicit frequencies on the grid `(lo, hi]`
    /// split into `freqs.len()` bins.
    pub fn from_freqs(freqs: Vec<f64>, range: (f64, f64), n_samples: usize) -> Result<Self> {
        let (lo, hi) = range;
        let bins = freqs.len();
        check_grid(bins, lo, hi)?;
        if freqs.iter().any(|q| !(q.is_finite() && *q >= 0.0)) {
            return Err(Error::InvalidData("frequencies must be finite and non-negative".into()));
        }
        let step = (hi - lo) / bins as f64;
        Ok(Self {
            lo,
            step,
            centers: grid_centers(lo, step, bins),
            freqs,
            n_samples,
            clipped: 0,
        })
    }
}

fn check_grid(bins: usize, lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidRange { lo, hi });
    }
    if bins < 2 {
        return Err(Error::InvalidConfig(format!("grid needs at least 2 bins, got {bins}")));
    }
    Ok(())
}

fn grid_centers(lo: f64, step: f64, bins: usize) -> Vec<f64> {
    (0..bins).map(|l| lo + (l as f64 + 0.5) * step).collect()
}

/// Bins `samples` into `bins` half-open intervals `(c - Δ/2, c + Δ/2]` covering `(lo, hi]`.
pub fn build_histogram(samples: &[f64], bins: usize, range: (f64, f64)) -> Result<GridHistogram> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (lo, hi) = range;
    check_grid(bins, lo, hi)?;
    let step = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    let mut clipped = 0usize;
    for &y in samples {
        if !(y > lo && y <= hi) {
            clipped += 1;
            continue;
        }
        let k = ((y - lo) / step).ceil() as usize;
        counts[k.clamp(1, bins) - 1] += 1;
    }
    let n = samples.len() as f64;
    Ok(GridHistogram {
        lo,
        step,
        centers: grid_centers(lo, step, bins),
        freqs: counts.into_iter().map(|c| c as f64 / n).collect(),
        n_samples: samples.len(),
        clipped,
    })
}

/// Tilt coefficients over a basis: `f(y) = βᵀḠ(y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltModel {
    pub beta: Vec<f64>,
    pub basis: BasisSet,
}

impl TiltModel {
    pub fn new(beta: Vec<f64>, basis: BasisSet) -> Result<Self> {
        if beta.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                found: beta.len(),
            });
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidData("tilt coefficients must be finite".into()));
        }
        Ok(Self { beta, basis })
    }

    pub fn zero(basis: BasisSet) -> Self {
        Self {
            beta: vec![0.0; basis.len()],
            basis,
        }
    }

    #[inline]
    pub fn eval(&self, y: f64) -> TiltValue {
        tilt_at(&self.beta, &self.basis, y)
    }

    pub fn beta_norm(&self) -> f64 {
        self.beta.iter().map(|b| b * b).sum::<f64>().sqrt()
    }

    pub fn diagnostics(&self, h: &GridHistogram) -> TiltDiagnostics {
        let mut kl = 0.0;
        let mut partition = 0.0;
        let mut clamped_bins = 0;
        for (&c, &q) in h.centers.iter().zip(&h.freqs) {
            let f = self.eval(c).f;
            let fc = f.clamp(-EXP_CLAMP, EXP_CLAMP);
            if fc != f {
                clamped_bins += 1;
            }
            let mass = h.step * std_normal_pdf(c) * fc.exp();
            kl += q * f - mass;
            partition += mass;
        }
        TiltDiagnostics {
            kl_min: kl + 1.0,
            partition,
            clamped_bins,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltDiagnostics {
    pub kl_min: f64,
    pub partition: f64,
    /// Bins whose tilt value was outside `±EXP_CLAMP`.
    pub clamped_bins: usize,
}

/// Weighted least squares tilt fit with the default ridge.
pub fn fit_tilt_wls(h: &GridHistogram, basis: &BasisSet) -> Result<TiltModel> {
    fit_tilt_wls_ridge(h, basis, DEFAULT_RIDGE)
}

/// Solves `(DᵀΩD + ridge·I) β = DᵀΩr` with `D` the basis values at the
/// grid centers, `Ω = diag(Δφ(y_l))` and `r_l = (q_l - Δφ(y_l)) / Δφ(y_l)`.
pub fn fit_tilt_wls_ridge(h: &GridHistogram, basis: &BasisSet, ridge: f64) -> Result<TiltModel> {
    let p = basis.len();
    let mut normal = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    let mut row = vec![0.0; p];
    let mut active = 0usize;
    for (&c, &q) in h.centers.iter().zip(&h.freqs) {
        let w = h.step * std_normal_pdf(c);
        if w <= 0.0 {
            continue;
        }
        active += 1;
        for (slot, g) in row.iter_mut().zip(basis.functions()) {
            *slot = g.eval(c).0;
        }
        // Ω r = q - w, which stays finite where w underflows towards zero
        let wr = q - w;
        for a in 0..p {
            rhs[a] += row[a] * wr;
            for b in 0..=a {
                normal[(a, b)] += w * row[a] * row[b];
            }
        }
    }
    if active < p {
        return Err(Error::SingularDesign {
            condition: f64::INFINITY,
        });
    }
    for a in 0..p {
        normal[(a, a)] += ridge;
        for b in 0..a {
            normal[(b, a)] = normal[(a, b)];
        }
    }
    let eig = normal.clone().symmetric_eigenvalues();
    let (min, max) = eig
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularDesign { condition });
    }
    let chol = normal.cholesky().ok_or(Error::SingularDesign { condition })?;
    let beta = chol.solve(&rhs);
    TiltModel::new(beta.iter().copied().collect(), basis.clone())
}

/// `Σ_l { q_l f(y_l) - Δφ(y_l) e^{f(y_l)} } + 1`.
pub fn kl_min(model: &TiltModel, h: &GridHistogram) -> f64 {
    model.diagnostics(h).kl_min
}

/// `Σ_l Δφ(y_l) e^{f(y_l)}`, close to one at the optimum.
pub fn partition_integral(model: &TiltModel, h: &GridHistogram) -> f64 {
    model.diagnostics(h).partition
}

/// Fit and score one already projected component.
pub(crate) fn fit_component(samples: &[f64], grid: &GridConfig, basis: &BasisSet) -> Result<(TiltModel, f64)> {
    let h = build_histogram(samples, grid.bins, grid.range())?;
    let model = fit_tilt_wls_ridge(&h, basis, grid.ridge)?;
    let kl = kl_min(&model, &h);
    Ok((model, kl))
}
