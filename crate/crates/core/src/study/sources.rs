//! Standardized synthetic source distributions.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prep::DataMatrix;

/// A univariate source law. Every sample is shifted and scaled by the
/// analytic mean and standard deviation, so streams are zero-mean with unit
/// variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Gaussian,
    Uniform,
    /// Double exponential.
    Laplace,
    Exponential,
    StudentT { dof: f64 },
    GaussianMixture {
        weights: Vec<f64>,
        means: Vec<f64>,
        sds: Vec<f64>,
    },
}

impl SourceSpec {
    /// Built-in distributions addressable by id.
    pub fn preset(id: &str) -> Result<Self> {
        let mix = |weights: &[f64], means: &[f64], sds: &[f64]| SourceSpec::GaussianMixture {
            weights: weights.to_vec(),
            means: means.to_vec(),
            sds: sds.to_vec(),
        };
        Ok(match id {
            "gaussian" => SourceSpec::Gaussian,
            "uniform" => SourceSpec::Uniform,
            "laplace" => SourceSpec::Laplace,
            "exponential" => SourceSpec::Exponential,
            "t3" => SourceSpec::StudentT { dof: 3.0 },
            "t5" => SourceSpec::StudentT { dof: 5.0 },
            "mix2-sym" => mix(&[0.5, 0.5], &[-1.0, 1.0], &[0.5, 0.5]),
            "mix2-asym" => mix(&[0.25, 0.75], &[-1.0, 1.0], &[0.5, 0.5]),
            "mix4-sym" => mix(
                &[0.25, 0.25, 0.25, 0.25],
                &[-3.0, -1.0, 1.0, 3.0],
                &[0.5, 0.5, 0.5, 0.5],
            ),
            "mix4-asym" => mix(
                &[0.1, 0.4, 0.3, 0.2],
                &[-3.0, -1.0, 1.0, 3.0],
                &[0.5, 0.5, 0.5, 0.5],
            ),
            other => return Err(Error::UnknownDistribution(other.to_string())),
        })
    }

    pub const PRESETS: [&'static str; 10] = [
        "gaussian",
        "uniform",
        "laplace",
        "exponential",
        "t3",
        "t5",
        "mix2-sym",
        "mix2-asym",
        "mix4-sym",
        "mix4-asym",
    ];

    pub fn validate(&self) -> Result<()> {
        match self {
            SourceSpec::StudentT { dof } if !(*dof > 2.0 && dof.is_finite()) => Err(Error::InvalidConfig(
                format!("student_t needs dof > 2 for finite variance, got {dof}"),
            )),
            SourceSpec::GaussianMixture { weights, means, sds } => {
                if weights.is_empty() || weights.len() != means.len() || weights.len() != sds.len() {
                    return Err(Error::InvalidConfig(
                        "gaussian_mixture needs equally long, non-empty weights, means, sds".into(),
                    ));
                }
                if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                    return Err(Error::InvalidConfig("mixture weights must be positive".into()));
                }
                if sds.iter().any(|s| !(*s > 0.0 && s.is_finite())) || means.iter().any(|m| !m.is_finite()) {
                    return Err(Error::InvalidConfig("mixture sds must be positive and means finite".into()));
                }
                let (_, sd) = self.moments();
                if !(sd > 0.0) {
                    return Err(Error::InvalidConfig("mixture has zero variance".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Analytic `(mean, standard deviation)` of the raw law.
    pub fn moments(&self) -> (f64, f64) {
        match self {
            SourceSpec::Gaussian => (0.0, 1.0),
            SourceSpec::Uniform => (0.5, (1.0f64 / 12.0).sqrt()),
            SourceSpec::Laplace => (0.0, 2f64.sqrt()),
            SourceSpec::Exponential => (1.0, 1.0),
            SourceSpec::StudentT { dof } => (0.0, (dof / (dof - 2.0)).sqrt()),
            SourceSpec::GaussianMixture { weights, means, sds } => {
                let total: f64 = weights.iter().sum();
                let mean = weights.iter().zip(means).map(|(w, m)| w * m).sum::<f64>() / total;
                let second = weights
                    .iter()
                    .zip(means.iter().zip(sds))
                    .map(|(w, (m, s))| w * (s * s + m * m))
                    .sum::<f64>()
                    / total;
                (mean, (second - mean * mean).max(0.0).sqrt())
            }
        }
    }

    /// Whether the standardized law is exactly Gaussian (non-identifiable in pairs).
    pub fn is_gaussian(&self) -> bool {
        match self {
            SourceSpec::Gaussian => true,
            SourceSpec::GaussianMixture { means, sds, .. } => {
                means.windows(2).all(|p| p[0] == p[1]) && sds.windows(2).all(|p| p[0] == p[1])
            }
            _ => false,
        }
    }

    fn sample_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            SourceSpec::Gaussian => rng.sample(StandardNormal),
            SourceSpec::Uniform => rng.random::<f64>(),
            SourceSpec::Laplace => {
                let e: f64 = rng.sample(Exp1);
                if rng.random::<bool>() {
                    e
                } else {
                    -e
                }
            }
            SourceSpec::Exponential => rng.sample(Exp1),
            SourceSpec::StudentT { dof } => StudentT::new(*dof).expect("validated dof").sample(rng),
            SourceSpec::GaussianMixture { weights, means, sds } => {
                let total: f64 = weights.iter().sum();
                let mut u = rng.random::<f64>() * total;
                let mut k = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    if u < *w {
                        k = i;
                        break;
                    }
                    u -= w;
                }
                let z: f64 = rng.sample(StandardNormal);
                means[k] + sds[k] * z
            }
        }
    }

    /// One standardized draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (mean, sd) = self.moments();
        (self.sample_raw(rng) - mean) / sd
    }
}

/// `n x specs.len()` matrix; column `i` is i.i.d. from `specs[i]`.
///
/// Draws are taken row by row so that a given rng stream always produces the
/// same matrix.
pub fn generate_sources<R: Rng + ?Sized>(specs: &[SourceSpec], n: usize, rng: &mut R) -> Result<DataMatrix> {
    if n == 0 || specs.is_empty() {
        return Err(Error::EmptyInput);
    }
    for s in specs {
        s.validate()?;
    }
    let mut values = DMatrix::zeros(n, specs.len());
    for j in 0..n {
        for (i, spec) in specs.iter().enumerate() {
            values[(j, i)] = spec.sample(rng);
        }
    }
    DataMatrix::new(values)
}
