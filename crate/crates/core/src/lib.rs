//! Blind source separation with a second-order minimum discrimination
//! information contrast.
//!
//! - [`prep`]: centering, whitening, symmetric decorrelation.
//! - [`basis`]: nonlinearities `Ḡ₁, Ḡ₂, G0, G1` with derivatives.
//! - [`density`]: grid histograms and the weighted least squares tilt fit.
//! - [`solver`]: the alternating MDIICA driver and a symmetric FastICA baseline.
//! - [`study`]: synthetic sources, the Amari metric, and the replication harness.
//!
//! ```no_run
//! use mdiica::{fit_whitening, mdiica, recover_sources, DataMatrix, SolverConfig};
//! # fn main() -> mdiica::Result<()> {
//! let raw = DataMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.5], vec![2.0, -1.0]])?;
//! let t = fit_whitening(&raw)?;
//! let result = mdiica(&t.apply(&raw)?, &SolverConfig::default())?;
//! let sources = recover_sources(&result.w, &t, &raw)?;
//! # Ok(())
//! # }
//! ```

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod density;
mod error;
pub mod prep;
pub mod solver;
pub mod study;
pub mod sum;

pub use basis::{eval_basis, eval_tilt, BasisFunction, BasisSet, TiltValue};
pub use density::{
    build_histogram, fit_tilt_wls, fit_tilt_wls_ridge, kl_min, partition_integral, GridConfig,
    GridHistogram, TiltModel,
};
pub use error::{Error, Result};
pub use prep::{
    apply_whitening, fit_whitening, random_orthonormal, symmetric_decorrelation, DataMatrix,
    UnmixingMatrix, WhiteningTransform,
};
pub use solver::{fastica_single, mdiica, recover_sources, SolverConfig, SolverResult};
pub use study::{amari_metric, generate_sources, random_mixing, run_study, Method, SourceSpec};
