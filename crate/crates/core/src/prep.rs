//! Centering, whitening and orthonormalization.
//!
//! Observations are stored row-major in the statistical sense: one row per
//! sample, one column per channel. After whitening, the separation problem
//! reduces to finding an orthonormal unmixing matrix acting on each row.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::sum::exact_mean;

/// Relative eigenvalue threshold below which a symmetric matrix is treated as singular.
pub const EPS_RANK: f64 = 1e-10;

/// An `n_samples x m_channels` matrix of finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix(DMatrix<f64>);

impl DataMatrix {
    /// Wraps `values`, rejecting non-finite entries and fewer than two channels.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(Error::EmptyInput);
        }
        if values.ncols() < 2 {
            return Err(Error::InvalidData(format!(
                "at least 2 channels are required, got {}",
                values.ncols()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            let (row, col) = (idx % values.nrows(), idx / values.nrows());
            return Err(Error::InvalidData(format!(
                "non-finite entry at row {row}, column {col}"
            )));
        }
        Ok(Self(values))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let m = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }

    pub fn n_samples(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_channels(&self) -> usize {
        self.0.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Column means, computed with correctly rounded sums.
    pub fn column_means(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.n_channels(),
            self.0.column_iter().map(|c| exact_mean(c.iter().copied())),
        )
    }

    /// Sample covariance with divisor `n - 1`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.n_samples();
        let mean = self.column_means();
        let mut centered = self.0.clone();
        for (mut col, mu) in centered.column_iter_mut().zip(mean.iter()) {
            col.add_scalar_mut(-mu);
        }
        let denom = (n.max(2) - 1) as f64;
        (centered.transpose() * &centered) / denom
    }
}

/// Largest absolute entry of `a - I`.
pub fn identity_deviation(a: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a[(i, j)] - target).abs());
        }
    }
    worst
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// descending order and each eigenvector's largest-magnitude entry positive.
pub(crate) fn sorted_eigen(sym: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(sym.clone());
    let m = sym.nrows();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(m, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).clone_owned();
        let pivot = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if pivot < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(dst, &v);
    }
    (values, vectors)
}

/// Checks the relative rank threshold on sorted (descending) eigenvalues.
fn check_rank(values: &DVector<f64>) -> Result<f64> {
    let largest = values[0];
    let smallest = values[values.len() - 1];
    let threshold = EPS_RANK * largest.max(0.0);
    if !(largest > 0.0) || smallest <= threshold {
        return Err(Error::RankDeficient {
            smallest,
            threshold,
        });
    }
    Ok(threshold)
}

/// Inverse square root of a symmetric positive definite matrix.
pub(crate) fn inv_sqrt_spd(sym: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (values, vectors) = sorted_eigen(sym);
    let threshold = check_rank(&values)?;
    let scale = DMatrix::from_diagonal(&values.map(|v| 1.0 / v.max(threshold).sqrt()));
    Ok(&vectors * scale * vectors.transpose())
}

/// Centering vector plus a whitening matrix and its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningTransform {
    pub mean: DVector<f64>,
    pub whitener: DMatrix<f64>,
    pub dewhitener: DMatrix<f64>,
}

impl WhiteningTransform {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Maps each row `x` to `whitener * (x - mean)`.
    pub fn apply(&self, data: &DataMatrix) -> Result<DataMatrix> {
        if data.n_channels() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: data.n_channels(),
            });
        }
        let mut centered = data.values().clone();
        for (mut col, mu) in centered.column_iter_mut().zip(self.mean.iter()) {
            col.add_scalar_mut(-mu);
        }
        DataMatrix::new(centered * self.whitener.transpose())
    }
}

/// Fits `whitener = Λ^{-1/2} Uᵀ` from the eigendecomposition `U Λ Uᵀ` of the
/// sample covariance.
pub fn fit_whitening(data: &DataMatrix) -> Result<WhiteningTransform> {
    let (n, m) = (data.n_samples(), data.n_channels());
    if n <= m {
        return Err(Error::InsufficientSamples {
            n_samples: n,
            m_channels: m,
        });
    }
    let mean = data.column_means();
    let cov = data.covariance();
    let (values, vectors) = sorted_eigen(&cov);
    check_rank(&values)?;
    let inv_sqrt = DMatrix::from_diagonal(&values.map(|v| 1.0 / v.sqrt()));
    let sqrt = DMatrix::from_diagonal(&values.map(f64::sqrt));
    Ok(WhiteningTransform {
        mean,
        whitener: inv_sqrt * vectors.transpose(),
        dewhitener: vectors * sqrt,
    })
}

pub fn apply_whitening(t: &WhiteningTransform, data: &DataMatrix) -> Result<DataMatrix> {
    t.apply(data)
}

/// Orthonormal `m x m` matrix; rows are the unmixing directions `wᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnmixingMatrix(DMatrix<f64>);

impl UnmixingMatrix {
    /// Accepts `w` if `W Wᵀ` is within `1e-8` of the identity.
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        if !w.is_square() {
            return Err(Error::DimensionMismatch {
                expected: w.nrows(),
                found: w.ncols(),
            });
        }
        let dev = identity_deviation(&(&w * w.transpose()));
        if !(dev < 1e-8) {
            return Err(Error::InvalidData(format!(
                "unmixing matrix is not orthonormal (max |W Wᵀ - I| = {dev:.3e})"
            )));
        }
        Ok(Self(w))
    }

    pub fn identity(m: usize) -> Self {
        Self(DMatrix::identity(m, m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Right-multiplies by an orthonormal matrix, keeping the invariant.
    pub fn rotate(&self, q: &DMatrix<f64>) -> Result<Self> {
        Self::new(&self.0 * q)
    }
}

/// `W ← (W Wᵀ)^{-1/2} W`.
pub fn symmetric_decorrelation(w: &DMatrix<f64>) -> Result<UnmixingMatrix> {
    if !w.is_square() {
        return Err(Error::DimensionMismatch {
            expected: w.nrows(),
            found: w.ncols(),
        });
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite entries in matrix".into()));
    }
    let mut out = decorrelate_once(w)?;
    // the eigen route loses about cond(w)² · eps; one more pass on the
    // nearly orthonormal result restores full precision
    if identity_deviation(&(&out * out.transpose())) > 1e-12 {
        out = decorrelate_once(&out)?;
    }
    Ok(UnmixingMatrix(out))
}

fn decorrelate_once(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gram = w * w.transpose();
    let gram = (&gram + gram.transpose()) * 0.5;
    Ok(inv_sqrt_spd(&gram)? * w)
}

/// Symmetric decorrelation of an `m x m` matrix of independent standard normals.
pub fn random_orthonormal<R: Rng + ?Sized>(m: usize, rng: &mut R) -> UnmixingMatrix {
    assert!(m >= 2, "random_orthonormal requires m >= 2");
    loop {
        let g = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
        if let Ok(w) = symmetric_decorrelation(&g) {
            return w;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_abs(a: &DMatrix<f64>) -> f64 {
        a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            DataMatrix::new(DMatrix::zeros(5, 1)),
            Err(Error::InvalidData(_))
        ));
        assert!(matches!(
            DataMatrix::new(DMatrix::zeros(0, 3)),
            Err(Error::EmptyInput)
        ));
        let mut v = DMatrix::zeros(4, 2);
        v[(2, 1)] = f64::NAN;
        assert!(DataMatrix::new(v).is_err());
        assert!(matches!(
            DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn duplicated_channel_is_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let col: Vec<f64> = (0..200).map(|_| rng.sample(StandardNormal)).collect();
        let data = DataMatrix::new(DMatrix::from_fn(200, 2, |i, _| col[i])).unwrap();
        assert!(matches!(fit_whitening(&data), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn too_few_samples() {
        let data = DataMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 5.0])).unwrap();
        assert!(matches!(
            fit_whitening(&data),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn identity_covariance_data_gives_orthogonal_whitener() {
        // ±1 in a 2-level factorial design: exact zero mean and unit covariance
        // with divisor n - 1
        let rows: Vec<Vec<f64>> = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]
            .iter()
            .map(|r| r.iter().map(|v| v * (3.0f64 / 4.0).sqrt()).collect())
            .collect();
        let data = DataMatrix::from_rows(&rows).unwrap();
        assert!(identity_deviation(&data.covariance()) < 1e-14);
        let t = fit_whitening(&data).unwrap();
        let kkt = &t.whitener * t.whitener.transpose();
        assert!(identity_deviation(&kkt) < 1e-12);
        let out = t.apply(&data).unwrap();
        assert!(identity_deviation(&out.covariance()) < 1e-12);
    }

    #[test]
    fn apply_identity_and_mean_row() {
        let t = WhiteningTransform {
            mean: DVector::zeros(2),
            whitener: DMatrix::identity(2, 2),
            dewhitener: DMatrix::identity(2, 2),
        };
        let data = DataMatrix::from_rows(&[vec![1.5, -2.0], vec![0.25, 4.0]]).unwrap();
        assert_eq!(t.apply(&data).unwrap(), data);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fit_data = DataMatrix::new(DMatrix::from_fn(100, 3, |_, _| rng.sample(StandardNormal))).unwrap();
        let t = fit_whitening(&fit_data).unwrap();
        let row = DataMatrix::new(DMatrix::from_row_slice(1, 3, t.mean.as_slice())).unwrap();
        assert!(max_abs(t.apply(&row).unwrap().values()) < 1e-12);

        let wrong = DataMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(t.apply(&wrong), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn whitener_and_dewhitener_are_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let base = DMatrix::from_fn(500, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mix = DMatrix::from_fn(4, 4, |i, j| if i == j { 3.0 } else { 0.4 * (i + 2 * j) as f64 });
        let data = DataMatrix::new(&base * mix.transpose()).unwrap();
        let t = fit_whitening(&data).unwrap();
        assert!(identity_deviation(&(&t.whitener * &t.dewhitener)) < 1e-8);
        let out = t.apply(&data).unwrap();
        assert!(identity_deviation(&out.covariance()) < 1e-6);
        assert!(out.column_means().amax() < 1e-10);
    }

    #[test]
    fn scaled_identity_decorrelates_to_identity() {
        let w = symmetric_decorrelation(&(DMatrix::identity(3, 3) * 2.0)).unwrap();
        assert!(identity_deviation(w.matrix()) < 1e-14);
    }

    #[test]
    fn orthonormal_input_is_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = random_orthonormal(4, &mut rng);
        let again = symmetric_decorrelation(q.matrix()).unwrap();
        assert!(max_abs(&(again.matrix() - q.matrix())) < 1e-12);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            symmetric_decorrelation(&w),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn random_orthonormal_is_deterministic() {
        let a = random_orthonormal(3, &mut ChaCha8Rng::seed_from_u64(42));
        let b = random_orthonormal(3, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
        let c = random_orthonormal(2, &mut ChaCha8Rng::seed_from_u64(7));
        assert!((c.matrix().determinant().abs() - 1.0).abs() < 1e-10);
        assert!(identity_deviation(&(c.matrix() * c.matrix().transpose())) < 1e-10);
    }
}
