//! Small dense linear algebra on top of `nalgebra`.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Cholesky factor of a symmetric positive definite matrix with cached
/// log-determinant.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    log_det: f64,
}

impl SpdFactor {
    pub fn new(m: &Matrix, what: &'static str) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite(what));
        }
        let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite(what))?;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        if !log_det.is_finite() {
            return Err(Error::NotPositiveDefinite(what));
        }
        Ok(Self { chol, log_det })
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    /// xᵀ M⁻¹ x.
    pub fn inv_quad(&self, x: &Vector) -> f64 {
        let l = self.chol.l();
        let z = l
            .solve_lower_triangular(x)
            .expect("cholesky factor has a positive diagonal");
        z.norm_squared()
    }

    pub fn solve(&self, b: &Matrix) -> Matrix {
        self.chol.solve(b)
    }

    pub fn inverse(&self) -> Matrix {
        self.chol.inverse()
    }

    /// Lower-triangular factor L with M = L Lᵀ.
    pub fn lower(&self) -> Matrix {
        self.chol.l()
    }
}

/// Symmetric part (M + Mᵀ)/2.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Sample mean and unbiased covariance of the rows of `rows` (n × p).
pub fn mean_cov(rows: &[Vec<f64>], dim: usize) -> (Vector, Matrix) {
    let n = rows.len();
    let mut mean = Vector::zeros(dim);
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean /= n as f64;
    let mut cov = Matrix::zeros(dim, dim);
    for r in rows {
        for i in 0..dim {
            let di = r[i] - mean[i];
            for j in 0..=i {
                cov[(i, j)] += di * (r[j] - mean[j]);
            }
        }
    }
    let denom = (n.max(2) - 1) as f64;
    for i in 0..dim {
        for j in 0..=i {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    (mean, cov)
}

/// Ordinary least squares of `y` on `[1, x]`.
#[derive(Debug, Clone)]
pub struct OlsFit {
    /// Intercept.
    pub intercept: f64,
    /// Slopes, one per column of `x`.
    pub slopes: Vec<f64>,
    /// Standard errors of the slopes.
    pub slope_se: Vec<f64>,
    /// Coefficient of multiple determination.
    pub r2: f64,
    /// Residual variance with `n − p − 1` degrees of freedom.
    pub sigma2: f64,
}

/// Fits `y = a + x b + e` by least squares on centered columns.
///
/// Columns of `x` are centered and scaled before solving the normal
/// equations; a near-singular cross-product matrix is reported as
/// [`Error::SingularRegression`]. A response with no variation gets `r2 = 0`.
pub fn ols(x: &Matrix, y: &[f64]) -> Result<OlsFit> {
    let n = x.nrows();
    let p = x.ncols();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if n < p + 2 {
        return Err(Error::SingularRegression);
    }
    let nf = n as f64;
    let x_mean: Vec<f64> = (0..p).map(|j| x.column(j).sum() / nf).collect();
    let mut x_scale = Vec::with_capacity(p);
    for j in 0..p {
        let ss: f64 = x.column(j).iter().map(|v| (v - x_mean[j]).powi(2)).sum();
        let s = (ss / nf).sqrt();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::SingularRegression);
        }
        x_scale.push(s);
    }
    let z = Matrix::from_fn(n, p, |i, j| (x[(i, j)] - x_mean[j]) / x_scale[j]);
    let y_mean = y.iter().sum::<f64>() / nf;
    let yc = Vector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let ztz = z.transpose() * &z;
    // Scaled columns have unit variance, so the diagonal is n; reject when the
    // smallest eigenvalue is negligible relative to it.
    let eig = nalgebra::SymmetricEigen::new(ztz.clone());
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_eig > 1e-10 * nf) {
        return Err(Error::SingularRegression);
    }
    let fac = SpdFactor::new(&ztz, "regression cross-product")
        .map_err(|_| Error::SingularRegression)?;
    let zty = z.transpose() * &yc;
    let beta = fac.solve(&Matrix::from_column_slice(p, 1, zty.as_slice()));
    let fitted = &z * &beta;
    let sst = yc.norm_squared();
    let sse: f64 = yc
        .iter()
        .zip(fitted.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    let r2 = if sst > 0.0 {
        (1.0 - sse / sst).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let dof = (n - p - 1) as f64;
    let sigma2 = sse / dof;
    let ztz_inv = fac.inverse();
    let slopes: Vec<f64> = (0..p).map(|j| beta[(j, 0)] / x_scale[j]).collect();
    let slope_se = (0..p)
        .map(|j| (sigma2 * ztz_inv[(j, j)]).sqrt() / x_scale[j])
        .collect();
    let intercept = y_mean - slopes.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    Ok(OlsFit {
        intercept,
        slopes,
        slope_se,
        r2,
        sigma2,
    })
}
