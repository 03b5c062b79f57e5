use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use super::design::DesignMatrix;
use super::linalg::{dot, Cholesky, Matrix};
use crate::error::{Error, Result};

pub const INTERCEPT_NAME: &str = "(Intercept)";

/// OLS fitted once per imputation draw and combined by Rubin's rules.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PooledOlsFit {
    /// `(Intercept)` followed by the design columns.
    pub names: Vec<String>,
    pub rows: usize,
    /// Coefficient vector of every draw.
    pub draws: Vec<Vec<f64>>,
    /// Mean coefficient over draws.
    pub coefficients: Vec<f64>,
    /// Mean of the per-draw sampling variances, `W̄`.
    pub within_variance: Vec<f64>,
    /// Variance of the coefficients across draws, `B`.
    pub between_variance: Vec<f64>,
    /// `W̄ + (1 + 1/M) B`.
    pub total_variance: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub within_std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    /// Degrees of freedom for the t reference distribution.
    pub df: Vec<f64>,
    /// Residual degrees of freedom of a single fit, `N − p`.
    pub complete_df: f64,
}

impl PooledOlsFit {
    pub fn draws_count(&self) -> usize {
        self.draws.len()
    }
}

/// Mean anchored at the first value so that identical inputs return that
/// value exactly.
fn anchored_mean(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let mut it = xs.clone();
    let Some(x0) = it.next() else { return 0.0 };
    let n = xs.clone().count() as f64;
    x0 + xs.map(|x| x - x0).sum::<f64>() / n
}

/// Rubin's degrees of freedom, capped at the complete-data value.
fn rubin_df(m: usize, within: f64, between: f64, complete: f64) -> f64 {
    if between <= 0.0 || m < 2 {
        return complete;
    }
    let r = (1.0 + 1.0 / m as f64) * between / within;
    let nu = (m as f64 - 1.0) * (1.0 + 1.0 / r) * (1.0 + 1.0 / r);
    nu.min(complete)
}

/// Fits `y_m = α + W β + ε` for every draw `m` (column of `y_draws`) and pools.
pub fn ols_pooled(y_draws: &Matrix, design: &DesignMatrix) -> Result<PooledOlsFit> {
    let n = design.rows();
    let p = design.cols() + 1;
    let m = y_draws.cols();
    if m == 0 {
        return Err(Error::param(
            "at least one draw of the regressand is required",
        ));
    }
    if y_draws.rows() != n {
        return Err(Error::param(
            "regressand and design have different row counts",
        ));
    }
    if n <= p {
        return Err(Error::InsufficientData { rows: n, params: p });
    }
    let mut columns = vec![vec![1.0; n]];
    columns.extend((0..design.cols()).map(|j| design.matrix().col(j).to_vec()));
    let x = Matrix::from_columns(n, &columns)?;
    let mut names = vec![INTERCEPT_NAME.to_string()];
    names.extend(design.names().iter().cloned());

    let chol = Cholesky::new(&x.gram(1.0), p).map_err(|cols| Error::RankDeficient {
        columns: cols.into_iter().map(|j| names[j].clone()).collect(),
    })?;
    let inv = chol.inverse();
    let complete_df = (n - p) as f64;

    let mut draws = Vec::with_capacity(m);
    let mut sigma2 = Vec::with_capacity(m);
    for d in 0..m {
        let y = y_draws.col(d);
        let beta = chol.solve(&x.xty(y, 1.0));
        let fitted = x.mul_vec(&beta);
        let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
        sigma2.push(rss / complete_df);
        draws.push(beta);
    }

    let mut coefficients = vec![0.0; p];
    let mut within_variance = vec![0.0; p];
    let mut between_variance = vec![0.0; p];
    for j in 0..p {
        coefficients[j] = anchored_mean(draws.iter().map(|b| b[j]));
        within_variance[j] = anchored_mean(sigma2.iter().map(|s| s * inv[j * p + j]));
        if m > 1 {
            let dev: Vec<f64> = draws.iter().map(|b| b[j] - coefficients[j]).collect();
            between_variance[j] = dot(&dev, &dev) / (m - 1) as f64;
        }
    }
    let inflation = 1.0 + 1.0 / m as f64;
    let total_variance: Vec<f64> = within_variance
        .iter()
        .zip(&between_variance)
        .map(|(w, b)| w + inflation * b)
        .collect();
    let std_errors: Vec<f64> = total_variance.iter().map(|v| libm::sqrt(*v)).collect();
    let t_values = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, s)| b / s)
        .collect();
    let df = within_variance
        .iter()
        .zip(&between_variance)
        .map(|(w, b)| rubin_df(m, *w, *b, complete_df))
        .collect();
    Ok(PooledOlsFit {
        names,
        rows: n,
        within_std_errors: within_variance.iter().map(|v| libm::sqrt(*v)).collect(),
        draws,
        coefficients,
        within_variance,
        between_variance,
        total_variance,
        std_errors,
        t_values,
        df,
        complete_df,
    })
}

/// Single-regressand OLS.
pub fn ols(y: &[f64], design: &DesignMatrix) -> Result<PooledOlsFit> {
    ols_pooled(&Matrix::from_columns(y.len(), &[y.to_vec()])?, design)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> DesignMatrix {
        let x = Matrix::from_columns(5, &[vec![1.0, 2.0, 3.0, 4.0, 5.0]]).unwrap();
        DesignMatrix::new(x, vec!["x".into()]).unwrap()
    }

    #[test]
    fn textbook_line() {
        // Sxx = 10, Sxy = 6, RSS = 2.4, s² = 0.8.
        let fit = ols(&[2.0, 4.0, 5.0, 4.0, 5.0], &line()).unwrap();
        assert!((fit.coefficients[0] - 2.2).abs() < 1e-10);
        assert!((fit.coefficients[1] - 0.6).abs() < 1e-10);
        assert!((fit.std_errors[1] - libm::sqrt(0.08)).abs() < 1e-10);
        assert!((fit.std_errors[0] - libm::sqrt(0.88)).abs() < 1e-10);
        assert_eq!(fit.df, vec![3.0, 3.0]);
    }

    #[test]
    fn zero_draws_and_too_few_rows() {
        assert!(matches!(
            ols_pooled(&Matrix::zeros(5, 0), &line()),
            Err(Error::InvalidParameter(_))
        ));
        let x = Matrix::from_columns(2, &[vec![1.0, 2.0]]).unwrap();
        let d = DesignMatrix::new(x, vec!["x".into()]).unwrap();
        assert!(matches!(
            ols(&[1.0, 2.0], &d),
            Err(Error::InsufficientData { rows: 2, params: 2 })
        ));
    }

    #[test]
    fn collinear_columns_named() {
        let x = Matrix::from_columns(
            5,
            &[
                vec![1.0, 2.0, 3.0, 4.0, 5.0],
                vec![2.0, 4.0, 6.0, 8.0, 10.0],
            ],
        )
        .unwrap();
        let d = DesignMatrix::new(x, vec!["x".into(), "twice_x".into()]).unwrap();
        let err = ols(&[1.0, 3.0, 2.0, 5.0, 4.0], &d).unwrap_err();
        assert_eq!(
            err,
            Error::RankDeficient {
                columns: vec!["twice_x".into()]
            }
        );
    }

    #[test]
    fn rubin_df_limits() {
        assert_eq!(rubin_df(1, 1.0, 0.0, 10.0), 10.0);
        // r = 1.5 → ν = 1 · (5/3)².
        assert!((rubin_df(2, 1.0, 1.0, 100.0) - 25.0 / 9.0).abs() < 1e-12);
        assert_eq!(rubin_df(50, 1.0, 1e-6, 7.0), 7.0);
    }
}
