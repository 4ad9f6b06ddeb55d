//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::{Error, Result};

pub fn cholesky(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone()).ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))
}

/// `log |m|` of a symmetric positive-definite matrix.
pub fn spd_log_det(m: &DMatrix<f64>, what: &str) -> Result<f64> {
    let c = cholesky(m, what)?;
    Ok(chol_log_det(&c))
}

pub fn chol_log_det(c: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Multivariate normal log-density with a cached factorisation.
#[derive(Debug, Clone)]
pub struct Mvn {
    mean: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    log_norm: f64,
}

impl Mvn {
    pub fn new(mean: DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::LengthMismatch {
                left: mean.len(),
                right: cov.nrows(),
            });
        }
        let chol = cholesky(cov, "normal covariance")?;
        let d = mean.len() as f64;
        let log_norm = -0.5 * (d * (2.0 * std::f64::consts::PI).ln() + chol_log_det(&chol));
        Ok(Self {
            mean,
            chol,
            log_norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let diff =
            DVector::from_iterator(x.len(), x.iter().zip(self.mean.iter()).map(|(a, b)| a - b));
        let z = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&diff)
            .expect("cholesky factor has a positive diagonal");
        self.log_norm - 0.5 * z.norm_squared()
    }
}
