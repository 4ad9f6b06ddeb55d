use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::RngCore;

use super::sample::{
    sample_inverse_wishart, sample_labels, sample_mvn, LabeledSample, StateRecord,
};
use super::{
    label_stats, log_multivariate_gamma, BoundLikelihood, ClusterStats, LabelLikelihood, PointSet,
    RlppSampler,
};
use crate::linalg::{chol_log_det, cholesky, spd_log_det};
use crate::partition::LabelFunction;
use crate::{Error, Result};

/// Normal-inverse-Wishart hyperparameters of one label:
/// `Sigma ~ IW(kappa, psi)`, `mu | Sigma ~ N(m, Sigma / nu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NiwLabel {
    pub m: DVector<f64>,
    pub nu: f64,
    pub kappa: f64,
    pub psi: DMatrix<f64>,
}

impl NiwLabel {
    pub fn isotropic(dim: usize, nu: f64, kappa: f64, psi_scale: f64) -> Self {
        Self {
            m: DVector::zeros(dim),
            nu,
            kappa,
            psi: DMatrix::identity(dim, dim) * psi_scale,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NiwModel {
    dim: usize,
    labels: Vec<NiwLabel>,
    psi_log_det: Vec<f64>,
}

fn check_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let scale = m.amax().max(1.0);
    for r in 0..m.nrows() {
        for c in 0..r {
            if (m[(r, c)] - m[(c, r)]).abs() > 1e-10 * scale {
                return Err(Error::NotPositiveDefinite(format!(
                    "{what} is not symmetric"
                )));
            }
        }
    }
    Ok(())
}

/// Posterior scale update: the scatter plus the shrunken mean deviation.
fn psi_star(stats: &ClusterStats, m: &DVector<f64>, nu: f64) -> DMatrix<f64> {
    let d = m.len();
    if stats.n == 0 {
        return DMatrix::zeros(d, d);
    }
    let n = stats.n as f64;
    let dev = &stats.mean - m;
    &stats.scatter + (&dev * dev.transpose()) * (nu * n / (nu + n))
}

impl NiwModel {
    pub fn new(labels: Vec<NiwLabel>) -> Result<Self> {
        let dim = labels
            .first()
            .map(|l| l.m.len())
            .ok_or_else(|| Error::invalid("model needs at least one label"))?;
        if dim == 0 {
            return Err(Error::invalid("model dimension must be positive"));
        }
        let mut psi_log_det = Vec::with_capacity(labels.len());
        for (y, l) in labels.iter().enumerate() {
            if l.m.len() != dim || l.psi.nrows() != dim || l.psi.ncols() != dim {
                return Err(Error::invalid(format!(
                    "label {y}: hyperparameters are not {dim}-dimensional"
                )));
            }
            if !(l.nu > 0.0) {
                return Err(Error::invalid(format!(
                    "label {y}: nu must be positive, got {}",
                    l.nu
                )));
            }
            if !(l.kappa > dim as f64 - 1.0) {
                return Err(Error::invalid(format!(
                    "label {y}: kappa must exceed d - 1, got {}",
                    l.kappa
                )));
            }
            check_symmetric(&l.psi, "psi")?;
            psi_log_det.push(spd_log_det(&l.psi, &format!("psi of label {y}"))?);
        }
        Ok(Self {
            dim,
            labels,
            psi_log_det,
        })
    }

    /// Same hyperparameters for every label.
    pub fn symmetric(num_labels: usize, label: NiwLabel) -> Result<Self> {
        Self::new(vec![label; num_labels])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, y: usize) -> &NiwLabel {
        &self.labels[y]
    }

    fn label_term(&self, y: usize, stats: &ClusterStats) -> Result<(f64, f64)> {
        let l = &self.labels[y];
        let n = stats.n as f64;
        let d = self.dim as f64;
        let log_det = if stats.n == 0 {
            self.psi_log_det[y]
        } else {
            spd_log_det(&(&l.psi + psi_star(stats, &l.m, l.nu)), "psi + psi*")?
        };
        let weight = log_multivariate_gamma(self.dim, (l.kappa + n) / 2.0)?
            - d / 2.0 * (n + l.nu).ln()
            - (l.kappa + n) / 2.0 * log_det;
        // Terms dropped by the proportional form; they depend on the label's
        // hyperparameters and on n only through pi^{-n d / 2}.
        let constant = -n * d / 2.0 * std::f64::consts::PI.ln()
            - log_multivariate_gamma(self.dim, l.kappa / 2.0)?
            + l.kappa / 2.0 * self.psi_log_det[y]
            + d / 2.0 * l.nu.ln();
        Ok((weight, constant))
    }

    /// Per-label product of `Gamma_d((kappa+n)/2) / ((n+nu)^{d/2} |psi+psi*|^{(kappa+n)/2})`, in log space.
    pub fn log_label_weight(&self, points: &PointSet, phi: &LabelFunction) -> Result<f64> {
        self.check(points, phi)?;
        let stats = label_stats(points, phi)?;
        stats
            .iter()
            .enumerate()
            .try_fold(0.0, |acc, (y, s)| Ok(acc + self.label_term(y, s)?.0))
    }

    /// Exact marginal density `log f(S | phi)` with every normalising constant.
    pub fn log_marginal_likelihood(&self, points: &PointSet, phi: &LabelFunction) -> Result<f64> {
        self.check(points, phi)?;
        let stats = label_stats(points, phi)?;
        stats.iter().enumerate().try_fold(0.0, |acc, (y, s)| {
            let (w, c) = self.label_term(y, s)?;
            Ok(acc + w + c)
        })
    }

    fn check(&self, points: &PointSet, phi: &LabelFunction) -> Result<()> {
        if points.dim() != self.dim {
            return Err(Error::LengthMismatch {
                left: points.dim(),
                right: self.dim,
            });
        }
        if phi.num_labels() != self.labels.len() {
            return Err(Error::invalid(format!(
                "label function has {} labels, model has {}",
                phi.num_labels(),
                self.labels.len()
            )));
        }
        Ok(())
    }
}

pub fn log_label_weight(points: &PointSet, phi: &LabelFunction, model: &NiwModel) -> Result<f64> {
    model.log_label_weight(points, phi)
}

struct BoundNiw<'a> {
    model: &'a NiwModel,
    points: &'a PointSet,
}

impl BoundLikelihood for BoundNiw<'_> {
    fn log_likelihood(&self, phi: &LabelFunction) -> Result<f64> {
        self.model.log_label_weight(self.points, phi)
    }
}

impl LabelLikelihood for NiwModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_labels(&self) -> usize {
        self.labels.len()
    }

    fn bind<'a>(&'a self, points: &'a PointSet) -> Result<Box<dyn BoundLikelihood + 'a>> {
        Ok(Box::new(BoundNiw {
            model: self,
            points,
        }))
    }
}

impl RlppSampler for NiwModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_labels(&self) -> usize {
        self.labels.len()
    }

    fn sample(&self, sizes: &[usize], rng: &mut dyn RngCore) -> Result<LabeledSample> {
        let mut means = Vec::with_capacity(self.labels.len());
        let mut covs = Vec::with_capacity(self.labels.len());
        for l in &self.labels {
            let sigma = sample_inverse_wishart(l.kappa, &l.psi, rng)?;
            let mu = sample_mvn(&l.m, &(&sigma / l.nu), rng)?;
            means.push(mu);
            covs.push(sigma);
        }
        let state = StateRecord {
            state: None,
            means,
            covariances: covs,
        };
        sample_labels(self.dim, self.labels.len(), sizes, state, rng)
    }
}

/// One label of a state with known covariance: `mu ~ N(m, sigma / nu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownCovLabel {
    pub m: DVector<f64>,
    pub nu: f64,
    pub sigma: DMatrix<f64>,
}

/// Gaussian clusters with fixed covariances and Gaussian-distributed means.
#[derive(Debug, Clone)]
pub struct KnownCovModel {
    dim: usize,
    labels: Vec<KnownCovLabel>,
    chol: Vec<Cholesky<f64, Dyn>>,
}

impl KnownCovModel {
    pub fn new(labels: Vec<KnownCovLabel>) -> Result<Self> {
        let dim = labels
            .first()
            .map(|l| l.m.len())
            .ok_or_else(|| Error::invalid("model needs at least one label"))?;
        let mut chol = Vec::new();
        for (y, l) in labels.iter().enumerate() {
            if l.m.len() != dim || l.sigma.nrows() != dim || l.sigma.ncols() != dim {
                return Err(Error::invalid(format!(
                    "label {y}: hyperparameters are not {dim}-dimensional"
                )));
            }
            if !(l.nu > 0.0) {
                return Err(Error::invalid(format!("label {y}: nu must be positive")));
            }
            check_symmetric(&l.sigma, "sigma")?;
            chol.push(cholesky(&l.sigma, &format!("sigma of label {y}"))?);
        }
        Ok(Self { dim, labels, chol })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn log_marginal_likelihood(&self, points: &PointSet, phi: &LabelFunction) -> Result<f64> {
        if points.dim() != self.dim {
            return Err(Error::LengthMismatch {
                left: points.dim(),
                right: self.dim,
            });
        }
        let stats = label_stats(points, phi)?;
        let d = self.dim as f64;
        let mut acc = 0.0;
        for (y, s) in stats.iter().enumerate() {
            if s.n == 0 {
                continue;
            }
            let l = &self.labels[y];
            let n = s.n as f64;
            let ps = psi_star(s, &l.m, l.nu);
            let trace = self.chol[y].solve(&ps).trace();
            acc += -n * d / 2.0 * (2.0 * std::f64::consts::PI).ln()
                - n / 2.0 * chol_log_det(&self.chol[y])
                + d / 2.0 * (l.nu / (l.nu + n)).ln()
                - 0.5 * trace;
        }
        Ok(acc)
    }
}

struct BoundKnownCov<'a> {
    model: &'a KnownCovModel,
    points: &'a PointSet,
}

impl BoundLikelihood for BoundKnownCov<'_> {
    fn log_likelihood(&self, phi: &LabelFunction) -> Result<f64> {
        self.model.log_marginal_likelihood(self.points, phi)
    }
}

impl LabelLikelihood for KnownCovModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_labels(&self) -> usize {
        self.labels.len()
    }

    fn bind<'a>(&'a self, points: &'a PointSet) -> Result<Box<dyn BoundLikelihood + 'a>> {
        Ok(Box::new(BoundKnownCov {
            model: self,
            points,
        }))
    }
}

impl RlppSampler for KnownCovModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_labels(&self) -> usize {
        self.labels.len()
    }

    fn sample(&self, sizes: &[usize], rng: &mut dyn RngCore) -> Result<LabeledSample> {
        let mut means = Vec::new();
        for l in &self.labels {
            means.push(sample_mvn(&l.m, &(&l.sigma / l.nu), rng)?);
        }
        let covs = self.labels.iter().map(|l| l.sigma.clone()).collect();
        let state = StateRecord {
            state: None,
            means,
            covariances: covs,
        };
        sample_labels(self.dim, self.labels.len(), sizes, state, rng)
    }
}
