//! Separable Gaussian RLPPs with normal-inverse-Wishart priors.
//!
//! A separable RLPP draws a label function from an independent label prior,
//! a parameter from its prior, and each point independently from the
//! label-conditional density. Everything here works in log space: the
//! per-label factors underflow quickly once `d` grows.

mod effective;
mod niw;
mod posterior;
mod prior;
mod sample;

pub use effective::{build_effective, EffectiveRlpp, StateModel, UncertainState, UncertaintyClass};
pub use niw::{log_label_weight, KnownCovLabel, KnownCovModel, NiwLabel, NiwModel};
pub use posterior::{
    partition_log_score, partition_probs, posterior_label_probs, LabelPosterior, PartitionPmf,
};
pub use prior::LabelPrior;
pub use sample::{sample_inverse_wishart, sample_mvn, sample_rlpp, LabeledSample, StateRecord};

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use statrs::function::gamma::ln_gamma;

use crate::partition::LabelFunction;
use crate::{Error, Result};

/// `n` points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.len())
            .ok_or_else(|| Error::invalid("point set is empty"))?;
        if dim == 0 {
            return Err(Error::invalid("points must have at least one coordinate"));
        }
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::invalid(format!(
                    "point {i} has dimension {}, expected {dim}",
                    r.len()
                )));
            }
            if let Some(v) = r.iter().find(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "point {i} has non-finite coordinate {v}"
                )));
            }
            coords.extend_from_slice(r);
        }
        Ok(Self { dim, coords })
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} coordinates do not form points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite coordinate"));
        }
        Ok(Self { dim, coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn subset(&self, indices: &[usize]) -> PointSet {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        PointSet {
            dim: self.dim,
            coords,
        }
    }

    pub fn scaled(&self, c: f64) -> PointSet {
        PointSet {
            dim: self.dim,
            coords: self.coords.iter().map(|v| v * c).collect(),
        }
    }
}

/// Sufficient statistics of one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    pub n: usize,
    /// Sample mean; the zero vector for an empty cluster.
    pub mean: DVector<f64>,
    /// `sum (x - mean)(x - mean)^T`, i.e. `(n - 1)` times the sample covariance.
    pub scatter: DMatrix<f64>,
}

impl ClusterStats {
    pub fn empty(dim: usize) -> Self {
        Self {
            n: 0,
            mean: DVector::zeros(dim),
            scatter: DMatrix::zeros(dim, dim),
        }
    }

    /// Unbiased sample covariance, defined for `n >= 2`.
    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        (self.n >= 2).then(|| &self.scatter / (self.n as f64 - 1.0))
    }
}

pub fn cluster_stats(points: &PointSet, indices: &[usize]) -> ClusterStats {
    let d = points.dim();
    let mut stats = ClusterStats::empty(d);
    if indices.is_empty() {
        return stats;
    }
    stats.n = indices.len();
    for &i in indices {
        for (m, v) in stats.mean.iter_mut().zip(points.point(i)) {
            *m += v;
        }
    }
    stats.mean /= indices.len() as f64;
    for &i in indices {
        let x = points.point(i);
        for r in 0..d {
            let dr = x[r] - stats.mean[r];
            for c in 0..=r {
                stats.scatter[(r, c)] += dr * (x[c] - stats.mean[c]);
            }
        }
    }
    for r in 0..d {
        for c in 0..r {
            stats.scatter[(c, r)] = stats.scatter[(r, c)];
        }
    }
    stats
}

/// Statistics of every label's cluster under `phi`.
pub fn label_stats(points: &PointSet, phi: &LabelFunction) -> Result<Vec<ClusterStats>> {
    if phi.len() != points.len() {
        return Err(Error::LengthMismatch {
            left: phi.len(),
            right: points.len(),
        });
    }
    let mut members = vec![Vec::new(); phi.num_labels()];
    for (i, &y) in phi.labels().iter().enumerate() {
        members[y].push(i);
    }
    Ok(members.iter().map(|m| cluster_stats(points, m)).collect())
}

/// `log Gamma_d(a)` via `pi^{d(d-1)/4} prod_j Gamma(a + (1 - j)/2)`.
pub fn log_multivariate_gamma(d: usize, a: f64) -> Result<f64> {
    if d == 0 || a <= (d as f64 - 1.0) / 2.0 || !a.is_finite() {
        return Err(Error::Domain(format!(
            "multivariate gamma needs a > (d-1)/2, got d={d}, a={a}"
        )));
    }
    let df = d as f64;
    let mut acc = df * (df - 1.0) / 4.0 * std::f64::consts::PI.ln();
    for j in 1..=d {
        acc += ln_gamma(a + (1.0 - j as f64) / 2.0);
    }
    Ok(acc)
}

/// A model able to score label functions on a fixed point set.
///
/// `bind` lets a model precompute anything that depends only on the points
/// (the granular posterior tabulates per-image densities there).
pub trait LabelLikelihood: Send + Sync {
    fn dim(&self) -> usize;
    fn num_labels(&self) -> usize;
    fn bind<'a>(&'a self, points: &'a PointSet) -> Result<Box<dyn BoundLikelihood + 'a>>;
}

/// Log-likelihood `log f(S | phi)` for one point set, up to an additive
/// constant that does not depend on `phi`.
pub trait BoundLikelihood {
    fn log_likelihood(&self, phi: &LabelFunction) -> Result<f64>;
}

/// A generative RLPP: draws points given cluster sizes.
pub trait RlppSampler: Send + Sync {
    fn dim(&self) -> usize;
    fn num_labels(&self) -> usize;
    fn sample(&self, sizes: &[usize], rng: &mut dyn RngCore) -> Result<LabeledSample>;
}
