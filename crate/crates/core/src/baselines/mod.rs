//! Classical clusterers used as comparison points.
//!
//! None of them use the known cluster sizes except [`Method::Random`].

mod em;
mod fcm;
mod hierarchical;
mod kmeans;

pub use em::{em_gmm, EmFit};
pub use fcm::{fuzzy_cmeans, FcmFit};
pub use hierarchical::{agglomerate, Linkage};
pub use kmeans::{kmeans, KMeansFit};

use std::time::Instant;

use rand::seq::SliceRandom;

use crate::bayes::{ClusterResult, Diagnostics};
use crate::gaussian::PointSet;
use crate::partition::Partition;
use crate::rng::seeded;
use crate::{Error, Method, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub method: Method,
    pub k: usize,
    pub max_iter: usize,
    pub tolerance: f64,
    pub restarts: usize,
    pub fuzzifier: f64,
    /// EM covariance ridge as a fraction of the average data variance.
    pub regularization: f64,
    pub seed: u64,
    /// Block sizes for [`Method::Random`]; equal sizes when absent.
    pub sizes: Option<Vec<usize>>,
}

impl BaselineConfig {
    pub fn new(method: Method, k: usize, seed: u64) -> Self {
        BaselineConfig {
            method,
            k,
            max_iter: 300,
            tolerance: 1e-6,
            restarts: 10,
            fuzzifier: 2.0,
            regularization: 1e-6,
            seed,
            sizes: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        if !(self.fuzzifier > 1.0) {
            return Err(Error::invalid("fuzzifier must exceed 1"));
        }
        if self.restarts == 0 || self.max_iter == 0 {
            return Err(Error::invalid("restarts and max_iter must be positive"));
        }
        if !(self.regularization >= 0.0) {
            return Err(Error::invalid("regularization must be non-negative"));
        }
        if self.method.is_ibr() {
            return Err(Error::invalid(format!("{} is not a baseline", self.method)));
        }
        Ok(())
    }
}

pub fn run_baseline(points: &PointSet, cfg: &BaselineConfig) -> Result<ClusterResult> {
    cfg.validate()?;
    let n = points.len();
    if n < cfg.k {
        return Err(Error::invalid(format!(
            "{} points cannot form {} clusters",
            n, cfg.k
        )));
    }
    let start = Instant::now();
    let (labels, score) = match cfg.method {
        Method::KMeans => {
            let f = kmeans(points, cfg)?;
            (f.labels, f.objective)
        }
        Method::Fcm => {
            let f = fuzzy_cmeans(points, cfg)?;
            (f.labels, f.objective)
        }
        Method::Em => {
            let f = em_gmm(points, cfg)?;
            (f.labels, -f.log_likelihood)
        }
        Method::HierSingle => agglomerate(points, cfg.k, Linkage::Single),
        Method::HierAverage => agglomerate(points, cfg.k, Linkage::Average),
        Method::HierComplete => agglomerate(points, cfg.k, Linkage::Complete),
        Method::Random => (random_labels(n, cfg)?, 0.0),
        Method::IbrExact | Method::IbrPseed => unreachable!("rejected by validate"),
    };
    Ok(ClusterResult {
        partition: Partition::from_labels(&labels),
        score,
        method: cfg.method,
        diagnostics: Diagnostics {
            candidates: 0,
            restarts: cfg.restarts,
            runtime: start.elapsed(),
        },
    })
}

/// Uniformly shuffled labels with the configured block sizes.
fn random_labels(n: usize, cfg: &BaselineConfig) -> Result<Vec<usize>> {
    let sizes = match &cfg.sizes {
        Some(s) => {
            if s.iter().sum::<usize>() != n {
                return Err(Error::LengthMismatch {
                    left: s.iter().sum(),
                    right: n,
                });
            }
            s.clone()
        }
        None => (0..cfg.k)
            .map(|y| n / cfg.k + usize::from(y < n % cfg.k))
            .collect(),
    };
    let mut labels: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(y, &s)| std::iter::repeat_n(y, s))
        .collect();
    labels.shuffle(&mut seeded(cfg.seed));
    Ok(labels)
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
