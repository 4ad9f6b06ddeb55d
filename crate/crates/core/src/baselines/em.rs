use nalgebra::{DMatrix, DVector};

use super::kmeans::{lloyd, plus_plus};
use super::BaselineConfig;
use crate::gaussian::{cluster_stats, PointSet};
use crate::linalg::{log_sum_exp, Mvn};
use crate::rng::substream;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct EmFit {
    pub labels: Vec<usize>,
    pub log_likelihood: f64,
    /// Log-likelihood after each E step of the winning restart.
    pub trace: Vec<f64>,
}

/// Full-covariance Gaussian mixture EM started from a k-means solution, best
/// of `cfg.restarts` by log-likelihood; hard labels by maximum responsibility.
pub fn em_gmm(points: &PointSet, cfg: &BaselineConfig) -> Result<EmFit> {
    let n = points.len();
    let d = points.dim();
    let all: Vec<usize> = (0..n).collect();
    let total = cluster_stats(points, &all);
    let mut ridge = cfg.regularization * total.scatter.trace() / n as f64 / d as f64;
    if !(ridge > 0.0) {
        ridge = cfg.regularization.max(f64::MIN_POSITIVE);
    }
    let mut best: Option<EmFit> = None;
    let mut last_err = None;
    for r in 0..cfg.restarts {
        let mut rng = substream(cfg.seed, &[r as u64]);
        let init = lloyd(points, plus_plus(points, cfg.k, &mut rng), cfg.max_iter);
        match run(points, &init.labels, cfg, ridge) {
            Ok(fit) => {
                if best
                    .as_ref()
                    .is_none_or(|b| fit.log_likelihood > b.log_likelihood)
                {
                    best = Some(fit);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::Domain("EM failed on every restart".into())))
}

struct Component {
    log_weight: f64,
    mvn: Mvn,
}

fn m_step(points: &PointSet, resp: &[Vec<f64>], k: usize, ridge: f64) -> Result<Vec<Component>> {
    let n = points.len();
    let d = points.dim();
    (0..k)
        .map(|c| {
            let w: f64 = resp.iter().map(|r| r[c]).sum();
            if !(w > 0.0) {
                return Err(Error::Domain(format!(
                    "mixture component {c} lost all mass"
                )));
            }
            let mut mean = DVector::zeros(d);
            for (i, x) in points.iter().enumerate() {
                mean += DVector::from_column_slice(x) * resp[i][c];
            }
            mean /= w;
            let mut cov = DMatrix::zeros(d, d);
            for (i, x) in points.iter().enumerate() {
                let dx = DVector::from_column_slice(x) - &mean;
                cov += &dx * dx.transpose() * resp[i][c];
            }
            cov /= w;
            for j in 0..d {
                cov[(j, j)] += ridge;
            }
            Ok(Component {
                log_weight: (w / n as f64).ln(),
                mvn: Mvn::new(mean, &cov)?,
            })
        })
        .collect()
}

fn run(points: &PointSet, init: &[usize], cfg: &BaselineConfig, ridge: f64) -> Result<EmFit> {
    let k = cfg.k;
    let mut resp: Vec<Vec<f64>> = init
        .iter()
        .map(|&y| (0..k).map(|c| if c == y { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut trace: Vec<f64> = Vec::new();
    for _ in 0..cfg.max_iter {
        let comps = m_step(points, &resp, k, ridge)?;
        let mut ll = 0.0;
        for (i, x) in points.iter().enumerate() {
            let terms: Vec<f64> = comps
                .iter()
                .map(|c| c.log_weight + c.mvn.log_density(x))
                .collect();
            let z = log_sum_exp(&terms);
            ll += z;
            resp[i] = terms.iter().map(|t| (t - z).exp()).collect();
        }
        let done = trace
            .last()
            .is_some_and(|&prev| (ll - prev).abs() <= cfg.tolerance * prev.abs().max(1.0));
        trace.push(ll);
        if done {
            break;
        }
    }
    let labels = resp
        .iter()
        .map(|r| {
            let mut best = 0;
            for (c, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    Ok(EmFit {
        labels,
        log_likelihood: *trace.last().expect("at least one iteration"),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{sample_rlpp, NiwLabel, NiwModel};
    use crate::partition::Partition;
    use crate::Method;

    #[test]
    fn log_likelihood_never_decreases() {
        let model = NiwModel::symmetric(2, NiwLabel::isotropic(2, 0.2, 4.0, 1.0)).unwrap();
        for seed in 0..10 {
            let s = sample_rlpp(&model, &[25, 25], seed).unwrap();
            let fit = em_gmm(&s.points, &BaselineConfig::new(Method::Em, 2, seed)).unwrap();
            for w in fit.trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-8 * w[0].abs().max(1.0), "{:?}", fit.trace);
            }
        }
    }

    #[test]
    fn single_component_is_one_block() {
        let pts = PointSet::new(vec![vec![0.0, 1.0], vec![2.0, 0.5], vec![1.0, 3.0]]).unwrap();
        let fit = em_gmm(&pts, &BaselineConfig::new(Method::Em, 1, 0)).unwrap();
        assert_eq!(Partition::from_labels(&fit.labels).num_blocks(), 1);
    }
}
