//! Bayes/IBR partition search.
//!
//! The IBR clusterer of an uncertainty class is the Bayes clusterer of its
//! effective RLPP, so everything here takes a [`LabelLikelihood`] and does not
//! care whether it came from a single model or an effective mixture.

mod pseed;

pub use pseed::{pseed_fast, pseed_fast_traced, PseedConfig, PseedTrace};

use std::time::{Duration, Instant};

use crate::gaussian::{partition_probs, LabelLikelihood, LabelPrior, PartitionPmf, PointSet};
use crate::partition::{enumerate_partitions, natural_cost, Partition};
use crate::{Error, Method, Result};

/// Largest point count the exhaustive two-label search accepts.
pub const EXACT_MAX_N_TWO_LABELS: usize = 12;

/// Largest candidate x reference cost-matrix size the exhaustive search builds.
const EXACT_MAX_CELLS: usize = 4_000_000;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub candidates: usize,
    pub restarts: usize,
    pub runtime: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub partition: Partition,
    /// Partition error for the exact search, negative log posterior mass for
    /// MAP-type searches, the method's own objective for baselines.
    pub score: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

/// Expected natural cost of `p` against partitions drawn from `pmf`.
pub fn partition_error(p: &Partition, pmf: &PartitionPmf, l: usize) -> Result<f64> {
    let total = pmf.total();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Unnormalized(total));
    }
    pmf.entries()
        .iter()
        .try_fold(0.0, |acc, (q, w)| Ok(acc + natural_cost(p, q, l)? * w))
}

/// Candidate partitions implied by a prior: the size-valid ones for a
/// size-constrained prior, every partition with at most `l` blocks otherwise.
pub fn candidate_partitions(n: usize, l: usize, prior: &LabelPrior) -> Result<Vec<Partition>> {
    enumerate_partitions(n, l, prior.sizes())
}

fn guard_exact(n: usize, l: usize) -> Result<()> {
    if l <= 2 && n > EXACT_MAX_N_TWO_LABELS {
        return Err(Error::TooLarge(format!(
            "exact search is limited to n <= {EXACT_MAX_N_TWO_LABELS} for two labels (got {n}); use pseed_fast"
        )));
    }
    Ok(())
}

/// Posterior pmf together with the errors of every candidate partition.
pub fn partition_errors(
    points: &PointSet,
    prior: &LabelPrior,
    model: &dyn LabelLikelihood,
) -> Result<(Vec<Partition>, Vec<f64>, PartitionPmf)> {
    let n = points.len();
    let l = model.num_labels();
    guard_exact(n, l)?;
    let cands = candidate_partitions(n, l, prior)?;
    let pmf = partition_probs(points, prior, model)?;
    if cands.len().saturating_mul(pmf.len()) > EXACT_MAX_CELLS {
        return Err(Error::TooLarge(format!(
            "{} candidates x {} references exceeds the exact-search budget; use pseed_fast",
            cands.len(),
            pmf.len()
        )));
    }
    let errors = cands
        .iter()
        .map(|p| partition_error(p, &pmf, l))
        .collect::<Result<Vec<_>>>()?;
    Ok((cands, errors, pmf))
}

/// Bayes partition: the candidate of minimal partition error, ties going to
/// the earliest candidate in canonical order.
pub fn bayes_partition(
    points: &PointSet,
    prior: &LabelPrior,
    model: &dyn LabelLikelihood,
) -> Result<ClusterResult> {
    let start = Instant::now();
    let (cands, errors, _) = partition_errors(points, prior, model)?;
    let best = argmin(&errors).ok_or(Error::EmptySupport)?;
    Ok(ClusterResult {
        partition: cands[best].clone(),
        score: errors[best],
        method: Method::IbrExact,
        diagnostics: Diagnostics {
            candidates: cands.len(),
            restarts: 1,
            runtime: start.elapsed(),
        },
    })
}

/// Maximum-probability partition, ties going to the earliest in canonical order.
pub fn map_partition(
    points: &PointSet,
    prior: &LabelPrior,
    model: &dyn LabelLikelihood,
) -> Result<ClusterResult> {
    let start = Instant::now();
    let pmf = partition_probs(points, prior, model)?;
    let probs = pmf.probs();
    let neg: Vec<f64> = probs.iter().map(|p| -p).collect();
    let best = argmin(&neg).ok_or(Error::EmptySupport)?;
    Ok(ClusterResult {
        partition: pmf.entries()[best].0.clone(),
        score: -probs[best].ln(),
        method: Method::IbrExact,
        diagnostics: Diagnostics {
            candidates: pmf.len(),
            restarts: 1,
            runtime: start.elapsed(),
        },
    })
}

/// First index of the minimum.
pub(crate) fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some(b) if !(v < values[b]) => {}
            _ => best = Some(i),
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{NiwLabel, NiwModel};
    use crate::partition::LabelFunction;

    fn separated() -> (PointSet, NiwModel) {
        let pts = PointSet::new(vec![vec![-10.1], vec![-9.9], vec![9.9], vec![10.1]]).unwrap();
        (
            pts,
            NiwModel::symmetric(2, NiwLabel::isotropic(1, 1.0, 3.0, 1.0)).unwrap(),
        )
    }

    #[test]
    fn point_mass_has_zero_error() {
        let p = Partition::from_labels(&[0, 0, 1, 1]);
        let pmf = PartitionPmf::new([(p.clone(), 1.0)]);
        assert_eq!(partition_error(&p, &pmf, 2).unwrap(), 0.0);
    }

    #[test]
    fn uniform_over_balanced_partitions_of_four() {
        let all = enumerate_partitions(4, 2, Some(&[2, 2])).unwrap();
        assert_eq!(all.len(), 3);
        let pmf = PartitionPmf::new(all.iter().map(|p| (p.clone(), 1.0 / 3.0)));
        let e = partition_error(&all[0], &pmf, 2).unwrap();
        assert!((e - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn unnormalized_pmf_is_rejected() {
        let p = Partition::from_labels(&[0, 1]);
        let pmf = PartitionPmf::new([(p.clone(), 0.5)]);
        assert!(matches!(
            partition_error(&p, &pmf, 2),
            Err(Error::Unnormalized(_))
        ));
    }

    #[test]
    fn separated_example() {
        let (pts, model) = separated();
        let prior = LabelPrior::FixedSizes(vec![2, 2]);
        let truth = Partition::from_labels(&[0, 0, 1, 1]);
        let b = bayes_partition(&pts, &prior, &model).unwrap();
        assert_eq!(b.partition, truth);
        assert_eq!(b.diagnostics.candidates, 3);
        assert_eq!(
            map_partition(&pts, &prior, &model).unwrap().partition,
            truth
        );
    }

    #[test]
    fn single_candidate() {
        let pts = PointSet::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let model = NiwModel::symmetric(2, NiwLabel::isotropic(1, 1.0, 3.0, 1.0)).unwrap();
        let r = map_partition(&pts, &LabelPrior::FixedSizes(vec![1, 1]), &model).unwrap();
        assert_eq!(r.partition, Partition::from_labels(&[0, 1]));
        assert_eq!(r.diagnostics.candidates, 1);
    }

    #[test]
    fn uniform_posterior_ties_go_to_first_candidate() {
        // An explicit prior over two label functions with identical likelihood.
        let pts = PointSet::new(vec![vec![0.0], vec![0.0], vec![0.0]]).unwrap();
        let model = NiwModel::symmetric(2, NiwLabel::isotropic(1, 1.0, 3.0, 1.0)).unwrap();
        let a = LabelFunction::new(vec![0, 1, 1], 2).unwrap();
        let b = LabelFunction::new(vec![0, 0, 1], 2).unwrap();
        let prior = LabelPrior::Explicit(vec![(a, 0.5), (b, 0.5)]);
        let r = map_partition(&pts, &prior, &model).unwrap();
        assert_eq!(r.partition, Partition::from_labels(&[0, 0, 1]));
    }

    #[test]
    fn guard_points_to_pseed() {
        let pts = PointSet::new((0..14).map(|i| vec![i as f64]).collect()).unwrap();
        let model = NiwModel::symmetric(2, NiwLabel::isotropic(1, 1.0, 3.0, 1.0)).unwrap();
        let err = bayes_partition(&pts, &LabelPrior::FixedSizes(vec![7, 7]), &model).unwrap_err();
        assert!(err.to_string().contains("pseed_fast"));
    }

    #[test]
    fn argmin_prefers_first() {
        assert_eq!(argmin(&[2.0, 1.0, 1.0]), Some(1));
        assert_eq!(argmin(&[]), None);
    }
}
