use std::collections::BTreeMap;

use super::{LabelLikelihood, LabelPrior, PointSet};
use crate::linalg::log_sum_exp;
use crate::partition::{LabelFunction, Partition};
use crate::{Error, Result};

/// Normalised posterior over the label functions of a prior's support.
#[derive(Debug, Clone)]
pub struct LabelPosterior {
    entries: Vec<(LabelFunction, f64)>,
}

impl LabelPosterior {
    pub fn entries(&self) -> &[(LabelFunction, f64)] {
        &self.entries
    }

    pub fn prob(&self, phi: &LabelFunction) -> f64 {
        self.entries
            .iter()
            .find(|(f, _)| f == phi)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }
}

/// Probability mass over partitions, kept in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionPmf {
    entries: Vec<(Partition, f64)>,
}

impl PartitionPmf {
    pub fn new(entries: impl IntoIterator<Item = (Partition, f64)>) -> Self {
        let mut map: BTreeMap<Partition, f64> = BTreeMap::new();
        for (p, w) in entries {
            *map.entry(p).or_insert(0.0) += w;
        }
        Self {
            entries: map.into_iter().collect(),
        }
    }

    pub fn entries(&self) -> &[(Partition, f64)] {
        &self.entries
    }

    pub fn partitions(&self) -> Vec<Partition> {
        self.entries.iter().map(|(p, _)| p.clone()).collect()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, w)| *w).collect()
    }

    pub fn get(&self, p: &Partition) -> f64 {
        self.entries
            .binary_search_by(|(q, _)| q.cmp(p))
            .map_or(0.0, |i| self.entries[i].1)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn check_model(points: &PointSet, model: &dyn LabelLikelihood) -> Result<()> {
    if points.dim() != model.dim() {
        return Err(Error::invalid(format!(
            "points have dimension {}, model has dimension {}",
            points.dim(),
            model.dim()
        )));
    }
    Ok(())
}

/// `P(Phi_S = phi | S)` for every label function in the prior's support.
pub fn posterior_label_probs(
    points: &PointSet,
    prior: &LabelPrior,
    model: &dyn LabelLikelihood,
) -> Result<LabelPosterior> {
    check_model(points, model)?;
    let support = prior.support(points.len(), model.num_labels())?;
    let bound = model.bind(points)?;
    let mut logs = Vec::with_capacity(support.len());
    for (phi, lp) in &support {
        logs.push(lp + bound.log_likelihood(phi)?);
    }
    let norm = log_sum_exp(&logs);
    if !norm.is_finite() {
        return Err(Error::Domain(format!("posterior normaliser is {norm}")));
    }
    let entries = support
        .into_iter()
        .zip(logs)
        .map(|((phi, _), w)| (phi, (w - norm).exp()))
        .collect();
    Ok(LabelPosterior { entries })
}

/// Posterior mass of each partition: the sum over its inducing label functions.
pub fn partition_probs(
    points: &PointSet,
    prior: &LabelPrior,
    model: &dyn LabelLikelihood,
) -> Result<PartitionPmf> {
    let post = posterior_label_probs(points, prior, model)?;
    Ok(PartitionPmf::new(
        post.entries
            .into_iter()
            .map(|(phi, p)| (phi.induced_partition(), p)),
    ))
}

/// All relabelings of `phi` (one per label permutation).
pub(crate) fn relabelings(phi: &LabelFunction) -> Vec<LabelFunction> {
    let l = phi.num_labels();
    let mut perms = Vec::new();
    let mut cur: Vec<usize> = (0..l).collect();
    fn heap(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, cur, out);
            if k.is_multiple_of(2) {
                cur.swap(i, k - 1);
            } else {
                cur.swap(0, k - 1);
            }
        }
    }
    heap(l, &mut cur, &mut perms);
    let mut out: Vec<LabelFunction> = perms.iter().map(|s| phi.relabel(s)).collect();
    out.sort();
    out.dedup();
    out
}

/// Unnormalised log posterior mass of the partition induced by `phi`:
/// log-sum-exp over its inducing label functions inside the prior's support.
pub fn partition_log_score(
    phi: &LabelFunction,
    prior: &LabelPrior,
    bound: &dyn super::BoundLikelihood,
) -> Result<f64> {
    let mut terms = Vec::new();
    for g in relabelings(phi) {
        if let Some(lp) = prior.log_prob(&g) {
            terms.push(lp + bound.log_likelihood(&g)?);
        }
    }
    Ok(log_sum_exp(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{NiwLabel, NiwModel};

    fn separated() -> (PointSet, NiwModel) {
        let pts = PointSet::new(vec![vec![-10.1], vec![-9.9], vec![9.9], vec![10.1]]).unwrap();
        (
            pts,
            NiwModel::symmetric(2, NiwLabel::isotropic(1, 1.0, 3.0, 1.0)).unwrap(),
        )
    }

    #[test]
    fn separated_example_prefers_true_grouping() {
        let (pts, model) = separated();
        let post =
            posterior_label_probs(&pts, &LabelPrior::FixedSizes(vec![2, 2]), &model).unwrap();
        assert_eq!(post.entries().len(), 6);
        assert!((post.total() - 1.0).abs() < 1e-12);
        let good_a = LabelFunction::new(vec![0, 0, 1, 1], 2).unwrap();
        let good_b = LabelFunction::new(vec![1, 1, 0, 0], 2).unwrap();
        let pa = post.prob(&good_a);
        assert!((pa - post.prob(&good_b)).abs() < 1e-12);
        for (f, p) in post.entries() {
            if *f != good_a && *f != good_b {
                assert!(*p < pa);
            }
        }
        let pmf = partition_probs(&pts, &LabelPrior::FixedSizes(vec![2, 2]), &model).unwrap();
        assert_eq!(pmf.len(), 3);
        assert!((pmf.total() - 1.0).abs() < 1e-12);
        let truth = good_a.induced_partition();
        assert!((pmf.get(&truth) - 2.0 * pa).abs() < 1e-12);
        assert!(pmf
            .entries()
            .iter()
            .all(|(p, w)| p == &truth || *w < pmf.get(&truth)));
    }

    #[test]
    fn two_points_symmetric_are_even() {
        let pts = PointSet::new(vec![vec![0.4], vec![-3.0]]).unwrap();
        let model = NiwModel::symmetric(2, NiwLabel::isotropic(1, 1.0, 3.0, 1.0)).unwrap();
        let post =
            posterior_label_probs(&pts, &LabelPrior::FixedSizes(vec![1, 1]), &model).unwrap();
        for (_, p) in post.entries() {
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn relabelings_of_two_labels() {
        let phi = LabelFunction::new(vec![0, 1, 1], 2).unwrap();
        assert_eq!(relabelings(&phi).len(), 2);
        let three = LabelFunction::new(vec![0, 1, 2], 3).unwrap();
        assert_eq!(relabelings(&three).len(), 6);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (_, model) = separated();
        let pts = PointSet::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(posterior_label_probs(&pts, &LabelPrior::FixedSizes(vec![1, 1]), &model).is_err());
    }
}
