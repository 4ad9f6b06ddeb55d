//! Randomized-subset seeding followed by local search.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::index;

use super::{ClusterResult, Diagnostics};
use crate::gaussian::{
    cluster_stats, partition_log_score, posterior_label_probs, BoundLikelihood, LabelLikelihood,
    LabelPrior, PointSet,
};
use crate::linalg::Mvn;
use crate::partition::LabelFunction;
use crate::rng::substream;
use crate::{Error, Method, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PseedConfig {
    pub restarts: usize,
    pub subset_size: usize,
    pub seed: u64,
}

impl PseedConfig {
    pub fn new(seed: u64) -> Self {
        PseedConfig {
            restarts: 10,
            subset_size: 10,
            seed,
        }
    }
}

/// Seed and final label functions with their log scores, one per restart.
#[derive(Debug, Clone)]
pub struct PseedTrace {
    pub result: ClusterResult,
    pub seeds: Vec<(LabelFunction, f64)>,
    pub finals: Vec<(LabelFunction, f64)>,
}

pub fn pseed_fast(
    points: &PointSet,
    prior: &LabelPrior,
    model: &dyn LabelLikelihood,
    config: &PseedConfig,
) -> Result<ClusterResult> {
    pseed_fast_traced(points, prior, model, config).map(|t| t.result)
}

pub fn pseed_fast_traced(
    points: &PointSet,
    prior: &LabelPrior,
    model: &dyn LabelLikelihood,
    config: &PseedConfig,
) -> Result<PseedTrace> {
    let start = Instant::now();
    let n = points.len();
    let l = model.num_labels();
    if config.restarts == 0 {
        return Err(Error::invalid("pseed_fast needs at least one restart"));
    }
    let Some(sizes) = prior.sizes() else {
        return Err(Error::invalid("pseed_fast needs a size-constrained prior"));
    };
    if sizes.iter().sum::<usize>() != n {
        return Err(Error::LengthMismatch {
            left: sizes.iter().sum(),
            right: n,
        });
    }
    if sizes.len() > l && sizes[l..].iter().any(|&s| s > 0) {
        return Err(Error::TooManyBlocks {
            blocks: sizes.len(),
            labels: l,
        });
    }
    let m = config.subset_size.min(n);
    if m == 0 {
        return Err(Error::invalid("subset size must be positive"));
    }
    let mut full = sizes.to_vec();
    full.resize(l, 0);
    let sub_sizes = largest_remainder(&full, m);
    let sub_prior = match prior {
        LabelPrior::FixedSizes(_) => LabelPrior::FixedSizes(sub_sizes.clone()),
        _ => LabelPrior::SizeMultiset(sub_sizes.clone()),
    };

    let bound = model.bind(points)?;
    let mut seeds = Vec::with_capacity(config.restarts);
    let mut finals = Vec::with_capacity(config.restarts);
    let mut evaluations = 0usize;
    for r in 0..config.restarts {
        let mut rng = substream(config.seed, &[r as u64]);
        let mut subset = index::sample(&mut rng, n, m).into_vec();
        subset.sort_unstable();
        let sub_points = points.subset(&subset);
        let sub_phi = subset_map(&sub_points, &sub_prior, model)?;
        let seed = extend_by_qda(points, &subset, &sub_phi, prior, &full)?;
        let seed_score = partition_log_score(&seed, prior, bound.as_ref())?;
        let (phi, score, evals) = hill_climb(seed.clone(), seed_score, prior, bound.as_ref())?;
        evaluations += evals;
        seeds.push((seed, seed_score));
        finals.push((phi, score));
    }
    let mut best = 0;
    for (r, (_, s)) in finals.iter().enumerate() {
        if *s > finals[best].1 {
            best = r;
        }
    }
    let result = ClusterResult {
        partition: finals[best].0.induced_partition(),
        score: -finals[best].1,
        method: Method::IbrPseed,
        diagnostics: Diagnostics {
            candidates: evaluations,
            restarts: config.restarts,
            runtime: start.elapsed(),
        },
    };
    Ok(PseedTrace {
        result,
        seeds,
        finals,
    })
}

/// Split `m` proportionally to `sizes`, rounding by largest remainder (ties to
/// the lower index).
pub(crate) fn largest_remainder(sizes: &[usize], m: usize) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let mut out: Vec<usize> = sizes.iter().map(|&s| s * m / n).collect();
    let mut rem: Vec<(usize, usize)> = sizes
        .iter()
        .enumerate()
        .map(|(i, &s)| (s * m % n, i))
        .collect();
    rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let short = m - out.iter().sum::<usize>();
    for &(_, i) in rem.iter().take(short) {
        out[i] += 1;
    }
    out
}

/// Highest-posterior label function on the subset among those inducing its
/// maximum-probability partition.
fn subset_map(
    sub: &PointSet,
    prior: &LabelPrior,
    model: &dyn LabelLikelihood,
) -> Result<LabelFunction> {
    let post = posterior_label_probs(sub, prior, model)?;
    let entries = post.entries();
    let mut mass = std::collections::BTreeMap::new();
    for (phi, p) in entries {
        *mass.entry(phi.induced_partition()).or_insert(0.0) += p;
    }
    let mut best_part = None;
    let mut best_mass = f64::NEG_INFINITY;
    for (part, w) in &mass {
        if *w > best_mass {
            best_mass = *w;
            best_part = Some(part.clone());
        }
    }
    let best_part = best_part.ok_or(Error::EmptySupport)?;
    let mut best: Option<&(LabelFunction, f64)> = None;
    for e in entries
        .iter()
        .filter(|(phi, _)| phi.induced_partition() == best_part)
    {
        if best.is_none_or(|b| e.1 > b.1) {
            best = Some(e);
        }
    }
    Ok(best.ok_or(Error::EmptySupport)?.0.clone())
}

/// Capacity of each subset label on the full point set.
fn capacities(sub_phi: &LabelFunction, prior: &LabelPrior, full: &[usize]) -> Vec<usize> {
    match prior {
        LabelPrior::FixedSizes(_) => full.to_vec(),
        _ => {
            // Pair labels by decreasing subset count with sizes in decreasing order.
            let counts = sub_phi.counts();
            let mut labels: Vec<usize> = (0..counts.len()).collect();
            labels.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
            let mut sorted = full.to_vec();
            sorted.sort_unstable_by(|a, b| b.cmp(a));
            let mut cap = vec![0; counts.len()];
            for (y, s) in labels.into_iter().zip(sorted) {
                cap[y] = s;
            }
            cap
        }
    }
}

/// Quadratic-discriminant extension of the subset labelling to every point,
/// filling each label up to its capacity most-confident first.
fn extend_by_qda(
    points: &PointSet,
    subset: &[usize],
    sub_phi: &LabelFunction,
    prior: &LabelPrior,
    full: &[usize],
) -> Result<LabelFunction> {
    let n = points.len();
    let d = points.dim();
    let l = sub_phi.num_labels();
    let cap = capacities(sub_phi, prior, full);

    let members: Vec<Vec<usize>> = (0..l)
        .map(|y| {
            (0..subset.len())
                .filter(|&i| sub_phi.get(i) == y)
                .map(|i| subset[i])
                .collect()
        })
        .collect();
    let stats: Vec<_> = members.iter().map(|m| cluster_stats(points, m)).collect();

    let mut pooled = DMatrix::zeros(d, d);
    for s in &stats {
        pooled += &s.scatter;
    }
    let dof = subset.len().saturating_sub(l).max(1) as f64;
    pooled /= dof;
    let all: Vec<usize> = (0..n).collect();
    let overall = cluster_stats(points, &all);
    let fallback_scale = overall.scatter.trace() / (n.max(2) - 1) as f64 / d as f64;

    let mut classes: Vec<Option<(Mvn, f64)>> = Vec::with_capacity(l);
    for (y, s) in stats.iter().enumerate() {
        if s.n == 0 {
            classes.push(None);
            continue;
        }
        let mut cov = if s.n >= d + 2 {
            s.scatter.clone() / (s.n - 1) as f64
        } else {
            pooled.clone()
        };
        let mut scale = cov.trace() / d as f64;
        if !(scale > 0.0) {
            scale = if fallback_scale > 0.0 {
                fallback_scale
            } else {
                1.0
            };
            cov = DMatrix::identity(d, d) * scale;
        }
        for i in 0..d {
            cov[(i, i)] += 1e-3 * scale;
        }
        let mvn = Mvn::new(s.mean.clone(), &cov)?;
        classes.push(Some((mvn, (cap[y].max(1) as f64).ln())));
    }

    let mut labels = vec![usize::MAX; n];
    let mut left = cap.clone();
    for (i, &p) in subset.iter().enumerate() {
        labels[p] = sub_phi.get(i);
        left[sub_phi.get(i)] -= 1;
    }
    // Each remaining point/label score, assigned greedily by decreasing score.
    let mut scored: Vec<(f64, usize, usize)> = Vec::new();
    for p in (0..n).filter(|&p| labels[p] == usize::MAX) {
        for (y, c) in classes.iter().enumerate() {
            let s = match c {
                Some((mvn, lp)) => mvn.log_density(points.point(p)) + lp,
                None => f64::NEG_INFINITY,
            };
            scored.push((s, p, y));
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for (_, p, y) in scored {
        if labels[p] == usize::MAX && left[y] > 0 {
            labels[p] = y;
            left[y] -= 1;
        }
    }
    LabelFunction::new(labels, l)
}

/// First-improvement local search over reassignments of one or two points.
/// The scan continues cyclically from the last accepted move and stops after
/// a full pass without improvement.
fn hill_climb(
    mut phi: LabelFunction,
    mut score: f64,
    prior: &LabelPrior,
    bound: &dyn BoundLikelihood,
) -> Result<(LabelFunction, f64, usize)> {
    let n = phi.len();
    let l = phi.num_labels();
    let moves = neighborhood(n, l);
    if moves.is_empty() {
        return Ok((phi, score, 0));
    }
    let mut evaluations = 0;
    let mut pos = 0;
    let mut since = 0;
    let mut labels = phi.labels().to_vec();
    while since < moves.len() {
        let mv = moves[pos];
        pos = (pos + 1) % moves.len();
        since += 1;
        let ((i, a), second) = mv;
        if labels[i] == a || second.is_some_and(|(j, b)| labels[j] == b) {
            continue;
        }
        let mut cand = labels.clone();
        cand[i] = a;
        if let Some((j, b)) = second {
            cand[j] = b;
        }
        let cand = LabelFunction::new(cand, l)?;
        if prior.log_prob(&cand).is_none() {
            continue;
        }
        evaluations += 1;
        let s = partition_log_score(&cand, prior, bound)?;
        if s > score {
            score = s;
            labels = cand.labels().to_vec();
            phi = cand;
            since = 0;
        }
    }
    Ok((phi, score, evaluations))
}

type Move = ((usize, usize), Option<(usize, usize)>);

/// Single-point moves in index order, then pair moves.
fn neighborhood(n: usize, l: usize) -> Vec<Move> {
    let mut out = Vec::new();
    for i in 0..n {
        for a in 0..l {
            out.push(((i, a), None));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for a in 0..l {
                for b in 0..l {
                    out.push(((i, a), Some((j, b))));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::map_partition;
    use crate::gaussian::{NiwLabel, NiwModel};

    #[test]
    fn largest_remainder_split() {
        assert_eq!(largest_remainder(&[50, 50], 10), vec![5, 5]);
        assert_eq!(largest_remainder(&[60, 40], 10), vec![6, 4]);
        assert_eq!(largest_remainder(&[5, 5, 5], 10), vec![4, 3, 3]);
        assert_eq!(largest_remainder(&[7, 3], 7), vec![5, 2]);
    }

    #[test]
    fn finds_exact_map_on_small_sets() {
        let model = NiwModel::symmetric(2, NiwLabel::isotropic(1, 1.0, 3.0, 1.0)).unwrap();
        let pts = PointSet::new(
            [-3.0, -2.5, -2.9, 0.1, 3.1, 2.4, 2.8, 3.3]
                .iter()
                .map(|&x| vec![x])
                .collect(),
        )
        .unwrap();
        let prior = LabelPrior::FixedSizes(vec![4, 4]);
        let map = map_partition(&pts, &prior, &model).unwrap();
        let fast = pseed_fast(
            &pts,
            &prior,
            &model,
            &PseedConfig {
                restarts: 3,
                subset_size: 6,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!(fast.partition, map.partition);
        assert_eq!(fast.method, Method::IbrPseed);
    }

    #[test]
    fn deterministic_given_seed() {
        let model = NiwModel::symmetric(2, NiwLabel::isotropic(2, 1.0, 4.0, 1.0)).unwrap();
        let s = crate::gaussian::sample_rlpp(&model, &[15, 15], 3).unwrap();
        let prior = LabelPrior::SizeMultiset(vec![15, 15]);
        let cfg = PseedConfig::new(11);
        let a = pseed_fast_traced(&s.points, &prior, &model, &cfg).unwrap();
        let b = pseed_fast_traced(&s.points, &prior, &model, &cfg).unwrap();
        assert_eq!(a.result.partition, b.result.partition);
        for ((_, seed), (_, fin)) in a.seeds.iter().zip(&a.finals) {
            assert!(fin >= seed);
        }
    }

    #[test]
    fn requires_size_prior() {
        let model = NiwModel::symmetric(2, NiwLabel::isotropic(1, 1.0, 3.0, 1.0)).unwrap();
        let pts = PointSet::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let phi = LabelFunction::new(vec![0, 1], 2).unwrap();
        let prior = LabelPrior::Explicit(vec![(phi, 1.0)]);
        assert!(pseed_fast(&pts, &prior, &model, &PseedConfig::new(0)).is_err());
    }
}
