use rand::Rng as _;

use super::{sq_dist, BaselineConfig};
use crate::gaussian::PointSet;
use crate::rng::{substream, Rng};
use crate::Result;

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Within-cluster sum of squares.
    pub objective: f64,
    /// Objective after each update step of the winning restart.
    pub trace: Vec<f64>,
}

/// Lloyd's algorithm from k-means++ seeds, best of `cfg.restarts` by
/// within-cluster sum of squares.
pub fn kmeans(points: &PointSet, cfg: &BaselineConfig) -> Result<KMeansFit> {
    let mut best: Option<KMeansFit> = None;
    for r in 0..cfg.restarts {
        let mut rng = substream(cfg.seed, &[r as u64]);
        let fit = lloyd(points, plus_plus(points, cfg.k, &mut rng), cfg.max_iter);
        if best.as_ref().is_none_or(|b| fit.objective < b.objective) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

pub(crate) fn plus_plus(points: &PointSet, k: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points.point(rng.random_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|x| sq_dist(x, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    idx = i;
                    break;
                }
                u -= w;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centers.push(points.point(pick).to_vec());
        for (i, x) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(x, &centers[centers.len() - 1]));
        }
    }
    centers
}

fn nearest(x: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, m) in centers.iter().enumerate() {
        let d = sq_dist(x, m);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

pub(crate) fn lloyd(points: &PointSet, mut centers: Vec<Vec<f64>>, max_iter: usize) -> KMeansFit {
    let n = points.len();
    let k = centers.len();
    let dim = points.dim();
    let mut labels = vec![usize::MAX; n];
    let mut trace = Vec::new();
    for _ in 0..max_iter {
        let mut next: Vec<usize> = points.iter().map(|x| nearest(x, &centers).0).collect();
        repair_empty(points, &centers, &mut next, k);
        let changed = next != labels;
        labels = next;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, x) in points.iter().enumerate() {
            counts[labels[i]] += 1;
            for (s, v) in sums[labels[i]].iter_mut().zip(x) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        trace.push(
            points
                .iter()
                .enumerate()
                .map(|(i, x)| sq_dist(x, &centers[labels[i]]))
                .sum(),
        );
        if !changed {
            break;
        }
    }
    let objective = *trace.last().expect("at least one iteration");
    KMeansFit {
        labels,
        centers,
        objective,
        trace,
    }
}

/// Give each empty cluster the point farthest from its current center,
/// taken from a cluster that keeps at least one point.
fn repair_empty(points: &PointSet, centers: &[Vec<f64>], labels: &mut [usize], k: usize) {
    let n = labels.len();
    if n < k {
        return;
    }
    loop {
        let mut counts = vec![0usize; k];
        for &y in labels.iter() {
            counts[y] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut far = None;
        let mut far_d = f64::NEG_INFINITY;
        for i in 0..n {
            if counts[labels[i]] < 2 {
                continue;
            }
            let d = sq_dist(points.point(i), &centers[labels[i]]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        labels[far.expect("some cluster has two points")] = empty;
    }
}
