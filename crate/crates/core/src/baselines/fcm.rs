use rand::Rng as _;

use super::{sq_dist, BaselineConfig};
use crate::gaussian::PointSet;
use crate::rng::substream;
use crate::Result;

#[derive(Debug, Clone)]
pub struct FcmFit {
    pub labels: Vec<usize>,
    pub memberships: Vec<Vec<f64>>,
    pub objective: f64,
    pub trace: Vec<f64>,
}

/// Fuzzy c-means from random memberships, best of `cfg.restarts` by the
/// fuzzy objective; hard labels by maximum membership.
pub fn fuzzy_cmeans(points: &PointSet, cfg: &BaselineConfig) -> Result<FcmFit> {
    let mut best: Option<FcmFit> = None;
    for r in 0..cfg.restarts {
        let mut rng = substream(cfg.seed, &[r as u64]);
        let u: Vec<Vec<f64>> = (0..points.len())
            .map(|_| {
                let row: Vec<f64> = (0..cfg.k).map(|_| rng.random::<f64>() + 1e-3).collect();
                let s: f64 = row.iter().sum();
                row.into_iter().map(|v| v / s).collect()
            })
            .collect();
        let fit = iterate(points, u, cfg);
        if best.as_ref().is_none_or(|b| fit.objective < b.objective) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn centers(points: &PointSet, u: &[Vec<f64>], m: f64, k: usize) -> Vec<Vec<f64>> {
    let dim = points.dim();
    (0..k)
        .map(|c| {
            let mut num = vec![0.0; dim];
            let mut den = 0.0;
            for (i, x) in points.iter().enumerate() {
                let w = u[i][c].powf(m);
                den += w;
                for (a, v) in num.iter_mut().zip(x) {
                    *a += w * v;
                }
            }
            num.into_iter().map(|a| a / den).collect()
        })
        .collect()
}

fn objective(points: &PointSet, u: &[Vec<f64>], v: &[Vec<f64>], m: f64) -> f64 {
    points
        .iter()
        .enumerate()
        .map(|(i, x)| {
            v.iter()
                .enumerate()
                .map(|(c, vc)| u[i][c].powf(m) * sq_dist(x, vc))
                .sum::<f64>()
        })
        .sum()
}

fn memberships(points: &PointSet, v: &[Vec<f64>], m: f64) -> Vec<Vec<f64>> {
    let k = v.len();
    let p = 1.0 / (m - 1.0);
    points
        .iter()
        .map(|x| {
            let d: Vec<f64> = v.iter().map(|vc| sq_dist(x, vc)).collect();
            let zeros = d.iter().filter(|&&di| di == 0.0).count();
            if zeros > 0 {
                return d
                    .iter()
                    .map(|&di| if di == 0.0 { 1.0 / zeros as f64 } else { 0.0 })
                    .collect();
            }
            (0..k)
                .map(|c| 1.0 / d.iter().map(|&dj| (d[c] / dj).powf(p)).sum::<f64>())
                .collect()
        })
        .collect()
}

fn iterate(points: &PointSet, mut u: Vec<Vec<f64>>, cfg: &BaselineConfig) -> FcmFit {
    let m = cfg.fuzzifier;
    let mut trace = Vec::new();
    for _ in 0..cfg.max_iter {
        let v = centers(points, &u, m, cfg.k);
        let next = memberships(points, &v, m);
        trace.push(objective(points, &next, &v, m));
        let delta = u
            .iter()
            .flatten()
            .zip(next.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        u = next;
        if delta < cfg.tolerance {
            break;
        }
    }
    let labels = u
        .iter()
        .map(|row| {
            let mut best = 0;
            for (c, &w) in row.iter().enumerate() {
                if w > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    FcmFit {
        labels,
        memberships: u,
        objective: *trace.last().expect("at least one iteration"),
        trace,
    }
}
