use super::sq_dist;
use crate::gaussian::PointSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    Single,
    Average,
    Complete,
}

/// Agglomerative clustering with Euclidean distances and Lance-Williams
/// updates, cut when `k` clusters remain. Among equal distances the pair with
/// the smallest indices merges first; clusters are indexed by their smallest
/// member. Returns labels and the height of the last merge.
pub fn agglomerate(points: &PointSet, k: usize, linkage: Linkage) -> (Vec<usize>, f64) {
    let n = points.len();
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = sq_dist(points.point(i), points.point(j)).sqrt();
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut owner: Vec<usize> = (0..n).collect();
    let mut height = 0.0;
    for _ in 0..n.saturating_sub(k) {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for i in (0..n).filter(|&i| active[i]) {
            for j in (i + 1..n).filter(|&j| active[j]) {
                if dist[i][j] < best.2 {
                    best = (i, j, dist[i][j]);
                }
            }
        }
        let (a, b, d) = best;
        height = d;
        for c in (0..n).filter(|&c| active[c] && c != a && c != b) {
            let (da, db) = (dist[a][c], dist[b][c]);
            let merged = match linkage {
                Linkage::Single => da.min(db),
                Linkage::Complete => da.max(db),
                Linkage::Average => {
                    (size[a] as f64 * da + size[b] as f64 * db) / (size[a] + size[b]) as f64
                }
            };
            dist[a][c] = merged;
            dist[c][a] = merged;
        }
        active[b] = false;
        size[a] += size[b];
        for o in owner.iter_mut().filter(|o| **o == b) {
            *o = a;
        }
    }
    (owner, height)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::Partition;
    use rand::Rng;

    /// Agglomeration recomputing every cluster distance from the points.
    fn naive(points: &PointSet, k: usize, linkage: Linkage) -> Vec<usize> {
        let n = points.len();
        let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        let d = |a: &[usize], b: &[usize]| {
            let all: Vec<f64> = a
                .iter()
                .flat_map(|&i| {
                    b.iter()
                        .map(move |&j| sq_dist(points.point(i), points.point(j)).sqrt())
                })
                .collect();
            match linkage {
                Linkage::Single => all.iter().cloned().fold(f64::INFINITY, f64::min),
                Linkage::Complete => all.iter().cloned().fold(0.0, f64::max),
                Linkage::Average => all.iter().sum::<f64>() / all.len() as f64,
            }
        };
        while clusters.len() > k {
            let mut best = (0, 0, f64::INFINITY);
            for i in 0..clusters.len() {
                for j in i + 1..clusters.len() {
                    let v = d(&clusters[i], &clusters[j]);
                    if v < best.2 {
                        best = (i, j, v);
                    }
                }
            }
            let b = clusters.remove(best.1);
            clusters[best.0].extend(b);
        }
        let mut labels = vec![0; n];
        for (c, members) in clusters.iter().enumerate() {
            for &i in members {
                labels[i] = c;
            }
        }
        labels
    }

    #[test]
    fn matches_naive_agglomeration() {
        let mut rng = crate::rng::seeded(17);
        for trial in 0..30 {
            let n = rng.random_range(2..=50);
            let rows = (0..n)
                .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
                .collect();
            let pts = PointSet::new(rows).unwrap();
            let k = 1 + trial % 4.min(n);
            for linkage in [Linkage::Single, Linkage::Average, Linkage::Complete] {
                let fast = Partition::from_labels(&agglomerate(&pts, k, linkage).0);
                let slow = Partition::from_labels(&naive(&pts, k, linkage));
                assert_eq!(fast, slow, "{linkage:?} n={n} k={k}");
            }
        }
    }
}
