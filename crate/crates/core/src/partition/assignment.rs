/// Maximum-weight perfect matching on a square integer matrix (Hungarian
/// method with potentials, O(k^3)). Returns the total weight and, for each
/// row, its assigned column.
pub fn max_weight_assignment(weights: &[Vec<i64>]) -> (i64, Vec<usize>) {
    let k = weights.len();
    if k == 0 {
        return (0, Vec::new());
    }
    let max = weights.iter().flatten().copied().max().unwrap_or(0);
    // Minimise cost = max - weight; 1-based arrays with a virtual column 0.
    let cost = |i: usize, j: usize| max - weights[i - 1][j - 1];
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; k + 1];
    let mut v = vec![0i64; k + 1];
    let mut p = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=k {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; k];
    for j in 1..=k {
        row_to_col[p[j] - 1] = j - 1;
    }
    let total = row_to_col
        .iter()
        .enumerate()
        .map(|(i, &j)| weights[i][j])
        .sum();
    (total, row_to_col)
}
