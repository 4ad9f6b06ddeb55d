//! Label functions, canonical partitions and the natural partition cost.
//!
//! Labels are 0-based internally (`0..l`); the text formats in [`crate::io`]
//! use 1-based labels.

mod assignment;
mod enumerate;

pub use assignment::max_weight_assignment;
pub use enumerate::{count_partitions, enumerate_partitions, MAX_ENUMERATION, MAX_UNRESTRICTED_N};

use std::fmt;

use crate::{Error, Result};

/// Above this label count the natural cost uses the assignment solver instead
/// of enumerating label permutations.
pub const BRUTE_FORCE_MAX_LABELS: usize = 5;

/// Explicit map from point index to label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelFunction {
    labels: Vec<usize>,
    num_labels: usize,
}

impl LabelFunction {
    pub fn new(labels: Vec<usize>, num_labels: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_labels) {
            return Err(Error::invalid(format!(
                "label {bad} out of range for {num_labels} labels"
            )));
        }
        Ok(Self { labels, num_labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn get(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// Number of points carrying each label.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.num_labels];
        for &y in &self.labels {
            c[y] += 1;
        }
        c
    }

    /// `sigma[old] = new` applied to every point.
    pub fn relabel(&self, sigma: &[usize]) -> Self {
        Self {
            labels: self.labels.iter().map(|&y| sigma[y]).collect(),
            num_labels: self.num_labels,
        }
    }

    pub fn induced_partition(&self) -> Partition {
        Partition::from_labels(&self.labels)
    }
}

/// A partition of `{0..n}` stored in canonical first-occurrence form.
///
/// Block `b` is the `b`-th distinct label met when scanning points in order,
/// so two partitions are equal exactly when their encodings are equal, and the
/// derived ordering is the lexicographic order of restricted-growth strings.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    encoding: Vec<usize>,
    num_blocks: usize,
}

impl Partition {
    /// Canonicalises an arbitrary label vector.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map: Vec<(usize, usize)> = Vec::new();
        let mut encoding = Vec::with_capacity(labels.len());
        for &y in labels {
            let b = match map.iter().find(|(old, _)| *old == y) {
                Some(&(_, b)) => b,
                None => {
                    map.push((y, map.len()));
                    map.len() - 1
                }
            };
            encoding.push(b);
        }
        Self {
            encoding,
            num_blocks: map.len(),
        }
    }

    /// Builds a partition from explicit blocks, checking that they are disjoint
    /// and cover `0..n`.
    pub fn from_blocks(blocks: &[Vec<usize>], n: usize) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            for &i in block {
                if i >= n {
                    return Err(Error::invalid(format!(
                        "index {i} out of range for {n} points"
                    )));
                }
                if labels[i] != usize::MAX {
                    return Err(Error::invalid(format!(
                        "index {i} appears in more than one block"
                    )));
                }
                labels[i] = b;
            }
        }
        if let Some(i) = labels.iter().position(|&y| y == usize::MAX) {
            return Err(Error::invalid(format!(
                "index {i} is not covered by any block"
            )));
        }
        Ok(Self::from_labels(&labels))
    }

    pub fn len(&self) -> usize {
        self.encoding.len()
    }

    pub fn is_empty(&self) -> bool {
        self.encoding.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn encoding(&self) -> &[usize] {
        &self.encoding
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.num_blocks];
        for (i, &b) in self.encoding.iter().enumerate() {
            blocks[b].push(i);
        }
        blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.num_blocks];
        for &b in &self.encoding {
            s[b] += 1;
        }
        s
    }

    /// Canonical label function of this partition with `num_labels` labels.
    pub fn to_label_function(&self, num_labels: usize) -> Result<LabelFunction> {
        if self.num_blocks > num_labels {
            return Err(Error::TooManyBlocks {
                blocks: self.num_blocks,
                labels: num_labels,
            });
        }
        LabelFunction::new(self.encoding.clone(), num_labels)
    }

    /// Re-indexes points: the result has point `perm[i]` where `self` has point `i`.
    pub fn permute_points(&self, perm: &[usize]) -> Self {
        let mut labels = vec![0; self.len()];
        for (i, &b) in self.encoding.iter().enumerate() {
            labels[perm[i]] = b;
        }
        Self::from_labels(&labels)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, block) in self.blocks().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (j, i) in block.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{i}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

/// Fraction of points on which two label functions disagree.
pub fn label_mismatch(a: &LabelFunction, b: &LabelFunction) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::invalid(
            "label functions must cover at least one point",
        ));
    }
    let differ = a
        .labels
        .iter()
        .zip(&b.labels)
        .filter(|(x, y)| x != y)
        .count();
    Ok(differ as f64 / a.len() as f64)
}

/// Block-overlap counts, padded with empty blocks to a `k x k` square.
fn overlap_matrix(p: &Partition, q: &Partition, k: usize) -> Vec<Vec<i64>> {
    let mut ov = vec![vec![0i64; k]; k];
    for (&a, &b) in p.encoding.iter().zip(&q.encoding) {
        ov[a][b] += 1;
    }
    ov
}

fn best_overlap_by_permutation(ov: &[Vec<i64>]) -> i64 {
    fn go(row: usize, ov: &[Vec<i64>], used: &mut [bool], acc: i64, best: &mut i64) {
        if row == ov.len() {
            *best = (*best).max(acc);
            return;
        }
        for col in 0..ov.len() {
            if !used[col] {
                used[col] = true;
                go(row + 1, ov, used, acc + ov[row][col], best);
                used[col] = false;
            }
        }
    }
    let mut best = i64::MIN;
    go(0, ov, &mut vec![false; ov.len()], 0, &mut best);
    best
}

/// Largest number of points two partitions can agree on under a matching of
/// their blocks, computed by permutation search for `l <= 5` and by the
/// assignment solver beyond.
pub fn max_matched_overlap(p: &Partition, q: &Partition, l: usize) -> Result<usize> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    for part in [p, q] {
        if part.num_blocks > l {
            return Err(Error::TooManyBlocks {
                blocks: part.num_blocks,
                labels: l,
            });
        }
    }
    // Padding beyond the larger block count only adds zero rows and columns.
    let k = p.num_blocks.max(q.num_blocks);
    let ov = overlap_matrix(p, q, k);
    let w = if l <= BRUTE_FORCE_MAX_LABELS {
        best_overlap_by_permutation(&ov)
    } else {
        max_weight_assignment(&ov).0
    };
    Ok(w as usize)
}

/// Natural partition cost: the minimum fraction of points whose labels must
/// change to turn `p` into `q`, over all label functions inducing each.
pub fn natural_cost(p: &Partition, q: &Partition, l: usize) -> Result<f64> {
    let w = max_matched_overlap(p, q, l)?;
    if p.is_empty() {
        return Err(Error::invalid("partitions must cover at least one point"));
    }
    Ok((p.len() - w) as f64 / p.len() as f64)
}

/// Natural cost computed with the assignment solver regardless of block count.
pub fn natural_cost_by_assignment(p: &Partition, q: &Partition) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    if p.is_empty() {
        return Err(Error::invalid("partitions must cover at least one point"));
    }
    let ov = overlap_matrix(p, q, p.num_blocks.max(q.num_blocks));
    Ok((p.len() as i64 - max_weight_assignment(&ov).0) as f64 / p.len() as f64)
}

/// Natural costs between candidate (rows) and reference (columns) partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `C * probs`: the partition error of every candidate.
    pub fn apply(&self, probs: &[f64]) -> Result<Vec<f64>> {
        if probs.len() != self.cols {
            return Err(Error::LengthMismatch {
                left: probs.len(),
                right: self.cols,
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(probs).map(|(c, p)| c * p).sum())
            .collect())
    }
}

pub fn cost_matrix(cands: &[Partition], refs: &[Partition], l: usize) -> Result<CostMatrix> {
    let mut data = Vec::with_capacity(cands.len() * refs.len());
    for p in cands {
        for q in refs {
            data.push(natural_cost(p, q, l)?);
        }
    }
    Ok(CostMatrix {
        rows: cands.len(),
        cols: refs.len(),
        data,
    })
}
