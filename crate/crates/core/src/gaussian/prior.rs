use crate::partition::{LabelFunction, MAX_ENUMERATION, MAX_UNRESTRICTED_N};
use crate::{Error, Result};

/// Prior `P(Phi = phi)` on label functions, independent of the points.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelPrior {
    /// Uniform over label functions giving label `y` exactly `sizes[y]` points.
    FixedSizes(Vec<usize>),
    /// Uniform over label functions whose multiset of label counts equals
    /// `sizes`; which label gets which size is left open.
    SizeMultiset(Vec<usize>),
    /// Explicit table of label functions and probabilities.
    Explicit(Vec<(LabelFunction, f64)>),
}

fn padded(sizes: &[usize], l: usize) -> Result<Vec<usize>> {
    if sizes.len() > l {
        if sizes[l..].iter().any(|&s| s > 0) {
            return Err(Error::TooManyBlocks {
                blocks: sizes.len(),
                labels: l,
            });
        }
        return Ok(sizes[..l].to_vec());
    }
    let mut v = sizes.to_vec();
    v.resize(l, 0);
    Ok(v)
}

fn multinomial(counts: &[usize]) -> u128 {
    let mut total: u128 = 1;
    let mut placed = 0usize;
    for &s in counts {
        for j in 1..=s {
            placed += 1;
            total = total.saturating_mul(placed as u128) / j as u128;
        }
    }
    total
}

/// Distinct permutations of `v` in lexicographic order.
fn distinct_permutations(v: &[usize]) -> Vec<Vec<usize>> {
    let mut cur = v.to_vec();
    cur.sort_unstable();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (0..cur.len().saturating_sub(1))
            .rev()
            .find(|&i| cur[i] < cur[i + 1])
        else {
            return out;
        };
        let j = (i + 1..cur.len())
            .rev()
            .find(|&j| cur[j] > cur[i])
            .expect("successor exists");
        cur.swap(i, j);
        cur[i + 1..].reverse();
        out.push(cur.clone());
    }
}

fn exact_count_label_functions(counts: &[usize], out: &mut Vec<LabelFunction>) {
    fn go(
        pos: usize,
        remaining: &mut [usize],
        cur: &mut Vec<usize>,
        n: usize,
        out: &mut Vec<LabelFunction>,
    ) {
        if pos == n {
            out.push(LabelFunction::new(cur.clone(), remaining.len()).expect("labels in range"));
            return;
        }
        for y in 0..remaining.len() {
            if remaining[y] > 0 {
                remaining[y] -= 1;
                cur.push(y);
                go(pos + 1, remaining, cur, n, out);
                cur.pop();
                remaining[y] += 1;
            }
        }
    }
    let n = counts.iter().sum();
    go(0, &mut counts.to_vec(), &mut Vec::with_capacity(n), n, out);
}

impl LabelPrior {
    /// Block sizes the prior constrains, if any.
    pub fn sizes(&self) -> Option<&[usize]> {
        match self {
            LabelPrior::FixedSizes(s) | LabelPrior::SizeMultiset(s) => Some(s),
            LabelPrior::Explicit(_) => None,
        }
    }

    /// `log P(Phi = phi)`, or `None` outside the support.
    pub fn log_prob(&self, phi: &LabelFunction) -> Option<f64> {
        let l = phi.num_labels();
        match self {
            LabelPrior::FixedSizes(s) => {
                let target = padded(s, l).ok()?;
                (phi.counts() == target).then(|| -(multinomial(&target) as f64).ln())
            }
            LabelPrior::SizeMultiset(s) => {
                let target = padded(s, l).ok()?;
                let mut counts = phi.counts();
                counts.sort_unstable();
                let mut sorted = target.clone();
                sorted.sort_unstable();
                (counts == sorted).then(|| {
                    let total = multinomial(&target) * distinct_permutations(&target).len() as u128;
                    -(total as f64).ln()
                })
            }
            LabelPrior::Explicit(table) => table
                .iter()
                .find(|(f, _)| f == phi)
                .and_then(|&(_, p)| (p > 0.0).then(|| p.ln())),
        }
    }

    /// Every label function with positive prior mass, with its log prior.
    pub fn support(&self, n: usize, l: usize) -> Result<Vec<(LabelFunction, f64)>> {
        let out: Vec<(LabelFunction, f64)> = match self {
            LabelPrior::FixedSizes(s) | LabelPrior::SizeMultiset(s) => {
                let target = padded(s, l)?;
                let total: usize = target.iter().sum();
                if total != n {
                    return Err(Error::invalid(format!(
                        "label sizes sum to {total}, but there are {n} points"
                    )));
                }
                if n > MAX_UNRESTRICTED_N {
                    return Err(Error::TooLarge(format!(
                        "label-function support enumeration limited to n <= {MAX_UNRESTRICTED_N}, got {n}"
                    )));
                }
                let assignments = match self {
                    LabelPrior::FixedSizes(_) => vec![target.clone()],
                    _ => distinct_permutations(&target),
                };
                let count = multinomial(&target) * assignments.len() as u128;
                if count > MAX_ENUMERATION {
                    return Err(Error::TooLarge(format!(
                        "{count} label functions in the prior support"
                    )));
                }
                let mut fs = Vec::with_capacity(count as usize);
                for a in &assignments {
                    exact_count_label_functions(a, &mut fs);
                }
                let lp = -(count as f64).ln();
                fs.into_iter().map(|f| (f, lp)).collect()
            }
            LabelPrior::Explicit(table) => {
                let total: f64 = table.iter().map(|(_, p)| p).sum();
                if (total - 1.0).abs() > 1e-9 || table.iter().any(|(_, p)| *p < 0.0) {
                    return Err(Error::Unnormalized(total));
                }
                for (f, _) in table {
                    if f.len() != n || f.num_labels() != l {
                        return Err(Error::invalid(
                            "explicit prior entry does not match the point count or labels",
                        ));
                    }
                }
                table
                    .iter()
                    .filter(|(_, p)| *p > 0.0)
                    .map(|(f, p)| (f.clone(), p.ln()))
                    .collect()
            }
        };
        if out.is_empty() {
            return Err(Error::EmptySupport);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_sizes_support() {
        let s = LabelPrior::FixedSizes(vec![2, 2]).support(4, 2).unwrap();
        assert_eq!(s.len(), 6);
        let total: f64 = s.iter().map(|(_, lp)| lp.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(s.iter().all(|(f, _)| f.counts() == vec![2, 2]));
    }

    #[test]
    fn multiset_support_covers_both_orientations() {
        let s = LabelPrior::SizeMultiset(vec![3, 1]).support(4, 2).unwrap();
        assert_eq!(s.len(), 8);
        let fixed = LabelPrior::FixedSizes(vec![3, 1]).support(4, 2).unwrap();
        assert_eq!(fixed.len(), 4);
        let phi = LabelFunction::new(vec![1, 0, 1, 1], 2).unwrap();
        assert!(LabelPrior::FixedSizes(vec![3, 1]).log_prob(&phi).is_none());
        assert!(
            (LabelPrior::SizeMultiset(vec![3, 1]).log_prob(&phi).unwrap() - (-(8f64).ln())).abs()
                < 1e-15
        );
    }

    #[test]
    fn explicit_support_and_errors() {
        let a = LabelFunction::new(vec![0, 1], 2).unwrap();
        let b = LabelFunction::new(vec![1, 1], 2).unwrap();
        let prior = LabelPrior::Explicit(vec![(a.clone(), 0.25), (b, 0.75)]);
        assert_eq!(prior.support(2, 2).unwrap().len(), 2);
        assert!((prior.log_prob(&a).unwrap() - 0.25f64.ln()).abs() < 1e-15);
        assert!(matches!(
            LabelPrior::Explicit(vec![(a.clone(), 0.5)]).support(2, 2),
            Err(Error::Unnormalized(_))
        ));
        assert!(
            matches!(LabelPrior::Explicit(vec![(a, 0.0), (LabelFunction::new(vec![0, 0], 2).unwrap(), 1.0)]).support(2, 2), Ok(v) if v.len() == 1)
        );
        assert!(LabelPrior::FixedSizes(vec![2, 2]).support(5, 2).is_err());
    }

    #[test]
    fn distinct_permutations_of_repeats() {
        assert_eq!(distinct_permutations(&[5, 5]), vec![vec![5, 5]]);
        assert_eq!(distinct_permutations(&[2, 1, 1]).len(), 3);
    }
}
