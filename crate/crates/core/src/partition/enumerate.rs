use crate::{Error, Result};

use super::Partition;

/// Unrestricted enumeration is refused above this point count.
pub const MAX_UNRESTRICTED_N: usize = 15;

/// Any enumeration producing more partitions than this is refused.
pub const MAX_ENUMERATION: u128 = 5_000_000;

/// Number of partitions of `n` points into at most `l` non-empty blocks.
pub fn count_partitions(n: usize, l: usize) -> u128 {
    // Stirling numbers of the second kind, row by row.
    let mut s = vec![0u128; l + 1];
    s[0] = 1;
    for _ in 0..n {
        for k in (1..=l).rev() {
            s[k] = s[k].saturating_mul(k as u128).saturating_add(s[k - 1]);
        }
        s[0] = 0;
    }
    if n == 0 {
        return 1;
    }
    s.iter().fold(0u128, |a, &b| a.saturating_add(b))
}

fn multinomial_partitions(sizes: &[usize]) -> u128 {
    let mut total: u128 = 1;
    let mut placed = 0usize;
    for &s in sizes {
        for j in 1..=s {
            placed += 1;
            total = total.saturating_mul(placed as u128) / j as u128;
        }
    }
    // Blocks of equal size are interchangeable.
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        for f in 1..=(j - i) {
            total /= f as u128;
        }
        i = j;
    }
    total
}

/// All partitions of `0..n` with at most `l` blocks, or with exactly the given
/// multiset of non-zero block sizes, in lexicographic restricted-growth order.
pub fn enumerate_partitions(n: usize, l: usize, sizes: Option<&[usize]>) -> Result<Vec<Partition>> {
    if n == 0 {
        return Err(Error::invalid("cannot enumerate partitions of zero points"));
    }
    let target: Option<Vec<usize>> = match sizes {
        Some(s) => {
            let total: usize = s.iter().sum();
            if total != n {
                return Err(Error::invalid(format!(
                    "block sizes sum to {total}, expected {n}"
                )));
            }
            let mut t: Vec<usize> = s.iter().copied().filter(|&x| x > 0).collect();
            if t.len() > l {
                return Err(Error::TooManyBlocks {
                    blocks: t.len(),
                    labels: l,
                });
            }
            t.sort_unstable();
            let count = multinomial_partitions(&t);
            if count > MAX_ENUMERATION {
                return Err(Error::TooLarge(format!(
                    "{count} partitions with block sizes {s:?}"
                )));
            }
            Some(t)
        }
        None => {
            if n > MAX_UNRESTRICTED_N {
                return Err(Error::TooLarge(format!(
                    "unrestricted enumeration limited to n <= {MAX_UNRESTRICTED_N}, got {n}"
                )));
            }
            let count = count_partitions(n, l);
            if count > MAX_ENUMERATION {
                return Err(Error::TooLarge(format!(
                    "{count} partitions of {n} points into <= {l} blocks"
                )));
            }
            None
        }
    };
    let max_blocks = target.as_ref().map_or(l, |t| t.len());
    let max_block_size = target.as_ref().map_or(n, |t| *t.last().unwrap_or(&0));

    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    let mut block_sizes = vec![0usize; max_blocks.max(1)];
    block_sizes[0] = 1;
    recurse(
        1,
        1,
        &mut rgs,
        &mut block_sizes,
        max_blocks,
        max_block_size,
        target.as_deref(),
        &mut out,
    );
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    i: usize,
    used: usize,
    rgs: &mut [usize],
    block_sizes: &mut [usize],
    max_blocks: usize,
    max_block_size: usize,
    target: Option<&[usize]>,
    out: &mut Vec<Partition>,
) {
    let n = rgs.len();
    if i == n {
        if let Some(t) = target {
            let mut got: Vec<usize> = block_sizes[..used].to_vec();
            got.sort_unstable();
            if got != t {
                return;
            }
        }
        out.push(Partition {
            encoding: rgs.to_vec(),
            num_blocks: used,
        });
        return;
    }
    let limit = if used < max_blocks { used + 1 } else { used };
    for b in 0..limit {
        if block_sizes[b] >= max_block_size {
            continue;
        }
        // Remaining points must be able to fill the blocks still required.
        if let Some(t) = target {
            let new_used = used.max(b + 1);
            if t.len() - new_used > n - i - 1 {
                continue;
            }
        }
        rgs[i] = b;
        block_sizes[b] += 1;
        recurse(
            i + 1,
            used.max(b + 1),
            rgs,
            block_sizes,
            max_blocks,
            max_block_size,
            target,
            out,
        );
        block_sizes[b] -= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        assert_eq!(enumerate_partitions(3, 2, None).unwrap().len(), 4);
        assert_eq!(enumerate_partitions(2, 2, None).unwrap().len(), 2);
        assert_eq!(
            enumerate_partitions(10, 2, Some(&[5, 5])).unwrap().len(),
            126
        );
        assert_eq!(
            enumerate_partitions(10, 2, Some(&[6, 4])).unwrap().len(),
            210
        );
        assert_eq!(enumerate_partitions(4, 4, None).unwrap().len(), 15);
    }

    #[test]
    fn stirling_counts_match_enumeration() {
        for n in 1..=8 {
            for l in 1..=n {
                assert_eq!(
                    count_partitions(n, l),
                    enumerate_partitions(n, l, None).unwrap().len() as u128
                );
            }
        }
        assert_eq!(count_partitions(15, 15), 1_382_958_545);
    }

    #[test]
    fn order_is_lexicographic_and_unique() {
        let all = enumerate_partitions(6, 3, None).unwrap();
        for w in all.windows(2) {
            assert!(w[0] < w[1]);
        }
        let sized = enumerate_partitions(7, 3, Some(&[3, 2, 2])).unwrap();
        assert_eq!(sized.len(), 105);
        for p in &sized {
            let mut s = p.block_sizes();
            s.sort_unstable();
            assert_eq!(s, vec![2, 2, 3]);
        }
    }

    #[test]
    fn zero_sizes_are_ignored() {
        let p = enumerate_partitions(3, 2, Some(&[3, 0])).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].num_blocks(), 1);
    }

    #[test]
    fn guards() {
        assert!(matches!(
            enumerate_partitions(16, 2, None),
            Err(Error::TooLarge(_))
        ));
        assert!(matches!(
            enumerate_partitions(15, 15, None),
            Err(Error::TooLarge(_))
        ));
        assert!(enumerate_partitions(4, 2, Some(&[2, 1])).is_err());
        assert!(matches!(
            enumerate_partitions(3, 2, Some(&[1, 1, 1])),
            Err(Error::TooManyBlocks { .. })
        ));
    }
}
