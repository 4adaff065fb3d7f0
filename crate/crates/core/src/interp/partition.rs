//! Set partitions of a support and the probability that a uniformly random
//! map `P: [n] → [m]` induces a given one.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

/// All set partitions of `{0, …, s−1}` as restricted growth strings: entry
/// `i` is the block of element `i`, blocks numbered by first appearance.
pub fn set_partitions(s: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if s == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut cur = vec![0usize; s];
    fn rec(pos: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for b in 0..=max + 1 {
            cur[pos] = b;
            rec(pos + 1, max.max(b), cur, out);
        }
    }
    // element 0 always opens block 0
    rec(1, 0, &mut cur, &mut out);
    out
}

/// Number of blocks of a restricted growth string.
pub fn block_count(rgs: &[usize]) -> usize {
    rgs.iter().max().map_or(0, |m| m + 1)
}

/// Bitmask (over positions of the support) of every block.
pub fn block_masks(rgs: &[usize]) -> Vec<u64> {
    let mut masks = vec![0u64; block_count(rgs)];
    for (i, &b) in rgs.iter().enumerate() {
        masks[b] |= 1 << i;
    }
    masks
}

/// Partition of `support` induced by `p`, as a restricted growth string.
pub fn induced(p: &[usize], support: &[usize]) -> Vec<usize> {
    let mut seen: Vec<usize> = Vec::new();
    support
        .iter()
        .map(|&j| {
            let slot = p[j];
            match seen.iter().position(|&s| s == slot) {
                Some(b) => b,
                None => {
                    seen.push(slot);
                    seen.len() - 1
                }
            }
        })
        .collect()
}

/// `m (m−1) ⋯ (m−b+1) / m^s` in exact arithmetic.
pub fn induce_probability(m: u64, s: usize, b: usize) -> BigRational {
    if b as u64 > m {
        return BigRational::from_integer(BigInt::from(0));
    }
    let mut num = BigInt::one();
    for i in 0..b as u64 {
        num *= BigInt::from(m - i);
    }
    BigRational::new(num, BigInt::from(m).pow(s as u32))
}

/// Floating version of [`induce_probability`].
pub fn induce_probability_f64(m: u64, s: usize, b: usize) -> f64 {
    if b as u64 > m {
        return 0.0;
    }
    let mut v = 1.0;
    for i in 0..b as u64 {
        v *= (m - i) as f64 / m as f64;
    }
    v / (m as f64).powi(s as i32 - b as i32)
}

/// Counts, over all `m^n` maps, how often each partition of `support` is
/// induced.
pub fn enumerate_induced(n: usize, m: usize, support: &[usize]) -> BTreeMap<Vec<usize>, u64> {
    let mut counts = BTreeMap::new();
    let total = m.pow(n as u32);
    let mut p = vec![0usize; n];
    for _ in 0..total {
        *counts.entry(induced(&p, support)).or_insert(0u64) += 1;
        for digit in p.iter_mut().rev() {
            *digit += 1;
            if *digit < m {
                break;
            }
            *digit = 0;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        let bell = [1usize, 1, 2, 5, 15, 52, 203];
        for (s, &b) in bell.iter().enumerate() {
            assert_eq!(set_partitions(s).len(), b);
        }
    }

    #[test]
    fn partitions_are_canonical() {
        for p in set_partitions(4) {
            let mut max = 0;
            assert_eq!(p[0], 0);
            for &b in &p[1..] {
                assert!(b <= max + 1);
                max = max.max(b);
            }
        }
    }

    #[test]
    fn probabilities_match_enumeration_exactly() {
        for n in 1..=5usize {
            for m in 1..=5usize {
                for s in 1..=n.min(4) {
                    // supports at the front and at the back
                    for support in [(0..s).collect::<Vec<_>>(), (n - s..n).collect()] {
                        let counts = enumerate_induced(n, m, &support);
                        let total = BigRational::from_integer(BigInt::from(m).pow(n as u32));
                        for rgs in set_partitions(s) {
                            let got = BigRational::from_integer(BigInt::from(
                                counts.get(&rgs).copied().unwrap_or(0),
                            )) / total.clone();
                            let want = induce_probability(m as u64, s, block_count(&rgs));
                            assert_eq!(got, want, "n={n} m={m} rgs={rgs:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn float_probability_agrees() {
        for m in 1..=8u64 {
            for s in 1..=4 {
                for b in 1..=s {
                    let exact = crate::vander::exact::q_to_f64(&induce_probability(m, s, b));
                    assert!((induce_probability_f64(m, s, b) - exact).abs() < 1e-15);
                }
            }
        }
    }
}
