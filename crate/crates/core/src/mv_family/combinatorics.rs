//! Binomials and the combinatorial number system on `w`-subsets of `{0..n-1}`.
//!
//! Subsets are `u64` bitmasks, so universes are limited to 63 elements. The
//! ranking `K = C(c_w, w) + ... + C(c_1, 1)` with `c_w > ... > c_1` orders
//! same-size subsets colexicographically, which for bitmasks is plain numeric
//! order. [`SameSizeSubsets`] exploits that to stream them without ranking.

use crate::error::{Error, Result};

pub const MAX_UNIVERSE: usize = 63;

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).unwrap_or(u64::MAX)
}

/// Number of subsets of an `n`-set with at most `cap` elements.
pub fn subsets_up_to(n: u64, cap: u64) -> u64 {
    (0..=cap.min(n)).map(|k| binomial(n, k)).sum()
}

/// Greedy unranking: the `w`-subset of `{0..n-1}` with rank `index`.
pub fn index_to_set(index: u64, w: usize, n: usize) -> Result<Vec<usize>> {
    let mask = index_to_mask(index, w, n)?;
    Ok(mask_elements(mask))
}

pub fn index_to_mask(index: u64, w: usize, n: usize) -> Result<u64> {
    if n > MAX_UNIVERSE {
        return Err(Error::Infeasible(format!("universe of {n} elements exceeds {MAX_UNIVERSE}")));
    }
    let size = binomial(n as u64, w as u64);
    if index >= size {
        return Err(Error::IndexOutOfRange { index, size });
    }
    let mut rest = index;
    let mut mask = 0u64;
    let mut upper = n as u64;
    for i in (1..=w as u64).rev() {
        // largest c < upper with C(c, i) <= rest
        let mut c = upper - 1;
        while binomial(c, i) > rest {
            c -= 1;
        }
        rest -= binomial(c, i);
        mask |= 1 << c;
        upper = c;
    }
    debug_assert_eq!(rest, 0);
    Ok(mask)
}

pub fn set_to_index(set: &[usize]) -> u64 {
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    sorted.iter().enumerate().map(|(i, &c)| binomial(c as u64, i as u64 + 1)).sum()
}

pub fn mask_to_index(mask: u64) -> u64 {
    set_to_index(&mask_elements(mask))
}

pub fn mask_elements(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask >> i & 1 == 1).collect()
}

pub fn elements_mask(set: &[usize]) -> u64 {
    set.iter().fold(0, |m, &i| m | 1 << i)
}

/// All `k`-subsets of `{0..n-1}` in rank order (Gosper's hack).
#[derive(Debug, Clone)]
pub struct SameSizeSubsets {
    next: Option<u64>,
    limit: u64,
}

impl SameSizeSubsets {
    pub fn new(n: usize, k: usize) -> Self {
        assert!(n <= MAX_UNIVERSE);
        let next = if k > n { None } else { Some((1u64 << k) - 1) };
        Self { next, limit: 1 << n }
    }
}

impl Iterator for SameSizeSubsets {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let cur = self.next?;
        self.next = if cur == 0 {
            None
        } else {
            let low = cur & cur.wrapping_neg();
            let ripple = cur + low;
            let succ = (((ripple ^ cur) >> 2) / low) | ripple;
            (succ < self.limit).then_some(succ)
        };
        Some(cur)
    }
}

/// Monomials of degree `<= cap` in `n` variables, by (size, rank).
///
/// This order is shared by every vector the matching-vector family emits.
#[derive(Debug, Clone)]
pub struct MonomialOrder {
    n: usize,
    cap: usize,
}

impl MonomialOrder {
    pub fn new(n: usize, cap: usize) -> Self {
        Self { n, cap: cap.min(n) }
    }

    pub fn len(&self) -> usize {
        subsets_up_to(self.n as u64, self.cap as u64) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> MonomialIter {
        MonomialIter { n: self.n, cap: self.cap, size: 0, inner: SameSizeSubsets::new(self.n, 0) }
    }

    /// Position of a monomial in the order.
    pub fn position(&self, mask: u64) -> Option<usize> {
        let size = mask.count_ones() as usize;
        if size > self.cap || mask >> self.n != 0 {
            return None;
        }
        let offset = subsets_up_to(self.n as u64, size as u64) - binomial(self.n as u64, size as u64);
        Some((offset + mask_to_index(mask)) as usize)
    }
}

/// Streaming walk over a [`MonomialOrder`]; constant state.
#[derive(Debug, Clone)]
pub struct MonomialIter {
    n: usize,
    cap: usize,
    size: usize,
    inner: SameSizeSubsets,
}

impl Iterator for MonomialIter {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            if let Some(mask) = self.inner.next() {
                return Some(mask);
            }
            if self.size >= self.cap {
                return None;
            }
            self.size += 1;
            self.inner = SameSizeSubsets::new(self.n, self.size);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binomial_small() {
        assert_eq!(binomial(3, 2), 3);
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(4, 5), 0);
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(60, 30), 118264581564861424);
    }

    #[test]
    fn unrank_examples() {
        assert_eq!(index_to_set(0, 2, 3).unwrap(), vec![0, 1]);
        assert_eq!(index_to_set(2, 2, 3).unwrap(), vec![1, 2]);
        assert_eq!(index_to_set(1, 2, 3).unwrap(), vec![0, 2]);
        assert!(matches!(index_to_set(3, 2, 3), Err(Error::IndexOutOfRange { index: 3, size: 3 })));
    }

    #[test]
    fn gosper_matches_unranking() {
        for n in 0..=9 {
            for k in 0..=n {
                let streamed: Vec<u64> = SameSizeSubsets::new(n, k).collect();
                let ranked: Vec<u64> =
                    (0..binomial(n as u64, k as u64)).map(|i| index_to_mask(i, k, n).unwrap()).collect();
                assert_eq!(streamed, ranked, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn monomial_positions() {
        let order = MonomialOrder::new(5, 3);
        assert_eq!(order.len(), 1 + 5 + 10 + 10);
        for (pos, mask) in order.iter().enumerate() {
            assert_eq!(order.position(mask), Some(pos));
        }
        assert_eq!(order.position(0b1111), None);
    }

    proptest! {
        #[test]
        fn rank_round_trip(n in 1usize..20, w_frac in 0.0f64..1.0, k_frac in 0.0f64..1.0) {
            let w = ((n as f64) * w_frac) as usize;
            let size = binomial(n as u64, w as u64);
            let k = ((size as f64) * k_frac) as u64 % size;
            let set = index_to_set(k, w, n).unwrap();
            prop_assert_eq!(set.len(), w);
            prop_assert!(set.iter().all(|&c| c < n));
            prop_assert_eq!(set_to_index(&set), k);
        }
    }
}
