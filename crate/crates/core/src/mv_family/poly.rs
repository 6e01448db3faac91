//! Multilinear polynomials over `Z_q` with subset-indexed coefficients.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::modmath::{add_mod, mul_mod, neg_mod, sub_mod, PrimeBasis};

/// `sum_S c_S * prod_{i in S} z_i`, keyed by the bitmask of `S`.
///
/// Only nonzero coefficients are stored. Products reduce `z_i^2 -> z_i`,
/// which is exact on 0/1 points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultilinearPoly {
    num_vars: usize,
    modulus: u64,
    coeffs: BTreeMap<u64, u64>,
}

impl MultilinearPoly {
    pub fn zero(num_vars: usize, modulus: u64) -> Self {
        Self { num_vars, modulus, coeffs: BTreeMap::new() }
    }

    pub fn constant(num_vars: usize, modulus: u64, c: u64) -> Self {
        let mut p = Self::zero(num_vars, modulus);
        p.set(0, c);
        p
    }

    /// Elementary symmetric polynomial `e_k(z_1..z_n)`.
    pub fn elementary_symmetric(num_vars: usize, modulus: u64, k: usize) -> Self {
        let mut p = Self::zero(num_vars, modulus);
        if k <= num_vars {
            for mask in super::combinatorics::SameSizeSubsets::new(num_vars, k) {
                p.set(mask, 1);
            }
        }
        p
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn coeff(&self, mask: u64) -> u64 {
        self.coeffs.get(&mask).copied().unwrap_or(0)
    }

    pub fn set(&mut self, mask: u64, c: u64) {
        let c = c % self.modulus;
        if c == 0 {
            self.coeffs.remove(&mask);
        } else {
            self.coeffs.insert(mask, c);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.coeffs.iter().map(|(&k, &v)| (k, v))
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.keys().map(|m| m.count_ones() as usize).max()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (mask, c) in other.terms() {
            out.set(mask, add_mod(out.coeff(mask), c, self.modulus));
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (mask, c) in other.terms() {
            out.set(mask, sub_mod(out.coeff(mask), c, self.modulus));
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = Self::zero(self.num_vars, self.modulus);
        for (mask, c) in self.terms() {
            out.set(mask, neg_mod(c, self.modulus));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let q = self.modulus;
        let mut acc: BTreeMap<u64, u64> = BTreeMap::new();
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                let slot = acc.entry(ma | mb).or_insert(0);
                *slot = add_mod(*slot, mul_mod(ca, cb, q), q);
            }
        }
        acc.retain(|_, c| *c != 0);
        Self { num_vars: self.num_vars, modulus: q, coeffs: acc }
    }

    pub fn pow(&self, exp: u32) -> Self {
        let mut acc = Self::constant(self.num_vars, self.modulus, 1);
        for _ in 0..exp {
            acc = acc.mul(self);
        }
        acc
    }

    /// Value at the 0/1 point whose support is `point`.
    pub fn eval_mask(&self, point: u64) -> u64 {
        self.terms().filter(|(mask, _)| mask & !point == 0).fold(0, |acc, (_, c)| add_mod(acc, c, self.modulus))
    }

    /// `f` with `z_j = 0` for every `j` outside `support`.
    pub fn restrict(&self, support: u64) -> Self {
        let coeffs = self.coeffs.iter().filter(|(m, _)| *m & !support == 0).map(|(&k, &v)| (k, v)).collect();
        Self { num_vars: self.num_vars, modulus: self.modulus, coeffs }
    }
}

/// Multilinear `f` over `Z_p` of degree `<= p^e - 1` with, on 0/1 inputs,
/// `f(x) = 0` when `|x| = w (mod p^e)` and `f(x) = 1` otherwise.
///
/// Built as `1 - prod_j (1 - (e_{p^j}(x) - w_j)^(p-1))`, where `w_j` is the
/// `j`-th base-`p` digit of `w`. On 0/1 points `e_{p^j}(x) = C(|x|, p^j)`,
/// which by Lucas is the `j`-th base-`p` digit of `|x|`, and Fermat turns each
/// digit comparison into a 0/1 indicator.
pub fn weight_indicator_poly(p: u64, e: u32, w: u64, num_vars: usize) -> MultilinearPoly {
    let mut prod = MultilinearPoly::constant(num_vars, p, 1);
    let mut digits = w % p.pow(e);
    let one = MultilinearPoly::constant(num_vars, p, 1);
    for j in 0..e {
        let w_j = digits % p;
        digits /= p;
        let e_k = MultilinearPoly::elementary_symmetric(num_vars, p, p.pow(j) as usize);
        let diff = e_k.sub(&MultilinearPoly::constant(num_vars, p, w_j));
        let indicator = one.sub(&diff.pow((p - 1) as u32));
        prod = prod.mul(&indicator);
    }
    one.sub(&prod)
}

/// CRT-combine per-prime weight indicators into one polynomial over `Z_m`.
///
/// On 0/1 points the result is `0 mod p_i` exactly when `|x| = w (mod p_i^e_i)`
/// and `1 mod p_i` otherwise.
pub fn combined_poly(basis: &PrimeBasis, exponents: &[u32], w: u64, num_vars: usize) -> Result<MultilinearPoly> {
    let parts: Vec<MultilinearPoly> =
        basis.primes().iter().zip(exponents).map(|(&p, &e)| weight_indicator_poly(p, e, w, num_vars)).collect();
    let mut support: Vec<u64> = parts.iter().flat_map(|f| f.terms().map(|(m, _)| m)).collect();
    support.sort_unstable();
    support.dedup();
    let mut out = MultilinearPoly::zero(num_vars, basis.modulus());
    let mut residues = vec![0; parts.len()];
    for mask in support {
        for (r, f) in residues.iter_mut().zip(&parts) {
            *r = f.coeff(mask);
        }
        out.set(mask, basis.crt_combine(&residues)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_examples() {
        let f = weight_indicator_poly(3, 1, 2, 3);
        assert_eq!(f.eval_mask(0b011), 0);
        assert_eq!(f.eval_mask(0b001), 1);
        let g = weight_indicator_poly(3, 1, 0, 3);
        assert_eq!(g.eval_mask(0), 0);
    }

    #[test]
    fn indicator_brute_force() {
        for &(p, e) in &[(3u64, 1u32), (3, 2), (5, 1), (7, 1)] {
            let pe = p.pow(e);
            for n in 1..=8usize {
                for w in 0..pe + 2 {
                    let f = weight_indicator_poly(p, e, w, n);
                    assert!((f.degree().unwrap_or(0) as u64) < pe);
                    for x in 0..1u64 << n {
                        let want = if x.count_ones() as u64 % pe == w % pe { 0 } else { 1 };
                        assert_eq!(f.eval_mask(x), want, "p={p} e={e} w={w} n={n} x={x:b}");
                    }
                }
            }
        }
    }

    #[test]
    fn restriction_zeroes_outside_support() {
        let f = weight_indicator_poly(3, 1, 2, 4);
        let r = f.restrict(0b0101);
        for x in 0..16u64 {
            assert_eq!(r.eval_mask(x), f.eval_mask(x & 0b0101));
        }
    }

    #[test]
    fn combined_examples() {
        let basis = PrimeBasis::new(&[3, 5]).unwrap();
        let f = combined_poly(&basis, &[1, 1], 2, 3).unwrap();
        assert_eq!(f.eval_mask(0b011), 0);
        assert!([1, 6, 10].contains(&f.eval_mask(0b001)));
        assert!([1, 6, 10].contains(&f.eval_mask(0)));
    }
}
