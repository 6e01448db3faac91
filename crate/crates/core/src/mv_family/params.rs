use std::fmt;

use super::combinatorics::{binomial, subsets_up_to, MAX_UNIVERSE};
use crate::error::{Error, Result};
use crate::modmath::PrimeBasis;

/// Largest set weight `select_params` will try.
pub const MAX_WEIGHT: u64 = 40;

/// Parameters of the Grolmusz-style family over `Z_m^d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MvParams {
    pub basis: PrimeBasis,
    /// Weight of the sets `T_i`.
    pub w: u64,
    /// Universe size the sets are drawn from.
    pub h_sets: usize,
    pub exponents: Vec<u32>,
    /// `max_i p_i^e_i - 1`; the degree of the combined polynomial.
    pub max_degree: usize,
    /// Monomials of size `<= degree_cap` index the coordinates.
    pub degree_cap: usize,
    pub family_size: u64,
    /// Dimension including the trailing flip coordinate.
    pub dim: usize,
    pub target_ell: u32,
}

/// Smallest `h` with `h^t >= w^(t+1)`, i.e. `ceil(w^(1 + 1/t))`.
fn ceil_pow_ratio(w: u64, t: u32) -> u64 {
    let target = (w as u128).pow(t + 1);
    let mut h = 1u64;
    while (h as u128).pow(t) < target {
        h += 1;
    }
    h
}

/// `floor((m*w)^(1/t))`.
fn floor_root(mw: u64, t: u32) -> u64 {
    let mut c = 0u64;
    while ((c + 1) as u128).pow(t) <= mw as u128 {
        c += 1;
    }
    c
}

impl MvParams {
    /// Derive everything from `(basis, w)`; `None` when `w` does not give a
    /// valid family or one of size `>= 2^ell`.
    pub fn for_weight(ell: u32, basis: &PrimeBasis, w: u64) -> Option<Self> {
        let t = basis.t() as u32;
        let m = basis.modulus();
        let mw = m.checked_mul(w)?;
        let h_sets = ceil_pow_ratio(w, t) as usize;
        if h_sets > MAX_UNIVERSE || (h_sets as u64) < w {
            return None;
        }
        // e_i minimal (and >= 1) with p_i^e_i > (mw)^(1/t) / p_i,
        // i.e. (p_i^(e_i + 1))^t > m w.
        let exponents: Vec<u32> = basis
            .primes()
            .iter()
            .map(|&p| {
                let mut e = 1u32;
                while (p as u128).pow(e + 1).pow(t) <= mw as u128 {
                    e += 1;
                }
                e
            })
            .collect();
        let prime_powers: Vec<u64> = basis.primes().iter().zip(&exponents).map(|(&p, &e)| p.pow(e)).collect();
        let product: u128 = prime_powers.iter().map(|&q| q as u128).product();
        if product <= w as u128 {
            return None;
        }
        let max_degree = (*prime_powers.iter().max()? - 1) as usize;
        let degree_cap = (floor_root(mw, t) as usize).max(max_degree).min(h_sets);
        let family_size = binomial(h_sets as u64, w);
        if family_size < 1u64 << ell {
            return None;
        }
        let dim = subsets_up_to(h_sets as u64, degree_cap as u64) as usize + 1;
        Some(Self {
            basis: basis.clone(),
            w,
            h_sets,
            exponents,
            max_degree,
            degree_cap,
            family_size,
            dim,
            target_ell: ell,
        })
    }

    /// Dimension given by the closed-form count
    /// `1 + sum_{j <= floor((mw)^(1/t))} C(h, j)`.
    pub fn closed_form_dim(&self) -> u64 {
        let t = self.basis.t() as u32;
        let cap = floor_root(self.basis.modulus() * self.w, t);
        1 + subsets_up_to(self.h_sets as u64, cap)
    }

    /// Every stated invariant, checked explicitly.
    pub fn check(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Invariant(msg));
        let t = self.basis.t() as u32;
        let product: u128 =
            self.basis.primes().iter().zip(&self.exponents).map(|(&p, &e)| (p as u128).pow(e)).product();
        if product <= self.w as u128 {
            return fail(format!("prod p_i^e_i = {product} <= w = {}", self.w));
        }
        if (self.h_sets as u64) < self.w {
            return fail("h_sets < w".into());
        }
        if self.family_size != binomial(self.h_sets as u64, self.w) || self.family_size < 1 << self.target_ell {
            return fail("family size".into());
        }
        let d_max = self.basis.primes().iter().zip(&self.exponents).map(|(&p, &e)| p.pow(e) - 1).max();
        if d_max != Some(self.max_degree as u64) {
            return fail("max degree".into());
        }
        let bound = floor_root(self.basis.modulus() * self.w, t);
        for (&p, &e) in self.basis.primes().iter().zip(&self.exponents) {
            // p^e <= (mw)^(1/t), except where e was forced up to 1
            if p.pow(e) > bound && e > 1 {
                return fail(format!("{p}^{e} exceeds floor((mw)^(1/t)) = {bound}"));
            }
        }
        if self.dim != subsets_up_to(self.h_sets as u64, self.degree_cap as u64) as usize + 1 {
            return fail("dimension does not match monomial count".into());
        }
        if self.degree_cap as u64 > bound.max(self.max_degree as u64) {
            return fail("degree cap exceeds floor((mw)^(1/t))".into());
        }
        Ok(())
    }
}

impl fmt::Display for MvParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e: Vec<String> = self.exponents.iter().map(u32::to_string).collect();
        write!(
            f,
            "primes={} w={} h={} e={} D={} cap={} N={} d={} ell={}",
            self.basis,
            self.w,
            self.h_sets,
            e.join(","),
            self.max_degree,
            self.degree_cap,
            self.family_size,
            self.dim,
            self.target_ell
        )
    }
}

/// Smallest weight `w` whose family has at least `2^ell` members.
pub fn select_params(ell: u32, basis: &PrimeBasis) -> Result<MvParams> {
    if ell == 0 || ell > 62 {
        return Err(Error::Infeasible(format!("ell = {ell} out of range")));
    }
    (1..=MAX_WEIGHT)
        .find_map(|w| MvParams::for_weight(ell, basis, w))
        .ok_or_else(|| Error::Infeasible(format!("no weight <= {MAX_WEIGHT} gives 2^{ell} sets over {basis}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(p: &[u64]) -> PrimeBasis {
        PrimeBasis::new(p).unwrap()
    }

    #[test]
    fn selection_examples() {
        let p = select_params(1, &basis(&[3, 5])).unwrap();
        assert_eq!((p.w, p.h_sets, p.family_size), (2, 3, 3));
        assert_eq!((p.exponents.clone(), p.max_degree, p.dim), (vec![1, 1], 4, 9));

        let p = select_params(2, &basis(&[3, 5])).unwrap();
        assert_eq!((p.w, p.h_sets, p.family_size, p.dim), (3, 6, 20, 65));
        assert_eq!(p.exponents, vec![1, 1]);

        let p = select_params(1, &basis(&[3])).unwrap();
        assert_eq!((p.w, p.h_sets, p.family_size, p.exponents.clone()), (2, 4, 6, vec![1]));
        assert_eq!(p.dim as u64, p.closed_form_dim());
    }

    #[test]
    fn params_invariants_hold() {
        for primes in [&[3u64][..], &[5][..], &[3, 5][..], &[3, 7][..], &[3, 5, 7][..]] {
            for ell in 1..=5 {
                let p = select_params(ell, &basis(primes)).unwrap();
                p.check().unwrap();
                assert!(p.dim as u64 <= p.closed_form_dim() || p.degree_cap == p.max_degree);
            }
        }
    }

    #[test]
    fn infeasible_ell() {
        assert!(matches!(select_params(0, &basis(&[3])), Err(Error::Infeasible(_))));
        assert!(matches!(select_params(60, &basis(&[3])), Err(Error::Infeasible(_))));
    }

    #[test]
    fn root_helpers() {
        assert_eq!(ceil_pow_ratio(2, 2), 3);
        assert_eq!(ceil_pow_ratio(3, 2), 6);
        assert_eq!(ceil_pow_ratio(2, 1), 4);
        assert_eq!(floor_root(45, 2), 6);
        assert_eq!(floor_root(30, 2), 5);
        assert_eq!(floor_root(6, 1), 6);
    }
}
