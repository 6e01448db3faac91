//! Explicit matching-vector families over `Z_m^d`.
//!
//! For each `w`-subset `T_i` of a universe of `h_sets` variables, `f_{T_i}` is
//! the combined weight-indicator polynomial with every variable outside `T_i`
//! set to zero. `u_i` lists the coefficients of `f_{T_i}` and `v_j` lists the
//! monomial evaluations at the indicator of `T_j`, so that
//! `<u_i, v_j> = f(1_{T_i ∩ T_j})`: zero on the diagonal and a canonical-set
//! value elsewhere. A final flip coordinate turns that into the
//! "diagonal is exactly 1" convention used everywhere else.
//!
//! Vectors are available both materialized and as streaming coordinate
//! generators with constant state; the two agree coordinate by coordinate.

pub mod combinatorics;
mod params;
pub mod poly;
mod verify;

use std::io::Write;

pub use combinatorics::{index_to_set, set_to_index, MonomialOrder};
pub use params::{select_params, MvParams, MAX_WEIGHT};
pub use poly::{combined_poly, weight_indicator_poly, MultilinearPoly};
pub use verify::{verify_family, FamilyAccess, FamilyReport, MaterializedFamily, VerifyMode, Violation, ViolationKind};

use crate::error::{Error, Result};
use crate::modmath::{dot_mod, neg_mod, PrimeBasis};
use combinatorics::{index_to_mask, MonomialIter};

/// Which half of the family a vector comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VectorKind {
    U,
    V,
}

#[derive(Debug, Clone)]
pub struct MvFamily {
    params: MvParams,
    order: MonomialOrder,
    // f is symmetric, so a monomial's coefficient depends only on its size.
    coeff_by_size: Vec<u64>,
    // pascal[c][k] = C(c, k), for ranking monomials inside a set.
    pascal: Vec<Vec<u64>>,
    // Monomials of size below k come first; size_offset[k] counts them.
    size_offset: Vec<u64>,
}

impl MvFamily {
    pub fn new(params: MvParams) -> Result<Self> {
        params.check()?;
        let f = combined_poly(&params.basis, &params.exponents, params.w, params.h_sets)?;
        if f.degree().unwrap_or(0) > params.degree_cap {
            return Err(Error::Invariant("combined polynomial exceeds the degree cap".into()));
        }
        let mut coeff_by_size = vec![None; params.degree_cap + 1];
        let order = MonomialOrder::new(params.h_sets, params.degree_cap);
        for mask in order.iter() {
            let c = f.coeff(mask);
            let slot = &mut coeff_by_size[mask.count_ones() as usize];
            match *slot {
                None => *slot = Some(c),
                Some(prev) if prev != c => {
                    return Err(Error::Invariant("combined polynomial is not symmetric".into()));
                }
                Some(_) => {}
            }
        }
        let coeff_by_size = coeff_by_size.into_iter().map(|c| c.unwrap_or(0)).collect();
        let cap = params.degree_cap.min(params.h_sets);
        let pascal = (0..=params.h_sets as u64)
            .map(|c| (0..=cap as u64 + 1).map(|k| combinatorics::binomial(c, k)).collect())
            .collect();
        let size_offset = (0..=cap as u64)
            .map(|k| if k == 0 { 0 } else { combinatorics::subsets_up_to(params.h_sets as u64, k - 1) })
            .collect();
        Ok(Self { params, order, coeff_by_size, pascal, size_offset })
    }

    /// Parameters from [`select_params`], then the family.
    pub fn for_ell(ell: u32, basis: &PrimeBasis) -> Result<Self> {
        Self::new(select_params(ell, basis)?)
    }

    pub fn params(&self) -> &MvParams {
        &self.params
    }

    pub fn basis(&self) -> &PrimeBasis {
        &self.params.basis
    }

    pub fn modulus(&self) -> u64 {
        self.params.basis.modulus()
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    /// Number of usable indices, `C(h_sets, w)`.
    pub fn size(&self) -> u64 {
        self.params.family_size
    }

    pub fn monomials(&self) -> &MonomialOrder {
        &self.order
    }

    /// Bitmask of the set `T_i`.
    pub fn set_mask(&self, i: u64) -> Result<u64> {
        index_to_mask(i, self.params.w as usize, self.params.h_sets)
    }

    /// Streaming coordinates of `u_i` or `v_i`, flip coordinate last.
    pub fn coords(&self, kind: VectorKind, i: u64) -> Result<FamilyCoords<'_>> {
        Ok(FamilyCoords {
            kind,
            set: self.set_mask(i)?,
            modulus: self.modulus(),
            coeff_by_size: &self.coeff_by_size,
            monomials: self.order.iter(),
            remaining: self.dim(),
        })
    }

    pub fn u_coords(&self, i: u64) -> Result<FamilyCoords<'_>> {
        self.coords(VectorKind::U, i)
    }

    pub fn v_coords(&self, j: u64) -> Result<FamilyCoords<'_>> {
        self.coords(VectorKind::V, j)
    }

    pub fn vector(&self, kind: VectorKind, i: u64) -> Result<Vec<u64>> {
        Ok(self.coords(kind, i)?.collect())
    }

    pub fn u_vector(&self, i: u64) -> Result<Vec<u64>> {
        self.vector(VectorKind::U, i)
    }

    pub fn v_vector(&self, j: u64) -> Result<Vec<u64>> {
        self.vector(VectorKind::V, j)
    }

    /// `u_i` before the flip: coefficients of `f_{T_i}` in monomial order.
    pub fn raw_u_vector(&self, i: u64) -> Result<Vec<u64>> {
        let set = self.set_mask(i)?;
        Ok(self
            .order
            .iter()
            .map(|mask| if mask & !set == 0 { self.coeff_by_size[mask.count_ones() as usize] } else { 0 })
            .collect())
    }

    /// `v_j` before the flip: monomial evaluations at the indicator of `T_j`.
    pub fn raw_v_vector(&self, j: u64) -> Result<Vec<u64>> {
        let set = self.set_mask(j)?;
        Ok(self.order.iter().map(|mask| u64::from(mask & !set == 0)).collect())
    }

    /// `<register, w_i>` streamed, without materializing `w_i`.
    pub fn dot(&self, kind: VectorKind, i: u64, register: &[u64]) -> Result<u64> {
        if register.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: register.len() });
        }
        let m = self.modulus();
        let set = self.set_mask(i)?;
        let cap = self.size_offset.len() - 1;
        // only monomials inside T_i contribute, so walk the submasks of the set
        let mut acc = 0u64;
        let mut sub = set;
        loop {
            let size = sub.count_ones() as usize;
            if size <= cap {
                let x = register[self.position_in(sub, size)];
                acc += match kind {
                    VectorKind::U => x * self.coeff_by_size[size],
                    VectorKind::V => x,
                };
                if acc >= 1 << 62 {
                    acc %= m;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & set;
        }
        let flip = register[self.dim() - 1];
        Ok(match kind {
            VectorKind::U => (acc + flip) % m,
            VectorKind::V => (neg_mod(acc % m, m) + flip) % m,
        })
    }

    // Same as `MonomialOrder::position`, from the cached binomials.
    fn position_in(&self, mut mask: u64, size: usize) -> usize {
        let mut pos = self.size_offset[size];
        let mut k = 1;
        while mask != 0 {
            let c = mask.trailing_zeros() as usize;
            pos += self.pascal[c][k];
            mask &= mask - 1;
            k += 1;
        }
        pos as usize
    }

    pub fn materialize(&self) -> Result<MaterializedFamily> {
        let us = (0..self.size()).map(|i| self.u_vector(i)).collect::<Result<Vec<_>>>()?;
        let vs = (0..self.size()).map(|i| self.v_vector(i)).collect::<Result<Vec<_>>>()?;
        Ok(MaterializedFamily::new(self.basis().clone(), us, vs))
    }

    /// Diagnostic dump: a header with the parameters, then one line per vector.
    pub fn export(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "mvfamily {}", self.params)?;
        for kind in [VectorKind::U, VectorKind::V] {
            let tag = if kind == VectorKind::U { "u" } else { "v" };
            for i in 0..self.size() {
                let coords: Vec<String> = self.coords(kind, i)?.map(|c| c.to_string()).collect();
                writeln!(out, "{tag} {i} {}", coords.join(" "))?;
            }
        }
        Ok(())
    }
}

impl FamilyAccess for MvFamily {
    fn basis(&self) -> &PrimeBasis {
        &self.params.basis
    }

    fn size(&self) -> u64 {
        self.params.family_size
    }

    fn dim(&self) -> usize {
        self.params.dim
    }

    fn u_vector(&self, i: u64) -> Vec<u64> {
        MvFamily::u_vector(self, i).expect("index checked by caller")
    }

    fn v_vector(&self, j: u64) -> Vec<u64> {
        MvFamily::v_vector(self, j).expect("index checked by caller")
    }
}

/// Constant-state generator for one family vector.
#[derive(Debug, Clone)]
pub struct FamilyCoords<'a> {
    kind: VectorKind,
    set: u64,
    modulus: u64,
    coeff_by_size: &'a [u64],
    monomials: MonomialIter,
    remaining: usize,
}

impl Iterator for FamilyCoords<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        if self.remaining == 0 {
            // flip coordinate
            return Some(1);
        }
        let mask = self.monomials.next()?;
        let inside = mask & !self.set == 0;
        Some(match (self.kind, inside) {
            (_, false) => 0,
            (VectorKind::U, true) => self.coeff_by_size[mask.count_ones() as usize],
            (VectorKind::V, true) => self.modulus - 1,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for FamilyCoords<'_> {}

/// `(u || 1, -v || 1)`, so that `<u', v'> = 1 - <u, v>`.
pub fn flip_transform(u: &[u64], v: &[u64], modulus: u64) -> Result<(Vec<u64>, Vec<u64>)> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch { expected: u.len(), found: v.len() });
    }
    let mut uf = u.to_vec();
    uf.push(1);
    let mut vf: Vec<u64> = v.iter().map(|&x| neg_mod(x % modulus, modulus)).collect();
    vf.push(1);
    Ok((uf, vf))
}

pub fn inner_product(a: &[u64], b: &[u64], modulus: u64) -> u64 {
    dot_mod(a, b, modulus)
}
