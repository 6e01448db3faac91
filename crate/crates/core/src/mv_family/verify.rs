use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::modmath::{dot_mod, PrimeBasis};

/// Anything that can hand out the `u` and `v` sides of a candidate family.
pub trait FamilyAccess {
    fn basis(&self) -> &PrimeBasis;
    fn size(&self) -> u64;
    fn dim(&self) -> usize;
    fn u_vector(&self, i: u64) -> Vec<u64>;
    fn v_vector(&self, j: u64) -> Vec<u64>;
}

/// A family held as explicit vectors; handy for corruption experiments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaterializedFamily {
    basis: PrimeBasis,
    us: Vec<Vec<u64>>,
    vs: Vec<Vec<u64>>,
}

impl MaterializedFamily {
    pub fn new(basis: PrimeBasis, us: Vec<Vec<u64>>, vs: Vec<Vec<u64>>) -> Self {
        Self { basis, us, vs }
    }

    /// Keep only the first `n` pairs.
    pub fn truncate(&mut self, n: usize) {
        self.us.truncate(n);
        self.vs.truncate(n);
    }

    pub fn u_mut(&mut self, i: usize) -> &mut Vec<u64> {
        &mut self.us[i]
    }

    pub fn v_mut(&mut self, j: usize) -> &mut Vec<u64> {
        &mut self.vs[j]
    }
}

impl FamilyAccess for MaterializedFamily {
    fn basis(&self) -> &PrimeBasis {
        &self.basis
    }

    fn size(&self) -> u64 {
        self.us.len() as u64
    }

    fn dim(&self) -> usize {
        self.us.first().map_or(0, Vec::len)
    }

    fn u_vector(&self, i: u64) -> Vec<u64> {
        self.us[i as usize].clone()
    }

    fn v_vector(&self, j: u64) -> Vec<u64> {
        self.vs[j as usize].clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    Exhaustive,
    /// `samples` random off-diagonal pairs plus every diagonal pair.
    Sampled {
        samples: u64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    DiagonalNotOne,
    OffDiagonalIsOne,
    /// Residue modulo this prime is neither 0 nor 1.
    ResidueNotBinary {
        prime: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub i: u64,
    pub j: u64,
    pub inner_product: u64,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyReport {
    pub pairs_checked: u64,
    pub first_violation: Option<Violation>,
}

impl FamilyReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

impl fmt::Display for FamilyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.first_violation {
            None => write!(f, "pass ({} pairs)", self.pairs_checked),
            Some(v) => write!(
                f,
                "fail after {} pairs: <u_{}, v_{}> = {} ({:?})",
                self.pairs_checked, v.i, v.j, v.inner_product, v.kind
            ),
        }
    }
}

fn check_pair(basis: &PrimeBasis, i: u64, j: u64, ip: u64) -> Option<Violation> {
    let kind = if let Some(&p) = basis.primes().iter().find(|&&p| ip % p > 1) {
        ViolationKind::ResidueNotBinary { prime: p }
    } else if i == j && ip != 1 {
        ViolationKind::DiagonalNotOne
    } else if i != j && ip == 1 {
        ViolationKind::OffDiagonalIsOne
    } else {
        return None;
    };
    Some(Violation { i, j, inner_product: ip, kind })
}

/// Check both matching-vector axioms; failures are reported, not raised.
pub fn verify_family(family: &impl FamilyAccess, mode: VerifyMode) -> FamilyReport {
    let basis = family.basis();
    let m = basis.modulus();
    let n = family.size();
    let mut checked = 0u64;
    let mut run = |i: u64, j: u64, u: &[u64]| {
        checked += 1;
        check_pair(basis, i, j, dot_mod(u, &family.v_vector(j), m))
    };
    let first_violation = match mode {
        VerifyMode::Exhaustive => (0..n).find_map(|i| {
            let u = family.u_vector(i);
            (0..n).find_map(|j| run(i, j, &u))
        }),
        VerifyMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let diagonal = (0..n).find_map(|i| run(i, i, &family.u_vector(i)));
            diagonal.or_else(|| {
                (0..samples).find_map(|_| {
                    let i = rng.random_range(0..n);
                    let j = rng.random_range(0..n);
                    run(i, j, &family.u_vector(i))
                })
            })
        }
    };
    FamilyReport { pairs_checked: checked, first_violation }
}
