//! The plain `2^t`-server matching-vector PIR over a prime field `Z_q`.
//!
//! Server `b` receives `r + CRT(b) * u_{i*}` and returns
//! `sum_i DB_i prod_j g_j^{<query, v_i>}`. The signed sum over servers
//! collapses to `DB_{i*} prod_j g_j^{<r, v_{i*}>} (1 - g_j)`.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::modmath::{
    add_mod, dot_mod, inverse_mod, is_prime, mul_mod, multiplicative_order, pow_mod, sub_mod, PrimeWithRoots,
};
use crate::mv_family::MvFamily;

#[derive(Debug, Clone)]
pub struct PirScheme {
    family: MvFamily,
    field: PrimeWithRoots,
    db: Vec<u64>,
}

impl PirScheme {
    /// With `q = None` the smallest prime `q = 1 mod m` is used. Generators
    /// are the smallest elements of the right orders.
    pub fn new(family: MvFamily, q: Option<u64>, db: Vec<u64>) -> Result<Self> {
        let m = family.modulus();
        let q = match q {
            Some(q) => q,
            None => (1..)
                .map(|k| k * m + 1)
                .take_while(|&q| q < 1 << 32)
                .find(|&q| is_prime(q))
                .ok_or(Error::PrimeNotFound { modulus: m, bound: 1 << 32 })?,
        };
        if !is_prime(q) || (q - 1) % m != 0 {
            return Err(Error::Infeasible(format!("need a prime q with {m} | q - 1, got {q}")));
        }
        let generators = family
            .basis()
            .primes()
            .iter()
            .map(|&p| {
                (2..q)
                    .find(|&g| multiplicative_order(g, q) == Some(p))
                    .ok_or_else(|| Error::Invariant(format!("no element of order {p} mod {q}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if db.len() as u64 != family.size() {
            return Err(Error::LengthMismatch { expected: family.size() as usize, found: db.len() });
        }
        if let Some(index) = db.iter().position(|&v| v >= q) {
            return Err(Error::ResidueOutOfRange { index, value: db[index], modulus: q });
        }
        Ok(Self { family, field: PrimeWithRoots { q, generators }, db })
    }

    pub fn field(&self) -> &PrimeWithRoots {
        &self.field
    }

    pub fn family(&self) -> &MvFamily {
        &self.family
    }

    pub fn size(&self) -> u64 {
        self.family.size()
    }

    pub fn servers(&self) -> u64 {
        1 << self.family.basis().t()
    }

    pub fn random_mask(&self, rng: &mut impl Rng) -> Vec<u64> {
        let m = self.family.modulus();
        (0..self.family.dim()).map(|_| rng.random_range(0..m)).collect()
    }

    /// One query per server, indexed by the server's bits.
    pub fn query(&self, i_star: u64, r: &[u64]) -> Result<Vec<Vec<u64>>> {
        let m = self.family.modulus();
        if r.len() != self.family.dim() {
            return Err(Error::DimensionMismatch { expected: self.family.dim(), found: r.len() });
        }
        let u = self.family.u_vector(i_star)?;
        Ok((0..self.servers())
            .map(|b| {
                let c = self.family.basis().crt_bits(b);
                r.iter().zip(&u).map(|(&ri, &ui)| add_mod(ri % m, mul_mod(c, ui, m), m)).collect()
            })
            .collect())
    }

    fn character(&self, exponent: u64) -> u64 {
        let q = self.field.q;
        self.field.generators.iter().fold(1, |acc, &g| mul_mod(acc, pow_mod(g, exponent, q), q))
    }

    pub fn answer(&self, query: &[u64]) -> Result<u64> {
        let q = self.field.q;
        let mut acc = 0;
        for (i, &rec) in self.db.iter().enumerate() {
            let e = self.family.dot(crate::mv_family::VectorKind::V, i as u64, query)?;
            acc = add_mod(acc, mul_mod(rec, self.character(e), q), q);
        }
        Ok(acc)
    }

    pub fn reconstruct(&self, i_star: u64, r: &[u64], answers: &[u64]) -> Result<u64> {
        let q = self.field.q;
        if answers.len() as u64 != self.servers() {
            return Err(Error::LengthMismatch { expected: self.servers() as usize, found: answers.len() });
        }
        let signed = answers.iter().enumerate().fold(0, |acc, (b, &ans)| {
            if b.count_ones() % 2 == 1 {
                sub_mod(acc, ans, q)
            } else {
                add_mod(acc, ans, q)
            }
        });
        let v = self.family.v_vector(i_star)?;
        let e = dot_mod(r, &v, self.family.modulus());
        let denom = self
            .field
            .generators
            .iter()
            .fold(1, |acc, &g| mul_mod(acc, mul_mod(pow_mod(g, e, q), sub_mod(1, g, q), q), q));
        Ok(mul_mod(signed, inverse_mod(denom, q)?, q))
    }

    /// Query, answer and reconstruct in one go.
    pub fn retrieve(&self, i_star: u64, r: &[u64]) -> Result<u64> {
        let answers = self.query(i_star, r)?.iter().map(|qu| self.answer(qu)).collect::<Result<Vec<_>>>()?;
        self.reconstruct(i_star, r, &answers)
    }

    /// For every index, server and coordinate, `r_c -> r_c + CRT(b) u_{i*, c}`
    /// must hit every residue exactly once as `r_c` runs over `Z_m`. Then each
    /// server's query is uniform whatever the index, so any two indices give
    /// the same query distribution.
    pub fn privacy_check(&self) -> Result<PrivacyReport> {
        let m = self.family.modulus();
        let mut report =
            PrivacyReport { indices: self.size(), servers: self.servers(), translations: 0, failure: None };
        let mut seen = vec![0u32; m as usize];
        for i in 0..self.size() {
            let u = self.family.u_vector(i)?;
            for b in 0..self.servers() {
                let c = self.family.basis().crt_bits(b);
                for (coord, &ui) in u.iter().enumerate() {
                    seen.iter_mut().for_each(|s| *s = 0);
                    for rc in 0..m {
                        seen[add_mod(rc, mul_mod(c, ui, m), m) as usize] += 1;
                    }
                    report.translations += 1;
                    if let Some(value) = seen.iter().position(|&k| k != 1) {
                        report.failure = Some(PrivacyFailure { index: i, server: b, coord, value: value as u64 });
                        return Ok(report);
                    }
                }
            }
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrivacyFailure {
    pub index: u64,
    pub server: u64,
    pub coord: usize,
    /// A residue hit other than exactly once.
    pub value: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivacyReport {
    pub indices: u64,
    pub servers: u64,
    pub translations: u64,
    pub failure: Option<PrivacyFailure>,
}

impl PrivacyReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

impl fmt::Display for PrivacyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.failure {
            None => write!(
                f,
                "privacy ok: {} translations bijective over {} indices x {} servers",
                self.translations, self.indices, self.servers
            ),
            Some(e) => write!(
                f,
                "privacy FAILED: index {} server {} coord {} hits residue {} unevenly",
                e.index, e.server, e.coord, e.value
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modmath::PrimeBasis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scheme(db: Vec<u64>) -> PirScheme {
        let fam = MvFamily::for_ell(1, &PrimeBasis::new(&[3]).unwrap()).unwrap();
        PirScheme::new(fam, Some(7), db).unwrap()
    }

    #[test]
    fn field_and_generators() {
        let s = scheme(vec![0; 6]);
        assert_eq!(s.size(), 6);
        assert_eq!(s.field().q, 7);
        assert_eq!(s.field().generators, vec![2]);
        let fam = MvFamily::for_ell(1, &PrimeBasis::new(&[3]).unwrap()).unwrap();
        assert_eq!(PirScheme::new(fam.clone(), None, vec![0; 6]).unwrap().field().q, 7);
        assert!(PirScheme::new(fam.clone(), Some(11), vec![0; 6]).is_err());
        assert!(PirScheme::new(fam, Some(7), vec![0; 5]).is_err());
    }

    #[test]
    fn retrieves_every_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let db: Vec<u64> = (0..6).map(|_| rng.random_range(0..7)).collect();
        let s = scheme(db.clone());
        for i in 0..6 {
            for _ in 0..20 {
                let r = s.random_mask(&mut rng);
                assert_eq!(s.retrieve(i, &r).unwrap(), db[i as usize]);
            }
        }
    }

    #[test]
    fn constant_database_and_privacy() {
        let s = scheme(vec![5; 6]);
        let r = vec![0; s.family().dim()];
        assert_eq!(s.retrieve(3, &r).unwrap(), 5);
        let report = s.privacy_check().unwrap();
        assert!(report.passed(), "{report}");
        assert_eq!(report.translations, 6 * 2 * s.family().dim() as u64);
    }
}
