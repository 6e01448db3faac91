//! The Reed–Muller style scheme.
//!
//! Over a prime field `F_q` with an element `omega` of order `s > 2 ell`, the
//! database is read as the multilinear extension `g` of `(r, s) -> DB[r || s]`.
//! `DetQuery(a, j) = omega^{-j} a` with `a` as a 0/1 vector, and server `j`
//! answers `g(omega^j q, omega^j q') / s`. Since `g(a + X x, b + X y)` has degree
//! at most `2 ell < s` in `X`, averaging over the `s` powers of `omega` keeps
//! only its constant term `g(a, b)`.

use super::{CirOracle, CirScheme, RingShape};
use crate::error::{Error, Result};
use crate::modmath::{inverse_mod, is_prime, mul_mod, multiplicative_order, pow_mod, sub_mod};

/// Largest field the search will consider.
pub const FIELD_SEARCH_BOUND: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CookMertzCir {
    ell: u32,
    q: u64,
    s: u64,
    omega: u64,
}

impl CookMertzCir {
    /// Smallest prime `q >= 2 ell + 2`, then smallest `s in (2 ell, q)` dividing
    /// `q - 1`, then the smallest element of order exactly `s`.
    pub fn new(ell: u32) -> Result<Self> {
        Self::check_ell(ell)?;
        let lo = 2 * u64::from(ell) + 2;
        for q in (lo..=FIELD_SEARCH_BOUND).filter(|&q| is_prime(q)) {
            let Some(s) = (2 * u64::from(ell) + 1..q).find(|s| (q - 1) % s == 0) else {
                continue;
            };
            if let Some(omega) = (2..q).find(|&g| multiplicative_order(g, q) == Some(s)) {
                return Ok(Self { ell, q, s, omega });
            }
        }
        Err(Error::Infeasible(format!("no field below {FIELD_SEARCH_BOUND} for ell = {ell}")))
    }

    /// A caller-chosen field, checked.
    pub fn with_field(ell: u32, q: u64, s: u64, omega: u64) -> Result<Self> {
        Self::check_ell(ell)?;
        if !is_prime(q) {
            return Err(Error::Infeasible(format!("{q} is not prime")));
        }
        if s <= 2 * u64::from(ell) || s >= q {
            return Err(Error::Infeasible(format!("need 2 ell < s < q, got s = {s}, q = {q}")));
        }
        if multiplicative_order(omega, q) != Some(s) {
            return Err(Error::Infeasible(format!("{omega} does not have order {s} mod {q}")));
        }
        Ok(Self { ell, q, s, omega })
    }

    fn check_ell(ell: u32) -> Result<()> {
        if ell == 0 || ell > 10 {
            return Err(Error::Infeasible(format!("ell = {ell} out of range")));
        }
        Ok(())
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    /// `(q, s, omega)`.
    pub fn field(&self) -> (u64, u64, u64) {
        (self.q, self.s, self.omega)
    }

    /// `a` as `ell` field elements, most significant bit first.
    pub fn index_vector(&self, a: u64) -> Vec<u64> {
        (0..self.ell).rev().map(|i| (a >> i) & 1).collect()
    }
}

/// `sum_{r, s} DB[r || s] chi_r(x) chi_s(y)` over `F_q`, per coordinate.
pub fn multilinear_extension(db: &[Vec<u64>], ell: u32, q: u64, x: &[u64], y: &[u64]) -> Vec<u64> {
    let n = 1usize << ell;
    let weights = |point: &[u64]| -> Vec<u64> {
        // chi_r(point) for every r, first coordinate most significant
        let mut w = vec![1u64];
        for &c in point {
            w = w.iter().flat_map(|&acc| [mul_mod(acc, sub_mod(1, c, q), q), mul_mod(acc, c, q)]).collect();
        }
        w
    };
    let (wx, wy) = (weights(x), weights(y));
    let len = db.first().map_or(0, Vec::len);
    let mut out = vec![0u64; len];
    for r in 0..n {
        for s in 0..n {
            let w = mul_mod(wx[r], wy[s], q);
            if w == 0 {
                continue;
            }
            for (o, &c) in out.iter_mut().zip(&db[r * n + s]) {
                *o = (*o + mul_mod(w, c, q)) % q;
            }
        }
    }
    out
}

impl CirScheme for CookMertzCir {
    type State = ();

    fn ring(&self) -> RingShape {
        RingShape { modulus: self.q, len: self.ell as usize }
    }

    fn servers(&self) -> u64 {
        self.s
    }

    fn db_side(&self) -> u64 {
        1 << self.ell
    }

    fn det_query(&self, a: u64, server: u64, _mu: bool) -> Result<Vec<u64>> {
        if server >= self.s {
            return Err(Error::IndexOutOfRange { index: server, size: self.s });
        }
        if a >= self.db_side() {
            return Err(Error::IndexOutOfRange { index: a, size: self.db_side() });
        }
        let scale = pow_mod(self.omega, (self.s - server) % self.s, self.q);
        Ok(self.index_vector(a).into_iter().map(|bit| bit * scale).collect())
    }

    fn get_state(&self, _x: &mut [u64], _y: &mut [u64], _oracle: &mut dyn CirOracle) -> Result<()> {
        Ok(())
    }

    fn answer_and_reconstruct(
        &self,
        db: &[Vec<u64>],
        _st: &(),
        server: u64,
        q: &[u64],
        q2: &[u64],
    ) -> Result<Vec<u64>> {
        let w = pow_mod(self.omega, server, self.q);
        let scale = |v: &[u64]| v.iter().map(|&c| mul_mod(w, c, self.q)).collect::<Vec<_>>();
        let g = multilinear_extension(db, self.ell, self.q, &scale(q), &scale(q2));
        let s_inv = inverse_mod(self.s, self.q)?;
        Ok(g.into_iter().map(|c| mul_mod(c, s_inv, self.q)).collect())
    }

    fn state_bits(&self) -> u64 {
        0
    }
}
