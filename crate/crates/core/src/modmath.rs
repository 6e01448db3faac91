//! Exact arithmetic over `Z_m` for squarefree odd `m = p_1 * ... * p_t`.
//!
//! Everything is done in `u64` with `u128` widening for products; moduli are
//! kept below [`MAX_MODULUS`] so that register dot products can be accumulated
//! without intermediate reduction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Upper bound on `m` accepted by [`PrimeBasis::new`].
pub const MAX_MODULUS: u64 = 1 << 20;

/// Seed used by [`find_prime_with_roots`] when drawing candidate roots.
pub const ROOT_SEARCH_SEED: u64 = 0x005e_ed0f_2007;

#[inline]
pub fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    let s = a + b;
    if s >= m {
        s - m
    } else {
        s
    }
}

#[inline]
pub fn sub_mod(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + m - b
    }
}

#[inline]
pub fn neg_mod(a: u64, m: u64) -> u64 {
    if a == 0 {
        0
    } else {
        m - a
    }
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// `<a, b> mod m`, accumulating unreduced while the sum cannot overflow.
#[inline]
pub fn dot_mod(a: &[u64], b: &[u64], m: u64) -> u64 {
    let mut acc = 0u64;
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
        if acc >= 1 << 62 {
            acc %= m;
        }
    }
    acc % m
}

/// Lift a small signed integer into `Z_m`.
#[inline]
pub fn lift_signed(v: i64, m: u64) -> u64 {
    let r = v.rem_euclid(m as i64);
    r as u64
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Inverse of `a` modulo `m` by the extended Euclidean algorithm.
pub fn inverse_mod(a: u64, m: u64) -> Result<u64> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return Err(Error::NotInvertible { value: a, modulus: m });
    }
    Ok(old_s.rem_euclid(m as i128) as u64)
}

/// Deterministic trial-division primality test; inputs here are small.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// `ceil(log2(n))` for `n >= 1`; the bit width needed for values `0..n`.
pub fn bit_width(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// The primes `p_1..p_t`, their product `m`, and CRT reconstruction data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeBasis {
    primes: Vec<u64>,
    modulus: u64,
    // crt_coeffs[i] = (m / p_i) * ((m / p_i)^{-1} mod p_i) mod m
    crt_coeffs: Vec<u64>,
}

impl PrimeBasis {
    pub fn new(primes: &[u64]) -> Result<Self> {
        if primes.is_empty() {
            return Err(Error::InvalidBasis("at least one prime is required".into()));
        }
        let mut modulus: u64 = 1;
        for (i, &p) in primes.iter().enumerate() {
            if p == 2 || !is_prime(p) {
                return Err(Error::InvalidBasis(format!("{p} is not an odd prime")));
            }
            if primes[..i].contains(&p) {
                return Err(Error::InvalidBasis(format!("prime {p} repeated")));
            }
            modulus = modulus
                .checked_mul(p)
                .filter(|&m| m <= MAX_MODULUS)
                .ok_or_else(|| Error::InvalidBasis(format!("modulus exceeds {MAX_MODULUS}")))?;
        }
        let crt_coeffs = primes
            .iter()
            .map(|&p| {
                let cofactor = modulus / p;
                let inv = inverse_mod(cofactor % p, p)?;
                Ok(mul_mod(cofactor, inv, modulus))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { primes: primes.to_vec(), modulus, crt_coeffs })
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn t(&self) -> usize {
        self.primes.len()
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Bits needed to store one element of `Z_m`.
    pub fn element_bits(&self) -> u32 {
        bit_width(self.modulus)
    }

    /// The unique `v` in `Z_m` with `v = residues[i] (mod p_i)`.
    pub fn crt_combine(&self, residues: &[u64]) -> Result<u64> {
        if residues.len() != self.primes.len() {
            return Err(Error::LengthMismatch { expected: self.primes.len(), found: residues.len() });
        }
        let mut acc = 0;
        for (i, (&r, &p)) in residues.iter().zip(&self.primes).enumerate() {
            if r >= p {
                return Err(Error::ResidueOutOfRange { index: i, value: r, modulus: p });
            }
            acc = add_mod(acc, mul_mod(r, self.crt_coeffs[i], self.modulus), self.modulus);
        }
        Ok(acc)
    }

    /// CRT of a bit pattern: bit `i` of `bits` is the residue mod `p_i`.
    pub fn crt_bits(&self, bits: u64) -> u64 {
        let m = self.modulus;
        self.crt_coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| bits >> i & 1 == 1)
            .fold(0, |acc, (_, &c)| add_mod(acc, c, m))
    }

    pub fn residues(&self, v: u64) -> Vec<u64> {
        self.primes.iter().map(|&p| v % p).collect()
    }

    pub fn mod_inverse(&self, a: u64) -> Result<u64> {
        inverse_mod(a % self.modulus, self.modulus)
    }

    /// Nonzero `v` in `Z_m` with every residue in `{0, 1}`, in ascending order.
    pub fn canonical_set(&self) -> Vec<u64> {
        let mut set: Vec<u64> = (1..1u64 << self.t()).map(|bits| self.crt_bits(bits)).collect();
        set.sort_unstable();
        set
    }

    pub fn is_canonical(&self, v: u64) -> bool {
        !v.is_multiple_of(self.modulus) && self.primes.iter().all(|&p| v % p <= 1)
    }
}

impl std::fmt::Display for PrimeBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.primes.iter().map(u64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// A prime `q` with `m | q - 1` and elements `g_i` of multiplicative order `p_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeWithRoots {
    pub q: u64,
    pub generators: Vec<u64>,
}

pub fn find_prime_with_roots(basis: &PrimeBasis, search_bound: u64) -> Result<PrimeWithRoots> {
    find_prime_with_roots_seeded(basis, search_bound, ROOT_SEARCH_SEED)
}

/// Scans `q = 1 + k*m` upward; roots of order `p_i` are drawn as
/// `r^((q-1)/p_i)` for random `r`, rejecting the identity.
pub fn find_prime_with_roots_seeded(basis: &PrimeBasis, search_bound: u64, seed: u64) -> Result<PrimeWithRoots> {
    let m = basis.modulus();
    let not_found = || Error::PrimeNotFound { modulus: m, bound: search_bound };
    let mut q = m + 1;
    while q <= search_bound {
        if is_prime(q) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut generators = Vec::with_capacity(basis.t());
            for &p in basis.primes() {
                let g = loop {
                    let r = rng.random_range(2..q);
                    let g = pow_mod(r, (q - 1) / p, q);
                    if g != 1 {
                        break g;
                    }
                };
                generators.push(g);
            }
            return Ok(PrimeWithRoots { q, generators });
        }
        q = q.checked_add(m).ok_or_else(not_found)?;
    }
    Err(not_found())
}

/// Multiplicative order of `g` modulo prime `q` (brute force; `q` is small).
pub fn multiplicative_order(g: u64, q: u64) -> Option<u64> {
    if g.is_multiple_of(q) {
        return None;
    }
    let mut acc = g % q;
    for k in 1..q {
        if acc == 1 {
            return Some(k);
        }
        acc = mul_mod(acc, g, q);
    }
    None
}
