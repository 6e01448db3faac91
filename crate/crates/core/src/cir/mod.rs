//! Catalytic information retrieval.
//!
//! A scheme answers `DB[a || b]` for indices hidden behind an oracle: the
//! client holds two ring elements `x, y`, learns a small state from them with
//! oracle help, then every server `j` sees `x + DetQuery(a, j, 0)` and
//! `y + DetQuery(b, j, 1)` and the per-server answers sum to the record.
//! Both rings used here are coordinate vectors `Z_k^n`, so elements are plain
//! `Vec<u64>` with a [`RingShape`].

mod cook_mertz;
mod mv;
mod pir;

pub use cook_mertz::{multilinear_extension, CookMertzCir, FIELD_SEARCH_BOUND};
pub use mv::{MvCir, MvCirState};
pub use pir::{PirScheme, PrivacyFailure, PrivacyReport};

use rand::Rng;

use crate::error::{Error, Result};
use crate::modmath::{add_mod, neg_mod};
use crate::one_level::Side;

/// `Z_modulus^len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RingShape {
    pub modulus: u64,
    pub len: usize,
}

impl RingShape {
    pub fn zero(&self) -> Vec<u64> {
        vec![0; self.len]
    }

    pub fn filled(&self, value: u64) -> Vec<u64> {
        vec![value % self.modulus; self.len]
    }

    pub fn random(&self, rng: &mut impl Rng) -> Vec<u64> {
        (0..self.len).map(|_| rng.random_range(0..self.modulus)).collect()
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).map(|(&p, &q)| add_mod(p, q, self.modulus)).collect()
    }

    pub fn add_assign(&self, a: &mut [u64], b: &[u64]) {
        a.iter_mut().zip(b).for_each(|(p, &q)| *p = add_mod(*p, q, self.modulus));
    }

    pub fn neg(&self, a: &[u64]) -> Vec<u64> {
        a.iter().map(|&p| neg_mod(p, self.modulus)).collect()
    }

    pub fn check(&self, a: &[u64]) -> Result<()> {
        if a.len() != self.len {
            return Err(Error::LengthMismatch { expected: self.len, found: a.len() });
        }
        match a.iter().position(|&c| c >= self.modulus) {
            Some(index) => Err(Error::ResidueOutOfRange { index, value: a[index], modulus: self.modulus }),
            None => Ok(()),
        }
    }
}

/// `target += (negate ? -1 : 1) * DetQuery(a or b by sigma, server, mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CirRequest {
    pub negate: bool,
    pub sigma: Side,
    pub mu: bool,
    pub server: u64,
}

pub trait CirOracle {
    fn call(&mut self, target: &mut [u64], req: CirRequest) -> Result<()>;
}

pub trait CirScheme {
    /// Reconstruction state kept in free space.
    type State: Clone + std::fmt::Debug;

    fn ring(&self) -> RingShape;
    fn servers(&self) -> u64;
    /// Indices `a, b` range over `0..db_side()`; databases hold `db_side()^2` records.
    fn db_side(&self) -> u64;
    fn det_query(&self, a: u64, server: u64, mu: bool) -> Result<Vec<u64>>;
    /// Must leave `x` and `y` as it found them.
    fn get_state(&self, x: &mut [u64], y: &mut [u64], oracle: &mut dyn CirOracle) -> Result<Self::State>;
    fn answer_and_reconstruct(
        &self,
        db: &[Vec<u64>],
        st: &Self::State,
        server: u64,
        q: &[u64],
        q2: &[u64],
    ) -> Result<Vec<u64>>;
    /// Size of a state in bits.
    fn state_bits(&self) -> u64;
}

/// The oracle for a pair `(a, b)` known in the clear.
#[derive(Debug)]
pub struct PairOracle<'s, S> {
    pub scheme: &'s S,
    pub a: u64,
    pub b: u64,
    pub calls: u64,
}

impl<'s, S: CirScheme> PairOracle<'s, S> {
    pub fn new(scheme: &'s S, a: u64, b: u64) -> Self {
        Self { scheme, a, b, calls: 0 }
    }
}

impl<S: CirScheme> CirOracle for PairOracle<'_, S> {
    fn call(&mut self, target: &mut [u64], req: CirRequest) -> Result<()> {
        self.calls += 1;
        let ring = self.scheme.ring();
        let c = match req.sigma {
            Side::Left => self.a,
            Side::Right => self.b,
        };
        let mut q = self.scheme.det_query(c, req.server, req.mu)?;
        if req.negate {
            q = ring.neg(&q);
        }
        ring.check(target)?;
        ring.add_assign(target, &q);
        Ok(())
    }
}

fn check_db<S: CirScheme>(scheme: &S, db: &[Vec<u64>]) -> Result<()> {
    let n = scheme.db_side();
    let want = (n * n) as usize;
    if db.len() != want {
        return Err(Error::LengthMismatch { expected: want, found: db.len() });
    }
    let ring = scheme.ring();
    db.iter().try_for_each(|rec| ring.check(rec))
}

fn check_index<S: CirScheme>(scheme: &S, i: u64) -> Result<()> {
    if i >= scheme.db_side() {
        return Err(Error::IndexOutOfRange { index: i, size: scheme.db_side() });
    }
    Ok(())
}

/// `sum_j AnswerAndReconstruct(DB, GetState(x, y), j, x + DetQuery(a, j, 0), y + DetQuery(b, j, 1))`,
/// which a correct scheme makes equal to `DB[a || b]`.
pub fn cir_retrieve<S: CirScheme>(
    scheme: &S,
    db: &[Vec<u64>],
    a: u64,
    b: u64,
    x: &[u64],
    y: &[u64],
) -> Result<Vec<u64>> {
    check_db(scheme, db)?;
    check_index(scheme, a)?;
    check_index(scheme, b)?;
    let ring = scheme.ring();
    ring.check(x)?;
    ring.check(y)?;
    let (mut xr, mut yr) = (x.to_vec(), y.to_vec());
    let st = scheme.get_state(&mut xr, &mut yr, &mut PairOracle::new(scheme, a, b))?;
    if xr != x || yr != y {
        return Err(Error::Invariant("GetState did not restore its registers".into()));
    }
    let mut total = ring.zero();
    for j in 0..scheme.servers() {
        let q = ring.add(x, &scheme.det_query(a, j, false)?);
        let q2 = ring.add(y, &scheme.det_query(b, j, true)?);
        let ans = scheme.answer_and_reconstruct(db, &st, j, &q, &q2)?;
        ring.add_assign(&mut total, &ans);
    }
    Ok(total)
}

/// One level of tree evaluation on top of any scheme:
/// `z += (negate ? -1 : 1) * DetQuery(f(a, b), j_star, mu_star)` using only
/// oracle access to `(a, b)`; `x` and `y` come back unchanged.
///
/// Returns the number of oracle calls made.
pub fn cir_one_level_update<S: CirScheme>(
    scheme: &S,
    table: &[u64],
    negate: bool,
    j_star: u64,
    mu_star: bool,
    regs: [&mut [u64]; 3],
    oracle: &mut dyn CirOracle,
) -> Result<u64> {
    let n = scheme.db_side();
    if table.len() as u64 != n * n {
        return Err(Error::LengthMismatch { expected: (n * n) as usize, found: table.len() });
    }
    let ring = scheme.ring();
    let [x, y, z] = regs;
    let db = table
        .iter()
        .map(|&v| {
            let rec = scheme.det_query(v, j_star, mu_star)?;
            Ok(if negate { ring.neg(&rec) } else { rec })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counting = Counted { inner: oracle, calls: 0 };
    let st = scheme.get_state(x, y, &mut counting)?;
    for j in 0..scheme.servers() {
        let fwd_x = CirRequest { negate: false, sigma: Side::Left, mu: false, server: j };
        let fwd_y = CirRequest { negate: false, sigma: Side::Right, mu: true, server: j };
        counting.call(x, fwd_x)?;
        counting.call(y, fwd_y)?;
        let ans = scheme.answer_and_reconstruct(&db, &st, j, x, y)?;
        ring.add_assign(z, &ans);
        counting.call(x, CirRequest { negate: true, ..fwd_x })?;
        counting.call(y, CirRequest { negate: true, ..fwd_y })?;
    }
    Ok(counting.calls)
}

struct Counted<'o> {
    inner: &'o mut dyn CirOracle,
    calls: u64,
}

impl CirOracle for Counted<'_> {
    fn call(&mut self, target: &mut [u64], req: CirRequest) -> Result<()> {
        self.calls += 1;
        self.inner.call(target, req)
    }
}
