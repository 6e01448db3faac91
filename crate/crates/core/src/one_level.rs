//! One level of catalytic tree evaluation.
//!
//! Given oracle access that adds multiples of `u_a, v_a` into `x` and
//! `u_b, v_b` into `y` for hidden `a, b`, [`one_level_update`] adds
//! `gamma * w_{f(a, b)}` into `z` and leaves `x, y` as it found them.
//!
//! The routine first learns `g1 = <x, v_a>` and `g2 = <y, v_b>` with four
//! oracle calls, picks per prime the first nonzero monomial `alpha X^beta` of
//! `sum_{b,c in {0,1}} (-1)^{b+c} X^{(g1+b)(g2+c) mod p}`, and then, for every
//! choice of shift bits, shifts `x, y` by `CRT(bits) * u`, scans every
//! candidate pair `(r, s)` and accumulates a signed `w_{f(r,s)}` whenever
//! `<x, v_r> * <y, v_s>` hits `CRT(beta)`. Only the true pair survives the
//! signed sum, scaled by `prod alpha`, which is divided out.

use crate::catalytic::{CatalyticState, RegisterId};
use crate::error::{Error, Result};
use crate::modmath::{bit_width, lift_signed, mul_mod, neg_mod, PrimeBasis};
use crate::mv_family::{FamilyCoords, MvFamily, VectorKind};

/// Which of `x` (`sigma = 0`) or `y` (`sigma = 1`) an oracle call targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn register(self) -> RegisterId {
        match self {
            Side::Left => RegisterId::X,
            Side::Right => RegisterId::Y,
        }
    }

    pub fn bit(self) -> u64 {
        self as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleRequest {
    pub gamma: u64,
    /// `U` for `ctrl = 0`, `V` for `ctrl = 1`.
    pub ctrl: VectorKind,
    pub sigma: Side,
}

/// Adds `gamma * (u or v)_{a or b}` into `x` or `y`.
pub trait Oracle {
    fn call(&mut self, state: &mut CatalyticState, req: OracleRequest) -> Result<()>;
}

/// Count the call, then forward it.
pub fn issue(oracle: &mut dyn Oracle, state: &mut CatalyticState, req: OracleRequest) -> Result<()> {
    state.count_oracle_call();
    oracle.call(state, req)
}

/// Reference oracle with the pair `(a, b)` in the clear.
#[derive(Debug, Clone)]
pub struct HiddenPairOracle<'a> {
    pub family: &'a MvFamily,
    pub a: u64,
    pub b: u64,
}

impl Oracle for HiddenPairOracle<'_> {
    fn call(&mut self, state: &mut CatalyticState, req: OracleRequest) -> Result<()> {
        let index = match req.sigma {
            Side::Left => self.a,
            Side::Right => self.b,
        };
        state.add_scaled(req.sigma.register(), req.gamma, self.family.coords(req.ctrl, index)?)
    }
}

/// First nonzero monomial, by ascending exponent, of
/// `X^{g1 g2} - X^{(g1+1) g2} - X^{g1 (g2+1)} + X^{(g1+1)(g2+1)}`, exponents mod `p`.
pub fn sentinel_poly_monomial(p: u64, g1: u64, g2: u64) -> Result<(i64, u64)> {
    let mut coeffs = vec![0i64; p as usize];
    for (db, dc, sign) in [(0, 0, 1), (1, 0, -1), (0, 1, -1), (1, 1, 1)] {
        let e = (g1 % p + db) * (g2 % p + dc) % p;
        coeffs[e as usize] += sign;
    }
    coeffs
        .iter()
        .position(|&c| c != 0)
        .map(|beta| (coeffs[beta], beta as u64))
        .ok_or_else(|| Error::Invariant(format!("sentinel polynomial vanished for p={p}, g1={g1}, g2={g2}")))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentinelMonomial {
    /// Per prime, in `{-2, -1, 1, 2}`.
    pub alphas: Vec<i64>,
    pub betas: Vec<u64>,
    /// `(prod alpha)^{-1} mod m`.
    pub alpha_inv: u64,
    /// `CRT(beta_1, .., beta_t)`.
    pub beta_crt: u64,
}

impl SentinelMonomial {
    pub fn compute(basis: &PrimeBasis, g1: u64, g2: u64) -> Result<Self> {
        let m = basis.modulus();
        let mut alphas = Vec::with_capacity(basis.t());
        let mut betas = Vec::with_capacity(basis.t());
        for &p in basis.primes() {
            let (alpha, beta) = sentinel_poly_monomial(p, g1, g2)?;
            alphas.push(alpha);
            betas.push(beta);
        }
        let prod = alphas.iter().fold(1u64, |acc, &a| mul_mod(acc, lift_signed(a, m), m));
        let alpha_inv = basis
            .mod_inverse(prod)
            .map_err(|_| Error::Invariant(format!("product of alphas {prod} not invertible mod {m}")))?;
        let beta_crt = basis.crt_combine(&betas)?;
        Ok(Self { alphas, betas, alpha_inv, beta_crt })
    }

    /// Free-space footprint: a sign and two bits per alpha, each beta, and the two derived scalars.
    pub fn bits(basis: &PrimeBasis) -> u64 {
        let per_prime: u64 = basis.primes().iter().map(|&p| 3 + u64::from(bit_width(p))).sum();
        per_prime + 2 * u64::from(basis.element_bits())
    }
}

/// Packs an `ell`-bit string into the last coordinates of a `Z_m^d` vector.
///
/// Each coordinate carries `floor(log2 m)` bits, most significant chunk first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValuePacking {
    pub ell: u32,
    pub chunk_bits: u32,
    pub coords: usize,
    pub dim: usize,
}

impl ValuePacking {
    pub fn new(ell: u32, modulus: u64, dim: usize) -> Result<Self> {
        let chunk_bits = 63 - modulus.leading_zeros();
        if chunk_bits == 0 {
            return Err(Error::Infeasible(format!("modulus {modulus} carries no bits")));
        }
        let coords = ell.div_ceil(chunk_bits) as usize;
        if coords == 0 || coords > dim {
            return Err(Error::Infeasible(format!("{coords} value coordinates do not fit in dimension {dim}")));
        }
        Ok(Self { ell, chunk_bits, coords, dim })
    }

    /// Index of the first value coordinate.
    pub fn start(&self) -> usize {
        self.dim - self.coords
    }

    pub fn chunk(&self, value: u64, i: usize) -> u64 {
        let shift = self.chunk_bits as usize * (self.coords - 1 - i);
        (value >> shift) & ((1 << self.chunk_bits) - 1)
    }

    pub fn coords_of(&self, value: u64) -> ValueCoords {
        ValueCoords { packing: *self, value, pos: 0 }
    }

    /// Inverse of packing on the value coordinates alone.
    pub fn decode(&self, slots: &[u64]) -> Result<u64> {
        if slots.len() != self.coords {
            return Err(Error::LengthMismatch { expected: self.coords, found: slots.len() });
        }
        let mut value = 0u64;
        for &c in slots {
            if c >> self.chunk_bits != 0 {
                return Err(Error::Invariant(format!("value chunk {c} exceeds {} bits", self.chunk_bits)));
            }
            value = value << self.chunk_bits | c;
        }
        if self.ell < 64 && value >> self.ell != 0 {
            return Err(Error::Invariant(format!("decoded value {value:#x} exceeds {} bits", self.ell)));
        }
        Ok(value)
    }
}

#[derive(Debug, Clone)]
pub struct ValueCoords {
    packing: ValuePacking,
    value: u64,
    pos: usize,
}

impl Iterator for ValueCoords {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let p = &self.packing;
        if self.pos >= p.dim {
            return None;
        }
        let k = self.pos;
        self.pos += 1;
        Some(if k < p.start() { 0 } else { p.chunk(self.value, k - p.start()) })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.packing.dim - self.pos;
        (n, Some(n))
    }
}

impl ExactSizeIterator for ValueCoords {}

/// The vectors `w_s` a one-level update adds into `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WFamilySelector {
    U,
    V,
    Value(ValuePacking),
}

impl WFamilySelector {
    pub fn for_ctrl(ctrl: VectorKind) -> Self {
        match ctrl {
            VectorKind::U => WFamilySelector::U,
            VectorKind::V => WFamilySelector::V,
        }
    }

    pub fn coords<'a>(&self, family: &'a MvFamily, s: u64) -> Result<WCoords<'a>> {
        Ok(match self {
            WFamilySelector::U => WCoords::Family(family.coords(VectorKind::U, s)?),
            WFamilySelector::V => WCoords::Family(family.coords(VectorKind::V, s)?),
            WFamilySelector::Value(p) => WCoords::Value(p.coords_of(s)),
        })
    }
}

pub enum WCoords<'a> {
    Family(FamilyCoords<'a>),
    Value(ValueCoords),
}

impl Iterator for WCoords<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        match self {
            WCoords::Family(it) => it.next(),
            WCoords::Value(it) => it.next(),
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        match self {
            WCoords::Family(it) => it.size_hint(),
            WCoords::Value(it) => it.size_hint(),
        }
    }
}

impl ExactSizeIterator for WCoords<'_> {}

/// How the `(r, s)` scan obtains `<y, v_s>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerProductMode {
    /// Recompute every inner product from streamed coordinates.
    #[default]
    Streaming,
    /// Cache `<y, v_s>` for all `s` per shift assignment; `2^ell` extra scalars.
    Table,
}

/// Everything one update needs besides the machine and the oracle.
#[derive(Debug, Clone, Copy)]
pub struct OneLevelTask<'a> {
    pub family: &'a MvFamily,
    /// `f(r, s)` at index `(r << ell) | s`.
    pub table: &'a [u64],
    pub ell: u32,
    pub gamma: u64,
    pub wfam: WFamilySelector,
    pub mode: InnerProductMode,
}

/// Instrumentation hooks, for checking the algorithm's internal identities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Sentinel {
        g1: u64,
        g2: u64,
        sentinel: SentinelMonomial,
    },
    /// `(r, s)` matched under shift bits `assignment` (low `t` bits shift `x`).
    Accumulate {
        assignment: u64,
        r: u64,
        s: u64,
        negative: bool,
    },
}

/// `(<x, v_a>, <y, v_b>)` from four oracle calls; all registers restored.
pub fn paired_inner_products(state: &mut CatalyticState, oracle: &mut dyn Oracle) -> Result<(u64, u64)> {
    let m = state.modulus();
    let elem = u64::from(state.basis().element_bits());
    let scope = state.ledger.push("inner product scratch", 3 * elem + u64::from(bit_width(state.dim() as u64)));
    let minus_one = m - 1;
    let tmp1 = state.register_dot(RegisterId::X, RegisterId::Y);
    state.swap_registers(RegisterId::X, RegisterId::Y)?;
    // first register now holds y; adding v_a to it exposes <x, v_a>
    issue(oracle, state, OracleRequest { gamma: 1, ctrl: VectorKind::V, sigma: Side::Left })?;
    let tmp2 = state.register_dot(RegisterId::X, RegisterId::Y);
    issue(oracle, state, OracleRequest { gamma: minus_one, ctrl: VectorKind::V, sigma: Side::Left })?;
    issue(oracle, state, OracleRequest { gamma: 1, ctrl: VectorKind::V, sigma: Side::Right })?;
    let tmp3 = state.register_dot(RegisterId::X, RegisterId::Y);
    issue(oracle, state, OracleRequest { gamma: minus_one, ctrl: VectorKind::V, sigma: Side::Right })?;
    state.swap_registers(RegisterId::X, RegisterId::Y)?;
    state.ledger.pop(scope)?;
    Ok(((tmp2 + m - tmp1) % m, (tmp3 + m - tmp1) % m))
}

fn validate(task: &OneLevelTask<'_>, state: &CatalyticState) -> Result<()> {
    let family = task.family;
    if state.dim() != family.dim() {
        return Err(Error::DimensionMismatch { expected: family.dim(), found: state.dim() });
    }
    if state.basis() != family.basis() {
        return Err(Error::InvalidBasis(format!("state over {}, family over {}", state.basis(), family.basis())));
    }
    if task.ell == 0 || task.ell > 16 {
        return Err(Error::Infeasible(format!("ell = {} out of range", task.ell)));
    }
    let n = 1u64 << task.ell;
    if family.size() < n {
        return Err(Error::Infeasible(format!("family of size {} cannot index 2^{}", family.size(), task.ell)));
    }
    if task.table.len() as u64 != n * n {
        return Err(Error::LengthMismatch { expected: (n * n) as usize, found: task.table.len() });
    }
    if let Some(&bad) = task.table.iter().find(|&&v| v >= n) {
        return Err(Error::MalformedInstance(format!("table entry {bad:#x} exceeds {} bits", task.ell)));
    }
    if let WFamilySelector::Value(p) = task.wfam {
        if p.dim != state.dim() || p.ell != task.ell {
            return Err(Error::DimensionMismatch { expected: state.dim(), found: p.dim });
        }
    }
    Ok(())
}

/// `z += gamma * w_{f(a, b)}`, leaving `x` and `y` untouched.
///
/// Makes exactly `4 + 4 * 4^t` oracle calls.
pub fn one_level_update(task: &OneLevelTask<'_>, state: &mut CatalyticState, oracle: &mut dyn Oracle) -> Result<()> {
    run(task, state, oracle, None)
}

/// [`one_level_update`] reporting its internal decisions to `trace`.
pub fn one_level_update_traced(
    task: &OneLevelTask<'_>,
    state: &mut CatalyticState,
    oracle: &mut dyn Oracle,
    trace: &mut dyn FnMut(TraceEvent),
) -> Result<()> {
    run(task, state, oracle, Some(trace))
}

/// Calls made by one update over a basis of `t` primes.
pub fn oracle_calls_per_update(t: usize) -> u64 {
    4 + 4 * 4u64.pow(t as u32)
}

fn run(
    task: &OneLevelTask<'_>,
    state: &mut CatalyticState,
    oracle: &mut dyn Oracle,
    mut trace: Option<&mut dyn FnMut(TraceEvent)>,
) -> Result<()> {
    validate(task, state)?;
    let basis = state.basis().clone();
    let m = basis.modulus();
    let t = basis.t();
    let elem = u64::from(basis.element_bits());
    let family = task.family;
    let n = 1u64 << task.ell;

    // held for the whole update: gamma*, the w selector and the sentinel data
    let persistent = state.ledger.push("one-level persistent", elem + 2 + SentinelMonomial::bits(&basis));
    let g_scope = state.ledger.push("g1 g2", 2 * elem);
    let (g1, g2) = paired_inner_products(state, oracle)?;
    let sentinel = SentinelMonomial::compute(&basis, g1, g2)?;
    state.ledger.pop(g_scope)?;
    if let Some(trace) = trace.as_deref_mut() {
        trace(TraceEvent::Sentinel { g1, g2, sentinel: sentinel.clone() });
    }
    let scale = mul_mod(task.gamma % m, sentinel.alpha_inv, m);
    let neg_scale = neg_mod(scale, m);

    let low_mask = (1u64 << t) - 1;
    let mut y_table = Vec::new();
    for assignment in 0..1u64 << (2 * t) {
        let bits_scope = state.ledger.push("shift bits", 2 * t as u64);
        let shift_x = basis.crt_bits(assignment & low_mask);
        let shift_y = basis.crt_bits(assignment >> t);
        issue(oracle, state, OracleRequest { gamma: shift_x, ctrl: VectorKind::U, sigma: Side::Left })?;
        issue(oracle, state, OracleRequest { gamma: shift_y, ctrl: VectorKind::U, sigma: Side::Right })?;

        let negative = assignment.count_ones() % 2 == 1;
        let coef = if negative { neg_scale } else { scale };
        let mut scan_bits = 2 * u64::from(task.ell) + 3 * elem + u64::from(bit_width(state.dim() as u64));
        if task.mode == InnerProductMode::Table {
            scan_bits += n * elem;
        }
        let scan = state.ledger.push("pair scan", scan_bits);
        if task.mode == InnerProductMode::Table {
            y_table.clear();
            for s in 0..n {
                y_table.push(family.dot(VectorKind::V, s, state.register(RegisterId::Y))?);
            }
        }
        for r in 0..n {
            let xr = family.dot(VectorKind::V, r, state.register(RegisterId::X))?;
            for s in 0..n {
                let ys = match task.mode {
                    InnerProductMode::Streaming => family.dot(VectorKind::V, s, state.register(RegisterId::Y))?,
                    InnerProductMode::Table => y_table[s as usize],
                };
                if mul_mod(xr, ys, m) != sentinel.beta_crt {
                    continue;
                }
                if let Some(trace) = trace.as_deref_mut() {
                    trace(TraceEvent::Accumulate { assignment, r, s, negative });
                }
                let target = task.table[(r << task.ell | s) as usize];
                let coords = task.wfam.coords(family, target)?;
                state.add_scaled(RegisterId::Z, coef, coords)?;
            }
        }
        state.ledger.pop(scan)?;

        issue(oracle, state, OracleRequest { gamma: neg_mod(shift_x, m), ctrl: VectorKind::U, sigma: Side::Left })?;
        issue(oracle, state, OracleRequest { gamma: neg_mod(shift_y, m), ctrl: VectorKind::U, sigma: Side::Right })?;
        state.ledger.pop(bits_scope)?;
    }
    state.ledger.pop(persistent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalytic::TapeMode;
    use crate::modmath::dot_mod;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn basis(p: &[u64]) -> PrimeBasis {
        PrimeBasis::new(p).unwrap()
    }

    #[test]
    fn sentinel_examples() {
        assert_eq!(sentinel_poly_monomial(3, 0, 0).unwrap(), (-1, 0));
        assert_eq!(sentinel_poly_monomial(3, 1, 1).unwrap(), (2, 1));
        assert_eq!(sentinel_poly_monomial(5, 0, 3).unwrap(), (-1, 3));
    }

    #[test]
    fn sentinel_never_vanishes() {
        for p in [3u64, 5, 7, 11, 13] {
            for g1 in 0..p {
                for g2 in 0..p {
                    let (alpha, beta) = sentinel_poly_monomial(p, g1, g2).unwrap();
                    assert!([-2, -1, 1, 2].contains(&alpha));
                    assert!(beta < p);
                }
            }
        }
    }

    /// The signed count over `(b, c)` for one prime is `alpha` on the true
    /// pair and 0 whenever one of the shifts is invisible mod `p`.
    #[test]
    fn per_prime_signed_count() {
        let p = 3u64;
        for g1 in 0..p {
            for g2 in 0..p {
                let (alpha, beta) = sentinel_poly_monomial(p, g1, g2).unwrap();
                // (ua, ub) are <u_a, v_r> and <u_b, v_s> mod p, in {0, 1}
                for (ua, ub) in [(1, 1), (0, 1), (1, 0), (0, 0)] {
                    let mut count = 0i64;
                    for b in 0..2 {
                        for c in 0..2 {
                            if (g1 + b * ua) * (g2 + c * ub) % p == beta {
                                count += if (b + c) % 2 == 0 { 1 } else { -1 };
                            }
                        }
                    }
                    if (ua, ub) == (1, 1) {
                        assert_eq!(count, alpha);
                    } else {
                        assert_eq!(count, 0);
                    }
                }
            }
        }
    }

    #[test]
    fn paired_inner_product_example() {
        let fam = MvFamily::for_ell(1, &basis(&[3, 5])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let mut state = CatalyticState::new(basis(&[3, 5]), fam.dim(), &TapeMode::Random(rng.random())).unwrap();
            let (a, b) = (rng.random_range(0..2), rng.random_range(0..2));
            let mut oracle = HiddenPairOracle { family: &fam, a, b };
            let (g1, g2) = paired_inner_products(&mut state, &mut oracle).unwrap();
            assert_eq!(g1, dot_mod(state.register(RegisterId::X), &fam.v_vector(a).unwrap(), 15));
            assert_eq!(g2, dot_mod(state.register(RegisterId::Y), &fam.v_vector(b).unwrap(), 15));
            assert_eq!(state.oracle_calls(), 4);
            assert!(state.assert_restored(&RegisterId::ALL).passed());
        }
    }

    /// `d = 1` oracle that adds fixed scalars, to pin the arithmetic by hand.
    struct ScalarOracle {
        va: u64,
        vb: u64,
    }

    impl Oracle for ScalarOracle {
        fn call(&mut self, state: &mut CatalyticState, req: OracleRequest) -> Result<()> {
            let v = if req.sigma == Side::Left { self.va } else { self.vb };
            state.add_scaled(req.sigma.register(), req.gamma, [v])
        }
    }

    #[test]
    fn paired_inner_product_by_hand() {
        let mut state = CatalyticState::from_registers(basis(&[3, 5]), [vec![2], vec![1], vec![0]]).unwrap();
        let got = paired_inner_products(&mut state, &mut ScalarOracle { va: 3, vb: 7 }).unwrap();
        assert_eq!(got, (6, 7));
        let mut zero = CatalyticState::from_registers(basis(&[3, 5]), [vec![0], vec![0], vec![0]]).unwrap();
        assert_eq!(paired_inner_products(&mut zero, &mut ScalarOracle { va: 3, vb: 7 }).unwrap(), (0, 0));
    }

    fn random_table(ell: u32, rng: &mut ChaCha8Rng) -> Vec<u64> {
        (0..1u64 << (2 * ell)).map(|_| rng.random_range(0..1u64 << ell)).collect()
    }

    #[test]
    fn update_adds_the_right_vector() {
        for primes in [&[3u64][..], &[3, 5][..]] {
            let b = basis(primes);
            let fam = MvFamily::for_ell(2, &b).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            for round in 0..6 {
                let table = random_table(2, &mut rng);
                let (a, bb) = (rng.random_range(0..4), rng.random_range(0..4));
                let tape = if round == 0 { TapeMode::Zeros } else { TapeMode::Random(rng.random()) };
                let mut state = CatalyticState::new(b.clone(), fam.dim(), &tape).unwrap();
                let gamma = rng.random_range(0..b.modulus());
                let mode = if round % 2 == 0 { InnerProductMode::Streaming } else { InnerProductMode::Table };
                let task = OneLevelTask { family: &fam, table: &table, ell: 2, gamma, wfam: WFamilySelector::U, mode };
                one_level_update(&task, &mut state, &mut HiddenPairOracle { family: &fam, a, b: bb }).unwrap();
                assert!(state.assert_restored(&[RegisterId::X, RegisterId::Y]).passed());
                let m = b.modulus();
                let u = fam.u_vector(table[(a << 2 | bb) as usize]).unwrap();
                let z0 = state.snapshot(RegisterId::Z).to_vec();
                let want: Vec<u64> = z0.iter().zip(&u).map(|(&z, &c)| (z + gamma * c) % m).collect();
                assert_eq!(state.register(RegisterId::Z), &want[..]);
                assert_eq!(state.oracle_calls(), oracle_calls_per_update(b.t()));
                assert_eq!(state.ledger.current_bits(), 0);
            }
        }
    }

    #[test]
    fn value_packing_round_trip() {
        let p = ValuePacking::new(5, 15, 10).unwrap();
        assert_eq!((p.chunk_bits, p.coords, p.start()), (3, 2, 8));
        for v in 0..32 {
            let coords: Vec<u64> = p.coords_of(v).collect();
            assert_eq!(coords.len(), 10);
            assert!(coords[..8].iter().all(|&c| c == 0));
            assert_eq!(p.decode(&coords[8..]).unwrap(), v);
        }
        assert_eq!(p.coords_of(0b10110).collect::<Vec<_>>()[8..], [0b10, 0b110]);
        assert!(ValuePacking::new(8, 3, 4).is_err());
    }
}
