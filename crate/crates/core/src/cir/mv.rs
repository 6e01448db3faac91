//! The matching-vector scheme behind the one-level algorithm.
//!
//! Ring `Z_m^{2d}`, `4^t` servers named by bit strings `b_1..b_t c_1..c_t`.
//! `DetQuery(a, j, mu) = CRT(b or c) * (u_a || v_a)`. Reconstruction only
//! looks at the first `d` coordinates of each query.

use super::{CirOracle, CirRequest, CirScheme, RingShape};
use crate::error::{Error, Result};
use crate::modmath::{dot_mod, mul_mod, neg_mod, sub_mod, PrimeBasis};
use crate::mv_family::{MvFamily, VectorKind};
use crate::one_level::{SentinelMonomial, Side};

#[derive(Debug, Clone)]
pub struct MvCir {
    family: MvFamily,
    ell: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MvCirState {
    pub g1: u64,
    pub g2: u64,
    pub sentinel: SentinelMonomial,
}

impl MvCir {
    pub fn new(family: MvFamily, ell: u32) -> Result<Self> {
        if ell == 0 || ell > 16 {
            return Err(Error::Infeasible(format!("ell = {ell} out of range")));
        }
        if family.size() < 1 << ell {
            return Err(Error::Infeasible(format!("family of size {} for ell = {ell}", family.size())));
        }
        Ok(Self { family, ell })
    }

    pub fn for_ell(ell: u32, basis: &PrimeBasis) -> Result<Self> {
        Self::new(MvFamily::for_ell(ell, basis)?, ell)
    }

    pub fn family(&self) -> &MvFamily {
        &self.family
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    fn basis(&self) -> &PrimeBasis {
        self.family.basis()
    }

    /// Server whose bits are all ones: both CRT factors equal 1.
    pub fn all_ones_server(&self) -> u64 {
        (1 << (2 * self.basis().t())) - 1
    }

    fn shift(&self, server: u64, mu: bool) -> u64 {
        let t = self.basis().t();
        let bits = if mu { server >> t } else { server & ((1 << t) - 1) };
        self.basis().crt_bits(bits)
    }
}

impl CirScheme for MvCir {
    type State = MvCirState;

    fn ring(&self) -> RingShape {
        RingShape { modulus: self.family.modulus(), len: 2 * self.family.dim() }
    }

    fn servers(&self) -> u64 {
        1 << (2 * self.basis().t())
    }

    fn db_side(&self) -> u64 {
        1 << self.ell
    }

    fn det_query(&self, a: u64, server: u64, mu: bool) -> Result<Vec<u64>> {
        if server >= self.servers() {
            return Err(Error::IndexOutOfRange { index: server, size: self.servers() });
        }
        let m = self.family.modulus();
        let c = self.shift(server, mu);
        let u = self.family.coords(VectorKind::U, a)?;
        let v = self.family.coords(VectorKind::V, a)?;
        Ok(u.chain(v).map(|coord| mul_mod(c, coord, m)).collect())
    }

    /// Trades the first halves of `x` and `y`, so that adding `(u_a || v_a)`
    /// to `x` moves `<x_rest, x_trunc>` by exactly `<v_a, x_trunc>`; same for `y`.
    fn get_state(&self, x: &mut [u64], y: &mut [u64], oracle: &mut dyn CirOracle) -> Result<MvCirState> {
        let ring = self.ring();
        ring.check(x)?;
        ring.check(y)?;
        let m = ring.modulus;
        let d = self.family.dim();
        let server = self.all_ones_server();
        x[..d].swap_with_slice(&mut y[..d]);
        let mut probe = |x: &mut [u64], y: &mut [u64], sigma: Side| -> Result<u64> {
            let (moving, fixed) = match sigma {
                Side::Left => (x, &*y),
                Side::Right => (y, &*x),
            };
            let before = dot_mod(&moving[d..], &fixed[..d], m);
            let req = CirRequest { negate: false, sigma, mu: sigma == Side::Right, server };
            oracle.call(moving, req)?;
            let after = dot_mod(&moving[d..], &fixed[..d], m);
            oracle.call(moving, CirRequest { negate: true, ..req })?;
            Ok(sub_mod(after, before, m))
        };
        let g1 = probe(x, y, Side::Left);
        let g2 = probe(x, y, Side::Right);
        x[..d].swap_with_slice(&mut y[..d]);
        let (g1, g2) = (g1?, g2?);
        let sentinel = SentinelMonomial::compute(self.basis(), g1, g2)?;
        Ok(MvCirState { g1, g2, sentinel })
    }

    fn answer_and_reconstruct(
        &self,
        db: &[Vec<u64>],
        st: &MvCirState,
        server: u64,
        q: &[u64],
        q2: &[u64],
    ) -> Result<Vec<u64>> {
        let ring = self.ring();
        let m = ring.modulus;
        let d = self.family.dim();
        let n = self.db_side();
        let coef = if server.count_ones() % 2 == 1 { neg_mod(st.sentinel.alpha_inv, m) } else { st.sentinel.alpha_inv };
        let mut out = ring.zero();
        for r in 0..n {
            let xr = self.family.dot(VectorKind::V, r, &q[..d])?;
            for s in 0..n {
                let ys = self.family.dot(VectorKind::V, s, &q2[..d])?;
                if mul_mod(xr, ys, m) != st.sentinel.beta_crt {
                    continue;
                }
                for (o, &c) in out.iter_mut().zip(&db[(r * n + s) as usize]) {
                    *o = (*o + mul_mod(coef, c, m)) % m;
                }
            }
        }
        Ok(out)
    }

    fn state_bits(&self) -> u64 {
        2 * u64::from(self.basis().element_bits()) + SentinelMonomial::bits(self.basis())
    }
}
