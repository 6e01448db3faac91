//! The instrumented register machine.
//!
//! Three registers `x, y, z` over `Z_m^d` stand in for the catalytic tape.
//! Every update goes through [`CatalyticState`], which keeps a snapshot of the
//! initial contents, an oracle-call counter and a [`SpaceLedger`].

mod ledger;
mod tape;

use std::fmt;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use ledger::{Allocation, ScopeToken, SpaceLedger};
pub use tape::{decode_tape, encode_tape, find_offset, BitTape, EncodedTape, TapeLayout};

use crate::error::{Error, Result};
use crate::modmath::{add_mod, bit_width, mul_mod, PrimeBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegisterId {
    X,
    Y,
    Z,
}

impl RegisterId {
    pub const ALL: [RegisterId; 3] = [RegisterId::X, RegisterId::Y, RegisterId::Z];

    fn index(self) -> usize {
        self as usize
    }
}

/// Initial tape contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TapeMode {
    Zeros,
    /// Every coordinate `m - 1`.
    Max,
    /// `0, m-1, 0, m-1, ...` across `x`, then `y`, then `z`.
    Alternating,
    Random(u64),
    FromFile(PathBuf),
}

impl std::str::FromStr for TapeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "zeros" => TapeMode::Zeros,
            "max" => TapeMode::Max,
            "alternating" => TapeMode::Alternating,
            _ => {
                if let Some(seed) = s.strip_prefix("random:") {
                    let seed = seed.parse().map_err(|_| Error::parse(0, 0, format!("bad tape seed {seed:?}")))?;
                    TapeMode::Random(seed)
                } else if let Some(path) = s.strip_prefix("file:") {
                    TapeMode::FromFile(path.into())
                } else if s == "random" {
                    TapeMode::Random(0)
                } else {
                    return Err(Error::parse(0, 0, format!("unknown tape mode {s:?}")));
                }
            }
        })
    }
}

impl fmt::Display for TapeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TapeMode::Zeros => f.write_str("zeros"),
            TapeMode::Max => f.write_str("max"),
            TapeMode::Alternating => f.write_str("alternating"),
            TapeMode::Random(seed) => write!(f, "random:{seed}"),
            TapeMode::FromFile(path) => write!(f, "file:{}", path.display()),
        }
    }
}

/// Where [`CatalyticState::assert_restored`] found the first difference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub register: RegisterId,
    pub coord: usize,
    pub expected: u64,
    pub found: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestoreReport {
    pub checked: Vec<RegisterId>,
    pub first_mismatch: Option<Mismatch>,
}

impl RestoreReport {
    pub fn passed(&self) -> bool {
        self.first_mismatch.is_none()
    }

    pub fn into_result(self) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            Err(Error::RestorationFailed(self))
        }
    }
}

impl fmt::Display for RestoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.first_mismatch {
            None => write!(f, "restored {:?}", self.checked),
            Some(m) => write!(
                f,
                "register {:?} coordinate {}: expected {}, found {}",
                m.register, m.coord, m.expected, m.found
            ),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CatalyticState {
    basis: PrimeBasis,
    dim: usize,
    regs: [Vec<u64>; 3],
    snapshot: [Vec<u64>; 3],
    oracle_calls: u64,
    bits_at_calls: u64,
    pub ledger: SpaceLedger,
}

impl CatalyticState {
    pub fn new(basis: PrimeBasis, dim: usize, mode: &TapeMode) -> Result<Self> {
        let m = basis.modulus();
        let regs: [Vec<u64>; 3] = match mode {
            TapeMode::Zeros => std::array::from_fn(|_| vec![0; dim]),
            TapeMode::Max => std::array::from_fn(|_| vec![m - 1; dim]),
            TapeMode::Alternating => std::array::from_fn(|r| {
                (0..dim).map(|k| if (r * dim + k).is_multiple_of(2) { 0 } else { m - 1 }).collect()
            }),
            TapeMode::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                std::array::from_fn(|_| (0..dim).map(|_| rng.random_range(0..m)).collect())
            }
            TapeMode::FromFile(path) => {
                let file = std::fs::File::open(path)?;
                let state = Self::load_snapshot(std::io::BufReader::new(file))?;
                if state.basis != basis || state.dim != dim {
                    return Err(Error::MalformedInstance(format!(
                        "tape file is for m={} d={}, expected m={} d={}",
                        state.basis.modulus(),
                        state.dim,
                        m,
                        dim
                    )));
                }
                return Ok(state);
            }
        };
        Self::from_registers(basis, regs)
    }

    pub fn from_registers(basis: PrimeBasis, regs: [Vec<u64>; 3]) -> Result<Self> {
        let dim = regs[0].len();
        let m = basis.modulus();
        for r in &regs {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: r.len() });
            }
            if let Some((index, &value)) = r.iter().enumerate().find(|(_, &v)| v >= m) {
                return Err(Error::ResidueOutOfRange { index, value, modulus: m });
            }
        }
        Ok(Self {
            basis,
            dim,
            snapshot: regs.clone(),
            regs,
            oracle_calls: 0,
            bits_at_calls: 0,
            ledger: SpaceLedger::new(),
        })
    }

    pub fn basis(&self) -> &PrimeBasis {
        &self.basis
    }

    pub fn modulus(&self) -> u64 {
        self.basis.modulus()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn register(&self, id: RegisterId) -> &[u64] {
        &self.regs[id.index()]
    }

    pub fn snapshot(&self, id: RegisterId) -> &[u64] {
        &self.snapshot[id.index()]
    }

    pub fn oracle_calls(&self) -> u64 {
        self.oracle_calls
    }

    /// Count one oracle call and note the free space held at that instant.
    pub fn count_oracle_call(&mut self) {
        self.oracle_calls += 1;
        self.bits_at_calls = self.bits_at_calls.max(self.ledger.current_bits());
    }

    /// Largest free-space total seen at the moment of an oracle call.
    pub fn peak_bits_at_oracle_calls(&self) -> u64 {
        self.bits_at_calls
    }

    /// Bits of catalytic tape behind the registers.
    pub fn catalytic_bits(&self) -> u64 {
        TapeLayout::new(self.modulus(), self.dim).total_bits()
    }

    /// `target += gamma * coords`; the source must yield exactly `d` values.
    pub fn add_scaled<I>(&mut self, target: RegisterId, gamma: u64, coords: I) -> Result<()>
    where
        I: IntoIterator<Item = u64>,
        I::IntoIter: ExactSizeIterator,
    {
        let coords = coords.into_iter();
        if coords.len() != self.dim {
            return Err(Error::LengthMismatch { expected: self.dim, found: coords.len() });
        }
        let m = self.modulus();
        let gamma = gamma % m;
        if gamma == 0 {
            return Ok(());
        }
        for (slot, c) in self.regs[target.index()].iter_mut().zip(coords) {
            *slot = add_mod(*slot, mul_mod(gamma, c % m, m), m);
        }
        Ok(())
    }

    /// `<register, coords>` over `Z_m`, streamed.
    pub fn dot<I>(&self, source: RegisterId, coords: I) -> Result<u64>
    where
        I: IntoIterator<Item = u64>,
        I::IntoIter: ExactSizeIterator,
    {
        let coords = coords.into_iter();
        if coords.len() != self.dim {
            return Err(Error::LengthMismatch { expected: self.dim, found: coords.len() });
        }
        let m = self.modulus();
        let mut acc = 0u64;
        for (&x, c) in self.regs[source.index()].iter().zip(coords) {
            acc += x * (c % m);
            if acc >= 1 << 62 {
                acc %= m;
            }
        }
        Ok(acc % m)
    }

    /// `<a, b>` between two registers.
    pub fn register_dot(&self, a: RegisterId, b: RegisterId) -> u64 {
        crate::modmath::dot_mod(&self.regs[a.index()], &self.regs[b.index()], self.modulus())
    }

    /// Exchange two registers by pointer; the ledger sees one pointer of scratch.
    pub fn swap_registers(&mut self, a: RegisterId, b: RegisterId) -> Result<()> {
        if a == b {
            return Err(Error::Invariant(format!("swap of {a:?} with itself")));
        }
        let scope = self.ledger.push("swap pointer", u64::from(bit_width(self.dim as u64 * 3).max(1)));
        self.regs.swap(a.index(), b.index());
        self.ledger.pop(scope)
    }

    /// Direct write access for tests that tamper with the tape.
    pub fn register_mut(&mut self, id: RegisterId) -> &mut [u64] {
        &mut self.regs[id.index()]
    }

    pub fn assert_restored(&self, which: &[RegisterId]) -> RestoreReport {
        let first_mismatch = which.iter().find_map(|&id| {
            let (now, then) = (&self.regs[id.index()], &self.snapshot[id.index()]);
            now.iter().zip(then).enumerate().find(|(_, (a, b))| a != b).map(|(coord, (&found, &expected))| Mismatch {
                register: id,
                coord,
                expected,
                found,
            })
        });
        RestoreReport { checked: which.to_vec(), first_mismatch }
    }

    /// Treat the current contents as the new reference point.
    pub fn retake_snapshot(&mut self) {
        self.snapshot.clone_from(&self.regs);
    }

    /// Header `catalytic m=<m> primes=<p,..> d=<d>`, then `x`, `y`, `z` lines.
    pub fn dump_snapshot(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "catalytic primes={} d={}", self.basis, self.dim)?;
        for (name, reg) in ["x", "y", "z"].iter().zip(&self.regs) {
            let coords: Vec<String> = reg.iter().map(u64::to_string).collect();
            writeln!(out, "{name} {}", coords.join(" "))?;
        }
        Ok(())
    }

    pub fn load_snapshot(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::parse(1, 0, "empty snapshot"))??;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("catalytic") {
            return Err(Error::parse(1, 0, "expected `catalytic` header"));
        }
        let primes_field = fields.next().and_then(|f| f.strip_prefix("primes="));
        let primes: Vec<u64> = primes_field
            .ok_or_else(|| Error::parse(1, 1, "expected primes="))?
            .split(',')
            .map(|p| p.parse().map_err(|_| Error::parse(1, 1, format!("bad prime {p:?}"))))
            .collect::<Result<_>>()?;
        let dim: usize = fields
            .next()
            .and_then(|f| f.strip_prefix("d="))
            .and_then(|d| d.parse().ok())
            .ok_or_else(|| Error::parse(1, 2, "expected d=<int>"))?;
        let basis = PrimeBasis::new(&primes)?;
        let mut regs: [Vec<u64>; 3] = Default::default();
        for (k, name) in ["x", "y", "z"].iter().enumerate() {
            let line_no = k + 2;
            let line = lines.next().ok_or_else(|| Error::parse(line_no, 0, "missing register line"))??;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(name) {
                return Err(Error::parse(line_no, 0, format!("expected register {name}")));
            }
            regs[k] = parts
                .enumerate()
                .map(|(f, v)| v.parse().map_err(|_| Error::parse(line_no, f + 1, format!("bad coordinate {v:?}"))))
                .collect::<Result<_>>()?;
            if regs[k].len() != dim {
                return Err(Error::parse(line_no, 0, format!("expected {dim} coordinates, found {}", regs[k].len())));
            }
        }
        Self::from_registers(basis, regs)
    }
}
