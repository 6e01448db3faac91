//! Viewing an arbitrary bit tape as three registers over `Z_m^d`.
//!
//! The tape is cut into `3d` slots of `W` bits. A slot holding `tau` is read
//! as `(tau + delta) mod 2^W`, and that is a usable ring element when it lies
//! below the largest multiple of `m` that fits in `W` bits; the register
//! coordinate is its residue and the quotient stays on the tape untouched.
//! One offset `delta` must work for every slot at once. Each slot rules out
//! fewer than `m` offsets, so with `2^W >= 4dm` a good offset always exists.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::modmath::bit_width;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TapeLayout {
    pub modulus: u64,
    pub dim: usize,
    pub slot_bits: u32,
}

impl TapeLayout {
    pub fn new(modulus: u64, dim: usize) -> Self {
        let slot_bits = bit_width(modulus) + bit_width(dim as u64) + 2;
        Self { modulus, dim, slot_bits }
    }

    pub fn slots(&self) -> usize {
        3 * self.dim
    }

    pub fn total_bits(&self) -> u64 {
        self.slots() as u64 * u64::from(self.slot_bits)
    }

    fn slot_span(&self) -> u64 {
        1 << self.slot_bits
    }

    /// Largest multiple of `m` not exceeding `2^W`.
    fn valid_limit(&self) -> u64 {
        self.slot_span() / self.modulus * self.modulus
    }
}

/// Raw catalytic bits, packed little-endian into 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitTape {
    len: u64,
    words: Vec<u64>,
}

impl BitTape {
    pub fn zeros(len: u64) -> Self {
        Self { len, words: vec![0; len.div_ceil(64) as usize] }
    }

    pub fn ones(len: u64) -> Self {
        let mut t = Self { len, words: vec![u64::MAX; len.div_ceil(64) as usize] };
        t.clear_tail();
        t
    }

    pub fn random(len: u64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Self { len, words: (0..len.div_ceil(64)).map(|_| rng.next_u64()).collect() };
        t.clear_tail();
        t
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: u64) -> bool {
        self.words[(i / 64) as usize] >> (i % 64) & 1 == 1
    }

    pub fn set_bit(&mut self, i: u64, value: bool) {
        let w = &mut self.words[(i / 64) as usize];
        if value {
            *w |= 1 << (i % 64);
        } else {
            *w &= !(1 << (i % 64));
        }
    }

    fn read(&self, start: u64, width: u32) -> u64 {
        (0..u64::from(width)).fold(0, |acc, k| acc | u64::from(self.bit(start + k)) << k)
    }

    fn write(&mut self, start: u64, width: u32, value: u64) {
        for k in 0..u64::from(width) {
            self.set_bit(start + k, value >> k & 1 == 1);
        }
    }
}

/// Register view of a tape: residues, the quotients left on the tape, and the offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedTape {
    pub registers: [Vec<u64>; 3],
    pub quotients: Vec<u64>,
    pub delta: u64,
}

/// Smallest offset that makes every slot valid.
pub fn find_offset(layout: &TapeLayout, tape: &BitTape) -> Result<u64> {
    check_len(layout, tape)?;
    let span = layout.slot_span();
    let limit = layout.valid_limit();
    let w = layout.slot_bits;
    'delta: for delta in 0..span {
        for k in 0..layout.slots() as u64 {
            let tau = tape.read(k * u64::from(w), w);
            if (tau + delta) % span >= limit {
                continue 'delta;
            }
        }
        return Ok(delta);
    }
    Err(Error::NoOffset)
}

fn check_len(layout: &TapeLayout, tape: &BitTape) -> Result<()> {
    if tape.len() != layout.total_bits() {
        return Err(Error::LengthMismatch { expected: layout.total_bits() as usize, found: tape.len() as usize });
    }
    Ok(())
}

pub fn encode_tape(layout: &TapeLayout, tape: &BitTape) -> Result<EncodedTape> {
    let delta = find_offset(layout, tape)?;
    let span = layout.slot_span();
    let w = layout.slot_bits;
    let m = layout.modulus;
    let mut registers: [Vec<u64>; 3] = Default::default();
    let mut quotients = Vec::with_capacity(layout.slots());
    for k in 0..layout.slots() {
        let shifted = (tape.read(k as u64 * u64::from(w), w) + delta) % span;
        registers[k / layout.dim].push(shifted % m);
        quotients.push(shifted / m);
    }
    Ok(EncodedTape { registers, quotients, delta })
}

pub fn decode_tape(layout: &TapeLayout, encoded: &EncodedTape) -> Result<BitTape> {
    let m = layout.modulus;
    let span = layout.slot_span();
    let w = layout.slot_bits;
    if encoded.quotients.len() != layout.slots() {
        return Err(Error::LengthMismatch { expected: layout.slots(), found: encoded.quotients.len() });
    }
    let mut tape = BitTape::zeros(layout.total_bits());
    for k in 0..layout.slots() {
        let reg = &encoded.registers[k / layout.dim];
        if reg.len() != layout.dim {
            return Err(Error::DimensionMismatch { expected: layout.dim, found: reg.len() });
        }
        let x = reg[k % layout.dim];
        let shifted = encoded.quotients[k] * m + x;
        if x >= m || shifted >= layout.valid_limit() {
            return Err(Error::ResidueOutOfRange { index: k, value: x, modulus: m });
        }
        tape.write(k as u64 * u64::from(w), w, (shifted + span - encoded.delta) % span);
    }
    Ok(tape)
}
