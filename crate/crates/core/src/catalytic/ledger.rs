//! Cooperative free-space accounting.
//!
//! Procedures announce what they keep in ordinary work memory by opening a
//! labelled scope with a bit count and closing it when the data is dead.
//! The ledger tracks the running total and its peak; it measures what the
//! algorithm claims to store, not what the host allocates.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    pub label: &'static str,
    pub bits: u64,
}

/// Proof of an open scope; closing scopes out of order is an error.
#[derive(Debug)]
#[must_use = "a scope must be closed with SpaceLedger::pop"]
pub struct ScopeToken {
    depth: usize,
}

#[derive(Debug, Clone, Default)]
pub struct SpaceLedger {
    stack: Vec<Allocation>,
    current: u64,
    peak: u64,
    peak_stack: Vec<Allocation>,
}

impl SpaceLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, label: &'static str, bits: u64) -> ScopeToken {
        self.stack.push(Allocation { label, bits });
        self.current += bits;
        if self.current > self.peak {
            self.peak = self.current;
            self.peak_stack.clone_from(&self.stack);
        }
        ScopeToken { depth: self.stack.len() - 1 }
    }

    pub fn pop(&mut self, token: ScopeToken) -> Result<()> {
        if token.depth + 1 != self.stack.len() {
            return Err(Error::Ledger(format!(
                "closing scope at depth {} while {} scopes are open",
                token.depth,
                self.stack.len()
            )));
        }
        let alloc = self.stack.pop().expect("depth checked above");
        self.current -= alloc.bits;
        Ok(())
    }

    pub fn current_bits(&self) -> u64 {
        self.current
    }

    pub fn peak_bits(&self) -> u64 {
        self.peak
    }

    pub fn open_scopes(&self) -> &[Allocation] {
        &self.stack
    }

    /// The scope stack at the moment the peak was reached.
    pub fn peak_profile(&self) -> &[Allocation] {
        &self.peak_stack
    }

    /// Forget the peak, keeping open scopes.
    pub fn reset_peak(&mut self) {
        self.peak = self.current;
        self.peak_stack.clone_from(&self.stack);
    }
}
