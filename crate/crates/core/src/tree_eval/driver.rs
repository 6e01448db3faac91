//! The recursive catalytic driver.
//!
//! One-level updates are stacked along a path register `u`. When the update
//! running at node `u` asks the oracle to touch `x` (or `y`), the driver swaps
//! that register with `z`, moves `u` to the child and runs the child's update
//! with the requested scalar and vector side, so the child's "add into `z`" is
//! exactly the parent's "add into `x`". Children that are leaves are handled
//! by adding the leaf's family vector directly.
//!
//! At the root the update adds `packed(v_root)` into the last coordinates of
//! `z`. Reading those against a saved copy gives the value; a second run with
//! the negated scalar puts the tape back.

use std::time::Instant;

use super::{NodePath, TreeEvalInstance};
use crate::catalytic::{CatalyticState, RegisterId, RestoreReport};
use crate::error::{Error, Result};
use crate::modmath::bit_width;
use crate::mv_family::MvFamily;
use crate::one_level::{
    one_level_update, oracle_calls_per_update, InnerProductMode, OneLevelTask, Oracle, OracleRequest, ValuePacking,
    WFamilySelector,
};

/// Where the root value is collected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValueSlotMode {
    /// The value coordinates stay catalytic: copy them to free space, run
    /// twice (`+1`, then `-1`) and read the difference in between.
    #[default]
    CatalyticCopy,
    /// The value coordinates are borrowed as free space: zero them, run
    /// once, read them directly, and write the saved contents back.
    FreeSpace,
}

impl ValueSlotMode {
    pub fn passes(self) -> u64 {
        match self {
            ValueSlotMode::CatalyticCopy => 2,
            ValueSlotMode::FreeSpace => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CatalyticOptions {
    pub inner_products: InnerProductMode,
    pub value_slot: ValueSlotMode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalyticOutcome {
    pub value: u64,
    pub oracle_calls: u64,
    pub peak_free_bits: u64,
    pub restore: RestoreReport,
    pub wall_time_ms: u64,
}

/// Oracle answering a node's calls by recursing into its children.
#[derive(Debug)]
pub struct TreeOracle<'a> {
    pub instance: &'a TreeEvalInstance,
    pub family: &'a MvFamily,
    pub mode: InnerProductMode,
    /// Node whose update is currently issuing calls.
    pub path: NodePath,
}

impl Oracle for TreeOracle<'_> {
    fn call(&mut self, state: &mut CatalyticState, req: OracleRequest) -> Result<()> {
        handle_oracle_call(self, state, req)
    }
}

/// Serve one call from the update at `ctx.path`.
pub fn handle_oracle_call(ctx: &mut TreeOracle<'_>, state: &mut CatalyticState, req: OracleRequest) -> Result<()> {
    let instance = ctx.instance;
    let family = ctx.family;
    let h = instance.h;
    if ctx.path.len() >= h {
        return Err(Error::PathOverflow { depth: ctx.path.len() + 1, height: h });
    }
    let elem = u64::from(state.basis().element_bits());
    let child = ctx.path.child(req.sigma.bit(), 2);
    if child.len() == h {
        let scope =
            state.ledger.push("leaf update", u64::from(instance.ell) + elem + u64::from(bit_width(state.dim() as u64)));
        let leaf = instance.leaf(child.index());
        state.add_scaled(req.sigma.register(), req.gamma, family.coords(req.ctrl, leaf)?)?;
        return state.ledger.pop(scope);
    }
    // the caller's own live data is already on the ledger; stash the request itself
    let stash = state.ledger.push("level stash", elem + 2);
    let target = req.sigma.register();
    state.swap_registers(target, RegisterId::Z)?;
    let parent = std::mem::replace(&mut ctx.path, child);
    let task = OneLevelTask {
        family,
        table: instance.table(child.len(), child.index()),
        ell: instance.ell,
        gamma: req.gamma,
        wfam: WFamilySelector::for_ctrl(req.ctrl),
        mode: ctx.mode,
    };
    let result = one_level_update(&task, state, ctx);
    ctx.path = parent;
    state.swap_registers(target, RegisterId::Z)?;
    result?;
    state.ledger.pop(stash)
}

/// Oracle calls in one full evaluation: each pass runs `Q = 4 + 4 * 4^t`
/// calls at the root, each non-leaf call spawns a child update with `Q` calls
/// of its own, so a pass costs `Q + Q^2 + ... + Q^h`.
pub fn expected_oracle_calls(h: usize, t: usize, value_slot: ValueSlotMode) -> u128 {
    let q = u128::from(oracle_calls_per_update(t));
    let per_pass: u128 = (1..=h as u32).map(|k| q.pow(k)).sum();
    u128::from(value_slot.passes()) * per_pass
}

fn check_inputs(instance: &TreeEvalInstance, family: &MvFamily, state: &CatalyticState) -> Result<()> {
    instance.validate()?;
    if instance.fanin != 2 {
        return Err(Error::MalformedInstance(format!(
            "catalytic evaluation needs fanin 2, found {} (reduce it first)",
            instance.fanin
        )));
    }
    if family.size() < 1 << instance.ell {
        return Err(Error::Infeasible(format!("family of size {} for ell = {}", family.size(), instance.ell)));
    }
    if state.dim() != family.dim() {
        return Err(Error::DimensionMismatch { expected: family.dim(), found: state.dim() });
    }
    if state.basis() != family.basis() {
        return Err(Error::InvalidBasis(format!("state over {}, family over {}", state.basis(), family.basis())));
    }
    Ok(())
}

/// Evaluate the root catalytically; restoration failure is an error.
pub fn eval_catalytic(
    instance: &TreeEvalInstance,
    family: &MvFamily,
    state: &mut CatalyticState,
    opts: CatalyticOptions,
) -> Result<CatalyticOutcome> {
    let started = Instant::now();
    check_inputs(instance, family, state)?;
    let m = state.modulus();
    let packing = ValuePacking::new(instance.ell, m, state.dim())?;
    let start = packing.start();
    let elem = u64::from(state.basis().element_bits());
    let calls_before = state.oracle_calls();
    state.ledger.reset_peak();
    let baseline_bits = state.ledger.current_bits();

    let path_scope = state.ledger.push("node path", NodePath::register_bits(instance.h, 2));
    let value_scope = state.ledger.push("value slot copy", packing.coords as u64 * elem);
    let saved: Vec<u64> = state.register(RegisterId::Z)[start..].to_vec();
    if opts.value_slot == ValueSlotMode::FreeSpace {
        state.register_mut(RegisterId::Z)[start..].iter_mut().for_each(|c| *c = 0);
    }
    let reference: Vec<u64> = state.register(RegisterId::Z)[start..].to_vec();

    let mut oracle = TreeOracle { instance, family, mode: opts.inner_products, path: NodePath::root() };
    let mut run_root = |state: &mut CatalyticState, gamma: u64| {
        let task = OneLevelTask {
            family,
            table: instance.table(0, 0),
            ell: instance.ell,
            gamma,
            wfam: WFamilySelector::Value(packing),
            mode: opts.inner_products,
        };
        one_level_update(&task, state, &mut oracle)
    };

    run_root(state, 1)?;
    let chunks: Vec<u64> =
        state.register(RegisterId::Z)[start..].iter().zip(&reference).map(|(&now, &was)| (now + m - was) % m).collect();
    let decoded = packing.decode(&chunks);
    match opts.value_slot {
        ValueSlotMode::CatalyticCopy => run_root(state, m - 1)?,
        ValueSlotMode::FreeSpace => state.register_mut(RegisterId::Z)[start..].copy_from_slice(&saved),
    }
    state.ledger.pop(value_scope)?;
    state.ledger.pop(path_scope)?;

    let restore = state.assert_restored(&RegisterId::ALL);
    if !restore.passed() {
        return Err(Error::RestorationFailed(restore));
    }
    let value = decoded?;
    Ok(CatalyticOutcome {
        value,
        oracle_calls: state.oracle_calls() - calls_before,
        peak_free_bits: state.ledger.peak_bits() - baseline_bits,
        restore,
        wall_time_ms: started.elapsed().as_millis() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalytic::TapeMode;
    use crate::modmath::PrimeBasis;
    use crate::mv_family::VectorKind;
    use crate::one_level::Side;

    fn setup(primes: &[u64], ell: u32) -> (PrimeBasis, MvFamily) {
        let b = PrimeBasis::new(primes).unwrap();
        let f = MvFamily::for_ell(ell, &b).unwrap();
        (b, f)
    }

    #[test]
    fn height_one_matches_table_lookup() {
        let (b, fam) = setup(&[3, 5], 2);
        for seed in 0..5 {
            let inst = TreeEvalInstance::generate(1, 2, 2, seed).unwrap();
            let mut state = CatalyticState::new(b.clone(), fam.dim(), &TapeMode::Random(seed)).unwrap();
            let out = eval_catalytic(&inst, &fam, &mut state, CatalyticOptions::default()).unwrap();
            assert_eq!(out.value, inst.eval_bruteforce().unwrap());
            assert_eq!(u128::from(out.oracle_calls), expected_oracle_calls(1, 2, ValueSlotMode::CatalyticCopy));
        }
    }

    #[test]
    fn deeper_trees_small_basis() {
        let (b, fam) = setup(&[3], 2);
        for seed in 0..4 {
            for h in 1..=3 {
                let inst = TreeEvalInstance::generate(h, 2, 2, seed).unwrap();
                for tape in [TapeMode::Zeros, TapeMode::Max, TapeMode::Alternating, TapeMode::Random(seed)] {
                    let mut state = CatalyticState::new(b.clone(), fam.dim(), &tape).unwrap();
                    let out = eval_catalytic(&inst, &fam, &mut state, CatalyticOptions::default()).unwrap();
                    assert_eq!(out.value, inst.eval_bruteforce().unwrap());
                    assert!(out.restore.passed());
                    assert_eq!(u128::from(out.oracle_calls), expected_oracle_calls(h, 1, ValueSlotMode::CatalyticCopy));
                    assert_eq!(state.ledger.current_bits(), 0);
                }
            }
        }
    }

    #[test]
    fn both_value_slot_readings_agree() {
        let (b, fam) = setup(&[3, 5], 1);
        for seed in 0..4 {
            let inst = TreeEvalInstance::generate(2, 1, 2, seed).unwrap();
            let mut values = Vec::new();
            for (slot, table) in [
                (ValueSlotMode::CatalyticCopy, InnerProductMode::Streaming),
                (ValueSlotMode::FreeSpace, InnerProductMode::Table),
            ] {
                let mut state = CatalyticState::new(b.clone(), fam.dim(), &TapeMode::Random(seed + 10)).unwrap();
                let opts = CatalyticOptions { inner_products: table, value_slot: slot };
                let out = eval_catalytic(&inst, &fam, &mut state, opts).unwrap();
                assert_eq!(u128::from(out.oracle_calls), expected_oracle_calls(2, 2, slot));
                values.push(out.value);
            }
            assert_eq!(values[0], values[1]);
            assert_eq!(values[0], inst.eval_bruteforce().unwrap());
        }
    }

    #[test]
    fn leaf_adjacent_call_adds_the_leaf_vector() {
        let (b, fam) = setup(&[3, 5], 2);
        let inst = TreeEvalInstance::generate(1, 2, 2, 9).unwrap();
        let mut state = CatalyticState::new(b, fam.dim(), &TapeMode::Random(2)).unwrap();
        let mut oracle =
            TreeOracle { instance: &inst, family: &fam, mode: InnerProductMode::Streaming, path: NodePath::root() };
        let req = OracleRequest { gamma: 1, ctrl: VectorKind::U, sigma: Side::Left };
        handle_oracle_call(&mut oracle, &mut state, req).unwrap();
        let u = fam.u_vector(inst.leaves[0]).unwrap();
        let want: Vec<u64> = state.snapshot(RegisterId::X).iter().zip(&u).map(|(&x, &c)| (x + c) % 15).collect();
        assert_eq!(state.register(RegisterId::X), &want[..]);
        assert!(state.assert_restored(&[RegisterId::Y, RegisterId::Z]).passed());
    }

    #[test]
    fn internal_call_and_its_inverse_restore() {
        let (b, fam) = setup(&[3], 2);
        let inst = TreeEvalInstance::generate(2, 2, 2, 4).unwrap();
        let mut state = CatalyticState::new(b, fam.dim(), &TapeMode::Random(8)).unwrap();
        let mut oracle =
            TreeOracle { instance: &inst, family: &fam, mode: InnerProductMode::Streaming, path: NodePath::root() };
        for gamma in [0u64, 1, 2] {
            let req = OracleRequest { gamma, ctrl: VectorKind::V, sigma: Side::Right };
            handle_oracle_call(&mut oracle, &mut state, req).unwrap();
            // the child update adds gamma * v_{v_1} into y
            let v = fam.v_vector(inst.value_at(NodePath::new(1, 1))).unwrap();
            let want: Vec<u64> =
                state.snapshot(RegisterId::Y).iter().zip(&v).map(|(&y, &c)| (y + gamma * c) % 3).collect();
            assert_eq!(state.register(RegisterId::Y), &want[..]);
            handle_oracle_call(&mut oracle, &mut state, OracleRequest { gamma: (3 - gamma) % 3, ..req }).unwrap();
            assert!(state.assert_restored(&RegisterId::ALL).passed());
        }
        assert_eq!(state.oracle_calls(), 6 * oracle_calls_per_update(1));
    }

    #[test]
    fn path_overflow_is_reported() {
        let (b, fam) = setup(&[3], 1);
        let inst = TreeEvalInstance::generate(1, 1, 2, 0).unwrap();
        let mut state = CatalyticState::new(b, fam.dim(), &TapeMode::Zeros).unwrap();
        let mut oracle =
            TreeOracle { instance: &inst, family: &fam, mode: InnerProductMode::Streaming, path: NodePath::new(0, 1) };
        let req = OracleRequest { gamma: 1, ctrl: VectorKind::U, sigma: Side::Left };
        assert!(matches!(handle_oracle_call(&mut oracle, &mut state, req), Err(Error::PathOverflow { .. })));
    }

    #[test]
    fn recurrence_values() {
        assert_eq!(expected_oracle_calls(1, 1, ValueSlotMode::CatalyticCopy), 40);
        assert_eq!(expected_oracle_calls(2, 2, ValueSlotMode::CatalyticCopy), 2 * (68 + 68 * 68));
        assert_eq!(expected_oracle_calls(3, 2, ValueSlotMode::FreeSpace), 68 + 68 * 68 + 68 * 68 * 68);
    }
}
