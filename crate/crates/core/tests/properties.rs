use std::collections::HashMap;

use proptest::prelude::*;

use catalytic_tree::catalytic::{decode_tape, encode_tape, BitTape, CatalyticState, RegisterId, TapeLayout, TapeMode};
use catalytic_tree::modmath::{add_mod, inverse_mod, mul_mod, PrimeBasis};
use catalytic_tree::mv_family::{index_to_set, set_to_index, MvFamily, VectorKind};
use catalytic_tree::one_level::{
    one_level_update_traced, HiddenPairOracle, InnerProductMode, OneLevelTask, TraceEvent, WFamilySelector,
};
use catalytic_tree::tree_eval::{reduce_fanin, TreeEvalInstance};

fn basis_strategy() -> impl Strategy<Value = PrimeBasis> {
    prop::sample::select(vec![vec![3u64], vec![5], vec![7], vec![3, 5], vec![3, 7], vec![5, 7], vec![3, 5, 7]])
        .prop_map(|p| PrimeBasis::new(&p).unwrap())
}

proptest! {
    #[test]
    fn crt_round_trip(basis in basis_strategy(), v in any::<u64>()) {
        let m = basis.modulus();
        let v = v % m;
        let res = basis.residues(v);
        prop_assert_eq!(basis.crt_combine(&res).unwrap(), v);
        for (r, p) in res.iter().zip(basis.primes()) {
            prop_assert_eq!(*r, v % p);
        }
    }

    #[test]
    fn crt_bits_are_per_prime_indicators(basis in basis_strategy(), bits in any::<u64>()) {
        let bits = bits & ((1 << basis.t()) - 1);
        let c = basis.crt_bits(bits);
        for (k, p) in basis.primes().iter().enumerate() {
            prop_assert_eq!(c % p, bits >> k & 1);
        }
        prop_assert_eq!(basis.is_canonical(c), bits != 0);
    }

    #[test]
    fn inverse_is_an_inverse(basis in basis_strategy(), a in 1u64..10_000) {
        let m = basis.modulus();
        let a = a % m;
        match inverse_mod(a, m) {
            Ok(inv) => prop_assert_eq!(mul_mod(a, inv, m), 1),
            Err(_) => prop_assert!(basis.primes().iter().any(|p| a % p == 0)),
        }
    }

    #[test]
    fn subset_rank_round_trip(n in 1usize..16, seed in any::<u64>()) {
        let w = (seed as usize % n) + 1;
        let total = (0..w).fold(1u64, |acc, k| acc * (n - k) as u64 / (k as u64 + 1));
        let index = (seed >> 8) % total;
        let set = index_to_set(index, w, n).unwrap();
        prop_assert_eq!(set.len(), w);
        prop_assert!(set.windows(2).all(|p| p[0] < p[1]));
        prop_assert!(set.iter().all(|&e| e < n));
        prop_assert_eq!(set_to_index(&set), index);
    }

    #[test]
    fn tape_round_trip(m in prop::sample::select(vec![3u64, 5, 7, 15, 21, 35, 105]), d in 1usize..40, seed in any::<u64>()) {
        let layout = TapeLayout::new(m, d);
        let tape = BitTape::random(layout.total_bits(), seed);
        let enc = encode_tape(&layout, &tape).unwrap();
        prop_assert!(enc.registers.iter().all(|r| r.iter().all(|&v| v < m)));
        prop_assert_eq!(decode_tape(&layout, &enc).unwrap(), tape);
    }

    #[test]
    fn instance_text_round_trip(h in 1usize..4, ell in 1u32..4, fanin in 2usize..4, seed in any::<u64>()) {
        prop_assume!(fanin == 2 || (h <= 2 && ell <= 2));
        let inst = TreeEvalInstance::generate(h, ell, fanin, seed).unwrap();
        let back = TreeEvalInstance::parse(&inst.serialize()).unwrap();
        prop_assert_eq!(back.eval_bruteforce().unwrap(), inst.eval_bruteforce().unwrap());
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn fanin_reduction_keeps_the_value(h in 1usize..3, fanin in 3usize..5, seed in any::<u64>()) {
        let inst = TreeEvalInstance::generate(h, 1, fanin, seed).unwrap();
        let red = reduce_fanin(&inst).unwrap();
        prop_assert_eq!(red.fanin, 2);
        prop_assert_eq!(red.eval_bruteforce().unwrap(), inst.eval_bruteforce().unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn one_level_adds_exactly_one_vector(
        primes in prop::sample::select(vec![vec![3u64], vec![5], vec![3, 5]]),
        ell in 1u32..3,
        a in 0u64..4,
        b in 0u64..4,
        gamma in any::<u64>(),
        seed in any::<u64>(),
        use_v in any::<bool>(),
        table_mode in any::<bool>(),
    ) {
        let basis = PrimeBasis::new(&primes).unwrap();
        let m = basis.modulus();
        let n = 1u64 << ell;
        let (a, b) = (a % n, b % n);
        let fam = MvFamily::for_ell(ell, &basis).unwrap();
        let table: Vec<u64> = (0..n * n).map(|i| (i.wrapping_mul(seed | 1) >> 7) % n).collect();
        let kind = if use_v { VectorKind::V } else { VectorKind::U };
        let task = OneLevelTask {
            family: &fam,
            table: &table,
            ell,
            gamma: gamma % m,
            wfam: WFamilySelector::for_ctrl(kind),
            mode: if table_mode { InnerProductMode::Table } else { InnerProductMode::Streaming },
        };
        let mut state = CatalyticState::new(basis, fam.dim(), &TapeMode::Random(seed)).unwrap();
        let mut counts: HashMap<(u64, u64), i64> = HashMap::new();
        let mut alpha_inv = None;
        one_level_update_traced(&task, &mut state, &mut HiddenPairOracle { family: &fam, a, b }, &mut |ev| match ev {
            TraceEvent::Sentinel { sentinel, .. } => alpha_inv = Some(sentinel.alpha_inv),
            TraceEvent::Accumulate { r, s, negative, .. } => *counts.entry((r, s)).or_default() += if negative { -1 } else { 1 },
        })
        .unwrap();

        // inclusion-exclusion over the shifts cancels every pair but (a, b)
        let alpha_inv = alpha_inv.unwrap();
        for r in 0..n {
            for s in 0..n {
                let c = counts.get(&(r, s)).copied().unwrap_or(0).rem_euclid(m as i64) as u64;
                let weight = mul_mod(c, alpha_inv, m);
                prop_assert_eq!(weight, u64::from((r, s) == (a, b)), "pair ({}, {})", r, s);
            }
        }

        let w = fam.vector(kind, table[(a << ell | b) as usize]).unwrap();
        let want: Vec<u64> = state
            .snapshot(RegisterId::Z)
            .iter()
            .zip(&w)
            .map(|(&z, &c)| add_mod(z, mul_mod(gamma % m, c, m), m))
            .collect();
        prop_assert_eq!(state.register(RegisterId::Z), &want[..]);
        prop_assert!(state.assert_restored(&[RegisterId::X, RegisterId::Y]).passed());
    }
}
