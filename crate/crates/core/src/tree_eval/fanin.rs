//! Fanin reduction: any fanin-`r` instance as a binary one.
//!
//! Each original node becomes a binary gadget of height `k = ceil(log2 r)`.
//! A gadget node covers a contiguous range of the original children, giving
//! the left half `ceil(n/2)` of them. Below the gadget root, a node outputs
//! the concatenation of its range's values (first child most significant);
//! the gadget root feeds that concatenation to the original table. Ranges
//! that run out of children become all-zero dummy subtrees. Labels widen to
//! `ell * ceil(r/2)` bits, the most a non-root gadget node has to carry.

use super::TreeEvalInstance;
use crate::error::{Error, Result};

/// Widest label the reduced instance may use (tables have `2^(2 ell')` entries).
pub const MAX_REDUCED_ELL: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Dummy,
    /// Original node `index` at original depth `depth` (a leaf when `depth == h`).
    Original {
        depth: usize,
        index: u64,
    },
    /// Inner gadget node of original node `index`, covering children `lo..hi`, `level` below the gadget root.
    Gadget {
        depth: usize,
        index: u64,
        lo: usize,
        hi: usize,
        level: usize,
    },
}

pub fn gadget_height(fanin: usize) -> usize {
    (usize::BITS - (fanin - 1).leading_zeros()) as usize
}

pub fn reduced_ell(ell: u32, fanin: usize) -> u32 {
    ell * fanin.div_ceil(2) as u32
}

fn mask(bits: u64) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1 << bits) - 1
    }
}

pub fn reduce_fanin(inst: &TreeEvalInstance) -> Result<TreeEvalInstance> {
    inst.validate()?;
    let r = inst.fanin;
    let k = gadget_height(r);
    let ell = inst.ell;
    let ell2 = reduced_ell(ell, r);
    if ell2 > MAX_REDUCED_ELL {
        return Err(Error::Infeasible(format!("fanin {r} with ell {ell} needs {ell2}-bit labels")));
    }
    let height = inst.h * k;
    TreeEvalInstance::shape(height, ell2, 2)?;
    let table_len = 1usize << (2 * ell2);

    let as_gadget_root = |depth: usize, index: u64| -> Role {
        if depth == inst.h {
            Role::Original { depth, index }
        } else {
            Role::Gadget { depth, index, lo: 0, hi: r, level: 0 }
        }
    };

    let mut roles = vec![as_gadget_root(0, 0)];
    let mut nodes = Vec::with_capacity(height);
    for _ in 0..height {
        let mut tables = Vec::with_capacity(roles.len());
        let mut next = Vec::with_capacity(roles.len() * 2);
        for role in &roles {
            match *role {
                Role::Dummy => {
                    tables.push(vec![0; table_len]);
                    next.extend([Role::Dummy, Role::Dummy]);
                }
                Role::Original { depth, .. } => {
                    return Err(Error::Invariant(format!("original leaf above the leaf layer at depth {depth}")));
                }
                Role::Gadget { depth, index, lo, hi, level } => {
                    let n = hi - lo;
                    let nl = n.div_ceil(2);
                    let nr = n - nl;
                    let (lbits, rbits) = (u64::from(ell) * nl as u64, u64::from(ell) * nr as u64);
                    let table: Vec<u64> = (0..table_len as u64)
                        .map(|idx| {
                            let left = (idx >> ell2) & mask(lbits);
                            let right = idx & mask(u64::from(ell2)) & mask(rbits);
                            let packed = left << rbits | right;
                            if level == 0 {
                                inst.table(depth, index)[packed as usize]
                            } else {
                                packed
                            }
                        })
                        .collect();
                    tables.push(table);
                    for (a, b) in [(lo, lo + nl), (lo + nl, hi)] {
                        next.push(if a == b {
                            Role::Dummy
                        } else if level + 1 == k {
                            debug_assert_eq!(b - a, 1);
                            as_gadget_root(depth + 1, index * r as u64 + a as u64)
                        } else {
                            Role::Gadget { depth, index, lo: a, hi: b, level: level + 1 }
                        });
                    }
                }
            }
        }
        nodes.push(tables);
        roles = next;
    }
    let leaves = roles
        .iter()
        .map(|role| match *role {
            Role::Dummy => Ok(0),
            Role::Original { depth, index } if depth == inst.h => Ok(inst.leaf(index)),
            _ => Err(Error::Invariant("gadget node at the leaf layer".into())),
        })
        .collect::<Result<_>>()?;
    let out = TreeEvalInstance { h: height, ell: ell2, fanin: 2, leaves, nodes };
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gadget_sizes() {
        assert_eq!((gadget_height(2), gadget_height(3), gadget_height(4), gadget_height(5)), (1, 2, 2, 3));
        assert_eq!((reduced_ell(1, 2), reduced_ell(1, 3), reduced_ell(2, 4)), (1, 2, 4));
    }

    #[test]
    fn binary_instances_are_unchanged() {
        let inst = TreeEvalInstance::generate(3, 2, 2, 4).unwrap();
        assert_eq!(reduce_fanin(&inst).unwrap(), inst);
    }

    #[test]
    fn reduction_preserves_the_root_value() {
        for seed in 0..20 {
            for (h, ell, r) in [(2, 1, 3), (1, 1, 4), (2, 1, 4), (1, 2, 3), (2, 1, 5)] {
                let inst = TreeEvalInstance::generate(h, ell, r, seed).unwrap();
                let reduced = reduce_fanin(&inst).unwrap();
                assert_eq!(reduced.fanin, 2);
                assert_eq!(reduced.h, h * gadget_height(r));
                assert_eq!(reduced.eval_bruteforce().unwrap(), inst.eval_bruteforce().unwrap(), "seed {seed} r {r}");
            }
        }
    }

    #[test]
    fn oversized_labels_are_rejected() {
        let inst = TreeEvalInstance::generate(1, 3, 7, 0).unwrap();
        assert!(matches!(reduce_fanin(&inst), Err(Error::Infeasible(_))));
    }
}
