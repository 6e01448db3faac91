use std::fmt::Write as _;
use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::modmath::bit_width;

/// Caps keeping instances desk-sized: at most `2^24` leaves and table entries.
pub const MAX_LEAVES_LOG2: u32 = 24;
pub const MAX_TABLE_LOG2: u32 = 24;

/// A full `fanin`-ary tree of height `h` with `ell`-bit values.
///
/// Nodes at depth `k` are numbered `0..fanin^k` by reading their path as a
/// base-`fanin` number, first step most significant. A table maps the
/// children's values `v_0..v_{r-1}` through index
/// `sum_k v_k << (ell * (r - 1 - k))`, so with two children `f(a, b)` lives at
/// `(a << ell) | b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeEvalInstance {
    pub h: usize,
    pub ell: u32,
    pub fanin: usize,
    pub leaves: Vec<u64>,
    /// `nodes[k][i]` is the table of node `i` at depth `k`.
    pub nodes: Vec<Vec<Vec<u64>>>,
}

/// Position in a tree: `len` steps from the root, packed base-`fanin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct NodePath {
    index: u64,
    len: usize,
}

impl NodePath {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn new(index: u64, len: usize) -> Self {
        Self { index, len }
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_root(&self) -> bool {
        self.len == 0
    }

    pub fn is_empty(&self) -> bool {
        self.is_root()
    }

    pub fn child(&self, digit: u64, fanin: usize) -> Self {
        Self { index: self.index * fanin as u64 + digit, len: self.len + 1 }
    }

    /// Free space for a path register over a tree of height `h`.
    pub fn register_bits(h: usize, fanin: usize) -> u64 {
        h as u64 * u64::from(bit_width(fanin as u64)) + u64::from(bit_width(h as u64 + 1))
    }

    /// Digits over `0-9a-z`; the root is `-`.
    pub fn label(&self, fanin: usize) -> String {
        if self.len == 0 {
            return "-".into();
        }
        let mut digits = vec!['0'; self.len];
        let mut rest = self.index;
        for d in digits.iter_mut().rev() {
            *d = char::from_digit((rest % fanin as u64) as u32, 36).expect("fanin <= 36");
            rest /= fanin as u64;
        }
        digits.into_iter().collect()
    }

    pub fn parse_label(label: &str, fanin: usize) -> Option<Self> {
        if label == "-" {
            return Some(Self::root());
        }
        let mut index = 0u64;
        for c in label.chars() {
            let d = c.to_digit(36)? as u64;
            if d >= fanin as u64 {
                return None;
            }
            index = index.checked_mul(fanin as u64)?.checked_add(d)?;
        }
        Some(Self { index, len: label.len() })
    }
}

fn checked_pow(base: usize, exp: usize, cap_log2: u32) -> Result<u64> {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u64);
        if acc > 1 << cap_log2 {
            return Err(Error::Infeasible(format!("{base}^{exp} exceeds 2^{cap_log2}")));
        }
    }
    Ok(acc)
}

impl TreeEvalInstance {
    /// Check the shape parameters and return `(leaf count, table length)`.
    pub fn shape(h: usize, ell: u32, fanin: usize) -> Result<(u64, u64)> {
        if h == 0 || ell == 0 || !(2..=36).contains(&fanin) || ell > 32 {
            return Err(Error::MalformedInstance(format!("unsupported shape h={h} ell={ell} r={fanin}")));
        }
        let leaves = checked_pow(fanin, h, MAX_LEAVES_LOG2)?;
        let table_log2 = fanin as u64 * u64::from(ell);
        if table_log2 > u64::from(MAX_TABLE_LOG2) {
            return Err(Error::Infeasible(format!("tables of 2^{table_log2} entries")));
        }
        Ok((leaves, 1 << table_log2))
    }

    pub fn validate(&self) -> Result<()> {
        let (leaves, table_len) = Self::shape(self.h, self.ell, self.fanin)?;
        let bad = |msg: String| Err(Error::MalformedInstance(msg));
        if self.leaves.len() as u64 != leaves {
            return bad(format!("expected {leaves} leaves, found {}", self.leaves.len()));
        }
        if let Some(&v) = self.leaves.iter().find(|&&v| v >> self.ell != 0) {
            return bad(format!("leaf value {v:#x} exceeds {} bits", self.ell));
        }
        if self.nodes.len() != self.h {
            return bad(format!("expected {} internal levels, found {}", self.h, self.nodes.len()));
        }
        for (k, level) in self.nodes.iter().enumerate() {
            if level.len() as u64 != checked_pow(self.fanin, k, MAX_LEAVES_LOG2)? {
                return bad(format!("level {k} has {} nodes", level.len()));
            }
            for (i, table) in level.iter().enumerate() {
                if table.len() as u64 != table_len {
                    return bad(format!(
                        "node {} has {} entries",
                        NodePath::new(i as u64, k).label(self.fanin),
                        table.len()
                    ));
                }
                if let Some(&v) = table.iter().find(|&&v| v >> self.ell != 0) {
                    return bad(format!("table entry {v:#x} exceeds {} bits", self.ell));
                }
            }
        }
        Ok(())
    }

    pub fn table(&self, depth: usize, index: u64) -> &[u64] {
        &self.nodes[depth][index as usize]
    }

    pub fn leaf(&self, index: u64) -> u64 {
        self.leaves[index as usize]
    }

    /// Input length `r^h * ell * 2^(r ell)`, the usual size measure.
    pub fn input_bits(&self) -> u128 {
        ((self.fanin as u128).pow(self.h as u32) * u128::from(self.ell)) << (self.fanin as u32 * self.ell)
    }

    /// Table index for the children's values, first child most significant.
    pub fn table_index(&self, children: &[u64]) -> usize {
        children.iter().fold(0usize, |acc, &v| acc << self.ell | v as usize)
    }

    pub fn eval_bruteforce(&self) -> Result<u64> {
        self.validate()?;
        Ok(self.value_at(NodePath::root()))
    }

    /// `v_u` by direct recursion.
    pub fn value_at(&self, path: NodePath) -> u64 {
        if path.len() == self.h {
            return self.leaf(path.index());
        }
        let children: Vec<u64> = (0..self.fanin as u64).map(|d| self.value_at(path.child(d, self.fanin))).collect();
        self.table(path.len(), path.index())[self.table_index(&children)]
    }

    pub fn generate(h: usize, ell: u32, fanin: usize, seed: u64) -> Result<Self> {
        let (leaves, table_len) = Self::shape(h, ell, fanin)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let limit = 1u64 << ell;
        let leaves = (0..leaves).map(|_| rng.random_range(0..limit)).collect();
        let nodes = (0..h)
            .map(|k| {
                (0..(fanin as u64).pow(k as u32))
                    .map(|_| (0..table_len).map(|_| rng.random_range(0..limit)).collect())
                    .collect()
            })
            .collect();
        Ok(Self { h, ell, fanin, leaves, nodes })
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        writeln!(out, "treeeval v1 h={} ell={} r={}", self.h, self.ell, self.fanin).unwrap();
        for (i, v) in self.leaves.iter().enumerate() {
            writeln!(out, "leaf {} {v:x}", NodePath::new(i as u64, self.h).label(self.fanin)).unwrap();
        }
        for (k, level) in self.nodes.iter().enumerate() {
            for (i, table) in level.iter().enumerate() {
                out.push_str("node ");
                out.push_str(&NodePath::new(i as u64, k).label(self.fanin));
                for v in table {
                    write!(out, " {v:x}").unwrap();
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::read(text.as_bytes())
    }

    /// Read the line format; errors name the 1-based line and field.
    pub fn read(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, 1, "empty input"))?;
        let header = header?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "treeeval" || fields[1] != "v1" {
            return Err(Error::parse(1, 1, "expected `treeeval v1 h=<int> ell=<int> r=<int>`"));
        }
        let param = |field: usize, key: &str| -> Result<u64> {
            fields[field]
                .strip_prefix(key)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::parse(1, field + 1, format!("expected {key}<int>")))
        };
        let h = param(2, "h=")? as usize;
        let ell = param(3, "ell=")? as u32;
        let fanin = param(4, "r=")? as usize;
        let (leaf_count, table_len) = Self::shape(h, ell, fanin).map_err(|e| Error::parse(1, 3, e.to_string()))?;

        let parse_value = |s: &str, line: usize, field: usize| -> Result<u64> {
            let v = u64::from_str_radix(s, 16).map_err(|_| Error::parse(line, field, format!("bad hex {s:?}")))?;
            if v >> ell != 0 {
                return Err(Error::parse(line, field, format!("value {v:#x} exceeds {ell} bits")));
            }
            Ok(v)
        };

        let mut leaves = Vec::with_capacity(leaf_count as usize);
        let mut nodes: Vec<Vec<Vec<u64>>> = vec![Vec::new(); h];
        let mut depth = 0usize;
        for (line_no, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let path = parts.get(1).and_then(|l| NodePath::parse_label(l, fanin));
            match parts[0] {
                "leaf" => {
                    let expected = NodePath::new(leaves.len() as u64, h);
                    if path != Some(expected) || leaves.len() as u64 >= leaf_count || !nodes[0].is_empty() {
                        return Err(Error::parse(line_no, 2, format!("expected leaf {}", expected.label(fanin))));
                    }
                    if parts.len() != 3 {
                        return Err(Error::parse(line_no, parts.len().min(4), "expected one value"));
                    }
                    leaves.push(parse_value(parts[2], line_no, 3)?);
                }
                "node" => {
                    while depth < h && nodes[depth].len() as u64 == (fanin as u64).pow(depth as u32) {
                        depth += 1;
                    }
                    if depth == h {
                        return Err(Error::parse(line_no, 1, "more node lines than the tree has nodes"));
                    }
                    let expected = NodePath::new(nodes[depth].len() as u64, depth);
                    if path != Some(expected) || (leaves.len() as u64) < leaf_count {
                        return Err(Error::parse(line_no, 2, format!("expected node {}", expected.label(fanin))));
                    }
                    if parts.len() as u64 != 2 + table_len {
                        return Err(Error::parse(
                            line_no,
                            parts.len(),
                            format!("expected {table_len} entries, found {}", parts.len() - 2),
                        ));
                    }
                    let table = parts[2..]
                        .iter()
                        .enumerate()
                        .map(|(f, s)| parse_value(s, line_no, f + 3))
                        .collect::<Result<_>>()?;
                    nodes[depth].push(table);
                }
                other => return Err(Error::parse(line_no, 1, format!("unknown record {other:?}"))),
            }
        }
        let instance = Self { h, ell, fanin, leaves, nodes };
        instance.validate().map_err(|e| Error::parse(0, 0, format!("incomplete instance: {e}")))?;
        Ok(instance)
    }
}
