//! Boolean function families and their full and incremental evaluation.
//!
//! Bit layouts are fixed so results are reproducible:
//!
//! * `IterMaj3{d}`: bit `j` is the `j`-th leaf from the left.
//! * `AndOrTree{d}`: bit `j` is the gate of the `j`-th vertex in depth-first
//!   pre-order (root first, left subtree before right). Gate bit 1 is OR,
//!   0 is AND; a leaf receives in-signals 0 and 1, so it outputs its own bit.
//! * `TreePercolation`: bit `e` is the `e`-th edge in breadth-first order,
//!   level by level, left to right. Bit 1 means the edge is open.
//! * `BigInfluenceTame{n}`: bit 0 is the fallback bit, bits `1..=n` the
//!   selector block and the last `3^n` bits the parity block.

mod state;
mod table;
mod text;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::perctree::LevelProfile;

pub use state::{build_state, EvaluationState, UpdateOutcome};
pub use table::{TruthTable, MAX_TABLE_VARS};

/// Constructors reject arities above this.
pub const MAX_ARITY: usize = (1 << 31) - 1;

/// A configuration of input bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitConfig {
    bits: Vec<u8>,
}

impl BitConfig {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(i) = bits.iter().position(|&b| b > 1) {
            return Err(Error::InvalidParams(format!(
                "bit {i} has value {}, expected 0 or 1",
                bits[i]
            )));
        }
        Ok(Self { bits })
    }

    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![0; len] }
    }

    /// Bits of `value`, least significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        Self {
            bits: (0..len).map(|i| ((value >> i) & 1) as u8).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value as u8;
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| 1 - b).collect(),
        }
    }
}

/// Declarative description of one member of a function family.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FunctionSpec {
    /// Output equals bit 0; the other `m - 1` bits are ignored.
    Dictator { m: usize },
    /// Mod-2 sum of all `m` bits.
    Parity { m: usize },
    /// 1 iff bit 0 is 1 and the remaining bits have even parity.
    DictatorAndParity { m: usize },
    /// Bit 0 when bit 1 is set, otherwise the parity of bits `2..m`.
    Type2Example { m: usize },
    /// 1 iff at least `(n + 1) / 2` of the `n` bits are 1 (`n` odd).
    Majority { n: usize },
    /// Recursive majority-of-three on a ternary tree.
    IterMaj3 { depth: u32 },
    /// Random AND/OR gates on a binary tree.
    AndOrTree { depth: u32 },
    /// The fallback bit unless all selector bits are 1, in which case the
    /// parity of the last `3^n` bits.
    BigInfluenceTame { n: u32 },
    /// 1 iff an open path joins the root to level `level`.
    TreePercolation { profile: LevelProfile, level: usize },
    /// Arbitrary function given by its truth table.
    TruthTable(TruthTable),
}

#[derive(Debug)]
pub(crate) enum Structure {
    Flat,
    IterMaj3 {
        depth: u32,
        /// Number of internal vertices; leaves follow in BFS order.
        internal: usize,
    },
    AndOr {
        depth: u32,
        /// BFS vertex of each pre-order bit.
        bit_to_node: Vec<u32>,
        /// Pre-order bit of each BFS vertex.
        node_to_bit: Vec<u32>,
    },
    Perc(PercLayout),
}

/// Vertex numbering for percolation trees: the root is vertex 0 and level `k`
/// occupies `level_start[k]..level_start[k + 1]`. Edge `e` leads into vertex
/// `e + 1`.
#[derive(Debug)]
pub(crate) struct PercLayout {
    pub children: Vec<u32>,
    pub level_start: Vec<usize>,
}

impl PercLayout {
    fn new(profile: &LevelProfile, level: usize) -> Self {
        let children = profile.children()[..level].to_vec();
        let mut level_start = Vec::with_capacity(level + 2);
        let mut start = 0usize;
        let mut width = 1usize;
        level_start.push(0);
        for &c in &children {
            start += width;
            level_start.push(start);
            width *= c as usize;
        }
        level_start.push(start + width);
        Self {
            children,
            level_start,
        }
    }

    pub fn depth(&self) -> usize {
        self.children.len()
    }

    pub fn vertex_count(&self) -> usize {
        *self.level_start.last().unwrap()
    }

    pub fn level_of(&self, v: usize) -> usize {
        self.level_start.partition_point(|&s| s <= v) - 1
    }

    pub fn parent(&self, v: usize) -> usize {
        let k = self.level_of(v);
        let j = v - self.level_start[k];
        self.level_start[k - 1] + j / self.children[k - 1] as usize
    }

    /// Children of an internal vertex as a contiguous range.
    pub fn child_range(&self, v: usize) -> std::ops::Range<usize> {
        let k = self.level_of(v);
        let j = v - self.level_start[k];
        let c = self.children[k] as usize;
        let first = self.level_start[k + 1] + j * c;
        first..first + c
    }
}

#[derive(Debug)]
struct Inner {
    spec: FunctionSpec,
    arity: usize,
    structure: Structure,
}

/// A validated function with its structural index. Cheap to clone and safe
/// to share across threads.
#[derive(Debug, Clone)]
pub struct FunctionInstance {
    inner: Arc<Inner>,
}

fn checked_arity(arity: u128) -> Result<usize> {
    if arity == 0 {
        return Err(Error::InvalidSpec("arity must be positive".into()));
    }
    if arity > MAX_ARITY as u128 {
        return Err(Error::InvalidSpec(format!(
            "arity {arity} exceeds the limit {MAX_ARITY}"
        )));
    }
    Ok(arity as usize)
}

/// Validates a spec and builds its structural index.
pub fn make_instance(spec: FunctionSpec) -> Result<FunctionInstance> {
    let (arity, structure) = match &spec {
        FunctionSpec::Dictator { m }
        | FunctionSpec::Parity { m }
        | FunctionSpec::DictatorAndParity { m } => (checked_arity(*m as u128)?, Structure::Flat),
        FunctionSpec::Type2Example { m } => {
            if *m < 2 {
                return Err(Error::InvalidSpec("type2 needs at least 2 bits".into()));
            }
            (checked_arity(*m as u128)?, Structure::Flat)
        }
        FunctionSpec::Majority { n } => {
            if n % 2 == 0 {
                return Err(Error::InvalidSpec(format!("majority needs an odd n, got {n}")));
            }
            (checked_arity(*n as u128)?, Structure::Flat)
        }
        FunctionSpec::IterMaj3 { depth } => {
            let leaves = 3u128.checked_pow(*depth).unwrap_or(u128::MAX);
            let arity = checked_arity(leaves)?;
            let internal = (arity - 1) / 2;
            (
                arity,
                Structure::IterMaj3 {
                    depth: *depth,
                    internal,
                },
            )
        }
        FunctionSpec::AndOrTree { depth } => {
            let nodes = if *depth >= 127 {
                u128::MAX
            } else {
                (1u128 << (depth + 1)) - 1
            };
            let arity = checked_arity(nodes)?;
            let (bit_to_node, node_to_bit) = preorder_maps(arity);
            (
                arity,
                Structure::AndOr {
                    depth: *depth,
                    bit_to_node,
                    node_to_bit,
                },
            )
        }
        FunctionSpec::BigInfluenceTame { n } => {
            let tail = 3u128.checked_pow(*n).unwrap_or(u128::MAX);
            let arity = checked_arity(tail.saturating_add(1 + *n as u128))?;
            (arity, Structure::Flat)
        }
        FunctionSpec::TreePercolation { profile, level } => {
            if *level == 0 || *level > profile.levels() {
                return Err(Error::InvalidSpec(format!(
                    "percolation level {level} outside 1..={}",
                    profile.levels()
                )));
            }
            let edges = profile.edges_through(*level).unwrap_or(u128::MAX);
            let arity = checked_arity(edges)?;
            (arity, Structure::Perc(PercLayout::new(profile, *level)))
        }
        FunctionSpec::TruthTable(t) => (checked_arity(t.vars() as u128)?, Structure::Flat),
    };
    Ok(FunctionInstance {
        inner: Arc::new(Inner {
            spec,
            arity,
            structure,
        }),
    })
}

/// Pre-order numbering of a complete binary tree stored in BFS order.
fn preorder_maps(nodes: usize) -> (Vec<u32>, Vec<u32>) {
    let mut bit_to_node = Vec::with_capacity(nodes);
    let mut stack = vec![0usize];
    while let Some(v) = stack.pop() {
        bit_to_node.push(v as u32);
        let (l, r) = (2 * v + 1, 2 * v + 2);
        if r < nodes {
            stack.push(r);
        }
        if l < nodes {
            stack.push(l);
        }
    }
    let mut node_to_bit = vec![0u32; nodes];
    for (bit, &node) in bit_to_node.iter().enumerate() {
        node_to_bit[node as usize] = bit as u32;
    }
    (bit_to_node, node_to_bit)
}

impl FunctionInstance {
    pub fn spec(&self) -> &FunctionSpec {
        &self.inner.spec
    }

    pub fn arity(&self) -> usize {
        self.inner.arity
    }

    pub(crate) fn structure(&self) -> &Structure {
        &self.inner.structure
    }

    /// Tree depth for the tree families, used to bound update cost.
    pub fn depth(&self) -> Option<usize> {
        match self.structure() {
            Structure::IterMaj3 { depth, .. } | Structure::AndOr { depth, .. } => {
                Some(*depth as usize)
            }
            Structure::Perc(layout) => Some(layout.depth()),
            Structure::Flat => None,
        }
    }

    /// Bit index of the AND/OR gate at BFS vertex `node`.
    pub fn andor_bit_of_node(&self, node: usize) -> Option<usize> {
        match self.structure() {
            Structure::AndOr { node_to_bit, .. } => node_to_bit.get(node).map(|&b| b as usize),
            _ => None,
        }
    }

    /// Full evaluation from scratch.
    pub fn evaluate(&self, config: &BitConfig) -> Result<bool> {
        evaluate(self, config)
    }

    pub(crate) fn eval_slice(&self, x: &[u8]) -> bool {
        match (&self.inner.spec, self.structure()) {
            (FunctionSpec::Dictator { .. }, _) => x[0] == 1,
            (FunctionSpec::Parity { .. }, _) => parity(x),
            (FunctionSpec::DictatorAndParity { .. }, _) => x[0] == 1 && !parity(&x[1..]),
            (FunctionSpec::Type2Example { .. }, _) => {
                if x[1] == 1 {
                    x[0] == 1
                } else {
                    parity(&x[2..])
                }
            }
            (FunctionSpec::Majority { n }, _) => {
                x.iter().filter(|&&b| b == 1).count() >= (n + 1) / 2
            }
            (FunctionSpec::BigInfluenceTame { n }, _) => {
                let n = *n as usize;
                if x[1..=n].iter().all(|&b| b == 1) {
                    parity(&x[n + 1..])
                } else {
                    x[0] == 1
                }
            }
            (FunctionSpec::TruthTable(t), _) => t.get(t.index_of(x)),
            (_, Structure::IterMaj3 { .. }) => {
                let mut level: Vec<u8> = x.to_vec();
                while level.len() > 1 {
                    level = level
                        .chunks_exact(3)
                        .map(|c| (c[0] + c[1] + c[2] >= 2) as u8)
                        .collect();
                }
                level[0] == 1
            }
            (_, Structure::AndOr { node_to_bit, .. }) => {
                fn eval(v: usize, x: &[u8], map: &[u32]) -> bool {
                    let gate_or = x[map[v] as usize] == 1;
                    let (l, r) = (2 * v + 1, 2 * v + 2);
                    if l >= map.len() {
                        return gate_or;
                    }
                    let (a, b) = (eval(l, x, map), eval(r, x, map));
                    if gate_or {
                        a || b
                    } else {
                        a && b
                    }
                }
                eval(0, x, node_to_bit)
            }
            (_, Structure::Perc(layout)) => {
                // Depth-first search over open edges from the root.
                let bottom = layout.depth();
                let mut stack = vec![0usize];
                while let Some(v) = stack.pop() {
                    if layout.level_of(v) == bottom {
                        return true;
                    }
                    for c in layout.child_range(v) {
                        if x[c - 1] == 1 {
                            stack.push(c);
                        }
                    }
                }
                false
            }
            _ => unreachable!("structure does not match spec"),
        }
    }
}

fn parity(x: &[u8]) -> bool {
    x.iter().fold(0u8, |acc, &b| acc ^ b) == 1
}

/// Full evaluation of `instance` on `config`.
pub fn evaluate(instance: &FunctionInstance, config: &BitConfig) -> Result<bool> {
    if config.len() != instance.arity() {
        return Err(Error::ArityMismatch {
            expected: instance.arity(),
            got: config.len(),
        });
    }
    Ok(instance.eval_slice(config.as_slice()))
}

impl fmt::Display for FunctionInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.spec().fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(spec: FunctionSpec) -> FunctionInstance {
        make_instance(spec).unwrap()
    }

    fn cfg(bits: &[u8]) -> BitConfig {
        BitConfig::new(bits.to_vec()).unwrap()
    }

    #[test]
    fn arities() {
        assert_eq!(inst(FunctionSpec::Majority { n: 3 }).arity(), 3);
        assert_eq!(inst(FunctionSpec::IterMaj3 { depth: 2 }).arity(), 9);
        assert_eq!(inst(FunctionSpec::AndOrTree { depth: 2 }).arity(), 7);
        assert_eq!(inst(FunctionSpec::BigInfluenceTame { n: 2 }).arity(), 12);
        assert_eq!(inst(FunctionSpec::IterMaj3 { depth: 0 }).arity(), 1);
        assert_eq!(inst(FunctionSpec::AndOrTree { depth: 0 }).arity(), 1);
        let profile = LevelProfile::new(vec![2, 3]).unwrap();
        assert_eq!(
            inst(FunctionSpec::TreePercolation { profile, level: 2 }).arity(),
            8
        );
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(
            make_instance(FunctionSpec::Majority { n: 4 }),
            Err(Error::InvalidSpec(_))
        ));
        assert!(make_instance(FunctionSpec::Parity { m: 0 }).is_err());
        assert!(make_instance(FunctionSpec::Type2Example { m: 1 }).is_err());
        assert!(make_instance(FunctionSpec::IterMaj3 { depth: 20 }).is_err());
        assert!(make_instance(FunctionSpec::AndOrTree { depth: 31 }).is_err());
        let profile = LevelProfile::binary(3);
        assert!(make_instance(FunctionSpec::TreePercolation {
            profile: profile.clone(),
            level: 4
        })
        .is_err());
        assert!(make_instance(FunctionSpec::TreePercolation { profile, level: 0 }).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let maj = inst(FunctionSpec::Majority { n: 3 });
        assert!(maj.evaluate(&cfg(&[1, 1, 0])).unwrap());
        let par = inst(FunctionSpec::Parity { m: 4 });
        assert!(par.evaluate(&cfg(&[1, 1, 0, 1])).unwrap());
        // root AND (pre-order bit 0), both leaves OR.
        let andor = inst(FunctionSpec::AndOrTree { depth: 1 });
        assert!(andor.evaluate(&cfg(&[0, 1, 1])).unwrap());
        assert!(!andor.evaluate(&cfg(&[0, 1, 0])).unwrap());
        assert!(andor.evaluate(&cfg(&[1, 0, 1])).unwrap());
        // Binary tree, level 2: edges root->L, root->R, L->LL, L->LR, R->RL, R->RR.
        let perc = inst(FunctionSpec::TreePercolation {
            profile: LevelProfile::binary(2),
            level: 2,
        });
        assert!(perc.evaluate(&cfg(&[1, 0, 1, 0, 0, 0])).unwrap());
        assert!(!perc.evaluate(&cfg(&[0, 1, 1, 1, 0, 0])).unwrap());
        assert!(perc.evaluate(&cfg(&[0, 1, 0, 0, 0, 1])).unwrap());
    }

    #[test]
    fn arity_mismatch() {
        let maj = inst(FunctionSpec::Majority { n: 3 });
        assert_eq!(
            maj.evaluate(&cfg(&[1, 1])),
            Err(Error::ArityMismatch {
                expected: 3,
                got: 2
            })
        );
    }

    #[test]
    fn preorder_layout() {
        // depth 2: BFS 0..7, pre-order visits 0,1,3,4,2,5,6.
        let (b2n, n2b) = preorder_maps(7);
        assert_eq!(b2n, vec![0, 1, 3, 4, 2, 5, 6]);
        for (bit, &node) in b2n.iter().enumerate() {
            assert_eq!(n2b[node as usize] as usize, bit);
        }
    }

    #[test]
    fn small_families() {
        let dap = inst(FunctionSpec::DictatorAndParity { m: 3 });
        assert!(dap.evaluate(&cfg(&[1, 1, 1])).unwrap());
        assert!(!dap.evaluate(&cfg(&[1, 1, 0])).unwrap());
        assert!(!dap.evaluate(&cfg(&[0, 0, 0])).unwrap());
        let t2 = inst(FunctionSpec::Type2Example { m: 4 });
        assert!(t2.evaluate(&cfg(&[1, 1, 0, 0])).unwrap());
        assert!(t2.evaluate(&cfg(&[0, 0, 1, 0])).unwrap());
        assert!(!t2.evaluate(&cfg(&[1, 0, 1, 1])).unwrap());
        let big = inst(FunctionSpec::BigInfluenceTame { n: 1 });
        // selector set: parity of the last three bits.
        assert!(big.evaluate(&cfg(&[0, 1, 1, 0, 0])).unwrap());
        assert!(big.evaluate(&cfg(&[1, 0, 1, 0, 0])).unwrap());
        assert!(big.evaluate(&cfg(&[1, 0, 0, 0, 0])).unwrap());
        let im = inst(FunctionSpec::IterMaj3 { depth: 2 });
        assert!(im
            .evaluate(&cfg(&[1, 1, 0, 0, 0, 0, 1, 0, 1]))
            .unwrap());
        assert!(!im
            .evaluate(&cfg(&[1, 1, 0, 0, 0, 0, 1, 0, 0]))
            .unwrap());
    }
}
