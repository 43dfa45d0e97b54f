use super::{BitConfig, FunctionInstance, FunctionSpec, PercLayout, Structure};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateOutcome {
    pub output: bool,
    pub changed: bool,
}

#[derive(Debug, Clone)]
enum Cache {
    /// Dictator and truth tables: nothing beyond the config (tables keep the
    /// current table index).
    Index(usize),
    /// Number of ones among all bits (majority).
    Ones(usize),
    /// Parity of the bits the family reads as a parity block.
    Parity(bool),
    BigTame {
        selector_ones: usize,
        tail_parity: bool,
    },
    IterMaj3 {
        /// Ones among the three children of each internal vertex.
        counts: Vec<u8>,
        /// Value of every vertex in BFS order, leaves last.
        values: Vec<u8>,
    },
    AndOr {
        /// Gate bit of every BFS vertex.
        gates: Vec<u8>,
        /// Out-signal of every BFS vertex.
        values: Vec<u8>,
    },
    Perc {
        /// Children joined to the bottom level through an open edge.
        live: Vec<u32>,
        /// Whether the vertex connects to the bottom level.
        conn: Vec<u8>,
    },
}

/// Mutable evaluation cache supporting single-bit updates.
///
/// Tree families recompute only ancestors of the updated bit and stop at the
/// first ancestor whose value is unchanged.
#[derive(Debug, Clone)]
pub struct EvaluationState {
    instance: FunctionInstance,
    config: Vec<u8>,
    cache: Cache,
    output: bool,
    last_cost: usize,
}

/// Builds an evaluation state for `config`.
pub fn build_state(instance: &FunctionInstance, config: &BitConfig) -> Result<EvaluationState> {
    if config.len() != instance.arity() {
        return Err(Error::ArityMismatch {
            expected: instance.arity(),
            got: config.len(),
        });
    }
    Ok(EvaluationState::from_bits(instance, config.as_slice().to_vec()))
}

fn parity(x: &[u8]) -> bool {
    x.iter().fold(0u8, |acc, &b| acc ^ b) == 1
}

impl EvaluationState {
    /// `bits` must have the instance's arity and hold only 0/1.
    pub(crate) fn from_bits(instance: &FunctionInstance, bits: Vec<u8>) -> Self {
        debug_assert_eq!(bits.len(), instance.arity());
        let cache = match (instance.spec(), instance.structure()) {
            (FunctionSpec::Majority { .. }, _) => {
                Cache::Ones(bits.iter().filter(|&&b| b == 1).count())
            }
            (FunctionSpec::Parity { .. }, _) => Cache::Parity(parity(&bits)),
            (FunctionSpec::DictatorAndParity { .. }, _) => Cache::Parity(parity(&bits[1..])),
            (FunctionSpec::Type2Example { .. }, _) => Cache::Parity(parity(&bits[2..])),
            (FunctionSpec::BigInfluenceTame { n }, _) => {
                let n = *n as usize;
                Cache::BigTame {
                    selector_ones: bits[1..=n].iter().filter(|&&b| b == 1).count(),
                    tail_parity: parity(&bits[n + 1..]),
                }
            }
            (FunctionSpec::TruthTable(t), _) => Cache::Index(t.index_of(&bits)),
            (FunctionSpec::Dictator { .. }, _) => Cache::Index(0),
            (_, Structure::IterMaj3 { internal, .. }) => {
                let internal = *internal;
                let mut values = vec![0u8; internal + bits.len()];
                values[internal..].copy_from_slice(&bits);
                let mut counts = vec![0u8; internal];
                for v in (0..internal).rev() {
                    let c = values[3 * v + 1] + values[3 * v + 2] + values[3 * v + 3];
                    counts[v] = c;
                    values[v] = (c >= 2) as u8;
                }
                Cache::IterMaj3 { counts, values }
            }
            (_, Structure::AndOr { bit_to_node, .. }) => {
                let n = bits.len();
                let mut gates = vec![0u8; n];
                for (bit, &node) in bit_to_node.iter().enumerate() {
                    gates[node as usize] = bits[bit];
                }
                let mut values = vec![0u8; n];
                for v in (0..n).rev() {
                    values[v] = andor_value(&gates, &values, v);
                }
                Cache::AndOr { gates, values }
            }
            (_, Structure::Perc(layout)) => {
                let nv = layout.vertex_count();
                let bottom = layout.level_start[layout.depth()];
                let mut conn = vec![0u8; nv];
                let mut live = vec![0u32; bottom];
                conn[bottom..].fill(1);
                for v in (0..bottom).rev() {
                    let l = layout
                        .child_range(v)
                        .filter(|&c| bits[c - 1] == 1 && conn[c] == 1)
                        .count() as u32;
                    live[v] = l;
                    conn[v] = (l > 0) as u8;
                }
                Cache::Perc { live, conn }
            }
            _ => unreachable!("structure does not match spec"),
        };
        let mut state = Self {
            instance: instance.clone(),
            config: bits,
            cache,
            output: false,
            last_cost: 0,
        };
        state.output = state.output_from_cache();
        state
    }

    fn output_from_cache(&self) -> bool {
        let x = &self.config;
        match (&self.cache, self.instance.spec()) {
            (Cache::Index(idx), FunctionSpec::TruthTable(t)) => t.get(*idx),
            (Cache::Index(_), _) => x[0] == 1,
            (Cache::Ones(ones), FunctionSpec::Majority { n }) => *ones >= (n + 1) / 2,
            (Cache::Parity(p), FunctionSpec::Parity { .. }) => *p,
            (Cache::Parity(p), FunctionSpec::DictatorAndParity { .. }) => x[0] == 1 && !*p,
            (Cache::Parity(p), FunctionSpec::Type2Example { .. }) => {
                if x[1] == 1 {
                    x[0] == 1
                } else {
                    *p
                }
            }
            (
                Cache::BigTame {
                    selector_ones,
                    tail_parity,
                },
                FunctionSpec::BigInfluenceTame { n },
            ) => {
                if *selector_ones == *n as usize {
                    *tail_parity
                } else {
                    x[0] == 1
                }
            }
            (Cache::IterMaj3 { values, .. }, _) => values[0] == 1,
            (Cache::AndOr { values, .. }, _) => values[0] == 1,
            (Cache::Perc { conn, .. }, _) => conn[0] == 1,
            _ => unreachable!("cache does not match spec"),
        }
    }

    pub fn instance(&self) -> &FunctionInstance {
        &self.instance
    }

    pub fn output(&self) -> bool {
        self.output
    }

    pub fn config(&self) -> &[u8] {
        &self.config
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.config[i]
    }

    /// Vertices recomputed by the most recent update (0 when the bit already
    /// had the requested value).
    pub fn last_update_cost(&self) -> usize {
        self.last_cost
    }

    /// Number of ones (majority only).
    pub fn ones_count(&self) -> Option<usize> {
        match self.cache {
            Cache::Ones(n) => Some(n),
            _ => None,
        }
    }

    /// Root vertex value for the tree families.
    pub fn root_value(&self) -> Option<u8> {
        match &self.cache {
            Cache::IterMaj3 { values, .. } | Cache::AndOr { values, .. } => Some(values[0]),
            Cache::Perc { conn, .. } => Some(conn[0]),
            _ => None,
        }
    }

    /// Live-child count of the percolation root.
    pub fn root_live_children(&self) -> Option<u32> {
        match &self.cache {
            Cache::Perc { live, .. } => Some(live[0]),
            _ => None,
        }
    }

    /// Sets bit `index` to `value` and updates the cached output.
    pub fn apply_update(&mut self, index: usize, value: bool) -> Result<UpdateOutcome> {
        if index >= self.config.len() {
            return Err(Error::IndexOutOfRange {
                index,
                arity: self.config.len(),
            });
        }
        let changed = self.set_bit(index, value);
        Ok(UpdateOutcome {
            output: self.output,
            changed,
        })
    }

    /// Unchecked hot path used by the simulator. Returns whether the output
    /// flipped.
    #[inline]
    pub(crate) fn set_bit(&mut self, index: usize, value: bool) -> bool {
        let new = value as u8;
        if self.config[index] == new {
            self.last_cost = 0;
            return false;
        }
        self.config[index] = new;
        let before = self.output;
        let mut cost = 1;
        match &mut self.cache {
            Cache::Index(idx) => {
                if let FunctionSpec::TruthTable(t) = self.instance.spec() {
                    *idx ^= 1 << (t.vars() - 1 - index);
                }
            }
            Cache::Ones(ones) => {
                if new == 1 {
                    *ones += 1;
                } else {
                    *ones -= 1;
                }
            }
            Cache::Parity(p) => {
                let parity_from = match self.instance.spec() {
                    FunctionSpec::Parity { .. } => 0,
                    FunctionSpec::DictatorAndParity { .. } => 1,
                    _ => 2,
                };
                if index >= parity_from {
                    *p = !*p;
                }
            }
            Cache::BigTame {
                selector_ones,
                tail_parity,
            } => {
                let n = match self.instance.spec() {
                    FunctionSpec::BigInfluenceTame { n } => *n as usize,
                    _ => unreachable!(),
                };
                if (1..=n).contains(&index) {
                    if new == 1 {
                        *selector_ones += 1;
                    } else {
                        *selector_ones -= 1;
                    }
                } else if index > n {
                    *tail_parity = !*tail_parity;
                }
            }
            Cache::IterMaj3 { counts, values } => {
                let internal = counts.len();
                let mut v = internal + index;
                values[v] = new;
                while v > 0 {
                    let parent = (v - 1) / 3;
                    cost += 1;
                    if new == 1 {
                        counts[parent] += 1;
                    } else {
                        counts[parent] -= 1;
                    }
                    let pv = (counts[parent] >= 2) as u8;
                    if pv == values[parent] {
                        break;
                    }
                    values[parent] = pv;
                    v = parent;
                }
            }
            Cache::AndOr { gates, values } => {
                let Structure::AndOr { bit_to_node, .. } = self.instance.structure() else {
                    unreachable!()
                };
                let mut v = bit_to_node[index] as usize;
                gates[v] = new;
                loop {
                    let nv = andor_value(gates, values, v);
                    if nv == values[v] {
                        break;
                    }
                    values[v] = nv;
                    if v == 0 {
                        break;
                    }
                    v = (v - 1) / 2;
                    cost += 1;
                }
            }
            Cache::Perc { live, conn } => {
                let Structure::Perc(layout) = self.instance.structure() else {
                    unreachable!()
                };
                cost += perc_propagate(layout, &self.config, live, conn, index + 1, new == 1);
            }
        }
        self.last_cost = cost;
        self.output = self.output_from_cache();
        self.output != before
    }
}

#[inline]
fn andor_value(gates: &[u8], values: &[u8], v: usize) -> u8 {
    let l = 2 * v + 1;
    if l >= gates.len() {
        return gates[v];
    }
    let (a, b) = (values[l], values[l + 1]);
    if gates[v] == 1 {
        a | b
    } else {
        a & b
    }
}

/// Propagates a change of the edge into `child`. Returns the number of
/// ancestors recomputed.
fn perc_propagate(
    layout: &PercLayout,
    config: &[u8],
    live: &mut [u32],
    conn: &mut [u8],
    mut child: usize,
    opened: bool,
) -> usize {
    if conn[child] == 0 {
        // The child is cut off below, so the edge never mattered.
        return 0;
    }
    let mut cost = 0;
    loop {
        let parent = layout.parent(child);
        cost += 1;
        if opened {
            live[parent] += 1;
        } else {
            live[parent] -= 1;
        }
        let pc = (live[parent] > 0) as u8;
        if pc == conn[parent] {
            break;
        }
        conn[parent] = pc;
        if parent == 0 || config[parent - 1] == 0 {
            break;
        }
        child = parent;
    }
    cost
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::make_instance;
    use crate::perctree::LevelProfile;

    fn state(spec: FunctionSpec, bits: &[u8]) -> EvaluationState {
        let inst = make_instance(spec).unwrap();
        build_state(&inst, &BitConfig::new(bits.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn build_examples() {
        let s = state(FunctionSpec::Majority { n: 5 }, &[1, 0, 1, 0, 1]);
        assert_eq!(s.ones_count(), Some(3));
        assert!(s.output());
        let s = state(FunctionSpec::IterMaj3 { depth: 1 }, &[0, 0, 1]);
        assert_eq!(s.root_value(), Some(0));
        let s = state(
            FunctionSpec::TreePercolation {
                profile: LevelProfile::binary(1),
                level: 1,
            },
            &[0, 0],
        );
        assert!(!s.output());
        assert_eq!(s.root_live_children(), Some(0));
    }

    #[test]
    fn majority_updates() {
        let mut s = state(FunctionSpec::Majority { n: 3 }, &[1, 1, 0]);
        let out = s.apply_update(2, true).unwrap();
        assert_eq!(
            out,
            UpdateOutcome {
                output: true,
                changed: false
            }
        );
        let mut s = state(FunctionSpec::Majority { n: 3 }, &[1, 1, 0]);
        let out = s.apply_update(0, false).unwrap();
        assert_eq!(
            out,
            UpdateOutcome {
                output: false,
                changed: true
            }
        );
    }

    #[test]
    fn out_of_range() {
        let mut s = state(FunctionSpec::Parity { m: 2 }, &[0, 1]);
        assert_eq!(
            s.apply_update(2, true),
            Err(Error::IndexOutOfRange { index: 2, arity: 2 })
        );
    }

    #[test]
    fn perc_edge_below_closed_subtree_is_free() {
        // level 2 binary tree, root edges closed: opening a deep edge cannot
        // reach the root.
        let mut s = state(
            FunctionSpec::TreePercolation {
                profile: LevelProfile::binary(2),
                level: 2,
            },
            &[0, 0, 0, 0, 0, 0],
        );
        assert!(!s.apply_update(2, true).unwrap().changed);
        assert_eq!(s.last_update_cost(), 2);
        assert!(s.apply_update(0, true).unwrap().changed);
        assert!(s.output());
    }
}
