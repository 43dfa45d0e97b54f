//! Dynamical percolation on a spherically symmetric tree, sampled top-down.
//!
//! Every edge carries an independent rate-1 resampling clock, which is the
//! same law as the global-clock dynamics used elsewhere. For a vertex `v`
//! let `O_v` be the set of times in `[0, T]` at which the path from the root
//! to `v` is open; then `O_v = O_parent ∩ E_v`, where `E_v` is the open set of
//! the edge into `v`. The output at level `n` is 1 exactly on the union of
//! `O_v` over the level-`n` vertices, so only vertices with nonempty `O_v`
//! need to be visited and all levels are read off the same realization.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::LevelProfile;
use crate::dynamics::{check_p, check_replicas, check_time, exp_sample, replica_rng, EmpiricalC, ReplicaRecord};
use crate::error::{Error, Result};
use crate::stats::Estimate;

pub const DEFAULT_EDGE_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams {
    pub p: f64,
    pub horizon: f64,
    pub replicas: u64,
    pub seed: u64,
    pub edge_cap: u64,
}

impl RegimeParams {
    pub fn new(replicas: u64, seed: u64) -> Self {
        Self {
            p: 0.5,
            horizon: 1.0,
            replicas,
            seed,
            edge_cap: DEFAULT_EDGE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRegime {
    pub level: usize,
    pub edges: u64,
    pub p_one: Estimate,
    pub p_ever_one: Estimate,
    pub p_always_one: Estimate,
    pub p_always_zero: Estimate,
    pub mean_c: Estimate,
    pub c: EmpiricalC,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub schema_version: u32,
    pub profile: LevelProfile,
    pub p: f64,
    pub horizon: f64,
    pub replicas: u64,
    pub seed: u64,
    /// Set when `p != 1/2`, where the regime classification does not apply.
    pub p_off_critical: bool,
    pub levels: Vec<LevelRegime>,
}

type Intervals = Vec<(f64, f64)>;

/// Open set of one edge over `[0, horizon]` as disjoint half-open intervals.
fn edge_open_set(rng: &mut ChaCha8Rng, p: f64, horizon: f64, out: &mut Intervals) {
    out.clear();
    let mut open = rng.random::<f64>() < p;
    let mut start = 0.0;
    let mut t = exp_sample(rng, 1.0);
    while t < horizon {
        let next = rng.random::<f64>() < p;
        if next != open {
            if open {
                out.push((start, t));
            } else {
                start = t;
            }
            open = next;
        }
        t += exp_sample(rng, 1.0);
    }
    if open {
        out.push((start, horizon));
    }
}

fn intersect(a: &[(f64, f64)], b: &[(f64, f64)], out: &mut Intervals) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo < hi {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
}

struct Walker<'a> {
    children: &'a [u32],
    wanted: &'a [bool],
    p: f64,
    horizon: f64,
    rng: ChaCha8Rng,
    edge: Intervals,
    /// Collected `O_v` pieces per level.
    acc: Vec<Intervals>,
}

impl Walker<'_> {
    fn visit(&mut self, level: usize, open: &[(f64, f64)]) {
        if level == self.children.len() {
            return;
        }
        let mut child = Intervals::new();
        for _ in 0..self.children[level] {
            let mut edge = std::mem::take(&mut self.edge);
            edge_open_set(&mut self.rng, self.p, self.horizon, &mut edge);
            intersect(open, &edge, &mut child);
            self.edge = edge;
            if child.is_empty() {
                continue;
            }
            if self.wanted[level + 1] {
                self.acc[level + 1].extend_from_slice(&child);
            }
            self.visit(level + 1, &child);
        }
    }
}

fn record_from_union(mut pieces: Intervals, horizon: f64) -> ReplicaRecord {
    pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Intervals = Vec::new();
    for (lo, hi) in pieces {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    let initial_output = merged.first().is_some_and(|iv| iv.0 == 0.0);
    let final_output = merged.last().is_some_and(|iv| iv.1 == horizon);
    let mut c = 0;
    let mut s = 0;
    let mut first_switch = None;
    for &(lo, hi) in &merged {
        if lo > 0.0 {
            c += 1;
            first_switch.get_or_insert(lo);
        }
        if hi < horizon {
            c += 1;
            s += 1;
            first_switch.get_or_insert(hi);
        }
    }
    ReplicaRecord {
        c,
        s,
        initial_output,
        final_output,
        first_switch,
    }
}

/// Runs the percolation dynamics once on the tree truncated at the deepest
/// requested level and reports the statistics of every requested level.
pub fn regime_experiment(
    profile: &LevelProfile,
    levels: &[usize],
    params: &RegimeParams,
) -> Result<RegimeReport> {
    check_p(params.p)?;
    check_time(params.horizon, "horizon")?;
    check_replicas(params.replicas)?;
    let mut levels: Vec<usize> = levels.to_vec();
    levels.sort_unstable();
    levels.dedup();
    let deepest = match levels.last() {
        Some(&d) => d,
        None => return Err(Error::params("no levels requested")),
    };
    if levels[0] == 0 || deepest > profile.levels() {
        return Err(Error::params(format!(
            "levels must lie in 1..={}",
            profile.levels()
        )));
    }
    let edges = profile.edges_through(deepest).unwrap_or(u128::MAX);
    if edges > params.edge_cap as u128 {
        return Err(Error::InstanceTooLarge {
            edges: edges.min(u64::MAX as u128) as u64,
            cap: params.edge_cap,
        });
    }
    let mut wanted = vec![false; deepest + 1];
    for &l in &levels {
        wanted[l] = true;
    }
    let children = &profile.children()[..deepest];
    let per_replica: Vec<Vec<ReplicaRecord>> = (0..params.replicas)
        .into_par_iter()
        .map(|r| {
            let mut w = Walker {
                children,
                wanted: &wanted,
                p: params.p,
                horizon: params.horizon,
                rng: replica_rng(params.seed, r),
                edge: Intervals::new(),
                acc: vec![Intervals::new(); deepest + 1],
            };
            let root = [(0.0, params.horizon)];
            if params.horizon > 0.0 {
                w.visit(0, &root);
            } else {
                // Degenerate horizon: a single time point.
                w.horizon = f64::MIN_POSITIVE;
                w.visit(0, &[(0.0, f64::MIN_POSITIVE)]);
            }
            let horizon = w.horizon;
            levels
                .iter()
                .map(|&l| record_from_union(std::mem::take(&mut w.acc[l]), horizon))
                .collect()
        })
        .collect();
    let reports = levels
        .iter()
        .enumerate()
        .map(|(i, &level)| {
            let records: Vec<ReplicaRecord> = per_replica.iter().map(|r| r[i]).collect();
            let c = EmpiricalC::from_records(&records);
            LevelRegime {
                level,
                edges: profile.edges_through(level).unwrap_or(u128::MAX) as u64,
                p_one: c.p_one(),
                p_ever_one: c.p_ever_one(),
                p_always_one: c.p_always_one(),
                p_always_zero: c.p_always_zero(),
                mean_c: c.mean(),
                c,
            }
        })
        .collect();
    Ok(RegimeReport {
        schema_version: 1,
        profile: profile.clone(),
        p: params.p,
        horizon: params.horizon,
        replicas: params.replicas,
        seed: params.seed,
        p_off_critical: params.p != 0.5,
        levels: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{estimate_C_distribution, DynamicsParams};
    use crate::functions::{make_instance, FunctionSpec};
    use crate::stats::two_sample_z;

    #[test]
    fn level_one_binary_probability() {
        let r = regime_experiment(&LevelProfile::binary(3), &[1], &RegimeParams::new(40_000, 3)).unwrap();
        assert!(r.levels[0].p_one.within(0.75, 4.0), "{:?}", r.levels[0].p_one);
    }

    #[test]
    fn nested_events_are_monotone() {
        let r = regime_experiment(&LevelProfile::binary(8), &[2, 4, 6, 8], &RegimeParams::new(5_000, 9)).unwrap();
        for w in r.levels.windows(2) {
            assert!(w[1].c.initial_ones <= w[0].c.initial_ones);
            assert!(w[1].c.ever_one <= w[0].c.ever_one);
            assert!(w[1].c.always_one <= w[0].c.always_one);
        }
    }

    #[test]
    fn agrees_with_generic_dynamics() {
        let profile = LevelProfile::new(vec![2, 3, 2]).unwrap();
        let reps = 40_000;
        let r = regime_experiment(&profile, &[3], &RegimeParams::new(reps, 5)).unwrap();
        let inst = make_instance(FunctionSpec::TreePercolation { profile, level: 3 }).unwrap();
        let emp = estimate_C_distribution(&inst, &DynamicsParams::new(0.5, 1.0, 6, reps).unwrap()).unwrap();
        let lv = &r.levels[0];
        assert!(two_sample_z(lv.mean_c, emp.mean()).abs() < 4.0);
        assert!(two_sample_z(lv.p_one, emp.p_one()).abs() < 4.0);
        assert!(two_sample_z(lv.p_ever_one, emp.p_ever_one()).abs() < 4.0);
        assert!(two_sample_z(lv.c.p_zero(), emp.p_zero()).abs() < 4.0);
    }

    #[test]
    fn caps_and_determinism() {
        let mut params = RegimeParams::new(200, 1);
        params.edge_cap = 100;
        assert!(matches!(
            regime_experiment(&LevelProfile::binary(10), &[10], &params),
            Err(Error::InstanceTooLarge { .. })
        ));
        params.edge_cap = DEFAULT_EDGE_CAP;
        let a = regime_experiment(&LevelProfile::binary(6), &[3, 6], &params).unwrap();
        let b = regime_experiment(&LevelProfile::binary(6), &[6, 3], &params).unwrap();
        assert_eq!(a, b);
    }
}
