//! Exact quantities by enumeration of all `2^m` configurations.
//!
//! Configurations are visited in Gray-code order so every step is a single
//! incremental update. Probabilities are accumulated as integer counts per
//! Hamming weight and only then weighted by `p^k (1-p)^(m-k)`, which makes
//! every result exact at `p = 1/2`.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::check_p;
use crate::error::{Error, Result};
use crate::functions::{
    make_instance, EvaluationState, FunctionInstance, FunctionSpec, TruthTable,
};

pub const ORACLE_MAX_ARITY: usize = 24;
pub const NOISE_MAX_ARITY: usize = 20;
pub const ANDOR_PIVOTAL_MAX_DEPTH: u32 = 3;

fn check_arity(instance: &FunctionInstance, limit: usize) -> Result<usize> {
    let m = instance.arity();
    if m > limit {
        return Err(Error::ArityTooLarge { arity: m, limit });
    }
    Ok(m)
}

/// Output of `instance` on every configuration; bit `i` of the index is
/// config bit `i`.
struct OutputTable {
    m: usize,
    words: Vec<u64>,
}

impl OutputTable {
    fn build(instance: &FunctionInstance) -> Self {
        let m = instance.arity();
        let size = 1usize << m;
        let mut words = vec![0u64; size.div_ceil(64)];
        let mut state = EvaluationState::from_bits(instance, vec![0; m]);
        let mut g = 0usize;
        if state.output() {
            words[0] |= 1;
        }
        for j in 1..size {
            let bit = j.trailing_zeros() as usize;
            g ^= 1 << bit;
            state.set_bit(bit, (g >> bit) & 1 == 1);
            if state.output() {
                words[g / 64] |= 1 << (g % 64);
            }
        }
        Self { m, words }
    }

    #[inline]
    fn get(&self, x: usize) -> bool {
        (self.words[x / 64] >> (x % 64)) & 1 == 1
    }

    fn size(&self) -> usize {
        1 << self.m
    }

    /// Number of configurations of each weight with output 1.
    fn ones_by_weight(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.m + 1];
        for x in 0..self.size() {
            if self.get(x) {
                counts[x.count_ones() as usize] += 1;
            }
        }
        counts
    }

    /// For bit `i`: number of configurations with `x_i = 0` and weight `k`
    /// whose output differs from that of `x` with bit `i` set.
    fn pivotal_pairs(&self, i: usize) -> Vec<u64> {
        let mut counts = vec![0u64; self.m + 1];
        let mask = 1usize << i;
        for x in 0..self.size() {
            if x & mask == 0 && self.get(x) != self.get(x | mask) {
                counts[x.count_ones() as usize] += 1;
            }
        }
        counts
    }
}

/// `p^k (1-p)^(m-k)` for `k = 0..=m`.
fn weight_powers(p: f64, m: usize) -> Vec<f64> {
    let q = 1.0 - p;
    (0..=m)
        .map(|k| p.powi(k as i32) * q.powi((m - k) as i32))
        .collect()
}

fn weighted(counts: &[u64], powers: &[f64]) -> f64 {
    counts
        .iter()
        .zip(powers)
        .map(|(&c, &w)| c as f64 * w)
        .sum()
}

/// `P(f = 1)` under the product measure with density `p`.
pub fn exact_prob_one(instance: &FunctionInstance, p: f64) -> Result<f64> {
    check_p(p)?;
    let m = check_arity(instance, ORACLE_MAX_ARITY)?;
    let table = OutputTable::build(instance);
    Ok(weighted(&table.ones_by_weight(), &weight_powers(p, m)))
}

/// `P(f = 1)` at `p = 1/2` as an exact fraction.
pub fn exact_prob_one_half(instance: &FunctionInstance) -> Result<Ratio<u64>> {
    let m = check_arity(instance, ORACLE_MAX_ARITY)?;
    let ones: u64 = OutputTable::build(instance).ones_by_weight().iter().sum();
    Ok(Ratio::new(ones, 1 << m))
}

/// Per-bit influence (resampling) and pivotality (flipping).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceReport {
    pub p: f64,
    /// `(i, I_i, pi_i)` triples.
    pub per_bit: Vec<(usize, f64, f64)>,
    #[serde(rename = "total_I")]
    pub total_i: f64,
    pub total_pi: f64,
    #[serde(rename = "sum_I_sq")]
    pub sum_i_sq: f64,
}

impl InfluenceReport {
    pub fn influence(&self, i: usize) -> f64 {
        self.per_bit[i].1
    }

    pub fn pivotality(&self, i: usize) -> f64 {
        self.per_bit[i].2
    }
}

/// Influence of every bit. `I_i` is the probability that resampling bit `i`
/// changes the output; `pi_i` the probability that flipping it does.
pub fn exact_influence_report(instance: &FunctionInstance, p: f64) -> Result<InfluenceReport> {
    check_p(p)?;
    let m = check_arity(instance, ORACLE_MAX_ARITY)?;
    let q = 1.0 - p;
    let table = OutputTable::build(instance);
    let powers = weight_powers(p, m);
    let per_bit: Vec<(usize, f64, f64)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let pairs = table.pivotal_pairs(i);
            let (mut inf, mut piv) = (0.0, 0.0);
            for (k, &c) in pairs.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                // The pair (x, x + e_i) has weights k and k + 1.
                let (w0, w1) = (powers[k], powers[k + 1]);
                let c = c as f64;
                piv += c * (w0 + w1);
                inf += c * (w0 * p + w1 * q);
            }
            (i, inf, piv)
        })
        .collect();
    let total_i = per_bit.iter().map(|b| b.1).sum();
    let total_pi = per_bit.iter().map(|b| b.2).sum();
    let sum_i_sq = per_bit.iter().map(|b| b.1 * b.1).sum();
    Ok(InfluenceReport {
        p,
        per_bit,
        total_i,
        total_pi,
        sum_i_sq,
    })
}

/// Total influence, equal to the expected number of switches on `[0, 1]`.
pub fn exact_total_influence(instance: &FunctionInstance, p: f64) -> Result<f64> {
    Ok(exact_influence_report(instance, p)?.total_i)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseCovariance {
    pub p: f64,
    pub eps: f64,
    pub prob_one: f64,
    /// `E[f(w) f(w')]`.
    pub mean_product: f64,
    pub covariance: f64,
    /// `P(f(w) != f(w'))`.
    pub disagree: f64,
}

/// Exact correlation of `f(w)` and `f(w')`, where each bit of `w'` is
/// independently replaced by a fresh Bernoulli(p) bit with probability `eps`.
pub fn exact_noise_covariance(
    instance: &FunctionInstance,
    p: f64,
    eps: f64,
) -> Result<NoiseCovariance> {
    check_p(p)?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::params(format!("eps = {eps} is outside [0, 1]")));
    }
    let m = check_arity(instance, NOISE_MAX_ARITY)?;
    let q = 1.0 - p;
    let table = OutputTable::build(instance);
    let f: Vec<f64> = (0..table.size()).map(|x| table.get(x) as u8 as f64).collect();
    // Apply the one-bit kernel along every coordinate.
    let mut g = f.clone();
    for i in 0..m {
        let half = 1usize << i;
        for block in g.chunks_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let fresh = q * *a + p * *b;
                *a = (1.0 - eps) * *a + eps * fresh;
                *b = (1.0 - eps) * *b + eps * fresh;
            }
        }
    }
    let powers = weight_powers(p, m);
    let (mut prob_one, mut mean_product) = (0.0, 0.0);
    for x in 0..table.size() {
        let w = powers[x.count_ones() as usize];
        prob_one += w * f[x];
        mean_product += w * f[x] * g[x];
    }
    Ok(NoiseCovariance {
        p,
        eps,
        prob_one,
        mean_product,
        covariance: mean_product - prob_one * prob_one,
        disagree: 2.0 * (prob_one - mean_product),
    })
}

fn andor_enumerate(n: u32, mut visit: impl FnMut(&FunctionInstance, &[u8], bool)) -> Result<u64> {
    if n > ANDOR_PIVOTAL_MAX_DEPTH {
        return Err(Error::DepthTooLarge {
            depth: n,
            limit: ANDOR_PIVOTAL_MAX_DEPTH,
        });
    }
    let f = make_instance(FunctionSpec::AndOrTree { depth: n })?;
    let m = f.arity();
    let mut bits = vec![0u8; m];
    for x in 0..1usize << m {
        for (i, b) in bits.iter_mut().enumerate() {
            *b = ((x >> i) & 1) as u8;
        }
        let out = f.eval_slice(&bits);
        visit(&f, &bits, out);
    }
    Ok(1 << m)
}

fn andor_pivotal_count(f: &FunctionInstance, bits: &mut [u8], node: usize) -> bool {
    let b = f.andor_bit_of_node(node).expect("AND/OR instance");
    if bits[b] != 1 {
        return false;
    }
    bits[b] = 0;
    let flipped = f.eval_slice(bits);
    bits[b] = 1;
    !flipped
}

/// Probability that the AND/OR tree of depth `n` outputs 1, its leftmost
/// level-`k` gate is OR, and changing that gate to AND makes the output 0.
pub fn exact_andor_pivotal(n: u32, k: u32) -> Result<Ratio<u64>> {
    if k > n {
        return Err(Error::params(format!("level {k} exceeds depth {n}")));
    }
    let node = (1usize << k) - 1;
    let mut hits = 0u64;
    let total = andor_enumerate(n, |f, bits, out| {
        if out {
            let mut bits = bits.to_vec();
            hits += andor_pivotal_count(f, &mut bits, node) as u64;
        }
    })?;
    Ok(Ratio::new(hits, total))
}

/// Probability that one update event of the AND/OR dynamics at `p = 1/2`
/// switches the output from 1 to 0, summed over every gate.
pub fn exact_andor_down_switch_probability(n: u32) -> Result<Ratio<u64>> {
    let mut hits = 0u64;
    let mut nodes = 0u64;
    let total = andor_enumerate(n, |f, bits, out| {
        nodes = f.arity() as u64;
        if out {
            let mut bits = bits.to_vec();
            for v in 0..f.arity() {
                hits += andor_pivotal_count(f, &mut bits, v) as u64;
            }
        }
    })?;
    // Uniform gate choice (1/N) and resampled value AND (1/2).
    Ok(Ratio::new(hits, total * nodes * 2))
}

/// Builds an instance from `2^m` output bits (most significant bit first).
pub fn import_truth_table(bits: &[u8]) -> Result<FunctionInstance> {
    make_instance(FunctionSpec::TruthTable(TruthTable::from_bits(bits)?))
}
