//! Event-driven simulation of the rerandomization dynamics.
//!
//! Every bit is resampled at rate 1; a resample sets the bit to 1 with
//! probability `p`. All bit clocks are superposed into one exponential clock
//! of rate `arity`, and each event picks a bit uniformly.
//!
//! Replica `r` draws from `ChaCha8Rng::seed_from_u64(seed)` switched to stream
//! `r`, so every replica is independent of scheduling and thread count. The
//! direct noise sampler uses streams with the top bit set, keeping it
//! independent of time simulations that share the seed.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{EvaluationState, FunctionInstance};
use crate::stats::{proportion, Estimate, Moments};

const NOISE_STREAM: u64 = 1 << 63;

/// Default grids reported in simulation summaries.
pub const DEFAULT_TAIL_GRID: [u64; 6] = [0, 1, 2, 5, 10, 20];
pub const DEFAULT_MIDDLE_GRID: [u64; 4] = [1, 2, 3, 5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsParams {
    pub p: f64,
    pub horizon: f64,
    pub seed: u64,
    pub replicas: u64,
}

impl DynamicsParams {
    pub fn new(p: f64, horizon: f64, seed: u64, replicas: u64) -> Result<Self> {
        let params = Self {
            p,
            horizon,
            seed,
            replicas,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_p(self.p)?;
        check_time(self.horizon, "horizon")?;
        if self.replicas == 0 {
            return Err(Error::params("replicas must be positive"));
        }
        Ok(())
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::params(format!("p = {p} is outside [0, 1]")));
    }
    Ok(())
}

pub(crate) fn check_time(t: f64, name: &str) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::params(format!("{name} = {t} must be finite and >= 0")));
    }
    Ok(())
}

pub(crate) fn check_replicas(replicas: u64) -> Result<()> {
    if replicas == 0 {
        return Err(Error::params("replicas must be positive"));
    }
    Ok(())
}

/// RNG of replica `index` for `seed`.
pub fn replica_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[inline]
pub(crate) fn exp_sample(rng: &mut impl Rng, rate: f64) -> f64 {
    -(1.0 - rng.random::<f64>()).ln() / rate
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial_output: bool,
    pub switch_times: Vec<f64>,
    pub c: u64,
    pub s: u64,
}

impl Trajectory {
    pub fn final_output(&self) -> bool {
        self.initial_output ^ (self.c % 2 == 1)
    }
}

pub(crate) fn sample_state(
    instance: &FunctionInstance,
    p: f64,
    rng: &mut ChaCha8Rng,
) -> EvaluationState {
    let bits: Vec<u8> = (0..instance.arity())
        .map(|_| rng.random_bool(p) as u8)
        .collect();
    EvaluationState::from_bits(instance, bits)
}

/// Runs the dynamics on `[0, horizon]`, calling `on_switch(time, new_output)`
/// at each output change.
pub(crate) fn run_events(
    state: &mut EvaluationState,
    p: f64,
    horizon: f64,
    rng: &mut ChaCha8Rng,
    mut on_switch: impl FnMut(f64, bool),
) {
    let m = state.config().len();
    let rate = m as f64;
    let mut time = 0.0;
    loop {
        time += exp_sample(rng, rate);
        if time > horizon {
            break;
        }
        let i = rng.random_range(0..m);
        let v = rng.random_bool(p);
        if state.set_bit(i, v) {
            on_switch(time, state.output());
        }
    }
}

/// Simulates replica `replica_index` and records every switch time.
pub fn simulate_trajectory(
    instance: &FunctionInstance,
    params: &DynamicsParams,
    replica_index: u64,
) -> Result<Trajectory> {
    params.validate()?;
    let mut rng = replica_rng(params.seed, replica_index);
    let mut state = sample_state(instance, params.p, &mut rng);
    let initial_output = state.output();
    let mut switch_times = Vec::new();
    let mut s = 0;
    run_events(&mut state, params.p, params.horizon, &mut rng, |t, out| {
        switch_times.push(t);
        if !out {
            s += 1;
        }
    });
    Ok(Trajectory {
        initial_output,
        c: switch_times.len() as u64,
        switch_times,
        s,
    })
}

/// Per-replica summary kept by batch runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicaRecord {
    pub c: u64,
    pub s: u64,
    pub initial_output: bool,
    pub final_output: bool,
    pub first_switch: Option<f64>,
}

impl ReplicaRecord {
    /// Output is 1 throughout `[0, x]` (requires `x` at most the horizon).
    pub fn survives(&self, x: f64) -> bool {
        self.initial_output && self.first_switch.is_none_or(|t| t > x)
    }
}

fn simulate_record(
    instance: &FunctionInstance,
    p: f64,
    horizon: f64,
    seed: u64,
    index: u64,
) -> ReplicaRecord {
    let mut rng = replica_rng(seed, index);
    let mut state = sample_state(instance, p, &mut rng);
    let initial_output = state.output();
    let (mut c, mut s, mut first) = (0u64, 0u64, None);
    run_events(&mut state, p, horizon, &mut rng, |t, out| {
        c += 1;
        if !out {
            s += 1;
        }
        first.get_or_insert(t);
    });
    ReplicaRecord {
        c,
        s,
        initial_output,
        final_output: state.output(),
        first_switch: first,
    }
}

/// Runs all replicas in parallel; records are returned in replica order.
pub fn run_batch(instance: &FunctionInstance, params: &DynamicsParams) -> Result<Vec<ReplicaRecord>> {
    params.validate()?;
    Ok((0..params.replicas)
        .into_par_iter()
        .map(|r| simulate_record(instance, params.p, params.horizon, params.seed, r))
        .collect())
}

/// Empirical distribution of the switch count and related path statistics.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EmpiricalC {
    pub replicas: u64,
    /// `(c, count)` pairs in increasing `c`.
    pub histogram: Vec<(u64, u64)>,
    /// Histogram of 1-to-0 switches.
    pub s_histogram: Vec<(u64, u64)>,
    pub initial_ones: u64,
    pub final_ones: u64,
    /// Replicas whose output is 1 at some time.
    pub ever_one: u64,
    /// Replicas whose output is 1 at all times.
    pub always_one: u64,
    pub always_zero: u64,
}

impl EmpiricalC {
    pub fn from_records(records: &[ReplicaRecord]) -> Self {
        let mut hist = BTreeMap::new();
        let mut s_hist = BTreeMap::new();
        let mut out = EmpiricalC {
            replicas: records.len() as u64,
            ..Default::default()
        };
        for r in records {
            *hist.entry(r.c).or_insert(0) += 1;
            *s_hist.entry(r.s).or_insert(0) += 1;
            out.initial_ones += r.initial_output as u64;
            out.final_ones += r.final_output as u64;
            let ever = r.initial_output || r.c > 0;
            out.ever_one += ever as u64;
            out.always_one += (r.initial_output && r.c == 0) as u64;
            out.always_zero += !ever as u64;
        }
        out.histogram = hist.into_iter().collect();
        out.s_histogram = s_hist.into_iter().collect();
        out
    }

    fn moments(hist: &[(u64, u64)], power: i32) -> Moments {
        let mut m = Moments::default();
        for &(c, n) in hist {
            m.push((c as f64).powi(power), n);
        }
        m
    }

    pub fn mean(&self) -> Estimate {
        Self::moments(&self.histogram, 1).mean_estimate()
    }

    pub fn variance(&self) -> f64 {
        Self::moments(&self.histogram, 1).variance()
    }

    /// Estimate of `E[C^2]`.
    pub fn second_moment(&self) -> Estimate {
        Self::moments(&self.histogram, 2).mean_estimate()
    }

    pub fn s_mean(&self) -> Estimate {
        Self::moments(&self.s_histogram, 1).mean_estimate()
    }

    /// Estimate of `E[S^2]`.
    pub fn s_second_moment(&self) -> Estimate {
        Self::moments(&self.s_histogram, 2).mean_estimate()
    }

    pub fn s_positive(&self) -> Estimate {
        let hits = self
            .s_histogram
            .iter()
            .filter(|(s, _)| *s > 0)
            .map(|(_, n)| n)
            .sum();
        proportion(hits, self.replicas)
    }

    fn mass(&self, pred: impl Fn(u64) -> bool) -> Estimate {
        let hits = self
            .histogram
            .iter()
            .filter(|(c, _)| pred(*c))
            .map(|(_, n)| n)
            .sum();
        proportion(hits, self.replicas)
    }

    pub fn p_zero(&self) -> Estimate {
        self.mass(|c| c == 0)
    }

    /// `P(C > m)`.
    pub fn tail(&self, m: u64) -> Estimate {
        self.mass(|c| c > m)
    }

    /// `P(C <= m)`.
    pub fn at_most(&self, m: u64) -> Estimate {
        self.mass(|c| c <= m)
    }

    /// `P(1 <= C <= k)`.
    pub fn middle(&self, k: u64) -> Estimate {
        self.mass(|c| (1..=k).contains(&c))
    }

    pub fn p_one(&self) -> Estimate {
        proportion(self.initial_ones, self.replicas)
    }

    pub fn p_ever_one(&self) -> Estimate {
        proportion(self.ever_one, self.replicas)
    }

    pub fn p_always_one(&self) -> Estimate {
        proportion(self.always_one, self.replicas)
    }

    pub fn p_always_zero(&self) -> Estimate {
        proportion(self.always_zero, self.replicas)
    }
}

/// Monte Carlo estimate of the switch-count distribution.
#[allow(non_snake_case)]
pub fn estimate_C_distribution(
    instance: &FunctionInstance,
    params: &DynamicsParams,
) -> Result<EmpiricalC> {
    Ok(EmpiricalC::from_records(&run_batch(instance, params)?))
}

/// Serializable simulation result.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub schema_version: u32,
    pub spec: String,
    pub p: f64,
    pub T: f64,
    pub replicas: u64,
    pub seed: u64,
    pub histogram: Vec<(u64, u64)>,
    pub mean_C: f64,
    pub mean_C_stderr: f64,
    pub var_C: f64,
    pub p_zero: f64,
    pub tail: Vec<(u64, f64)>,
    pub middle: Vec<(u64, f64)>,
    pub mean_S: f64,
    pub mean_S_stderr: f64,
    pub p_one: f64,
}

impl SimulationReport {
    pub const SCHEMA_VERSION: u32 = 1;

    pub fn new(instance: &FunctionInstance, params: &DynamicsParams, emp: &EmpiricalC) -> Self {
        let mean = emp.mean();
        let s = emp.s_mean();
        Self {
            schema_version: Self::SCHEMA_VERSION,
            spec: instance.to_string(),
            p: params.p,
            T: params.horizon,
            replicas: params.replicas,
            seed: params.seed,
            histogram: emp.histogram.clone(),
            mean_C: mean.value,
            mean_C_stderr: mean.stderr,
            var_C: emp.variance(),
            p_zero: emp.p_zero().value,
            tail: DEFAULT_TAIL_GRID
                .iter()
                .map(|&m| (m, emp.tail(m).value))
                .collect(),
            middle: DEFAULT_MIDDLE_GRID
                .iter()
                .map(|&k| (k, emp.middle(k).value))
                .collect(),
            mean_S: s.value,
            mean_S_stderr: s.stderr,
            p_one: emp.p_one().value,
        }
    }
}

/// Statistics of an output pair `(f(x), f(y))`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PairCounts {
    pub replicas: u64,
    pub both_one: u64,
    pub disagree: u64,
    pub first_one: u64,
    pub second_one: u64,
}

impl PairCounts {
    fn push(&mut self, a: bool, b: bool) {
        self.replicas += 1;
        self.both_one += (a && b) as u64;
        self.disagree += (a != b) as u64;
        self.first_one += a as u64;
        self.second_one += b as u64;
    }

    pub fn stats(&self) -> JointStats {
        let mean_product = proportion(self.both_one, self.replicas);
        let disagree = proportion(self.disagree, self.replicas);
        let a = self.first_one as f64 / self.replicas as f64;
        let b = self.second_one as f64 / self.replicas as f64;
        JointStats {
            replicas: self.replicas,
            mean_product: mean_product.value,
            mean_product_stderr: mean_product.stderr,
            disagree: disagree.value,
            disagree_stderr: disagree.stderr,
            covariance: mean_product.value - a * b,
            counts: *self,
        }
    }
}

/// `E[f f']`, `P(f != f')` and the plug-in covariance with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointStats {
    pub replicas: u64,
    pub mean_product: f64,
    pub mean_product_stderr: f64,
    pub disagree: f64,
    pub disagree_stderr: f64,
    pub covariance: f64,
    pub counts: PairCounts,
}

fn collect_pairs(replicas: u64, f: impl Fn(u64) -> (bool, bool) + Sync + Send) -> JointStats {
    let pairs: Vec<(bool, bool)> = (0..replicas).into_par_iter().map(f).collect();
    pairs
        .into_iter()
        .fold(PairCounts::default(), |mut acc, (a, b)| {
            acc.push(a, b);
            acc
        })
        .stats()
}

/// Samples `(f(X(0)), f(X(t)))` under the dynamics.
pub fn estimate_joint(
    instance: &FunctionInstance,
    p: f64,
    t: f64,
    replicas: u64,
    seed: u64,
) -> Result<JointStats> {
    check_p(p)?;
    check_time(t, "t")?;
    check_replicas(replicas)?;
    Ok(collect_pairs(replicas, |r| {
        let mut rng = replica_rng(seed, r);
        let mut state = sample_state(instance, p, &mut rng);
        let start = state.output();
        run_events(&mut state, p, t, &mut rng, |_, _| {});
        (start, state.output())
    }))
}

/// Samples `(f(w), f(w'))` where each bit of `w'` is independently replaced
/// by a fresh Bernoulli(p) bit with probability `eps`.
pub fn sample_noise_pair(
    instance: &FunctionInstance,
    p: f64,
    eps: f64,
    replicas: u64,
    seed: u64,
) -> Result<JointStats> {
    check_p(p)?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::params(format!("eps = {eps} is outside [0, 1]")));
    }
    check_replicas(replicas)?;
    Ok(collect_pairs(replicas, |r| {
        let mut rng = replica_rng(seed, NOISE_STREAM | r);
        let mut state = sample_state(instance, p, &mut rng);
        let start = state.output();
        for i in 0..instance.arity() {
            if rng.random_bool(eps) {
                let v = rng.random_bool(p);
                state.set_bit(i, v);
            }
        }
        (start, state.output())
    }))
}

/// Survival probabilities `P(f = 1 on [0, x])` for each `x`, estimated on
/// nested events of one set of replicas simulated to `max(xs)`.
pub fn survival_curve(
    instance: &FunctionInstance,
    p: f64,
    xs: &[f64],
    replicas: u64,
    seed: u64,
) -> Result<Vec<Estimate>> {
    for &x in xs {
        check_time(x, "x")?;
    }
    let horizon = xs.iter().copied().fold(0.0, f64::max);
    let records = run_batch(instance, &DynamicsParams::new(p, horizon, seed, replicas)?)?;
    Ok(xs
        .iter()
        .map(|&x| proportion(records.iter().filter(|r| r.survives(x)).count() as u64, replicas))
        .collect())
}

/// Estimate of `G(x) = P(f = 1 throughout [0, x])`.
pub fn survival_estimate(
    instance: &FunctionInstance,
    p: f64,
    x: f64,
    replicas: u64,
    seed: u64,
) -> Result<Estimate> {
    Ok(survival_curve(instance, p, &[x], replicas, seed)?[0])
}
