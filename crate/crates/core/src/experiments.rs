//! Sequence-level probes: taxonomy classification, noise sensitivity,
//! majority tameness and lameness sanity checks.
//!
//! Every verdict produced here is a heuristic label for a finite sequence of
//! Monte Carlo estimates; the raw numbers are always reported alongside.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dynamics::{check_p, check_replicas, check_time, estimate_C_distribution, sample_noise_pair, DynamicsParams, EmpiricalC};
use crate::error::{Error, Result};
use crate::functions::{make_instance, FunctionSpec};
use crate::oracle::{exact_influence_report, exact_total_influence, NOISE_MAX_ARITY};
use crate::stats::Estimate;

/// One member `(f_n, p_n)` of a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanEntry {
    pub spec: FunctionSpec,
    pub p: f64,
}

/// A sequence of functions with a shared simulation template.
#[derive(Debug, Clone, PartialEq)]
pub struct SequencePlan {
    pub entries: Vec<PlanEntry>,
    pub horizon: f64,
    pub replicas: u64,
    pub seed: u64,
}

impl SequencePlan {
    pub fn new(entries: Vec<PlanEntry>, horizon: f64, replicas: u64, seed: u64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::params("a plan needs at least one entry"));
        }
        for e in &entries {
            check_p(e.p)?;
        }
        check_time(horizon, "horizon")?;
        check_replicas(replicas)?;
        Ok(Self {
            entries,
            horizon,
            replicas,
            seed,
        })
    }

    /// Same `p` for every spec.
    pub fn uniform(specs: Vec<FunctionSpec>, p: f64, replicas: u64, seed: u64) -> Result<Self> {
        Self::new(
            specs.into_iter().map(|spec| PlanEntry { spec, p }).collect(),
            1.0,
            replicas,
            seed,
        )
    }

    /// Parses a JSON list of `[spec-string, p]` pairs.
    pub fn entries_from_json(text: &str) -> Result<Vec<PlanEntry>> {
        let pairs: Vec<(String, f64)> = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("plan file: {e}")))?;
        pairs
            .into_iter()
            .map(|(s, p)| Ok(PlanEntry { spec: s.parse()?, p }))
            .collect()
    }

    fn params(&self, e: &PlanEntry) -> Result<DynamicsParams> {
        DynamicsParams::new(e.p, self.horizon, self.seed, self.replicas)
    }
}

/// Classification conventions. The taxonomy is defined asymptotically, so
/// these finite-sequence proxies are fixed choices, recorded in each report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// A statistic tends to 0 when its last value is below this and it
    /// strictly decreases along the plan.
    pub to_zero: f64,
    /// A statistic stays bounded away from 0 when its last value exceeds this.
    pub bounded_away: f64,
    /// `M` values for `P(C > M)` and `P(C <= M)`.
    pub tail_grid: Vec<u64>,
    /// `k` values for `P(1 <= C <= k)`.
    pub middle_grid: Vec<u64>,
    /// Standard errors separating a significant change from noise.
    pub z: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            to_zero: 0.05,
            bounded_away: 0.1,
            tail_grid: vec![1, 2, 5],
            middle_grid: vec![1, 2, 3, 5],
            z: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    LameConsistent,
    TameConsistent,
    VolatileConsistent,
    #[serde(rename = "semivolatile-type1-consistent")]
    SemivolatileType1Consistent,
    #[serde(rename = "semivolatile-type2-consistent")]
    SemivolatileType2Consistent,
    Inconclusive,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::LameConsistent => "lame-consistent",
            Verdict::TameConsistent => "tame-consistent",
            Verdict::VolatileConsistent => "volatile-consistent",
            Verdict::SemivolatileType1Consistent => "semivolatile-type1-consistent",
            Verdict::SemivolatileType2Consistent => "semivolatile-type2-consistent",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Summary of `C_n` for one plan entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub index: usize,
    pub spec: String,
    pub p: f64,
    pub arity: usize,
    pub p_zero: Estimate,
    pub tail: Vec<(u64, Estimate)>,
    pub at_most: Vec<(u64, Estimate)>,
    pub middle: Vec<(u64, Estimate)>,
    pub mean_c: Estimate,
    pub second_moment_c: Estimate,
    pub p_one: Estimate,
    pub p_ever_one: Estimate,
    pub histogram: Vec<(u64, u64)>,
}

/// A statistic followed along the plan, with its trend flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub stat: String,
    pub values: Vec<Estimate>,
    pub to_zero: bool,
    pub bounded_away: bool,
    pub growing: bool,
}

impl Trend {
    fn new(stat: impl Into<String>, values: Vec<Estimate>, th: &Thresholds) -> Self {
        let last = values.last().copied().unwrap_or(Estimate::new(0.0, 0.0));
        let first = values.first().copied().unwrap_or(last);
        let decreasing = values.windows(2).all(|w| w[1].value < w[0].value);
        let spread = (first.stderr.powi(2) + last.stderr.powi(2)).sqrt();
        Self {
            stat: stat.into(),
            to_zero: decreasing && last.value < th.to_zero,
            bounded_away: last.value > th.bounded_away,
            growing: last.value - first.value > th.z * spread,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub schema_version: u32,
    /// Verdicts are labels for finite data, not statements about limits.
    pub heuristic: bool,
    pub thresholds: Thresholds,
    pub horizon: f64,
    pub replicas: u64,
    pub seed: u64,
    pub steps: Vec<StepSummary>,
    pub trends: Vec<Trend>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl ClassificationReport {
    pub fn trend(&self, stat: &str) -> Option<&Trend> {
        self.trends.iter().find(|t| t.stat == stat)
    }

    /// Long-format plot data with columns `n,stat,value,stderr`, where `n`
    /// is the position in the plan.
    pub fn plot_csv(&self) -> String {
        let mut out = String::from("n,stat,value,stderr\n");
        for t in &self.trends {
            for (i, v) in t.values.iter().enumerate() {
                let _ = writeln!(out, "{i},{},{},{}", t.stat, v.value, v.stderr);
            }
        }
        out
    }
}

fn summarize(index: usize, entry: &PlanEntry, arity: usize, c: &EmpiricalC, th: &Thresholds) -> StepSummary {
    StepSummary {
        index,
        spec: entry.spec.to_string(),
        p: entry.p,
        arity,
        p_zero: c.p_zero(),
        tail: th.tail_grid.iter().map(|&m| (m, c.tail(m))).collect(),
        at_most: th.tail_grid.iter().map(|&m| (m, c.at_most(m))).collect(),
        middle: th.middle_grid.iter().map(|&k| (k, c.middle(k))).collect(),
        mean_c: c.mean(),
        second_moment_c: c.second_moment(),
        p_one: c.p_one(),
        p_ever_one: c.p_ever_one(),
        histogram: c.histogram.clone(),
    }
}

fn complement(e: Estimate) -> Estimate {
    Estimate::new(1.0 - e.value, e.stderr)
}

/// `x (1 - x)` with a delta-method standard error.
fn variance_proxy(e: Estimate) -> Estimate {
    Estimate::new(e.value * (1.0 - e.value), (1.0 - 2.0 * e.value).abs() * e.stderr)
}

/// Runs every plan entry and assigns a taxonomy label.
///
/// Rules, applied in order:
/// 1. lame: `P(C >= 1)` tends to 0;
/// 2. volatile: `P(C = 0)` and every `P(C <= M)` tend to 0;
/// 3. semi-volatile: `P(C = 0)` stays bounded away and the largest-`M`
///    tail `P(C > M)` is bounded away or growing; Type 1 when every middle
///    mass `P(1 <= C <= k)` tends to 0, Type 2 when some stays bounded away;
/// 4. tame: the largest-`M` tail is neither growing nor bounded away;
/// 5. otherwise inconclusive.
///
/// Three consistency rules then override the label: a lame label requires
/// `P(f=1) P(f=0)` to tend to 0; `P(f=1) -> 0` together with
/// `P(exists t: f=1) -> 1` forces volatile; a growing mean with bounded
/// `E[C^2] / E[C]^2` excludes tame.
pub fn classify(plan: &SequencePlan, thresholds: &Thresholds) -> Result<ClassificationReport> {
    if plan.entries.len() < 3 {
        return Err(Error::params("classification needs at least three plan entries"));
    }
    if thresholds.tail_grid.is_empty() || thresholds.middle_grid.is_empty() {
        return Err(Error::params("threshold grids must be nonempty"));
    }
    let th = thresholds;
    let mut steps = Vec::with_capacity(plan.entries.len());
    for (i, e) in plan.entries.iter().enumerate() {
        let inst = make_instance(e.spec.clone())?;
        let c = estimate_C_distribution(&inst, &plan.params(e)?)?;
        steps.push(summarize(i, e, inst.arity(), &c, th));
    }
    let col = |f: &dyn Fn(&StepSummary) -> Estimate| steps.iter().map(f).collect::<Vec<_>>();
    let mut trends = vec![
        Trend::new("p_zero", col(&|s| s.p_zero), th),
        Trend::new("p_switch", col(&|s| complement(s.p_zero)), th),
        Trend::new("mean_c", col(&|s| s.mean_c), th),
        Trend::new("p_one", col(&|s| s.p_one), th),
        Trend::new("p_never_one", col(&|s| complement(s.p_ever_one)), th),
        Trend::new("p_one_variance", col(&|s| variance_proxy(s.p_one)), th),
    ];
    for (j, &m) in th.tail_grid.iter().enumerate() {
        trends.push(Trend::new(format!("tail_{m}"), col(&|s| s.tail[j].1), th));
        trends.push(Trend::new(format!("at_most_{m}"), col(&|s| s.at_most[j].1), th));
    }
    for (j, &k) in th.middle_grid.iter().enumerate() {
        trends.push(Trend::new(format!("middle_{k}"), col(&|s| s.middle[j].1), th));
    }
    let ratios: Vec<f64> = steps
        .iter()
        .map(|s| s.second_moment_c.value / s.mean_c.value.powi(2))
        .collect();

    let get = |name: &str| trends.iter().find(|t| t.stat == name).expect("trend exists");
    let m_max = *th.tail_grid.iter().max().expect("nonempty");
    let heavy = get(&format!("tail_{m_max}"));
    let mut notes = vec![format!(
        "heuristic: thresholds to_zero={}, bounded_away={}, z={}",
        th.to_zero, th.bounded_away, th.z
    )];

    let volatile = get("p_zero").to_zero
        && th.tail_grid.iter().all(|m| get(&format!("at_most_{m}")).to_zero);
    let semi = get("p_zero").bounded_away && (heavy.bounded_away || heavy.growing);
    let mut verdict = if get("p_switch").to_zero {
        Verdict::LameConsistent
    } else if volatile {
        Verdict::VolatileConsistent
    } else if semi {
        if th.middle_grid.iter().all(|k| get(&format!("middle_{k}")).to_zero) {
            Verdict::SemivolatileType1Consistent
        } else if th.middle_grid.iter().any(|k| get(&format!("middle_{k}")).bounded_away) {
            Verdict::SemivolatileType2Consistent
        } else {
            notes.push("semi-volatile signature but middle mass neither vanishes nor persists".into());
            Verdict::Inconclusive
        }
    } else if !heavy.growing && !heavy.bounded_away {
        Verdict::TameConsistent
    } else {
        Verdict::Inconclusive
    };

    if verdict == Verdict::LameConsistent && !get("p_one_variance").to_zero {
        notes.push("lame label withdrawn: P(f=1)P(f=0) does not tend to 0".into());
        verdict = Verdict::Inconclusive;
    }
    if get("p_one").to_zero && get("p_never_one").to_zero && verdict != Verdict::VolatileConsistent {
        notes.push("volatile forced: P(f=1) -> 0 while P(exists t: f=1) -> 1".into());
        verdict = Verdict::VolatileConsistent;
    }
    let ratio_bounded = ratios
        .windows(2)
        .all(|w| w[1].is_finite() && w[1] <= w[0] * (1.0 + th.to_zero));
    if verdict == Verdict::TameConsistent && get("mean_c").growing && ratio_bounded {
        notes.push("tame label withdrawn: E[C] grows while E[C^2]/E[C]^2 stays bounded".into());
        verdict = Verdict::Inconclusive;
    }
    Ok(ClassificationReport {
        schema_version: 1,
        heuristic: true,
        thresholds: th.clone(),
        horizon: plan.horizon,
        replicas: plan.replicas,
        seed: plan.seed,
        steps,
        trends,
        verdict,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub index: usize,
    pub spec: String,
    pub p: f64,
    pub epsilon: f64,
    pub covariance: f64,
    pub mean_product: Estimate,
    pub disagree: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseProbeReport {
    pub schema_version: u32,
    pub replicas: u64,
    pub seed: u64,
    pub rows: Vec<NoiseRow>,
    /// Exact `sum_i I_i^2` per plan entry when the arity is enumerable.
    pub sum_influence_sq: Vec<Option<f64>>,
}

impl NoiseProbeReport {
    pub fn row(&self, index: usize, epsilon: f64) -> Option<&NoiseRow> {
        self.rows.iter().find(|r| r.index == index && r.epsilon == epsilon)
    }
}

/// Noise-pair statistics for every plan entry and every `epsilon`.
pub fn noise_probe(plan: &SequencePlan, epsilons: &[f64]) -> Result<NoiseProbeReport> {
    if let Some(e) = epsilons.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::params(format!("epsilon = {e} is outside (0, 1]")));
    }
    let mut rows = Vec::new();
    let mut sums = Vec::new();
    for (i, e) in plan.entries.iter().enumerate() {
        let inst = make_instance(e.spec.clone())?;
        for &eps in epsilons {
            let js = sample_noise_pair(&inst, e.p, eps, plan.replicas, plan.seed)?;
            rows.push(NoiseRow {
                index: i,
                spec: e.spec.to_string(),
                p: e.p,
                epsilon: eps,
                covariance: js.covariance,
                mean_product: Estimate::new(js.mean_product, js.mean_product_stderr),
                disagree: Estimate::new(js.disagree, js.disagree_stderr),
            });
        }
        sums.push(if inst.arity() <= NOISE_MAX_ARITY {
            Some(exact_influence_report(&inst, e.p)?.sum_i_sq)
        } else {
            None
        });
    }
    Ok(NoiseProbeReport {
        schema_version: 1,
        replicas: plan.replicas,
        seed: plan.seed,
        rows,
        sum_influence_sq: sums,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TamenessRow {
    pub n: usize,
    pub tail: Estimate,
    pub p_zero: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TamenessReport {
    pub schema_version: u32,
    pub m: u64,
    pub replicas: u64,
    pub seed: u64,
    pub rows: Vec<TamenessRow>,
    /// No significant decrease of `P(C > M)` between consecutive sizes.
    pub tail_nondecreasing: bool,
    pub p_zero_bounded_away: bool,
}

/// `P(C_n > M)` and `P(C_n = 0)` for majority at `p = 1/2` over `[0, 1]`.
pub fn majority_tameness_probe(n_list: &[usize], m: u64, replicas: u64, seed: u64) -> Result<TamenessReport> {
    let th = Thresholds::default();
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let inst = make_instance(FunctionSpec::Majority { n })?;
        let c = estimate_C_distribution(&inst, &DynamicsParams::new(0.5, 1.0, seed, replicas)?)?;
        rows.push(TamenessRow {
            n,
            tail: c.tail(m),
            p_zero: c.p_zero(),
        });
    }
    let tail_nondecreasing = rows.windows(2).all(|w| {
        let se = (w[0].tail.stderr.powi(2) + w[1].tail.stderr.powi(2)).sqrt();
        w[1].tail.value >= w[0].tail.value - th.z * se
    });
    let p_zero_bounded_away = rows.iter().all(|r| r.p_zero.value > th.bounded_away);
    Ok(TamenessReport {
        schema_version: 1,
        m,
        replicas,
        seed,
        rows,
        tail_nondecreasing,
        p_zero_bounded_away,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LamenessRow {
    pub index: usize,
    pub spec: String,
    pub p: f64,
    pub p_zero: Estimate,
    pub mean_c: Estimate,
    /// `T * sum_i I_i` from enumeration when the arity allows it.
    pub exact_mean_c: Option<f64>,
    /// `P(C >= 1) > E[C] + z sigma`, which no distribution permits.
    pub markov_violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LamenessReport {
    pub schema_version: u32,
    pub replicas: u64,
    pub seed: u64,
    pub rows: Vec<LamenessRow>,
}

/// `P(C = 0)` per entry with the exact first moment overlaid.
pub fn lameness_probe(plan: &SequencePlan) -> Result<LamenessReport> {
    let z = Thresholds::default().z;
    let mut rows = Vec::with_capacity(plan.entries.len());
    for (i, e) in plan.entries.iter().enumerate() {
        let inst = make_instance(e.spec.clone())?;
        let c = estimate_C_distribution(&inst, &plan.params(e)?)?;
        let exact = if inst.arity() <= NOISE_MAX_ARITY {
            Some(plan.horizon * exact_total_influence(&inst, e.p)?)
        } else {
            None
        };
        let p_zero = c.p_zero();
        let mean = c.mean();
        let bound = exact.map_or(mean, |m| Estimate::new(m, 0.0));
        let se = (p_zero.stderr.powi(2) + bound.stderr.powi(2)).sqrt();
        rows.push(LamenessRow {
            index: i,
            spec: e.spec.to_string(),
            p: e.p,
            markov_violation: 1.0 - p_zero.value > bound.value + z * se,
            p_zero,
            mean_c: mean,
            exact_mean_c: exact,
        });
    }
    Ok(LamenessReport {
        schema_version: 1,
        replicas: plan.replicas,
        seed: plan.seed,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_is_volatile() {
        let specs = [4, 8, 16, 32].map(|m| FunctionSpec::Parity { m }).to_vec();
        let plan = SequencePlan::uniform(specs, 0.5, 4_000, 1).unwrap();
        let r = classify(&plan, &Thresholds::default()).unwrap();
        assert_eq!(r.verdict, Verdict::VolatileConsistent, "{:?}", r.notes);
        let exact = (-16.0f64).exp();
        assert!(r.steps[3].p_zero.value <= exact + 1e-3);
        assert!(r.plot_csv().starts_with("n,stat,value,stderr\n"));
    }

    #[test]
    fn dictators_are_tame() {
        let specs = [2, 4, 8].map(|m| FunctionSpec::Dictator { m }).to_vec();
        let plan = SequencePlan::uniform(specs, 0.5, 4_000, 1).unwrap();
        assert_eq!(classify(&plan, &Thresholds::default()).unwrap().verdict, Verdict::TameConsistent);
    }

    #[test]
    fn plan_json() {
        let e = SequencePlan::entries_from_json(r#"[["maj:3", 0.5], ["parity:4", 0.3]]"#).unwrap();
        assert_eq!(e[1].spec, FunctionSpec::Parity { m: 4 });
        assert!(SequencePlan::entries_from_json(r#"[["nope:4", 0.5]]"#).is_err());
    }

    #[test]
    fn dictator_noise_disagreement() {
        let specs = [1, 5, 9].map(|m| FunctionSpec::Dictator { m }).to_vec();
        let plan = SequencePlan::uniform(specs, 0.5, 40_000, 2).unwrap();
        let r = noise_probe(&plan, &[0.2]).unwrap();
        for i in 0..3 {
            assert!(r.row(i, 0.2).unwrap().disagree.within(0.1, 4.0));
        }
    }

    #[test]
    fn lameness_rows() {
        let specs = vec![FunctionSpec::Dictator { m: 1 }, FunctionSpec::BigInfluenceTame { n: 2 }];
        let plan = SequencePlan::uniform(specs, 0.5, 20_000, 3).unwrap();
        let r = lameness_probe(&plan).unwrap();
        assert!(r.rows.iter().all(|row| !row.markov_violation));
        assert!((r.rows[1].exact_mean_c.unwrap() - 1.75).abs() < 1e-12);
    }

    #[test]
    fn tameness_probe_consistency() {
        let r0 = majority_tameness_probe(&[1, 9], 0, 20_000, 4).unwrap();
        for row in &r0.rows {
            assert!((row.tail.value - (1.0 - row.p_zero.value)).abs() < 1e-12);
        }
    }
}
