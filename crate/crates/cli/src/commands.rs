use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{ArgGroup, Subcommand};
use serde::Serialize;

use boolvol_core::analysis::{
    andor_b_bound_seq, andor_survival_floor_check, andor_x_seq, maj3_a_seq, maj3_b_seq,
    maj3_cutoff_diagnostic, maj3_volatility_ratio, Horizon, Maj3Params, RecursionSeries,
};
use boolvol_core::dynamics::{estimate_C_distribution, estimate_joint, sample_noise_pair, DynamicsParams, JointStats, SimulationReport};
use boolvol_core::experiments::{classify as run_classify, SequencePlan, Thresholds};
use boolvol_core::oracle::{exact_influence_report, exact_noise_covariance, NoiseCovariance, NOISE_MAX_ARITY};
use boolvol_core::perctree::{build_profile, regime_experiment, weight_sequence, RegimeParams, Target, DEFAULT_EDGE_CAP};
use boolvol_core::{make_instance, Error, FunctionInstance, FunctionSpec, LevelProfile};

use crate::output::{Output, Table};
use crate::Global;

const SCHEMA_VERSION: u32 = 1;

fn instance(spec: &str) -> Result<FunctionInstance> {
    let spec: FunctionSpec = spec.parse()?;
    Ok(make_instance(spec)?)
}

pub fn simulate(g: &Global, out: &Output, spec: &str, p: f64, horizon: f64) -> Result<()> {
    let inst = instance(spec)?;
    let params = DynamicsParams::new(p, horizon, g.seed, g.replicas)?;
    let emp = estimate_C_distribution(&inst, &params)?;
    let report = SimulationReport::new(&inst, &params, &emp);
    out.emit(&report, || {
        let mut t = Table::new(["c", "count"]);
        for (c, n) in &report.histogram {
            t.row([c, n]);
        }
        Ok(t)
    })
}

pub fn influence(out: &Output, spec: &str, p: f64) -> Result<()> {
    let inst = instance(spec)?;
    let report = exact_influence_report(&inst, p)?;
    #[derive(Serialize)]
    struct Wrapped<'a, T> {
        schema_version: u32,
        spec: String,
        #[serde(flatten)]
        report: &'a T,
    }
    let wrapped = Wrapped {
        schema_version: SCHEMA_VERSION,
        spec: inst.spec().to_string(),
        report: &report,
    };
    out.emit(&wrapped, || {
        let mut t = Table::new(["bit", "influence", "pivotality"]);
        for (i, inf, piv) in &report.per_bit {
            t.row([i.to_string(), inf.to_string(), piv.to_string()]);
        }
        Ok(t)
    })
}

#[derive(Serialize)]
struct PairReport {
    schema_version: u32,
    spec: String,
    p: f64,
    t: Option<f64>,
    eps: Option<f64>,
    replicas: u64,
    seed: u64,
    mean_product: f64,
    mean_product_stderr: f64,
    disagree: f64,
    disagree_stderr: f64,
    covariance: f64,
    exact: Option<NoiseCovariance>,
}

fn pair_report(
    g: &Global,
    inst: &FunctionInstance,
    p: f64,
    t: Option<f64>,
    eps: Option<f64>,
    js: JointStats,
    exact: Option<NoiseCovariance>,
) -> PairReport {
    PairReport {
        schema_version: SCHEMA_VERSION,
        spec: inst.spec().to_string(),
        p,
        t,
        eps,
        replicas: g.replicas,
        seed: g.seed,
        mean_product: js.mean_product,
        mean_product_stderr: js.mean_product_stderr,
        disagree: js.disagree,
        disagree_stderr: js.disagree_stderr,
        covariance: js.covariance,
        exact,
    }
}

fn exact_pair(inst: &FunctionInstance, p: f64, eps: f64) -> Result<Option<NoiseCovariance>> {
    if inst.arity() <= NOISE_MAX_ARITY {
        Ok(Some(exact_noise_covariance(inst, p, eps)?))
    } else {
        Ok(None)
    }
}

pub fn joint(g: &Global, out: &Output, spec: &str, p: f64, t: f64) -> Result<()> {
    let inst = instance(spec)?;
    let js = estimate_joint(&inst, p, t, g.replicas, g.seed)?;
    let exact = exact_pair(&inst, p, -(-t).exp_m1())?;
    let report = pair_report(g, &inst, p, Some(t), None, js, exact);
    out.emit(&report, || Table::from_object(&report))
}

pub fn noise(g: &Global, out: &Output, spec: &str, p: f64, eps: f64) -> Result<()> {
    let inst = instance(spec)?;
    let js = sample_noise_pair(&inst, p, eps, g.replicas, g.seed)?;
    let exact = exact_pair(&inst, p, eps)?;
    let report = pair_report(g, &inst, p, None, Some(eps), js, exact);
    out.emit(&report, || Table::from_object(&report))
}

#[derive(Subcommand, Debug)]
pub enum RecursionCmd {
    /// a_k = P(f = 1) for iterated 3-majority of depth k.
    Maj3A {
        #[arg(long)]
        p0: f64,
        #[arg(long)]
        n: usize,
    },
    /// b_k = P(f = 1 at times 0 and t) near p = 1/2.
    Maj3B(Maj3Args),
    /// log(3^n a_n) at p = 1/2 - n^alpha (2/3)^n, in high precision.
    Maj3Cutoff {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        n: u32,
    },
    /// b_n / a_n^2 - 1 in high precision.
    Maj3Ratio(Maj3Args),
    /// x_n(t) for the AND/OR tree.
    AndorX {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        n: usize,
    },
    /// Bound recursion for b_n(t) of the AND/OR tree.
    AndorBbound {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        t: f64,
    },
    /// Fixed-point check of the survival floor (1 - 4 sqrt(x)) / 2.
    AndorGfloor {
        #[arg(long, default_value_t = 1000)]
        resolution: usize,
    },
}

#[derive(clap::Args, Debug)]
#[command(group(ArgGroup::new("eps").required(true).args(["alpha", "epsilon"])))]
#[command(group(ArgGroup::new("time").required(true).args(["t", "t_over_a", "infinite"])))]
pub struct Maj3Args {
    #[arg(long)]
    n: u32,
    /// epsilon = n^alpha (2/3)^n.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Fixed time.
    #[arg(long)]
    t: Option<f64>,
    /// Time as a multiple of a_n.
    #[arg(long)]
    t_over_a: Option<f64>,
    #[arg(long)]
    infinite: bool,
}

impl Maj3Args {
    fn params(&self) -> Result<Maj3Params> {
        let horizon = match (self.t, self.t_over_a) {
            (Some(t), _) => Horizon::Fixed(t),
            (_, Some(c)) => Horizon::ScaledByAn(c),
            _ => Horizon::Infinite,
        };
        Ok(match (self.alpha, self.epsilon) {
            (Some(a), _) => Maj3Params::from_alpha(self.n, a, horizon)?,
            (_, Some(e)) => Maj3Params::from_epsilon(self.n, e, horizon)?,
            _ => unreachable!("clap enforces one of alpha or epsilon"),
        })
    }
}

#[derive(Serialize)]
struct SeriesReport<'a, E: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    extra: E,
    series: &'a RecursionSeries,
}

fn series_table(s: &RecursionSeries) -> Result<Table> {
    let mut t = Table::new(["k", "value_or_log", "mode"]);
    for line in s.to_csv().lines().skip(1) {
        t.row(line.split(','));
    }
    Ok(t)
}

pub fn recursion(g: &Global, out: &Output, cmd: RecursionCmd) -> Result<()> {
    match cmd {
        RecursionCmd::Maj3A { p0, n } => {
            let s = maj3_a_seq(p0, n)?;
            #[derive(Serialize)]
            struct E {
                p0: f64,
            }
            let r = SeriesReport {
                schema_version: SCHEMA_VERSION,
                extra: E { p0 },
                series: &s,
            };
            out.emit(&r, || series_table(&s))
        }
        RecursionCmd::Maj3B(args) => {
            let params = args.params()?;
            let s = maj3_b_seq(&params)?;
            let r = SeriesReport {
                schema_version: SCHEMA_VERSION,
                extra: params,
                series: &s,
            };
            out.emit(&r, || series_table(&s))
        }
        RecursionCmd::Maj3Cutoff { alpha, n } => {
            let d = maj3_cutoff_diagnostic(alpha, n, g.precision)?;
            out.emit(&versioned(&d)?, || Table::from_object(&d))
        }
        RecursionCmd::Maj3Ratio(args) => {
            let r = maj3_volatility_ratio(&args.params()?, g.precision)?;
            out.emit(&versioned(&r)?, || Table::from_object(&r))
        }
        RecursionCmd::AndorX { t, n } => {
            let r = andor_x_seq(t, n)?;
            out.emit(&versioned(&r)?, || series_table(&r.series))
        }
        RecursionCmd::AndorBbound { n, t } => {
            let r = andor_b_bound_seq(n, t)?;
            out.emit(&versioned(&r)?, || series_table(&r.series))
        }
        RecursionCmd::AndorGfloor { resolution } => {
            let r = andor_survival_floor_check(resolution)?;
            out.emit(&versioned(&r)?, || {
                let mut t = Table::new(["x", "floor", "rhs"]);
                for p in &r.points {
                    t.row([p.x, p.floor, p.rhs]);
                }
                Ok(t)
            })
        }
    }
}

/// JSON object of `value` with a leading `schema_version` field.
fn versioned(value: &impl Serialize) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(value)?;
    if let Some(obj) = v.as_object_mut() {
        obj.insert("schema_version".into(), SCHEMA_VERSION.into());
    }
    Ok(v)
}

#[derive(Subcommand, Debug)]
pub enum PercCmd {
    /// Greedy level profile tracking a weight target.
    Build {
        /// logn, logn1p:<delta>, nlogn:<alpha>, nalpha:<alpha> or constant.
        #[arg(long)]
        target: String,
        #[arg(long)]
        levels: usize,
        /// Also write the profile (one child count per line) to FILE.
        #[arg(long, value_name = "FILE")]
        save: Option<PathBuf>,
    },
    /// Weight sequence w_k of a profile file (or an inline list like [2,3,4]).
    Weights { profile: String },
    /// Dynamical percolation statistics at the requested levels.
    Run {
        profile: String,
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = DEFAULT_EDGE_CAP)]
        edge_cap: u64,
    },
}

fn load_profile(text: &str) -> Result<LevelProfile> {
    if text.trim_start().starts_with('[') {
        let v: Vec<u32> =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("profile list: {e}")))?;
        Ok(LevelProfile::new(v)?)
    } else {
        Ok(LevelProfile::from_file(Path::new(text))?)
    }
}

pub fn perc(g: &Global, out: &Output, cmd: PercCmd) -> Result<()> {
    match cmd {
        PercCmd::Build { target, levels, save } => {
            let target: Target = target.parse()?;
            let build = build_profile(&target, levels)?;
            if let Some(path) = save {
                std::fs::write(&path, build.profile.to_file_string())?;
            }
            out.emit(&versioned(&build)?, || {
                let mut t = Table::new(["level", "children", "log_w", "log_target", "ratio", "checked"]);
                for f in &build.fits {
                    t.row([
                        f.level.to_string(),
                        f.children.to_string(),
                        f.log_w.to_string(),
                        f.log_target.to_string(),
                        f.ratio.to_string(),
                        f.checked.to_string(),
                    ]);
                }
                Ok(t)
            })
        }
        PercCmd::Weights { profile } => {
            let profile = load_profile(&profile)?;
            let w = weight_sequence(&profile);
            #[derive(Serialize)]
            struct Weights {
                schema_version: u32,
                profile: LevelProfile,
                log_w: Vec<f64>,
                w: Vec<f64>,
            }
            let r = Weights {
                schema_version: SCHEMA_VERSION,
                w: (1..=w.len()).map(|k| w.w(k)).collect(),
                log_w: w.log_w.clone(),
                profile,
            };
            out.emit(&r, || {
                let mut t = Table::new(["k", "log_w", "w"]);
                for (i, (lw, w)) in r.log_w.iter().zip(&r.w).enumerate() {
                    t.row([(i + 1).to_string(), lw.to_string(), w.to_string()]);
                }
                Ok(t)
            })
        }
        PercCmd::Run {
            profile,
            levels,
            p,
            horizon,
            edge_cap,
        } => {
            let profile = load_profile(&profile)?;
            let params = RegimeParams {
                p,
                horizon,
                replicas: g.replicas,
                seed: g.seed,
                edge_cap,
            };
            let r = regime_experiment(&profile, &levels, &params)?;
            out.emit(&r, || {
                let mut t = Table::new([
                    "level", "edges", "p_one", "p_one_se", "p_ever_one", "p_ever_one_se",
                    "p_always_one", "p_always_one_se", "p_always_zero", "p_always_zero_se",
                    "mean_c", "mean_c_se",
                ]);
                for l in &r.levels {
                    let mut row = vec![l.level.to_string(), l.edges.to_string()];
                    for e in [l.p_one, l.p_ever_one, l.p_always_one, l.p_always_zero, l.mean_c] {
                        row.push(e.value.to_string());
                        row.push(e.stderr.to_string());
                    }
                    t.row(row);
                }
                Ok(t)
            })
        }
    }
}

pub fn classify(
    g: &Global,
    out: &Output,
    plan: &Path,
    horizon: f64,
    to_zero: Option<f64>,
    bounded_away: Option<f64>,
) -> Result<()> {
    let text = std::fs::read_to_string(plan)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", plan.display())))?;
    let entries = SequencePlan::entries_from_json(&text)?;
    let plan = SequencePlan::new(entries, horizon, g.replicas, g.seed)?;
    let mut th = Thresholds::default();
    if let Some(v) = to_zero {
        th.to_zero = v;
    }
    if let Some(v) = bounded_away {
        th.bounded_away = v;
    }
    let report = run_classify(&plan, &th)?;
    out.emit(&report, || {
        let mut t = Table::new(["n", "stat", "value", "stderr"]);
        for line in report.plot_csv().lines().skip(1) {
            t.row(line.split(','));
        }
        Ok(t)
    })
}
