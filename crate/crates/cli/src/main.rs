use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

mod commands;
mod output;

use output::Output;

/// Boolean functions under continuous-time bit rerandomization.
///
/// Every command is deterministic given its flags; the default seed is 1.
/// Exit codes: 0 success, 1 other failure, 2 invalid input, 3 resource cap.
///
/// CSV columns by command:
///   simulate: c,count
///   influence: bit,influence,pivotality
///   joint, noise: one row of the JSON fields
///   recursion maj3-a/maj3-b/andor-x/andor-bbound: k,value_or_log,mode
///   recursion maj3-cutoff/maj3-ratio: one row of the JSON fields
///   recursion andor-gfloor: x,floor,rhs
///   perc build: level,children,log_w,log_target,ratio,checked
///   perc weights: k,log_w,w
///   perc run: level,edges,p_one,p_one_se,p_ever_one,p_ever_one_se,p_always_one,p_always_one_se,p_always_zero,p_always_zero_se,mean_c,mean_c_se
///   classify: n,stat,value,stderr
#[derive(Parser, Debug)]
#[command(name = "boolvol", version, verbatim_doc_comment)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Base seed of all random streams.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo replicas.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub replicas: u64,
    /// Emit JSON (the default).
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,
    /// Emit CSV instead of JSON.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Write output to FILE instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Decimal digits for the high-precision recursions.
    #[arg(long, global = true, default_value_t = 50, value_name = "DIGITS")]
    pub precision: u32,
    /// Worker threads for replica batches (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Switch-count distribution of a function under the dynamics.
    Simulate {
        spec: String,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
    },
    /// Exact per-bit influences by enumeration.
    Influence {
        spec: String,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
    },
    /// Monte Carlo estimate of the joint law of the output at times 0 and t.
    Joint {
        spec: String,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long)]
        t: f64,
    },
    /// Output pair under independent epsilon-rerandomization of every bit.
    Noise {
        spec: String,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long)]
        eps: f64,
    },
    /// Analytic recursions.
    #[command(subcommand)]
    Recursion(commands::RecursionCmd),
    /// Spherically symmetric trees and dynamical percolation.
    #[command(subcommand)]
    Perc(commands::PercCmd),
    /// Taxonomy classification of a sequence given as a JSON list of
    /// [spec, p] pairs.
    Classify {
        plan: PathBuf,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long)]
        to_zero: Option<f64>,
        #[arg(long)]
        bounded_away: Option<f64>,
    },
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            bail!(boolvol_core::Error::InvalidParams("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let out = Output::new(&cli.global);
    let g = &cli.global;
    match cli.command {
        Command::Simulate { spec, p, horizon } => commands::simulate(g, &out, &spec, p, horizon),
        Command::Influence { spec, p } => commands::influence(&out, &spec, p),
        Command::Joint { spec, p, t } => commands::joint(g, &out, &spec, p, t),
        Command::Noise { spec, p, eps } => commands::noise(g, &out, &spec, p, eps),
        Command::Recursion(cmd) => commands::recursion(g, &out, cmd),
        Command::Perc(cmd) => commands::perc(g, &out, cmd),
        Command::Classify {
            plan,
            horizon,
            to_zero,
            bounded_away,
        } => commands::classify(g, &out, &plan, horizon, to_zero, bounded_away),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use boolvol_core::Error as E;
    match err.chain().find_map(|e| e.downcast_ref::<E>()) {
        Some(e) if e.is_resource_cap() => 3,
        Some(
            E::InvalidSpec(_)
            | E::Parse(_)
            | E::ArityMismatch { .. }
            | E::IndexOutOfRange { .. }
            | E::NotPowerOfTwo(_)
            | E::InvalidParams(_)
            | E::UnreachableTarget { .. },
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
