//! Deterministic recursion engines for the iterated 3-majority and AND/OR
//! tree sequences.

mod andor;
mod gfloor;
mod hp;
mod maj3;

pub use andor::{
    andor_b_bound_seq, andor_b_bound_terms, andor_beta, andor_switch_rate, andor_x_seq,
    AndOrXReport, BBoundReport, SwitchRate,
};
pub use gfloor::{andor_survival_floor_check, survival_floor, GFloorReport};
pub use hp::{maj3_cutoff_diagnostic, maj3_volatility_ratio, CutoffDiagnostic, VolatilityRatio};
pub use maj3::{
    maj3_a_seq, maj3_b_seq, maj3_grid_count, maj3_pi_seq, GridCountReport, Horizon, Maj3Params,
    ALPHA_0,
};

use serde::{Deserialize, Serialize};

/// Values below this are continued in log space.
pub const LOG_SWITCH: f64 = 1e-280;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub k: usize,
    /// The value itself in linear mode, its natural log in log mode.
    pub value: f64,
    pub mode: Mode,
}

/// A numeric sequence whose tail may be stored in log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionSeries {
    pub name: String,
    pub digits: u32,
    pub entries: Vec<SeriesEntry>,
}

impl RecursionSeries {
    pub(crate) fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            digits: 16,
            entries: Vec::new(),
        }
    }

    pub(crate) fn push_linear(&mut self, value: f64) {
        let k = self.entries.len();
        debug_assert!(self.entries.last().is_none_or(|e| e.mode == Mode::Linear));
        self.entries.push(SeriesEntry {
            k,
            value,
            mode: Mode::Linear,
        });
    }

    pub(crate) fn push_log(&mut self, log_value: f64) {
        let k = self.entries.len();
        self.entries.push(SeriesEntry {
            k,
            value: log_value,
            mode: Mode::Log,
        });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Linear value of entry `k` (may underflow to 0 for log entries).
    pub fn value(&self, k: usize) -> f64 {
        let e = &self.entries[k];
        match e.mode {
            Mode::Linear => e.value,
            Mode::Log => e.value.exp(),
        }
    }

    /// Natural log of entry `k`.
    pub fn log_value(&self, k: usize) -> f64 {
        let e = &self.entries[k];
        match e.mode {
            Mode::Linear => e.value.ln(),
            Mode::Log => e.value,
        }
    }

    pub fn last(&self) -> f64 {
        self.value(self.len() - 1)
    }

    pub fn last_log(&self) -> f64 {
        self.log_value(self.len() - 1)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.value(k)).collect()
    }

    /// `k,value_or_log,mode` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,value_or_log,mode\n");
        for e in &self.entries {
            let mode = match e.mode {
                Mode::Linear => "linear",
                Mode::Log => "log",
            };
            out.push_str(&format!("{},{:e},{}\n", e.k, e.value, mode));
        }
        out
    }
}
