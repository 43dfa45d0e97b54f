use serde::{Deserialize, Serialize};

use super::RecursionSeries;
use crate::dynamics::check_time;
use crate::error::{Error, Result};

fn nodes(n: u32) -> f64 {
    2f64.powi(n as i32 + 1) - 1.0
}

/// `1` for `t < 1/n^2`, otherwise `1 - sqrt(t)/24`.
pub fn andor_beta(n: u32, t: f64) -> f64 {
    let threshold = 1.0 / (n as f64 * n as f64);
    if t < threshold {
        1.0
    } else {
        1.0 - t.sqrt() / 24.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AndOrXReport {
    pub t: f64,
    pub tau: f64,
    /// `x_k(t)`, the probability that the output is 1 at times 0 and t.
    pub series: RecursionSeries,
    pub fixed_point: f64,
    /// `|x_n - x*|`.
    pub residual: f64,
    /// Every entry lies in `[0, 1/2]`.
    pub in_range: bool,
    /// Indices `k` where `x_k > beta_k(t) / 2`.
    pub bound_violations: Vec<usize>,
}

/// `x_{k+1} = (1 - tau)(x_k^2 + 1/4) + tau (x_k - x_k^2)` with
/// `tau = (1 - e^{-t})/2` and `x_0 = (1 - tau)/2`.
pub fn andor_x_seq(t: f64, n: usize) -> Result<AndOrXReport> {
    check_time(t, "t")?;
    let tau = -(-t).exp_m1() / 2.0;
    let mut series = RecursionSeries::new("x");
    let mut x = (1.0 - tau) / 2.0;
    series.push_linear(x);
    for _ in 0..n {
        x = (1.0 - tau) * (x * x + 0.25) + tau * (x - x * x);
        series.push_linear(x);
    }
    let fixed_point = if (1.0 - 2.0 * tau).abs() < 1e-15 {
        0.25
    } else {
        ((1.0 - tau) - ((1.0 - tau) * tau).sqrt()) / (2.0 * (1.0 - 2.0 * tau))
    };
    let values = series.values();
    let in_range = values.iter().all(|&v| (0.0..=0.5).contains(&v));
    let bound_violations = values
        .iter()
        .enumerate()
        .filter(|&(k, &v)| v > 0.5 * andor_beta(k as u32, t) + 1e-15)
        .map(|(k, _)| k)
        .collect();
    Ok(AndOrXReport {
        t,
        tau,
        residual: (x - fixed_point).abs(),
        series,
        fixed_point,
        in_range,
        bound_violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchRate {
    pub n: u32,
    pub nodes: f64,
    /// Expected number of 1-to-0 switches on `[0, 1]`: `(n + 2)/8`.
    pub mean_s: f64,
    /// Probability that one update causes a 1-to-0 switch: `(n + 2)/(8 N_n)`.
    pub per_update: f64,
}

pub fn andor_switch_rate(n: u32) -> SwitchRate {
    let mean_s = (n as f64 + 2.0) / 8.0;
    SwitchRate {
        n,
        nodes: nodes(n),
        mean_s,
        per_update: mean_s / nodes(n),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BBoundReport {
    pub t: f64,
    pub series: RecursionSeries,
    /// `800 (n/N_n)^2 / sqrt(t)`.
    pub cap: f64,
    pub within_cap: bool,
}

/// Upper bounds on the probability of a 1-to-0 switch at two update times
/// `t` apart: `1` up to depth 2, then
/// `b_{k+1} = beta_k(t) b_k / 4 + k^2 / 4^{k+1}`.
pub fn andor_b_bound_seq(n: u32, t: f64) -> Result<BBoundReport> {
    check_time(t, "t")?;
    if t == 0.0 {
        return Err(Error::params("t must be positive"));
    }
    let mut series = RecursionSeries::new("b_hat");
    let mut b = 1.0;
    series.push_linear(b);
    for k in 0..n {
        if k >= 2 {
            let kf = k as f64;
            b = 0.25 * andor_beta(k, t) * b + kf * kf / 4f64.powi(k as i32 + 1);
        }
        series.push_linear(b);
    }
    let nf = n as f64;
    let cap = 800.0 * (nf / nodes(n)).powi(2) / t.sqrt();
    Ok(BBoundReport {
        t,
        within_cap: n < 3 || b <= cap,
        series,
        cap,
    })
}

/// The four terms bounding the depth-`n+1` quantity from the depth-`n` one,
/// by which vertices the two updates hit.
pub fn andor_b_bound_terms(n: u32, t: f64, b_n: f64) -> [f64; 4] {
    let (nn, nn1) = (nodes(n), nodes(n + 1));
    let m = n as f64 + 2.0;
    [
        // Root picked at both times.
        1.0 / (16.0 * nn1 * nn1),
        // Root picked at exactly one time.
        m / (16.0 * nn * nn1),
        // Both updates inside the same subtree.
        0.25 * andor_beta(n, t) * b_n,
        // One update in each subtree.
        m * m / (128.0 * nn * nn),
    ]
}
