use serde::{Deserialize, Serialize};

use super::{RecursionSeries, LOG_SWITCH};
use crate::dynamics::{check_p, check_replicas, replica_rng, run_events, sample_state};
use crate::error::{Error, Result};
use crate::functions::FunctionInstance;
use crate::stats::{proportion, Estimate, Moments};
use rayon::prelude::*;

/// `log(3/2) / log 2`.
pub const ALPHA_0: f64 = 0.584_962_500_721_156_2;

/// Time horizon of a two-time quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Horizon {
    Fixed(f64),
    /// `t = c * a_n`.
    ScaledByAn(f64),
    Infinite,
}

/// Parameters of the near-critical iterated 3-majority sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Maj3Params {
    pub n: u32,
    pub alpha: Option<f64>,
    pub gamma: f64,
    pub epsilon: f64,
    pub p: f64,
    pub horizon: Horizon,
}

impl Maj3Params {
    /// `gamma = n^alpha`, `epsilon = gamma (2/3)^n`, `p = 1/2 - epsilon`.
    pub fn from_alpha(n: u32, alpha: f64, horizon: Horizon) -> Result<Self> {
        let gamma = (n as f64).powf(alpha);
        let epsilon = gamma * (2.0f64 / 3.0).powi(n as i32);
        let mut params = Self::from_epsilon(n, epsilon, horizon)?;
        params.alpha = Some(alpha);
        params.gamma = gamma;
        Ok(params)
    }

    pub fn from_epsilon(n: u32, epsilon: f64, horizon: Horizon) -> Result<Self> {
        if !(0.0..0.5).contains(&epsilon) {
            return Err(Error::params(format!("epsilon = {epsilon} must lie in [0, 1/2)")));
        }
        match horizon {
            Horizon::Fixed(t) | Horizon::ScaledByAn(t) if !(t >= 0.0 && t.is_finite()) => {
                return Err(Error::params(format!("horizon {t} must be finite and >= 0")))
            }
            _ => {}
        }
        Ok(Self {
            n,
            alpha: None,
            gamma: epsilon / (2.0f64 / 3.0).powi(n as i32),
            epsilon,
            p: 0.5 - epsilon,
            horizon,
        })
    }

    /// Concrete time given `a_n`.
    pub fn time(&self, a_n: f64) -> f64 {
        match self.horizon {
            Horizon::Fixed(t) => t,
            Horizon::ScaledByAn(c) => c * a_n,
            Horizon::Infinite => f64::INFINITY,
        }
    }
}

/// One term of the `a` recursion in the representation that keeps it
/// accurate: `pi = 1 - 2a` near `1/2`, then `a` itself, then `log a`.
#[derive(Debug, Clone, Copy)]
pub(crate) enum AStep {
    Pi(f64),
    Lin(f64),
    Log(f64),
}

impl AStep {
    pub(crate) fn a(self) -> f64 {
        match self {
            AStep::Pi(pi) => 0.5 * (1.0 - pi),
            AStep::Lin(a) => a,
            AStep::Log(la) => la.exp(),
        }
    }

    pub(crate) fn log_a(self) -> f64 {
        match self {
            AStep::Log(la) => la,
            other => other.a().ln(),
        }
    }
}

fn log_step(a: f64, la: f64) -> f64 {
    3f64.ln() + 2.0 * la + (-(2.0 / 3.0) * a).ln_1p()
}

pub(crate) fn a_steps(p0: f64, n: usize) -> Vec<AStep> {
    let mut steps = Vec::with_capacity(n + 1);
    let mut cur = AStep::Pi(1.0 - 2.0 * p0);
    if let AStep::Pi(pi) = cur {
        if pi.abs() >= 0.5 {
            cur = AStep::Lin(p0);
        }
    }
    steps.push(cur);
    for _ in 0..n {
        cur = match cur {
            AStep::Pi(pi) => {
                let next = 1.5 * pi - 0.5 * pi * pi * pi;
                if next.abs() < 0.5 {
                    AStep::Pi(next)
                } else {
                    AStep::Lin(0.5 * (1.0 - next))
                }
            }
            AStep::Lin(a) => {
                let next = a * a * (3.0 - 2.0 * a);
                if next < LOG_SWITCH && a > 0.0 {
                    AStep::Log(log_step(a, a.ln()))
                } else {
                    AStep::Lin(next)
                }
            }
            AStep::Log(la) => AStep::Log(log_step(la.exp(), la)),
        };
        steps.push(cur);
    }
    steps
}

/// `a_{k+1} = 3 a_k^2 - 2 a_k^3`, `a_0 = p0`, for `k < n`.
pub fn maj3_a_seq(p0: f64, n: usize) -> Result<RecursionSeries> {
    check_p(p0)?;
    let mut s = RecursionSeries::new("a");
    for step in a_steps(p0, n) {
        match step {
            AStep::Log(la) => s.push_log(la),
            other => s.push_linear(other.a()),
        }
    }
    Ok(s)
}

/// `pi_{k+1} = (3/2) pi_k - (1/2) pi_k^3`, `pi_0 = 2 epsilon`.
pub fn maj3_pi_seq(epsilon: f64, n: usize) -> Result<RecursionSeries> {
    if !(0.0..=0.5).contains(&epsilon) {
        return Err(Error::params(format!("epsilon = {epsilon} must lie in [0, 1/2]")));
    }
    let mut s = RecursionSeries::new("pi");
    let mut pi = 2.0 * epsilon;
    s.push_linear(pi);
    for _ in 0..n {
        pi = 1.5 * pi - 0.5 * pi * pi * pi;
        s.push_linear(pi);
    }
    Ok(s)
}

fn log_sum_exp(x: f64, y: f64) -> f64 {
    let m = x.max(y);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((x - m).exp() + (y - m).exp()).ln()
}

/// `b` relative to `a`: `b = a (1 - beta)`, `b = a^2 (1 + rho)`, then `b`
/// itself and finally `log b`.
#[derive(Debug, Clone, Copy)]
enum BStep {
    Beta(f64),
    Rho(f64),
    Lin(f64),
    Log(f64),
}

/// `b_k = P(root is 1 at times 0 and t)` for the depth-`k` tree at density
/// `p = 1/2 - epsilon`, from `b_{k+1} = 3b^2 - 2b^3 + 6b(a - b)^2`.
pub fn maj3_b_seq(params: &Maj3Params) -> Result<RecursionSeries> {
    let n = params.n as usize;
    let a = a_steps(params.p, n);
    let t = params.time(a[n].a());
    let q = 1.0 - params.p;
    // beta_0 = 1 - b_0 / a_0 = q (1 - e^{-t}).
    let beta0 = -q * (-t).exp_m1();
    let mut cur = BStep::Beta(beta0);
    let mut s = RecursionSeries::new("b");
    for k in 0..=n {
        let ak = a[k];
        // Leave the relative forms once a is no longer close to 1/2.
        if !matches!(ak, AStep::Pi(_)) {
            cur = match cur {
                BStep::Beta(beta) => BStep::Lin(ak.a() * (1.0 - beta)),
                BStep::Rho(rho) => BStep::Lin(ak.a() * ak.a() * (1.0 + rho)),
                other => other,
            };
        }
        if let BStep::Beta(beta) = cur {
            if beta >= 0.5 {
                cur = BStep::Rho((1.0 - beta) / ak.a() - 1.0);
            }
        }
        match cur {
            BStep::Beta(beta) => s.push_linear(ak.a() * (1.0 - beta)),
            BStep::Rho(rho) => s.push_linear(ak.a() * ak.a() * (1.0 + rho)),
            BStep::Lin(b) => s.push_linear(b),
            BStep::Log(lb) => s.push_log(lb),
        }
        if k == n {
            break;
        }
        cur = match (cur, ak) {
            (BStep::Beta(beta), AStep::Pi(pi)) => {
                let d = 2.0 + pi;
                let c1 = 2.0 - (1.0 - pi) / d;
                let c2 = 3.0 / d;
                let c3 = 2.0 * (1.0 - pi) / d;
                BStep::Beta(c1 * beta - c2 * beta * beta + c3 * beta * beta * beta)
            }
            (BStep::Rho(rho), AStep::Pi(pi)) => {
                let d = 2.0 + pi;
                let num = 3.0 * (1.0 + pi).powi(2) * rho
                    + 3.0 * pi * pi * rho * rho
                    + (1.0 - pi).powi(2) * rho.powi(3);
                BStep::Rho(num / (d * d))
            }
            (BStep::Lin(b), AStep::Lin(av)) if b > 0.0 => {
                let next = 3.0 * b * b - 2.0 * b * b * b + 6.0 * b * (av - b) * (av - b);
                if next < LOG_SWITCH {
                    BStep::Log(log_b_step(b.ln(), av.ln(), av))
                } else {
                    BStep::Lin(next)
                }
            }
            (BStep::Lin(b), _) if b <= 0.0 => BStep::Lin(0.0),
            (BStep::Lin(b), ak) => BStep::Log(log_b_step(b.ln(), ak.log_a(), ak.a())),
            (BStep::Log(lb), ak) => BStep::Log(log_b_step(lb, ak.log_a(), ak.a())),
            _ => unreachable!("relative forms only occur while a is near 1/2"),
        };
    }
    Ok(s)
}

/// `log b'` from `log b`, `log a`, `a`, writing `b = r a` with `r <= 1`:
/// `b' = a^2 (3 r^2 (1 - 2ra/3) + 6 r a (1 - r)^2)`.
fn log_b_step(lb: f64, la: f64, a: f64) -> f64 {
    let lr = (lb - la).min(0.0);
    let r = lr.exp();
    let t1 = 3f64.ln() + 2.0 * lr + (-(2.0 / 3.0) * r * a).ln_1p();
    let t2 = 6f64.ln() + lr + la + 2.0 * (-r).ln_1p();
    2.0 * la + log_sum_exp(t1, t2)
}

/// Counts of grid times at which the output is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCountReport {
    pub delta: f64,
    pub target: f64,
    pub grid_spacing: f64,
    pub points: u64,
    /// `points * target`, the exact mean of `Z` when `target = P(f = 1)`.
    pub expected_z: f64,
    pub mean_z: Estimate,
    pub second_moment_z: Estimate,
    pub p_positive: Estimate,
}

/// Simulates the dynamics on `[0, 1]` and counts the grid times
/// `j * delta * target` at which the output is 1.
pub fn maj3_grid_count(
    instance: &FunctionInstance,
    p: f64,
    target: f64,
    delta: f64,
    replicas: u64,
    seed: u64,
) -> Result<GridCountReport> {
    check_p(p)?;
    check_replicas(replicas)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::params(format!("delta = {delta} must lie in (0, 1)")));
    }
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::params(format!("target = {target} must lie in (0, 1]")));
    }
    let h = delta * target;
    let last = (1.0 / h).floor();
    if last > 1e8 {
        return Err(Error::params("grid has more than 1e8 points"));
    }
    let last = last as u64;
    let zs: Vec<u64> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r);
            let mut state = sample_state(instance, p, &mut rng);
            let (mut z, mut j) = (0u64, 0u64);
            let mut current = state.output();
            run_events(&mut state, p, 1.0, &mut rng, |tau, out| {
                while j <= last && (j as f64) * h < tau {
                    z += current as u64;
                    j += 1;
                }
                current = out;
            });
            if j <= last {
                z += (last + 1 - j) * current as u64;
            }
            z
        })
        .collect();
    let (mut m1, mut m2) = (Moments::default(), Moments::default());
    let mut positive = 0;
    for &z in &zs {
        m1.push(z as f64, 1);
        m2.push((z * z) as f64, 1);
        positive += (z > 0) as u64;
    }
    Ok(GridCountReport {
        delta,
        target,
        grid_spacing: h,
        points: last + 1,
        expected_z: (last + 1) as f64 * target,
        mean_z: m1.mean_estimate(),
        second_moment_z: m2.mean_estimate(),
        p_positive: proportion(positive, replicas),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_seq_examples() {
        assert!(maj3_a_seq(0.5, 30).unwrap().values().iter().all(|&a| a == 0.5));
        assert!(maj3_a_seq(0.0, 10).unwrap().values().iter().all(|&a| a == 0.0));
        assert!(maj3_a_seq(1.0, 10).unwrap().values().iter().all(|&a| a == 1.0));
        assert!((maj3_a_seq(0.4, 1).unwrap().value(1) - 0.352).abs() < 1e-15);
    }

    #[test]
    fn a_seq_switches_to_log_space() {
        let s = maj3_a_seq(0.3, 40).unwrap();
        let k = s.entries.iter().position(|e| e.mode == super::super::Mode::Log).unwrap();
        assert!(s.entries[k..].iter().all(|e| e.mode == super::super::Mode::Log));
        assert!(s.last_log() < -1e6);
        let prev = s.value(k - 1);
        assert!(prev >= LOG_SWITCH);
        let expected = 2.0 * prev.ln() + (3.0 - 2.0 * prev).ln();
        assert!((s.log_value(k) - expected).abs() < 1e-9 * expected.abs());
    }

    #[test]
    fn a_seq_matches_naive_recursion_short_range() {
        for p0 in [0.1, 0.3, 0.45, 0.6, 0.9] {
            let s = maj3_a_seq(p0, 8).unwrap();
            let mut a: f64 = p0;
            for k in 0..=8 {
                assert!((s.value(k) - a).abs() < 1e-13, "p0={p0} k={k}");
                a = 3.0 * a * a - 2.0 * a * a * a;
            }
        }
    }

    #[test]
    fn pi_matches_a() {
        for eps in [0.0, 1e-6, 0.01, 0.1, 0.3] {
            let p0 = 0.5 - eps;
            let eps = 0.5 - p0;
            let a = maj3_a_seq(p0, 40).unwrap();
            let pi = maj3_pi_seq(eps, 40).unwrap();
            for k in 0..=40 {
                assert!((a.value(k) - 0.5 * (1.0 - pi.value(k))).abs() < 1e-12);
                if k >= 1 && eps > 0.0 {
                    assert!(pi.value(k) < 2.0 * eps * 1.5f64.powi(k as i32));
                }
            }
        }
        assert!((maj3_pi_seq(0.01, 1).unwrap().value(1) - 0.029996).abs() < 1e-15);
    }

    #[test]
    fn b_seq_limits() {
        for eps in [0.0, 0.05, 0.2] {
            let a = maj3_a_seq(0.5 - eps, 50).unwrap();
            let p0 = Maj3Params::from_epsilon(50, eps, Horizon::Fixed(0.0)).unwrap();
            let b0 = maj3_b_seq(&p0).unwrap();
            let pinf = Maj3Params::from_epsilon(50, eps, Horizon::Infinite).unwrap();
            let binf = maj3_b_seq(&pinf).unwrap();
            for k in 0..=50 {
                assert!((b0.value(k) - a.value(k)).abs() < 1e-12);
                assert!((binf.value(k) - a.value(k).powi(2)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn b_seed_matches_closed_form() {
        let (eps, t): (f64, f64) = (0.01, 0.3);
        let params = Maj3Params::from_epsilon(3, eps, Horizon::Fixed(t)).unwrap();
        let b = maj3_b_seq(&params).unwrap();
        let expected = (1.0 + (-t).exp()) / 4.0 - eps + eps * eps * (1.0 - (-t).exp());
        assert!((b.value(0) - expected).abs() < 1e-15);
    }

    #[test]
    fn b_seq_log_tail_is_finite_and_below_a() {
        let params = Maj3Params::from_epsilon(60, 0.2, Horizon::Fixed(0.5)).unwrap();
        let a = maj3_a_seq(params.p, 60).unwrap();
        let b = maj3_b_seq(&params).unwrap();
        for k in 0..=60 {
            assert!(b.log_value(k).is_finite());
            assert!(b.log_value(k) <= a.log_value(k) + 1e-9);
            assert!(b.log_value(k) >= 2.0 * a.log_value(k) - 1e-9);
        }
    }

    #[test]
    fn params_reject_large_epsilon() {
        assert!(Maj3Params::from_alpha(3, 5.0, Horizon::Infinite).is_err());
        let p = Maj3Params::from_alpha(300, 1.0, Horizon::Infinite).unwrap();
        assert!((p.gamma - 300.0).abs() < 1e-9);
        assert!((ALPHA_0 - 1.5f64.ln() / 2f64.ln()).abs() < 1e-15);
    }
}
