//! High-precision engines for the near-critical iterated 3-majority
//! recursions.
//!
//! Near `p = 1/2` the quantities `a_k`, `b_k` are tracked through
//! `pi_k = 1 - 2 a_k`, `beta_k = 1 - b_k / a_k` and `rho_k = b_k / a_k^2 - 1`,
//! all of which stay free of cancellation. Once `pi_k` reaches `1/2` the
//! recursion switches to `a_k` directly, which then decays doubly
//! exponentially; every further step doubles the relative rounding error,
//! and this growth is tracked explicitly. Once `a_k` drops below the working
//! precision itself, only `log a_k` is carried, since the binary exponent of
//! `a_k` soon exceeds what any float type can hold.

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use serde::{Deserialize, Serialize};

use super::maj3::{Horizon, Maj3Params};
use crate::error::{Error, Result};

type F = FBig<HalfEven, 2>;

/// Largest tolerated relative error of `a_n` (equivalently, absolute error of
/// `log a_n`).
const MAX_LOG_ERROR: f64 = 1e-6;

struct Ctx {
    bits: usize,
    digits: u32,
}

impl Ctx {
    fn new(digits: u32) -> Self {
        Self {
            bits: (digits as f64 * std::f64::consts::LOG2_10).ceil() as usize + 2,
            digits,
        }
    }

    fn c(&self, x: f64) -> F {
        F::try_from(x)
            .expect("finite constant")
            .with_precision(self.bits)
            .value()
    }

    fn unit(&self) -> f64 {
        2f64.powi(-(self.bits as i32))
    }

    /// `n^alpha (2/3)^n` evaluated at full precision.
    fn epsilon(&self, n: u32, alpha: f64) -> F {
        let ln_eps = self.c(alpha) * self.c(n as f64).ln()
            + self.c(n as f64) * (self.c(2.0) / self.c(3.0)).ln();
        ln_eps.exp()
    }
}

fn to_f64(x: &F) -> f64 {
    x.to_f64().value()
}

/// `a_k` in the form best suited to its size.
#[derive(Clone)]
enum AState {
    /// `a = (1 - pi) / 2`.
    Pi(F),
    Direct(F),
    /// `log a`, used once `a` is negligible against `1`.
    Log(F),
}

impl AState {
    /// `a` itself; `None` in the logarithmic tail.
    fn a(&self, ctx: &Ctx) -> Option<F> {
        match self {
            AState::Pi(pi) => Some((ctx.c(1.0) - pi) / ctx.c(2.0)),
            AState::Direct(a) => Some(a.clone()),
            AState::Log(_) => None,
        }
    }

    fn log_a(&self, ctx: &Ctx) -> F {
        match self {
            AState::Log(la) => la.clone(),
            other => other.a(ctx).expect("linear state").ln(),
        }
    }
}

/// The whole `a` trajectory with its relative error bound.
fn a_trajectory(ctx: &Ctx, epsilon: &F, n: u32) -> (Vec<AState>, f64) {
    let u = ctx.unit();
    let (half, two, three) = (ctx.c(0.5), ctx.c(2.0), ctx.c(3.0));
    let mut states = Vec::with_capacity(n as usize + 1);
    let mut state = AState::Pi(epsilon * &two);
    let mut err = u;
    let tiny = F::from_parts(1.into(), -(ctx.bits as isize) - 64).with_precision(ctx.bits).value();
    let ln3 = three.ln();
    states.push(state.clone());
    for _ in 0..n {
        state = match state {
            AState::Pi(pi) if pi < half => {
                // pi' = pi (3 - pi^2) / 2; relative errors are not amplified.
                err += 4.0 * u;
                let next = &pi * (&three - &pi * &pi) / &two;
                if next < half {
                    AState::Pi(next)
                } else {
                    err += u;
                    AState::Direct((ctx.c(1.0) - next) / &two)
                }
            }
            AState::Pi(pi) => AState::Direct((ctx.c(1.0) - pi) / &two),
            AState::Direct(a) if a < tiny => {
                err = 2.0 * err + 4.0 * u;
                let la = a.ln();
                err += u * to_f64(&la).abs();
                AState::Log(&ln3 + &two * &la)
            }
            AState::Direct(a) => {
                // a' = a^2 (3 - 2a); relative error at most doubles.
                err = 2.0 * err + 4.0 * u;
                AState::Direct(&a * &a * (&three - &two * &a))
            }
            AState::Log(la) => {
                // The dropped log(1 - 2a/3) is below the working precision.
                let next = &ln3 + &two * &la;
                err = 2.0 * err + 2.0 * u * to_f64(&next).abs();
                AState::Log(next)
            }
        };
        states.push(state.clone());
    }
    (states, err)
}

fn params_epsilon(ctx: &Ctx, params: &Maj3Params) -> F {
    match params.alpha {
        Some(alpha) => ctx.epsilon(params.n, alpha),
        None => ctx.c(params.epsilon),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffDiagnostic {
    pub alpha: f64,
    pub n: u32,
    /// `n log 3 + log a_n`.
    pub log_diag: f64,
    pub log_a_n: f64,
    pub digits: u32,
    /// Bound on the absolute error of `log_diag` from rounding.
    pub error_bound: f64,
}

/// `log(3^n a_n)` at `p = 1/2 - n^alpha (2/3)^n`.
pub fn maj3_cutoff_diagnostic(alpha: f64, n: u32, digits: u32) -> Result<CutoffDiagnostic> {
    if n < 10 {
        return Err(Error::params("the cutoff diagnostic needs n >= 10"));
    }
    if digits < 30 {
        return Err(Error::params("the cutoff diagnostic needs at least 30 digits"));
    }
    let ctx = Ctx::new(digits);
    let eps = ctx.epsilon(n, alpha);
    if eps >= ctx.c(0.5) {
        return Err(Error::params(format!(
            "n^alpha (2/3)^n must be below 1/2 (alpha = {alpha}, n = {n})"
        )));
    }
    let (states, err) = a_trajectory(&ctx, &eps, n);
    if err > MAX_LOG_ERROR {
        return Err(Error::PrecisionExhausted {
            digits,
            error_bound: err,
        });
    }
    let log_a_n = to_f64(&states.last().unwrap().log_a(&ctx));
    Ok(CutoffDiagnostic {
        alpha,
        n,
        log_diag: n as f64 * 3f64.ln() + log_a_n,
        log_a_n,
        digits: ctx.digits,
        error_bound: err,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolatilityRatio {
    pub n: u32,
    pub alpha: Option<f64>,
    pub epsilon: f64,
    pub t: f64,
    pub log_a_n: f64,
    /// `b_n / a_n^2 - 1`; may be infinite when it exceeds the `f64` range.
    pub rho: f64,
    /// `log rho` when `rho > 0`.
    pub log_rho: Option<f64>,
    /// The ratio is only meaningful when `t` is of larger order than `epsilon`.
    pub t_exceeds_epsilon: bool,
    pub digits: u32,
}

enum BState {
    Beta(F),
    Rho(F),
}

/// `b_n / a_n^2 - 1` from the joint recursion in high precision.
pub fn maj3_volatility_ratio(params: &Maj3Params, digits: u32) -> Result<VolatilityRatio> {
    if digits < 16 {
        return Err(Error::params("at least 16 digits are required"));
    }
    let ctx = Ctx::new(digits);
    let eps = params_epsilon(&ctx, params);
    let n = params.n;
    let (states, err) = a_trajectory(&ctx, &eps, n);
    let Some(a_n) = states[n as usize].a(&ctx) else {
        return Err(Error::PrecisionExhausted {
            digits,
            error_bound: err,
        });
    };
    let (one, two, three, four, half) = (
        ctx.c(1.0),
        ctx.c(2.0),
        ctx.c(3.0),
        ctx.c(4.0),
        ctx.c(0.5),
    );
    let t = match params.horizon {
        Horizon::Fixed(t) => Some(ctx.c(t)),
        Horizon::ScaledByAn(c) => Some(ctx.c(c) * &a_n),
        Horizon::Infinite => None,
    };
    let q = &half + &eps;
    let beta0 = match &t {
        Some(t) => -(&q * (-t).exp_m1()),
        None => q.clone(),
    };
    let to_rho = |beta: &F, a: &F| (&one - beta) / a - &one;
    let mut b = BState::Beta(beta0);
    for st in states.iter().take(n as usize) {
        let a = st.a(&ctx).expect("a_n is linear, hence so is every earlier a_k");
        if let BState::Beta(beta) = &b {
            if *beta >= half {
                b = BState::Rho(to_rho(beta, &a));
            }
        }
        // Coefficients written through pi while a is close to 1/2.
        let (one_minus_a, one_minus_2a, three_minus_2a) = match st {
            AState::Pi(pi) => ((&one + pi) / &two, pi.clone(), &two + pi),
            AState::Direct(a) => (&one - a, &one - &two * a, &three - &two * a),
            AState::Log(_) => unreachable!(),
        };
        b = match b {
            BState::Beta(beta) => {
                let c1 = &two - &two * &a / &three_minus_2a;
                let c2 = &three / &three_minus_2a;
                let c3 = &four * &a / &three_minus_2a;
                let beta2 = &beta * &beta;
                BState::Beta(&c1 * &beta - &c2 * &beta2 + &c3 * &beta2 * &beta)
            }
            BState::Rho(rho) => {
                let denom = &three_minus_2a * &three_minus_2a;
                let r2 = &rho * &rho;
                let num = ctx.c(12.0) * &one_minus_a * &one_minus_a * &rho
                    + &three * &one_minus_2a * &one_minus_2a * &r2
                    + &four * &a * &a * &r2 * &rho;
                BState::Rho(num / denom)
            }
        };
    }
    let rho = match b {
        BState::Beta(beta) => to_rho(&beta, &a_n),
        BState::Rho(rho) => rho,
    };
    let zero = ctx.c(0.0);
    let t_f = t.as_ref().map_or(f64::INFINITY, to_f64);
    Ok(VolatilityRatio {
        n,
        alpha: params.alpha,
        epsilon: to_f64(&eps),
        t: t_f,
        log_a_n: to_f64(&a_n.ln()),
        rho: to_f64(&rho),
        log_rho: (rho > zero).then(|| to_f64(&rho.ln())),
        t_exceeds_epsilon: t.as_ref().is_none_or(|t| *t > eps),
        digits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{maj3_a_seq, maj3_b_seq};

    #[test]
    fn cutoff_signs() {
        let lame = maj3_cutoff_diagnostic(1.0, 300, 50).unwrap();
        let vol = maj3_cutoff_diagnostic(0.4, 300, 50).unwrap();
        assert!(lame.log_diag < 0.0, "{lame:?}");
        assert!(vol.log_diag > 0.0, "{vol:?}");
    }

    #[test]
    fn cutoff_agrees_with_double_engine_when_both_apply() {
        // alpha = 3, n = 40: epsilon ~ 1.6e-3, well inside double precision.
        let d = maj3_cutoff_diagnostic(3.0, 40, 40).unwrap();
        let eps = 40f64.powf(3.0) * (2.0f64 / 3.0).powi(40);
        let a = maj3_a_seq(0.5 - eps, 40).unwrap();
        assert!((d.log_a_n - a.last_log()).abs() < 1e-6 * d.log_a_n.abs().max(1.0));
    }

    #[test]
    fn precision_exhaustion_is_reported() {
        assert!(matches!(
            maj3_cutoff_diagnostic(12.0, 300, 30),
            Err(Error::PrecisionExhausted { digits: 30, .. })
        ));
        assert!(maj3_cutoff_diagnostic(12.0, 300, 100).is_ok());
    }

    #[test]
    fn volatility_ratio_limits() {
        let p0 = Maj3Params::from_epsilon(12, 0.01, Horizon::Fixed(0.0)).unwrap();
        let r0 = maj3_volatility_ratio(&p0, 40).unwrap();
        let a_n = r0.log_a_n.exp();
        assert!((r0.rho - (1.0 / a_n - 1.0)).abs() < 1e-9 * r0.rho.abs());
        let pinf = Maj3Params::from_epsilon(12, 0.01, Horizon::Infinite).unwrap();
        assert_eq!(maj3_volatility_ratio(&pinf, 40).unwrap().rho, 0.0);
    }

    #[test]
    fn volatility_ratio_matches_double_recursion() {
        let params = Maj3Params::from_epsilon(12, 0.02, Horizon::Fixed(0.3)).unwrap();
        let hp = maj3_volatility_ratio(&params, 40).unwrap();
        let a = maj3_a_seq(params.p, 12).unwrap();
        let b = maj3_b_seq(&params).unwrap();
        let rho = b.last() / a.last().powi(2) - 1.0;
        assert!((hp.rho - rho).abs() < 1e-8 * rho.abs().max(1.0), "{} vs {rho}", hp.rho);
    }
}
