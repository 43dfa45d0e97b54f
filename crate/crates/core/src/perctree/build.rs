use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::LevelProfile;
use crate::error::{Error, Result};

/// Growth target for the weight sequence `w_k`.
#[derive(Clone)]
pub enum Target {
    /// `log k`.
    LogN,
    /// `(log k)^(1 + delta)`.
    LogN1pDelta { delta: f64 },
    /// `k (log k)^alpha`.
    NLogNAlpha { alpha: f64 },
    /// `k^alpha`.
    NAlpha { alpha: f64 },
    /// `w_k = 1`.
    Constant,
    Custom(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

impl Target {
    pub fn value(&self, k: usize) -> f64 {
        let x = k as f64;
        match self {
            Target::LogN => x.ln(),
            Target::LogN1pDelta { delta } => x.ln().powf(1.0 + delta),
            Target::NLogNAlpha { alpha } => x * x.ln().powf(*alpha),
            Target::NAlpha { alpha } => x.powf(*alpha),
            Target::Constant => 1.0,
            Target::Custom(f) => f(k),
        }
    }

    /// First level from which the target is positive and the factor-4
    /// guarantee applies.
    pub fn k_min(&self) -> usize {
        match self {
            Target::LogN | Target::LogN1pDelta { .. } | Target::NLogNAlpha { .. } => 2,
            _ => 1,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |name: &str, v: f64| {
            Err(Error::params(format!("{name} = {v} must be positive and finite")))
        };
        match *self {
            Target::LogN1pDelta { delta } if !(delta > 0.0 && delta.is_finite()) => {
                bad("delta", delta)
            }
            Target::NLogNAlpha { alpha } | Target::NAlpha { alpha }
                if !(alpha > 0.0 && alpha.is_finite()) =>
            {
                bad("alpha", alpha)
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::LogN => write!(f, "logn"),
            Target::LogN1pDelta { delta } => write!(f, "logn1p:{delta}"),
            Target::NLogNAlpha { alpha } => write!(f, "nlogn:{alpha}"),
            Target::NAlpha { alpha } => write!(f, "nalpha:{alpha}"),
            Target::Constant => write!(f, "constant"),
            Target::Custom(_) => write!(f, "custom"),
        }
    }
}

impl std::str::FromStr for Target {
    type Err = Error;

    /// `logn`, `logn1p:<delta>`, `nlogn:<alpha>`, `nalpha:<alpha>`, `constant`.
    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let num = || -> Result<f64> {
            arg.ok_or_else(|| Error::Parse(format!("target `{s}` needs a parameter")))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad target parameter in `{s}`")))
        };
        let t = match head {
            "logn" if arg.is_none() => Target::LogN,
            "constant" if arg.is_none() => Target::Constant,
            "logn1p" => Target::LogN1pDelta { delta: num()? },
            "nlogn" => Target::NLogNAlpha { alpha: num()? },
            "nalpha" => Target::NAlpha { alpha: num()? },
            _ => return Err(Error::Parse(format!("unknown target `{s}`"))),
        };
        t.validate()?;
        Ok(t)
    }
}

/// How closely one level of a built profile follows the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelFit {
    pub level: usize,
    pub children: u32,
    pub log_w: f64,
    pub log_target: f64,
    /// `w_k / target(k)`.
    pub ratio: f64,
    /// Whether the factor-4 tolerance is required at this level.
    pub checked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileBuild {
    pub target: String,
    pub k_min: usize,
    pub profile: LevelProfile,
    pub fits: Vec<LevelFit>,
}

const RATIO_TOLERANCE: f64 = 4.0;

/// Greedy integer profile whose weights track `target`.
///
/// At level `k` the child count `c_k >= 1` is the integer minimizing
/// `|log(v_{k-1} c_k) - (k log 2 + log target(k))|`. Levels below
/// `target.k_min()` aim at `target(k_min)`.
pub fn build_profile(target: &Target, n_levels: usize) -> Result<ProfileBuild> {
    if n_levels < 2 {
        return Err(Error::params("at least two levels are required"));
    }
    target.validate()?;
    let k_min = target.k_min();
    let ln2 = std::f64::consts::LN_2;
    let mut log_v = 0.0;
    let mut children = Vec::with_capacity(n_levels);
    let mut fits = Vec::with_capacity(n_levels);
    for k in 1..=n_levels {
        let log_target = target.value(k.max(k_min)).ln();
        if !log_target.is_finite() {
            return Err(Error::UnreachableTarget { level: k });
        }
        let desired = k as f64 * ln2 + log_target;
        let ideal = (desired - log_v).exp();
        let lo = ideal.floor().clamp(1.0, u32::MAX as f64);
        let hi = (lo + 1.0).min(u32::MAX as f64);
        let miss = |c: f64| (log_v + c.ln() - desired).abs();
        let c = if miss(hi) < miss(lo) { hi } else { lo };
        log_v += c.ln();
        let log_w = log_v - k as f64 * ln2;
        let checked = k >= k_min;
        if checked && (log_w - log_target).abs() > RATIO_TOLERANCE.ln() + 1e-12 {
            return Err(Error::UnreachableTarget { level: k });
        }
        children.push(c as u32);
        fits.push(LevelFit {
            level: k,
            children: c as u32,
            log_w,
            log_target,
            ratio: (log_w - log_target).exp(),
            checked,
        });
    }
    Ok(ProfileBuild {
        target: target.to_string(),
        k_min,
        profile: LevelProfile::new(children)?,
        fits,
    })
}

/// `log w_k` for `k = 1..=n`, where `w_k = (vertices at level k) 2^-k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSequence {
    pub log_w: Vec<f64>,
}

impl WeightSequence {
    /// `w_k` for `k >= 1`.
    pub fn w(&self, k: usize) -> f64 {
        self.log_w[k - 1].exp()
    }

    pub fn len(&self) -> usize {
        self.log_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_w.is_empty()
    }
}

pub fn weight_sequence(profile: &LevelProfile) -> WeightSequence {
    let ln2 = std::f64::consts::LN_2;
    let mut acc = 0.0;
    let log_w = profile
        .children()
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            acc += (c as f64).ln();
            acc - (i + 1) as f64 * ln2
        })
        .collect();
    WeightSequence { log_w }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_target_is_binary() {
        for n in [2, 7, 30] {
            let b = build_profile(&Target::Constant, n).unwrap();
            assert!(b.profile.children().iter().all(|&c| c == 2));
            let w = weight_sequence(&b.profile);
            assert!(w.log_w.iter().all(|&l| l.abs() < 1e-12));
        }
    }

    #[test]
    fn doubling_target_gives_four_children() {
        let t = Target::Custom(Arc::new(|k| 2f64.powi(k as i32)));
        let b = build_profile(&t, 12).unwrap();
        assert!(b.profile.children().iter().all(|&c| c == 4));
    }

    #[test]
    fn nalpha_three_within_factor_four() {
        let b = build_profile(&Target::NAlpha { alpha: 3.0 }, 10).unwrap();
        let w = weight_sequence(&b.profile);
        for k in 1..=10 {
            let lw = w.log_w[k - 1];
            assert!((lw - 3.0 * (k as f64).ln()).abs() <= 4f64.ln(), "k={k}");
        }
    }

    #[test]
    fn weights_match_vertex_counts() {
        let p = LevelProfile::new(vec![4, 4, 4]).unwrap();
        let w = weight_sequence(&p);
        for (k, expected) in [(1, 2.0), (2, 4.0), (3, 8.0)] {
            assert!((w.w(k) - expected).abs() < 1e-12);
        }
        let p = LevelProfile::new(vec![3, 1, 5, 2, 7]).unwrap();
        let w = weight_sequence(&p);
        for k in 1..=5 {
            let exact = p.vertices_at(k).unwrap() as f64;
            assert!((w.w(k) * 2f64.powi(k as i32) - exact).abs() < 1e-9 * exact);
        }
    }

    #[test]
    fn other_targets_build() {
        for t in ["logn", "logn1p:0.5", "nlogn:2", "nalpha:1.5"] {
            let target: Target = t.parse().unwrap();
            let b = build_profile(&target, 14).unwrap();
            assert_eq!(b.profile.levels(), 14);
            assert!(b.fits.iter().filter(|f| f.checked).all(|f| f.ratio <= 4.0 && f.ratio >= 0.25));
        }
        assert!("nalpha:-1".parse::<Target>().is_err());
        assert!("weird".parse::<Target>().is_err());
    }

    #[test]
    fn collapsing_target_is_unreachable() {
        let t = Target::Custom(Arc::new(|k| 16f64.powi(-(k as i32))));
        assert!(matches!(build_profile(&t, 4), Err(Error::UnreachableTarget { level: 1 })));
    }
}
