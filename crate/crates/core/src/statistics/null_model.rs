use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, GofError, Result};
use crate::special::{chisq_cdf, normal_cdf, normal_quantile_as241, std_normal_quantile};

/// A continuous, strictly increasing null CDF `F₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NullModel {
    Uniform01,
    Normal { mu: f64, sigma: f64 },
    Exponential { rate: f64 },
    ChiSquare { nu: f64 },
    /// Piecewise-linear CDF through user-supplied `(t, F(t))` knots.
    Table { knots: Vec<(f64, f64)> },
}

impl NullModel {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("normal", format!("need finite mu and sigma > 0, got ({mu}, {sigma})")));
        }
        Ok(Self::Normal { mu, sigma })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(invalid("exponential", format!("rate {rate} must be positive")));
        }
        Ok(Self::Exponential { rate })
    }

    pub fn chi_square(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(invalid("chisq", format!("degrees of freedom {nu} must be positive")));
        }
        Ok(Self::ChiSquare { nu })
    }

    /// Knots must have strictly increasing `t` and `F`, starting at `F = 0`
    /// and ending at `F = 1`.
    pub fn table(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(invalid("table", "need at least two knots"));
        }
        if knots.iter().any(|(t, f)| !t.is_finite() || !f.is_finite()) {
            return Err(invalid("table", "knots must be finite"));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0 || w[1].1 <= w[0].1) {
            return Err(invalid("table", "knots must be strictly increasing in t and F"));
        }
        if knots[0].1 != 0.0 || knots[knots.len() - 1].1 != 1.0 {
            return Err(invalid("table", "CDF must run from 0 to 1"));
        }
        Ok(Self::Table { knots })
    }

    /// `F₀(t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            Self::Uniform01 => t.clamp(0.0, 1.0),
            Self::Normal { mu, sigma } => normal_cdf((t - mu) / sigma),
            Self::Exponential { rate } => {
                if t <= 0.0 {
                    0.0
                } else {
                    -(-rate * t).exp_m1()
                }
            }
            Self::ChiSquare { nu } => chisq_cdf(t, *nu),
            Self::Table { knots } => {
                let (first, last) = (knots[0], knots[knots.len() - 1]);
                if t <= first.0 {
                    return 0.0;
                }
                if t >= last.0 {
                    return 1.0;
                }
                let k = knots.partition_point(|&(x, _)| x <= t);
                let (t0, f0) = knots[k - 1];
                let (t1, f1) = knots[k];
                f0 + (f1 - f0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// `F₀⁻¹(p)` for `0 < p < 1`, used to draw samples from the model.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid("p", format!("{p} is not in (0, 1)")));
        }
        Ok(match self {
            Self::Uniform01 => p,
            Self::Normal { mu, sigma } => mu + sigma * std_normal_quantile(p)?,
            Self::Exponential { rate } => -(-p).ln_1p() / rate,
            Self::ChiSquare { nu } => invert_monotone(|x| chisq_cdf(x, *nu), p, 0.0, nu + 10.0 * nu.sqrt() + 10.0),
            Self::Table { knots } => {
                let k = knots.partition_point(|&(_, f)| f <= p);
                let (t0, f0) = knots[k - 1];
                let (t1, f1) = knots[k];
                t0 + (t1 - t0) * (p - f0) / (f1 - f0)
            }
        })
    }

    /// Fast sampling path for normal models (no Newton polish).
    pub(crate) fn quantile_fast(&self, p: f64) -> Result<f64> {
        match self {
            Self::Normal { mu, sigma } => Ok(mu + sigma * normal_quantile_as241(p)),
            _ => self.quantile(p),
        }
    }
}

fn invert_monotone(f: impl Fn(f64) -> f64, p: f64, mut lo: f64, mut hi: f64) -> f64 {
    while f(hi) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl fmt::Display for NullModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform01 => f.write_str("uniform"),
            Self::Normal { mu, sigma } => write!(f, "normal:{mu},{sigma}"),
            Self::Exponential { rate } => write!(f, "exponential:{rate}"),
            Self::ChiSquare { nu } => write!(f, "chisq:{nu}"),
            Self::Table { knots } => write!(f, "table({} knots)", knots.len()),
        }
    }
}

impl FromStr for NullModel {
    type Err = GofError;

    /// Parses `uniform`, `normal`, `normal:MU,SIGMA`, `exponential[:RATE]`
    /// or `chisq:NU`. Table models are built from knots, not strings.
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (s.trim(), None),
        };
        let nums = |a: Option<&str>| -> Result<Vec<f64>> {
            a.map_or(Ok(vec![]), |a| {
                a.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|_| invalid("null", format!("bad number `{x}`")))
                    })
                    .collect()
            })
        };
        let v = nums(args)?;
        match (name, v.as_slice()) {
            ("uniform", []) => Ok(Self::Uniform01),
            ("normal", []) => Self::normal(0.0, 1.0),
            ("normal", [mu, sigma]) => Self::normal(*mu, *sigma),
            ("exponential", []) => Self::exponential(1.0),
            ("exponential", [rate]) => Self::exponential(*rate),
            ("chisq", [nu]) => Self::chi_square(*nu),
            _ => Err(invalid("null", format!("unrecognized null model `{s}`"))),
        }
    }
}
