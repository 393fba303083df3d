//! Weighted sup-norm goodness-of-fit statistics on finite samples.
//!
//! Everything is evaluated in uniform scale: the sample is first mapped
//! through the null CDF, after which the statistic only depends on the
//! uniform order statistics. See [`sup`] for the exact supremum engine.

mod null_model;
mod sup;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, GofError, Result};
use crate::weights::WeightFunction;

pub use null_model::NullModel;
pub(crate) use sup::{weighted_sup, Denominator};

/// A nonempty sample of finite reals, kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    /// Validates and sorts.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(GofError::EmptySample);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GofError::NonFinite { index });
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    /// Wraps values that the caller guarantees to be sorted and finite.
    pub fn from_sorted(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(GofError::EmptySample);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GofError::NonFinite { index });
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("sample", "values are not sorted"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always `false`; samples are nonempty by construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// An open interval `(a, b)` of the unit interval, `0 ≤ a < b ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub const UNIT: Interval = Interval { a: 0.0, b: 1.0 };

    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&a) || !(b > a && b <= 1.0) {
            return Err(invalid("interval", format!("need 0 <= a < b <= 1, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.a <= other.a && other.b <= self.b
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

impl FromStr for Interval {
    type Err = GofError;

    /// Parses `a,b`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| invalid("interval", format!("expected `a,b`, got `{s}`")))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| invalid("interval", format!("bad number `{x}`")))
        };
        Interval::new(parse(a)?, parse(b)?)
    }
}

/// Whether the statistic uses `𝔾ₙ − u` or `|𝔾ₙ − u|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sided {
    One,
    Two,
}

impl fmt::Display for Sided {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sided::One => "one",
            Sided::Two => "two",
        })
    }
}

impl FromStr for Sided {
    type Err = GofError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" => Ok(Sided::One),
            "two" => Ok(Sided::Two),
            _ => Err(invalid("sided", format!("expected `one` or `two`, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticFamily {
    CscshmTwoSided,
    CscshmOneSided,
    CscshmHatTwoSided,
    CscshmHatOneSided,
    Hc,
    HcPlus,
    HcStar,
    KsTwoSided,
}

impl StatisticFamily {
    pub const ALL: [StatisticFamily; 8] = [
        Self::CscshmTwoSided,
        Self::CscshmOneSided,
        Self::CscshmHatTwoSided,
        Self::CscshmHatOneSided,
        Self::Hc,
        Self::HcPlus,
        Self::HcStar,
        Self::KsTwoSided,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::CscshmTwoSided => "cscshm_two_sided",
            Self::CscshmOneSided => "cscshm_one_sided",
            Self::CscshmHatTwoSided => "cscshm_hat_two_sided",
            Self::CscshmHatOneSided => "cscshm_hat_one_sided",
            Self::Hc => "hc",
            Self::HcPlus => "hc_plus",
            Self::HcStar => "hc_star",
            Self::KsTwoSided => "ks_two_sided",
        }
    }

    pub fn is_hc(self) -> bool {
        matches!(self, Self::Hc | Self::HcPlus | Self::HcStar)
    }

    pub fn sided(self) -> Sided {
        match self {
            Self::CscshmTwoSided | Self::CscshmHatTwoSided | Self::KsTwoSided => Sided::Two,
            _ => Sided::One,
        }
    }
}

impl fmt::Display for StatisticFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatisticFamily {
    type Err = GofError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| invalid("family", format!("unknown statistic family `{s}`")))
    }
}

/// What to compute: a family, its weight, the interval and (for higher
/// criticism) `α₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticDescriptor {
    pub family: StatisticFamily,
    pub weight: Option<WeightFunction>,
    pub interval: Interval,
    pub alpha0: Option<f64>,
}

impl StatisticDescriptor {
    /// A CsCsHM-type statistic (plain or hat, one- or two-sided).
    pub fn cscshm(family: StatisticFamily, weight: WeightFunction, interval: Interval) -> Result<Self> {
        let d = Self {
            family,
            weight: Some(weight),
            interval,
            alpha0: None,
        };
        d.validate()?;
        Ok(d)
    }

    /// `HC`, `HC⁺` or `HC*` with parameter `α₀`.
    pub fn higher_criticism(family: StatisticFamily, alpha0: f64) -> Result<Self> {
        let d = Self {
            family,
            weight: Some(WeightFunction::Sdp),
            interval: Interval::new(0.0, alpha0).unwrap_or(Interval::UNIT),
            alpha0: Some(alpha0),
        };
        d.validate()?;
        Ok(d)
    }

    /// Two-sided Kolmogorov–Smirnov over (0, 1).
    pub fn ks() -> Self {
        Self {
            family: StatisticFamily::KsTwoSided,
            weight: None,
            interval: Interval::UNIT,
            alpha0: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        Interval::new(self.interval.a, self.interval.b)?;
        match self.family {
            StatisticFamily::KsTwoSided => {
                if self.weight.is_some() {
                    return Err(invalid("weight", "the Kolmogorov-Smirnov statistic takes no weight"));
                }
            }
            f if f.is_hc() => {
                match self.alpha0 {
                    Some(a) if a > 0.0 && a < 1.0 => {}
                    other => return Err(invalid("alpha0", format!("need 0 < alpha0 < 1, got {other:?}"))),
                }
                if !matches!(self.weight, None | Some(WeightFunction::Sdp)) {
                    return Err(invalid("weight", "higher criticism uses the standard-deviation weight"));
                }
            }
            _ => {
                if self.weight.is_none() {
                    return Err(invalid("weight", format!("{} needs a weight function", self.family)));
                }
                if self.alpha0.is_some() {
                    return Err(invalid("alpha0", "alpha0 applies to higher criticism only"));
                }
            }
        }
        Ok(())
    }
}

/// A computed statistic with its maximizing location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticResult {
    pub value: f64,
    /// Location of the supremum on the uniform scale.
    pub argmax_u: f64,
    pub descriptor: StatisticDescriptor,
    /// The interval the supremum was taken over after resolving
    /// sample-dependent bounds (`HC⁺`, `HC*`).
    pub interval: Interval,
}

/// `uᵢ = F₀(xᵢ)`, sorted. Points where `F₀` is 0 or 1 lie outside the
/// support of the null and are rejected.
pub fn transform_to_uniform(sample: &Sample, null: &NullModel) -> Result<Sample> {
    let mut u = Vec::with_capacity(sample.len());
    for &x in sample.values() {
        let v = null.cdf(x);
        if !(v > 0.0 && v < 1.0) {
            return Err(GofError::OutsideSupport { value: x });
        }
        u.push(v);
    }
    // F₀ is nondecreasing, so order is preserved; sort anyway to absorb
    // user tables with flat stretches.
    u.sort_by(f64::total_cmp);
    Ok(Sample { values: u })
}

fn check_uniform(u: &Sample) -> Result<()> {
    match u.values().iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
        Some(&value) => Err(GofError::OutsideSupport { value }),
        None => Ok(()),
    }
}

/// `sup_{a<u<b} √n(𝔾ₙ(u) − u)/q(u)` for a sample already on the uniform scale.
pub fn sup_weighted_positive(u: &Sample, q: &WeightFunction, interval: Interval) -> Result<StatisticResult> {
    let d = StatisticDescriptor::cscshm(StatisticFamily::CscshmOneSided, q.clone(), interval)?;
    evaluate_uniform(u, &d)
}

/// `sup_{a<u<b} √n|𝔾ₙ(u) − u|/q(u)` for a sample already on the uniform scale.
pub fn sup_weighted_absolute(u: &Sample, q: &WeightFunction, interval: Interval) -> Result<StatisticResult> {
    let d = StatisticDescriptor::cscshm(StatisticFamily::CscshmTwoSided, q.clone(), interval)?;
    evaluate_uniform(u, &d)
}

/// Evaluates `d` on the sample after the probability integral transform.
pub fn statistic(sample: &Sample, null: &NullModel, d: &StatisticDescriptor) -> Result<StatisticResult> {
    d.validate()?;
    let u = transform_to_uniform(sample, null)?;
    evaluate_uniform(&u, d)
}

/// Evaluates `d` on a sample whose values already lie in (0, 1).
pub fn evaluate_uniform(u: &Sample, d: &StatisticDescriptor) -> Result<StatisticResult> {
    d.validate()?;
    check_uniform(u)?;
    let values = u.values();
    let n = values.len();
    let sdp = WeightFunction::Sdp;

    let (denom, interval) = match d.family {
        StatisticFamily::CscshmOneSided | StatisticFamily::CscshmTwoSided => {
            (Denominator::Weight(d.weight.as_ref().expect("validated")), d.interval)
        }
        StatisticFamily::CscshmHatOneSided | StatisticFamily::CscshmHatTwoSided => {
            (Denominator::Hat(d.weight.as_ref().expect("validated")), d.interval)
        }
        StatisticFamily::KsTwoSided => (Denominator::Unit, d.interval),
        StatisticFamily::Hc => (Denominator::Weight(&sdp), Interval { a: 0.0, b: alpha0(d) }),
        StatisticFamily::HcPlus => {
            let a = 1.0 / n as f64;
            let b = alpha0(d);
            if a >= b {
                return Err(GofError::EmptyInterval(format!("(1/n, alpha0) = ({a}, {b})")));
            }
            (Denominator::Weight(&sdp), Interval { a, b })
        }
        StatisticFamily::HcStar => {
            let k = hc_star_index(alpha0(d), n);
            if k < 2 {
                return Err(GofError::EmptyInterval(format!(
                    "order-statistic index floor(alpha0*n) = {} leaves no room above U(1)",
                    (alpha0(d) * n as f64).floor()
                )));
            }
            let (a, b) = (values[0], values[k - 1]);
            if a >= b {
                return Err(GofError::EmptyInterval(format!("(U(1), U({k})) = ({a}, {b})")));
            }
            (Denominator::Weight(&sdp), Interval { a, b })
        }
    };

    let out = weighted_sup(values, denom, d.family.sided(), interval.a, interval.b);
    let value = (n as f64).sqrt() * out.value;
    if !value.is_finite() {
        return Err(GofError::Numeric(format!("{} evaluated to {value}", d.family)));
    }
    Ok(StatisticResult {
        value,
        argmax_u: out.argmax,
        descriptor: d.clone(),
        interval,
    })
}

fn alpha0(d: &StatisticDescriptor) -> f64 {
    d.alpha0.expect("validated")
}

/// Index `k = max(1, ⌊α₀n⌋)` of the upper order statistic bounding `HC*`.
pub fn hc_star_index(alpha0: f64, n: usize) -> usize {
    ((alpha0 * n as f64).floor() as usize).max(1)
}

/// Normalizing constants `(aₙ, bₙ)` for the extreme-value limit of higher
/// criticism: `aₙ = √(2 log log n)`,
/// `bₙ = 2 log log n + ½ log log log n − ½ log 4π`.
pub fn ej_constants(n: u64) -> Result<(f64, f64)> {
    if n < 16 {
        return Err(invalid("n", format!("need n >= 16, got {n}")));
    }
    let ll = (n as f64).ln().ln();
    let a = (2.0 * ll).sqrt();
    let b = 2.0 * ll + 0.5 * ll.ln() - 0.5 * (4.0 * std::f64::consts::PI).ln();
    Ok((a, b))
}

/// `aₙ·value − bₙ`.
pub fn ej_normalize(value: f64, n: u64) -> Result<f64> {
    let (a, b) = ej_constants(n)?;
    Ok(a * value - b)
}
