//! Extreme-value behaviour of normalized higher criticism.
//!
//! With `aₙ, bₙ` from [`ej_constants`], `aₙ · sup_{0<u<α₀} √n(𝕌ₙ(u) − u)/√(u(1−u)) − bₙ`
//! converges to `exp(−½e^{−x})` for every `α₀ < 1`, and to `exp(−e^{−x})`
//! with `|𝕌ₙ(u) − u|`. Over the whole of (0, 1) the limits are
//! `exp(−2e^{−x})` (one-sided) and `exp(−4e^{−x})` (two-sided). Convergence
//! is slow, so the checks here compare empirical laws rather than assert
//! tight agreement with the limits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{invalid, GofError, Result};
use crate::rng::{sorted_uniforms, substream};
use crate::statistics::{
    ej_constants, evaluate_uniform, Interval, Sample, Sided, StatisticDescriptor, StatisticFamily,
};
use crate::tabulation::empirical_quantile;
use crate::weights::WeightFunction;

/// Limit law of the normalized statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvTarget {
    /// `exp(−½e^{−x})`: one-sided, over (0, α₀) with α₀ < 1.
    TailOneSided,
    /// `exp(−e^{−x})`: two-sided, over (0, α₀) with α₀ < 1.
    TailTwoSided,
    /// `exp(−2e^{−x})`: one-sided over (0, 1).
    FullOneSided,
    /// `exp(−4e^{−x})`: two-sided over (0, 1).
    FullTwoSided,
}

impl EvTarget {
    pub fn for_run(alpha0: f64, sided: Sided) -> Self {
        match (alpha0 < 1.0, sided) {
            (true, Sided::One) => Self::TailOneSided,
            (true, Sided::Two) => Self::TailTwoSided,
            (false, Sided::One) => Self::FullOneSided,
            (false, Sided::Two) => Self::FullTwoSided,
        }
    }

    /// The multiplier `λ` in `exp(−λe^{−x})`.
    pub fn lambda(self) -> f64 {
        match self {
            Self::TailOneSided => 0.5,
            Self::TailTwoSided => 1.0,
            Self::FullOneSided => 2.0,
            Self::FullTwoSided => 4.0,
        }
    }

    pub fn cdf(self, x: f64) -> f64 {
        (-self.lambda() * (-x).exp()).exp()
    }

    pub fn quantile(self, p: f64) -> f64 {
        -(-p.ln() / self.lambda()).ln()
    }

    pub fn median(self) -> f64 {
        self.quantile(0.5)
    }
}

/// Empirical law of the normalized statistic against its limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EVComparison {
    pub n: usize,
    pub m: usize,
    pub alpha0: f64,
    pub sided: Sided,
    pub seed: u64,
    pub target: EvTarget,
    /// Sorted `aₙ · sup − bₙ` values.
    pub normalized_values: Vec<f64>,
    /// Kolmogorov distance between the empirical law and the target.
    pub ks_distance: f64,
}

const SUMMARY_LEVELS: [f64; 7] = [0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95];

impl EVComparison {
    pub fn quantile(&self, p: f64) -> f64 {
        empirical_quantile(&self.normalized_values, p)
    }

    /// `{n, M, alpha0, sided, seed, target, ks_distance, quantiles}` with
    /// empirical and limiting quantiles at a fixed set of levels.
    pub fn summary_json(&self) -> serde_json::Value {
        let quantiles: serde_json::Map<String, serde_json::Value> = SUMMARY_LEVELS
            .iter()
            .map(|&p| {
                (
                    p.to_string(),
                    json!({ "empirical": self.quantile(p), "target": self.target.quantile(p) }),
                )
            })
            .collect();
        json!({
            "n": self.n,
            "M": self.m,
            "alpha0": self.alpha0,
            "sided": self.sided,
            "seed": self.seed,
            "target": self.target,
            "target_cdf_at_0": self.target.cdf(0.0),
            "ks_distance": self.ks_distance,
            "quantiles": quantiles,
        })
    }
}

fn check_run(n: usize, m: usize, alpha0: f64) -> Result<()> {
    if n < 16 {
        return Err(invalid("n", format!("need n >= 16, got {n}")));
    }
    if m < 1 {
        return Err(invalid("M", "need at least one replicate"));
    }
    if !(alpha0 > 0.0 && alpha0 <= 1.0) {
        return Err(invalid("alpha0", format!("{alpha0} is not in (0, 1]")));
    }
    Ok(())
}

fn sdp_descriptor(alpha0: f64, sided: Sided) -> Result<StatisticDescriptor> {
    let family = match sided {
        Sided::One => StatisticFamily::CscshmOneSided,
        Sided::Two => StatisticFamily::CscshmTwoSided,
    };
    StatisticDescriptor::cscshm(family, WeightFunction::Sdp, Interval::new(0.0, alpha0)?)
}

/// Replicate `r` of a run: `n` sorted uniforms from substream `r` of `seed`.
fn replicate_sample(n: usize, seed: u64, r: usize) -> Result<Sample> {
    let mut rng = substream(seed, r as u64);
    Sample::from_sorted(sorted_uniforms(&mut rng, n))
}

/// `aₙ · sup_{0<u<α₀} √n(𝕌ₙ(u) − u)/√(u(1−u)) − bₙ` (absolute value when
/// two-sided) for replicates `0..M`, in replicate order. `α₀ = 1` gives the
/// whole interval.
pub fn normalized_hc_values(n: usize, m: usize, alpha0: f64, sided: Sided, seed: u64) -> Result<Vec<f64>> {
    check_run(n, m, alpha0)?;
    let (a, b) = ej_constants(n as u64)?;
    let d = sdp_descriptor(alpha0, sided)?;
    (0..m)
        .into_par_iter()
        .map(|r| {
            let u = replicate_sample(n, seed, r)?;
            let v = a * evaluate_uniform(&u, &d)?.value - b;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(GofError::Numeric(format!("replicate {r} normalized to {v}")))
            }
        })
        .collect()
}

/// Simulates the normalized statistic and compares it with its limit law.
pub fn simulate_normalized_hc(n: usize, m: usize, alpha0: f64, sided: Sided, seed: u64) -> Result<EVComparison> {
    let mut values = normalized_hc_values(n, m, alpha0, sided, seed)?;
    values.sort_by(f64::total_cmp);
    let target = EvTarget::for_run(alpha0, sided);
    let ks_distance = ks_distance_to(&values, |x| target.cdf(x));
    Ok(EVComparison {
        n,
        m,
        alpha0,
        sided,
        seed,
        target,
        normalized_values: values,
        ks_distance,
    })
}

/// `sup_x |F_M(x) − F(x)|` for sorted data.
pub fn ks_distance_to(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64 / m) - f).max(f - i as f64 / m)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov distance between sorted samples.
pub fn ks_distance_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Fraction of replicates whose maximizing location of the one-sided
/// weighted sup over (0, 0.99) lies below `alpha0`.
pub fn argmax_location_study(n: usize, m: usize, alpha0: f64, seed: u64) -> Result<f64> {
    argmax_location_study_with_weight(n, m, alpha0, &WeightFunction::Sdp, seed)
}

/// [`argmax_location_study`] for any weight.
pub fn argmax_location_study_with_weight(
    n: usize,
    m: usize,
    alpha0: f64,
    weight: &WeightFunction,
    seed: u64,
) -> Result<f64> {
    check_run(n, m, alpha0)?;
    let d = StatisticDescriptor::cscshm(StatisticFamily::CscshmOneSided, weight.clone(), Interval::new(0.0, 0.99)?)?;
    let below: Vec<bool> = (0..m)
        .into_par_iter()
        .map(|r| -> Result<bool> {
            let u = replicate_sample(n, seed, r)?;
            Ok(evaluate_uniform(&u, &d)?.argmax_u < alpha0)
        })
        .collect::<Result<_>>()?;
    Ok(below.iter().filter(|&&b| b).count() as f64 / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_values() {
        assert!((EvTarget::TailOneSided.cdf(0.0) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((EvTarget::TailOneSided.cdf(0.0) - 0.606_530_659_712_633_4).abs() < 1e-15);
        assert!((EvTarget::TailTwoSided.cdf(0.0) - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert!((EvTarget::FullOneSided.cdf(0.0) - 0.135_335_283_236_612_7).abs() < 1e-15);
        assert!((EvTarget::TailOneSided.median() + (2.0 * std::f64::consts::LN_2).ln()).abs() < 1e-15);
        for t in [EvTarget::TailOneSided, EvTarget::FullTwoSided] {
            for p in [0.1, 0.5, 0.9] {
                assert!((t.cdf(t.quantile(p)) - p).abs() < 1e-14);
            }
        }
        assert_eq!(EvTarget::for_run(1.0, Sided::Two), EvTarget::FullTwoSided);
    }

    #[test]
    fn ks_distances() {
        assert!((ks_distance_to(&[0.5], |x| x) - 0.5).abs() < 1e-15);
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(ks_distance_two_sample(&a, &a), 0.0);
        assert_eq!(ks_distance_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert_eq!(ks_distance_two_sample(&[1.0, 3.0], &[2.0, 4.0]), 0.5);
    }

    #[test]
    fn values_finite_and_monotone_in_interval() {
        let small = normalized_hc_values(2000, 40, 0.1, Sided::One, 8).unwrap();
        let large = normalized_hc_values(2000, 40, 0.9, Sided::One, 8).unwrap();
        assert!(small.iter().all(|v| v.is_finite()));
        assert!(small.iter().zip(&large).all(|(s, l)| s <= l));
    }

    #[test]
    fn argmax_containment() {
        assert_eq!(argmax_location_study(500, 30, 0.99, 2).unwrap(), 1.0);
    }

    #[test]
    fn comparison_summary() {
        let c = simulate_normalized_hc(1000, 50, 0.5, Sided::Two, 1).unwrap();
        assert_eq!(c.target, EvTarget::TailTwoSided);
        assert!(c.ks_distance >= 0.0 && c.ks_distance <= 1.0);
        let v = c.summary_json();
        assert_eq!(v["M"], 50);
        assert_eq!(v["seed"], 1);
        assert_eq!(v["sided"], "two");
        assert!(v["quantiles"]["0.5"]["empirical"].is_f64());
        assert!(simulate_normalized_hc(15, 5, 0.5, Sided::One, 0).is_err());
    }
}
