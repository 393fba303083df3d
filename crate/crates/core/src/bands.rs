//! Simultaneous confidence bands for a continuous CDF on `[X₍₁₎, X₍ₙ₎)`.
//!
//! All three bands are `𝔽ₙ(t) ± h(𝔽ₙ(t))` clipped to [0, 1], so they are
//! step functions that change only at sample points:
//!
//! - CsCsHM: `h(F) = (c_α/√n) q(F)` with the log-log weight and the two-sided
//!   critical value `c_α` of `sup |B(u)|/q(u)`,
//! - Kolmogorov–Smirnov: `h(F) = k_α/√n`,
//! - Eicker–Jaeschke: `h(F) = ((bₙ + x_α)/aₙ) √(F(1 − F)/n)` with
//!   `x_α = −log(−log(1 − α)/4)`.
//!
//! Weighted half-widths are 0 where `𝔽ₙ ∈ {0, 1}`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GofError, Result};
use crate::rng::{substream, uniform_open};
use crate::statistics::{ej_constants, NullModel, Sample};
use crate::tabulation::{two_sided_critical_value, QuantileTable};
use crate::weights::WeightFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandMethod {
    Cscshm,
    Ks,
    EickerJaeschke,
}

impl BandMethod {
    pub fn name(self) -> &'static str {
        match self {
            BandMethod::Cscshm => "cscshm",
            BandMethod::Ks => "ks",
            BandMethod::EickerJaeschke => "eicker_jaeschke",
        }
    }
}

impl fmt::Display for BandMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BandMethod {
    type Err = GofError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cscshm" => Ok(BandMethod::Cscshm),
            "ks" => Ok(BandMethod::Ks),
            "eicker_jaeschke" | "ej" => Ok(BandMethod::EickerJaeschke),
            _ => Err(invalid("method", format!("unknown band method `{s}`"))),
        }
    }
}

/// The band on `[t, next sample point)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub t: f64,
    pub edf: f64,
    pub lower: f64,
    pub upper: f64,
    /// Half-width before clipping.
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBand {
    pub method: BandMethod,
    /// Nominal coverage `1 − α`.
    pub level: f64,
    /// The constant `c_α`, `k_α` or `(bₙ + x_α)/aₙ` multiplying the shape.
    pub critical_value: f64,
    pub n: usize,
    /// One point per distinct sample value in `[X₍₁₎, X₍ₙ₎)`.
    pub points: Vec<BandPoint>,
    /// `[X₍₁₎, X₍ₙ₎)`.
    pub domain: (f64, f64),
}

/// `k_α` at α = 0.05.
pub const KS_K_05: f64 = 1.35;

const KOLMOGOROV_TERMS: i32 = 100;

/// Kolmogorov distribution `K(x) = Σ_{|k|≤100} (−1)ᵏ exp(−2k²x²)`. Below
/// x = 0.3, where that sum converges slowly, the equivalent theta-function
/// form `(√(2π)/x) Σ_{k≥1} exp(−(2k−1)²π²/(8x²))` is used.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < 0.3 {
        let c = std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let s: f64 = (1..=KOLMOGOROV_TERMS)
            .map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp())
            .sum();
        return ((2.0 * std::f64::consts::PI).sqrt() / x * s).min(1.0);
    }
    let s: f64 = (1..=KOLMOGOROV_TERMS)
        .map(|k| {
            let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
            sign * (-2.0 * (k as f64).powi(2) * x * x).exp()
        })
        .sum();
    (1.0 + 2.0 * s).clamp(0.0, 1.0)
}

/// Inverse of [`kolmogorov_cdf`] by bisection.
pub fn kolmogorov_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid("p", format!("{p} is not in (0, 1)")));
    }
    let (mut lo, mut hi) = (0.0f64, 10.0f64);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `k_α`: the embedded 1.35 at α = 0.05, otherwise the `(1 − α)` quantile of
/// the Kolmogorov distribution.
pub fn ks_critical_value(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if (alpha - 0.05).abs() < 1e-12 {
        Ok(KS_K_05)
    } else {
        kolmogorov_quantile(1.0 - alpha)
    }
}

/// `x_α = −log(−log(1 − α)/4)`, the `(1 − α)` quantile of `exp(−4e^{−x})`.
pub fn ej_x_alpha(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(-(-(-alpha).ln_1p() / 4.0).ln())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid("alpha", format!("{alpha} is not in (0, 1)")))
    }
}

/// Builds `𝔽ₙ ± h(𝔽ₙ)` over the distinct sample values in `[X₍₁₎, X₍ₙ₎)`.
fn build(
    sample: &Sample,
    method: BandMethod,
    alpha: f64,
    critical_value: f64,
    half_width: impl Fn(f64) -> f64,
) -> Result<ConfidenceBand> {
    let x = sample.values();
    let n = x.len();
    if n < 2 {
        return Err(invalid("sample", format!("a band needs at least 2 points, got {n}")));
    }
    let nf = n as f64;
    let mut points = Vec::new();
    let mut i = 0;
    while i < n {
        let t = x[i];
        let mut j = i;
        while j < n && x[j] == t {
            j += 1;
        }
        if j == n {
            break;
        }
        let edf = j as f64 / nf;
        let h = half_width(edf);
        points.push(BandPoint {
            t,
            edf,
            lower: (edf - h).max(0.0),
            upper: (edf + h).min(1.0),
            half_width: h,
        });
        i = j;
    }
    Ok(ConfidenceBand {
        method,
        level: 1.0 - alpha,
        critical_value,
        n,
        points,
        domain: (x[0], x[n - 1]),
    })
}

/// CsCsHM band with the log-log weight. `c_α` is 4.57 at α = 0.05; other
/// levels need a two-sided table for the log-log weight over (0, 1).
pub fn band_cscshm(sample: &Sample, alpha: f64, table: Option<&QuantileTable>) -> Result<ConfidenceBand> {
    check_alpha(alpha)?;
    let c = two_sided_critical_value(alpha, table)?;
    band_cscshm_with_weight(sample, alpha, &WeightFunction::EfkpLogLog, c)
}

/// Experimental: a CsCsHM-shaped band for any weight with a caller-supplied
/// critical value. No coverage guarantee is implied.
pub fn band_cscshm_with_weight(
    sample: &Sample,
    alpha: f64,
    weight: &WeightFunction,
    critical_value: f64,
) -> Result<ConfidenceBand> {
    check_alpha(alpha)?;
    if !(critical_value > 0.0 && critical_value.is_finite()) {
        return Err(invalid("critical_value", format!("{critical_value} must be positive")));
    }
    let scale = critical_value / (sample.len() as f64).sqrt();
    build(sample, BandMethod::Cscshm, alpha, critical_value, |f| {
        if f > 0.0 && f < 1.0 {
            scale * weight.value(f)
        } else {
            0.0
        }
    })
}

/// Kolmogorov–Smirnov band `𝔽ₙ ± k_α/√n`.
pub fn band_ks(sample: &Sample, alpha: f64) -> Result<ConfidenceBand> {
    let k = ks_critical_value(alpha)?;
    let h = k / (sample.len() as f64).sqrt();
    build(sample, BandMethod::Ks, alpha, k, |_| h)
}

/// Eicker–Jaeschke band; needs `n ≥ 16`.
pub fn band_eicker_jaeschke(sample: &Sample, alpha: f64) -> Result<ConfidenceBand> {
    let x_alpha = ej_x_alpha(alpha)?;
    let n = sample.len();
    let (a, b) = ej_constants(n as u64)?;
    let c = (b + x_alpha) / a;
    let nf = n as f64;
    build(sample, BandMethod::EickerJaeschke, alpha, c, |f| {
        if f > 0.0 && f < 1.0 {
            c * (f * (1.0 - f) / nf).sqrt()
        } else {
            0.0
        }
    })
}

/// Builds the band of the given method; CsCsHM uses the embedded or
/// supplied two-sided critical value.
pub fn band(sample: &Sample, method: BandMethod, alpha: f64, table: Option<&QuantileTable>) -> Result<ConfidenceBand> {
    match method {
        BandMethod::Cscshm => band_cscshm(sample, alpha, table),
        BandMethod::Ks => band_ks(sample, alpha),
        BandMethod::EickerJaeschke => band_eicker_jaeschke(sample, alpha),
    }
}

impl ConfidenceBand {
    /// Whether the continuous CDF `f` stays inside the band on the whole of
    /// `[X₍₁₎, X₍ₙ₎)`. On `[tᵢ, tᵢ₊₁)` the band is constant and `f` is
    /// nondecreasing, so it suffices that `lowerᵢ ≤ f(tᵢ)` and
    /// `f(tᵢ₊₁) ≤ upperᵢ`.
    pub fn covers(&self, f: impl Fn(f64) -> f64) -> bool {
        let mut at = f(self.points.first().map_or(self.domain.0, |p| p.t));
        for (i, p) in self.points.iter().enumerate() {
            let next_t = self.points.get(i + 1).map_or(self.domain.1, |q| q.t);
            let next = f(next_t);
            if at < p.lower || next > p.upper {
                return false;
            }
            at = next;
        }
        true
    }

    /// Whether `lower ≤ f(t) ≤ upper` at every band point.
    pub fn covers_at_points(&self, f: impl Fn(f64) -> f64) -> bool {
        self.points.iter().all(|p| {
            let v = f(p.t);
            p.lower <= v && v <= p.upper
        })
    }

    /// Writes `t,edf,lower,upper` rows in shortest round-trip precision.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,edf,lower,upper")?;
        for p in &self.points {
            writeln!(w, "{},{},{},{}", p.t, p.edf, p.lower, p.upper)?;
        }
        Ok(())
    }
}

/// `(edf, 2·half_width)` per band point, before clipping.
pub fn band_width_profile(band: &ConfidenceBand) -> Vec<(f64, f64)> {
    band.points.iter().map(|p| (p.edf, 2.0 * p.half_width)).collect()
}

/// How coverage is judged in [`coverage_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageCheck {
    /// The true CDF must stay inside the band on all of `[X₍₁₎, X₍ₙ₎)`.
    #[default]
    Continuous,
    /// Only the band points themselves are checked.
    SamplePoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub method: BandMethod,
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    pub check: CoverageCheck,
    pub coverage: f64,
    pub stderr: f64,
}

/// Fraction of `reps` samples of size `n` from `truth` whose band contains
/// the true CDF, with its binomial standard error. Replicate `r` uses
/// substream `r` of `seed`.
pub fn coverage_experiment(
    n: usize,
    reps: usize,
    truth: &NullModel,
    method: BandMethod,
    alpha: f64,
    seed: u64,
    check: CoverageCheck,
) -> Result<CoverageResult> {
    if reps < 1 {
        return Err(invalid("reps", "need at least one replicate"));
    }
    check_alpha(alpha)?;
    let covered: Vec<bool> = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<bool> {
            let mut rng = substream(seed, r as u64);
            let draws = (0..n)
                .map(|_| truth.quantile_fast(uniform_open(&mut rng)))
                .collect::<Result<Vec<f64>>>()?;
            let sample = Sample::new(draws)?;
            let b = band(&sample, method, alpha, None)?;
            let cdf = |t: f64| truth.cdf(t);
            Ok(match check {
                CoverageCheck::Continuous => b.covers(cdf),
                CoverageCheck::SamplePoints => b.covers_at_points(cdf),
            })
        })
        .collect::<Result<_>>()?;
    let hits = covered.iter().filter(|&&c| c).count();
    let p = hits as f64 / reps as f64;
    Ok(CoverageResult {
        method,
        n,
        reps,
        alpha,
        check,
        coverage: p,
        stderr: (p * (1.0 - p) / reps as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 100 points with 𝔽ₙ = i/100 at the i-th point.
    fn grid_sample() -> Sample {
        Sample::new((1..=100).map(|i| i as f64 / 101.0).collect()).unwrap()
    }

    fn at_edf(b: &ConfidenceBand, edf: f64) -> BandPoint {
        *b.points.iter().find(|p| (p.edf - edf).abs() < 1e-12).unwrap()
    }

    #[test]
    fn cscshm_upper_at_half() {
        let b = band_cscshm(&grid_sample(), 0.05, None).unwrap();
        let p = at_edf(&b, 0.5);
        assert!((p.upper - (0.5 + 0.457 * 0.285_759_627_999_775_8)).abs() < 1e-12);
        assert_eq!(b.critical_value, 4.57);
    }

    #[test]
    fn ks_upper_at_half() {
        let b = band_ks(&grid_sample(), 0.05).unwrap();
        assert!((at_edf(&b, 0.5).upper - 0.635).abs() < 1e-12);
        let widths = band_width_profile(&b);
        assert!(widths.iter().all(|&(_, w)| (w - 0.27).abs() < 1e-12));
    }

    #[test]
    fn ej_upper_at_half() {
        assert!((ej_x_alpha(0.05).unwrap() - 4.356_489_610_162_06).abs() < 1e-12);
        let b = band_eicker_jaeschke(&grid_sample(), 0.05).unwrap();
        let expected = 0.5 + (2.000_558_454_361_31 + 4.356_489_610_162_06) / 1.747_672_524_134_83 * 0.05;
        assert!((at_edf(&b, 0.5).upper - expected).abs() < 1e-12);
    }

    #[test]
    fn width_comparisons() {
        let s = grid_sample();
        let cs = band_width_profile(&band_cscshm(&s, 0.05, None).unwrap());
        let ks = band_width_profile(&band_ks(&s, 0.05).unwrap());
        let ej = band_width_profile(&band_eicker_jaeschke(&s, 0.05).unwrap());
        let w = |prof: &[(f64, f64)], e: f64| prof.iter().find(|p| (p.0 - e).abs() < 1e-12).unwrap().1;
        assert!((w(&cs, 0.5) - 0.261_184_299_991_794).abs() < 1e-12);
        assert!((w(&ej, 0.5) - 0.363_743_663_457_224).abs() < 1e-12);
        assert!(w(&cs, 0.5) < w(&ej, 0.5));
        assert!((w(&cs, 0.01) - 2.0 * 0.457 * 0.123_047_391_440_138).abs() < 1e-12);
        for e in [0.01, 0.99] {
            assert!(w(&cs, e) < w(&ks, e));
        }
    }

    #[test]
    fn band_shape_and_clipping() {
        let s = Sample::new(vec![0.3, 0.1, 0.1, 0.7, 0.9]).unwrap();
        for m in [BandMethod::Cscshm, BandMethod::Ks] {
            let b = band(&s, m, 0.05, None).unwrap();
            let ts: Vec<f64> = b.points.iter().map(|p| p.t).collect();
            assert_eq!(ts, vec![0.1, 0.3, 0.7]);
            assert_eq!(b.points[0].edf, 0.4);
            assert_eq!(b.domain, (0.1, 0.9));
            for p in &b.points {
                assert!(0.0 <= p.lower && p.lower <= p.edf && p.edf <= p.upper && p.upper <= 1.0);
            }
        }
        assert!(band_eicker_jaeschke(&s, 0.05).is_err());
        assert!(band_ks(&Sample::new(vec![1.0]).unwrap(), 0.05).is_err());
    }

    #[test]
    fn cscshm_needs_table_off_grid() {
        assert!(matches!(
            band_cscshm(&grid_sample(), 0.1, None),
            Err(GofError::MissingCriticalValue(_))
        ));
    }

    #[test]
    fn kolmogorov_values() {
        assert!((kolmogorov_quantile(0.95).unwrap() - 1.358_098_639_322_55).abs() < 1e-10);
        assert!((kolmogorov_cdf(1.0) - 0.730_000_328_322_645_2).abs() < 1e-12);
        // The two series agree where both converge.
        let x: f64 = 0.3;
        let theta = {
            let c = std::f64::consts::PI.powi(2) / (8.0 * x * x);
            (2.0 * std::f64::consts::PI).sqrt() / x
                * (1..=100).map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp()).sum::<f64>()
        };
        assert!((kolmogorov_cdf(x) - theta).abs() < 1e-14);
        assert_eq!(ks_critical_value(0.05).unwrap(), 1.35);
        assert!(ks_critical_value(0.01).unwrap() > ks_critical_value(0.1).unwrap());
    }

    #[test]
    fn coverage_check_sees_between_points() {
        let b = band_ks(&grid_sample(), 0.05).unwrap();
        // Matches the EDF at the first 50 points, then shifts up by 0.134
        // over [t₅₀, t₅₁]: inside the band at every band point, but above
        // upper₅₀ = 0.635 at the left limit of t₅₁.
        let (t50, t51) = (50.0 / 101.0, 51.0 / 101.0);
        let f = |t: f64| {
            let bump = 0.134 * ((t - t50) / (t51 - t50)).clamp(0.0, 1.0);
            (t * 101.0 / 100.0 + bump).min(1.0)
        };
        assert!(b.covers_at_points(f));
        assert!(!b.covers(f));
        assert!(b.covers(|t| t * 101.0 / 100.0));
    }

    #[test]
    fn csv_layout() {
        let b = band_ks(&Sample::new(vec![0.2, 0.4, 0.6]).unwrap(), 0.05).unwrap();
        let mut out = Vec::new();
        b.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,edf,lower,upper");
        assert_eq!(lines.len(), 3);
        let fields: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(fields, vec![0.2, 1.0 / 3.0, b.points[0].lower, b.points[0].upper]);
    }

    #[test]
    fn coverage_is_deterministic() {
        let run = || {
            coverage_experiment(50, 200, &NullModel::Uniform01, BandMethod::Ks, 0.05, 5, CoverageCheck::Continuous)
                .unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        assert!(a.coverage > 0.85);
        assert!((a.stderr - (a.coverage * (1.0 - a.coverage) / 200.0).sqrt()).abs() < 1e-15);
    }
}
