//! Weight functions on (0, 1) and a numerical probe of the upper-class
//! (EFKP) property through the integrals
//!
//! ```text
//! I(q, c) = ∫₀¹ (x(1−x))⁻¹ exp(−c q²(x) / (x(1−x))) dx
//! E(q, c) = ∫₀¹ (x(1−x))^{−3/2} q(x) exp(−c q²(x) / (x(1−x))) dx
//! ```
//!
//! `q` is an upper-class function of the Brownian bridge iff `I(q, c) < ∞` for
//! some `c > 0` (equivalently `E(q, c) < ∞` plus `q(x)/√x → ∞` at both ends).
//! Finiteness of an improper integral can only be evidenced numerically, so
//! every verdict here is "likely".

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, GofError, Result};
use crate::quadrature::integrate_log_scaled;

/// Built-in weight families. All are symmetric about 1/2, increasing near 0
/// and decreasing near 1. The log-log families are not monotone on all of
/// (0, 1/2]: they peak at [`WeightFunction::left_peak`] and dip towards 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum WeightFunction {
    /// `√(u(1−u) log log(1/(u(1−u))))`, upper-class with constant b = √2.
    EfkpLogLog,
    /// Standard-deviation-proportional `√(u(1−u))`; not upper-class.
    Sdp,
    /// `(u(1−u))^{1/2−ν}`, `0 < ν < 1/2`.
    ChibisovOReilly { nu: f64 },
    /// `√(u(1−u)) · (log log(1/(u(1−u))))^{1/2+σ}`, `σ > 0`.
    LogLogPower { sigma: f64 },
}

impl WeightFunction {
    pub fn chibisov_oreilly(nu: f64) -> Result<Self> {
        if nu > 0.0 && nu < 0.5 {
            Ok(Self::ChibisovOReilly { nu })
        } else {
            Err(invalid("nu", format!("{nu} is not in (0, 1/2)")))
        }
    }

    pub fn loglog_power(sigma: f64) -> Result<Self> {
        if sigma > 0.0 && sigma.is_finite() {
            Ok(Self::LogLogPower { sigma })
        } else {
            Err(invalid("sigma", format!("{sigma} must be a finite positive number")))
        }
    }

    /// Rebuilds a weight from its persisted name and parameter list.
    pub fn from_parts(name: &str, params: &[f64]) -> Result<Self> {
        match (name, params) {
            ("efkp-loglog", []) => Ok(Self::EfkpLogLog),
            ("sdp", []) => Ok(Self::Sdp),
            ("chibisov-oreilly", [nu]) => Self::chibisov_oreilly(*nu),
            ("loglog-power", [sigma]) => Self::loglog_power(*sigma),
            _ => Err(invalid(
                "weight",
                format!("unknown weight `{name}` with {} parameter(s)", params.len()),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::EfkpLogLog => "efkp-loglog",
            Self::Sdp => "sdp",
            Self::ChibisovOReilly { .. } => "chibisov-oreilly",
            Self::LogLogPower { .. } => "loglog-power",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            Self::EfkpLogLog | Self::Sdp => vec![],
            Self::ChibisovOReilly { nu } => vec![nu],
            Self::LogLogPower { sigma } => vec![sigma],
        }
    }

    /// Point of symmetry `u*`.
    pub fn split_point(&self) -> f64 {
        0.5
    }

    /// Location of the maximum of `q` on (0, 1/2].
    ///
    /// For `√v · (log log(1/v))^p` with `v = u(1−u)` the derivative in `v`
    /// vanishes where `x log x = 2p` with `x = log(1/v)`; the root exceeds
    /// `log 4` for every `p ≥ 1/2`, so the peak lies strictly inside (0, 1/2).
    pub fn left_peak(&self) -> f64 {
        let power = match *self {
            Self::Sdp | Self::ChibisovOReilly { .. } => return 0.5,
            Self::EfkpLogLog => 0.5,
            Self::LogLogPower { sigma } => 0.5 + sigma,
        };
        let target = 2.0 * power;
        // Newton on x log x = target from the right of the root (convex).
        let mut x = target.max(std::f64::consts::E);
        for _ in 0..50 {
            let step = (x * x.ln() - target) / (x.ln() + 1.0);
            x -= step;
            if step.abs() <= 1e-15 * x {
                break;
            }
        }
        let v = (-x).exp();
        // Smaller root of u(1−u) = v.
        2.0 * v / (1.0 + (1.0 - 4.0 * v).sqrt())
    }

    /// Maximal intervals `(lo, hi, increasing)` on which `q` is monotone,
    /// in ascending order and covering (0, 1).
    pub fn monotone_pieces(&self) -> Vec<(f64, f64, bool)> {
        let p = self.left_peak();
        if p >= 0.5 {
            vec![(0.0, 0.5, true), (0.5, 1.0, false)]
        } else {
            vec![(0.0, p, true), (p, 0.5, false), (0.5, 1.0 - p, true), (1.0 - p, 1.0, false)]
        }
    }

    pub fn symmetric(&self) -> bool {
        true
    }

    /// The almost-sure value of `limsup_{u→0} |B(u)|/q(u)`, when known.
    pub fn efkp_b(&self) -> Option<f64> {
        match self {
            Self::EfkpLogLog => Some(std::f64::consts::SQRT_2),
            Self::Sdp => None,
            Self::ChibisovOReilly { .. } | Self::LogLogPower { .. } => Some(0.0),
        }
    }

    /// Checked evaluation of `q(u)` for `u ∈ (0, 1)`.
    pub fn evaluate(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(invalid("u", format!("{u} is not in (0, 1)")));
        }
        Ok(self.value(u))
    }

    /// Unchecked evaluation; `u` must lie in (0, 1).
    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        let m = if u <= 0.5 { u } else { 1.0 - u };
        let v = m * (1.0 - m);
        match *self {
            Self::EfkpLogLog => (v * loglog_inv(v)).sqrt(),
            Self::Sdp => v.sqrt(),
            Self::ChibisovOReilly { nu } => v.powf(0.5 - nu),
            Self::LogLogPower { sigma } => v.sqrt() * loglog_inv(v).powf(0.5 + sigma),
        }
    }
}

/// `log log (1/v)` for `v = u(1−u) ∈ (0, 1/4]`; the argument `1/v ≥ 4`, so
/// the result is at least `log log 4 > 0`.
#[inline]
fn loglog_inv(v: f64) -> f64 {
    debug_assert!(v > 0.0 && v <= 0.25);
    (-v.ln()).ln()
}

impl fmt::Display for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::ChibisovOReilly { nu } => write!(f, "chibisov-oreilly:{nu}"),
            Self::LogLogPower { sigma } => write!(f, "loglog-power:{sigma}"),
            _ => f.write_str(self.name()),
        }
    }
}

impl FromStr for WeightFunction {
    type Err = GofError;

    /// Parses `efkp-loglog`, `sdp`, `chibisov-oreilly:NU` or `loglog-power:SIGMA`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p.trim())),
            None => (s.trim(), None),
        };
        let params = match param {
            None => vec![],
            Some(p) => vec![p
                .parse::<f64>()
                .map_err(|_| invalid("weight", format!("bad parameter `{p}`")))?],
        };
        Self::from_parts(name, &params)
    }
}

/// `√(u(1−u) log log(1/(u(1−u))))`.
pub fn q_efkp_loglog(u: f64) -> Result<f64> {
    WeightFunction::EfkpLogLog.evaluate(u)
}

/// `√(u(1−u))`.
pub fn q_sdp(u: f64) -> Result<f64> {
    WeightFunction::Sdp.evaluate(u)
}

/// `(u(1−u))^{1/2−ν}`.
pub fn q_chibisov_oreilly(u: f64, nu: f64) -> Result<f64> {
    WeightFunction::chibisov_oreilly(nu)?.evaluate(u)
}

/// `√(u(1−u)) (log log(1/(u(1−u))))^{1/2+σ}`.
pub fn q_loglog_power(u: f64, sigma: f64) -> Result<f64> {
    WeightFunction::loglog_power(sigma)?.evaluate(u)
}

// ---------------------------------------------------------------------------
// Integral probes
// ---------------------------------------------------------------------------

/// Outcome of a numerical finiteness probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeVerdict {
    Converged,
    Diverging,
    Inconclusive,
}

/// Partial integrals over `[ε_k, 1 − ε_k]` along a shrinking schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralProbe {
    pub c: f64,
    pub schedule: Vec<f64>,
    pub partial_values: Vec<f64>,
    pub verdict: ProbeVerdict,
    pub tolerance: f64,
    /// Estimated power-law decay rate of the increments in `log(1/ε)`.
    pub decay_exponent: Option<f64>,
    /// For `E(q, c)`: whether `q(x)/√x` shows unbounded growth at both ends.
    pub side_condition: Option<bool>,
}

/// Settings shared by the `I` and `E` probes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSettings {
    /// Strictly decreasing sequence in (0, 1/2).
    pub schedule: Vec<f64>,
    /// Relative increment below which the sequence counts as converged.
    pub tolerance: f64,
    /// Decay exponent at or above which increments count as summable.
    pub summable_exponent: f64,
    /// Decay exponent at or below which increments count as non-summable.
    pub divergent_exponent: f64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            schedule: (2..=12).map(|k| 10f64.powi(-k)).collect(),
            tolerance: 1e-6,
            summable_exponent: 1.5,
            divergent_exponent: 1.0,
        }
    }
}

const QUAD_TOL: f64 = 1e-10;

#[derive(Clone, Copy)]
enum Integrand {
    I,
    E,
}

fn integrand(q: &WeightFunction, c: f64, kind: Integrand) -> impl Fn(f64) -> f64 + '_ {
    move |x: f64| {
        let v = x * (1.0 - x);
        let qx = q.value(x);
        let damp = (-c * qx * qx / v).exp();
        match kind {
            Integrand::I => damp / v,
            Integrand::E => qx * damp / (v * v.sqrt()),
        }
    }
}

/// ∫ over `[lo, hi] ⊂ (0, 1/2]` plus the mirrored piece `[1−hi, 1−lo]`.
fn two_sided_piece(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    let left = integrate_log_scaled(f, lo, hi, QUAD_TOL);
    let mirrored = |t: f64| f(1.0 - t);
    let right = integrate_log_scaled(&mirrored, lo, hi, QUAD_TOL);
    match (left, right) {
        (Some(l), Some(r)) => Ok(l + r),
        _ => Err(GofError::Numeric(format!(
            "integrand not finite on [{lo:e}, {hi:e}] or its mirror"
        ))),
    }
}

fn validate_probe(c: f64, settings: &ProbeSettings) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid("c", format!("{c} must be a finite positive number")));
    }
    let s = &settings.schedule;
    if s.len() < 4 {
        return Err(invalid("schedule", "needs at least four levels"));
    }
    if s[0] >= 0.5 || s.iter().any(|&e| !(e > 0.0)) || s.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("schedule", "must be strictly decreasing within (0, 1/2)"));
    }
    Ok(())
}

fn run_probe(q: &WeightFunction, c: f64, settings: &ProbeSettings, kind: Integrand) -> Result<IntegralProbe> {
    validate_probe(c, settings)?;
    let f = integrand(q, c, kind);
    let s = &settings.schedule;

    let mut partial_values = Vec::with_capacity(s.len());
    let mut total = two_sided_piece(&f, s[0], 0.5)?;
    partial_values.push(total);
    for w in s.windows(2) {
        let inc = two_sided_piece(&f, w[1], w[0])?;
        assert!(inc >= 0.0, "positive integrand produced a negative increment");
        total += inc;
        partial_values.push(total);
    }

    let (verdict, decay_exponent) = classify(&partial_values, s, settings);
    Ok(IntegralProbe {
        c,
        schedule: s.clone(),
        partial_values,
        verdict,
        tolerance: settings.tolerance,
        decay_exponent,
        side_condition: None,
    })
}

/// Convergence is declared when the last increment is negligible relative to
/// the running total, or when increments decay faster than `log(1/ε)^{-p}`
/// with `p` clearly above 1 (a summable tail). Flat or harmonic-like decay is
/// evidence of divergence.
fn classify(partials: &[f64], schedule: &[f64], settings: &ProbeSettings) -> (ProbeVerdict, Option<f64>) {
    let n = partials.len();
    let incs: Vec<f64> = partials.windows(2).map(|w| w[1] - w[0]).collect();
    let last = partials[n - 1];
    let last_inc = incs[incs.len() - 1];
    if last_inc <= settings.tolerance * last.abs() {
        return (ProbeVerdict::Converged, None);
    }

    // Least-squares slope of log(increment) against log log(1/ε) over the
    // last three increments.
    let pts: Vec<(f64, f64)> = incs
        .iter()
        .zip(&schedule[1..])
        .rev()
        .take(3)
        .filter(|(d, _)| **d > 0.0)
        .map(|(d, e)| ((-e.ln()).ln(), d.ln()))
        .collect();
    if pts.len() < 3 {
        return (ProbeVerdict::Inconclusive, None);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let exponent = -sxy / sxx;

    let verdict = if exponent >= settings.summable_exponent {
        ProbeVerdict::Converged
    } else if exponent <= settings.divergent_exponent {
        ProbeVerdict::Diverging
    } else {
        ProbeVerdict::Inconclusive
    };
    (verdict, Some(exponent))
}

/// Probes finiteness of `I(q, c)`.
pub fn integral_i(q: &WeightFunction, c: f64, settings: &ProbeSettings) -> Result<IntegralProbe> {
    run_probe(q, c, settings, Integrand::I)
}

/// Probes finiteness of `E(q, c)` and the side condition `q(x)/√x → ∞` at
/// both ends of (0, 1).
pub fn integral_e(q: &WeightFunction, c: f64, settings: &ProbeSettings) -> Result<IntegralProbe> {
    let mut probe = run_probe(q, c, settings, Integrand::E)?;
    probe.side_condition = Some(side_condition_grows(q, &settings.schedule));
    Ok(probe)
}

/// Unbounded growth is evidenced by positive increments of the ratio along
/// the schedule that shrink no faster than geometrically by a factor 2; a
/// ratio converging to a finite limit shows geometric collapse of its
/// increments on a geometric schedule.
fn side_condition_grows(q: &WeightFunction, schedule: &[f64]) -> bool {
    let ends: [&dyn Fn(f64) -> f64; 2] = [&|e: f64| q.value(e) / e.sqrt(), &|e: f64| q.value(1.0 - e) / e.sqrt()];
    ends.iter().all(|ratio| {
        let r: Vec<f64> = schedule.iter().map(|&e| ratio(e)).collect();
        let d: Vec<f64> = r.windows(2).map(|w| w[1] - w[0]).collect();
        let tail = &d[d.len().saturating_sub(3)..];
        tail.iter().all(|&x| x > 0.0) && tail.windows(2).all(|w| w[1] >= 0.5 * w[0])
    })
}

/// Overall classification from an `I(q, c)` scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EfkpVerdict {
    LikelyEfkp,
    LikelyNotEfkp,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfkpReport {
    pub verdict: EfkpVerdict,
    pub probes: Vec<IntegralProbe>,
}

/// Scans `I(q, c)` over `c_grid`: likely upper-class if the integral
/// converges for some `c`, likely not if it diverges for every `c`.
pub fn is_efkp_probe(q: &WeightFunction, c_grid: &[f64], settings: &ProbeSettings) -> Result<EfkpReport> {
    if c_grid.is_empty() {
        return Err(invalid("c_grid", "must be nonempty"));
    }
    let probes = c_grid
        .iter()
        .map(|&c| integral_i(q, c, settings))
        .collect::<Result<Vec<_>>>()?;
    let verdict = if probes.iter().any(|p| p.verdict == ProbeVerdict::Converged) {
        EfkpVerdict::LikelyEfkp
    } else if probes.iter().all(|p| p.verdict == ProbeVerdict::Diverging) {
        EfkpVerdict::LikelyNotEfkp
    } else {
        EfkpVerdict::Inconclusive
    };
    Ok(EfkpReport { verdict, probes })
}
