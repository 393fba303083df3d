//! Sparse heterogeneous mixtures and the power of the one-sided weighted
//! sup test against them.
//!
//! Under the alternative a fraction `εₙ = n^{−β}` of the observations carries
//! a signal: `N(μₙ, 1)` with `μₙ = √(2r log n)` in the normal model, or
//! `χ²_ν(δₙ)` with `δₙ = 2r log n` in the chi-square model. Observations are
//! mapped to the uniform scale through the upper tail of the null, so that
//! signals land near 0.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GofError, Result};
use crate::rng::{cell_stream, chisq, std_normal, substream, uniform_open};
use crate::special::{chisq_sf, normal_sf};
use crate::statistics::{evaluate_uniform, Interval, Sample, Sided, StatisticDescriptor, StatisticFamily, StatisticResult};
use crate::tabulation::{critical_value, QuantileTable};
use crate::weights::WeightFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum MixtureModel {
    Normal,
    Chisq { nu: u32 },
}

impl MixtureModel {
    pub fn chisq(nu: u32) -> Result<Self> {
        if nu < 1 {
            return Err(invalid("nu", "degrees of freedom must be at least 1"));
        }
        Ok(Self::Chisq { nu })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::Chisq { .. } => "chisq",
        }
    }

    pub fn nu(&self) -> Option<u32> {
        match *self {
            Self::Normal => None,
            Self::Chisq { nu } => Some(nu),
        }
    }
}

impl fmt::Display for MixtureModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Normal => f.write_str("normal"),
            Self::Chisq { nu } => write!(f, "chisq({nu})"),
        }
    }
}

impl FromStr for MixtureModel {
    type Err = GofError;

    /// `normal` or `chisq` (ν supplied separately) / `chisq:NU`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "normal" => Ok(Self::Normal),
            None if s == "chisq" => Self::chisq(2),
            Some(("chisq", nu)) => Self::chisq(
                nu.trim()
                    .parse()
                    .map_err(|_| invalid("nu", format!("bad degrees of freedom `{nu}`")))?,
            ),
            _ => Err(invalid("model", format!("expected `normal` or `chisq`, got `{s}`"))),
        }
    }
}

/// A sparse mixture `(1 − εₙ) F₀ + εₙ F_signal` of size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureConfig {
    #[serde(flatten)]
    pub model: MixtureModel,
    pub n: usize,
    pub beta: f64,
    /// Signal strength; `r = 0` gives the null model.
    pub r: f64,
}

impl MixtureConfig {
    pub fn new(model: MixtureModel, n: usize, beta: f64, r: f64) -> Result<Self> {
        let c = Self { model, n, beta, r };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid("n", format!("need n >= 2, got {}", self.n)));
        }
        if !(self.beta > 0.5 && self.beta < 1.0) {
            return Err(invalid("beta", format!("{} is not in (1/2, 1)", self.beta)));
        }
        if !(0.0..1.0).contains(&self.r) {
            return Err(invalid("r", format!("{} is not in [0, 1)", self.r)));
        }
        if let MixtureModel::Chisq { nu: 0 } = self.model {
            return Err(invalid("nu", "degrees of freedom must be at least 1"));
        }
        Ok(())
    }

    /// `εₙ = n^{−β}`.
    pub fn epsilon(&self) -> f64 {
        (self.n as f64).powf(-self.beta)
    }

    /// `μₙ = √(2r log n)`.
    pub fn mu(&self) -> f64 {
        (2.0 * self.r * (self.n as f64).ln()).sqrt()
    }

    /// `δₙ = 2r log n`.
    pub fn delta(&self) -> f64 {
        2.0 * self.r * (self.n as f64).ln()
    }

    pub fn with_r(self, r: f64) -> Self {
        Self { r, ..self }
    }
}

/// The detection boundary `ρ(β)`: `β − 1/2` on (1/2, 3/4) and
/// `(1 − √(1 − β))²` on [3/4, 1).
pub fn rho_detection_boundary(beta: f64) -> Result<f64> {
    if !(beta > 0.5 && beta < 1.0) {
        return Err(invalid("beta", format!("{beta} is not in (1/2, 1)")));
    }
    Ok(if beta < 0.75 {
        beta - 0.5
    } else {
        (1.0 - (1.0 - beta).sqrt()).powi(2)
    })
}

/// Draws from the mixture with per-observation Bernoulli(εₙ) selection and
/// returns the sorted sample.
fn draw_mixture<R: RngCore>(config: &MixtureConfig, rng: &mut R) -> Vec<f64> {
    let eps = config.epsilon();
    let mut out: Vec<f64> = match config.model {
        MixtureModel::Normal => {
            let mu = config.mu();
            (0..config.n)
                .map(|_| {
                    let signal = uniform_open(rng) < eps;
                    let z = std_normal(rng);
                    if signal {
                        z + mu
                    } else {
                        z
                    }
                })
                .collect()
        }
        MixtureModel::Chisq { nu } => {
            let root_delta = config.delta().sqrt();
            (0..config.n)
                .map(|_| {
                    let signal = uniform_open(rng) < eps;
                    if signal {
                        noncentral_chisq_draw(rng, nu, root_delta)
                    } else {
                        chisq(rng, nu)
                    }
                })
                .collect()
        }
    };
    out.sort_by(f64::total_cmp);
    out
}

/// `χ²_ν(δ) = (Z + √δ)² + χ²_{ν−1}`.
fn noncentral_chisq_draw<R: RngCore>(rng: &mut R, nu: u32, root_delta: f64) -> f64 {
    (std_normal(rng) + root_delta).powi(2) + chisq(rng, nu - 1)
}

fn sample_mixture(config: &MixtureConfig, seed: u64) -> Result<Sample> {
    config.validate()?;
    let mut rng = substream(seed, 0);
    Sample::from_sorted(draw_mixture(config, &mut rng))
}

/// A normal-model mixture sample drawn from stream 0 of `seed`.
pub fn sample_normal_mixture(config: &MixtureConfig, seed: u64) -> Result<Sample> {
    if config.model != MixtureModel::Normal {
        return Err(invalid("model", "expected the normal mixture model"));
    }
    sample_mixture(config, seed)
}

/// A chi-square-model mixture sample drawn from stream 0 of `seed`.
pub fn sample_chisq_mixture(config: &MixtureConfig, seed: u64) -> Result<Sample> {
    if !matches!(config.model, MixtureModel::Chisq { .. }) {
        return Err(invalid("model", "expected the chi-square mixture model"));
    }
    sample_mixture(config, seed)
}

/// `n` draws from `χ²_ν(δ)`; exposed for moment checks.
pub fn noncentral_chisq_draws(nu: u32, delta: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if nu < 1 {
        return Err(invalid("nu", "degrees of freedom must be at least 1"));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(invalid("delta", format!("{delta} must be nonnegative")));
    }
    let mut rng = substream(seed, 0);
    let root = delta.sqrt();
    Ok((0..n).map(|_| noncentral_chisq_draw(&mut rng, nu, root)).collect())
}

/// Upper-tail probabilities under the null component: `1 − Φ(x)` (normal)
/// or `1 − H_ν(x)` (chi-square), sorted. Values that underflow to 0 or round
/// to 1 are pulled to the nearest representable point inside (0, 1).
pub fn transform_mixture_to_uniform_null(sample: &Sample, model: MixtureModel) -> Result<Sample> {
    let mut u: Vec<f64> = sample
        .values()
        .iter()
        .map(|&x| match model {
            MixtureModel::Normal => normal_sf(x),
            MixtureModel::Chisq { nu } => chisq_sf(x, nu as f64),
        })
        .map(|p| p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
        .collect();
    u.sort_by(f64::total_cmp);
    Sample::from_sorted(u)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionOutcome {
    pub reject: bool,
    pub statistic: StatisticResult,
    pub critical_value: f64,
}

/// The level-α test rejecting when the one-sided statistic over `interval`
/// reaches the table's `(1 − α)` quantile. The table must have been made for
/// `(q, interval, one-sided)`.
pub fn run_detection_test(
    sample: &Sample,
    model: MixtureModel,
    q: &WeightFunction,
    interval: Interval,
    alpha: f64,
    table: &QuantileTable,
) -> Result<DetectionOutcome> {
    table.check_matches(q, interval, Sided::One)?;
    let crit = critical_value(table, alpha)?;
    let d = StatisticDescriptor::cscshm(StatisticFamily::CscshmOneSided, q.clone(), interval)?;
    let u = transform_mixture_to_uniform_null(sample, model)?;
    let statistic = evaluate_uniform(&u, &d)?;
    Ok(DetectionOutcome {
        reject: statistic.value >= crit,
        statistic,
        critical_value: crit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerResult {
    pub config: MixtureConfig,
    pub alpha: f64,
    pub reps: usize,
    pub rejection_rate: f64,
    pub stderr: f64,
    pub critical_value_used: f64,
    /// `ρ(β)` for this configuration.
    pub rho: f64,
}

/// Monte Carlo rejection rates of the one-sided test for each configuration
/// in `grid`. The weight and interval are those the table was made for.
/// Replicate `r` of grid point `g` uses stream `(g << 32) | r` of `seed`.
pub fn power_curve(
    grid: &[MixtureConfig],
    alpha: f64,
    reps: usize,
    table: &QuantileTable,
    seed: u64,
) -> Result<Vec<PowerResult>> {
    if reps < 1 {
        return Err(invalid("reps", "need at least one replicate"));
    }
    if grid.len() > u32::MAX as usize || reps > u32::MAX as usize {
        return Err(invalid("reps", "grid size and reps must fit in 32 bits"));
    }
    for c in grid {
        c.validate()?;
    }
    let (weight, interval, sided) = table.target();
    if sided != Sided::One {
        return Err(GofError::TableMismatch("power studies need a one-sided table".into()));
    }
    let crit = critical_value(table, alpha)?;
    let d = StatisticDescriptor::cscshm(StatisticFamily::CscshmOneSided, weight, interval)?;

    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..reps).map(move |r| (g, r))).collect();
    let rejected: Vec<bool> = jobs
        .into_par_iter()
        .map(|(g, r)| -> Result<bool> {
            let config = &grid[g];
            let mut rng = substream(seed, cell_stream(g as u32, r as u32));
            let x = Sample::from_sorted(draw_mixture(config, &mut rng))?;
            let u = transform_mixture_to_uniform_null(&x, config.model)?;
            Ok(evaluate_uniform(&u, &d)?.value >= crit)
        })
        .collect::<Result<_>>()?;

    grid.iter()
        .enumerate()
        .map(|(g, config)| {
            let hits = rejected[g * reps..(g + 1) * reps].iter().filter(|&&b| b).count();
            let p = hits as f64 / reps as f64;
            Ok(PowerResult {
                config: *config,
                alpha,
                reps,
                rejection_rate: p,
                stderr: (p * (1.0 - p) / reps as f64).sqrt(),
                critical_value_used: crit,
                rho: rho_detection_boundary(config.beta)?,
            })
        })
        .collect()
}

pub const POWER_CSV_HEADER: &str = "model,nu,n,beta,r,alpha,reps,power,stderr,rho";

/// Writes power results as CSV; `nu` is empty for the normal model.
pub fn write_power_csv<W: Write>(results: &[PowerResult], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{POWER_CSV_HEADER}")?;
    for p in results {
        let c = &p.config;
        let nu = c.model.nu().map_or(String::new(), |v| v.to_string());
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            c.model.name(),
            nu,
            c.n,
            c.beta,
            c.r,
            p.alpha,
            p.reps,
            p.rejection_rate,
            p.stderr,
            p.rho
        )?;
    }
    Ok(())
}
