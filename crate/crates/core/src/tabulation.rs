//! Monte Carlo tabulation of the null limit laws `sup B(u)/q(u)` and
//! `sup |B(u)|/q(u)` over a subinterval, with persisted quantile tables.
//!
//! Replicate `m` draws `n` innovations `ξ₁, …, ξₙ` from its own substream,
//! forms the partial sums `Sₖ` and returns
//! `max_{a < k/n < b} (Sₖ − (k/n)Sₙ)/(q(k/n)√n)` (absolute value for the
//! two-sided law). The empirical CDF of `M` such values approximates the
//! limit CDF.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GofError, Result};
use crate::rng::{self, substream};
use crate::statistics::{Interval, Sided};
use crate::weights::WeightFunction;

pub const SCHEMA_VERSION: u32 = 1;

/// Distribution of the partial-sum increments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Innovation {
    #[default]
    Normal,
    /// `Exp(1) − 1`: mean 0, variance 1, strongly skewed.
    CenteredExponential,
}

impl Innovation {
    fn is_normal(&self) -> bool {
        *self == Innovation::Normal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabulationConfig {
    /// Lattice size (path resolution).
    pub n: usize,
    /// Number of replicates.
    pub m: usize,
    pub weight: WeightFunction,
    pub interval: Interval,
    pub sided: Sided,
    pub seed: u64,
    pub innovation: Innovation,
}

impl TabulationConfig {
    pub fn new(n: usize, m: usize, weight: WeightFunction, interval: Interval, sided: Sided, seed: u64) -> Result<Self> {
        let c = Self {
            n,
            m,
            weight,
            interval,
            sided,
            seed,
            innovation: Innovation::Normal,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_innovation(mut self, innovation: Innovation) -> Self {
        self.innovation = innovation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid("n", format!("lattice size must be at least 2, got {}", self.n)));
        }
        if self.m < 1 {
            return Err(invalid("M", "need at least one replicate"));
        }
        if self.n > u32::MAX as usize || self.m > u32::MAX as usize {
            return Err(invalid("n", "n and M must fit in 32 bits"));
        }
        Interval::new(self.interval.a, self.interval.b)?;
        lattice_range(self.n, self.interval).map(|_| ())
    }
}

/// Indices `k` with `a < k/n < b`, `1 ≤ k ≤ n − 1`, as an inclusive range.
fn lattice_range(n: usize, interval: Interval) -> Result<(usize, usize)> {
    let nf = n as f64;
    let ks = (1..n).filter(|&k| {
        let u = k as f64 / nf;
        interval.a < u && u < interval.b
    });
    let mut it = ks;
    let lo = it.next().ok_or_else(|| {
        GofError::EmptyInterval(format!("no lattice point k/{n} lies in {interval}"))
    })?;
    let hi = it.last().unwrap_or(lo);
    Ok((lo, hi))
}

/// Precomputed per-configuration quantities shared by all replicates.
struct Lattice {
    n: usize,
    k_lo: usize,
    /// `1/(q(k/n)√n)` for `k = k_lo..=k_hi`.
    inv_scale: Vec<f64>,
}

impl Lattice {
    fn new(config: &TabulationConfig) -> Result<Self> {
        config.validate()?;
        let (k_lo, k_hi) = lattice_range(config.n, config.interval)?;
        let nf = config.n as f64;
        let root = nf.sqrt();
        let inv_scale = (k_lo..=k_hi)
            .map(|k| 1.0 / (config.weight.value(k as f64 / nf) * root))
            .collect();
        Ok(Self {
            n: config.n,
            k_lo,
            inv_scale,
        })
    }

    /// One replicate; `sums` is scratch space of length `n`.
    fn replicate(&self, config: &TabulationConfig, index: usize, sums: &mut [f64]) -> f64 {
        let mut rng = substream(config.seed, index as u64);
        let mut s = 0.0;
        match config.innovation {
            Innovation::Normal => {
                for slot in sums.iter_mut() {
                    s += rng::std_normal(&mut rng);
                    *slot = s;
                }
            }
            Innovation::CenteredExponential => {
                for slot in sums.iter_mut() {
                    s += rng::std_exponential(&mut rng) - 1.0;
                    *slot = s;
                }
            }
        }
        let total = s;
        let slope = total / self.n as f64;
        let mut best = f64::NEG_INFINITY;
        let partial = &sums[self.k_lo - 1..self.k_lo - 1 + self.inv_scale.len()];
        match config.sided {
            Sided::One => {
                for (j, (&sk, &w)) in partial.iter().zip(&self.inv_scale).enumerate() {
                    let k = (self.k_lo + j) as f64;
                    best = best.max((sk - k * slope) * w);
                }
            }
            Sided::Two => {
                for (j, (&sk, &w)) in partial.iter().zip(&self.inv_scale).enumerate() {
                    let k = (self.k_lo + j) as f64;
                    best = best.max((sk - k * slope).abs() * w);
                }
            }
        }
        best
    }
}

/// The statistic of replicate `replicate_index`. Deterministic in
/// `(config, replicate_index)`.
pub fn simulate_limit_statistic(config: &TabulationConfig, replicate_index: usize) -> Result<f64> {
    if replicate_index >= config.m {
        return Err(invalid(
            "replicate_index",
            format!("{replicate_index} is not below M = {}", config.m),
        ));
    }
    let lattice = Lattice::new(config)?;
    let mut sums = vec![0.0; config.n];
    Ok(lattice.replicate(config, replicate_index, &mut sums))
}

/// All `M` replicate values in replicate order. Runs on the current rayon
/// pool; the values do not depend on its size.
pub fn simulate_all(config: &TabulationConfig) -> Result<Vec<f64>> {
    let lattice = Lattice::new(config)?;
    Ok((0..config.m)
        .into_par_iter()
        .map_init(|| vec![0.0; config.n], |sums, m| lattice.replicate(config, m, sums))
        .collect())
}

/// Tabulates the empirical CDF of `M` simulated values.
pub fn tabulate(config: &TabulationConfig) -> Result<QuantileTable> {
    let mut raw = simulate_all(config)?;
    raw.sort_by(f64::total_cmp);
    Ok(QuantileTable::from_sorted_raw(config.clone(), raw))
}

/// Type-7 (linear interpolation) empirical quantile of sorted data.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Where a table came from.
#[derive(Debug, Clone, PartialEq)]
pub enum TableSource {
    Simulated(TabulationConfig),
    /// The embedded reference table for the log-log weight, one-sided, over (0, 1).
    Builtin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawSummary {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// An empirical limit CDF stored as `(x, G(x))` points at quantile levels,
/// optionally with the raw simulated values.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    pub points: Vec<(f64, f64)>,
    pub source: TableSource,
    pub raw_summary: Option<RawSummary>,
    /// Sorted simulated values, when available.
    pub raw: Option<Vec<f64>>,
}

const BUILTIN_TABLE_X: [f64; 99] = [
    0.74, 0.87, 0.95, 1.02, 1.07, 1.11, 1.16, 1.19, 1.23, 1.26, 1.29, 1.32, 1.35, 1.37, 1.40, 1.42, 1.45, 1.47, 1.49,
    1.51, 1.54, 1.56, 1.58, 1.60, 1.63, 1.65, 1.67, 1.69, 1.71, 1.73, 1.75, 1.77, 1.79, 1.81, 1.83, 1.85, 1.87, 1.89,
    1.91, 1.93, 1.95, 1.97, 1.99, 2.01, 2.03, 2.05, 2.07, 2.09, 2.12, 2.14, 2.16, 2.18, 2.20, 2.22, 2.25, 2.27, 2.30,
    2.32, 2.35, 2.37, 2.40, 2.43, 2.46, 2.49, 2.51, 2.54, 2.57, 2.60, 2.63, 2.66, 2.69, 2.72, 2.76, 2.79, 2.83, 2.87,
    2.91, 2.95, 2.99, 3.03, 3.08, 3.13, 3.18, 3.23, 3.29, 3.35, 3.42, 3.48, 3.55, 3.62, 3.70, 3.79, 3.89, 4.00, 4.14,
    4.30, 4.48, 4.73, 5.16,
];

/// The reference limit CDF of `sup B(u)/q(u)` over (0, 1) for the log-log
/// weight: `G = 0.01, 0.02, …, 0.99`.
pub fn builtin_table() -> QuantileTable {
    QuantileTable {
        points: BUILTIN_TABLE_X
            .iter()
            .enumerate()
            .map(|(i, &x)| (x, (i + 1) as f64 / 100.0))
            .collect(),
        source: TableSource::Builtin,
        raw_summary: None,
        raw: None,
    }
}

/// Two-sided critical value of the log-log weight over (0, 1) at level 0.05.
pub const TWO_SIDED_C_05: f64 = 4.57;

/// Tolerance for matching a requested level to a stored grid level.
const LEVEL_EPS: f64 = 1e-12;

impl QuantileTable {
    /// Builds a table from sorted raw values, storing the 0.01, …, 0.99
    /// quantiles.
    pub fn from_sorted_raw(config: TabulationConfig, raw: Vec<f64>) -> Self {
        let points = (1..100)
            .map(|i| {
                let g = i as f64 / 100.0;
                (empirical_quantile(&raw, g), g)
            })
            .collect();
        let raw_summary = Some(RawSummary {
            min: raw[0],
            max: raw[raw.len() - 1],
            count: raw.len(),
        });
        Self {
            points,
            source: TableSource::Simulated(config),
            raw_summary,
            raw: Some(raw),
        }
    }

    pub fn is_builtin(&self) -> bool {
        self.source == TableSource::Builtin
    }

    /// `(weight, interval, sided)` the table was produced for.
    pub fn target(&self) -> (WeightFunction, Interval, Sided) {
        match &self.source {
            TableSource::Builtin => (WeightFunction::EfkpLogLog, Interval::UNIT, Sided::One),
            TableSource::Simulated(c) => (c.weight.clone(), c.interval, c.sided),
        }
    }

    /// Fails unless the table was made for this weight, interval and side.
    pub fn check_matches(&self, weight: &WeightFunction, interval: Interval, sided: Sided) -> Result<()> {
        let (w, i, s) = self.target();
        if &w != weight || i != interval || s != sided {
            return Err(GofError::TableMismatch(format!(
                "table is for {w} on {i} ({s}-sided), statistic needs {weight} on {interval} ({sided}-sided)"
            )));
        }
        Ok(())
    }

    /// `G(x)`: the empirical CDF of the raw values if present, otherwise
    /// linear interpolation between stored points (0 below the first point,
    /// 1 above the last).
    pub fn cdf(&self, x: f64) -> f64 {
        if let Some(raw) = &self.raw {
            return raw.partition_point(|&v| v <= x) as f64 / raw.len() as f64;
        }
        let pts = &self.points;
        if x < pts[0].0 {
            return 0.0;
        }
        if x >= pts[pts.len() - 1].0 {
            return if x == pts[pts.len() - 1].0 { pts[pts.len() - 1].1 } else { 1.0 };
        }
        let k = pts.partition_point(|&(v, _)| v <= x);
        let (x0, g0) = pts[k - 1];
        let (x1, g1) = pts[k];
        g0 + (g1 - g0) * (x - x0) / (x1 - x0)
    }

    /// The `p`-quantile: type-7 over the raw values if present, otherwise
    /// linear interpolation between stored points.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid("p", format!("{p} is not in (0, 1)")));
        }
        if let Some(raw) = &self.raw {
            return Ok(empirical_quantile(raw, p));
        }
        let pts = &self.points;
        if let Some(&(x, _)) = pts.iter().find(|&&(_, g)| (g - p).abs() < LEVEL_EPS) {
            return Ok(x);
        }
        let (g_min, g_max) = (pts[0].1, pts[pts.len() - 1].1);
        if p < g_min || p > g_max {
            return Err(GofError::MissingCriticalValue(format!(
                "level {p} lies outside the tabulated range [{g_min}, {g_max}]"
            )));
        }
        let k = pts.partition_point(|&(_, g)| g <= p);
        let (x0, g0) = pts[k - 1];
        let (x1, g1) = pts[k];
        Ok(x0 + (x1 - x0) * (p - g0) / (g1 - g0))
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        w.write_all(self.to_json().as_bytes())?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TableFile::from(self)).expect("table serializes")
    }

    /// Loads a table document; raw values are attached separately with
    /// [`QuantileTable::attach_raw_csv`].
    pub fn load_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TableFile = serde_json::from_str(text).map_err(|e| GofError::Format(e.to_string()))?;
        file.try_into()
    }

    /// Writes the raw values, one per line.
    pub fn save_raw_csv(&self, path: &Path) -> Result<()> {
        let raw = self
            .raw
            .as_ref()
            .ok_or_else(|| GofError::Format("table has no raw values".into()))?;
        let mut w = BufWriter::new(fs::File::create(path)?);
        for v in raw {
            writeln!(w, "{v}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn attach_raw_csv(&mut self, path: &Path) -> Result<()> {
        let reader = BufReader::new(fs::File::open(path)?);
        let mut raw = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let v: f64 = line
                .trim()
                .parse()
                .map_err(|_| GofError::Format(format!("line {}: `{line}` is not a number", i + 1)))?;
            raw.push(v);
        }
        if raw.is_empty() || raw.windows(2).any(|w| w[1] < w[0]) {
            return Err(GofError::Format("raw values must be nonempty and sorted".into()));
        }
        if let Some(s) = self.raw_summary {
            if s.count != raw.len() || s.min != raw[0] || s.max != raw[raw.len() - 1] {
                return Err(GofError::Format("raw values disagree with the table summary".into()));
            }
        }
        self.raw = Some(raw);
        Ok(())
    }
}

/// The `(1 − α)` quantile of the table.
pub fn critical_value(table: &QuantileTable, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("{alpha} is not in (0, 1)")));
    }
    table.quantile(1.0 - alpha)
}

/// Two-sided critical value `c_α` for the log-log weight over (0, 1): the
/// embedded constant at α = 0.05, otherwise read from a supplied two-sided
/// table.
pub fn two_sided_critical_value(alpha: f64, table: Option<&QuantileTable>) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("{alpha} is not in (0, 1)")));
    }
    match table {
        Some(t) => {
            t.check_matches(&WeightFunction::EfkpLogLog, Interval::UNIT, Sided::Two)?;
            critical_value(t, alpha)
        }
        None if (alpha - 0.05).abs() < LEVEL_EPS => Ok(TWO_SIDED_C_05),
        None => Err(GofError::MissingCriticalValue(format!(
            "no embedded two-sided critical value for alpha = {alpha}; supply a two-sided table"
        ))),
    }
}

impl fmt::Display for TableSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableSource::Builtin => f.write_str(BUILTIN_TAG),
            TableSource::Simulated(c) => write!(
                f,
                "simulated n={} M={} {} on {} ({}-sided) seed={}",
                c.n, c.m, c.weight, c.interval, c.sided, c.seed
            ),
        }
    }
}

const BUILTIN_TAG: &str = "builtin";

#[derive(Serialize, Deserialize)]
struct TableFile {
    schema_version: u32,
    config: ConfigField,
    quantiles: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    raw_summary: Option<RawSummary>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ConfigField {
    Tag(String),
    Config(ConfigRecord),
}

#[derive(Serialize, Deserialize)]
struct ConfigRecord {
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    weight_name: String,
    weight_params: Vec<f64>,
    a: f64,
    b: f64,
    sided: Sided,
    seed: u64,
    #[serde(skip_serializing_if = "Innovation::is_normal", default)]
    innovation: Innovation,
}

impl From<&QuantileTable> for TableFile {
    fn from(t: &QuantileTable) -> Self {
        let config = match &t.source {
            TableSource::Builtin => ConfigField::Tag(BUILTIN_TAG.into()),
            TableSource::Simulated(c) => ConfigField::Config(ConfigRecord {
                n: c.n,
                m: c.m,
                weight_name: c.weight.name().into(),
                weight_params: c.weight.params(),
                a: c.interval.a,
                b: c.interval.b,
                sided: c.sided,
                seed: c.seed,
                innovation: c.innovation,
            }),
        };
        TableFile {
            schema_version: SCHEMA_VERSION,
            config,
            quantiles: t.points.iter().map(|&(x, g)| [x, g]).collect(),
            raw_summary: t.raw_summary,
        }
    }
}

impl TryFrom<TableFile> for QuantileTable {
    type Error = GofError;

    fn try_from(f: TableFile) -> Result<Self> {
        if f.schema_version != SCHEMA_VERSION {
            return Err(GofError::Format(format!("unsupported schema_version {}", f.schema_version)));
        }
        let source = match f.config {
            ConfigField::Tag(t) if t == BUILTIN_TAG => TableSource::Builtin,
            ConfigField::Tag(t) => return Err(GofError::Format(format!("unknown table tag `{t}`"))),
            ConfigField::Config(c) => {
                let weight = WeightFunction::from_parts(&c.weight_name, &c.weight_params)
                    .map_err(|e| GofError::Format(e.to_string()))?;
                let interval = Interval::new(c.a, c.b).map_err(|e| GofError::Format(e.to_string()))?;
                let config = TabulationConfig {
                    n: c.n,
                    m: c.m,
                    weight,
                    interval,
                    sided: c.sided,
                    seed: c.seed,
                    innovation: c.innovation,
                };
                config.validate().map_err(|e| GofError::Format(e.to_string()))?;
                TableSource::Simulated(config)
            }
        };
        let points: Vec<(f64, f64)> = f.quantiles.into_iter().map(|[x, g]| (x, g)).collect();
        if points.is_empty() {
            return Err(GofError::Format("table has no quantiles".into()));
        }
        let ok = points.iter().all(|&(x, g)| x.is_finite() && (0.0..=1.0).contains(&g))
            && points.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1);
        if !ok {
            return Err(GofError::Format("quantiles must be finite and nondecreasing in x and G".into()));
        }
        Ok(QuantileTable {
            points,
            source,
            raw_summary: f.raw_summary,
            raw: None,
        })
    }
}
