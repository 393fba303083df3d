mod failure;
mod input;
mod manifest;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use gof_core::bands::{self, BandMethod};
use gof_core::detection::{power_curve, rho_detection_boundary, write_power_csv, MixtureConfig, MixtureModel};
use gof_core::hc_asymptotics::{argmax_location_study, simulate_normalized_hc};
use gof_core::statistics::{ej_normalize, statistic};
use gof_core::tabulation::{critical_value, builtin_table, tabulate, Innovation};
use gof_core::{
    GofError, Interval, NullModel, QuantileTable, Sample, Sided, StatisticDescriptor, StatisticFamily,
    TabulationConfig, WeightFunction,
};

use failure::{exit_code, usage};
use input::read_sample;
use manifest::RunManifest;

const TEST_LEVELS: [f64; 3] = [0.01, 0.05, 0.10];

#[derive(Parser)]
#[command(name = "gof", version, about = "Weighted sup-norm goodness-of-fit tests, tables, bands and simulations")]
struct Cli {
    /// Worker threads for Monte Carlo runs (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Emit machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a sample against a fully specified null distribution.
    Test(TestArgs),
    /// Tabulate the null limit law by Monte Carlo and save a quantile table.
    Tabulate(TabulateArgs),
    /// Build a simultaneous confidence band for the sample's CDF.
    Band(BandArgs),
    /// Estimate power against sparse mixtures.
    Detect(DetectArgs),
    /// Compare normalized higher criticism with its extreme-value limit.
    Hc(HcArgs),
}

#[derive(Args)]
struct TestArgs {
    /// Sample file, one value per line (`-` for stdin).
    #[arg(long)]
    input: PathBuf,
    /// Null model: uniform, normal[:MU,SIGMA], exponential[:RATE], chisq:NU.
    #[arg(long, default_value = "uniform")]
    null: NullModel,
    #[arg(long, default_value = "cscshm_one_sided")]
    family: StatisticFamily,
    /// efkp-loglog, sdp, chibisov-oreilly:NU or loglog-power:SIGMA.
    #[arg(long, default_value = "efkp-loglog")]
    weight: WeightFunction,
    #[arg(long, default_value = "0,1")]
    interval: Interval,
    /// Required for the higher-criticism families.
    #[arg(long)]
    alpha0: Option<f64>,
    /// `builtin` or a table file (looked up in GOF_TABLE_DIR when relative).
    #[arg(long)]
    table: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InnovationArg {
    Normal,
    Exponential,
}

#[derive(Args)]
struct TabulateArgs {
    #[arg(long = "n", default_value_t = 50_000)]
    n: usize,
    #[arg(long = "m", default_value_t = 50_000)]
    m: usize,
    #[arg(long, default_value = "efkp-loglog")]
    weight: WeightFunction,
    #[arg(long, default_value = "0,1")]
    interval: Interval,
    #[arg(long, default_value = "one")]
    sided: Sided,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Increment distribution of the partial sums.
    #[arg(long, value_enum, default_value = "normal")]
    innovation: InnovationArg,
    /// Output path; defaults to a descriptive name in GOF_TABLE_DIR (or the
    /// working directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the raw simulated values next to the table.
    #[arg(long)]
    raw: bool,
}

#[derive(Args)]
struct BandArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// cscshm, ks or eicker_jaeschke.
    #[arg(long, default_value = "cscshm")]
    method: BandMethod,
    /// Two-sided table for cscshm bands at levels other than 0.05.
    #[arg(long)]
    table: Option<String>,
    /// CSV output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Normal,
    Chisq,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long, value_enum, default_value = "normal")]
    model: ModelArg,
    /// Degrees of freedom of the chi-square model.
    #[arg(long, default_value_t = 2)]
    nu: u32,
    #[arg(long = "n", default_value_t = 10_000)]
    n: usize,
    /// Sparsity exponent(s), comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.6")]
    beta: Vec<f64>,
    /// Signal strength(s), comma separated; 0 gives the null.
    #[arg(long = "r", value_delimiter = ',', default_value = "0.6")]
    r: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// `builtin` or a one-sided table file.
    #[arg(long, default_value = "builtin")]
    table: String,
    /// CSV output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HcArgs {
    #[arg(long = "n", default_value_t = 10_000)]
    n: usize,
    #[arg(long = "m", default_value_t = 1_000)]
    m: usize,
    /// Upper end of the interval (0, alpha0); 1 means the whole interval.
    #[arg(long, default_value_t = 0.1)]
    alpha0: f64,
    #[arg(long, default_value = "one")]
    sided: Sided,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also report how often the one-sided sup over (0, 0.99) is attained
    /// below alpha0.
    #[arg(long)]
    argmax: bool,
    /// JSON output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Test(a) => cmd_test(a, cli.json),
        Command::Tabulate(a) => cmd_tabulate(a, cli.threads, cli.json),
        Command::Band(a) => cmd_band(a, cli.json),
        Command::Detect(a) => cmd_detect(a, cli.threads, cli.json),
        Command::Hc(a) => cmd_hc(a, cli.threads, cli.json),
    }
}

fn table_dir() -> Option<PathBuf> {
    std::env::var_os("GOF_TABLE_DIR").map(PathBuf::from)
}

/// `builtin`, an existing path, or a name inside GOF_TABLE_DIR.
fn load_table(which: &str) -> Result<QuantileTable> {
    if which == "builtin" {
        return Ok(builtin_table());
    }
    let mut path = PathBuf::from(which);
    if !path.exists() && path.is_relative() {
        if let Some(dir) = table_dir() {
            path = dir.join(&path);
        }
    }
    let mut table = QuantileTable::load_json(&path).with_context(|| format!("loading table {}", path.display()))?;
    let raw = raw_sidecar(&path);
    if raw.exists() {
        table
            .attach_raw_csv(&raw)
            .with_context(|| format!("loading raw values {}", raw.display()))?;
    }
    Ok(table)
}

fn raw_sidecar(table_path: &Path) -> PathBuf {
    table_path.with_extension("raw.csv")
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_test(a: TestArgs, json_out: bool) -> Result<()> {
    let sample = Sample::new(read_sample(&a.input)?)?;
    let d = match a.family {
        f if f.is_hc() => {
            let alpha0 = a.alpha0.ok_or_else(|| usage(format!("{f} needs --alpha0")))?;
            StatisticDescriptor::higher_criticism(f, alpha0)?
        }
        StatisticFamily::KsTwoSided => StatisticDescriptor::ks(),
        f => StatisticDescriptor::cscshm(f, a.weight.clone(), a.interval)?,
    };
    let result = statistic(&sample, &a.null, &d)?;

    // Critical values per level, from the table or the Kolmogorov law.
    let (source, crits): (String, Vec<(f64, f64)>) = match d.family {
        StatisticFamily::KsTwoSided => (
            "kolmogorov".into(),
            TEST_LEVELS
                .iter()
                .map(|&al| Ok((al, bands::ks_critical_value(al)?)))
                .collect::<Result<_>>()?,
        ),
        StatisticFamily::HcPlus | StatisticFamily::HcStar if a.table.is_some() => {
            return Err(usage("tables are only supported for hc, not its truncated variants"));
        }
        f if f.is_hc() && a.table.is_none() => ("none".into(), vec![]),
        f => {
            let which = a.table.as_deref().unwrap_or("builtin");
            let table = load_table(which)?;
            let weight = d.weight.clone().unwrap_or(WeightFunction::Sdp);
            table.check_matches(&weight, result.interval, f.sided()).map_err(|e| match (&a.table, e) {
                (None, GofError::TableMismatch(m)) => anyhow::Error::new(GofError::TableMismatch(format!(
                    "{m}; the builtin table only covers efkp-loglog on (0, 1), one-sided. \
                     Generate a table with `gof tabulate` and pass it with --table"
                ))),
                (_, e) => e.into(),
            })?;
            let crits = TEST_LEVELS
                .iter()
                .map(|&al| Ok((al, critical_value(&table, al)?)))
                .collect::<Result<_>>()?;
            (table.source.to_string(), crits)
        }
    };
    let ej = if d.family.is_hc() && sample.len() >= 16 {
        Some(ej_normalize(result.value, sample.len() as u64)?)
    } else {
        None
    };

    if json_out {
        let decisions: Vec<_> = crits
            .iter()
            .map(|&(al, c)| json!({ "alpha": al, "critical_value": c, "reject": result.value >= c }))
            .collect();
        let doc = json!({
            "n": sample.len(),
            "null": a.null.to_string(),
            "statistic": result,
            "critical_values_from": source,
            "decisions": decisions,
            "ej_normalized": ej,
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
        return Ok(());
    }
    println!("statistic  {}", d.family);
    if let Some(w) = &d.weight {
        println!("weight     {w}");
    }
    println!("null       {}", a.null);
    println!("n          {}", sample.len());
    println!("interval   {}", result.interval);
    println!("value      {}", result.value);
    println!("argmax_u   {}", result.argmax_u);
    if let Some(v) = ej {
        println!("normalized {v}");
    }
    if crits.is_empty() {
        println!("no critical values: pass --table for a tabulated law");
    } else {
        println!("critical values from {source}");
        println!("alpha  critical  decision");
        for (al, c) in crits {
            let decision = if result.value >= c { "reject" } else { "accept" };
            println!("{al:<6} {c:<9} {decision}");
        }
    }
    Ok(())
}

fn cmd_tabulate(a: TabulateArgs, threads: Option<usize>, json_out: bool) -> Result<()> {
    let innovation = match a.innovation {
        InnovationArg::Normal => Innovation::Normal,
        InnovationArg::Exponential => Innovation::CenteredExponential,
    };
    let config = TabulationConfig::new(a.n, a.m, a.weight.clone(), a.interval, a.sided, a.seed)?.with_innovation(innovation);
    let out = match a.out {
        Some(p) => p,
        None => {
            let name = format!(
                "{}_{}_{}_{}_n{}_m{}_s{}.json",
                a.weight.to_string().replace(':', "-"),
                a.interval.a,
                a.interval.b,
                a.sided,
                a.n,
                a.m,
                a.seed
            );
            table_dir().unwrap_or_default().join(name)
        }
    };
    let table = tabulate(&config)?;
    table.save_json(&out).with_context(|| format!("writing {}", out.display()))?;
    if a.raw {
        table.save_raw_csv(&raw_sidecar(&out))?;
    }
    let manifest = RunManifest::new("tabulate")
        .flag("n", a.n)
        .flag("M", a.m)
        .flag("weight", a.weight.to_string())
        .flag("interval", [a.interval.a, a.interval.b])
        .flag("sided", a.sided)
        .flag("innovation", innovation)
        .flag("raw", a.raw)
        .flag("threads", threads)
        .seed(a.seed)
        .output(Some(&out));
    manifest.write_beside(&out)?;

    let q: Vec<(f64, f64)> = [0.90, 0.95, 0.99]
        .iter()
        .map(|&p| Ok((p, table.quantile(p)?)))
        .collect::<Result<_>>()?;
    if json_out {
        let quantiles: serde_json::Map<_, _> = q.iter().map(|(p, x)| (p.to_string(), json!(x))).collect();
        println!("{}", serde_json::to_string_pretty(&json!({ "table": out, "quantiles": quantiles }))?);
    } else {
        println!("wrote {}", out.display());
        for (p, x) in q {
            println!("q{p:<5} {x:.4}");
        }
    }
    Ok(())
}

fn cmd_band(a: BandArgs, json_out: bool) -> Result<()> {
    let sample = Sample::new(read_sample(&a.input)?)?;
    let table = a.table.as_deref().map(load_table).transpose()?;
    if table.is_some() && a.method != BandMethod::Cscshm {
        return Err(usage("--table only applies to the cscshm band"));
    }
    let band = bands::band(&sample, a.method, a.alpha, table.as_ref())?;
    if json_out {
        emit(a.out.as_deref(), &(serde_json::to_string_pretty(&band)? + "\n"))?;
    } else {
        let mut buf = Vec::new();
        band.write_csv(&mut buf)?;
        emit(a.out.as_deref(), std::str::from_utf8(&buf)?)?;
        eprintln!(
            "{} band, level {}, critical value {}, {} rows",
            band.method,
            band.level,
            band.critical_value,
            band.points.len()
        );
    }
    Ok(())
}

fn cmd_detect(a: DetectArgs, threads: Option<usize>, json_out: bool) -> Result<()> {
    let model = match a.model {
        ModelArg::Normal => MixtureModel::Normal,
        ModelArg::Chisq => MixtureModel::chisq(a.nu)?,
    };
    let mut grid = Vec::new();
    for &beta in &a.beta {
        for &r in &a.r {
            grid.push(MixtureConfig::new(model, a.n, beta, r)?);
        }
    }
    let table = load_table(&a.table)?;
    let results = power_curve(&grid, a.alpha, a.reps, &table, a.seed)?;
    let manifest = RunManifest::new("detect")
        .flag("model", model.name())
        .flag("nu", model.nu())
        .flag("n", a.n)
        .flag("beta", &a.beta)
        .flag("r", &a.r)
        .flag("alpha", a.alpha)
        .flag("reps", a.reps)
        .flag("table", &a.table)
        .flag("threads", threads)
        .seed(a.seed)
        .output(a.out.as_deref());

    if json_out {
        let doc = json!({ "manifest": manifest, "results": results });
        emit(a.out.as_deref(), &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    } else {
        let mut buf = Vec::new();
        write_power_csv(&results, &mut buf)?;
        emit(a.out.as_deref(), std::str::from_utf8(&buf)?)?;
    }
    if let Some(out) = &a.out {
        manifest.write_beside(out)?;
    }
    eprintln!(
        "critical value {} from {}; boundary rho({}) = {}",
        results.first().map_or(f64::NAN, |r| r.critical_value_used),
        table.source,
        a.beta[0],
        rho_detection_boundary(a.beta[0])?
    );
    Ok(())
}

fn cmd_hc(a: HcArgs, threads: Option<usize>, _json_out: bool) -> Result<()> {
    let cmp = simulate_normalized_hc(a.n, a.m, a.alpha0, a.sided, a.seed)?;
    let mut doc = cmp.summary_json();
    if a.argmax {
        doc["argmax_fraction_below_alpha0"] = json!(argmax_location_study(a.n, a.m, a.alpha0, a.seed)?);
    }
    let manifest = RunManifest::new("hc")
        .flag("n", a.n)
        .flag("M", a.m)
        .flag("alpha0", a.alpha0)
        .flag("sided", a.sided)
        .flag("argmax", a.argmax)
        .flag("threads", threads)
        .seed(a.seed)
        .output(a.out.as_deref());
    doc["manifest"] = serde_json::to_value(&manifest)?;
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&doc)? + "\n"))
}
