//! `swipt`: runs relay scenarios and parameter sweeps and writes the results
//! as CSV plus a JSON run manifest.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use swipt_core::config::parse_config;
use swipt_core::sim::{parse_sweep, run, SweepAxis};
use swipt_core::{PolicyKind, RunMetrics, ScenarioConfig};

const HEADER: &str = "axis,value,policy,pharv_w,pharv_dbuw,violations,mean_rho,reps,seed";
const FULL_REPETITIONS: usize = 5000;

#[derive(Parser)]
#[command(name = "swipt", version, about = "Predictive power splitting at a random-access SWIPT relay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario or a sweep and write results.
    Run(RunArgs),
    /// Print the resolved configuration as TOML.
    Config {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML); defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sweep spec such as `N=2..8`, `p=0.05,0.1,0.2` or `alpha=0,1e-4,1e-3`.
    #[arg(long)]
    sweep: Option<String>,
    /// Comma-separated policies: baseline, genie, sbp, bbp:<D>.
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    symbols: Option<usize>,
    /// 5000 repetitions per point.
    #[arg(long, conflicts_with = "reps")]
    full: bool,
    /// Model imperfect channel knowledge (required for alpha sweeps).
    #[arg(long)]
    csi: bool,
    /// Results file; the manifest is written next to it.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
}

#[derive(Serialize)]
struct Manifest {
    version: &'static str,
    seed: u64,
    config_sha256: String,
    config: String,
    sweep_axis: Option<String>,
    sweep_values: Vec<f64>,
    policies: Vec<String>,
    repetitions: usize,
    symbols: usize,
    rows: usize,
    partial: bool,
    error: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run_command(args),
        Command::Config { config } => print_config(config.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load(path: Option<&Path>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => parse_config(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ScenarioConfig::default()),
    }
}

fn print_config(path: Option<&Path>) -> Result<()> {
    print!("{}", load(path)?.to_toml_string()?);
    Ok(())
}

type Sweep = (SweepAxis, Vec<f64>);

fn resolve(args: &RunArgs) -> Result<(ScenarioConfig, Option<Sweep>)> {
    let mut cfg = load(args.config.as_deref())?;
    if let Some(list) = &args.policies {
        cfg.policies = list.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = args.reps {
        cfg.repetitions = reps;
    }
    if args.full {
        cfg.repetitions = FULL_REPETITIONS;
    }
    if let Some(symbols) = args.symbols {
        cfg.symbols = symbols;
    }
    if !args.csi {
        cfg.csi_alpha = 0.0;
    }
    cfg.validate()?;
    let sweep = args.sweep.as_deref().map(parse_sweep).transpose()?;
    if let Some((axis, values)) = &sweep {
        if *axis == SweepAxis::Alpha && !args.csi {
            bail!("an alpha sweep needs --csi");
        }
        for &v in values {
            axis.apply(&cfg, v)?;
        }
    }
    Ok((cfg, sweep))
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_rows(w: &mut impl Write, axis: Option<SweepAxis>, value: Option<f64>, m: &RunMetrics) -> io::Result<usize> {
    let axis = axis.map_or("none", SweepAxis::name);
    let value = value.map_or(String::new(), |v| format!("{v:e}"));
    for p in &m.policies {
        writeln!(
            w,
            "{axis},{value},{},{:e},{:e},{:e},{:e},{},{}",
            p.policy, p.mean_harvest_w, p.mean_harvest_dbuw, p.violation_fraction, p.mean_rho, m.repetitions, m.seed
        )?;
    }
    Ok(m.policies.len())
}

fn run_command(args: RunArgs) -> Result<()> {
    let (cfg, sweep) = resolve(&args)?;
    let config_text = cfg.to_toml_string()?;
    let mut manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        config_sha256: sha256_hex(&config_text),
        config: config_text,
        sweep_axis: sweep.as_ref().map(|(a, _)| a.name().to_string()),
        sweep_values: sweep.as_ref().map_or_else(Vec::new, |(_, v)| v.clone()),
        policies: cfg.policies.iter().map(PolicyKind::to_string).collect(),
        repetitions: cfg.repetitions,
        symbols: cfg.symbols,
        rows: 0,
        partial: false,
        error: None,
    };

    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{HEADER}")?;

    let points: Vec<(Option<SweepAxis>, Option<f64>)> = match &sweep {
        Some((axis, values)) => values.iter().map(|&v| (Some(*axis), Some(v))).collect(),
        None => vec![(None, None)],
    };
    let mut failure = None;
    for (axis, value) in points {
        let point_cfg = match (axis, value) {
            (Some(a), Some(v)) => a.apply(&cfg, v)?,
            _ => cfg.clone(),
        };
        match run(&point_cfg) {
            Ok(metrics) => {
                manifest.rows += write_rows(&mut out, axis, value, &metrics)?;
                out.flush()?;
                if let (Some(a), Some(v)) = (axis, value) {
                    eprintln!("{a}={v}: {:.1} s", metrics.wall_time_s);
                }
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    out.flush()?;

    if let Some(e) = &failure {
        manifest.partial = true;
        manifest.error = Some(e.to_string());
    }
    let manifest_file = manifest_path(&args.out);
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    std::fs::write(&manifest_file, json).with_context(|| format!("writing {}", manifest_file.display()))?;

    match failure {
        Some(e) => Err(e).context("scenario failed; partial results written"),
        None => Ok(()),
    }
}
