use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crowd_te::bench::{
    cmd_bench, cmd_bounds, cmd_estimate, cmd_predict, parse_algorithms, BenchConfig, BoundsSweep,
    OutputFormat,
};
use crowd_te::data::{write_run, BinarizationConfig, PipelineConfig, DEFAULT_MIN_WORKER_LABELS};
use crowd_te::sim::{generate_run, InstanceKind, InstanceSpec, RngSeed};
use crowd_te::{Error, Result};

const EXIT_USAGE: u8 = 1;
const EXIT_VIOLATION: u8 = 2;

/// Triangular estimation of crowd-worker reliabilities.
#[derive(Parser, Debug)]
#[command(name = "crowd-te", version)]
struct Cli {
    /// TOML file whose keys mirror the long flags; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo benchmark on the synthetic instances.
    Bench {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        runs: Option<usize>,
        /// Comma-separated subset of te, majority, oracle.
        #[arg(long)]
        algorithms: Option<String>,
        /// csv or markdown.
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Estimate worker reliabilities from a `task,worker,label` file.
    Estimate {
        labels: PathBuf,
        #[arg(long)]
        min_worker_labels: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Predict task labels with the TE plug-in and majority vote.
    Predict {
        labels: PathBuf,
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long)]
        min_worker_labels: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sweep the divergence, sample complexity and concentration bounds.
    Bounds {
        /// Override the magnitude-hard KL constant (512 by default).
        #[arg(long)]
        hard_pair_constant: Option<f64>,
        /// Monte Carlo trials for the concentration rows; 0 skips them.
        #[arg(long)]
        concentration_trials: Option<usize>,
        /// Include the Chernoff rows.
        #[arg(long)]
        chernoff: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write one synthetic run as a label file and an optional gold file.
    Simulate {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        gold: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct InstanceArgs {
    /// i, ii, iii, or all (bench only).
    #[arg(long)]
    instance: Option<String>,
    #[arg(long)]
    a: Option<f64>,
    /// A number, or `sqrt-n`.
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    instance: Option<String>,
    a: Option<f64>,
    b: Option<toml::Value>,
    n: Option<usize>,
    t: Option<usize>,
    alpha: Option<f64>,
    runs: Option<usize>,
    seed: Option<u64>,
    algorithms: Option<String>,
    format: Option<String>,
    min_worker_labels: Option<usize>,
    output: Option<PathBuf>,
    gold: Option<PathBuf>,
    positive: Option<Vec<String>>,
    negative: Option<Vec<String>>,
    hard_pair_constant: Option<f64>,
    concentration_trials: Option<usize>,
    chernoff: Option<bool>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn b(&self) -> Result<Option<String>> {
        match &self.b {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(toml::Value::Float(f)) => Ok(Some(f.to_string())),
            Some(toml::Value::Integer(i)) => Ok(Some(i.to_string())),
            Some(other) => Err(Error::Config(format!(
                "b must be a number or \"sqrt-n\", got {other}"
            ))),
        }
    }

    fn pipeline(&self, min_worker_labels: Option<usize>) -> Result<PipelineConfig> {
        let binarization = match (&self.positive, &self.negative) {
            (None, None) => BinarizationConfig::signed(),
            (Some(p), Some(n)) => BinarizationConfig::new(p.clone(), n.clone())?,
            _ => {
                return Err(Error::Config(
                    "positive and negative label sets must be given together".into(),
                ))
            }
        };
        Ok(PipelineConfig {
            binarization,
            min_worker_labels: min_worker_labels
                .or(self.min_worker_labels)
                .unwrap_or(DEFAULT_MIN_WORKER_LABELS),
        })
    }
}

fn parse_b(s: &str, n: usize) -> Result<f64> {
    match s {
        "sqrt-n" | "sqrt(n)" => Ok((n as f64).sqrt()),
        _ => s
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("b={s:?} is not a number or sqrt-n"))),
    }
}

/// Instances selected by the flags; `all` expands to the published rows.
fn instances(args: &InstanceArgs, file: &FileConfig, allow_all: bool) -> Result<Vec<InstanceSpec>> {
    let which = args
        .instance
        .clone()
        .or_else(|| file.instance.clone())
        .unwrap_or_else(|| "i".into());
    if which == "all" {
        if !allow_all {
            return Err(Error::InvalidParameter(
                "--instance all is only valid for bench".into(),
            ));
        }
        return Ok(crowd_te::bench::published_instances()
            .into_iter()
            .map(|(spec, _)| spec)
            .collect());
    }
    let kind: InstanceKind = which.parse()?;
    let mut spec = match kind {
        InstanceKind::HalfInformative => InstanceSpec::half_informative(0.9),
        InstanceKind::ThreeInformative => InstanceSpec::three_informative(0.95),
        InstanceKind::SignHard => InstanceSpec::sign_hard(1.0),
        InstanceKind::Explicit => {
            return Err(Error::InvalidParameter(
                "explicit instances are only available through the library".into(),
            ))
        }
    };
    if let Some(n) = args.n.or(file.n) {
        spec.n = n;
    }
    if let Some(t) = args.t.or(file.t) {
        spec.t = t;
    }
    if let Some(alpha) = args.alpha.or(file.alpha) {
        spec.alpha = alpha;
    }
    if let Some(a) = args.a.or(file.a) {
        spec.a = a;
    }
    if let Some(b) = args.b.clone().or(file.b()?) {
        spec.b = parse_b(&b, spec.n)?;
    }
    spec.validate()?;
    Ok(vec![spec])
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        None => Box::new(BufWriter::new(io::stdout().lock())),
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })?)),
    })
}

fn run(cli: Cli) -> Result<u8> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let seed = |flag: Option<u64>| RngSeed(flag.or(file.seed).unwrap_or(0));
    match cli.command {
        Command::Bench {
            instance,
            runs,
            algorithms,
            format,
            output,
        } => {
            let algorithms = match algorithms.or_else(|| file.algorithms.clone()) {
                Some(s) => parse_algorithms(&s)?,
                None => crowd_te::bench::Algorithm::ALL.to_vec(),
            };
            let format: OutputFormat = format
                .or_else(|| file.format.clone())
                .map_or(Ok(OutputFormat::Csv), |f| f.parse())?;
            let configs: Vec<BenchConfig> = instances(&instance, &file, true)?
                .into_iter()
                .map(|spec| BenchConfig {
                    runs: runs.or(file.runs).unwrap_or(crowd_te::bench::DEFAULT_RUNS),
                    seed: seed(instance.seed),
                    algorithms: algorithms.clone(),
                    ..BenchConfig::new(spec)
                })
                .collect();
            for c in &configs {
                c.validate()?;
            }
            let out = open_output(output.as_deref().or(file.output.as_deref()))?;
            cmd_bench(&configs, format, out)?;
        }
        Command::Estimate {
            labels,
            min_worker_labels,
            output,
        } => {
            let config = file.pipeline(min_worker_labels)?;
            let out = open_output(output.as_deref().or(file.output.as_deref()))?;
            cmd_estimate(&labels, &config, out)?;
        }
        Command::Predict {
            labels,
            gold,
            min_worker_labels,
            seed: seed_flag,
            output,
        } => {
            let config = file.pipeline(min_worker_labels)?;
            let out = open_output(output.as_deref().or(file.output.as_deref()))?;
            let gold = gold.or_else(|| file.gold.clone());
            let result = cmd_predict(&labels, gold.as_deref(), &config, seed(seed_flag), out)?;
            if let (Some(te), Some(maj)) = (result.te_error, result.majority_error) {
                eprintln!(
                    "{} gold tasks: te error {te:.4}, majority error {maj:.4}",
                    result.gold_tasks
                );
            }
        }
        Command::Bounds {
            hard_pair_constant,
            concentration_trials,
            chernoff,
            seed: seed_flag,
            output,
        } => {
            let mut sweep = BoundsSweep {
                concentration_trials: concentration_trials
                    .or(file.concentration_trials)
                    .unwrap_or(0),
                chernoff: chernoff || file.chernoff.unwrap_or(false),
                seed: seed(seed_flag),
                ..BoundsSweep::default()
            };
            if let Some(c) = hard_pair_constant.or(file.hard_pair_constant) {
                sweep.constants.abs_hard = c;
            }
            let out = open_output(output.as_deref().or(file.output.as_deref()))?;
            let outcome = cmd_bounds(&sweep, out)?;
            if outcome.violations > 0 {
                eprintln!("{} bound violation(s)", outcome.violations);
                return Ok(EXIT_VIOLATION);
            }
        }
        Command::Simulate {
            instance,
            output,
            gold,
        } => {
            let spec = instances(&instance, &file, false)?.remove(0);
            let run = generate_run(&spec, seed(instance.seed))?;
            let labels = open_output(output.as_deref().or(file.output.as_deref()))?;
            let gold = match gold.or_else(|| file.gold.clone()) {
                None => None,
                Some(p) => Some(open_output(Some(&p))?),
            };
            write_run(&run, labels, gold)?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
