//! Commands behind the `crowd-te` binary: synthetic benchmarks, estimation and
//! prediction on label files, and the bounds sweep.
//!
//! Every command is a plain function writing to a caller-supplied writer, so
//! the binary stays a thin argument parser and tests can drive the commands
//! directly.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::aggregation::{
    majority, predict_with_weights, weighted_majority, weights_from_theta, WeightVector,
};
use crate::bounds::{
    chernoff_analytic, concentration_tail_check_with, hard_pair_grid,
    sample_complexity_thresholds_with, verify_chernoff, BoundConstants, BoundReport,
};
use crate::data::{
    binarize, filter_workers, parse_gold, parse_labels, to_task_samples, Dataset, LabelFormat,
    PipelineConfig, RawLabelRecord,
};
use crate::error::{Error, Result};
use crate::model::ReliabilityVector;
use crate::sim::{build_theta, generate_run, InstanceKind, InstanceSpec, RngSeed};
use crate::te::TeState;

pub const DEFAULT_RUNS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Te,
    Majority,
    Oracle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Te, Algorithm::Majority, Algorithm::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Te => "te",
            Algorithm::Majority => "majority",
            Algorithm::Oracle => "oracle",
        }
    }

    fn tie_stream(self) -> u64 {
        match self {
            Algorithm::Te => 1,
            Algorithm::Majority => 2,
            Algorithm::Oracle => 3,
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "te" => Ok(Algorithm::Te),
            "majority" | "maj" => Ok(Algorithm::Majority),
            "oracle" => Ok(Algorithm::Oracle),
            other => Err(Error::InvalidParameter(format!(
                "unknown algorithm {other:?} (expected te, majority or oracle)"
            ))),
        }
    }
}

/// Parses a comma-separated algorithm list, deduplicated in canonical order.
pub fn parse_algorithms(s: &str) -> Result<Vec<Algorithm>> {
    let mut algs = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(Algorithm::from_str)
        .collect::<Result<Vec<_>>>()?;
    algs.sort();
    algs.dedup();
    if algs.is_empty() {
        return Err(Error::InvalidParameter("no algorithms selected".into()));
    }
    Ok(algs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Markdown,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            other => Err(Error::InvalidParameter(format!(
                "unknown format {other:?} (expected csv or markdown)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub instance: InstanceSpec,
    pub runs: usize,
    pub seed: RngSeed,
    pub algorithms: Vec<Algorithm>,
}

impl BenchConfig {
    pub fn new(instance: InstanceSpec) -> Self {
        Self {
            instance,
            runs: DEFAULT_RUNS,
            seed: RngSeed(0),
            algorithms: Algorithm::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidParameter("runs must be at least 1".into()));
        }
        self.instance.validate()?;
        if self.algorithms.contains(&Algorithm::Te) && self.instance.n < 3 {
            return Err(Error::InvalidDimension(format!(
                "TE needs at least 3 workers, got {}",
                self.instance.n
            )));
        }
        Ok(())
    }
}

/// Mean and standard error of a per-run metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std_error: f64,
}

impl Summary {
    /// Summation in index order, so results do not depend on scheduling.
    pub fn of(values: &[f64]) -> Self {
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let std_error = if values.len() < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        };
        Self { mean, std_error }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmResult {
    pub algorithm: Algorithm,
    /// `E ||theta_hat - theta||_inf`; TE only.
    pub estimation_error: Option<Summary>,
    /// `P(G_hat != G)`.
    pub prediction_error: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub label: String,
    pub runs: usize,
    pub results: Vec<AlgorithmResult>,
    pub reference: Option<ReferenceRow>,
    pub wall_time_secs: f64,
}

impl BenchResult {
    pub fn get(&self, algorithm: Algorithm) -> Option<&AlgorithmResult> {
        self.results.iter().find(|r| r.algorithm == algorithm)
    }

    /// Equality ignoring wall time.
    pub fn same_numbers(&self, other: &BenchResult) -> bool {
        self.label == other.label && self.runs == other.runs && self.results == other.results
    }
}

/// Published means for one synthetic instance, used for side-by-side output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub te_estimation: f64,
    pub oracle: f64,
    pub majority: f64,
    pub te_prediction: f64,
}

impl ReferenceRow {
    pub fn prediction(&self, algorithm: Algorithm) -> f64 {
        match algorithm {
            Algorithm::Te => self.te_prediction,
            Algorithm::Majority => self.majority,
            Algorithm::Oracle => self.oracle,
        }
    }
}

/// The six published synthetic rows, `(spec, reference)`.
pub fn published_instances() -> Vec<(InstanceSpec, ReferenceRow)> {
    let row = |te_estimation, oracle, majority, te_prediction| ReferenceRow {
        te_estimation,
        oracle,
        majority,
        te_prediction,
    };
    vec![
        (
            InstanceSpec::half_informative(0.3),
            row(0.134, 0.227, 0.298, 0.250),
        ),
        (
            InstanceSpec::half_informative(0.9),
            row(0.038, 0.004, 0.046, 0.004),
        ),
        (
            InstanceSpec::three_informative(0.55),
            row(0.050, 0.284, 0.441, 0.284),
        ),
        (
            InstanceSpec::three_informative(0.95),
            row(0.039, 0.219, 0.419, 0.219),
        ),
        (
            InstanceSpec::sign_hard(1.0),
            row(0.061, 0.181, 0.472, 0.192),
        ),
        (
            InstanceSpec::sign_hard(50f64.sqrt()),
            row(0.045, 0.126, 0.315, 0.128),
        ),
    ]
}

pub fn reference_for(spec: &InstanceSpec) -> Option<ReferenceRow> {
    published_instances()
        .into_iter()
        .find(|(s, _)| {
            s.kind == spec.kind
                && s.n == spec.n
                && s.t == spec.t
                && s.alpha == spec.alpha
                && (s.a - spec.a).abs() < 1e-12
                && (s.b - spec.b).abs() < 1e-12
        })
        .map(|(_, r)| r)
}

pub fn instance_label(spec: &InstanceSpec) -> String {
    match spec.kind {
        InstanceKind::HalfInformative => format!("(i) a={}", spec.a),
        InstanceKind::ThreeInformative => format!("(ii) a={}", spec.a),
        InstanceKind::SignHard if (spec.b - (spec.n as f64).sqrt()).abs() < 1e-12 => {
            "(iii) b=sqrt(n)".to_string()
        }
        InstanceKind::SignHard => format!("(iii) b={}", spec.b),
        InstanceKind::Explicit => format!("explicit n={}", spec.n),
    }
}

struct RunOutcome {
    estimation: Option<f64>,
    prediction: Vec<f64>,
}

fn bench_one(config: &BenchConfig, run: u64) -> Result<RunOutcome> {
    let run_seed = config.seed.derive(run);
    let data = generate_run(&config.instance, run_seed)?;
    let mut estimation = None;
    let mut prediction = Vec::with_capacity(config.algorithms.len());
    for &alg in &config.algorithms {
        let weights = match alg {
            Algorithm::Te => {
                let state = TeState::from_answers(
                    data.theta.n(),
                    data.samples.iter().map(|s| s.answers.as_slice()),
                )?;
                let theta_hat = state.estimate()?.theta_hat;
                estimation = Some(theta_hat.sup_distance(&data.theta)?);
                weights_from_theta(&theta_hat)
            }
            Algorithm::Majority => WeightVector::uniform(data.theta.n()),
            Algorithm::Oracle => weights_from_theta(&data.theta),
        };
        let mut rng = run_seed.stream(alg.tie_stream());
        prediction.push(predict_with_weights(&data.samples, &weights, &mut rng)?.1);
    }
    Ok(RunOutcome {
        estimation,
        prediction,
    })
}

/// Runs `config.runs` independent replications in parallel and aggregates
/// them in run order.
pub fn run_bench(config: &BenchConfig) -> Result<BenchResult> {
    config.validate()?;
    let start = Instant::now();
    let outcomes = (0..config.runs as u64)
        .into_par_iter()
        .map(|r| bench_one(config, r))
        .collect::<Result<Vec<_>>>()?;
    let results = config
        .algorithms
        .iter()
        .enumerate()
        .map(|(k, &algorithm)| {
            let pred: Vec<f64> = outcomes.iter().map(|o| o.prediction[k]).collect();
            let estimation_error = (algorithm == Algorithm::Te).then(|| {
                let est: Vec<f64> = outcomes.iter().filter_map(|o| o.estimation).collect();
                Summary::of(&est)
            });
            AlgorithmResult {
                algorithm,
                estimation_error,
                prediction_error: Summary::of(&pred),
            }
        })
        .collect();
    Ok(BenchResult {
        label: instance_label(&config.instance),
        runs: config.runs,
        results,
        reference: reference_for(&config.instance),
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

/// Runs and writes one table row per (instance, algorithm).
pub fn cmd_bench<W: Write>(
    configs: &[BenchConfig],
    format: OutputFormat,
    out: W,
) -> Result<Vec<BenchResult>> {
    let results = configs.iter().map(run_bench).collect::<Result<Vec<_>>>()?;
    write_bench_table(&results, format, out)?;
    Ok(results)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.4}"))
}

pub fn write_bench_table<W: Write>(
    results: &[BenchResult],
    format: OutputFormat,
    mut out: W,
) -> Result<()> {
    let header = [
        "instance",
        "algorithm",
        "runs",
        "estimation_error",
        "estimation_se",
        "prediction_error",
        "prediction_se",
        "reference_estimation",
        "reference_prediction",
        "wall_time_s",
    ];
    let mut rows = Vec::new();
    for r in results {
        for a in &r.results {
            let reference_estimation = r
                .reference
                .filter(|_| a.algorithm == Algorithm::Te)
                .map(|x| x.te_estimation);
            rows.push(vec![
                r.label.clone(),
                a.algorithm.name().to_string(),
                r.runs.to_string(),
                fmt_opt(a.estimation_error.map(|s| s.mean)),
                fmt_opt(a.estimation_error.map(|s| s.std_error)),
                format!("{:.4}", a.prediction_error.mean),
                format!("{:.4}", a.prediction_error.std_error),
                fmt_opt(reference_estimation),
                fmt_opt(r.reference.map(|x| x.prediction(a.algorithm))),
                format!("{:.2}", r.wall_time_secs),
            ]);
        }
    }
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(header).map_err(Error::write)?;
            for row in &rows {
                w.write_record(row).map_err(Error::write)?;
            }
            w.flush().map_err(Error::write)?;
        }
        OutputFormat::Markdown => {
            writeln!(out, "| {} |", header.join(" | ")).map_err(Error::write)?;
            writeln!(out, "|{}", "---|".repeat(header.len())).map_err(Error::write)?;
            for row in &rows {
                writeln!(out, "| {} |", row.join(" | ")).map_err(Error::write)?;
            }
        }
    }
    Ok(())
}

/// A label file after binarization, gold attachment and worker filtering.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub duplicates: usize,
    pub dropped_workers: usize,
}

pub fn load_dataset(
    labels_path: &Path,
    gold_path: Option<&Path>,
    config: &PipelineConfig,
) -> Result<LoadedDataset> {
    let parsed = parse_labels(labels_path, LabelFormat::from_path(labels_path))?;
    if parsed.records.is_empty() {
        return Err(Error::Parse {
            path: labels_path.to_path_buf(),
            line: 1,
            message: "no label rows".into(),
        });
    }
    let labels = binarize(&parsed.records, &config.binarization)?;
    let gold = match gold_path {
        None => None,
        Some(path) => {
            let raw: Vec<RawLabelRecord> = parse_gold(path, LabelFormat::from_path(path))?
                .into_iter()
                .map(|(task_id, label)| RawLabelRecord {
                    task_id,
                    worker_id: String::new(),
                    label,
                })
                .collect();
            Some(
                binarize(&raw, &config.binarization)?
                    .into_iter()
                    .map(|b| (b.task_id, b.label))
                    .collect::<Vec<_>>(),
            )
        }
    };
    let full = Dataset::from_labels(&labels, gold.as_deref())?;
    let dataset = filter_workers(&full, config.min_worker_labels);
    if dataset.n() < 3 {
        return Err(Error::NotIdentifiable(dataset.n()));
    }
    Ok(LoadedDataset {
        dropped_workers: full.n() - dataset.n(),
        dataset,
        duplicates: parsed.duplicates,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOutput {
    pub workers: Vec<String>,
    pub theta_hat: ReliabilityVector,
}

/// Estimates reliabilities for a label file and writes
/// `worker,theta_hat,abs_theta,pair_i,pair_j,k_star`.
pub fn cmd_estimate<W: Write>(
    labels_path: &Path,
    config: &PipelineConfig,
    out: W,
) -> Result<EstimateOutput> {
    let loaded = load_dataset(labels_path, None, config)?;
    let ds = &loaded.dataset;
    let samples = to_task_samples(ds);
    let state = TeState::from_answers(ds.n(), samples.iter().map(|s| s.answers.as_slice()))?;
    let est = state.estimate()?;

    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "worker",
        "theta_hat",
        "abs_theta",
        "pair_i",
        "pair_j",
        "k_star",
    ])
    .map_err(Error::write)?;
    for (k, id) in ds.workers.iter().enumerate() {
        let (i, j) = est.pairs[k];
        w.write_record([
            id.as_str(),
            &format!("{:?}", est.theta_hat[k]),
            &format!("{:?}", est.abs_theta[k]),
            &ds.workers[i],
            &ds.workers[j],
            if k == est.k_star { "true" } else { "false" },
        ])
        .map_err(Error::write)?;
    }
    w.flush().map_err(Error::write)?;
    Ok(EstimateOutput {
        workers: ds.workers.clone(),
        theta_hat: est.theta_hat,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictOutput {
    pub tasks: usize,
    pub gold_tasks: usize,
    pub te_error: Option<f64>,
    pub majority_error: Option<f64>,
    /// Tasks whose TE prediction came from a coin flip.
    pub te_ties: usize,
    pub majority_ties: usize,
}

/// TE plug-in and majority predictions for every task of a label file.
///
/// Writes `task,te,te_tie,majority,majority_tie,gold`; error rates are over
/// the tasks that have a gold label and are `None` without a gold file.
pub fn cmd_predict<W: Write>(
    labels_path: &Path,
    gold_path: Option<&Path>,
    config: &PipelineConfig,
    seed: RngSeed,
    out: W,
) -> Result<PredictOutput> {
    let loaded = load_dataset(labels_path, gold_path, config)?;
    let ds = &loaded.dataset;
    let samples = to_task_samples(ds);
    let state = TeState::from_answers(ds.n(), samples.iter().map(|s| s.answers.as_slice()))?;
    let te_weights = weights_from_theta(&state.estimate()?.theta_hat);

    let mut te_rng = seed.stream(Algorithm::Te.tie_stream());
    let mut maj_rng = seed.stream(Algorithm::Majority.tie_stream());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["task", "te", "te_tie", "majority", "majority_tie", "gold"])
        .map_err(Error::write)?;
    let (mut te_wrong, mut maj_wrong, mut gold_tasks) = (0usize, 0usize, 0usize);
    let (mut te_ties, mut majority_ties) = (0, 0);
    for (task, s) in ds.tasks.iter().zip(&samples) {
        let te = weighted_majority(&s.answers, &te_weights, &mut te_rng)?;
        let maj = majority(&s.answers, &mut maj_rng);
        te_ties += usize::from(te.tie_broken);
        majority_ties += usize::from(maj.tie_broken);
        if let Some(g) = s.gold {
            gold_tasks += 1;
            te_wrong += usize::from(te.value != g);
            maj_wrong += usize::from(maj.value != g);
        }
        w.write_record([
            task.as_str(),
            &te.value.to_string(),
            &te.tie_broken.to_string(),
            &maj.value.to_string(),
            &maj.tie_broken.to_string(),
            &s.gold.map_or_else(String::new, |g| g.to_string()),
        ])
        .map_err(Error::write)?;
    }
    w.flush().map_err(Error::write)?;
    let rate = |wrong: usize| {
        (gold_path.is_some() && gold_tasks > 0).then(|| wrong as f64 / gold_tasks as f64)
    };
    Ok(PredictOutput {
        tasks: ds.tasks.len(),
        gold_tasks,
        te_error: rate(te_wrong),
        majority_error: rate(maj_wrong),
        te_ties,
        majority_ties,
    })
}

/// What the `bounds` command sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsSweep {
    pub constants: BoundConstants,
    pub hard_pairs: bool,
    /// `(a, b, alpha, epsilon, delta, n)` points for the threshold rows.
    pub thresholds: Vec<(f64, f64, f64, f64, f64, usize)>,
    /// Monte Carlo trials for the concentration check; 0 skips it.
    pub concentration_trials: usize,
    /// Include the analytic and Monte Carlo Chernoff rows.
    pub chernoff: bool,
    pub seed: RngSeed,
}

impl Default for BoundsSweep {
    fn default() -> Self {
        Self {
            constants: BoundConstants::default(),
            hard_pairs: true,
            thresholds: vec![
                (0.5, 1.0, 0.25, 0.1, 0.1, 50),
                (0.5, 1.0, 0.25, 0.1, 0.25, 50),
                (0.9, 1.0, 0.25, 0.025, 0.05, 50),
                (0.3, 50f64.sqrt(), 0.25, 0.05, 0.1, 50),
            ],
            concentration_trials: 0,
            chernoff: false,
            seed: RngSeed(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsOutcome {
    pub reports: Vec<BoundReport>,
    /// Non-vacuous rows whose bound failed.
    pub violations: usize,
}

pub fn cmd_bounds<W: Write>(sweep: &BoundsSweep, out: W) -> Result<BoundsOutcome> {
    let c = &sweep.constants;
    let mut reports = Vec::new();
    if sweep.hard_pairs {
        reports.extend(hard_pair_grid(c)?);
    }
    for &(a, b, alpha, epsilon, delta, n) in &sweep.thresholds {
        let th = sample_complexity_thresholds_with(c, a, b, alpha, epsilon, delta, n)?;
        for (kind, lower, upper) in [
            ("threshold-abs", th.t1, th.t1_prime),
            ("threshold-sign", th.t2, th.t2_prime),
        ] {
            reports.push(BoundReport {
                kind: kind.into(),
                a: Some(a),
                b: Some(b),
                alpha: Some(alpha),
                epsilon: Some(epsilon),
                n: Some(n),
                t: None,
                delta: Some(delta),
                lhs: lower,
                rhs: upper,
                satisfied: lower <= upper,
                vacuous: false,
            });
        }
    }
    if sweep.concentration_trials > 0 {
        let spec = InstanceSpec {
            n: 10,
            t: 500,
            ..InstanceSpec::half_informative(0.9)
        };
        let theta = build_theta(&spec)?;
        let r = concentration_tail_check_with(
            c,
            &theta,
            spec.alpha,
            spec.t as u64,
            0.3,
            sweep.concentration_trials,
            sweep.seed,
        )?;
        reports.push(r.sup_norm);
        reports.push(r.row_sum);
    }
    if sweep.chernoff {
        for k in 1..=49 {
            reports.extend(chernoff_analytic(k as f64 / 100.0)?);
        }
        for (i, (mu, mu_prime)) in [(0.2, 0.35), (0.3, 0.15), (0.1, 0.2)]
            .into_iter()
            .enumerate()
        {
            reports.push(verify_chernoff(
                mu,
                mu_prime,
                100,
                4000,
                sweep.seed.derive(i as u64),
            )?);
        }
    }
    let violations = reports
        .iter()
        .filter(|r| !r.satisfied && !r.vacuous)
        .count();

    let mut w = csv::Writer::from_writer(out);
    for r in &reports {
        w.serialize(r).map_err(Error::write)?;
    }
    w.flush().map_err(Error::write)?;
    Ok(BoundsOutcome {
        reports,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_parsing() {
        assert_eq!(
            parse_algorithms("oracle,te,maj,te").unwrap(),
            vec![Algorithm::Te, Algorithm::Majority, Algorithm::Oracle]
        );
        assert!(parse_algorithms("kos").is_err());
        assert!(parse_algorithms("").is_err());
        assert_eq!(
            "md".parse::<OutputFormat>().unwrap(),
            OutputFormat::Markdown
        );
    }

    #[test]
    fn summary_statistics() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(Summary::of(&[0.3]).std_error, 0.0);
    }

    #[test]
    fn single_run_is_deterministic() {
        let mut config = BenchConfig::new(InstanceSpec {
            t: 300,
            ..InstanceSpec::half_informative(0.9)
        });
        config.runs = 1;
        config.seed = RngSeed(17);
        let a = run_bench(&config).unwrap();
        let b = run_bench(&config).unwrap();
        assert!(a.same_numbers(&b));
        assert!(a.reference.is_none());
    }

    #[test]
    fn reference_rows_match_published_instances() {
        assert_eq!(published_instances().len(), 6);
        let r = reference_for(&InstanceSpec::sign_hard(50f64.sqrt())).unwrap();
        assert_eq!(r.oracle, 0.126);
        assert_eq!(
            instance_label(&InstanceSpec::sign_hard(50f64.sqrt())),
            "(iii) b=sqrt(n)"
        );
        assert!(reference_for(&InstanceSpec {
            t: 10,
            ..InstanceSpec::sign_hard(1.0)
        })
        .is_none());
    }

    #[test]
    fn invalid_bench_config() {
        let mut config = BenchConfig::new(InstanceSpec::half_informative(0.9));
        config.runs = 0;
        assert!(run_bench(&config).is_err());
    }

    #[test]
    fn markdown_table_has_one_row_per_algorithm() {
        let mut config = BenchConfig::new(InstanceSpec {
            t: 100,
            n: 8,
            ..InstanceSpec::half_informative(0.9)
        });
        config.runs = 3;
        let mut buf = Vec::new();
        cmd_bench(&[config], OutputFormat::Markdown, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2 + 3);
        assert!(text.contains("| (i) a=0.9 | te |"));
    }

    #[test]
    fn threshold_rows_in_default_sweep() {
        let sweep = BoundsSweep {
            hard_pairs: false,
            ..BoundsSweep::default()
        };
        let mut buf = Vec::new();
        let out = cmd_bounds(&sweep, &mut buf).unwrap();
        assert_eq!(out.violations, 0);
        let zero = out
            .reports
            .iter()
            .find(|r| r.kind == "threshold-abs" && r.delta == Some(0.25))
            .unwrap();
        assert_eq!(zero.lhs, 0.0);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("kind,a,b,alpha,epsilon,n,t,delta,lhs,rhs,satisfied,vacuous"));
    }
}
