//! Ingestion of real crowdsourcing label files.
//!
//! The canonical label file is UTF-8 CSV (or TSV) with header `task,worker,label`;
//! gold files use `task,label`. Labels are free-form strings mapped to ±1 by a
//! [`BinarizationConfig`]. Workers are indexed densely in lexicographic order
//! of their ids, tasks in order of first appearance.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::sim::Run;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelFormat {
    #[default]
    Csv,
    Tsv,
}

impl LabelFormat {
    fn delimiter(self) -> u8 {
        match self {
            LabelFormat::Csv => b',',
            LabelFormat::Tsv => b'\t',
        }
    }

    /// `.tsv` files are tab-separated, everything else comma-separated.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => LabelFormat::Tsv,
            _ => LabelFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawLabelRecord {
    pub task_id: String,
    pub worker_id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedLabels {
    pub records: Vec<RawLabelRecord>,
    /// Rows that repeated an earlier `(task, worker)` pair and replaced it.
    pub duplicates: usize,
}

fn read_rows(path: &Path, format: LabelFormat, header: &[&str]) -> Result<Vec<(u64, Vec<String>)>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter())
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let found: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    if found != header {
        return Err(parse_err(
            1,
            format!("expected header {:?}, found {found:?}", header.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        if let Some(col) = record.iter().position(str::is_empty) {
            return Err(parse_err(line, format!("empty {} field", header[col])));
        }
        rows.push((line, record.iter().map(str::to_owned).collect()));
    }
    Ok(rows)
}

/// Reads a `task,worker,label` file. A repeated `(task, worker)` pair keeps
/// the position of its first row and the label of its last.
pub fn parse_labels(path: impl AsRef<Path>, format: LabelFormat) -> Result<ParsedLabels> {
    let rows = read_rows(path.as_ref(), format, &["task", "worker", "label"])?;
    let mut records: Vec<RawLabelRecord> = Vec::with_capacity(rows.len());
    let mut seen: HashMap<(String, String), usize> = HashMap::new();
    let mut duplicates = 0;
    for (_, mut f) in rows {
        let label = f.pop().expect("three fields");
        let worker_id = f.pop().expect("three fields");
        let task_id = f.pop().expect("three fields");
        match seen.get(&(task_id.clone(), worker_id.clone())) {
            Some(&at) => {
                records[at].label = label;
                duplicates += 1;
            }
            None => {
                seen.insert((task_id.clone(), worker_id.clone()), records.len());
                records.push(RawLabelRecord {
                    task_id,
                    worker_id,
                    label,
                });
            }
        }
    }
    Ok(ParsedLabels {
        records,
        duplicates,
    })
}

/// Reads a `task,label` gold file.
pub fn parse_gold(path: impl AsRef<Path>, format: LabelFormat) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let rows = read_rows(path, format, &["task", "label"])?;
    let mut seen = HashMap::new();
    let mut gold = Vec::with_capacity(rows.len());
    for (line, mut f) in rows {
        let label = f.pop().expect("two fields");
        let task = f.pop().expect("two fields");
        if let Some(first) = seen.insert(task.clone(), line) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("task {task:?} already has a gold label on line {first}"),
            });
        }
        gold.push((task, label));
    }
    Ok(gold)
}

/// Partition of label values into the `+1` and `-1` classes.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct BinarizationConfig {
    pub positive: BTreeSet<String>,
    pub negative: BTreeSet<String>,
}

impl BinarizationConfig {
    pub fn new<P, N, S>(positive: P, negative: N) -> Result<Self>
    where
        P: IntoIterator<Item = S>,
        N: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let config = Self {
            positive: positive.into_iter().map(Into::into).collect(),
            negative: negative.into_iter().map(Into::into).collect(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let overlap: Vec<&String> = self.positive.intersection(&self.negative).collect();
        if !overlap.is_empty() {
            return Err(Error::Config(format!(
                "labels {overlap:?} are in both the positive and negative sets"
            )));
        }
        Ok(())
    }

    /// `1`/`+1` against `-1`, the encoding written by the simulator.
    pub fn signed() -> Self {
        Self::new(["1", "+1"], ["-1"]).expect("disjoint")
    }

    pub fn map(&self, label: &str) -> Option<i8> {
        if self.positive.contains(label) {
            Some(1)
        } else if self.negative.contains(label) {
            Some(-1)
        } else {
            None
        }
    }
}

impl Default for BinarizationConfig {
    fn default() -> Self {
        Self::signed()
    }
}

/// Settings of the real-data pipeline, loadable from TOML:
///
/// ```toml
/// positive = ["4", "5"]
/// negative = ["1", "2", "3"]
/// min_worker_labels = 10
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct PipelineConfig {
    #[serde(flatten)]
    pub binarization: BinarizationConfig,
    #[serde(default = "default_min_labels")]
    pub min_worker_labels: usize,
}

fn default_min_labels() -> usize {
    DEFAULT_MIN_WORKER_LABELS
}

pub const DEFAULT_MIN_WORKER_LABELS: usize = 10;

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            binarization: BinarizationConfig::default(),
            min_worker_labels: DEFAULT_MIN_WORKER_LABELS,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.binarization.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryLabel {
    pub task_id: String,
    pub worker_id: String,
    pub label: i8,
}

/// Maps every label through `config`; fails listing all unmapped values.
pub fn binarize(
    records: &[RawLabelRecord],
    config: &BinarizationConfig,
) -> Result<Vec<BinaryLabel>> {
    let mut unmapped = BTreeSet::new();
    let out: Vec<BinaryLabel> = records
        .iter()
        .filter_map(|r| match config.map(&r.label) {
            Some(label) => Some(BinaryLabel {
                task_id: r.task_id.clone(),
                worker_id: r.worker_id.clone(),
                label,
            }),
            None => {
                unmapped.insert(r.label.clone());
                None
            }
        })
        .collect();
    if !unmapped.is_empty() {
        return Err(Error::UnmappedLabels(unmapped.into_iter().collect()));
    }
    Ok(out)
}

/// Sparse task x worker label matrix with optional gold labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub workers: Vec<String>,
    pub tasks: Vec<String>,
    /// Per task, `(worker index, label)` sorted by worker index.
    pub entries: Vec<Vec<(usize, i8)>>,
    /// Per task gold label, when a gold file was supplied.
    pub gold: Option<Vec<Option<i8>>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetStats {
    pub num_tasks: usize,
    pub num_workers: usize,
    pub num_labels: usize,
    /// `num_labels / (num_tasks * num_workers)`, the model's answer probability.
    pub density: f64,
    /// `num_labels / num_workers`, tasks labelled per worker.
    pub worker_degree: f64,
}

impl DatasetStats {
    pub fn from_counts(num_tasks: usize, num_workers: usize, num_labels: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        Self {
            num_tasks,
            num_workers,
            num_labels,
            density: ratio(num_labels, num_tasks * num_workers),
            worker_degree: ratio(num_labels, num_workers),
        }
    }

    /// Recomputes the statistics from dense answer vectors.
    pub fn from_answers(samples: &[TaskAnswers]) -> Self {
        let num_workers = samples.first().map_or(0, |s| s.answers.len());
        let num_labels = samples
            .iter()
            .map(|s| s.answers.iter().filter(|&&x| x != 0).count())
            .sum();
        Self::from_counts(samples.len(), num_workers, num_labels)
    }
}

impl Dataset {
    pub fn from_labels(labels: &[BinaryLabel], gold: Option<&[(String, i8)]>) -> Result<Self> {
        let workers: Vec<String> = labels
            .iter()
            .map(|l| l.worker_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let worker_index: HashMap<&str, usize> = workers
            .iter()
            .enumerate()
            .map(|(i, w)| (w.as_str(), i))
            .collect();

        let mut tasks = Vec::new();
        let mut task_index: HashMap<String, usize> = HashMap::new();
        let mut entries: Vec<Vec<(usize, i8)>> = Vec::new();
        for l in labels {
            let t = *task_index.entry(l.task_id.clone()).or_insert_with(|| {
                tasks.push(l.task_id.clone());
                entries.push(Vec::new());
                tasks.len() - 1
            });
            entries[t].push((worker_index[l.worker_id.as_str()], l.label));
        }
        for row in &mut entries {
            row.sort_unstable_by_key(|&(w, _)| w);
        }

        let gold = match gold {
            None => None,
            Some(gold) => {
                let mut per_task = vec![None; tasks.len()];
                let mut unknown = Vec::new();
                for (task, label) in gold {
                    match task_index.get(task) {
                        Some(&t) => per_task[t] = Some(*label),
                        None => unknown.push(task.clone()),
                    }
                }
                if !unknown.is_empty() {
                    return Err(Error::UnknownGoldTasks(unknown));
                }
                Some(per_task)
            }
        };
        Ok(Self {
            workers,
            tasks,
            entries,
            gold,
        })
    }

    pub fn n(&self) -> usize {
        self.workers.len()
    }

    pub fn worker_label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n()];
        for row in &self.entries {
            for &(w, _) in row {
                counts[w] += 1;
            }
        }
        counts
    }
}

/// Drops workers with fewer than `min_labels` labels and reindexes the rest,
/// keeping their relative order. Tasks left without labels are kept.
pub fn filter_workers(dataset: &Dataset, min_labels: usize) -> Dataset {
    let counts = dataset.worker_label_counts();
    let mut remap = vec![None; dataset.n()];
    let mut workers = Vec::new();
    for (w, id) in dataset.workers.iter().enumerate() {
        if counts[w] >= min_labels {
            remap[w] = Some(workers.len());
            workers.push(id.clone());
        }
    }
    let entries = dataset
        .entries
        .iter()
        .map(|row| {
            row.iter()
                .filter_map(|&(w, l)| remap[w].map(|nw| (nw, l)))
                .collect()
        })
        .collect();
    Dataset {
        workers,
        tasks: dataset.tasks.clone(),
        entries,
        gold: dataset.gold.clone(),
    }
}

/// Dense answers for one task, `0` where the worker gave no label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskAnswers {
    pub answers: Vec<i8>,
    pub gold: Option<i8>,
}

pub fn to_task_samples(dataset: &Dataset) -> Vec<TaskAnswers> {
    let n = dataset.n();
    dataset
        .entries
        .iter()
        .enumerate()
        .map(|(t, row)| {
            let mut answers = vec![0; n];
            for &(w, l) in row {
                answers[w] = l;
            }
            TaskAnswers {
                answers,
                gold: dataset.gold.as_ref().and_then(|g| g[t]),
            }
        })
        .collect()
}

pub fn summarize(dataset: &Dataset) -> DatasetStats {
    DatasetStats::from_counts(
        dataset.tasks.len(),
        dataset.n(),
        dataset.entries.iter().map(Vec::len).sum(),
    )
}

fn padded(prefix: char, i: usize, count: usize) -> String {
    let width = count.saturating_sub(1).to_string().len();
    format!("{prefix}{i:0width$}")
}

/// Worker id used when serialising simulated runs; zero-padded so that
/// lexicographic order matches the simulator's worker order.
pub fn simulated_worker_id(i: usize, n: usize) -> String {
    padded('w', i, n)
}

pub fn simulated_task_id(t: usize, count: usize) -> String {
    padded('t', t, count)
}

/// Writes a simulated run as a canonical label file and gold file. Tasks that
/// no worker answered have no rows in the label file and are left out of the
/// gold file too.
pub fn write_run<L: Write, G: Write>(run: &Run, labels: L, gold: Option<G>) -> Result<()> {
    let n = run.theta.n();
    let count = run.samples.len();
    let mut w = csv::Writer::from_writer(labels);
    w.write_record(["task", "worker", "label"])
        .map_err(Error::write)?;
    for (t, s) in run.samples.iter().enumerate() {
        let task = simulated_task_id(t, count);
        for (i, &x) in s.answers.iter().enumerate() {
            if x != 0 {
                w.write_record([task.as_str(), &simulated_worker_id(i, n), &x.to_string()])
                    .map_err(Error::write)?;
            }
        }
    }
    w.flush().map_err(Error::write)?;
    if let Some(gold) = gold {
        let mut g = csv::Writer::from_writer(gold);
        g.write_record(["task", "label"]).map_err(Error::write)?;
        for (t, s) in run.samples.iter().enumerate() {
            if s.answers.iter().all(|&x| x == 0) {
                continue;
            }
            g.write_record([simulated_task_id(t, count), s.ground_truth.to_string()])
                .map_err(Error::write)?;
        }
        g.flush().map_err(Error::write)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn temp_file(name: &str, contents: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("crowd-te-data-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    fn labels(rows: &[(&str, &str, i8)]) -> Vec<BinaryLabel> {
        rows.iter()
            .map(|&(t, w, l)| BinaryLabel {
                task_id: t.into(),
                worker_id: w.into(),
                label: l,
            })
            .collect()
    }

    #[test]
    fn parse_well_formed_and_empty() {
        let p = temp_file(
            "ok.csv",
            "task,worker,label\nt1,w1,1\nt1,w2,0\n\"t,2\",w1,1\n",
        );
        let parsed = parse_labels(&p, LabelFormat::Csv).unwrap();
        assert_eq!(parsed.records.len(), 3);
        assert_eq!(parsed.records[2].task_id, "t,2");
        assert_eq!(parsed.duplicates, 0);

        let p = temp_file("empty.csv", "task,worker,label\n");
        assert!(parse_labels(&p, LabelFormat::Csv)
            .unwrap()
            .records
            .is_empty());

        let p = temp_file("ok.tsv", "task\tworker\tlabel\nt1\tw1\t1\n");
        assert_eq!(
            parse_labels(&p, LabelFormat::from_path(&p))
                .unwrap()
                .records
                .len(),
            1
        );
    }

    #[test]
    fn parse_errors_name_the_line() {
        let p = temp_file("bad.csv", "task,worker,label\nt1,w1,1\nt2,,1\n");
        match parse_labels(&p, LabelFormat::Csv) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("worker"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let p = temp_file("short.csv", "task,worker,label\nt1,w1\n");
        assert!(matches!(
            parse_labels(&p, LabelFormat::Csv),
            Err(Error::Parse { line: 2, .. })
        ));
        let p = temp_file("hdr.csv", "a,b,c\n");
        assert!(matches!(
            parse_labels(&p, LabelFormat::Csv),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_labels("/nonexistent/labels.csv", LabelFormat::Csv),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn duplicates_keep_last() {
        let p = temp_file("dup.csv", "task,worker,label\nt1,w1,1\nt2,w1,1\nt1,w1,-1\n");
        let parsed = parse_labels(&p, LabelFormat::Csv).unwrap();
        assert_eq!(parsed.duplicates, 1);
        assert_eq!(parsed.records.len(), 2);
        assert_eq!(parsed.records[0].label, "-1");
    }

    #[test]
    fn binarize_examples() {
        let web = BinarizationConfig::new(["4", "5"], ["1", "2", "3"]).unwrap();
        let rec = |l: &str| RawLabelRecord {
            task_id: "t".into(),
            worker_id: "w".into(),
            label: l.into(),
        };
        assert_eq!(binarize(&[rec("2")], &web).unwrap()[0].label, -1);
        assert_eq!(binarize(&[rec("5")], &web).unwrap()[0].label, 1);
        match binarize(&[rec("9"), rec("7"), rec("9")], &web) {
            Err(Error::UnmappedLabels(v)) => assert_eq!(v, vec!["7", "9"]),
            other => panic!("unexpected {other:?}"),
        }

        let bird = BinarizationConfig::new(["1"], ["0"]).unwrap();
        let out = binarize(&[rec("0"), rec("1")], &bird).unwrap();
        assert_eq!(out.iter().map(|b| b.label).collect::<Vec<_>>(), vec![-1, 1]);

        assert!(BinarizationConfig::new(["1"], ["1"]).is_err());
    }

    #[test]
    fn pipeline_config_from_toml() {
        let c =
            PipelineConfig::from_toml("positive = [\"4\", \"5\"]\nnegative = [\"1\"]\n").unwrap();
        assert_eq!(c.min_worker_labels, 10);
        assert_eq!(c.binarization.map("4"), Some(1));
        let c = PipelineConfig::from_toml(
            "positive = [\"a\"]\nnegative = [\"b\"]\nmin_worker_labels = 3\n",
        )
        .unwrap();
        assert_eq!(c.min_worker_labels, 3);
        assert!(PipelineConfig::from_toml("positive = [\"a\"]\nnegative = [\"a\"]\n").is_err());
        assert!(PipelineConfig::from_toml("positive = 1").is_err());
    }

    #[test]
    fn filter_threshold_semantics() {
        let mut rows = Vec::new();
        let tasks: Vec<String> = (0..10).map(|t| format!("t{t}")).collect();
        for t in &tasks[..9] {
            rows.push((t.as_str(), "nine", 1));
        }
        for t in &tasks {
            rows.push((t.as_str(), "ten", -1));
        }
        let ds = Dataset::from_labels(&labels(&rows), None).unwrap();
        let filtered = filter_workers(&ds, 10);
        assert_eq!(filtered.workers, vec!["ten"]);
        assert_eq!(filtered.tasks.len(), 10);
        assert!(filtered.entries.iter().all(|r| r == &vec![(0, -1)]));
        assert_eq!(filter_workers(&filtered, 10), filtered);
    }

    #[test]
    fn filter_keeps_empty_tasks() {
        let ds = Dataset::from_labels(
            &labels(&[("a", "w1", 1), ("b", "w2", 1), ("b", "w3", -1)]),
            None,
        )
        .unwrap();
        let f = filter_workers(&ds, 1);
        assert_eq!(f, ds);
        let f = filter_workers(&ds, 2);
        assert_eq!(f.n(), 0);
        assert_eq!(f.tasks, vec!["a", "b"]);
        assert!(f.entries.iter().all(Vec::is_empty));
    }

    #[test]
    fn task_samples_fill_missing_with_zero() {
        let ds = Dataset::from_labels(
            &labels(&[("t", "w1", 1), ("t", "w3", -1), ("u", "w2", 1)]),
            Some(&[("t".to_string(), 1)]),
        )
        .unwrap();
        let samples = to_task_samples(&ds);
        assert_eq!(samples[0].answers, vec![1, 0, -1]);
        assert_eq!(samples[0].gold, Some(1));
        assert_eq!(samples[1].gold, None);
        assert_eq!(DatasetStats::from_answers(&samples), summarize(&ds));
    }

    #[test]
    fn unknown_gold_tasks_are_listed() {
        let err = Dataset::from_labels(
            &labels(&[("t", "w1", 1)]),
            Some(&[("t".to_string(), 1), ("zz".to_string(), -1)]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnknownGoldTasks(v) if v == vec!["zz"]));
    }

    #[test]
    fn summarize_matches_table_shapes() {
        let bird = DatasetStats::from_counts(108, 39, 4212);
        assert!((bird.density - 1.0).abs() < 1e-12);
        assert!((bird.worker_degree - 108.0).abs() < 1e-12);

        let web = DatasetStats::from_counts(2653, 177, 15539);
        assert!((web.density - 0.03).abs() < 0.005);
        assert_eq!(web.worker_degree.round(), 88.0);

        let ds = Dataset::from_labels(&labels(&[("t", "w", 1)]), None).unwrap();
        let s = summarize(&ds);
        assert_eq!((s.density, s.worker_degree), (1.0, 1.0));
    }

    #[test]
    fn padded_ids_sort_in_worker_order() {
        let ids: Vec<String> = (0..120).map(|i| simulated_worker_id(i, 120)).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
        assert_eq!(simulated_worker_id(7, 120), "w007");
        assert_eq!(simulated_task_id(0, 1), "t0");
    }
}
