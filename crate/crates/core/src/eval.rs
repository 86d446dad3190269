//! Accuracy metrics, confusion matrices and CSV reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::datagen::{class_spec, Technology};
use crate::error::{Error, Result};
use crate::nn::{argmax, Model, TrainSummary};
use crate::transform::FeatureRecord;

/// Samples per prediction batch.
const EVAL_BATCH: usize = 256;

/// Lower SNR bound of the high-SNR accuracy slice.
pub const HIGH_SNR_DB: i8 = 10;

/// Anything that maps flattened feature rows to class posteriors.
pub trait Classifier {
    /// Dataset class id of each output column.
    fn class_ids(&self) -> &[u8];
    fn input_len(&self) -> usize;
    /// Posterior rows (one per sample) for `n` flattened samples.
    fn posteriors(&self, x: &[f32], n: usize) -> Result<Vec<f32>>;
}

impl Classifier for Model<f32> {
    fn class_ids(&self) -> &[u8] {
        &self.class_ids
    }

    fn input_len(&self) -> usize {
        Model::input_len(self)
    }

    fn posteriors(&self, x: &[f32], n: usize) -> Result<Vec<f32>> {
        self.predict(x, n)
    }
}

/// Counts of true (row) versus predicted (column) class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub class_ids: Vec<u8>,
    pub counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(class_ids: &[u8]) -> Self {
        let k = class_ids.len();
        Self { class_ids: class_ids.to_vec(), counts: vec![0; k * k] }
    }

    pub fn k(&self) -> usize {
        self.class_ids.len()
    }

    fn index_of(&self, id: u8) -> Result<usize> {
        self.class_ids
            .iter()
            .position(|&c| c == id)
            .ok_or_else(|| Error::Label(format!("class {id} is not among the model's classes {:?}", self.class_ids)))
    }

    pub fn record(&mut self, truth: u8, predicted: u8) -> Result<()> {
        let (t, p) = (self.index_of(truth)?, self.index_of(predicted)?);
        let k = self.k();
        self.counts[t * k + p] += 1;
        Ok(())
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.k() + predicted]
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        let k = self.k();
        self.counts[truth * k..(truth + 1) * k].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k()).map(|i| self.get(i, i)).sum()
    }
}

/// Correct predictions out of a total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub correct: u64,
    pub total: u64,
}

impl Tally {
    pub fn add(&mut self, ok: bool) {
        self.correct += u64::from(ok);
        self.total += 1;
    }

    pub fn merge(&mut self, other: Tally) {
        self.correct += other.correct;
        self.total += other.total;
    }

    /// `None` when nothing was counted.
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Timing {
    pub seconds_per_epoch: f64,
    pub epochs: u32,
    pub total_seconds: f64,
}

impl From<TrainSummary> for Timing {
    fn from(s: TrainSummary) -> Self {
        Self { seconds_per_epoch: s.seconds_per_epoch, epochs: s.epochs_run, total_seconds: s.total_seconds }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub overall: Tally,
    pub per_technology: BTreeMap<Technology, Tally>,
    pub per_snr: BTreeMap<i8, Tally>,
    pub confusion: ConfusionMatrix,
    pub timing: Option<Timing>,
}

impl Metrics {
    pub fn overall_accuracy(&self) -> f64 {
        self.overall.accuracy().unwrap_or(0.0)
    }

    pub fn technology_accuracy(&self, t: Technology) -> Option<f64> {
        self.per_technology.get(&t).and_then(Tally::accuracy)
    }

    /// Accuracy over records with SNR at or above `min_db`.
    pub fn accuracy_at_or_above(&self, min_db: i8) -> Option<f64> {
        let mut t = Tally::default();
        self.per_snr.range(min_db..).for_each(|(_, v)| t.merge(*v));
        t.accuracy()
    }

    /// `(snr, accuracy)` pairs in ascending SNR order.
    pub fn snr_curve(&self) -> Vec<(i8, f64)> {
        self.per_snr.iter().filter_map(|(s, t)| t.accuracy().map(|a| (*s, a))).collect()
    }
}

/// Predicts every record and aggregates the counts.
pub fn evaluate<C: Classifier + ?Sized>(model: &C, records: &[&FeatureRecord]) -> Result<Metrics> {
    if records.is_empty() {
        return Err(Error::Data("no records to evaluate".into()));
    }
    let ids = model.class_ids().to_vec();
    let mut confusion = ConfusionMatrix::new(&ids);
    let mut overall = Tally::default();
    let mut per_technology = BTreeMap::new();
    let mut per_snr: BTreeMap<i8, Tally> = BTreeMap::new();
    let dim = model.input_len();
    for chunk in records.chunks(EVAL_BATCH) {
        let mut x = Vec::with_capacity(chunk.len() * dim);
        for r in chunk {
            if r.values.len() != dim {
                return Err(Error::Shape(format!(
                    "record has {} values, model expects {dim}",
                    r.values.len()
                )));
            }
            x.extend_from_slice(&r.values);
        }
        let probs = model.posteriors(&x, chunk.len())?;
        for (r, row) in chunk.iter().zip(probs.chunks_exact(ids.len())) {
            let predicted = ids[argmax(row)];
            confusion.record(r.class_id, predicted)?;
            let ok = predicted == r.class_id;
            overall.add(ok);
            let tech = class_spec(r.class_id)?.technology;
            per_technology.entry(tech).or_insert_with(Tally::default).add(ok);
            per_snr.entry(r.snr_db).or_default().add(ok);
        }
    }
    Ok(Metrics { overall, per_technology, per_snr, confusion, timing: None })
}

pub const SUMMARY_CSV: &str = "summary.csv";
pub const SNR_CSV: &str = "accuracy_vs_snr.csv";
pub const CONFUSION_CSV: &str = "confusion.csv";
pub const TIMING_CSV: &str = "timing.csv";

fn opt(v: Option<f64>) -> String {
    v.map(|a| a.to_string()).unwrap_or_default()
}

pub fn summary_csv(m: &Metrics) -> String {
    let mut s = String::from("metric,value\n");
    let _ = writeln!(s, "overall_accuracy,{}", m.overall_accuracy());
    for t in Technology::ALL {
        let _ = writeln!(s, "accuracy_{},{}", t.name(), opt(m.technology_accuracy(t)));
    }
    let _ = writeln!(s, "accuracy_snr_ge_{HIGH_SNR_DB}db,{}", opt(m.accuracy_at_or_above(HIGH_SNR_DB)));
    let _ = writeln!(s, "records,{}", m.overall.total);
    let _ = writeln!(s, "classes,{}", m.confusion.k());
    s
}

pub fn snr_csv(m: &Metrics) -> String {
    let mut s = String::from("snr_db,accuracy,correct,total\n");
    for (snr, t) in &m.per_snr {
        let _ = writeln!(s, "{snr},{},{},{}", opt(t.accuracy()), t.correct, t.total);
    }
    s
}

pub fn confusion_csv(c: &ConfusionMatrix) -> String {
    let mut s = String::from("true\\predicted");
    for id in &c.class_ids {
        let _ = write!(s, ",{id}");
    }
    s.push('\n');
    for (i, id) in c.class_ids.iter().enumerate() {
        let _ = write!(s, "{id}");
        for j in 0..c.k() {
            let _ = write!(s, ",{}", c.get(i, j));
        }
        s.push('\n');
    }
    s
}

pub fn timing_csv(t: Option<Timing>) -> String {
    let mut s = String::from("seconds_per_epoch,epochs,total_seconds\n");
    if let Some(t) = t {
        let _ = writeln!(s, "{},{},{}", t.seconds_per_epoch, t.epochs, t.total_seconds);
    }
    s
}

/// Writes the four report CSVs into `dir`, creating it if needed.
pub fn emit_report(m: &Metrics, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let files = [
        (SUMMARY_CSV, summary_csv(m)),
        (SNR_CSV, snr_csv(m)),
        (CONFUSION_CSV, confusion_csv(&m.confusion)),
        (TIMING_CSV, timing_csv(m.timing)),
    ];
    let mut out = Vec::new();
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body)?;
        out.push(p);
    }
    Ok(out)
}

/// Headline numbers read back from a report directory.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportSummary {
    pub dir: PathBuf,
    pub overall_accuracy: f64,
    pub high_snr_accuracy: Option<f64>,
    pub timing: Option<Timing>,
}

fn parse_f64(s: &str, what: &str, path: &Path) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("{}: bad {what} value '{s}'", path.display())))
}

pub fn read_report(dir: impl AsRef<Path>) -> Result<ReportSummary> {
    let dir = dir.as_ref();
    let path = dir.join(SUMMARY_CSV);
    let text = fs::read_to_string(&path)?;
    let mut kv = BTreeMap::new();
    for line in text.lines().skip(1) {
        if let Some((k, v)) = line.split_once(',') {
            kv.insert(k.to_string(), v.to_string());
        }
    }
    let overall = kv
        .get("overall_accuracy")
        .ok_or_else(|| Error::Format(format!("{}: no overall_accuracy", path.display())))?;
    let overall_accuracy = parse_f64(overall, "accuracy", &path)?;
    let high_snr_accuracy = match kv.get(&format!("accuracy_snr_ge_{HIGH_SNR_DB}db")) {
        Some(v) if !v.is_empty() => Some(parse_f64(v, "accuracy", &path)?),
        _ => None,
    };
    let tpath = dir.join(TIMING_CSV);
    let ttext = fs::read_to_string(&tpath)?;
    let timing = match ttext.lines().nth(1) {
        Some(row) => {
            let f: Vec<&str> = row.split(',').collect();
            if f.len() != 3 {
                return Err(Error::Format(format!("{}: expected 3 columns", tpath.display())));
            }
            Some(Timing {
                seconds_per_epoch: parse_f64(f[0], "seconds", &tpath)?,
                epochs: parse_f64(f[1], "epochs", &tpath)? as u32,
                total_seconds: parse_f64(f[2], "seconds", &tpath)?,
            })
        }
        None => None,
    };
    Ok(ReportSummary { dir: dir.to_path_buf(), overall_accuracy, high_snr_accuracy, timing })
}

fn ratio(num: Option<f64>, den: Option<f64>) -> String {
    match (num, den) {
        (Some(a), Some(b)) if b > 0.0 => (a / b).to_string(),
        _ => String::new(),
    }
}

/// Side-by-side table of several reports; speedups are relative to the
/// first directory (first / candidate).
pub fn compare_reports<P: AsRef<Path>>(dirs: &[P]) -> Result<String> {
    if dirs.len() < 2 {
        return Err(Error::Config("compare needs at least two report directories".into()));
    }
    let reports = dirs.iter().map(read_report).collect::<Result<Vec<_>>>()?;
    let base = &reports[0];
    let mut s = String::from(
        "report,overall_accuracy,accuracy_snr_ge_10db,seconds_per_epoch,epochs,total_seconds,epoch_speedup,total_speedup\n",
    );
    for r in &reports {
        let t = r.timing;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.dir.display(),
            r.overall_accuracy,
            opt(r.high_snr_accuracy),
            opt(t.map(|t| t.seconds_per_epoch)),
            t.map(|t| t.epochs.to_string()).unwrap_or_default(),
            opt(t.map(|t| t.total_seconds)),
            ratio(base.timing.map(|t| t.seconds_per_epoch), t.map(|t| t.seconds_per_epoch)),
            ratio(base.timing.map(|t| t.total_seconds), t.map(|t| t.total_seconds)),
        );
    }
    Ok(s)
}
