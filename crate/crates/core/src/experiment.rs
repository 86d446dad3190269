//! Named experiment presets and the end-to-end pipeline runner.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use crate::datagen::{build_dataset, Dataset, DatasetConfig, Split, PAPER_TRAIN_FRACTION, SNR_GRID};
use crate::error::{Error, Result, StageExt};
use crate::eval::{emit_report, evaluate, Metrics};
use crate::nn::{
    build_model, train, write_model, AdamConfig, ArchKind, ArchSpec, EarlyStop, EpochStats,
    LabeledData, Model, TrainConfig, TrainReport, DEFAULT_DROPOUT,
};
use crate::reduction::{
    apply_band_set, observable_classes, pca_fit_rows, subsample_count, subsample_resolve, BandSpec,
    PcaModel, SubsampleMethod, SubsampleSpec,
};
use crate::seed;
use crate::transform::{FeatureSet, Representation};

/// Records per (class, SNR) cell at desk scale.
pub const DESK_VECTORS_PER_CELL: usize = 60;

pub const BAND_2MHZ: &str = "2429-2431";
pub const BAND_4MHZ: &str = "2422-2424,2429-2431";

/// Dimensionality reduction applied after band and SNR selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Compression {
    None,
    /// Keep `round(rate * d)` principal components of the flattened matrix.
    Pca(f64),
    Subsample(SubsampleMethod, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub band: Option<BandSpec>,
    /// Training records are restricted to this SNR; validation keeps all.
    pub train_snr: Option<i8>,
    pub compression: Compression,
}

impl Default for Reduction {
    fn default() -> Self {
        Self { band: None, train_snr: None, compression: Compression::None }
    }
}

/// Fitted state of a reduction, needed to apply it to new data.
#[derive(Debug, Clone)]
pub enum Fitted {
    None,
    Pca(PcaModel),
    Subsample(SubsampleSpec),
}

/// Applies band selection, training-SNR selection and compression, in that
/// order. Compression is fitted on the retained training records.
pub fn reduce_features(set: &FeatureSet, r: &Reduction, seed: u64) -> Result<(FeatureSet, Fitted)> {
    let mut set = match &r.band {
        Some(band) => {
            let mut s = apply_band_set(set, band)?;
            s.retain_classes(&observable_classes(band));
            s
        }
        None => set.clone(),
    };
    if let Some(snr) = r.train_snr {
        if !SNR_GRID.contains(&snr) {
            return Err(Error::Config(format!("training SNR {snr} dB is not on the grid")));
        }
        set.records.retain(|rec| rec.split != Split::Train || rec.snr_db == snr);
        if !set.records.iter().any(|rec| rec.split == Split::Train) {
            return Err(Error::EmptySelection(format!("no training records at {snr} dB")));
        }
    }
    let train: Vec<&[f32]> = set.split(Split::Train).map(|rec| rec.values.as_slice()).collect();
    match r.compression {
        Compression::None => Ok((set, Fitted::None)),
        Compression::Pca(rate) => {
            let d = 2 * set.rows;
            let k = pca_k(rate, d)?;
            let model = pca_fit_rows(&train, k)?;
            Ok((model.project_set(&set)?, Fitted::Pca(model)))
        }
        Compression::Subsample(method, rate) => {
            let spec = SubsampleSpec::new(method, rate, seed);
            let spec = subsample_resolve(&spec, set.rows, train)?;
            let out = set.select_rows(spec.indices.as_deref().unwrap_or_default())?;
            Ok((out, Fitted::Subsample(spec)))
        }
    }
}

/// Principal components kept at `rate` of a `d`-dimensional input; the
/// count is rounded like a subsampling count and must be even.
pub fn pca_k(rate: f64, d: usize) -> Result<usize> {
    let k = subsample_count(rate, d)?;
    if k % 2 != 0 {
        return Err(Error::Dimension(format!(
            "PCA rate {rate} keeps {k} of {d} dimensions; need an even count"
        )));
    }
    Ok(k)
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub repr: Representation,
    pub reduction: Reduction,
    pub arch: ArchKind,
    pub dropout: f64,
    pub conv1_dropout: bool,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub early_stop: EarlyStop,
    pub vectors_per_cell: usize,
    pub snr_list: Vec<i8>,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "full-10mhz".into(),
            repr: Representation::FreqIq,
            reduction: Reduction::default(),
            arch: ArchKind::Proposed,
            dropout: DEFAULT_DROPOUT,
            conv1_dropout: false,
            adam: AdamConfig::default(),
            batch_size: 256,
            early_stop: EarlyStop::default(),
            vectors_per_cell: DESK_VECTORS_PER_CELL,
            snr_list: SNR_GRID.to_vec(),
            train_fraction: PAPER_TRAIN_FRACTION,
            seed: 1,
        }
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: &[&str] = &[
    "full-10mhz",
    "baseline-10mhz",
    "band-4mhz",
    "band-2mhz",
    "snr-10db-10mhz",
    "snr-2db-4mhz",
    "amp-phase-10mhz",
    "pca-2x",
    "pca-4x",
    "pca-8x",
    "pca-16x",
    "band4-pca-2x",
    "band4-pca-4x",
    "band4-pca-8x",
    "subsample-random-2x",
    "subsample-random-4x",
    "subsample-random-8x",
    "subsample-random-16x",
    "subsample-uniform-2x",
    "subsample-uniform-4x",
    "subsample-uniform-8x",
    "subsample-uniform-16x",
    "subsample-hmr-2x",
    "subsample-hmr-4x",
    "subsample-hmr-8x",
    "subsample-hmr-16x",
];

fn band(s: &str) -> Option<BandSpec> {
    Some(s.parse().expect("preset band is valid"))
}

fn factor(s: &str) -> Option<f64> {
    let n: u32 = s.strip_suffix('x')?.parse().ok()?;
    [2, 4, 8, 16].contains(&n).then(|| 1.0 / f64::from(n))
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig { name: name.to_string(), ..Default::default() };
    let unknown = || Error::Config(format!("unknown preset '{name}' (see `wii run --list`)"));
    match name {
        "full-10mhz" => {}
        "baseline-10mhz" => c.arch = ArchKind::Baseline,
        "band-4mhz" => c.reduction.band = band(BAND_4MHZ),
        "band-2mhz" => {
            c.reduction.band = band(BAND_2MHZ);
            c.conv1_dropout = true;
        }
        "snr-10db-10mhz" => c.reduction.train_snr = Some(-10),
        "snr-2db-4mhz" => {
            c.reduction.band = band(BAND_4MHZ);
            c.reduction.train_snr = Some(-2);
        }
        "amp-phase-10mhz" => c.repr = Representation::FreqAmpPhase,
        _ => {
            c.repr = Representation::FreqAmpPhase;
            if let Some(f) = name.strip_prefix("pca-") {
                c.reduction.compression = Compression::Pca(factor(f).ok_or_else(unknown)?);
            } else if let Some(f) = name.strip_prefix("band4-pca-") {
                let rate = factor(f).filter(|r| *r >= 0.125).ok_or_else(unknown)?;
                c.reduction.band = band(BAND_4MHZ);
                c.reduction.compression = Compression::Pca(rate);
            } else if let Some(rest) = name.strip_prefix("subsample-") {
                let (m, f) = rest.split_once('-').ok_or_else(unknown)?;
                let method: SubsampleMethod = m.parse().map_err(|_| unknown())?;
                c.reduction.compression = Compression::Subsample(method, factor(f).ok_or_else(unknown)?);
            } else {
                return Err(unknown());
            }
        }
    }
    Ok(c)
}

/// Keys accepted in config files, with their meaning.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("preset", "start from this named preset (must come first)"),
    ("name", "experiment label written to the manifest"),
    ("repr", "time-iq | freq-iq | freq-amp-phase"),
    ("band", "none, or MHz ranges such as 2429-2431 or 2422-2424,2429-2431"),
    ("train_snr", "none, or a grid SNR in dB used for training only"),
    ("pca_rate", "none, or a fraction (1/2, 0.25, ...) of flattened dimensions kept by PCA"),
    ("subsample", "none | random | uniform | hmr"),
    ("subsample_rate", "fraction of feature rows kept by subsampling"),
    ("arch", "proposed | baseline"),
    ("dropout", "dropout probability in [0, 1)"),
    ("conv1_dropout", "true | false: add dropout after the first convolution"),
    ("lr", "Adam learning rate"),
    ("beta1", "Adam first-moment decay"),
    ("beta2", "Adam second-moment decay"),
    ("epsilon", "Adam denominator offset"),
    ("batch_size", "mini-batch size"),
    ("patience", "epochs without validation-loss improvement before stopping"),
    ("max_epochs", "upper bound on training epochs"),
    ("vectors_per_cell", "records per (class, SNR) cell when generating data"),
    ("snr_list", "all, or comma-separated grid SNRs when generating data"),
    ("train_fraction", "training share of each cell when generating data"),
    ("seed", "root seed for every stage"),
];

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("bad value '{v}' for {key}")))
}

/// Parses `0.25` or `1/4`.
pub fn parse_rate(v: &str) -> Result<f64> {
    let r = match v.split_once('/') {
        Some((a, b)) => parse::<f64>("rate", a.trim())? / parse::<f64>("rate", b.trim())?,
        None => parse::<f64>("rate", v)?,
    };
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Config(format!("rate {v} must lie in (0, 1]")));
    }
    Ok(r)
}

fn fmt_rate(r: f64) -> String {
    let inv = 1.0 / r;
    if (inv - inv.round()).abs() < 1e-12 {
        format!("1/{}", inv.round())
    } else {
        r.to_string()
    }
}

impl ExperimentConfig {
    /// Sets one key. Subsampling takes its rate from `subsample_rate`
    /// (default 1/4) and replaces any PCA setting, and vice versa.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let none = v.eq_ignore_ascii_case("none");
        match key {
            "preset" => *self = preset(v)?,
            "name" => self.name = v.to_string(),
            "repr" => self.repr = v.parse()?,
            "band" => self.reduction.band = if none { None } else { Some(v.parse()?) },
            "train_snr" => self.reduction.train_snr = if none { None } else { Some(parse(key, v)?) },
            "pca_rate" => {
                self.reduction.compression = if none { Compression::None } else { Compression::Pca(parse_rate(v)?) }
            }
            "subsample" => {
                self.reduction.compression = if none {
                    Compression::None
                } else {
                    let rate = match self.reduction.compression {
                        Compression::Subsample(_, r) => r,
                        _ => 0.25,
                    };
                    Compression::Subsample(v.parse()?, rate)
                }
            }
            "subsample_rate" => match &mut self.reduction.compression {
                Compression::Subsample(_, r) => *r = parse_rate(v)?,
                _ => return Err(Error::Config("subsample_rate given without subsample".into())),
            },
            "arch" => self.arch = v.parse()?,
            "dropout" => self.dropout = parse(key, v)?,
            "conv1_dropout" => self.conv1_dropout = parse(key, v)?,
            "lr" => self.adam.lr = parse(key, v)?,
            "beta1" => self.adam.beta1 = parse(key, v)?,
            "beta2" => self.adam.beta2 = parse(key, v)?,
            "epsilon" => self.adam.eps = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "patience" => self.early_stop.patience = parse(key, v)?,
            "max_epochs" => self.early_stop.max_epochs = parse(key, v)?,
            "vectors_per_cell" => self.vectors_per_cell = parse(key, v)?,
            "snr_list" => {
                self.snr_list = if v == "all" {
                    SNR_GRID.to_vec()
                } else {
                    v.split(',').map(|s| parse(key, s.trim())).collect::<Result<_>>()?
                }
            }
            "train_fraction" => self.train_fraction = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Applies a `key = value` text; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn dataset_config(&self) -> DatasetConfig {
        DatasetConfig {
            vectors_per_cell: self.vectors_per_cell,
            snr_list: self.snr_list.clone(),
            train_fraction: self.train_fraction,
            seed: seed::labeled(self.seed, "datagen"),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            adam: self.adam,
            batch_size: self.batch_size,
            early_stop: self.early_stop,
            seed: seed::labeled(self.seed, "train"),
        }
    }

    pub fn arch_spec(&self, rows: usize, num_classes: usize) -> ArchSpec {
        ArchSpec::of_kind(self.arch, rows, num_classes, self.dropout, self.conv1_dropout)
    }

    /// Every resolved key, in `key = value` form readable by [`Self::from_text`].
    pub fn to_text(&self) -> String {
        let r = &self.reduction;
        let opt = |o: Option<String>| o.unwrap_or_else(|| "none".into());
        let mut kv: Vec<(&str, String)> = vec![
            ("name", self.name.clone()),
            ("repr", self.repr.name().into()),
            ("band", opt(r.band.as_ref().map(ToString::to_string))),
            ("train_snr", opt(r.train_snr.map(|s| s.to_string()))),
        ];
        match r.compression {
            Compression::None => kv.push(("pca_rate", "none".into())),
            Compression::Pca(rate) => kv.push(("pca_rate", fmt_rate(rate))),
            Compression::Subsample(m, rate) => {
                kv.push(("subsample", m.name().into()));
                kv.push(("subsample_rate", fmt_rate(rate)));
            }
        }
        let snrs: Vec<String> = self.snr_list.iter().map(ToString::to_string).collect();
        kv.extend([
            ("arch", self.arch.name().into()),
            ("dropout", self.dropout.to_string()),
            ("conv1_dropout", self.conv1_dropout.to_string()),
            ("lr", self.adam.lr.to_string()),
            ("beta1", self.adam.beta1.to_string()),
            ("beta2", self.adam.beta2.to_string()),
            ("epsilon", self.adam.eps.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("patience", self.early_stop.patience.to_string()),
            ("max_epochs", self.early_stop.max_epochs.to_string()),
            ("vectors_per_cell", self.vectors_per_cell.to_string()),
            ("snr_list", snrs.join(",")),
            ("train_fraction", self.train_fraction.to_string()),
            ("seed", self.seed.to_string()),
        ]);
        let mut s = String::new();
        for (k, v) in kv {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

/// Flattened samples and label indices of one split.
pub struct SplitData {
    pub x: Vec<f32>,
    pub labels: Vec<usize>,
    pub snr: Vec<i8>,
}

/// Gathers one split, mapping class ids to output units.
pub fn split_data(set: &FeatureSet, split: Split, class_ids: &[u8]) -> Result<SplitData> {
    let units: BTreeMap<u8, usize> = class_ids.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut d = SplitData { x: Vec::new(), labels: Vec::new(), snr: Vec::new() };
    for r in set.split(split) {
        let unit = units
            .get(&r.class_id)
            .ok_or_else(|| Error::Label(format!("class {} has no output unit", r.class_id)))?;
        d.x.extend_from_slice(&r.values);
        d.labels.push(*unit);
        d.snr.push(r.snr_db);
    }
    Ok(d)
}

/// Trains a fresh network on the training split of `set`, validating on its
/// validation split.
pub fn train_on_features(
    set: &FeatureSet,
    cfg: &ExperimentConfig,
    progress: impl FnMut(&EpochStats),
) -> Result<(Model<f32>, TrainReport)> {
    let class_ids = set.class_ids();
    let arch = cfg.arch_spec(set.rows, class_ids.len());
    let mut model = build_model(&arch, &class_ids, seed::labeled(cfg.seed, "init"))?;
    let dim = model.input_len();
    let tr = split_data(set, Split::Train, &class_ids)?;
    let va = split_data(set, Split::Val, &class_ids)?;
    let report = train(
        &mut model,
        &LabeledData::new(&tr.x, &tr.labels, dim)?,
        &LabeledData::new(&va.x, &va.labels, dim)?,
        &cfg.train_config(),
        progress,
    )?;
    Ok((model, report))
}

/// Validation-split metrics of a trained model.
pub fn evaluate_split(model: &Model<f32>, set: &FeatureSet, split: Split) -> Result<Metrics> {
    let recs: Vec<_> = set.split(split).collect();
    let mut m = evaluate(model, &recs)?;
    m.timing = model.summary.map(Into::into);
    Ok(m)
}

pub fn history_csv(report: &TrainReport) -> String {
    let mut s = String::from("epoch,train_loss,val_loss,val_accuracy\n");
    for h in &report.history {
        let _ = writeln!(s, "{},{},{},{}", h.epoch, h.train_loss, h.val_loss, h.val_accuracy);
    }
    s
}

pub struct ExperimentOutcome {
    pub metrics: Metrics,
    pub report: TrainReport,
    pub input_rows: usize,
    pub class_ids: Vec<u8>,
    pub param_count: usize,
}

/// Generates the dataset described by `cfg`.
pub fn generate(cfg: &ExperimentConfig) -> Result<Dataset> {
    build_dataset(&cfg.dataset_config()).stage("generate")
}

/// Runs preprocess, reduce, train and evaluate, writing the model, the
/// report CSVs, `history.csv` and `manifest.txt` into `out_dir`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    data: &Dataset,
    out_dir: &Path,
    progress: impl FnMut(&EpochStats),
) -> Result<ExperimentOutcome> {
    let start = Instant::now();
    let features = FeatureSet::from_dataset(data, cfg.repr).stage("preprocess")?;
    let (reduced, _) =
        reduce_features(&features, &cfg.reduction, seed::labeled(cfg.seed, "subsample")).stage("reduce")?;
    drop(features);
    let (model, report) = train_on_features(&reduced, cfg, progress).stage("train")?;
    let metrics = evaluate_split(&model, &reduced, Split::Val).stage("evaluate")?;
    fs::create_dir_all(out_dir).stage("report")?;
    write_model(&model, out_dir.join("model.wiim")).stage("report")?;
    emit_report(&metrics, out_dir).stage("report")?;
    fs::write(out_dir.join("history.csv"), history_csv(&report)).stage("report")?;
    let mut manifest = cfg.to_text();
    let _ = writeln!(manifest, "# version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(manifest, "# records = {}", data.len());
    let _ = writeln!(manifest, "# input_rows = {}", reduced.rows);
    let _ = writeln!(manifest, "# classes = {:?}", model.class_ids);
    let _ = writeln!(manifest, "# parameters = {}", model.param_count());
    let _ = writeln!(manifest, "# epochs_run = {}", report.epochs_run);
    let _ = writeln!(manifest, "# wall_clock_seconds = {}", start.elapsed().as_secs_f64());
    fs::write(out_dir.join("manifest.txt"), manifest).stage("report")?;
    Ok(ExperimentOutcome {
        metrics,
        report,
        input_rows: reduced.rows,
        class_ids: model.class_ids.clone(),
        param_count: model.param_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            assert_eq!(c.name, *name);
            let again = ExperimentConfig::from_text(&c.to_text()).unwrap();
            assert_eq!(again, c, "{name}");
        }
        assert!(matches!(preset("pca-3x"), Err(Error::Config(_))));
        assert!(preset("band4-pca-16x").is_err());
        assert!(preset("nope").is_err());
    }

    #[test]
    fn preset_contents() {
        let c = preset("snr-2db-4mhz").unwrap();
        assert_eq!(c.reduction.train_snr, Some(-2));
        assert_eq!(c.reduction.band.unwrap().to_string(), "2422-2424,2429-2431");
        let c = preset("band-2mhz").unwrap();
        assert!(c.conv1_dropout);
        let c = preset("pca-16x").unwrap();
        assert_eq!(c.repr, Representation::FreqAmpPhase);
        assert_eq!(c.reduction.compression, Compression::Pca(1.0 / 16.0));
        assert_eq!(pca_k(1.0 / 16.0, 256).unwrap(), 16);
        let c = preset("subsample-hmr-8x").unwrap();
        assert_eq!(c.reduction.compression, Compression::Subsample(SubsampleMethod::HighMagnitudeRank, 0.125));
        let c = preset("full-10mhz").unwrap();
        assert_eq!(c.arch_spec(128, 15).flatten_dim().unwrap(), 31744);
        assert_eq!(c.train_config().batch_size, 256);
    }

    #[test]
    fn config_text() {
        let c = ExperimentConfig::from_text(
            "preset = band-4mhz\n# comment\nlr = 0.001  # faster\nsubsample = uniform\nsubsample_rate = 1/8\n",
        )
        .unwrap();
        assert_eq!(c.name, "band-4mhz");
        assert_eq!(c.adam.lr, 0.001);
        assert_eq!(c.reduction.compression, Compression::Subsample(SubsampleMethod::Uniform, 0.125));
        for bad in ["bogus = 1", "lr", "lr = fast", "pca_rate = 2", "subsample_rate = 1/2"] {
            assert!(matches!(ExperimentConfig::from_text(bad), Err(Error::Config(_))), "{bad}");
        }
        assert_eq!(parse_rate("1/4").unwrap(), 0.25);
        assert_eq!(fmt_rate(0.0625), "1/16");
    }

    fn tiny_cfg(name: &str) -> ExperimentConfig {
        let mut c = preset(name).unwrap();
        c.vectors_per_cell = 3;
        c.snr_list = vec![-2, 10];
        c.train_fraction = 0.67;
        c.early_stop.max_epochs = 1;
        c.arch = ArchKind::Proposed;
        c
    }

    #[test]
    fn reductions_shape_the_features() {
        let cfg = tiny_cfg("snr-2db-4mhz");
        let data = generate(&cfg).unwrap();
        let f = FeatureSet::from_dataset(&data, cfg.repr).unwrap();
        let (r, _) = reduce_features(&f, &cfg.reduction, 1).unwrap();
        assert_eq!(r.rows, 52);
        assert_eq!(r.class_ids().len(), 10);
        assert!(r.split(Split::Train).all(|x| x.snr_db == -2));
        assert!(r.split(Split::Val).any(|x| x.snr_db == 10));
        let two = tiny_cfg("band-2mhz");
        let (r, _) = reduce_features(&f, &two.reduction, 1).unwrap();
        assert_eq!((r.rows, r.class_ids().len()), (26, 7));
        let mut bad = cfg.reduction.clone();
        bad.train_snr = Some(4);
        assert!(matches!(reduce_features(&f, &bad, 1), Err(Error::EmptySelection(_))));
    }

    #[test]
    fn stage_errors_are_attributed() {
        let mut cfg = tiny_cfg("band-2mhz");
        cfg.repr = Representation::TimeIq;
        let data = generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let err = run_experiment(&cfg, &data, dir.path(), |_| {}).err().unwrap();
        assert!(matches!(err, Error::Stage { stage: "reduce", .. }), "{err}");
        assert!(matches!(err.root(), Error::Representation(_)));
    }
}
