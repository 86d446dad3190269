use std::time::Instant;

use rand::seq::SliceRandom;

use super::adam::{adam_step, AdamConfig, AdamState};
use super::model::{argmax, Mode, Model, TrainSummary};
use super::real::Real;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStop {
    /// Epochs without validation-loss improvement before stopping.
    pub patience: usize,
    pub max_epochs: usize,
}

impl Default for EarlyStop {
    fn default() -> Self {
        Self { patience: 3, max_epochs: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub early_stop: EarlyStop,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { adam: AdamConfig::default(), batch_size: 256, early_stop: EarlyStop::default(), seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.adam.validate()?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.early_stop.max_epochs == 0 {
            return Err(Error::Config("max epochs must be at least 1".into()));
        }
        if self.early_stop.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        Ok(())
    }
}

/// Flattened samples with output-unit labels.
#[derive(Debug, Clone, Copy)]
pub struct LabeledData<'a> {
    pub x: &'a [f32],
    pub labels: &'a [usize],
    pub dim: usize,
}

impl<'a> LabeledData<'a> {
    pub fn new(x: &'a [f32], labels: &'a [usize], dim: usize) -> Result<Self> {
        if dim == 0 || x.len() != labels.len() * dim {
            return Err(Error::Shape(format!(
                "{} values do not form {} samples of length {dim}",
                x.len(),
                labels.len()
            )));
        }
        Ok(Self { x, labels, dim })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn gather<T: Real>(&self, idx: &[usize]) -> (Vec<T>, Vec<usize>) {
        let mut x = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            x.extend(self.x[i * self.dim..(i + 1) * self.dim].iter().map(|&v| T::of(v as f64)));
        }
        (x, idx.iter().map(|&i| self.labels[i]).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    /// Wall-clock time of the training pass (validation excluded).
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub seconds_per_epoch: f64,
    pub total_seconds: f64,
    pub history: Vec<EpochStats>,
    /// Epoch (1-based) whose parameters were kept.
    pub best_epoch: usize,
    /// Validation accuracy of the kept parameters.
    pub best_val_accuracy: f64,
}

impl TrainReport {
    pub fn summary(&self) -> TrainSummary {
        TrainSummary {
            epochs_run: self.epochs_run as u32,
            seconds_per_epoch: self.seconds_per_epoch,
            total_seconds: self.total_seconds,
            best_val_accuracy: self.best_val_accuracy,
        }
    }
}

/// Mean loss and accuracy in evaluation mode.
pub fn evaluate_loss<T: Real>(
    model: &Model<T>,
    data: &LabeledData<'_>,
    batch_size: usize,
) -> Result<(f64, f64)> {
    let k = model.num_classes();
    let (mut loss, mut correct) = (0.0, 0usize);
    let all: Vec<usize> = (0..data.len()).collect();
    for idx in all.chunks(batch_size.max(1)) {
        let (x, y) = data.gather::<T>(idx);
        let probs = model.predict(&x, idx.len())?;
        for (row, &label) in probs.chunks_exact(k).zip(&y) {
            let (l, _) = super::layers::cross_entropy(row, label)?;
            loss += l.to_f64().unwrap_or(f64::NAN);
            correct += usize::from(argmax(row) == label);
        }
    }
    let n = data.len().max(1) as f64;
    Ok((loss / n, correct as f64 / n))
}

fn check_data<T: Real>(model: &Model<T>, data: &LabeledData<'_>, what: &str) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Data(format!("{what} set is empty")));
    }
    if data.dim != model.input_len() {
        return Err(Error::Shape(format!(
            "{what} samples have {} values, network expects {} ({})",
            data.dim,
            model.input_len(),
            model.arch().input
        )));
    }
    if let Some(&bad) = data.labels.iter().find(|&&l| l >= model.num_classes()) {
        return Err(Error::Label(format!(
            "{what} label {bad} out of range for {} outputs",
            model.num_classes()
        )));
    }
    Ok(())
}

/// Mini-batch Adam with per-epoch shuffling and early stopping on
/// validation loss. The best parameters are restored before returning.
pub fn train<T: Real>(
    model: &mut Model<T>,
    train: &LabeledData<'_>,
    val: &LabeledData<'_>,
    cfg: &TrainConfig,
    mut progress: impl FnMut(&EpochStats),
) -> Result<TrainReport> {
    cfg.validate()?;
    check_data(model, train, "training")?;
    check_data(model, val, "validation")?;
    let start = Instant::now();
    let mut state = AdamState::new(&model.params);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, f64, Vec<Vec<T>>)> = None;
    let mut since_best = 0;
    let mut train_seconds = 0.0;
    for epoch in 1..=cfg.early_stop.max_epochs {
        let epoch_seed = seed::derive(cfg.seed, &[epoch as u64]);
        let mut shuffle_rng = seed::rng(seed::labeled(epoch_seed, "shuffle"));
        let mut dropout_rng = seed::rng(seed::labeled(epoch_seed, "dropout"));
        order.shuffle(&mut shuffle_rng);
        let t0 = Instant::now();
        let mut loss_sum = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            let (x, y) = train.gather::<T>(idx);
            let (loss, grads) = model.loss_and_grads(&x, &y, Mode::Train, &mut dropout_rng)?;
            let loss = loss.to_f64().unwrap_or(f64::NAN);
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("training loss became {loss} in epoch {epoch}")));
            }
            loss_sum += loss * idx.len() as f64;
            adam_step(&mut model.params, &grads, &mut state, &cfg.adam)?;
        }
        let seconds = t0.elapsed().as_secs_f64();
        train_seconds += seconds;
        let (val_loss, val_accuracy) = evaluate_loss(model, val, cfg.batch_size)?;
        if !val_loss.is_finite() {
            return Err(Error::Numeric(format!("validation loss became {val_loss} in epoch {epoch}")));
        }
        let stats = EpochStats {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            val_loss,
            val_accuracy,
            seconds,
        };
        progress(&stats);
        history.push(stats);
        if best.as_ref().is_none_or(|b| val_loss < b.0) {
            best = Some((val_loss, epoch, val_accuracy, model.params.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.early_stop.patience {
                break;
            }
        }
    }
    let (_, best_epoch, best_val_accuracy, params) = best.expect("at least one epoch ran");
    model.params = params;
    let epochs_run = history.len();
    let report = TrainReport {
        epochs_run,
        seconds_per_epoch: train_seconds / epochs_run as f64,
        total_seconds: start.elapsed().as_secs_f64(),
        history,
        best_epoch,
        best_val_accuracy,
    };
    model.summary = Some(report.summary());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    use super::*;
    use crate::nn::arch::{ArchSpec, LayerSpec};
    use crate::nn::layers::Shape3;
    use crate::nn::model::build_model;

    /// Two Gaussian blobs in 4 dimensions centred at +-2 on every axis.
    fn blobs(n: usize, seed: u64) -> (Vec<f32>, Vec<usize>) {
        let mut rng = seed::rng(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for i in 0..n {
            let c = i % 2;
            let centre = if c == 0 { -2.0 } else { 2.0 };
            x.extend((0..4).map(|_| centre + noise.sample(&mut rng) as f32));
            y.push(c);
        }
        (x, y)
    }

    fn dense_arch() -> ArchSpec {
        ArchSpec {
            input: Shape3::new(2, 2, 1),
            num_classes: 2,
            layers: vec![
                LayerSpec::Flatten,
                LayerSpec::Dense(8),
                LayerSpec::Relu,
                LayerSpec::Dropout(0.2),
                LayerSpec::Dense(2),
                LayerSpec::Softmax,
            ],
        }
    }

    fn toy_config(seed: u64) -> TrainConfig {
        TrainConfig {
            adam: AdamConfig { lr: 1e-2, ..Default::default() },
            batch_size: 16,
            early_stop: EarlyStop { patience: 50, max_epochs: 50 },
            seed,
        }
    }

    #[test]
    fn separable_blobs_are_learned() {
        let (xt, yt) = blobs(200, 1);
        let (xv, yv) = blobs(100, 2);
        let tr = LabeledData::new(&xt, &yt, 4).unwrap();
        let va = LabeledData::new(&xv, &yv, 4).unwrap();
        let mut m: Model<f32> = build_model(&dense_arch(), &[0, 1], 5).unwrap();
        let rep = train(&mut m, &tr, &va, &toy_config(3), |_| {}).unwrap();
        assert!(rep.epochs_run <= 50);
        assert_eq!(rep.history.len(), rep.epochs_run);
        assert!(rep.history[9].train_loss < rep.history[0].train_loss);
        let (_, train_acc) = evaluate_loss(&m, &tr, 64).unwrap();
        assert_eq!(train_acc, 1.0);
        let (xh, yh) = blobs(50, 99);
        let p = m.predict(&xh, 50).unwrap();
        for (row, y) in p.chunks_exact(2).zip(&yh) {
            assert_eq!(argmax(row), *y);
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let (xt, yt) = blobs(64, 4);
        let tr = LabeledData::new(&xt, &yt, 4).unwrap();
        let run = |model_seed, train_seed| {
            let mut m: Model<f32> = build_model(&dense_arch(), &[0, 1], model_seed).unwrap();
            let mut cfg = toy_config(train_seed);
            cfg.early_stop.max_epochs = 5;
            let rep = train(&mut m, &tr, &tr, &cfg, |_| {}).unwrap();
            rep.history.iter().map(|h| (h.train_loss, h.val_loss)).collect::<Vec<_>>()
        };
        assert_eq!(run(1, 2), run(1, 2));
        assert_ne!(run(1, 2), run(7, 8));
    }

    #[test]
    fn early_stop_restores_best() {
        let (xt, yt) = blobs(64, 4);
        let tr = LabeledData::new(&xt, &yt, 4).unwrap();
        // Random labels make validation loss stall quickly.
        let mut rng = seed::rng(11);
        let yv: Vec<usize> = (0..64).map(|_| rng.random_range(0..2)).collect();
        let va = LabeledData::new(&xt, &yv, 4).unwrap();
        let mut m: Model<f32> = build_model(&dense_arch(), &[0, 1], 1).unwrap();
        let mut cfg = toy_config(1);
        cfg.adam.lr = 0.05;
        cfg.early_stop = EarlyStop { patience: 3, max_epochs: 40 };
        let rep = train(&mut m, &tr, &va, &cfg, |_| {}).unwrap();
        let best = rep.history.iter().map(|h| h.val_loss).fold(f64::INFINITY, f64::min);
        assert_eq!(rep.history[rep.best_epoch - 1].val_loss, best);
        if rep.epochs_run < 40 {
            assert_eq!(rep.epochs_run, rep.best_epoch + 3);
        }
        let (val_loss, _) = evaluate_loss(&m, &va, 16).unwrap();
        assert!((val_loss - best).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (xt, yt) = blobs(8, 4);
        let tr = LabeledData::new(&xt, &yt, 4).unwrap();
        let empty = LabeledData::new(&[], &[], 4).unwrap();
        let mut m: Model<f32> = build_model(&dense_arch(), &[0, 1], 1).unwrap();
        let cfg = toy_config(0);
        assert!(matches!(train(&mut m, &empty, &tr, &cfg, |_| {}), Err(Error::Data(_))));
        let wide = LabeledData::new(&xt, &yt[..4], 8).unwrap();
        assert!(matches!(train(&mut m, &wide, &tr, &cfg, |_| {}), Err(Error::Shape(_))));
        let bad_cfg = TrainConfig { batch_size: 0, ..cfg };
        assert!(matches!(train(&mut m, &tr, &tr, &bad_cfg, |_| {}), Err(Error::Config(_))));
        assert!(LabeledData::new(&xt, &yt[..3], 4).is_err());
    }

    #[test]
    fn diverging_run_is_numeric_error() {
        let (mut xt, yt) = blobs(8, 4);
        xt[0] = f32::NAN;
        let tr = LabeledData::new(&xt, &yt, 4).unwrap();
        let mut m: Model<f32> = build_model(&dense_arch(), &[0, 1], 1).unwrap();
        let err = train(&mut m, &tr, &tr, &toy_config(0), |_| {}).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)), "{err}");
    }
}
