use num_complex::Complex32;
use rayon::prelude::*;

use super::catalog::{CaptureSpec, CATALOG};
use super::noise::apply_awgn;
use super::waveform::synth_frame;
use crate::error::{Error, Result};
use crate::seed;

/// The 21-point SNR grid, -20 dB to +20 dB in 2 dB steps.
pub const SNR_GRID: [i8; 21] = [
    -20, -18, -16, -14, -12, -10, -8, -6, -4, -2, 0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20,
];

/// 480 of every 715 vectors per (class, SNR) cell are used for training.
pub const PAPER_TRAIN_FRACTION: f64 = 480.0 / 715.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
}

impl Split {
    pub fn code(self) -> u8 {
        match self {
            Split::Train => 0,
            Split::Val => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Split::Train),
            1 => Some(Split::Val),
            _ => None,
        }
    }
}

/// One labeled capture.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub class_id: u8,
    pub snr_db: i8,
    pub iq: Vec<Complex32>,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub capture: CaptureSpec,
    pub records: Vec<SampleRecord>,
    /// Generation seed; `None` for datasets loaded from file.
    pub seed: Option<u64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn count(&self, class_id: u8, snr_db: i8, split: Split) -> usize {
        self.records
            .iter()
            .filter(|r| r.class_id == class_id && r.snr_db == snr_db && r.split == split)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub vectors_per_cell: usize,
    pub snr_list: Vec<i8>,
    pub train_fraction: f64,
    pub seed: u64,
}

impl DatasetConfig {
    /// 715 vectors per cell over the full SNR grid (225,225 records).
    pub fn paper_scale(seed: u64) -> Self {
        Self::with_cells(715, seed)
    }

    pub fn with_cells(vectors_per_cell: usize, seed: u64) -> Self {
        Self {
            vectors_per_cell,
            snr_list: SNR_GRID.to_vec(),
            train_fraction: PAPER_TRAIN_FRACTION,
            seed,
        }
    }

    /// Training records per (class, SNR) cell.
    pub fn train_per_cell(&self) -> usize {
        (self.train_fraction * self.vectors_per_cell as f64).round_ties_even() as usize
    }

    fn validate(&self) -> Result<()> {
        if self.vectors_per_cell == 0 {
            return Err(Error::Config("vectors_per_cell must be >= 1".into()));
        }
        if self.snr_list.is_empty() {
            return Err(Error::Config("snr_list is empty".into()));
        }
        for (i, snr) in self.snr_list.iter().enumerate() {
            if !SNR_GRID.contains(snr) {
                return Err(Error::Config(format!("snr {snr} dB is not on the 2 dB grid")));
            }
            if self.snr_list[..i].contains(snr) {
                return Err(Error::Config(format!("snr {snr} dB listed twice")));
            }
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction {} must lie in (0, 1)",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Generates `15 x |snr_list| x vectors_per_cell` records. Within each cell
/// the first `train_per_cell` indices are training records.
pub fn build_dataset(config: &DatasetConfig) -> Result<Dataset> {
    config.validate()?;
    let capture = CaptureSpec::default();
    let n_train = config.train_per_cell();
    let cells: Vec<(usize, i8, usize)> = CATALOG
        .iter()
        .enumerate()
        .flat_map(|(c, _)| {
            config.snr_list.iter().flat_map(move |&snr| {
                (0..config.vectors_per_cell).map(move |i| (c, snr, i))
            })
        })
        .collect();
    let records = cells
        .into_par_iter()
        .map(|(c, snr, index)| {
            let spec = &CATALOG[c];
            let record_seed = seed::derive(
                config.seed,
                &[u64::from(spec.class_id), snr as i64 as u64, index as u64],
            );
            let frame = synth_frame(spec, &capture, seed::labeled(record_seed, "frame"))?;
            let noisy = apply_awgn(&frame, f64::from(snr), seed::labeled(record_seed, "noise"))?;
            Ok(SampleRecord {
                class_id: spec.class_id,
                snr_db: snr,
                iq: noisy
                    .iter()
                    .map(|v| Complex32::new(v.re as f32, v.im as f32))
                    .collect(),
                split: if index < n_train { Split::Train } else { Split::Val },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        capture,
        records,
        seed: Some(config.seed),
    })
}
