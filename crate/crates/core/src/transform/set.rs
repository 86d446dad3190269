//! Collections of feature matrices sharing one geometry, and their file
//! container: magic `WIIF`, u16 version, u64 record count, u16 rows,
//! u8 representation tag, u8 flags (bit 0: per-row bin frequencies follow as
//! f64; bit 1: rows are PCA projections), then per record
//! `class u8, snr i8, split u8` and `rows` interleaved f32 pairs.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::{gather_rows, to_features, FeatureMatrix, Representation};
use crate::binio::{put_f32s, Reader};
use crate::datagen::{Dataset, Split, SNR_GRID};
use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 4] = b"WIIF";
const VERSION: u16 = 1;
const FLAG_BIN_FREQS: u8 = 1;
const FLAG_PROJECTED: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub class_id: u8,
    pub snr_db: i8,
    pub split: Split,
    /// `rows x 2`, row-major.
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub repr: Representation,
    pub rows: usize,
    pub bin_freqs: Option<Vec<f64>>,
    /// Rows hold PCA coordinates rather than spectrum or time samples.
    pub projected: bool,
    pub records: Vec<FeatureRecord>,
}

impl FeatureSet {
    pub fn from_dataset(d: &Dataset, kind: Representation) -> Result<FeatureSet> {
        let mats = d
            .records
            .par_iter()
            .map(|r| to_features(r, kind))
            .collect::<Result<Vec<_>>>()?;
        let rows = mats.first().map_or(d.capture.vector_len, |m| m.rows);
        let bin_freqs = match mats.first() {
            Some(m) => m.bin_freqs.clone(),
            None if kind.is_frequency_domain() => Some(d.capture.bin_offsets_mhz()),
            None => None,
        };
        let records = d
            .records
            .iter()
            .zip(mats)
            .map(|(r, m)| {
                if m.rows != rows {
                    return Err(Error::Dimension("records of differing length".into()));
                }
                Ok(FeatureRecord {
                    class_id: r.class_id,
                    snr_db: r.snr_db,
                    split: r.split,
                    values: m.values,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureSet {
            repr: kind,
            rows,
            bin_freqs,
            projected: false,
            records,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Matrix view of record `i`.
    pub fn matrix(&self, i: usize) -> FeatureMatrix {
        FeatureMatrix {
            values: self.records[i].values.clone(),
            rows: self.rows,
            repr: self.repr,
            bin_freqs: self.bin_freqs.clone(),
        }
    }

    /// Applies the same row selection to every record.
    pub fn select_rows(&self, indices: &[usize]) -> Result<FeatureSet> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.rows) {
            return Err(Error::Dimension(format!(
                "row index {bad} out of range for {} rows",
                self.rows
            )));
        }
        Ok(FeatureSet {
            repr: self.repr,
            rows: indices.len(),
            bin_freqs: self
                .bin_freqs
                .as_ref()
                .map(|f| indices.iter().map(|&i| f[i]).collect()),
            projected: self.projected,
            records: self
                .records
                .iter()
                .map(|r| FeatureRecord {
                    class_id: r.class_id,
                    snr_db: r.snr_db,
                    split: r.split,
                    values: gather_rows(&r.values, indices),
                })
                .collect(),
        })
    }

    /// Records of one split, in order.
    pub fn split(&self, split: Split) -> impl Iterator<Item = &FeatureRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    /// Keeps records whose class is in `classes`.
    pub fn retain_classes(&mut self, classes: &std::collections::BTreeSet<u8>) {
        self.records.retain(|r| classes.contains(&r.class_id));
    }

    /// Sorted distinct class ids present.
    pub fn class_ids(&self) -> Vec<u8> {
        let set: std::collections::BTreeSet<u8> =
            self.records.iter().map(|r| r.class_id).collect();
        set.into_iter().collect()
    }
}

pub fn write_features(set: &FeatureSet, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode(set)?)?;
    Ok(())
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureSet> {
    decode(&fs::read(path)?)
}

pub(crate) fn encode(set: &FeatureSet) -> Result<Vec<u8>> {
    let rows = u16::try_from(set.rows)
        .map_err(|_| Error::Format(format!("{} rows exceed u16", set.rows)))?;
    let mut out = Vec::with_capacity(18 + set.records.len() * (3 + 8 * set.rows));
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(set.records.len() as u64).to_le_bytes());
    out.extend_from_slice(&rows.to_le_bytes());
    out.push(set.repr.tag());
    let mut flags = 0;
    if set.bin_freqs.is_some() {
        flags |= FLAG_BIN_FREQS;
    }
    if set.projected {
        flags |= FLAG_PROJECTED;
    }
    out.push(flags);
    if let Some(freqs) = &set.bin_freqs {
        if freqs.len() != set.rows {
            return Err(Error::Format("bin frequency count differs from rows".into()));
        }
        for f in freqs {
            out.extend_from_slice(&f.to_le_bytes());
        }
    }
    for r in &set.records {
        if r.values.len() != 2 * set.rows {
            return Err(Error::Format("record width differs from rows".into()));
        }
        out.push(r.class_id);
        out.extend_from_slice(&r.snr_db.to_le_bytes());
        out.push(r.split.code());
        put_f32s(&mut out, &r.values);
    }
    Ok(out)
}

pub(crate) fn decode(buf: &[u8]) -> Result<FeatureSet> {
    let mut rd = Reader::new(buf, "features");
    let magic: [u8; 4] = rd
        .array()
        .map_err(|_| Error::Format("features: file too short for header".into()))?;
    if &magic != FEATURE_MAGIC {
        return Err(Error::Format(format!("features: bad magic {magic:?}")));
    }
    let version = rd.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!("features: unsupported version {version}")));
    }
    let count = rd.u64()?;
    let rows = usize::from(rd.u16()?);
    let repr = Representation::from_tag(rd.u8()?)
        .ok_or_else(|| Error::Format("features: unknown representation tag".into()))?;
    let flags = rd.u8()?;
    if flags & !(FLAG_BIN_FREQS | FLAG_PROJECTED) != 0 {
        return Err(Error::Format(format!("features: unknown flags {flags:#x}")));
    }
    let bin_freqs = if flags & FLAG_BIN_FREQS != 0 {
        Some((0..rows).map(|_| rd.f64()).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    let rec_bytes = 3 + 8 * rows as u64;
    if count.checked_mul(rec_bytes) != Some(rd.remaining() as u64) {
        return Err(Error::Corrupt(format!(
            "features: header declares {count} records of {rec_bytes} bytes, payload is {} bytes",
            rd.remaining()
        )));
    }
    let mut records = Vec::with_capacity(count as usize);
    for i in 0..count {
        let class_id = rd.u8()?;
        let snr_db = rd.i8()?;
        let split = Split::from_code(rd.u8()?)
            .ok_or_else(|| Error::Corrupt(format!("features: record {i} has bad split code")))?;
        if !(1..=15).contains(&class_id) || !SNR_GRID.contains(&snr_db) {
            return Err(Error::Corrupt(format!("features: record {i} has bad labels")));
        }
        records.push(FeatureRecord {
            class_id,
            snr_db,
            split,
            values: rd.f32_vec(2 * rows)?,
        });
    }
    rd.finish()?;
    Ok(FeatureSet {
        repr,
        rows,
        bin_freqs,
        projected: flags & FLAG_PROJECTED != 0,
        records,
    })
}
