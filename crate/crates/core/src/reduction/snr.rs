use crate::datagen::{Dataset, SampleRecord, Split, SNR_GRID};
use crate::error::{Error, Result};
use crate::transform::{FeatureRecord, FeatureSet};

fn check_grid(snr_db: i8) -> Result<()> {
    if !SNR_GRID.contains(&snr_db) {
        return Err(Error::Config(format!("snr {snr_db} dB is not on the 2 dB grid")));
    }
    Ok(())
}

/// Records of `split` captured at exactly `snr_db`.
pub fn snr_filter(d: &Dataset, snr_db: i8, split: Split) -> Result<Vec<&SampleRecord>> {
    check_grid(snr_db)?;
    let out: Vec<_> = d
        .records
        .iter()
        .filter(|r| r.snr_db == snr_db && r.split == split)
        .collect();
    if out.is_empty() {
        return Err(Error::EmptySelection(format!(
            "no {split:?} records at {snr_db} dB"
        )));
    }
    Ok(out)
}

/// [`snr_filter`] over feature records.
pub fn snr_filter_features(set: &FeatureSet, snr_db: i8, split: Split) -> Result<Vec<&FeatureRecord>> {
    check_grid(snr_db)?;
    let out: Vec<_> = set
        .split(split)
        .filter(|r| r.snr_db == snr_db)
        .collect();
    if out.is_empty() {
        return Err(Error::EmptySelection(format!(
            "no {split:?} records at {snr_db} dB"
        )));
    }
    Ok(out)
}
