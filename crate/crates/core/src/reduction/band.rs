use std::collections::BTreeSet;
use std::ops::Range;
use std::str::FromStr;

use crate::datagen::{CaptureSpec, CATALOG};
use crate::error::{Error, Result};
use crate::transform::{FeatureMatrix, FeatureSet};

const EPS: f64 = 1e-9;

/// Disjoint, sorted absolute frequency ranges in MHz.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSpec {
    ranges: Vec<(f64, f64)>,
}

impl BandSpec {
    pub fn new(mut ranges: Vec<(f64, f64)>) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::Config("band has no ranges".into()));
        }
        for &(lo, hi) in &ranges {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!("invalid band range {lo}-{hi}")));
            }
        }
        ranges.sort_by(|a, b| a.0.total_cmp(&b.0));
        if ranges.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(Error::Config("band ranges overlap".into()));
        }
        Ok(Self { ranges })
    }

    /// The whole capture band.
    pub fn full(capture: &CaptureSpec) -> Self {
        Self {
            ranges: vec![(capture.low_mhz(), capture.high_mhz())],
        }
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    pub fn total_width_mhz(&self) -> f64 {
        self.ranges.iter().map(|(lo, hi)| hi - lo).sum()
    }

    /// Same ranges plus one more.
    pub fn with_range(&self, lo: f64, hi: f64) -> Result<Self> {
        let mut r = self.ranges.clone();
        r.push((lo, hi));
        Self::new(r)
    }
}

impl std::fmt::Display for BandSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .ranges
            .iter()
            .map(|(lo, hi)| format!("{lo}-{hi}"))
            .collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for BandSpec {
    type Err = Error;

    /// Parses `"2429-2431"` or `"2429-2431,2422-2424"` (absolute MHz).
    fn from_str(s: &str) -> Result<Self> {
        let ranges = s
            .split(',')
            .map(|part| {
                let (lo, hi) = part
                    .trim()
                    .split_once('-')
                    .ok_or_else(|| Error::Config(format!("band range '{part}' is not LOW-HIGH")))?;
                let parse = |v: &str| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad frequency '{v}' in band")))
                };
                Ok((parse(lo)?, parse(hi)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ranges)
    }
}

/// Maps each MHz range to a contiguous range of DC-centered FFT bins.
///
/// A range starts at the bin holding its low edge and spans `W/df` bins
/// rounded to nearest, then up to an even count.
pub fn band_to_bins(band: &BandSpec, capture: &CaptureSpec) -> Result<Vec<Range<usize>>> {
    let df = capture.bin_spacing_mhz();
    let f_min = capture.low_mhz();
    let n = capture.vector_len;
    let mut out: Vec<Range<usize>> = Vec::with_capacity(band.ranges.len());
    for &(lo, hi) in &band.ranges {
        if lo < capture.low_mhz() - EPS || hi > capture.high_mhz() + EPS {
            return Err(Error::Range(format!(
                "band {lo}-{hi} MHz outside capture {}-{} MHz",
                capture.low_mhz(),
                capture.high_mhz()
            )));
        }
        let start = ((lo - f_min) / df + EPS).floor().max(0.0) as usize;
        let mut count = ((hi - lo) / df).round_ties_even().max(1.0) as usize;
        if count % 2 == 1 {
            count += 1;
        }
        let end = (start + count).min(n);
        if let Some(prev) = out.last() {
            if start < prev.end {
                return Err(Error::Range(format!(
                    "band {lo}-{hi} MHz overlaps the previous range once mapped to bins"
                )));
            }
        }
        out.push(start..end);
    }
    Ok(out)
}

/// Classes whose channel interval overlaps any band range (touching edges do
/// not count).
pub fn observable_classes(band: &BandSpec) -> BTreeSet<u8> {
    CATALOG
        .iter()
        .filter(|c| {
            let (clo, chi) = c.interval_mhz();
            band.ranges.iter().any(|&(lo, hi)| clo < hi && lo < chi)
        })
        .map(|c| c.class_id)
        .collect()
}

fn full_spectrum_capture(rows: usize, freqs: Option<&Vec<f64>>) -> Result<CaptureSpec> {
    let freqs = freqs.ok_or_else(|| {
        Error::Representation("band selection needs frequency-domain features".into())
    })?;
    let capture = CaptureSpec {
        vector_len: rows,
        ..CaptureSpec::default()
    };
    if *freqs != capture.bin_offsets_mhz() {
        return Err(Error::Dimension(
            "band selection needs the full, unreduced spectrum".into(),
        ));
    }
    Ok(capture)
}

fn band_indices(band: &BandSpec, capture: &CaptureSpec) -> Result<Vec<usize>> {
    Ok(band_to_bins(band, capture)?.into_iter().flatten().collect())
}

/// Keeps the rows inside the band, ranges concatenated low to high.
pub fn apply_band(features: &FeatureMatrix, band: &BandSpec) -> Result<FeatureMatrix> {
    if !features.repr.is_frequency_domain() {
        return Err(Error::Representation(format!(
            "band selection on {} features",
            features.repr
        )));
    }
    let capture = full_spectrum_capture(features.rows, features.bin_freqs.as_ref())?;
    features.select_rows(&band_indices(band, &capture)?)
}

/// [`apply_band`] over a whole set.
pub fn apply_band_set(set: &FeatureSet, band: &BandSpec) -> Result<FeatureSet> {
    if !set.repr.is_frequency_domain() || set.projected {
        return Err(Error::Representation(format!(
            "band selection on {} features",
            set.repr
        )));
    }
    let capture = full_spectrum_capture(set.rows, set.bin_freqs.as_ref())?;
    set.select_rows(&band_indices(band, &capture)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::Representation;
    use proptest::prelude::*;

    fn cap() -> CaptureSpec {
        CaptureSpec::default()
    }

    #[test]
    fn bins_for_paper_bands() {
        let b: BandSpec = "2429-2431".parse().unwrap();
        assert_eq!(band_to_bins(&b, &cap()).unwrap(), vec![96..122]);
        let b: BandSpec = "2422-2424".parse().unwrap();
        assert_eq!(band_to_bins(&b, &cap()).unwrap(), vec![6..32]);
        let b = BandSpec::full(&cap());
        assert_eq!(band_to_bins(&b, &cap()).unwrap(), vec![0..128]);
        let b: BandSpec = "2429-2431,2422-2424".parse().unwrap();
        assert_eq!(band_to_bins(&b, &cap()).unwrap(), vec![6..32, 96..122]);
    }

    #[test]
    fn out_of_capture_band_rejected() {
        let b: BandSpec = "2420-2423".parse().unwrap();
        assert!(matches!(band_to_bins(&b, &cap()), Err(Error::Range(_))));
        let b: BandSpec = "2430-2432".parse().unwrap();
        assert!(matches!(band_to_bins(&b, &cap()), Err(Error::Range(_))));
    }

    #[test]
    fn malformed_bands_rejected() {
        assert!("2429".parse::<BandSpec>().is_err());
        assert!("2431-2429".parse::<BandSpec>().is_err());
        assert!("2422-2425,2424-2426".parse::<BandSpec>().is_err());
        assert!(BandSpec::new(vec![]).is_err());
    }

    #[test]
    fn observable_sets() {
        let b: BandSpec = "2429-2431".parse().unwrap();
        let got: Vec<u8> = observable_classes(&b).into_iter().collect();
        assert_eq!(got, vec![8, 9, 10, 11, 12, 13, 15]);
        let b: BandSpec = "2422-2424,2429-2431".parse().unwrap();
        let got: Vec<u8> = observable_classes(&b).into_iter().collect();
        assert_eq!(got, vec![1, 2, 3, 8, 9, 10, 11, 12, 13, 15]);
        assert_eq!(observable_classes(&BandSpec::full(&cap())).len(), 15);
    }

    fn spectrum() -> FeatureMatrix {
        FeatureMatrix {
            values: (0..256).map(|v| v as f32).collect(),
            rows: 128,
            repr: Representation::FreqIq,
            bin_freqs: Some(cap().bin_offsets_mhz()),
        }
    }

    #[test]
    fn apply_band_shapes() {
        let f = spectrum();
        let two: BandSpec = "2429-2431".parse().unwrap();
        let out = apply_band(&f, &two).unwrap();
        assert_eq!(out.rows, 26);
        assert_eq!(out.row(0), [192.0, 193.0]);
        let four: BandSpec = "2429-2431,2422-2424".parse().unwrap();
        let out = apply_band(&f, &four).unwrap();
        assert_eq!(out.rows, 52);
        assert_eq!(out.row(0), [12.0, 13.0]);
        assert_eq!(out.row(26), [192.0, 193.0]);
        assert_eq!(out.bin_freqs.as_ref().unwrap().len(), 52);
        assert_eq!(apply_band(&f, &BandSpec::full(&cap())).unwrap(), f);
    }

    #[test]
    fn apply_band_needs_full_spectrum() {
        let mut f = spectrum();
        f.repr = Representation::TimeIq;
        let b: BandSpec = "2429-2431".parse().unwrap();
        assert!(matches!(apply_band(&f, &b), Err(Error::Representation(_))));
        let f = spectrum();
        let reduced = apply_band(&f, &b).unwrap();
        assert!(apply_band(&reduced, &b).is_err());
    }

    proptest! {
        #[test]
        fn bins_are_disjoint_and_inside_band(
            a in 0.0f64..9.0, wa in 0.1f64..3.0, gap in 0.0f64..3.0, wb in 0.1f64..3.0
        ) {
            let lo = 2421.5 + a;
            let hi = (lo + wa).min(2431.5);
            let mut ranges = vec![(lo, hi)];
            let lo2 = hi + gap;
            if lo2 + wb <= 2431.5 {
                ranges.push((lo2, lo2 + wb));
            }
            let band = BandSpec::new(ranges.clone()).unwrap();
            let c = cap();
            let df = c.bin_spacing_mhz();
            let freqs = c.bin_offsets_mhz();
            match band_to_bins(&band, &c) {
                Ok(bins) => {
                    for w in bins.windows(2) {
                        prop_assert!(w[0].end <= w[1].start);
                    }
                    for (r, &(lo, hi)) in bins.iter().zip(&ranges) {
                        for k in r.clone() {
                            let f = c.center_mhz + freqs[k];
                            // Each bin's cell overlaps the range widened by df/2.
                            prop_assert!(f + df / 2.0 >= lo - df / 2.0 - 1e-9);
                            prop_assert!(f - df / 2.0 <= hi + df / 2.0 + 1e-9);
                        }
                    }
                }
                Err(e) => prop_assert!(matches!(e, Error::Range(_))),
            }
        }

        #[test]
        fn observable_is_monotone(a in 0.0f64..9.5, w in 0.05f64..0.5, b in 0.0f64..9.5) {
            let lo = 2421.5 + a;
            let base = BandSpec::new(vec![(lo, lo + w)]).unwrap();
            let lo2 = 2421.5 + b;
            if let Ok(bigger) = base.with_range(lo2, lo2 + w) {
                prop_assert!(observable_classes(&base).is_subset(&observable_classes(&bigger)));
            }
        }
    }
}
