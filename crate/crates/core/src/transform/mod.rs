//! Feature representations of I/Q records: time-domain I/Q, DC-centered
//! unitary spectrum I/Q, and spectrum amplitude/phase.

mod set;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::{Complex, Complex32, Complex64};
use num_traits::Float;
use rustfft::{FftNum, FftPlanner};

use crate::datagen::{CaptureSpec, SampleRecord};
use crate::error::{Error, Result};

pub use set::{read_features, write_features, FeatureRecord, FeatureSet, FEATURE_MAGIC};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Representation {
    TimeIq,
    #[default]
    FreqIq,
    FreqAmpPhase,
}

impl Representation {
    pub const ALL: [Representation; 3] = [
        Representation::TimeIq,
        Representation::FreqIq,
        Representation::FreqAmpPhase,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Representation::TimeIq => "time-iq",
            Representation::FreqIq => "freq-iq",
            Representation::FreqAmpPhase => "freq-amp-phase",
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Representation::TimeIq => 0,
            Representation::FreqIq => 1,
            Representation::FreqAmpPhase => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.tag() == tag)
    }

    pub fn is_frequency_domain(self) -> bool {
        self != Representation::TimeIq
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown representation '{s}'")))
    }
}

/// Real `rows x 2` feature matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Vec<f32>,
    pub rows: usize,
    pub repr: Representation,
    /// Baseband frequency (MHz) of each row, for frequency-domain kinds.
    pub bin_freqs: Option<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn row(&self, i: usize) -> [f32; 2] {
        [self.values[2 * i], self.values[2 * i + 1]]
    }

    /// Keeps the given rows in order; `bin_freqs` follows.
    pub fn select_rows(&self, indices: &[usize]) -> Result<FeatureMatrix> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.rows) {
            return Err(Error::Dimension(format!(
                "row index {bad} out of range for {} rows",
                self.rows
            )));
        }
        Ok(FeatureMatrix {
            values: gather_rows(&self.values, indices),
            rows: indices.len(),
            repr: self.repr,
            bin_freqs: self
                .bin_freqs
                .as_ref()
                .map(|f| indices.iter().map(|&i| f[i]).collect()),
        })
    }
}

pub(crate) fn gather_rows(values: &[f32], indices: &[usize]) -> Vec<f32> {
    indices
        .iter()
        .flat_map(|&i| [values[2 * i], values[2 * i + 1]])
        .collect()
}

fn check_pow2(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Size(format!("transform length {n} is not a power of two")));
    }
    Ok(())
}

/// Unnormalized DFT, reordered so index `k` holds frequency `-fs/2 + k*fs/N`.
pub fn fft_shifted<T: FftNum + Float>(x: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    let n = x.len();
    check_pow2(n)?;
    let mut buf = x.to_vec();
    FftPlanner::<T>::new().plan_fft_forward(n).process(&mut buf);
    buf.rotate_left(n / 2);
    Ok(buf)
}

/// Inverse of [`fft_shifted`], including the `1/N` factor.
pub fn ifft_shifted<T: FftNum + Float>(spectrum: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    let n = spectrum.len();
    check_pow2(n)?;
    let mut buf = spectrum.to_vec();
    buf.rotate_right(n / 2);
    FftPlanner::<T>::new().plan_fft_inverse(n).process(&mut buf);
    let scale = T::one() / T::from(n).unwrap();
    buf.iter_mut().for_each(|v| *v = *v * scale);
    Ok(buf)
}

/// Polar form of a spectrum bin. Phase lies in `(-pi, pi]` and is 0 for a zero bin.
pub fn amp_phase(v: Complex64) -> (f64, f64) {
    let amp = v.norm();
    if amp == 0.0 {
        return (0.0, 0.0);
    }
    let phase = v.im.atan2(v.re);
    (amp, if phase <= -PI { PI } else { phase })
}

/// Converts one record into the requested representation.
pub fn to_features(r: &SampleRecord, kind: Representation) -> Result<FeatureMatrix> {
    iq_to_features(&r.iq, kind)
}

/// [`to_features`] on a bare I/Q vector.
pub fn iq_to_features(iq: &[Complex32], kind: Representation) -> Result<FeatureMatrix> {
    let n = iq.len();
    if kind == Representation::TimeIq {
        if n == 0 {
            return Err(Error::Size("empty record".into()));
        }
        return Ok(FeatureMatrix {
            values: iq.iter().flat_map(|v| [v.re, v.im]).collect(),
            rows: n,
            repr: kind,
            bin_freqs: None,
        });
    }
    let x: Vec<Complex64> = iq
        .iter()
        .map(|v| Complex64::new(f64::from(v.re), f64::from(v.im)))
        .collect();
    let spectrum = fft_shifted(&x)?;
    let scale = 1.0 / (n as f64).sqrt();
    let values = spectrum
        .iter()
        .flat_map(|&v| {
            let v = v * scale;
            match kind {
                Representation::FreqAmpPhase => {
                    let (a, p) = amp_phase(v);
                    // Narrowing can round a phase just above -pi onto -pi.
                    let p = p as f32;
                    let p = if p <= -std::f32::consts::PI { std::f32::consts::PI } else { p };
                    [a as f32, p]
                }
                _ => [v.re as f32, v.im as f32],
            }
        })
        .collect();
    let capture = CaptureSpec {
        vector_len: n,
        ..CaptureSpec::default()
    };
    Ok(FeatureMatrix {
        values,
        rows: n,
        repr: kind,
        bin_freqs: Some(capture.bin_offsets_mhz()),
    })
}
