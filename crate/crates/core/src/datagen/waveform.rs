//! Spectrally faithful surrogate waveforms for the three technologies.
//!
//! * Bluetooth: GFSK, 1 Msym/s, modulation index 0.32, Gaussian BT = 0.5.
//! * Zigbee: O-QPSK with half-sine chips at 2 Mchip/s (MSK-equivalent).
//! * WiFi: OFDM with QPSK on the 52 data/pilot subcarriers of a 64-point,
//!   312.5 kHz grid (DC null), synthesized at 4x the capture rate, mixed to the
//!   channel offset, low-pass filtered and decimated.
//!
//! Each frame gets a uniform random carrier phase and timing offset and is
//! scaled to unit mean power.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;

use super::catalog::{class_spec, CaptureSpec, ClassSpec, Technology};
use crate::error::{Error, Result};
use crate::seed;

const BT_SYMBOL_RATE_MHZ: f64 = 1.0;
const BT_MOD_INDEX: f64 = 0.32;
const BT_GAUSSIAN_BT: f64 = 0.5;
const BT_FILTER_SPAN_SYMBOLS: usize = 3;

const ZIGBEE_CHIP_RATE_MHZ: f64 = 2.0;

const WIFI_OVERSAMPLE: usize = 4;
const WIFI_SUBCARRIER_SPACING_MHZ: f64 = 0.3125;
const WIFI_USED_SUBCARRIERS: i32 = 26;
const WIFI_FIR_TAPS: usize = 255;

/// Synthesizes one unit-power capture of the given class.
///
/// Deterministic in `seed`. The capture must have an integer number of samples
/// per Bluetooth symbol and per Zigbee chip (the canonical 10 MS/s does).
pub fn synth_frame(spec: &ClassSpec, capture: &CaptureSpec, seed: u64) -> Result<Vec<Complex64>> {
    let known = class_spec(spec.class_id)?;
    if known != spec {
        return Err(Error::UnknownClass(spec.class_id));
    }
    if capture.vector_len == 0 || capture.sample_rate_msps.is_nan() || capture.sample_rate_msps <= 0.0 {
        return Err(Error::Config(format!("invalid capture {capture:?}")));
    }
    let mut rng = seed::rng(seed);
    let offset = spec.offset_mhz(capture);
    let mut frame = match spec.technology {
        Technology::Bluetooth => gfsk(capture, offset, &mut rng)?,
        Technology::Zigbee => oqpsk(capture, offset, &mut rng)?,
        Technology::WiFi => ofdm(capture, offset, &mut rng)?,
    };
    normalize_power(&mut frame)?;
    Ok(frame)
}

fn integer_ratio(rate: f64, symbol_rate: f64, what: &str) -> Result<usize> {
    let r = rate / symbol_rate;
    if r < 2.0 || (r - r.round()).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "{what}: sample rate {rate} MS/s is not an integer multiple (>= 2) of {symbol_rate} MHz"
        )));
    }
    Ok(r.round() as usize)
}

fn random_phase<R: Rng>(rng: &mut R) -> f64 {
    rng.random::<f64>() * 2.0 * PI
}

fn random_bit<R: Rng>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Multiplies `x` in place by `exp(j*(2*pi*offset*n/rate + phase))`.
fn mix(x: &mut [Complex64], offset_mhz: f64, rate_msps: f64, phase: f64) {
    let w = 2.0 * PI * offset_mhz / rate_msps;
    for (n, v) in x.iter_mut().enumerate() {
        *v *= Complex64::from_polar(1.0, w * n as f64 + phase);
    }
}

fn normalize_power(x: &mut [Complex64]) -> Result<()> {
    let p = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64;
    if !p.is_finite() || p <= 0.0 {
        return Err(Error::DegenerateSignal("synthesized frame has no power".into()));
    }
    let g = 1.0 / p.sqrt();
    x.iter_mut().for_each(|v| *v *= g);
    Ok(())
}

/// Gaussian frequency pulse for a rectangular NRZ stream, unit DC gain.
fn gaussian_taps(sps: usize) -> Vec<f64> {
    let sigma = (2f64.ln()).sqrt() / (2.0 * PI * BT_GAUSSIAN_BT) * sps as f64;
    let half = (BT_FILTER_SPAN_SYMBOLS * sps) as f64 / 2.0;
    let len = BT_FILTER_SPAN_SYMBOLS * sps + 1;
    let taps: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 - half;
            (-t * t / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

fn gfsk<R: Rng>(capture: &CaptureSpec, offset: f64, rng: &mut R) -> Result<Vec<Complex64>> {
    let sps = integer_ratio(capture.sample_rate_msps, BT_SYMBOL_RATE_MHZ, "bluetooth")?;
    let taps = gaussian_taps(sps);
    let n = capture.vector_len;
    let n_sym = (n + taps.len() + sps) / sps + 2;
    let nrz: Vec<f64> = (0..n_sym)
        .flat_map(|_| {
            let b = random_bit(rng);
            std::iter::repeat_n(b, sps)
        })
        .collect();
    // Full convolution is only needed past the filter transient.
    let start = taps.len() + rng.random_range(0..sps);
    let step = PI * BT_MOD_INDEX / sps as f64;
    let mut phase = random_phase(rng);
    let mut out = Vec::with_capacity(n);
    for i in taps.len()..start + n {
        let f: f64 = taps
            .iter()
            .enumerate()
            .map(|(t, &h)| h * nrz[i - t])
            .sum();
        phase += step * f;
        if i >= start {
            out.push(Complex64::from_polar(1.0, phase));
        }
    }
    mix(&mut out, offset, capture.sample_rate_msps, 0.0);
    Ok(out)
}

fn oqpsk<R: Rng>(capture: &CaptureSpec, offset: f64, rng: &mut R) -> Result<Vec<Complex64>> {
    let spc = integer_ratio(capture.sample_rate_msps, ZIGBEE_CHIP_RATE_MHZ, "zigbee")?;
    let pulse = 2 * spc;
    let n = capture.vector_len;
    let start = spc + rng.random_range(0..pulse);
    let n_pulses = (start + n) / pulse + 2;
    let i_chips: Vec<f64> = (0..n_pulses).map(|_| random_bit(rng)).collect();
    let q_chips: Vec<f64> = (0..n_pulses).map(|_| random_bit(rng)).collect();
    let half_sine = |m: usize| (PI * m as f64 / pulse as f64).sin();
    let phase = random_phase(rng);
    let rot = Complex64::from_polar(1.0, phase);
    let mut out: Vec<Complex64> = (start..start + n)
        .map(|t| {
            let i = i_chips[t / pulse] * half_sine(t % pulse);
            let tq = t - spc;
            let q = q_chips[tq / pulse] * half_sine(tq % pulse);
            Complex64::new(i, q) * rot
        })
        .collect();
    mix(&mut out, offset, capture.sample_rate_msps, 0.0);
    Ok(out)
}

/// Blackman-windowed sinc low-pass, unit DC gain. `cutoff` is normalized to
/// the sample rate (0.5 = Nyquist).
fn lowpass_taps(len: usize, cutoff: f64) -> Vec<f64> {
    let mid = (len - 1) as f64 / 2.0;
    let taps: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 - mid;
            let sinc = if t == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * t).sin() / (PI * t)
            };
            let a = 2.0 * PI * i as f64 / (len - 1) as f64;
            let w = 0.42 - 0.5 * a.cos() + 0.08 * (2.0 * a).cos();
            sinc * w
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

fn ofdm<R: Rng>(capture: &CaptureSpec, offset: f64, rng: &mut R) -> Result<Vec<Complex64>> {
    let fast_rate = capture.sample_rate_msps * WIFI_OVERSAMPLE as f64;
    let nfft = integer_ratio(fast_rate, WIFI_SUBCARRIER_SPACING_MHZ, "wifi")?;
    if nfft < 2 * WIFI_USED_SUBCARRIERS as usize + 1 {
        return Err(Error::Config(format!(
            "wifi: sample rate {} MS/s too low for the subcarrier grid",
            capture.sample_rate_msps
        )));
    }
    let cp = nfft / 4;
    let sym_len = nfft + cp;
    let n = capture.vector_len;
    let lead = rng.random_range(0..sym_len);
    let needed = lead + WIFI_OVERSAMPLE * (n - 1) + WIFI_FIR_TAPS;
    let n_sym = needed.div_ceil(sym_len);

    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(nfft);
    let qpsk = std::f64::consts::FRAC_1_SQRT_2;
    let mut stream = Vec::with_capacity(n_sym * sym_len);
    let mut bins = vec![Complex64::new(0.0, 0.0); nfft];
    for _ in 0..n_sym {
        bins.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        for k in -WIFI_USED_SUBCARRIERS..=WIFI_USED_SUBCARRIERS {
            if k == 0 {
                continue;
            }
            let idx = k.rem_euclid(nfft as i32) as usize;
            bins[idx] = Complex64::new(random_bit(rng) * qpsk, random_bit(rng) * qpsk);
        }
        ifft.process(&mut bins);
        stream.extend_from_slice(&bins[nfft - cp..]);
        stream.extend_from_slice(&bins);
    }
    let phase = random_phase(rng);
    mix(&mut stream, offset, fast_rate, phase);

    // Pass band ends 0.4 MHz short of the decimated Nyquist edge.
    let cutoff = (capture.sample_rate_msps / 2.0 - 0.4) / fast_rate;
    let taps = lowpass_taps(WIFI_FIR_TAPS, cutoff);
    let out = (0..n)
        .map(|i| {
            let base = lead + WIFI_OVERSAMPLE * i;
            taps.iter()
                .enumerate()
                .map(|(t, &h)| stream[base + t] * h)
                .sum::<Complex64>()
        })
        .collect();
    Ok(out)
}
