use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use wii_core::datagen::{class_spec, synth_frame, CaptureSpec, Technology, CATALOG};
use wii_core::seed;
use wii_core::transform::{fft_shifted, ifft_shifted};

fn naive_dft_shifted(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let f = k as f64 - (n / 2) as f64;
            x.iter()
                .enumerate()
                .map(|(t, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * f * t as f64 / n as f64))
                .sum()
        })
        .collect()
}

fn random_vector(seed: u64, n: usize) -> Vec<Complex64> {
    let mut rng = seed::rng(seed);
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

#[test]
fn fft_matches_naive_dft() {
    let mut worst = 0.0f64;
    for s in 0..100 {
        let x = random_vector(s, 128);
        let fast = fft_shifted(&x).unwrap();
        let slow = naive_dft_shifted(&x);
        for (a, b) in fast.iter().zip(&slow) {
            worst = worst.max((a - b).norm());
        }
    }
    assert!(worst < 1e-9, "max abs error {worst:e}");
}

#[test]
fn parseval_holds() {
    for s in 0..100 {
        let x = random_vector(1000 + s, 128);
        let time: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let freq: f64 = fft_shifted(&x).unwrap().iter().map(|v| v.norm_sqr()).sum::<f64>() / 128.0;
        assert!((time - freq).abs() < 1e-9, "{time} vs {freq}");
    }
}

proptest! {
    #[test]
    fn inverse_undoes_forward(s in any::<u64>(), log_n in 1u32..9) {
        let x = random_vector(s, 1 << log_n);
        let back = ifft_shifted(&fft_shifted(&x).unwrap()).unwrap();
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }
}

/// Averaged periodogram of `frames` captures of one class, one value per shifted bin.
fn mean_periodogram(class_id: u8, frames: u64) -> Vec<f64> {
    let capture = CaptureSpec::default();
    let spec = class_spec(class_id).unwrap();
    let mut acc = vec![0.0; capture.vector_len];
    for f in 0..frames {
        let x = synth_frame(spec, &capture, seed::derive(77, &[u64::from(class_id), f])).unwrap();
        for (a, v) in acc.iter_mut().zip(fft_shifted(&x).unwrap()) {
            *a += v.norm_sqr();
        }
    }
    acc.iter_mut().for_each(|a| *a /= frames as f64);
    acc
}

fn centroid_mhz(psd: &[f64], freqs: &[f64]) -> f64 {
    let total: f64 = psd.iter().sum();
    psd.iter().zip(freqs).map(|(p, f)| p * f).sum::<f64>() / total
}

fn power_fraction_within(psd: &[f64], freqs: &[f64], lo: f64, hi: f64) -> f64 {
    let total: f64 = psd.iter().sum();
    let inside: f64 = psd
        .iter()
        .zip(freqs)
        .filter(|(_, &f)| f >= lo && f <= hi)
        .map(|(p, _)| p)
        .sum();
    inside / total
}

#[test]
fn narrowband_classes_sit_on_their_channel() {
    let capture = CaptureSpec::default();
    let freqs = capture.bin_offsets_mhz();
    for spec in CATALOG.iter().filter(|s| s.technology != Technology::WiFi) {
        let psd = mean_periodogram(spec.class_id, 200);
        let offset = spec.offset_mhz(&capture);
        let c = centroid_mhz(&psd, &freqs);
        assert!((c - offset).abs() < 0.2, "class {} centroid {c} vs {offset}", spec.class_id);
        let half = spec.width_mhz / 2.0 + 0.5;
        let frac = power_fraction_within(&psd, &freqs, offset - half, offset + half);
        assert!(frac > 0.9, "class {} keeps {frac} of its power near the channel", spec.class_id);
    }
}

/// Width of the contiguous run of bins around the peak within `db` of it.
fn bandwidth_mhz(psd: &[f64], df: f64, db: f64) -> f64 {
    let peak_bin = (0..psd.len()).fold(0, |b, i| if psd[i] > psd[b] { i } else { b });
    let floor = psd[peak_bin] * 10f64.powf(-db / 10.0);
    let lo = (0..=peak_bin).rev().take_while(|&i| psd[i] >= floor).count();
    let hi = (peak_bin..psd.len()).take_while(|&i| psd[i] >= floor).count();
    (lo + hi - 1) as f64 * df
}

fn peak_mhz(psd: &[f64], freqs: &[f64]) -> f64 {
    let peak_bin = (0..psd.len()).fold(0, |b, i| if psd[i] > psd[b] { i } else { b });
    freqs[peak_bin]
}

#[test]
fn periodogram_peaks_on_channel_offsets() {
    let capture = CaptureSpec::default();
    let freqs = capture.bin_offsets_mhz();
    for spec in CATALOG.iter() {
        let psd = mean_periodogram(spec.class_id, 300);
        let peak = peak_mhz(&psd, &freqs);
        let offset = spec.offset_mhz(&capture);
        if spec.technology == Technology::WiFi {
            let (lo, hi) = spec.interval_mhz();
            let lo = lo.max(capture.low_mhz()) - capture.center_mhz;
            let hi = hi.min(capture.high_mhz()) - capture.center_mhz;
            assert!(peak >= lo && peak <= hi, "class {} peak {peak} outside [{lo}, {hi}]", spec.class_id);
        } else {
            assert!((peak - offset).abs() <= 0.25, "class {} peak {peak} vs {offset}", spec.class_id);
        }
    }
}

#[test]
fn wifi_energy_stays_inside_its_subcarriers() {
    let capture = CaptureSpec::default();
    let freqs = capture.bin_offsets_mhz();
    for spec in CATALOG.iter().filter(|s| s.technology == Technology::WiFi) {
        let psd = mean_periodogram(spec.class_id, 100);
        let offset = spec.offset_mhz(&capture);
        // 26 subcarriers of 312.5 kHz on each side of the carrier
        let occupied = 26.0 * 0.3125 + 0.1;
        let frac = power_fraction_within(&psd, &freqs, offset - occupied, offset + occupied);
        assert!(frac > 0.95, "class {} keeps {frac} inside its subcarriers", spec.class_id);
    }
}

#[test]
fn class_one_bluetooth_bandwidth() {
    let capture = CaptureSpec::default();
    let psd = mean_periodogram(1, 1000);
    let peak = peak_mhz(&psd, &capture.bin_offsets_mhz());
    assert!((peak + 4.5).abs() <= 0.2, "peak at {peak} MHz");
    let bw = bandwidth_mhz(&psd, capture.bin_spacing_mhz(), 20.0);
    assert!((0.5..=1.5).contains(&bw), "-20 dB bandwidth {bw} MHz");
}

#[test]
fn class_fourteen_zigbee_bandwidth() {
    let capture = CaptureSpec::default();
    let psd = mean_periodogram(14, 1000);
    let peak = peak_mhz(&psd, &capture.bin_offsets_mhz());
    assert!((peak + 1.5).abs() <= 0.25, "peak at {peak} MHz");
    let bw = bandwidth_mhz(&psd, capture.bin_spacing_mhz(), 3.0);
    assert!((1.0..=3.0).contains(&bw), "-3 dB bandwidth {bw} MHz");
}
