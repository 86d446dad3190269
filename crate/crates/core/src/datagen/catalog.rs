use std::fmt;

use crate::error::{Error, Result};

/// Wireless technology of a channel class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Technology {
    Bluetooth,
    WiFi,
    Zigbee,
}

impl Technology {
    pub const ALL: [Technology; 3] = [Technology::Bluetooth, Technology::WiFi, Technology::Zigbee];

    pub fn name(self) -> &'static str {
        match self {
            Technology::Bluetooth => "bluetooth",
            Technology::WiFi => "wifi",
            Technology::Zigbee => "zigbee",
        }
    }
}

impl fmt::Display for Technology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One channel class: technology, absolute center frequency and channel width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassSpec {
    pub class_id: u8,
    pub technology: Technology,
    pub center_mhz: f64,
    pub width_mhz: f64,
}

impl ClassSpec {
    /// Center frequency relative to the capture center, in MHz.
    pub fn offset_mhz(&self, capture: &CaptureSpec) -> f64 {
        self.center_mhz - capture.center_mhz
    }

    /// Occupied channel interval `[center - width/2, center + width/2]`.
    pub fn interval_mhz(&self) -> (f64, f64) {
        (
            self.center_mhz - self.width_mhz / 2.0,
            self.center_mhz + self.width_mhz / 2.0,
        )
    }
}

const fn class(class_id: u8, technology: Technology, center_mhz: f64, width_mhz: f64) -> ClassSpec {
    ClassSpec {
        class_id,
        technology,
        center_mhz,
        width_mhz,
    }
}

/// The 15 classes, indexed by `class_id - 1`.
pub const CATALOG: [ClassSpec; 15] = [
    class(1, Technology::Bluetooth, 2422.0, 1.0),
    class(2, Technology::Bluetooth, 2423.0, 1.0),
    class(3, Technology::Bluetooth, 2424.0, 1.0),
    class(4, Technology::Bluetooth, 2425.0, 1.0),
    class(5, Technology::Bluetooth, 2426.0, 1.0),
    class(6, Technology::Bluetooth, 2427.0, 1.0),
    class(7, Technology::Bluetooth, 2428.0, 1.0),
    class(8, Technology::Bluetooth, 2429.0, 1.0),
    class(9, Technology::Bluetooth, 2430.0, 1.0),
    class(10, Technology::Bluetooth, 2431.0, 1.0),
    class(11, Technology::WiFi, 2422.0, 20.0),
    class(12, Technology::WiFi, 2427.0, 20.0),
    class(13, Technology::WiFi, 2432.0, 20.0),
    class(14, Technology::Zigbee, 2425.0, 2.0),
    class(15, Technology::Zigbee, 2430.0, 2.0),
];

pub fn class_spec(class_id: u8) -> Result<&'static ClassSpec> {
    match class_id {
        1..=15 => Ok(&CATALOG[usize::from(class_id) - 1]),
        _ => Err(Error::UnknownClass(class_id)),
    }
}

/// Receiver capture geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptureSpec {
    pub center_mhz: f64,
    pub sample_rate_msps: f64,
    pub vector_len: usize,
}

impl Default for CaptureSpec {
    fn default() -> Self {
        Self {
            center_mhz: 2426.5,
            sample_rate_msps: 10.0,
            vector_len: 128,
        }
    }
}

impl CaptureSpec {
    pub fn duration_us(&self) -> f64 {
        self.vector_len as f64 / self.sample_rate_msps
    }

    /// Lower edge of the observable band (absolute MHz).
    pub fn low_mhz(&self) -> f64 {
        self.center_mhz - self.sample_rate_msps / 2.0
    }

    /// Upper edge of the observable band (absolute MHz).
    pub fn high_mhz(&self) -> f64 {
        self.center_mhz + self.sample_rate_msps / 2.0
    }

    /// FFT bin spacing in MHz.
    pub fn bin_spacing_mhz(&self) -> f64 {
        self.sample_rate_msps / self.vector_len as f64
    }

    /// Baseband frequency offset (MHz) of each DC-centered FFT bin.
    pub fn bin_offsets_mhz(&self) -> Vec<f64> {
        let half = self.sample_rate_msps / 2.0;
        let df = self.bin_spacing_mhz();
        (0..self.vector_len).map(|k| -half + k as f64 * df).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_matches_channel_table() {
        let expected: [(u8, Technology, f64, f64); 15] = [
            (1, Technology::Bluetooth, 2422.0, 1.0),
            (2, Technology::Bluetooth, 2423.0, 1.0),
            (3, Technology::Bluetooth, 2424.0, 1.0),
            (4, Technology::Bluetooth, 2425.0, 1.0),
            (5, Technology::Bluetooth, 2426.0, 1.0),
            (6, Technology::Bluetooth, 2427.0, 1.0),
            (7, Technology::Bluetooth, 2428.0, 1.0),
            (8, Technology::Bluetooth, 2429.0, 1.0),
            (9, Technology::Bluetooth, 2430.0, 1.0),
            (10, Technology::Bluetooth, 2431.0, 1.0),
            (11, Technology::WiFi, 2422.0, 20.0),
            (12, Technology::WiFi, 2427.0, 20.0),
            (13, Technology::WiFi, 2432.0, 20.0),
            (14, Technology::Zigbee, 2425.0, 2.0),
            (15, Technology::Zigbee, 2430.0, 2.0),
        ];
        assert_eq!(CATALOG.len(), 15);
        for (spec, (id, tech, center, width)) in CATALOG.iter().zip(expected) {
            assert_eq!(spec.class_id, id);
            assert_eq!(spec.technology, tech);
            assert_eq!(spec.center_mhz, center);
            assert_eq!(spec.width_mhz, width);
        }
    }

    #[test]
    fn offsets_lie_within_capture() {
        let cap = CaptureSpec::default();
        for spec in &CATALOG {
            let off = spec.offset_mhz(&cap);
            assert!((-5.5..=5.5).contains(&off), "class {} offset {off}", spec.class_id);
        }
    }

    #[test]
    fn capture_geometry() {
        let cap = CaptureSpec::default();
        assert!((cap.duration_us() - 12.8).abs() < 1e-12);
        assert_eq!(cap.low_mhz(), 2421.5);
        assert_eq!(cap.high_mhz(), 2431.5);
        assert_eq!(cap.bin_spacing_mhz(), 0.078125);
        let bins = cap.bin_offsets_mhz();
        assert_eq!(bins[0], -5.0);
        assert_eq!(bins[64], 0.0);
    }

    #[test]
    fn unknown_class_rejected() {
        assert!(matches!(class_spec(0), Err(Error::UnknownClass(0))));
        assert!(matches!(class_spec(16), Err(Error::UnknownClass(16))));
        assert_eq!(class_spec(14).unwrap().technology, Technology::Zigbee);
    }
}
