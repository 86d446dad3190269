//! Dataset container: magic `WII1`, u16 version, u64 record count,
//! u16 vector length, then per record `class u8, snr i8, split u8` followed by
//! `vector_len` interleaved `(I f32, Q f32)` pairs. All little-endian.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex32;

use super::catalog::CaptureSpec;
use super::dataset::{Dataset, SampleRecord, Split, SNR_GRID};
use crate::binio::{put_f32s, Reader};
use crate::error::{Error, Result};

pub const DATASET_MAGIC: &[u8; 4] = b"WII1";
const VERSION: u16 = 1;

pub fn write_dataset_to<W: Write>(d: &Dataset, mut w: W) -> Result<()> {
    let len = d.capture.vector_len;
    let len16 = u16::try_from(len)
        .map_err(|_| Error::Format(format!("vector length {len} exceeds u16")))?;
    let mut out = Vec::with_capacity(16 + d.records.len() * (3 + 8 * len));
    out.extend_from_slice(DATASET_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(d.records.len() as u64).to_le_bytes());
    out.extend_from_slice(&len16.to_le_bytes());
    for r in &d.records {
        if r.iq.len() != len {
            return Err(Error::Format(format!(
                "record has {} samples, expected {len}",
                r.iq.len()
            )));
        }
        out.push(r.class_id);
        out.extend_from_slice(&r.snr_db.to_le_bytes());
        out.push(r.split.code());
        for v in &r.iq {
            put_f32s(&mut out, &[v.re, v.im]);
        }
    }
    w.write_all(&out)?;
    w.flush()?;
    Ok(())
}

pub fn write_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let f = fs::File::create(path)?;
    write_dataset_to(d, std::io::BufWriter::new(f))
}

pub fn read_dataset_from<R: Read>(mut r: R) -> Result<Dataset> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    parse(&buf)
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    parse(&fs::read(path)?)
}

fn parse(buf: &[u8]) -> Result<Dataset> {
    let mut rd = Reader::new(buf, "dataset");
    let magic: [u8; 4] = rd
        .array()
        .map_err(|_| Error::Format("dataset: file too short for header".into()))?;
    if &magic != DATASET_MAGIC {
        return Err(Error::Format(format!("dataset: bad magic {magic:?}")));
    }
    let version = rd.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!("dataset: unsupported version {version}")));
    }
    let count = rd.u64()?;
    let len = usize::from(rd.u16()?);
    let rec_bytes = 3 + 8 * len as u64;
    if count.checked_mul(rec_bytes) != Some(rd.remaining() as u64) {
        return Err(Error::Corrupt(format!(
            "dataset: header declares {count} records of {rec_bytes} bytes, payload is {} bytes",
            rd.remaining()
        )));
    }
    let mut records = Vec::with_capacity(count as usize);
    for i in 0..count {
        let class_id = rd.u8()?;
        if !(1..=15).contains(&class_id) {
            return Err(Error::Corrupt(format!("dataset: record {i} has class {class_id}")));
        }
        let snr_db = rd.i8()?;
        if !SNR_GRID.contains(&snr_db) {
            return Err(Error::Corrupt(format!("dataset: record {i} has snr {snr_db}")));
        }
        let split = Split::from_code(rd.u8()?)
            .ok_or_else(|| Error::Corrupt(format!("dataset: record {i} has bad split code")))?;
        let iq = rd
            .f32_vec(2 * len)?
            .chunks_exact(2)
            .map(|p| Complex32::new(p[0], p[1]))
            .collect();
        records.push(SampleRecord {
            class_id,
            snr_db,
            iq,
            split,
        });
    }
    rd.finish()?;
    Ok(Dataset {
        capture: CaptureSpec {
            vector_len: len,
            ..CaptureSpec::default()
        },
        records,
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{build_dataset, DatasetConfig};

    fn small() -> Dataset {
        let mut cfg = DatasetConfig::with_cells(3, 4);
        cfg.snr_list = vec![-20, 0, 20];
        build_dataset(&cfg).unwrap()
    }

    fn bytes(d: &Dataset) -> Vec<u8> {
        let mut out = Vec::new();
        write_dataset_to(d, &mut out).unwrap();
        out
    }

    #[test]
    fn roundtrip_is_exact() {
        let d = small();
        let back = read_dataset_from(&bytes(&d)[..]).unwrap();
        assert_eq!(back.records, d.records);
        assert_eq!(back.capture, d.capture);
        assert_eq!(back.seed, None);
    }

    #[test]
    fn header_layout() {
        let d = small();
        let b = bytes(&d);
        assert_eq!(&b[..4], b"WII1");
        assert_eq!(u16::from_le_bytes([b[4], b[5]]), 1);
        assert_eq!(u64::from_le_bytes(b[6..14].try_into().unwrap()), 135);
        assert_eq!(u16::from_le_bytes([b[14], b[15]]), 128);
        assert_eq!(b.len(), 16 + 135 * (3 + 1024));
        let first = &d.records[0];
        assert_eq!(b[16], first.class_id);
        assert_eq!(b[17] as i8, first.snr_db);
        assert_eq!(f32::from_le_bytes(b[19..23].try_into().unwrap()), first.iq[0].re);
        assert_eq!(f32::from_le_bytes(b[23..27].try_into().unwrap()), first.iq[0].im);
    }

    #[test]
    fn empty_dataset_roundtrips() {
        let d = Dataset {
            capture: CaptureSpec::default(),
            records: vec![],
            seed: None,
        };
        let b = bytes(&d);
        assert_eq!(b.len(), 16);
        assert_eq!(read_dataset_from(&b[..]).unwrap(), d);
    }

    #[test]
    fn wrong_magic_is_format_error() {
        let mut b = bytes(&small());
        b[0] = b'X';
        assert!(matches!(read_dataset_from(&b[..]), Err(Error::Format(_))));
        let mut b = bytes(&small());
        b[4] = 9;
        assert!(matches!(read_dataset_from(&b[..]), Err(Error::Format(_))));
        assert!(matches!(read_dataset_from(&b"WI"[..]), Err(Error::Format(_))));
    }

    #[test]
    fn truncation_is_corruption() {
        let b = bytes(&small());
        for cut in [b.len() - 1, b.len() - 500, 20] {
            assert!(matches!(
                read_dataset_from(&b[..cut]),
                Err(Error::Corrupt(_))
            ));
        }
        let mut extra = b.clone();
        extra.push(0);
        assert!(matches!(read_dataset_from(&extra[..]), Err(Error::Corrupt(_))));
    }
}
