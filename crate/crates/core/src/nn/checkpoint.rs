//! `WIIM` model files: architecture descriptor, class ids, training summary
//! and little-endian f32 parameter blobs.

use std::fs;
use std::path::Path;

use super::arch::{ArchSpec, LayerSpec};
use super::layers::Shape3;
use super::model::{Model, TrainSummary};
use super::real::Real;
use crate::binio::{put_f32s, Reader};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"WIIM";
const VERSION: u16 = 1;

const TAG_CONV: u8 = 0;
const TAG_RELU: u8 = 1;
const TAG_DROPOUT: u8 = 2;
const TAG_FLATTEN: u8 = 3;
const TAG_DENSE: u8 = 4;
const TAG_SOFTMAX: u8 = 5;

fn u32_of(v: usize, what: &str) -> Result<[u8; 4]> {
    u32::try_from(v)
        .map(u32::to_le_bytes)
        .map_err(|_| Error::Format(format!("{what} {v} does not fit the model format")))
}

pub fn encode_model<T: Real>(model: &Model<T>) -> Result<Vec<u8>> {
    let arch = model.arch();
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for (v, what) in [(arch.input.l, "input rows"), (arch.input.w, "input width"), (arch.input.c, "input channels")] {
        out.extend_from_slice(&u32_of(v, what)?);
    }
    out.extend_from_slice(&u32_of(arch.num_classes, "class count")?);
    out.extend_from_slice(&u32_of(arch.layers.len(), "layer count")?);
    for layer in &arch.layers {
        match *layer {
            LayerSpec::Conv { maps, kh, kw } => {
                out.push(TAG_CONV);
                for v in [maps, kh, kw] {
                    out.extend_from_slice(&u32_of(v, "convolution size")?);
                }
            }
            LayerSpec::Relu => out.push(TAG_RELU),
            LayerSpec::Dropout(p) => {
                out.push(TAG_DROPOUT);
                out.extend_from_slice(&p.to_le_bytes());
            }
            LayerSpec::Flatten => out.push(TAG_FLATTEN),
            LayerSpec::Dense(n) => {
                out.push(TAG_DENSE);
                out.extend_from_slice(&u32_of(n, "dense width")?);
            }
            LayerSpec::Softmax => out.push(TAG_SOFTMAX),
        }
    }
    out.extend_from_slice(&model.class_ids);
    match model.summary {
        Some(s) => {
            out.push(1);
            out.extend_from_slice(&s.epochs_run.to_le_bytes());
            for v in [s.seconds_per_epoch, s.total_seconds, s.best_val_accuracy] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        None => out.push(0),
    }
    out.extend_from_slice(&u32_of(model.params.len(), "tensor count")?);
    for p in &model.params {
        out.extend_from_slice(&(p.len() as u64).to_le_bytes());
        let vals: Vec<f32> = p.iter().map(|v| v.to_f32().unwrap_or(f32::NAN)).collect();
        put_f32s(&mut out, &vals);
    }
    Ok(out)
}

fn usize_of(v: u32) -> usize {
    v as usize
}

pub fn decode_model<T: Real>(buf: &[u8]) -> Result<Model<T>> {
    let mut rd = Reader::new(buf, "model");
    let magic: [u8; 4] = rd
        .array()
        .map_err(|_| Error::Format("model: file too short for header".into()))?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Format(format!("model: bad magic {magic:?}")));
    }
    let version = rd.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!("model: unsupported version {version}")));
    }
    let input = Shape3::new(usize_of(rd.u32()?), usize_of(rd.u32()?), usize_of(rd.u32()?));
    let num_classes = usize_of(rd.u32()?);
    let n_layers = usize_of(rd.u32()?);
    if n_layers > rd.remaining() {
        return Err(Error::Corrupt(format!("model: implausible layer count {n_layers}")));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        layers.push(match rd.u8()? {
            TAG_CONV => LayerSpec::Conv {
                maps: usize_of(rd.u32()?),
                kh: usize_of(rd.u32()?),
                kw: usize_of(rd.u32()?),
            },
            TAG_RELU => LayerSpec::Relu,
            TAG_DROPOUT => LayerSpec::Dropout(rd.f64()?),
            TAG_FLATTEN => LayerSpec::Flatten,
            TAG_DENSE => LayerSpec::Dense(usize_of(rd.u32()?)),
            TAG_SOFTMAX => LayerSpec::Softmax,
            t => return Err(Error::Corrupt(format!("model: unknown layer tag {t}"))),
        });
    }
    let arch = ArchSpec { input, num_classes, layers };
    let shapes = arch
        .param_shapes()
        .map_err(|e| Error::Corrupt(format!("model: invalid architecture: {e}")))?;
    let class_ids = rd.take(num_classes)?.to_vec();
    let summary = match rd.u8()? {
        0 => None,
        1 => Some(TrainSummary {
            epochs_run: rd.u32()?,
            seconds_per_epoch: rd.f64()?,
            total_seconds: rd.f64()?,
            best_val_accuracy: rd.f64()?,
        }),
        f => return Err(Error::Corrupt(format!("model: bad summary flag {f}"))),
    };
    let n_tensors = usize_of(rd.u32()?);
    if n_tensors != shapes.len() {
        return Err(Error::Corrupt(format!(
            "model: {n_tensors} tensors, architecture needs {}",
            shapes.len()
        )));
    }
    let mut params = Vec::with_capacity(n_tensors);
    for want in shapes {
        let len = rd.u64()?;
        if len != want as u64 {
            return Err(Error::Corrupt(format!("model: tensor of {len} values, expected {want}")));
        }
        params.push(rd.f32_vec(want)?.into_iter().map(|v| T::of(v as f64)).collect());
    }
    rd.finish()?;
    let mut model = Model::from_parts(arch, params, class_ids)?;
    model.summary = summary;
    Ok(model)
}

pub fn write_model<T: Real>(model: &Model<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_model(model)?)?;
    Ok(())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<Model<f32>> {
    decode_model(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::model::build_model;

    fn small() -> Model<f32> {
        let arch = ArchSpec::proposed(12, 3, 0.6, true);
        let mut m: Model<f32> = build_model(&arch, &[2, 7, 15], 3).unwrap();
        m.summary = Some(TrainSummary {
            epochs_run: 4,
            seconds_per_epoch: 1.5,
            total_seconds: 7.25,
            best_val_accuracy: 0.875,
        });
        m
    }

    #[test]
    fn roundtrip_is_exact() {
        let m = small();
        let back: Model<f32> = decode_model(&encode_model(&m).unwrap()).unwrap();
        assert_eq!(back.arch(), m.arch());
        assert_eq!(back.params, m.params);
        assert_eq!(back.class_ids, m.class_ids);
        assert_eq!(back.summary, m.summary);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.wiim");
        write_model(&m, &path).unwrap();
        assert_eq!(read_model(&path).unwrap().params, m.params);
    }

    #[test]
    fn damaged_files_are_rejected() {
        let bytes = encode_model(&small()).unwrap();
        assert_eq!(&bytes[..4], b"WIIM");
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_model::<f32>(&bad), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(decode_model::<f32>(&bad), Err(Error::Format(_))));
        assert!(matches!(decode_model::<f32>(&bytes[..bytes.len() - 1]), Err(Error::Corrupt(_))));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(decode_model::<f32>(&long), Err(Error::Corrupt(_))));
        let mut bad_tag = bytes;
        bad_tag[26] = 77;
        assert!(matches!(decode_model::<f32>(&bad_tag), Err(Error::Corrupt(_))));
    }
}
