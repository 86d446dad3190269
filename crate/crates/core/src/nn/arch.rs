use std::fmt;

use super::layers::{ConvGeom, Shape3};
use crate::error::{Error, Result};

/// Default dropout probability of both networks.
pub const DEFAULT_DROPOUT: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerSpec {
    Conv { maps: usize, kh: usize, kw: usize },
    Relu,
    Dropout(f64),
    Flatten,
    Dense(usize),
    Softmax,
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Conv { maps, kh, kw } => write!(f, "conv({maps},{kh}x{kw})"),
            LayerSpec::Relu => f.write_str("relu"),
            LayerSpec::Dropout(p) => write!(f, "dropout({p})"),
            LayerSpec::Flatten => f.write_str("flatten"),
            LayerSpec::Dense(n) => write!(f, "dense({n})"),
            LayerSpec::Softmax => f.write_str("softmax"),
        }
    }
}

/// Activation shape between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActShape {
    Spatial(Shape3),
    Flat(usize),
}

impl ActShape {
    pub fn len(&self) -> usize {
        match self {
            ActShape::Spatial(s) => s.len(),
            ActShape::Flat(n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Which of the two reference networks to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArchKind {
    Proposed,
    Baseline,
}

impl ArchKind {
    pub fn name(self) -> &'static str {
        match self {
            ArchKind::Proposed => "proposed",
            ArchKind::Baseline => "baseline",
        }
    }
}

impl std::str::FromStr for ArchKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(ArchKind::Proposed),
            "baseline" => Ok(ArchKind::Baseline),
            _ => Err(Error::Config(format!(
                "unknown architecture '{s}' (expected proposed or baseline)"
            ))),
        }
    }
}

impl fmt::Display for ArchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchSpec {
    pub input: Shape3,
    pub num_classes: usize,
    pub layers: Vec<LayerSpec>,
}

impl ArchSpec {
    /// Two valid convolutions (3x1 then 3x2), a hidden dense layer and a
    /// softmax output. `conv1_dropout` inserts dropout after the first
    /// convolution, as used for narrow single-band inputs.
    fn two_conv(
        rows: usize,
        num_classes: usize,
        maps: (usize, usize),
        hidden: usize,
        dropout: f64,
        conv1_dropout: bool,
    ) -> Self {
        let mut layers = vec![LayerSpec::Conv { maps: maps.0, kh: 3, kw: 1 }, LayerSpec::Relu];
        if conv1_dropout {
            layers.push(LayerSpec::Dropout(dropout));
        }
        layers.extend([
            LayerSpec::Conv { maps: maps.1, kh: 3, kw: 2 },
            LayerSpec::Relu,
            LayerSpec::Dropout(dropout),
            LayerSpec::Flatten,
            LayerSpec::Dense(hidden),
            LayerSpec::Relu,
            LayerSpec::Dropout(dropout),
            LayerSpec::Dense(num_classes),
            LayerSpec::Softmax,
        ]);
        Self { input: Shape3::new(rows, 2, 1), num_classes, layers }
    }

    pub fn proposed(rows: usize, num_classes: usize, dropout: f64, conv1_dropout: bool) -> Self {
        Self::two_conv(rows, num_classes, (256, 256), 1024, dropout, conv1_dropout)
    }

    pub fn baseline(rows: usize, num_classes: usize, dropout: f64, conv1_dropout: bool) -> Self {
        Self::two_conv(rows, num_classes, (64, 1024), 128, dropout, conv1_dropout)
    }

    pub fn of_kind(
        kind: ArchKind,
        rows: usize,
        num_classes: usize,
        dropout: f64,
        conv1_dropout: bool,
    ) -> Self {
        match kind {
            ArchKind::Proposed => Self::proposed(rows, num_classes, dropout, conv1_dropout),
            ArchKind::Baseline => Self::baseline(rows, num_classes, dropout, conv1_dropout),
        }
    }

    /// Output shape of every layer, validating the stack.
    pub fn shapes(&self) -> Result<Vec<ActShape>> {
        if self.input.is_empty() {
            return Err(Error::Shape(format!("empty input shape {}", self.input)));
        }
        if self.num_classes < 2 {
            return Err(Error::Shape(format!("{} classes; need at least 2", self.num_classes)));
        }
        match self.layers.split_last() {
            Some((LayerSpec::Softmax, rest)) => match rest.last() {
                Some(LayerSpec::Dense(n)) if *n == self.num_classes => {}
                _ => {
                    return Err(Error::Shape(format!(
                        "softmax must follow a dense layer with {} outputs",
                        self.num_classes
                    )))
                }
            },
            _ => return Err(Error::Shape("architecture must end with softmax".into())),
        }
        let mut cur = ActShape::Spatial(self.input);
        let mut out = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            cur = match (*layer, cur) {
                (LayerSpec::Conv { maps, kh, kw }, ActShape::Spatial(s)) => {
                    ActShape::Spatial(ConvGeom { input: s, maps, kh, kw }.output()?)
                }
                (LayerSpec::Conv { .. }, ActShape::Flat(_)) => {
                    return Err(Error::Shape(format!("layer {i}: convolution after flatten")))
                }
                (LayerSpec::Flatten, s) => ActShape::Flat(s.len()),
                (LayerSpec::Dense(n), ActShape::Flat(_)) if n > 0 => ActShape::Flat(n),
                (LayerSpec::Dense(_), ActShape::Flat(_)) => {
                    return Err(Error::Shape(format!("layer {i}: dense layer with no outputs")))
                }
                (LayerSpec::Dense(_), ActShape::Spatial(_)) => {
                    return Err(Error::Shape(format!("layer {i}: dense layer needs flatten")))
                }
                (LayerSpec::Dropout(p), s) => {
                    if !(0.0..1.0).contains(&p) {
                        return Err(Error::Config(format!(
                            "dropout probability {p} must lie in [0, 1)"
                        )));
                    }
                    s
                }
                (LayerSpec::Softmax, s) if i + 1 == self.layers.len() => s,
                (LayerSpec::Softmax, _) => {
                    return Err(Error::Shape(format!("layer {i}: softmax before the end")))
                }
                (LayerSpec::Relu, s) => s,
            };
            out.push(cur);
        }
        Ok(out)
    }

    /// Input width of the first dense layer.
    pub fn flatten_dim(&self) -> Result<usize> {
        let shapes = self.shapes()?;
        self.layers
            .iter()
            .position(|l| *l == LayerSpec::Flatten)
            .map(|i| shapes[i].len())
            .ok_or_else(|| Error::Shape("architecture has no flatten layer".into()))
    }

    /// Parameter tensor lengths in storage order (weight then bias per layer).
    pub fn param_shapes(&self) -> Result<Vec<usize>> {
        let shapes = self.shapes()?;
        let mut prev = ActShape::Spatial(self.input);
        let mut out = Vec::new();
        for (layer, shape) in self.layers.iter().zip(&shapes) {
            match (*layer, prev) {
                (LayerSpec::Conv { maps, kh, kw }, ActShape::Spatial(s)) => {
                    out.push(kh * kw * s.c * maps);
                    out.push(maps);
                }
                (LayerSpec::Dense(n), ActShape::Flat(d)) => {
                    out.push(d * n);
                    out.push(n);
                }
                _ => {}
            }
            prev = *shape;
        }
        Ok(out)
    }

    pub fn param_count(&self) -> Result<usize> {
        Ok(self.param_shapes()?.iter().sum())
    }

    pub fn input_len(&self) -> usize {
        self.input.len()
    }
}

impl fmt::Display for ArchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "input {}", self.input)?;
        for l in &self.layers {
            write!(f, " -> {l}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proposed_full_band() {
        let a = ArchSpec::proposed(128, 15, DEFAULT_DROPOUT, false);
        assert_eq!(a.flatten_dim().unwrap(), 31744);
        assert_eq!(a.param_shapes().unwrap(), vec![768, 256, 393_216, 256, 32_505_856, 1024, 15_360, 15]);
        let expected = 1_024 + 393_472 + 32_506_880 + 15_375;
        assert_eq!(expected, 32_916_751);
        assert_eq!(a.param_count().unwrap(), expected);
        let drops = a.layers.iter().filter(|l| matches!(l, LayerSpec::Dropout(_))).count();
        assert_eq!(drops, 2);
    }

    #[test]
    fn baseline_full_band() {
        let a = ArchSpec::baseline(128, 15, DEFAULT_DROPOUT, false);
        assert_eq!(a.flatten_dim().unwrap(), 126_976);
        let want = (3 * 64 + 64) + (6 * 64 * 1024 + 1024) + (126_976 * 128 + 128) + (128 * 15 + 15);
        assert_eq!(a.param_count().unwrap(), want);
    }

    #[test]
    fn band_variants() {
        let two = ArchSpec::proposed(26, 7, DEFAULT_DROPOUT, true);
        let shapes = two.shapes().unwrap();
        assert_eq!(shapes[0], ActShape::Spatial(Shape3::new(24, 2, 256)));
        assert_eq!(shapes[3], ActShape::Spatial(Shape3::new(22, 1, 256)));
        assert_eq!(two.flatten_dim().unwrap(), 5632);
        assert!(matches!(two.layers[2], LayerSpec::Dropout(_)));
        let four = ArchSpec::proposed(52, 10, DEFAULT_DROPOUT, false);
        assert_eq!(four.flatten_dim().unwrap(), 12288);
        for rows in [64, 32, 16, 8] {
            let a = ArchSpec::proposed(rows, 15, DEFAULT_DROPOUT, false);
            assert_eq!(a.flatten_dim().unwrap(), (rows - 4) * 256);
        }
    }

    #[test]
    fn invalid_stacks() {
        let mut a = ArchSpec::proposed(4, 15, 0.5, false);
        assert!(matches!(a.shapes(), Err(Error::Shape(_))));
        a.input.l = 128;
        a.layers.retain(|l| *l != LayerSpec::Flatten);
        assert!(matches!(a.shapes(), Err(Error::Shape(_))));
        let mut b = ArchSpec::proposed(128, 15, 0.5, false);
        b.layers.pop();
        assert!(b.shapes().is_err());
        let c = ArchSpec::proposed(128, 15, 1.0, false);
        assert!(matches!(c.shapes(), Err(Error::Config(_))));
        let mut d = ArchSpec::proposed(128, 15, 0.5, false);
        d.num_classes = 14;
        assert!(d.shapes().is_err());
    }
}
