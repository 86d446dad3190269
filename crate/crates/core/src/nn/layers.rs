//! Batched layer primitives. Activations are row-major with the batch index
//! outermost; spatial activations are laid out `(L, W, C)` with channels
//! fastest.

use rand::Rng;

use super::real::{gemm, Mat, Real};
use crate::error::{Error, Result};

/// Spatial activation shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape3 {
    pub l: usize,
    pub w: usize,
    pub c: usize,
}

impl Shape3 {
    pub const fn new(l: usize, w: usize, c: usize) -> Self {
        Self { l, w, c }
    }

    pub fn len(&self) -> usize {
        self.l * self.w * self.c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl std::fmt::Display for Shape3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.l, self.w, self.c)
    }
}

/// Valid (unpadded, stride 1) convolution geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub input: Shape3,
    pub maps: usize,
    pub kh: usize,
    pub kw: usize,
}

impl ConvGeom {
    pub fn output(&self) -> Result<Shape3> {
        if self.kh == 0 || self.kw == 0 || self.maps == 0 {
            return Err(Error::Shape(format!(
                "degenerate convolution {}x{} with {} maps",
                self.kh, self.kw, self.maps
            )));
        }
        if self.kh > self.input.l || self.kw > self.input.w {
            return Err(Error::Shape(format!(
                "kernel {}x{} larger than input {}",
                self.kh, self.kw, self.input
            )));
        }
        Ok(Shape3::new(
            self.input.l - self.kh + 1,
            self.input.w - self.kw + 1,
            self.maps,
        ))
    }

    /// Length of one unrolled receptive field.
    pub fn kdim(&self) -> usize {
        self.kh * self.kw * self.input.c
    }

    pub fn param_count(&self) -> usize {
        self.kdim() * self.maps + self.maps
    }
}

/// Unrolls receptive fields: one row per output position, columns ordered
/// `(i, j, c)`.
pub fn im2col<T: Real>(x: &[T], batch: usize, g: &ConvGeom) -> Result<Vec<T>> {
    let out = g.output()?;
    let inp = g.input;
    if x.len() != batch * inp.len() {
        return Err(Error::Shape(format!(
            "convolution input has {} values, expected {batch} x {inp}",
            x.len()
        )));
    }
    let kdim = g.kdim();
    let mut cols = vec![T::zero(); batch * out.l * out.w * kdim];
    let mut dst = cols.chunks_exact_mut(kdim);
    for b in 0..batch {
        let xb = &x[b * inp.len()..(b + 1) * inp.len()];
        for lo in 0..out.l {
            for wo in 0..out.w {
                let row = dst.next().expect("sized above");
                let mut off = 0;
                for i in 0..g.kh {
                    let start = ((lo + i) * inp.w + wo) * inp.c;
                    let span = g.kw * inp.c;
                    row[off..off + span].copy_from_slice(&xb[start..start + span]);
                    off += span;
                }
            }
        }
    }
    Ok(cols)
}

/// Adjoint of [`im2col`]: scatter-adds column gradients back onto the input.
pub fn col2im<T: Real>(dcols: &[T], batch: usize, g: &ConvGeom) -> Result<Vec<T>> {
    let out = g.output()?;
    let inp = g.input;
    let kdim = g.kdim();
    let mut dx = vec![T::zero(); batch * inp.len()];
    let mut src = dcols.chunks_exact(kdim);
    for b in 0..batch {
        let dxb = &mut dx[b * inp.len()..(b + 1) * inp.len()];
        for lo in 0..out.l {
            for wo in 0..out.w {
                let row = src.next().expect("sized by caller");
                let mut off = 0;
                for i in 0..g.kh {
                    let start = ((lo + i) * inp.w + wo) * inp.c;
                    let span = g.kw * inp.c;
                    for (d, &s) in dxb[start..start + span].iter_mut().zip(&row[off..off + span]) {
                        *d += s;
                    }
                    off += span;
                }
            }
        }
    }
    Ok(dx)
}

/// Weight gradient, bias gradient and, when requested, the input gradient.
pub type LayerGrads<T> = (Vec<T>, Vec<T>, Option<Vec<T>>);

fn add_bias<T: Real>(out: &mut [T], bias: &[T]) {
    for row in out.chunks_exact_mut(bias.len()) {
        for (o, &b) in row.iter_mut().zip(bias) {
            *o += b;
        }
    }
}

fn column_sums<T: Real>(m: &[T], cols: usize) -> Vec<T> {
    let mut s = vec![T::zero(); cols];
    for row in m.chunks_exact(cols) {
        for (a, &v) in s.iter_mut().zip(row) {
            *a += v;
        }
    }
    s
}

/// Valid cross-correlation plus per-map bias. `kernel` is `kdim x maps`.
/// Returns the output and the unrolled input for the backward pass.
pub fn conv_forward<T: Real>(
    x: &[T],
    batch: usize,
    g: &ConvGeom,
    kernel: &[T],
    bias: &[T],
) -> Result<(Vec<T>, Vec<T>)> {
    let out = g.output()?;
    if kernel.len() != g.kdim() * g.maps || bias.len() != g.maps {
        return Err(Error::Shape("convolution parameters do not match geometry".into()));
    }
    let cols = im2col(x, batch, g)?;
    let rows = batch * out.l * out.w;
    let mut y = vec![T::zero(); rows * g.maps];
    gemm(
        Mat::new(&cols, rows, g.kdim()),
        Mat::new(kernel, g.kdim(), g.maps),
        T::zero(),
        &mut y,
    );
    add_bias(&mut y, bias);
    Ok((y, cols))
}

/// Gradients of a convolution: `(d kernel, d bias, d input)`; the input
/// gradient is skipped when `need_dx` is false.
pub fn conv_backward<T: Real>(
    cols: &[T],
    batch: usize,
    g: &ConvGeom,
    kernel: &[T],
    dy: &[T],
    need_dx: bool,
) -> Result<LayerGrads<T>> {
    let out = g.output()?;
    let rows = batch * out.l * out.w;
    let kdim = g.kdim();
    if dy.len() != rows * g.maps || cols.len() != rows * kdim {
        return Err(Error::Shape("convolution gradient does not match geometry".into()));
    }
    let mut dk = vec![T::zero(); kdim * g.maps];
    gemm(
        Mat::new(cols, rows, kdim).t(),
        Mat::new(dy, rows, g.maps),
        T::zero(),
        &mut dk,
    );
    let db = column_sums(dy, g.maps);
    let dx = if need_dx {
        let mut dcols = vec![T::zero(); rows * kdim];
        gemm(
            Mat::new(dy, rows, g.maps),
            Mat::new(kernel, kdim, g.maps).t(),
            T::zero(),
            &mut dcols,
        );
        Some(col2im(&dcols, batch, g)?)
    } else {
        None
    };
    Ok((dk, db, dx))
}

/// `x * weight + bias` with `weight` stored `d_in x d_out`.
pub fn dense_forward<T: Real>(
    x: &[T],
    batch: usize,
    d_in: usize,
    weight: &[T],
    bias: &[T],
) -> Result<Vec<T>> {
    let d_out = bias.len();
    if x.len() != batch * d_in || weight.len() != d_in * d_out {
        return Err(Error::Shape(format!(
            "dense layer {d_in}x{d_out} given {} inputs for batch {batch}",
            x.len()
        )));
    }
    let mut y = vec![T::zero(); batch * d_out];
    gemm(
        Mat::new(x, batch, d_in),
        Mat::new(weight, d_in, d_out),
        T::zero(),
        &mut y,
    );
    add_bias(&mut y, bias);
    Ok(y)
}

/// Gradients of a dense layer: `(d weight, d bias, d input)`.
pub fn dense_backward<T: Real>(
    x: &[T],
    batch: usize,
    d_in: usize,
    weight: &[T],
    dy: &[T],
    need_dx: bool,
) -> Result<LayerGrads<T>> {
    let d_out = weight.len() / d_in.max(1);
    if dy.len() != batch * d_out || x.len() != batch * d_in {
        return Err(Error::Shape("dense gradient does not match layer".into()));
    }
    let mut dw = vec![T::zero(); d_in * d_out];
    gemm(
        Mat::new(x, batch, d_in).t(),
        Mat::new(dy, batch, d_out),
        T::zero(),
        &mut dw,
    );
    let db = column_sums(dy, d_out);
    let dx = need_dx.then(|| {
        let mut dx = vec![T::zero(); batch * d_in];
        gemm(
            Mat::new(dy, batch, d_out),
            Mat::new(weight, d_in, d_out).t(),
            T::zero(),
            &mut dx,
        );
        dx
    });
    Ok((dw, db, dx))
}

/// Rectifier; NaN passes through so divergence stays visible.
pub fn relu<T: Real>(x: T) -> T {
    if x < T::zero() {
        T::zero()
    } else {
        x
    }
}

pub fn relu_inplace<T: Real>(x: &mut [T]) {
    x.iter_mut().for_each(|v| *v = relu(*v));
}

/// Masks `dy` where the forward output was not positive.
pub fn relu_backward<T: Real>(out: &[T], dy: &mut [T]) {
    for (d, &o) in dy.iter_mut().zip(out) {
        if o <= T::zero() {
            *d = T::zero();
        }
    }
}

fn check_dropout(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Config(format!("dropout probability {p} must lie in [0, 1)")));
    }
    Ok(())
}

/// Inverted dropout: zeroes each activation with probability `p` and scales
/// survivors by `1/(1-p)`. Returns the applied mask (0 or the scale factor).
pub fn dropout_train<T: Real, R: Rng>(x: &mut [T], p: f64, rng: &mut R) -> Result<Vec<T>> {
    check_dropout(p)?;
    let scale = T::of(1.0 / (1.0 - p));
    let keep = 1.0 - p;
    let mask: Vec<T> = x
        .iter_mut()
        .map(|v| {
            let m = if rng.random::<f64>() < keep { scale } else { T::zero() };
            *v *= m;
            m
        })
        .collect();
    Ok(mask)
}

/// Dropout in evaluation mode is the identity.
pub fn dropout_eval<T: Real>(_x: &mut [T], p: f64) -> Result<()> {
    check_dropout(p)
}

/// Row-wise numerically stable softmax.
pub fn softmax_rows<T: Real>(logits: &[T], k: usize) -> Vec<T> {
    let mut out = logits.to_vec();
    for row in out.chunks_exact_mut(k) {
        let max = row.iter().cloned().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v = *v / sum);
    }
    out
}

/// `-ln pred[label]` (prediction clamped at 1e-12) and its gradient with
/// respect to the logits, `pred - onehot(label)`.
pub fn cross_entropy<T: Real>(pred: &[T], label: usize) -> Result<(T, Vec<T>)> {
    if label >= pred.len() {
        return Err(Error::Label(format!(
            "label {label} out of range for {} classes",
            pred.len()
        )));
    }
    if !pred[label].is_finite() {
        return Err(Error::Numeric(format!("non-finite prediction {}", pred[label])));
    }
    let loss = -(pred[label].max(T::of(1e-12))).ln();
    let mut grad = pred.to_vec();
    grad[label] -= T::one();
    Ok((loss, grad))
}
