use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::arch::{ActShape, ArchSpec, LayerSpec};
use super::layers::{self, ConvGeom};
use super::real::Real;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Training outcome carried alongside the weights.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrainSummary {
    pub epochs_run: u32,
    pub seconds_per_epoch: f64,
    pub total_seconds: f64,
    pub best_val_accuracy: f64,
}

/// A compiled layer: the spec plus the shapes it operates on.
#[derive(Debug, Clone, Copy)]
enum Op {
    Conv { geom: ConvGeom, param: usize },
    Relu,
    Dropout(f64),
    Flatten,
    Dense { d_in: usize, d_out: usize, param: usize },
    Softmax,
}

fn compile(arch: &ArchSpec) -> Result<Vec<Op>> {
    let shapes = arch.shapes()?;
    let mut prev = ActShape::Spatial(arch.input);
    let mut param = 0;
    let mut ops = Vec::with_capacity(arch.layers.len());
    for (layer, shape) in arch.layers.iter().zip(&shapes) {
        let op = match (*layer, prev) {
            (LayerSpec::Conv { maps, kh, kw }, ActShape::Spatial(input)) => {
                param += 2;
                Op::Conv { geom: ConvGeom { input, maps, kh, kw }, param: param - 2 }
            }
            (LayerSpec::Dense(d_out), ActShape::Flat(d_in)) => {
                param += 2;
                Op::Dense { d_in, d_out, param: param - 2 }
            }
            (LayerSpec::Relu, _) => Op::Relu,
            (LayerSpec::Dropout(p), _) => Op::Dropout(p),
            (LayerSpec::Flatten, _) => Op::Flatten,
            (LayerSpec::Softmax, _) => Op::Softmax,
            _ => unreachable!("validated by ArchSpec::shapes"),
        };
        ops.push(op);
        prev = *shape;
    }
    Ok(ops)
}

enum Cache<T> {
    Conv(Vec<T>),
    Relu(Vec<T>),
    Dropout(Vec<T>),
    Dense(Vec<T>),
    None,
}

/// Intermediate values of one forward pass, consumed by [`Model::backward`].
pub struct Trace<T> {
    caches: Vec<Cache<T>>,
    pub probs: Vec<T>,
    pub batch: usize,
}

impl<T: Real> Trace<T> {
    /// Positivity pattern of every ReLU output, in layer order.
    pub fn relu_pattern(&self) -> Vec<bool> {
        self.caches
            .iter()
            .filter_map(|c| match c {
                Cache::Relu(out) => Some(out.iter().map(|v| *v > T::zero())),
                _ => None,
            })
            .flatten()
            .collect()
    }
}

/// Network parameters for a fixed architecture.
#[derive(Debug, Clone)]
pub struct Model<T: Real = f32> {
    arch: ArchSpec,
    ops: Vec<Op>,
    /// Weight and bias tensors in layer order.
    pub params: Vec<Vec<T>>,
    /// Dataset class id of each output unit.
    pub class_ids: Vec<u8>,
    pub summary: Option<TrainSummary>,
}

/// He-uniform weights (limit `sqrt(6 / fan_in)`) and zero biases.
pub fn build_model<T: Real>(arch: &ArchSpec, class_ids: &[u8], seed: u64) -> Result<Model<T>> {
    let ops = compile(arch)?;
    if class_ids.len() != arch.num_classes {
        return Err(Error::Shape(format!(
            "{} class ids for a {}-class network",
            class_ids.len(),
            arch.num_classes
        )));
    }
    let mut rng = seed::rng(seed);
    let mut params = Vec::new();
    for op in &ops {
        let (fan_in, n_w, n_b) = match *op {
            Op::Conv { geom, .. } => (geom.kdim(), geom.kdim() * geom.maps, geom.maps),
            Op::Dense { d_in, d_out, .. } => (d_in, d_in * d_out, d_out),
            _ => continue,
        };
        let limit = (6.0 / fan_in as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
        params.push((0..n_w).map(|_| T::of(dist.sample(&mut rng))).collect());
        params.push(vec![T::zero(); n_b]);
    }
    Ok(Model { arch: arch.clone(), ops, params, class_ids: class_ids.to_vec(), summary: None })
}

impl<T: Real> Model<T> {
    /// Reassembles a model from stored parameters.
    pub fn from_parts(arch: ArchSpec, params: Vec<Vec<T>>, class_ids: Vec<u8>) -> Result<Self> {
        let ops = compile(&arch)?;
        let want = arch.param_shapes()?;
        let got: Vec<usize> = params.iter().map(Vec::len).collect();
        if want != got {
            return Err(Error::Shape(format!(
                "parameter tensor sizes {got:?} do not match architecture {want:?}"
            )));
        }
        if class_ids.len() != arch.num_classes {
            return Err(Error::Shape("class id count does not match output layer".into()));
        }
        Ok(Model { arch, ops, params, class_ids, summary: None })
    }

    pub fn arch(&self) -> &ArchSpec {
        &self.arch
    }

    pub fn num_classes(&self) -> usize {
        self.arch.num_classes
    }

    pub fn input_len(&self) -> usize {
        self.arch.input_len()
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Vec::len).sum()
    }

    /// Converts parameters to another precision.
    pub fn cast<U: Real>(&self) -> Model<U> {
        Model {
            arch: self.arch.clone(),
            ops: self.ops.clone(),
            params: self
                .params
                .iter()
                .map(|p| p.iter().map(|v| U::of(v.to_f64().unwrap_or(f64::NAN))).collect())
                .collect(),
            class_ids: self.class_ids.clone(),
            summary: self.summary,
        }
    }

    /// Runs `batch` flattened samples through the network. `rng` drives
    /// dropout and is only consulted in training mode.
    pub fn forward<R: Rng>(
        &self,
        x: &[T],
        batch: usize,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Trace<T>> {
        if batch == 0 || x.len() != batch * self.input_len() {
            return Err(Error::Shape(format!(
                "input of {} values is not a batch of {} samples of {} ({})",
                x.len(),
                batch,
                self.input_len(),
                self.arch.input
            )));
        }
        let mut act = x.to_vec();
        let mut caches = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let cache = match *op {
                Op::Conv { geom, param } => {
                    let (y, cols) = layers::conv_forward(
                        &act,
                        batch,
                        &geom,
                        &self.params[param],
                        &self.params[param + 1],
                    )?;
                    act = y;
                    Cache::Conv(cols)
                }
                Op::Relu => {
                    layers::relu_inplace(&mut act);
                    Cache::Relu(act.clone())
                }
                Op::Dropout(p) => match mode {
                    Mode::Train => Cache::Dropout(layers::dropout_train(&mut act, p, rng)?),
                    Mode::Eval => {
                        layers::dropout_eval(&mut act, p)?;
                        Cache::None
                    }
                },
                Op::Flatten => Cache::None,
                Op::Dense { d_in, param, .. } => {
                    let y = layers::dense_forward(
                        &act,
                        batch,
                        d_in,
                        &self.params[param],
                        &self.params[param + 1],
                    )?;
                    Cache::Dense(std::mem::replace(&mut act, y))
                }
                Op::Softmax => {
                    act = layers::softmax_rows(&act, self.num_classes());
                    Cache::None
                }
            };
            caches.push(cache);
        }
        Ok(Trace { caches, probs: act, batch })
    }

    /// Mean cross-entropy of a traced batch against output-unit labels.
    pub fn loss(&self, trace: &Trace<T>, labels: &[usize]) -> Result<T> {
        let k = self.num_classes();
        if labels.len() != trace.batch {
            return Err(Error::Shape("label count does not match batch".into()));
        }
        let mut sum = T::zero();
        for (row, &y) in trace.probs.chunks_exact(k).zip(labels) {
            sum += layers::cross_entropy(row, y)?.0;
        }
        Ok(sum / T::of(trace.batch as f64))
    }

    /// Parameter gradients of the mean cross-entropy, plus the loss.
    pub fn backward(&self, trace: Trace<T>, labels: &[usize]) -> Result<(T, Vec<Vec<T>>)> {
        let k = self.num_classes();
        let batch = trace.batch;
        if labels.len() != batch {
            return Err(Error::Shape("label count does not match batch".into()));
        }
        let scale = T::of(1.0 / batch as f64);
        let mut loss = T::zero();
        let mut grad = Vec::with_capacity(trace.probs.len());
        for (row, &y) in trace.probs.chunks_exact(k).zip(labels) {
            let (l, g) = layers::cross_entropy(row, y)?;
            loss += l;
            grad.extend(g.into_iter().map(|v| v * scale));
        }
        let mut grads: Vec<Vec<T>> = vec![Vec::new(); self.params.len()];
        let mut caches = trace.caches;
        for (i, op) in self.ops.iter().enumerate().rev() {
            let cache = std::mem::replace(&mut caches[i], Cache::None);
            let need_dx = i > 0;
            match (*op, cache) {
                (Op::Softmax, _) | (Op::Flatten, _) => {}
                (Op::Conv { geom, param }, Cache::Conv(cols)) => {
                    let (dk, db, dx) = layers::conv_backward(
                        &cols,
                        batch,
                        &geom,
                        &self.params[param],
                        &grad,
                        need_dx,
                    )?;
                    grads[param] = dk;
                    grads[param + 1] = db;
                    grad = dx.unwrap_or_default();
                }
                (Op::Dense { d_in, param, .. }, Cache::Dense(x)) => {
                    let (dw, db, dx) = layers::dense_backward(
                        &x,
                        batch,
                        d_in,
                        &self.params[param],
                        &grad,
                        need_dx,
                    )?;
                    grads[param] = dw;
                    grads[param + 1] = db;
                    grad = dx.unwrap_or_default();
                }
                (Op::Relu, Cache::Relu(out)) => layers::relu_backward(&out, &mut grad),
                (Op::Dropout(_), Cache::Dropout(mask)) => {
                    grad.iter_mut().zip(&mask).for_each(|(g, m)| *g *= *m);
                }
                (Op::Dropout(_), Cache::None) => {}
                _ => unreachable!("cache matches op"),
            }
        }
        Ok((loss * scale, grads))
    }

    /// Loss and parameter gradients of one batch.
    pub fn loss_and_grads<R: Rng>(
        &self,
        x: &[T],
        labels: &[usize],
        mode: Mode,
        rng: &mut R,
    ) -> Result<(T, Vec<Vec<T>>)> {
        let trace = self.forward(x, labels.len(), mode, rng)?;
        self.backward(trace, labels)
    }

    /// Class posteriors (evaluation mode), one row of `num_classes` per sample.
    pub fn predict(&self, x: &[T], batch: usize) -> Result<Vec<T>> {
        // The rng is never drawn from in evaluation mode.
        let mut rng = seed::rng(0);
        Ok(self.forward(x, batch, Mode::Eval, &mut rng)?.probs)
    }
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax<T: Real>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::layers::Shape3;

    fn tiny_arch() -> ArchSpec {
        ArchSpec {
            input: Shape3::new(8, 2, 1),
            num_classes: 3,
            layers: vec![
                LayerSpec::Conv { maps: 2, kh: 3, kw: 1 },
                LayerSpec::Relu,
                LayerSpec::Conv { maps: 2, kh: 3, kw: 2 },
                LayerSpec::Relu,
                LayerSpec::Dropout(0.5),
                LayerSpec::Flatten,
                LayerSpec::Dense(4),
                LayerSpec::Relu,
                LayerSpec::Dense(3),
                LayerSpec::Softmax,
            ],
        }
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = tiny_arch();
        let m1: Model<f64> = build_model(&a, &[1, 2, 3], 9).unwrap();
        let m2: Model<f64> = build_model(&a, &[1, 2, 3], 9).unwrap();
        let m3: Model<f64> = build_model(&a, &[1, 2, 3], 10).unwrap();
        assert_eq!(m1.params, m2.params);
        assert_ne!(m1.params, m3.params);
        assert_eq!(m1.param_count(), a.param_count().unwrap());
        let lim = (6.0f64 / 3.0).sqrt();
        assert!(m1.params[0].iter().all(|v| v.abs() <= lim));
        assert!(m1.params[1].iter().all(|v| *v == 0.0));
        assert!(build_model::<f32>(&a, &[1, 2], 0).is_err());
    }

    #[test]
    fn predict_rows_are_distributions() {
        let m: Model<f32> = build_model(&tiny_arch(), &[1, 2, 3], 1).unwrap();
        let mut rng = seed::rng(3);
        let x: Vec<f32> = (0..5 * 16).map(|_| rng.random::<f32>() * 4.0 - 2.0).collect();
        let p = m.predict(&x, 5).unwrap();
        assert_eq!(p.len(), 15);
        for row in p.chunks_exact(3) {
            assert!((row.iter().sum::<f32>() - 1.0).abs() < 1e-6);
        }
        assert_eq!(p, m.predict(&x, 5).unwrap());
        assert!(matches!(m.predict(&x[1..], 5), Err(Error::Shape(_))));
    }

    #[test]
    fn argmax_ties_take_lowest() {
        assert_eq!(argmax(&[0.2f32, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[0.5f64, 0.5]), 0);
    }

    #[test]
    fn from_parts_checks_sizes() {
        let m: Model<f32> = build_model(&tiny_arch(), &[1, 2, 3], 1).unwrap();
        let mut p = m.params.clone();
        assert!(Model::from_parts(tiny_arch(), p.clone(), vec![1, 2, 3]).is_ok());
        p[2].pop();
        assert!(matches!(Model::from_parts(tiny_arch(), p, vec![1, 2, 3]), Err(Error::Shape(_))));
    }
}
