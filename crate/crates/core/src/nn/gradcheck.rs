use super::model::{Mode, Model};
use crate::error::Result;
use crate::seed;

/// Outcome of a finite-difference gradient comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Parameters whose perturbation moved a ReLU across its kink.
    pub skipped: usize,
}

/// Smallest magnitude used as the denominator of a relative error.
const REL_FLOOR: f64 = 1e-6;

/// Compares analytic gradients of the mean cross-entropy on `(x, labels)`
/// against central differences with step `eps`, in evaluation mode.
pub fn grad_check(model: &Model<f64>, x: &[f64], labels: &[usize], eps: f64) -> Result<GradCheck> {
    let mut rng = seed::rng(0);
    let batch = labels.len();
    let base = model.forward(x, batch, Mode::Eval, &mut rng)?;
    let pattern = base.relu_pattern();
    let (_, analytic) = model.backward(base, labels)?;
    let mut probe = model.clone();
    let mut eval = |m: &Model<f64>| -> Result<(f64, bool)> {
        let t = m.forward(x, batch, Mode::Eval, &mut rng)?;
        let same = t.relu_pattern() == pattern;
        Ok((m.loss(&t, labels)?, same))
    };
    let mut out = GradCheck { max_rel_error: 0.0, checked: 0, skipped: 0 };
    for (t, grads) in analytic.iter().enumerate() {
        for (i, &a) in grads.iter().enumerate() {
            let orig = probe.params[t][i];
            probe.params[t][i] = orig + eps;
            let (plus, same_plus) = eval(&probe)?;
            probe.params[t][i] = orig - eps;
            let (minus, same_minus) = eval(&probe)?;
            probe.params[t][i] = orig;
            if !(same_plus && same_minus) {
                out.skipped += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * eps);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            out.max_rel_error = out.max_rel_error.max(rel);
            out.checked += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::nn::arch::{ArchSpec, LayerSpec};
    use crate::nn::layers::Shape3;
    use crate::nn::model::build_model;

    fn inputs(n: usize, len: usize, seed: u64) -> Vec<f64> {
        let mut rng = seed::rng(seed);
        (0..n * len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn tiny_cnn_gradients() {
        let arch = ArchSpec {
            input: Shape3::new(8, 2, 1),
            num_classes: 3,
            layers: vec![
                LayerSpec::Conv { maps: 2, kh: 3, kw: 1 },
                LayerSpec::Relu,
                LayerSpec::Conv { maps: 2, kh: 3, kw: 2 },
                LayerSpec::Relu,
                LayerSpec::Dropout(0.6),
                LayerSpec::Flatten,
                LayerSpec::Dense(4),
                LayerSpec::Relu,
                LayerSpec::Dropout(0.6),
                LayerSpec::Dense(3),
                LayerSpec::Softmax,
            ],
        };
        let m: Model<f64> = build_model(&arch, &[1, 2, 3], 4).unwrap();
        let x = inputs(3, 16, 8);
        let r = grad_check(&m, &x, &[0, 2, 1], 1e-5).unwrap();
        assert_eq!(r.checked + r.skipped, arch.param_count().unwrap());
        assert!(r.checked > r.skipped);
        assert!(r.max_rel_error < 1e-4, "{r:?}");
    }

    #[test]
    fn dense_gradients() {
        let arch = ArchSpec {
            input: Shape3::new(3, 2, 1),
            num_classes: 4,
            layers: vec![
                LayerSpec::Flatten,
                LayerSpec::Dense(5),
                LayerSpec::Relu,
                LayerSpec::Dense(4),
                LayerSpec::Softmax,
            ],
        };
        let m: Model<f64> = build_model(&arch, &[0, 1, 2, 3], 2).unwrap();
        let x = inputs(4, 6, 3);
        let r = grad_check(&m, &x, &[3, 0, 1, 1], 1e-5).unwrap();
        assert!(r.checked > 0);
        assert!(r.max_rel_error < 1e-6, "{r:?}");
    }

    #[test]
    fn band_variant_gradients() {
        // Narrow-band network shape with conv1 dropout, scaled down in width.
        let mut arch = ArchSpec::proposed(10, 3, 0.6, true);
        for l in &mut arch.layers {
            match l {
                LayerSpec::Conv { maps, .. } => *maps = 3,
                LayerSpec::Dense(n) if *n != 3 => *n = 5,
                _ => {}
            }
        }
        let m: Model<f64> = build_model(&arch, &[4, 5, 6], 6).unwrap();
        let x = inputs(2, 20, 1);
        let r = grad_check(&m, &x, &[1, 2], 1e-5).unwrap();
        assert!(r.max_rel_error < 1e-4, "{r:?}");
    }
}
