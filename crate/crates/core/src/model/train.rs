use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{affine, Model, ModelKind};
use crate::data::Dataset;
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be a positive finite number"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        Ok(())
    }
}

impl Model {
    /// Mean cross-entropy over the whole dataset.
    pub fn cross_entropy(&self, data: &Dataset) -> Result<f64> {
        self.check_trainable(data)?;
        let rows: Vec<usize> = (0..data.len()).collect();
        Ok(self.batch_loss_grad(data, &rows, false).0)
    }

    /// Mean cross-entropy over the whole dataset and its analytic gradient
    /// with respect to the flat parameter vector.
    pub fn cross_entropy_gradient(&self, data: &Dataset) -> Result<(f64, Vec<f64>)> {
        self.check_trainable(data)?;
        let rows: Vec<usize> = (0..data.len()).collect();
        Ok(self.batch_loss_grad(data, &rows, true))
    }

    fn check_trainable(&self, data: &Dataset) -> Result<()> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        self.check_input(data)
    }

    fn batch_loss_grad(&self, data: &Dataset, rows: &[usize], want_grad: bool) -> (f64, Vec<f64>) {
        let (d, c) = (self.spec.input_dim, self.spec.num_classes);
        let h = self.hidden_width();
        let p = self.params.values();
        let mut grad = if want_grad { vec![0.0; p.len()] } else { Vec::new() };
        let mut hidden = vec![0.0; h];
        let mut pre = vec![0.0; h];
        let mut logits = vec![0.0; c];
        let mut delta_hidden = vec![0.0; h];
        let scale = 1.0 / rows.len() as f64;
        let mut loss = 0.0;

        for &i in rows {
            let x = data.row(i);
            let y = data.label(i);
            match self.spec.kind {
                ModelKind::SoftmaxRegression => {
                    affine(x, &p[..d * c], &p[d * c..], &mut logits);
                }
                ModelKind::Mlp { .. } => {
                    affine(x, &p[..d * h], &p[d * h..d * h + h], &mut pre);
                    for (a, &z) in hidden.iter_mut().zip(&pre) {
                        *a = z.max(0.0);
                    }
                    let o = d * h + h;
                    affine(&hidden, &p[o..o + h * c], &p[o + h * c..], &mut logits);
                }
            }

            // logits become dL/dlogits = softmax - onehot
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let shifted_target = logits[y] - max;
            let mut sum = 0.0;
            for z in logits.iter_mut() {
                *z = (*z - max).exp();
                sum += *z;
            }
            loss += sum.ln() - shifted_target;
            if !want_grad {
                continue;
            }
            for z in logits.iter_mut() {
                *z /= sum;
            }
            logits[y] -= 1.0;

            match self.spec.kind {
                ModelKind::SoftmaxRegression => {
                    outer_acc(&mut grad[..d * c], x, &logits, scale);
                    for (g, &e) in grad[d * c..].iter_mut().zip(&logits) {
                        *g += scale * e;
                    }
                }
                ModelKind::Mlp { .. } => {
                    let o = d * h + h;
                    let w2 = &p[o..o + h * c];
                    outer_acc(&mut grad[o..o + h * c], &hidden, &logits, scale);
                    for (g, &e) in grad[o + h * c..].iter_mut().zip(&logits) {
                        *g += scale * e;
                    }
                    for j in 0..h {
                        delta_hidden[j] = if pre[j] > 0.0 {
                            w2[j * c..(j + 1) * c]
                                .iter()
                                .zip(&logits)
                                .map(|(w, e)| w * e)
                                .sum()
                        } else {
                            0.0
                        };
                    }
                    outer_acc(&mut grad[..d * h], x, &delta_hidden, scale);
                    for (g, &e) in grad[d * h..o].iter_mut().zip(&delta_hidden) {
                        *g += scale * e;
                    }
                }
            }
        }
        (loss * scale, grad)
    }
}

/// `g += scale * a ⊗ b`, row-major `[a.len(), b.len()]`.
fn outer_acc(g: &mut [f64], a: &[f64], b: &[f64], scale: f64) {
    let m = b.len();
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        let s = scale * ai;
        for (gij, &bj) in g[i * m..(i + 1) * m].iter_mut().zip(b) {
            *gij += s * bj;
        }
    }
}

/// Mini-batch SGD on mean cross-entropy, continuing from the model's
/// current weights. Rows are reshuffled every epoch from `cfg.seed`.
pub fn train_local(model: &Model, data: &Dataset, cfg: &TrainConfig) -> Result<Model> {
    cfg.validate()?;
    model.check_trainable(data)?;
    let mut out = model.clone();
    let mut rng = seed::rng(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let (_, grad) = out.batch_loss_grad(data, batch, true);
            for (w, g) in out.params_mut().values_mut().iter_mut().zip(&grad) {
                *w -= cfg.learning_rate * g;
            }
        }
    }
    if !out.params().is_finite() {
        return Err(Error::NonFinite("local training"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{evaluate_accuracy, init_model, ModelSpec};
    use rand::Rng;

    fn cfg(lr: f64) -> TrainConfig {
        TrainConfig {
            epochs: 50,
            learning_rate: lr,
            batch_size: 8,
            seed: 11,
        }
    }

    /// Two well-separated 2-D blobs.
    fn blobs(seed: u64) -> Dataset {
        let mut rng = seed::rng(seed);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..80 {
            let y = i % 2;
            let c = if y == 0 { -3.0 } else { 3.0 };
            features.push(c + rng.random_range(-1.0..1.0));
            features.push(c + rng.random_range(-1.0..1.0));
            labels.push(y);
        }
        Dataset::new(features, 2, labels, 2).unwrap()
    }

    #[test]
    fn separable_blobs_are_learned() {
        let data = blobs(1);
        for spec in [ModelSpec::softmax(2, 2), ModelSpec::mlp(2, 8, 2)] {
            let m = init_model(spec, 3).unwrap();
            let trained = train_local(&m, &data, &cfg(0.1)).unwrap();
            assert!(evaluate_accuracy(&trained, &data).unwrap() >= 0.95);
        }
    }

    #[test]
    fn vanishing_step_leaves_params_alone() {
        let data = blobs(2);
        let m = init_model(ModelSpec::mlp(2, 4, 2), 3).unwrap();
        let trained = train_local(&m, &data, &cfg(1e-300)).unwrap();
        for (a, b) in trained.params().values().iter().zip(m.params().values()) {
            // zero biases pick up sub-1e-290 residue; everything else is unchanged
            assert!((a - b).abs() < 1e-290);
            if *b != 0.0 {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn training_is_bit_reproducible() {
        let data = blobs(3);
        let m = init_model(ModelSpec::mlp(2, 4, 2), 3).unwrap();
        let a = train_local(&m, &data, &cfg(0.05)).unwrap();
        let b = train_local(&m, &data, &cfg(0.05)).unwrap();
        assert_eq!(a.params().values(), b.params().values());
    }

    #[test]
    fn training_continues_from_input_weights() {
        let data = blobs(4);
        let m = init_model(ModelSpec::softmax(2, 2), 3).unwrap();
        let one = TrainConfig { epochs: 1, ..cfg(0.1) };
        let first = train_local(&m, &data, &one).unwrap();
        let second = train_local(&first, &data, &one).unwrap();
        assert!(second.cross_entropy(&data).unwrap() < first.cross_entropy(&data).unwrap());
    }

    #[test]
    fn rejects_empty_and_mismatched_data() {
        let m = init_model(ModelSpec::softmax(2, 2), 3).unwrap();
        let empty = Dataset::new(vec![], 2, vec![], 2).unwrap();
        assert!(matches!(train_local(&m, &empty, &cfg(0.1)), Err(Error::EmptyDataset)));
        let wide = Dataset::new(vec![0.0; 3], 3, vec![0], 2).unwrap();
        assert!(train_local(&m, &wide, &cfg(0.1)).is_err());
    }

    #[test]
    fn rejects_bad_train_config() {
        let m = init_model(ModelSpec::softmax(2, 2), 3).unwrap();
        let data = blobs(5);
        for bad in [
            TrainConfig { learning_rate: 0.0, ..cfg(0.1) },
            TrainConfig { batch_size: 0, ..cfg(0.1) },
            TrainConfig { epochs: 0, ..cfg(0.1) },
        ] {
            assert!(train_local(&m, &data, &bad).is_err());
        }
    }

    #[test]
    fn divergence_is_reported() {
        let data = blobs(6);
        let m = init_model(ModelSpec::mlp(2, 4, 2), 3).unwrap();
        let r = train_local(&m, &data, &cfg(1e300));
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }
}
