//! Native learners: softmax regression and a one-hidden-layer ReLU MLP.
//!
//! Both operate on a single [`ParamVector`] so that aggregation is plain
//! vector arithmetic over models with equal [`ModelSpec`]s.

mod aggregate;
mod params;
mod train;

pub use aggregate::{aggregate, fedavg_weights, WEIGHT_SUM_TOLERANCE};
pub use params::{ParamVector, TensorShape};
pub use train::{train_local, TrainConfig};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ModelKind {
    SoftmaxRegression,
    #[serde(rename = "mlp-1hidden")]
    Mlp {
        hidden_dim: usize,
        activation: Activation,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub input_dim: usize,
    pub num_classes: usize,
}

impl ModelSpec {
    pub fn softmax(input_dim: usize, num_classes: usize) -> Self {
        Self {
            kind: ModelKind::SoftmaxRegression,
            input_dim,
            num_classes,
        }
    }

    pub fn mlp(input_dim: usize, hidden_dim: usize, num_classes: usize) -> Self {
        Self {
            kind: ModelKind::Mlp {
                hidden_dim,
                activation: Activation::Relu,
            },
            input_dim,
            num_classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidSpec("input dimension must be positive".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::InvalidSpec("need at least two classes".into()));
        }
        if let ModelKind::Mlp { hidden_dim: 0, .. } = self.kind {
            return Err(Error::InvalidSpec("hidden dimension must be positive".into()));
        }
        Ok(())
    }

    /// Tensor layout; biases come right after their weight matrix.
    pub fn layout(&self) -> Vec<TensorShape> {
        let (d, c) = (self.input_dim, self.num_classes);
        match self.kind {
            ModelKind::SoftmaxRegression => vec![
                TensorShape::new("weight", &[d, c]),
                TensorShape::new("bias", &[c]),
            ],
            ModelKind::Mlp { hidden_dim: h, .. } => vec![
                TensorShape::new("hidden.weight", &[d, h]),
                TensorShape::new("hidden.bias", &[h]),
                TensorShape::new("output.weight", &[h, c]),
                TensorShape::new("output.bias", &[c]),
            ],
        }
    }

    pub fn param_count(&self) -> usize {
        self.layout().iter().map(TensorShape::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    spec: ModelSpec,
    params: ParamVector,
}

/// Uniform(-s, s) weights with s = sqrt(6 / (fan_in + fan_out)), zero biases.
pub fn init_model(spec: ModelSpec, seed: u64) -> Result<Model> {
    spec.validate()?;
    let mut rng = seed::rng(seed);
    let layout = spec.layout();
    let mut values = Vec::with_capacity(spec.param_count());
    for t in &layout {
        match t.dims[..] {
            [fan_in, fan_out] => {
                let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
                values.extend((0..t.len()).map(|_| rng.random_range(-s..=s)));
            }
            _ => values.extend(std::iter::repeat_n(0.0, t.len())),
        }
    }
    Ok(Model {
        spec,
        params: ParamVector::new(values, layout)?,
    })
}

impl Model {
    pub fn from_params(spec: ModelSpec, params: ParamVector) -> Result<Self> {
        spec.validate()?;
        if params.layout() != spec.layout().as_slice() {
            return Err(Error::SpecMismatch);
        }
        Ok(Self { spec, params })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut ParamVector {
        &mut self.params
    }

    pub(crate) fn check_input(&self, data: &Dataset) -> Result<()> {
        if data.dim() != self.spec.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.spec.input_dim,
                actual: data.dim(),
            });
        }
        if data.num_classes() != self.spec.num_classes {
            return Err(Error::DimensionMismatch {
                expected: self.spec.num_classes,
                actual: data.num_classes(),
            });
        }
        Ok(())
    }

    /// Writes class logits for `x` into `out`. `hidden` is scratch space of
    /// length `hidden_dim` (ignored for softmax regression).
    pub(crate) fn logits_into(&self, x: &[f64], hidden: &mut [f64], out: &mut [f64]) {
        let (d, c) = (self.spec.input_dim, self.spec.num_classes);
        let p = self.params.values();
        match self.spec.kind {
            ModelKind::SoftmaxRegression => {
                affine(x, &p[..d * c], &p[d * c..d * c + c], out);
            }
            ModelKind::Mlp { hidden_dim: h, .. } => {
                let (w1, rest) = p.split_at(d * h);
                let (b1, rest) = rest.split_at(h);
                let (w2, b2) = rest.split_at(h * c);
                affine(x, w1, b1, hidden);
                for z in hidden.iter_mut() {
                    *z = z.max(0.0);
                }
                affine(hidden, w2, b2, out);
            }
        }
    }

    pub(crate) fn hidden_width(&self) -> usize {
        match self.spec.kind {
            ModelKind::SoftmaxRegression => 0,
            ModelKind::Mlp { hidden_dim, .. } => hidden_dim,
        }
    }

    /// Arg-max class for one feature row; ties go to the lowest index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut hidden = vec![0.0; self.hidden_width()];
        let mut logits = vec![0.0; self.spec.num_classes];
        self.logits_into(x, &mut hidden, &mut logits);
        argmax(&logits)
    }
}

/// `out = x · w + b` with `w` stored row-major as `[x.len(), out.len()]`.
fn affine(x: &[f64], w: &[f64], b: &[f64], out: &mut [f64]) {
    let m = out.len();
    out.copy_from_slice(b);
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let row = &w[i * m..(i + 1) * m];
        for (o, &wij) in out.iter_mut().zip(row) {
            *o += xi * wij;
        }
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Fraction of rows whose arg-max prediction equals the label.
pub fn evaluate_accuracy(model: &Model, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    model.check_input(data)?;
    let mut hidden = vec![0.0; model.hidden_width()];
    let mut logits = vec![0.0; model.spec.num_classes];
    let correct = data
        .rows()
        .filter(|(x, y)| {
            model.logits_into(x, &mut hidden, &mut logits);
            argmax(&logits) == *y
        })
        .count();
    Ok(correct as f64 / data.len() as f64)
}
