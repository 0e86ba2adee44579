use super::Model;
use crate::{Error, Result};

/// Allowed deviation of aggregation weights from summing to one.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Weighted element-wise combination of models with identical specs.
///
/// Zero-weight models do not contribute. The sum is anchored on the first
/// positively weighted model (`a + Σ w_k (m_k - a)`), so combining identical
/// vectors reproduces them exactly, and each coordinate is clamped to the
/// min/max envelope of the contributing inputs.
pub fn aggregate(models: &[&Model], weights: &[f64]) -> Result<Model> {
    let first = models
        .first()
        .ok_or_else(|| Error::InvalidWeights("no models to aggregate".into()))?;
    if models.len() != weights.len() {
        return Err(Error::InvalidWeights(format!(
            "{} models but {} weights",
            models.len(),
            weights.len()
        )));
    }
    if models.iter().any(|m| m.spec != first.spec) {
        return Err(Error::SpecMismatch);
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidWeights(format!("weight {w} is negative or not finite")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
    }

    let active: Vec<(&Model, f64)> = models
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(m, &w)| (*m, w))
        .collect();
    let (anchor, _) = active[0];
    let mut out = anchor.clone();
    for (j, v) in out.params_mut().values_mut().iter_mut().enumerate() {
        let a = *v;
        let mut acc = a;
        let mut lo = a;
        let mut hi = a;
        for (m, w) in &active[1..] {
            let x = m.params().values()[j];
            acc += w * (x - a);
            lo = lo.min(x);
            hi = hi.max(x);
        }
        *v = acc.clamp(lo, hi);
    }
    if !out.params().is_finite() {
        return Err(Error::NonFinite("aggregation"));
    }
    Ok(out)
}

/// FedAvg weights `n_k / n`.
pub fn fedavg_weights(sizes: &[usize]) -> Result<Vec<f64>> {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return Err(Error::InvalidWeights("total training size is zero".into()));
    }
    Ok(sizes.iter().map(|&n| n as f64 / total as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_model, ModelSpec, ParamVector, TensorShape};

    fn with_values(values: &[f64]) -> Model {
        // layout of softmax(1, 2): weight [1,2] + bias [2]
        let spec = ModelSpec::softmax(1, 2);
        let mut v = values.to_vec();
        v.resize(4, 0.0);
        Model::from_params(spec, ParamVector::new(v, spec.layout()).unwrap()).unwrap()
    }

    #[test]
    fn single_model_identity() {
        let m = init_model(ModelSpec::mlp(3, 4, 2), 1).unwrap();
        assert_eq!(aggregate(&[&m], &[1.0]).unwrap(), m);
    }

    #[test]
    fn arithmetic_mean() {
        let a = with_values(&[0.0, 2.0]);
        let b = with_values(&[2.0, 4.0]);
        let out = aggregate(&[&a, &b], &[0.5, 0.5]).unwrap();
        assert_eq!(&out.params().values()[..2], &[1.0, 3.0]);
    }

    #[test]
    fn identical_models_are_fixed_points() {
        let m = init_model(ModelSpec::mlp(3, 4, 2), 9).unwrap();
        for w in [[0.3, 0.7], [0.1, 0.9], [0.9, 0.1], [0.0, 1.0], [1.0, 0.0]] {
            assert_eq!(aggregate(&[&m, &m], &w).unwrap(), m);
        }
    }

    #[test]
    fn endpoint_weights_select_one_model_exactly() {
        let a = init_model(ModelSpec::softmax(3, 2), 1).unwrap();
        let b = init_model(ModelSpec::softmax(3, 2), 2).unwrap();
        assert_eq!(aggregate(&[&a, &b], &[1.0, 0.0]).unwrap(), a);
        assert_eq!(aggregate(&[&a, &b], &[0.0, 1.0]).unwrap(), b);
    }

    #[test]
    fn rejects_invalid_inputs() {
        let a = init_model(ModelSpec::softmax(3, 2), 1).unwrap();
        let b = init_model(ModelSpec::softmax(4, 2), 1).unwrap();
        assert!(matches!(aggregate(&[&a, &b], &[0.5, 0.5]), Err(Error::SpecMismatch)));
        assert!(matches!(aggregate(&[&a, &a], &[0.5, 0.6]), Err(Error::InvalidWeights(_))));
        assert!(matches!(aggregate(&[&a, &a], &[1.5, -0.5]), Err(Error::InvalidWeights(_))));
        assert!(matches!(aggregate(&[&a], &[0.5, 0.5]), Err(Error::InvalidWeights(_))));
        assert!(matches!(aggregate(&[], &[]), Err(Error::InvalidWeights(_))));
        assert!(aggregate(&[&a, &a], &[0.5, 0.5 + 1e-10]).is_ok());
    }

    #[test]
    fn fedavg_weight_examples() {
        assert_eq!(fedavg_weights(&[30, 70]).unwrap(), vec![0.3, 0.7]);
        assert_eq!(fedavg_weights(&[10, 10, 10]).unwrap(), vec![1.0 / 3.0; 3]);
        assert_eq!(fedavg_weights(&[0, 5]).unwrap(), vec![0.0, 1.0]);
        assert!(fedavg_weights(&[0, 0]).is_err());
        assert!(fedavg_weights(&[]).is_err());
    }

    #[test]
    fn layout_is_preserved() {
        let a = with_values(&[1.0, 2.0, 3.0, 4.0]);
        let out = aggregate(&[&a, &a], &[0.5, 0.5]).unwrap();
        assert_eq!(out.params().layout(), &[TensorShape::new("weight", &[1, 2]), TensorShape::new("bias", &[2])]);
    }
}
