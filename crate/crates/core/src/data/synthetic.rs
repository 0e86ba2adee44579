use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub num_classes: usize,
    pub dim: usize,
    pub per_class: usize,
    pub separation: f64,
    pub seed: u64,
}

impl SyntheticParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::config("num_classes", "need at least two classes"));
        }
        if self.dim == 0 {
            return Err(Error::config("dim", "must be positive"));
        }
        if self.per_class < 2 {
            return Err(Error::config("per_class", "need at least two samples per class"));
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return Err(Error::config("separation", "must be a positive finite number"));
        }
        Ok(())
    }
}

/// Gaussian class blobs with identity covariance.
///
/// With `num_classes <= dim` centroids sit on distinct scaled axes with
/// random signs (pairwise distance exactly `separation`); otherwise random
/// directions are drawn and scaled until the closest pair is `separation`
/// apart. Rows are emitted class by class.
pub fn generate_synthetic(params: &SyntheticParams) -> Result<Dataset> {
    params.validate()?;
    let SyntheticParams {
        num_classes: c,
        dim: d,
        per_class,
        separation,
        seed,
    } = *params;
    let mut rng = seed::rng(seed);

    let mut centroids = vec![0.0; c * d];
    if c <= d {
        let radius = separation / std::f64::consts::SQRT_2;
        for k in 0..c {
            centroids[k * d + k] = if rng.random::<bool>() { radius } else { -radius };
        }
    } else {
        for v in centroids.iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal);
        }
        let mut closest = f64::INFINITY;
        for a in 0..c {
            for b in a + 1..c {
                let dist = centroids[a * d..(a + 1) * d]
                    .iter()
                    .zip(&centroids[b * d..(b + 1) * d])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                closest = closest.min(dist);
            }
        }
        if closest == 0.0 {
            return Err(Error::InvalidDataset("degenerate centroids".into()));
        }
        let scale = separation / closest;
        for v in centroids.iter_mut() {
            *v *= scale;
        }
    }

    let mut features = Vec::with_capacity(c * per_class * d);
    let mut labels = Vec::with_capacity(c * per_class);
    for k in 0..c {
        for _ in 0..per_class {
            features.extend(
                centroids[k * d..(k + 1) * d]
                    .iter()
                    .map(|&mu| mu + rng.sample::<f64, _>(StandardNormal)),
            );
            labels.push(k);
        }
    }
    Dataset::new(features, d, labels, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(c: usize, d: usize, sep: f64) -> SyntheticParams {
        SyntheticParams {
            num_classes: c,
            dim: d,
            per_class: 200,
            separation: sep,
            seed: 1,
        }
    }

    #[test]
    fn row_count() {
        let ds = generate_synthetic(&params(10, 20, 4.0)).unwrap();
        assert_eq!(ds.len(), 2000);
        assert_eq!(ds.dim(), 20);
        assert_eq!(ds.class_counts(), vec![200; 10]);
    }

    #[test]
    fn deterministic_per_seed() {
        let p = params(10, 20, 4.0);
        assert_eq!(generate_synthetic(&p).unwrap(), generate_synthetic(&p).unwrap());
        let q = SyntheticParams { seed: 2, ..p };
        assert_ne!(generate_synthetic(&p).unwrap(), generate_synthetic(&q).unwrap());
    }

    fn class_means(ds: &Dataset) -> Vec<Vec<f64>> {
        let mut means = vec![vec![0.0; ds.dim()]; ds.num_classes()];
        let counts = ds.class_counts();
        for (x, y) in ds.rows() {
            for (m, v) in means[y].iter_mut().zip(x) {
                *m += v / counts[y] as f64;
            }
        }
        means
    }

    #[test]
    fn centroids_are_separated() {
        // more classes than dimensions exercises the random-direction path
        for p in [params(10, 20, 4.0), params(6, 3, 5.0)] {
            let p = SyntheticParams { per_class: 4000, ..p };
            let ds = generate_synthetic(&p).unwrap();
            let means = class_means(&ds);
            for a in 0..means.len() {
                for b in a + 1..means.len() {
                    let dist: f64 = means[a].iter().zip(&means[b]).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                    // sample means carry O(sqrt(d / n)) noise
                    assert!(dist >= p.separation - 0.25, "{a}-{b}: {dist}");
                }
            }
        }
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(generate_synthetic(&params(1, 20, 4.0)).is_err());
        assert!(generate_synthetic(&params(10, 0, 4.0)).is_err());
        assert!(generate_synthetic(&params(10, 20, 0.0)).is_err());
        assert!(generate_synthetic(&SyntheticParams { per_class: 1, ..params(10, 20, 4.0) }).is_err());
    }
}
