//! Deterministic L2-regularized linear classifiers trained by epoch-based
//! subgradient descent with suffix-averaged weights. Binary problems train a
//! single weight vector; multiclass problems train one-vs-rest.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainerKind {
    Hinge,
    Logistic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainParams {
    pub trainer: TrainerKind,
    /// L2 regularization strength; the bias stays unregularized.
    pub lambda: f64,
    pub epochs: usize,
    pub rng_seed: u64,
    /// Average the weights over the second half of the updates.
    pub average: bool,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            trainer: TrainerKind::Hinge,
            lambda: 1e-3,
            epochs: 50,
            rng_seed: 0,
            average: true,
        }
    }
}

/// A trained linear probe: one weight row for binary problems, one per class
/// for one-vs-rest multiclass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearProbe {
    weights: Array2<f64>,
    biases: Array1<f64>,
    classes: Vec<String>,
    pub trainer: TrainerKind,
}

impl LinearProbe {
    pub fn class_names(&self) -> &[String] {
        &self.classes
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn biases(&self) -> &Array1<f64> {
        &self.biases
    }

    pub fn is_binary(&self) -> bool {
        self.classes.len() == 2 && self.weights.nrows() == 1
    }

    /// Predicted class ids.
    pub fn predict(&self, data: &ArrayView2<f64>) -> Vec<usize> {
        data.rows()
            .into_iter()
            .map(|row| self.predict_one(&row))
            .collect()
    }

    pub fn predict_one(&self, x: &ArrayView1<f64>) -> usize {
        if self.is_binary() {
            let s = self.weights.row(0).dot(x) + self.biases[0];
            usize::from(s > 0.0)
        } else {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (c, w) in self.weights.rows().into_iter().enumerate() {
                let s = w.dot(x) + self.biases[c];
                if s > best_score {
                    best_score = s;
                    best = c;
                }
            }
            best
        }
    }
}

/// Train a probe on class ids `0..class_names.len()`.
///
/// Retraining with identical inputs and parameters reproduces the weights
/// bit for bit.
pub fn train_linear(
    data: &ArrayView2<f64>,
    labels: &[usize],
    class_names: &[String],
    params: &TrainParams,
) -> Result<LinearProbe> {
    let n = data.nrows();
    let d = data.ncols();
    if n == 0 || labels.len() != n {
        return Err(Error::TrainingFailed(format!(
            "{n} rows vs {} labels",
            labels.len()
        )));
    }
    let k = class_names.len();
    let mut present = vec![false; k];
    for &y in labels {
        if y >= k {
            return Err(Error::TrainingFailed(format!("label {y} out of range")));
        }
        present[y] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::TrainingFailed(
            "need at least two classes present in the training data".into(),
        ));
    }

    if k == 2 {
        let signed: Vec<f64> = labels.iter().map(|&y| if y == 1 { 1.0 } else { -1.0 }).collect();
        let (w, b) = train_binary(data, &signed, params);
        let mut weights = Array2::<f64>::zeros((1, d));
        weights.row_mut(0).assign(&w);
        Ok(LinearProbe {
            weights,
            biases: Array1::from(vec![b]),
            classes: class_names.to_vec(),
            trainer: params.trainer,
        })
    } else {
        let mut weights = Array2::<f64>::zeros((k, d));
        let mut biases = Array1::<f64>::zeros(k);
        for c in 0..k {
            let signed: Vec<f64> = labels
                .iter()
                .map(|&y| if y == c { 1.0 } else { -1.0 })
                .collect();
            let sub = TrainParams {
                rng_seed: params.rng_seed.wrapping_add(c as u64),
                ..params.clone()
            };
            let (w, b) = train_binary(data, &signed, &sub);
            weights.row_mut(c).assign(&w);
            biases[c] = b;
        }
        Ok(LinearProbe {
            weights,
            biases,
            classes: class_names.to_vec(),
            trainer: params.trainer,
        })
    }
}

fn train_binary(data: &ArrayView2<f64>, y: &[f64], params: &TrainParams) -> (Array1<f64>, f64) {
    let n = data.nrows();
    let d = data.ncols();
    let lambda = params.lambda.max(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);

    let mut w = Array1::<f64>::zeros(d);
    let mut b = 0.0f64;
    let mut w_sum = Array1::<f64>::zeros(d);
    let mut b_sum = 0.0f64;
    let mut averaged = 0usize;

    let total_steps = params.epochs * n;
    let average_from = total_steps / 2;
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0usize;

    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * (t as f64 + 1.0 / lambda));
            let x = data.row(i);
            let yi = y[i];
            let score = w.dot(&x) + b;
            match params.trainer {
                TrainerKind::Hinge => {
                    w *= 1.0 - eta * lambda;
                    if yi * score < 1.0 {
                        w.scaled_add(eta * yi, &x);
                        b += eta * yi;
                    }
                }
                TrainerKind::Logistic => {
                    w *= 1.0 - eta * lambda;
                    let q = 1.0 / (1.0 + (yi * score).exp());
                    w.scaled_add(eta * yi * q, &x);
                    b += eta * yi * q;
                }
            }
            if params.average && t > average_from {
                w_sum += &w;
                b_sum += b;
                averaged += 1;
            }
        }
    }

    if params.average && averaged > 0 {
        (w_sum / averaged as f64, b_sum / averaged as f64)
    } else {
        (w, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use ndarray::array;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn separable_gaussians_above_99() {
        let (train_x, train_y, test_x, test_y) =
            synth::two_gaussians_split(3.0, 50, 400, 200, 7);
        let probe =
            train_linear(&train_x.view(), &train_y, &names(2), &TrainParams::default()).unwrap();
        let preds = probe.predict(&test_x.view());
        let acc = preds
            .iter()
            .zip(test_y.iter())
            .filter(|(p, y)| p == y)
            .count() as f64
            / test_y.len() as f64;
        assert!(acc > 0.99, "test accuracy {acc}");

        let train_preds = probe.predict(&train_x.view());
        let train_acc = train_preds
            .iter()
            .zip(train_y.iter())
            .filter(|(p, y)| p == y)
            .count() as f64
            / train_y.len() as f64;
        assert!(train_acc >= 0.99, "train accuracy {train_acc}");
    }

    #[test]
    fn logistic_trainer_also_separates() {
        let (train_x, train_y, test_x, test_y) =
            synth::two_gaussians_split(3.0, 20, 300, 150, 11);
        let params = TrainParams {
            trainer: TrainerKind::Logistic,
            ..TrainParams::default()
        };
        let probe = train_linear(&train_x.view(), &train_y, &names(2), &params).unwrap();
        let preds = probe.predict(&test_x.view());
        let acc = preds
            .iter()
            .zip(test_y.iter())
            .filter(|(p, y)| p == y)
            .count() as f64
            / test_y.len() as f64;
        assert!(acc > 0.99, "test accuracy {acc}");
    }

    #[test]
    fn shuffled_labels_stay_near_majority() {
        use rand::seq::SliceRandom;
        let (train_x, mut train_y, test_x, mut test_y) =
            synth::two_gaussians_split(3.0, 20, 400, 200, 13);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        train_y.shuffle(&mut rng);
        test_y.shuffle(&mut rng);
        let probe =
            train_linear(&train_x.view(), &train_y, &names(2), &TrainParams::default()).unwrap();
        let preds = probe.predict(&test_x.view());
        let acc = preds
            .iter()
            .zip(test_y.iter())
            .filter(|(p, y)| p == y)
            .count() as f64
            / test_y.len() as f64;
        let majority = 0.5;
        assert!(
            (acc - majority).abs() <= 0.03,
            "null accuracy {acc} not within 3% of majority"
        );
    }

    #[test]
    fn three_separable_classes() {
        let centers = [
            array![6.0, 0.0, 0.0, 0.0],
            array![0.0, 6.0, 0.0, 0.0],
            array![0.0, 0.0, 6.0, 0.0],
        ];
        let (matrix, dataset) =
            synth::gaussian_class_data(&centers, 150, 1.0, (0.7, 0.0, 0.3), 21);
        let (train_x, train_y) =
            crate::probes::gather_split(&matrix.view(), &dataset, crate::attribute::Split::Train);
        let (test_x, test_y) =
            crate::probes::gather_split(&matrix.view(), &dataset, crate::attribute::Split::Test);
        let probe =
            train_linear(&train_x.view(), &train_y, &names(3), &TrainParams::default()).unwrap();
        let preds = probe.predict(&test_x.view());
        let acc = preds
            .iter()
            .zip(test_y.iter())
            .filter(|(p, y)| p == y)
            .count() as f64
            / test_y.len() as f64;
        assert!(acc > 0.99, "3-class accuracy {acc}");
    }

    #[test]
    fn retraining_is_bitwise_deterministic() {
        let (train_x, train_y, _, _) = synth::two_gaussians_split(2.0, 10, 120, 10, 3);
        let a = train_linear(&train_x.view(), &train_y, &names(2), &TrainParams::default())
            .unwrap();
        let b = train_linear(&train_x.view(), &train_y, &names(2), &TrainParams::default())
            .unwrap();
        for (x, y) in a.weights().iter().zip(b.weights().iter()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn single_class_is_an_error() {
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        let err = train_linear(&x.view(), &[0, 0], &names(2), &TrainParams::default());
        assert!(err.is_err());
    }
}
