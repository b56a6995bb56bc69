//! Probes that measure what is still encoded in a space: linear classifiers
//! (guarding curves), a one-hidden-layer MLP, and k-means clustering scored
//! by V-measure.

mod cluster;
mod linear;
mod mlp;

pub use cluster::{kmeans, kmeans_vmeasure, vmeasure_from_assignments, KMeansParams, VMeasure};
pub use linear::{train_linear, LinearProbe, TrainParams, TrainerKind};
pub use mlp::{train_mlp_probe, MlpParams, MlpReport};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::attribute::{LabeledPointSet, Split};
use crate::debias::{apply_steps, ProjectionPipeline};
use crate::error::{Error, Result};

/// Accuracy summary of a probe on one split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeReport {
    pub split: Split,
    pub accuracy: f64,
    pub majority_rate: f64,
    pub per_class_accuracy: BTreeMap<String, f64>,
    pub n: usize,
}

/// Rows and class ids for one split of a labeled dataset.
pub fn gather_split(
    matrix: &ArrayView2<f64>,
    dataset: &LabeledPointSet,
    split: Split,
) -> (Array2<f64>, Vec<usize>) {
    let members = dataset.split_members(split);
    let mut data = Array2::<f64>::zeros((members.len(), matrix.ncols()));
    let mut labels = Vec::with_capacity(members.len());
    for (row, &(idx, class)) in members.iter().enumerate() {
        data.row_mut(row).assign(&matrix.row(idx));
        labels.push(class);
    }
    (data, labels)
}

/// Fraction held by the most frequent class.
pub fn majority_rate(labels: &[usize], k: usize) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    *counts.iter().max().unwrap() as f64 / labels.len() as f64
}

/// Evaluate a trained probe on labeled data.
pub fn evaluate_probe(
    probe: &LinearProbe,
    data: &ArrayView2<f64>,
    labels: &[usize],
    split: Split,
) -> ProbeReport {
    let preds = probe.predict(data);
    let k = probe.class_names().len();
    let mut correct = 0usize;
    let mut per_class_total = vec![0usize; k];
    let mut per_class_hit = vec![0usize; k];
    for (&p, &y) in preds.iter().zip(labels.iter()) {
        per_class_total[y] += 1;
        if p == y {
            correct += 1;
            per_class_hit[y] += 1;
        }
    }
    let per_class_accuracy = probe
        .class_names()
        .iter()
        .enumerate()
        .filter(|(c, _)| per_class_total[*c] > 0)
        .map(|(c, name)| {
            (
                name.clone(),
                per_class_hit[c] as f64 / per_class_total[c] as f64,
            )
        })
        .collect();
    ProbeReport {
        split,
        accuracy: if labels.is_empty() {
            0.0
        } else {
            correct as f64 / labels.len() as f64
        },
        majority_rate: majority_rate(labels, k),
        per_class_accuracy,
        n: labels.len(),
    }
}

/// Linear-probe accuracy after each prefix of the pipeline.
///
/// Point 0 is the unprojected space; each later point retrains a fresh probe
/// on the train split of the partially projected data and reports dev
/// accuracy.
pub fn guarding_curve(
    matrix: &ArrayView2<f64>,
    dataset: &LabeledPointSet,
    pipeline: &ProjectionPipeline,
    params: &TrainParams,
) -> Result<Vec<(usize, f64)>> {
    let class_names: Vec<String> = dataset.classes.iter().map(|c| c.label.clone()).collect();
    let mut current = matrix.to_owned();
    let mut curve = Vec::with_capacity(pipeline.steps.len() + 1);
    for prefix in 0..=pipeline.steps.len() {
        if prefix > 0 {
            current = apply_steps(
                &current.view(),
                &pipeline.steps[prefix - 1..prefix],
            )?;
        }
        let (train_x, train_y) = gather_split(&current.view(), dataset, Split::Train);
        let (dev_x, dev_y) = gather_split(&current.view(), dataset, Split::Dev);
        if train_y.is_empty() || dev_y.is_empty() {
            return Err(Error::InvalidArgument(
                "guarding_curve needs non-empty train and dev splits".into(),
            ));
        }
        let probe = train_linear(&train_x.view(), &train_y, &class_names, params)?;
        let report = evaluate_probe(&probe, &dev_x.view(), &dev_y, Split::Dev);
        curve.push((prefix, report.accuracy));
    }
    Ok(curve)
}

/// Operational guarding predicate: dev accuracy within `margin` of majority.
pub fn is_guarded(accuracy: f64, majority: f64, margin: f64) -> bool {
    accuracy <= majority + margin
}
