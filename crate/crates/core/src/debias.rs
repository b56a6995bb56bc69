//! Projection strategies and their composition: mean projection, Tukey
//! median projection, iterative nullspace projection, and eigenvalue-weighted
//! random projections. A pipeline is an ordered list of unit directions;
//! applying it projects every point onto the intersection of the directions'
//! orthogonal hyperplanes.

use ndarray::{Array1, Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::attribute::{LabeledPointSet, Split};
use crate::embeddings::{mean_of_rows, EmbeddingSpace};
use crate::error::{Error, Result};
use crate::geometry::{
    project_along, tukey_median_approx, tukey_median_exact_2d, ApproxMedianParams, UnitVector,
};
use crate::linalg::{covariance, sym_eigen};
use crate::probes::{evaluate_probe, gather_split, majority_rate, train_linear, TrainParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Mp,
    Tmp,
    Inlp,
    Random,
}

/// Optional per-step diagnostics recorded by the strategies.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StepMetadata {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth_minus: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth_plus: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_distance: Option<f64>,
    /// Set on multiclass mean-projection steps: the class means were
    /// recomputed on the already-projected data before this step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recomputed_means: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_eigenvalue: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectionStep {
    pub w: UnitVector,
    pub strategy: Strategy,
    pub iteration: usize,
    #[serde(default)]
    pub metadata: StepMetadata,
}

/// Ordered projection steps plus any degenerate-direction warnings that were
/// skipped while building them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectionPipeline {
    pub source_space: String,
    pub steps: Vec<ProjectionStep>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ProjectionPipeline {
    pub fn new(source_space: impl Into<String>) -> Self {
        ProjectionPipeline {
            source_space: source_space.into(),
            steps: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn extend(&mut self, other: ProjectionPipeline) {
        self.steps.extend(other.steps);
        self.warnings.extend(other.warnings);
    }

    /// The composed d x d matrix equal to applying all steps in order under
    /// the row-vector convention `X' = X . M`.
    pub fn composed_matrix(&self, dim: usize) -> Result<Array2<f64>> {
        let mut m = Array2::<f64>::eye(dim);
        for step in &self.steps {
            if step.w.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: step.w.dim(),
                });
            }
            let w = step.w.coords();
            // M <- M (I - w w^T), applied without materializing the factor.
            let mw = m.dot(w);
            for (mut row, &c) in m.rows_mut().into_iter().zip(mw.iter()) {
                row.scaled_add(-c, &w.view());
            }
        }
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Apply steps sequentially to row-point data.
pub fn apply_steps(matrix: &ArrayView2<f64>, steps: &[ProjectionStep]) -> Result<Array2<f64>> {
    let mut current = matrix.to_owned();
    for step in steps {
        current = project_along(&current.view(), &step.w)?;
    }
    Ok(current)
}

/// Apply a pipeline to a whole embedding space, producing a new space with
/// the same vocabulary.
pub fn apply_pipeline(
    space: &EmbeddingSpace,
    pipeline: &ProjectionPipeline,
) -> Result<EmbeddingSpace> {
    let projected = apply_steps(&space.matrix().view(), &pipeline.steps)?;
    space.with_matrix(format!("{}-projected", space.name), projected)
}

/// Mean projection: w = normalize(mu_plus - mu_minus). Projecting along w
/// makes the two class means coincide.
pub fn mp_step(
    matrix: &ArrayView2<f64>,
    minus: &[usize],
    plus: &[usize],
) -> Result<ProjectionStep> {
    if minus.is_empty() {
        return Err(Error::EmptyClass("minus".into()));
    }
    if plus.is_empty() {
        return Err(Error::EmptyClass("plus".into()));
    }
    let owned = matrix.to_owned();
    let mu_minus = mean_of_rows(&owned, minus);
    let mu_plus = mean_of_rows(&owned, plus);
    let diff = &mu_plus - &mu_minus;
    let dist = diff.dot(&diff).sqrt();
    let w = UnitVector::new(diff)?;
    Ok(ProjectionStep {
        w,
        strategy: Strategy::Mp,
        iteration: 0,
        metadata: StepMetadata {
            mean_distance: Some(dist),
            ..StepMetadata::default()
        },
    })
}

/// Multiclass mean projection: one step per non-anchor class, k-1 steps for
/// k classes. Class means are recomputed on the projected data between
/// steps, which is what guarantees that all k means coincide afterwards.
/// Degenerate (already coincident) directions are skipped with a warning.
pub fn mp_multiclass(
    matrix: &ArrayView2<f64>,
    dataset: &LabeledPointSet,
    anchor: &str,
) -> Result<ProjectionPipeline> {
    let anchor_class = dataset
        .class(anchor)
        .ok_or_else(|| Error::InvalidArgument(format!("anchor class {anchor:?} not found")))?
        .clone();
    if anchor_class.indices.is_empty() {
        return Err(Error::EmptyClass(anchor.into()));
    }
    let mut pipeline = ProjectionPipeline::new(dataset.space_ref.clone());
    let mut current = matrix.to_owned();
    let mut iteration = 0;
    for class in dataset.classes.iter().filter(|c| c.label != anchor) {
        if class.indices.is_empty() {
            return Err(Error::EmptyClass(class.label.clone()));
        }
        let mu_anchor = mean_of_rows(&current, &anchor_class.indices);
        let mu_class = mean_of_rows(&current, &class.indices);
        let diff = &mu_anchor - &mu_class;
        let dist = diff.dot(&diff).sqrt();
        match UnitVector::new(diff) {
            Ok(w) => {
                current = project_along(&current.view(), &w)?;
                pipeline.steps.push(ProjectionStep {
                    w,
                    strategy: Strategy::Mp,
                    iteration,
                    metadata: StepMetadata {
                        mean_distance: Some(dist),
                        recomputed_means: Some(true),
                        ..StepMetadata::default()
                    },
                });
                iteration += 1;
            }
            Err(_) => {
                pipeline.warnings.push(format!(
                    "skipped degenerate mean direction for class {:?} (means already coincide)",
                    class.label
                ));
            }
        }
    }
    Ok(pipeline)
}

/// Mean projection over a labeled dataset: a single step for two classes,
/// the anchored multiclass pipeline otherwise. Without an explicit anchor a
/// class labeled "neutral" is preferred, then the first class.
pub fn mp_pipeline(
    matrix: &ArrayView2<f64>,
    dataset: &LabeledPointSet,
    anchor: Option<&str>,
) -> Result<ProjectionPipeline> {
    if dataset.classes.len() < 2 {
        return Err(Error::InvalidArgument("need at least two classes".into()));
    }
    if dataset.classes.len() == 2 {
        let step = mp_step(
            matrix,
            &dataset.classes[0].indices,
            &dataset.classes[1].indices,
        )?;
        let mut pipeline = ProjectionPipeline::new(dataset.space_ref.clone());
        pipeline.steps.push(step);
        return Ok(pipeline);
    }
    let anchor_label = match anchor {
        Some(a) => a.to_string(),
        None => dataset
            .classes
            .iter()
            .find(|c| c.label == "neutral")
            .map(|c| c.label.clone())
            .unwrap_or_else(|| dataset.classes[0].label.clone()),
    };
    mp_multiclass(matrix, dataset, &anchor_label)
}

#[derive(Debug, Clone, Copy)]
pub enum TmpMode {
    /// Exact planar medians; requires d = 2.
    Exact2d,
    /// Sampled hill-climb medians for any dimension.
    Approx(ApproxMedianParams),
}

/// Tukey median projection: w = normalize(tau_plus - tau_minus). The two
/// medians project onto the same point; their depths are recorded.
pub fn tmp_step(
    matrix: &ArrayView2<f64>,
    minus: &[usize],
    plus: &[usize],
    mode: TmpMode,
    rng_seed: u64,
) -> Result<ProjectionStep> {
    if minus.is_empty() {
        return Err(Error::EmptyClass("minus".into()));
    }
    if plus.is_empty() {
        return Err(Error::EmptyClass("plus".into()));
    }
    let gather = |idx: &[usize]| -> Array2<f64> {
        let mut out = Array2::<f64>::zeros((idx.len(), matrix.ncols()));
        for (r, &i) in idx.iter().enumerate() {
            out.row_mut(r).assign(&matrix.row(i));
        }
        out
    };
    let pts_minus = gather(minus);
    let pts_plus = gather(plus);

    let (tau_minus, tau_plus, depth_minus, depth_plus) = match mode {
        TmpMode::Exact2d => {
            let m = tukey_median_exact_2d(&pts_minus.view())?;
            let p = tukey_median_exact_2d(&pts_plus.view())?;
            (m.point, p.point, m.depth, p.depth)
        }
        TmpMode::Approx(params) => {
            let m = tukey_median_approx(&pts_minus.view(), rng_seed, params)?;
            let p = tukey_median_approx(&pts_plus.view(), rng_seed.wrapping_add(1), params)?;
            (m.point, p.point, m.depth, p.depth)
        }
    };

    let w = UnitVector::new(&tau_plus - &tau_minus).map_err(|_| {
        Error::DegenerateDirection("class Tukey medians coincide".into())
    })?;
    Ok(ProjectionStep {
        w,
        strategy: Strategy::Tmp,
        iteration: 0,
        metadata: StepMetadata {
            depth_minus: Some(depth_minus),
            depth_plus: Some(depth_plus),
            ..StepMetadata::default()
        },
    })
}

#[derive(Debug, Clone)]
pub struct InlpParams {
    pub trainer: TrainParams,
    pub max_iters: usize,
    /// Stop once eval accuracy <= majority + stop_margin. A negative margin
    /// disables early stopping, forcing exactly `max_iters` rounds.
    pub stop_margin: f64,
    pub eval_split: Split,
    /// Gram-Schmidt each new direction against the previous steps.
    pub orthogonalize: bool,
    /// Check the guard before projecting; an already guarded dataset then
    /// produces zero steps. The default emits each round's projection first.
    pub pre_check: bool,
}

impl Default for InlpParams {
    fn default() -> Self {
        InlpParams {
            trainer: TrainParams::default(),
            max_iters: 35,
            stop_margin: 0.02,
            eval_split: Split::Dev,
            orthogonalize: false,
            pre_check: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InlpOutcome {
    pub pipeline: ProjectionPipeline,
    /// Eval-split accuracy measured at the start of each round, before that
    /// round's projections.
    pub accuracy_series: Vec<f64>,
    pub majority_rate: f64,
    pub rounds: usize,
}

/// Iterative nullspace projection: each round trains a fresh linear probe on
/// the train split of the current data and projects along its weight
/// direction(s) -- one direction for binary problems, one per one-vs-rest
/// vector for the first k-1 classes otherwise.
pub fn inlp_run(
    matrix: &ArrayView2<f64>,
    dataset: &LabeledPointSet,
    params: &InlpParams,
) -> Result<InlpOutcome> {
    let class_names: Vec<String> = dataset.classes.iter().map(|c| c.label.clone()).collect();
    let mut current = matrix.to_owned();
    let mut pipeline = ProjectionPipeline::new(dataset.space_ref.clone());
    let mut series = Vec::new();

    let (_, eval_y0) = gather_split(&current.view(), dataset, params.eval_split);
    if eval_y0.is_empty() {
        return Err(Error::InvalidArgument("empty eval split".into()));
    }
    let majority = majority_rate(&eval_y0, class_names.len());

    let mut rounds = 0;
    for round in 0..params.max_iters {
        let (train_x, train_y) = gather_split(&current.view(), dataset, Split::Train);
        if train_y.is_empty() {
            return Err(Error::InvalidArgument("empty train split".into()));
        }
        let probe = train_linear(&train_x.view(), &train_y, &class_names, &params.trainer)?;
        let (eval_x, eval_y) = gather_split(&current.view(), dataset, params.eval_split);
        let report = evaluate_probe(&probe, &eval_x.view(), &eval_y, params.eval_split);
        series.push(report.accuracy);
        let guarded = report.accuracy <= majority + params.stop_margin;
        if params.pre_check && guarded {
            break;
        }
        rounds = round + 1;

        let directions: Vec<Array1<f64>> = if probe.is_binary() {
            vec![probe.weights().row(0).to_owned()]
        } else {
            // k-1 projections per round for k classes.
            (0..class_names.len() - 1)
                .map(|c| probe.weights().row(c).to_owned())
                .collect()
        };
        let (train_acc, _) = {
            let preds = probe.predict(&train_x.view());
            let correct = preds
                .iter()
                .zip(train_y.iter())
                .filter(|(p, y)| p == y)
                .count();
            (correct as f64 / train_y.len() as f64, ())
        };

        for mut dir in directions {
            if params.orthogonalize {
                for step in &pipeline.steps {
                    let c = step.w.coords().dot(&dir);
                    dir = &dir - &(step.w.coords() * c);
                }
            }
            match UnitVector::new(dir) {
                Ok(w) => {
                    current = project_along(&current.view(), &w)?;
                    pipeline.steps.push(ProjectionStep {
                        w,
                        strategy: Strategy::Inlp,
                        iteration: round,
                        metadata: StepMetadata {
                            train_accuracy: Some(train_acc),
                            eval_accuracy: Some(report.accuracy),
                            ..StepMetadata::default()
                        },
                    });
                }
                Err(_) => {
                    pipeline.warnings.push(format!(
                        "round {round}: skipped degenerate classifier direction"
                    ));
                }
            }
        }

        if guarded {
            break;
        }
    }

    Ok(InlpOutcome {
        pipeline,
        accuracy_series: series,
        majority_rate: majority,
        rounds,
    })
}

/// A random direction from the span of the data, weighted by the principal
/// components: w = normalize(sum_i sqrt(lambda_i) g_i u_i) with iid standard
/// normal g, i.e. a draw from a Gaussian with the data's covariance.
pub fn random_step(matrix: &ArrayView2<f64>, rng_seed: u64) -> Result<ProjectionStep> {
    let cov = covariance(&matrix.view());
    let eig = sym_eigen(&cov.view())?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let d = matrix.ncols();
    let mut w = Array1::<f64>::zeros(d);
    for (i, &lam) in eig.values.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        let g: f64 = StandardNormal.sample(&mut rng);
        w.scaled_add(lam.sqrt() * g, &eig.vectors.column(i));
    }
    let top = eig.values.get(0).copied().unwrap_or(0.0);
    let w = UnitVector::new(w)
        .map_err(|_| Error::DegenerateDirection("data has zero covariance".into()))?;
    Ok(ProjectionStep {
        w,
        strategy: Strategy::Random,
        iteration: 0,
        metadata: StepMetadata {
            top_eigenvalue: Some(top),
            ..StepMetadata::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::best_linear_classifier_2d;
    use crate::synth;
    use ndarray::array;
    use rand::Rng;

    #[test]
    fn mp_hand_case() {
        // P+ = {(1,0),(3,0)}, P- = {(0,1),(0,3)}:
        // mu+ = (2,0), mu- = (0,2), w = (1,-1)/sqrt2, projected means (1,1).
        let data = array![[1.0, 0.0], [3.0, 0.0], [0.0, 1.0], [0.0, 3.0]];
        let step = mp_step(&data.view(), &[2, 3], &[0, 1]).unwrap();
        let w = step.w.coords();
        assert!((w[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((w[1] + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);

        let projected = apply_steps(&data.view(), &[step]).unwrap();
        let mu_plus = mean_of_rows(&projected, &[0, 1]);
        let mu_minus = mean_of_rows(&projected, &[2, 3]);
        for k in 0..2 {
            assert!((mu_plus[k] - 1.0).abs() < 1e-9);
            assert!((mu_minus[k] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mp_translation_invariant_direction() {
        let data = array![[1.0, 0.0], [3.0, 0.0], [0.0, 1.0], [0.0, 3.0]];
        let shifted = &data + 7.5;
        let a = mp_step(&data.view(), &[2, 3], &[0, 1]).unwrap();
        let b = mp_step(&shifted.view(), &[2, 3], &[0, 1]).unwrap();
        for (x, y) in a.w.coords().iter().zip(b.w.coords().iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn mp_identical_means_is_degenerate() {
        let data = array![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        assert!(matches!(
            mp_step(&data.view(), &[0, 1], &[2, 3]),
            Err(Error::DegenerateDirection(_))
        ));
        assert!(matches!(
            mp_step(&data.view(), &[], &[2, 3]),
            Err(Error::EmptyClass(_))
        ));
    }

    #[test]
    fn mp_multiclass_equalizes_all_means() {
        let (matrix, dataset) = synth::gaussian_class_data(
            &[
                array![5.0, 0.0, 0.0],
                array![0.0, 5.0, 0.0],
                array![0.0, 0.0, 5.0],
            ],
            50,
            0.6,
            (1.0, 0.0, 0.0),
            17,
        );
        let pipeline = mp_pipeline(&matrix.view(), &dataset, Some("c0")).unwrap();
        assert_eq!(pipeline.len(), 2);
        assert!(pipeline.steps.iter().all(|s| s.metadata.recomputed_means == Some(true)));

        let projected = apply_steps(&matrix.view(), &pipeline.steps).unwrap();
        let means: Vec<Array1<f64>> = dataset
            .classes
            .iter()
            .map(|c| mean_of_rows(&projected, &c.indices))
            .collect();
        for m in &means[1..] {
            for (a, b) in m.iter().zip(means[0].iter()) {
                assert!((a - b).abs() < 1e-8, "means differ: {a} vs {b}");
            }
        }
    }

    #[test]
    fn mp_multiclass_skips_degenerate_directions() {
        // Classes 0 and 1 share a mean; class 2 is offset. Anchoring at 0
        // gives one real step and one skipped direction.
        let mut data = Array2::<f64>::zeros((12, 2));
        for i in 0..4 {
            data[[i, 0]] = if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        for i in 4..8 {
            data[[i, 0]] = if i % 2 == 0 { 2.0 } else { -2.0 };
        }
        for i in 8..12 {
            data[[i, 1]] = 5.0;
        }
        let dataset = LabeledPointSet::new(
            "s",
            vec![
                crate::attribute::AttributeClass {
                    label: "a".into(),
                    indices: (0..4).collect(),
                },
                crate::attribute::AttributeClass {
                    label: "b".into(),
                    indices: (4..8).collect(),
                },
                crate::attribute::AttributeClass {
                    label: "c".into(),
                    indices: (8..12).collect(),
                },
            ],
        )
        .unwrap();
        let pipeline = mp_multiclass(&data.view(), &dataset, "a").unwrap();
        assert_eq!(pipeline.len(), 1);
        assert_eq!(pipeline.warnings.len(), 1);
    }

    #[test]
    fn tmp_singleton_classes() {
        let data = array![[0.0, 0.0], [3.0, 4.0]];
        let step = tmp_step(&data.view(), &[0], &[1], TmpMode::Exact2d, 0).unwrap();
        let w = step.w.coords();
        assert!((w[0] - 0.6).abs() < 1e-12);
        assert!((w[1] - 0.8).abs() < 1e-12);
        assert_eq!(step.metadata.depth_minus, Some(1));
        assert_eq!(step.metadata.depth_plus, Some(1));
    }

    #[test]
    fn tmp_projects_medians_to_same_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let minus = Array2::from_shape_fn((15, 2), |_| rng.gen_range(-2.0..0.0));
        let plus = Array2::from_shape_fn((12, 2), |_| rng.gen_range(1.0..4.0));
        let mut data = Array2::<f64>::zeros((27, 2));
        for i in 0..15 {
            data.row_mut(i).assign(&minus.row(i));
        }
        for i in 0..12 {
            data.row_mut(15 + i).assign(&plus.row(i));
        }
        let minus_idx: Vec<usize> = (0..15).collect();
        let plus_idx: Vec<usize> = (15..27).collect();
        let step = tmp_step(&data.view(), &minus_idx, &plus_idx, TmpMode::Exact2d, 0).unwrap();

        let tau_minus = tukey_median_exact_2d(&minus.view()).unwrap().point;
        let tau_plus = tukey_median_exact_2d(&plus.view()).unwrap().point;
        let pm = crate::geometry::project_point(&tau_minus.view(), &step.w);
        let pp = crate::geometry::project_point(&tau_plus.view(), &step.w);
        for (a, b) in pm.iter().zip(pp.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn tmp_outlier_instance_guards_better_than_mp() {
        // Tight minus cluster at the origin; plus is a tight cluster at
        // (3, 0) plus two far outliers pulling its mean upward. The median
        // ignores the outliers, so projecting along the median difference
        // collapses the clusters (many forced errors) while the mean
        // direction leaves them separable.
        let mut rows: Vec<[f64; 2]> = Vec::new();
        let mut minus_idx = Vec::new();
        let mut plus_idx = Vec::new();
        for i in 0..11 {
            rows.push([0.0 + 0.01 * i as f64, 0.01 * (i % 3) as f64]);
            minus_idx.push(i);
        }
        for i in 0..9 {
            rows.push([3.0 + 0.01 * i as f64, 0.01 * (i % 3) as f64]);
            plus_idx.push(11 + i);
        }
        rows.push([3.0, 60.0]);
        rows.push([3.5, 60.0]);
        plus_idx.push(20);
        plus_idx.push(21);

        let data = Array2::from_shape_fn((rows.len(), 2), |(i, j)| rows[i][j]);
        let mp = mp_step(&data.view(), &minus_idx, &plus_idx).unwrap();
        let tmp = tmp_step(&data.view(), &minus_idx, &plus_idx, TmpMode::Exact2d, 0).unwrap();

        let errors_after = |step: &ProjectionStep| -> usize {
            let projected = apply_steps(&data.view(), std::slice::from_ref(step)).unwrap();
            let gather = |idx: &[usize]| {
                let mut out = Array2::<f64>::zeros((idx.len(), 2));
                for (r, &i) in idx.iter().enumerate() {
                    out.row_mut(r).assign(&projected.row(i));
                }
                out
            };
            let (e, _) =
                best_linear_classifier_2d(&gather(&minus_idx).view(), &gather(&plus_idx).view())
                    .unwrap();
            e
        };
        let mp_errors = errors_after(&mp);
        let tmp_errors = errors_after(&tmp);
        assert!(
            tmp_errors > mp_errors,
            "tmp errors {tmp_errors} should exceed mp errors {mp_errors}"
        );
    }

    #[test]
    fn tmp_symmetric_classes_align_with_axis() {
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
            let mut data = Array2::<f64>::zeros((160, 2));
            for i in 0..80 {
                let g0: f64 = StandardNormal.sample(&mut rng);
                let g1: f64 = StandardNormal.sample(&mut rng);
                data[[i, 0]] = -2.0 + 0.5 * g0;
                data[[i, 1]] = 0.5 * g1;
            }
            for i in 80..160 {
                let g0: f64 = StandardNormal.sample(&mut rng);
                let g1: f64 = StandardNormal.sample(&mut rng);
                data[[i, 0]] = 2.0 + 0.5 * g0;
                data[[i, 1]] = 0.5 * g1;
            }
            let minus: Vec<usize> = (0..80).collect();
            let plus: Vec<usize> = (80..160).collect();
            let mode = TmpMode::Approx(ApproxMedianParams::default());
            let step = tmp_step(&data.view(), &minus, &plus, mode, seed).unwrap();
            let w = step.w.coords();
            let raw = w[1].atan2(w[0]).abs();
            let angle = raw.min(std::f64::consts::PI - raw);
            assert!(
                angle < 5.0_f64.to_radians(),
                "seed {seed}: direction {w} is {:.2} degrees off the class axis",
                angle.to_degrees()
            );
        }
    }

    #[test]
    fn inlp_needs_more_rounds_than_mp_on_separable_gaussians() {
        let (matrix, dataset) = synth::gaussian_class_data(
            &[synth::axis_center(3.0, 0, 20), synth::axis_center(-3.0, 0, 20)],
            250,
            1.0,
            (0.7, 0.3, 0.0),
            303,
        );
        let params = InlpParams {
            max_iters: 10,
            ..InlpParams::default()
        };
        let outcome = inlp_run(&matrix.view(), &dataset, &params).unwrap();
        assert!(
            outcome.rounds >= 2,
            "inlp stopped after {} round(s); series {:?}",
            outcome.rounds,
            outcome.accuracy_series
        );
        // Weak endpoint monotonicity of the recorded series.
        let first = outcome.accuracy_series.first().unwrap();
        let last = outcome.accuracy_series.last().unwrap();
        assert!(last <= first);

        // One mean projection guards the same data immediately.
        let mp = mp_pipeline(&matrix.view(), &dataset, None).unwrap();
        let projected = apply_steps(&matrix.view(), &mp.steps).unwrap();
        let (train_x, train_y) = gather_split(&projected.view(), &dataset, Split::Train);
        let (dev_x, dev_y) = gather_split(&projected.view(), &dataset, Split::Dev);
        let probe = train_linear(
            &train_x.view(),
            &train_y,
            &["c0".into(), "c1".into()],
            &TrainParams::default(),
        )
        .unwrap();
        let report = evaluate_probe(&probe, &dev_x.view(), &dev_y, Split::Dev);
        assert!(
            report.accuracy <= report.majority_rate + 0.02,
            "post-mp accuracy {} majority {}",
            report.accuracy,
            report.majority_rate
        );
    }

    #[test]
    fn inlp_max_iters_one_emits_one_round() {
        let (matrix, dataset) = synth::gaussian_class_data(
            &[synth::axis_center(3.0, 0, 10), synth::axis_center(-3.0, 0, 10)],
            80,
            1.0,
            (0.7, 0.3, 0.0),
            41,
        );
        let params = InlpParams {
            max_iters: 1,
            stop_margin: -1.0,
            ..InlpParams::default()
        };
        let outcome = inlp_run(&matrix.view(), &dataset, &params).unwrap();
        assert_eq!(outcome.rounds, 1);
        assert_eq!(outcome.pipeline.len(), 1);
        assert_eq!(outcome.accuracy_series.len(), 1);
    }

    #[test]
    fn inlp_pre_check_emits_nothing_on_guarded_data() {
        // Identical class distributions: guarded from the start.
        let (matrix, dataset) = synth::gaussian_class_data(
            &[synth::axis_center(0.0, 0, 6), synth::axis_center(0.0, 0, 6)],
            60,
            1.0,
            (0.7, 0.3, 0.0),
            77,
        );
        let params = InlpParams {
            max_iters: 5,
            stop_margin: 0.05,
            pre_check: true,
            ..InlpParams::default()
        };
        let outcome = inlp_run(&matrix.view(), &dataset, &params).unwrap();
        assert_eq!(outcome.pipeline.len(), 0, "series {:?}", outcome.accuracy_series);

        // The default configuration still emits the first round's step.
        let default_params = InlpParams {
            max_iters: 5,
            stop_margin: 0.05,
            ..InlpParams::default()
        };
        let outcome = inlp_run(&matrix.view(), &dataset, &default_params).unwrap();
        assert!(outcome.pipeline.len() >= 1);
    }

    #[test]
    fn random_step_isotropic_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let data = Array2::from_shape_fn((2000, 3), |_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            v
        });
        let draws = 1000;
        let mut octants = [0usize; 8];
        let mut second_moments = [0.0f64; 3];
        for i in 0..draws {
            let step = random_step(&data.view(), 10_000 + i).unwrap();
            let w = step.w.coords();
            let idx = (usize::from(w[0] > 0.0) << 2)
                | (usize::from(w[1] > 0.0) << 1)
                | usize::from(w[2] > 0.0);
            octants[idx] += 1;
            for k in 0..3 {
                second_moments[k] += w[k] * w[k];
            }
        }
        // Chi-square over octants, df = 7; 24.32 is the 0.999 quantile.
        let expected = draws as f64 / 8.0;
        let chi2: f64 = octants
            .iter()
            .map(|&o| (o as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 24.32, "octant chi-square {chi2}, counts {octants:?}");
        for k in 0..3 {
            let m = second_moments[k] / draws as f64;
            assert!(
                (m - 1.0 / 3.0).abs() < 0.03,
                "coordinate {k} second moment {m}"
            );
        }
    }

    #[test]
    fn random_step_prefers_dominant_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let data = Array2::from_shape_fn((1500, 2), |(_, j)| {
            let g: f64 = StandardNormal.sample(&mut rng);
            if j == 0 {
                10.0 * g
            } else {
                g
            }
        });
        let mut sum_u1 = 0.0;
        let mut sum_u2 = 0.0;
        for i in 0..500u64 {
            let step = random_step(&data.view(), 20_000 + i).unwrap();
            let w = step.w.coords();
            sum_u1 += w[0].abs();
            sum_u2 += w[1].abs();
        }
        assert!(
            sum_u1 > 3.0 * sum_u2,
            "dominant axis loading {sum_u1} vs {sum_u2}"
        );
    }

    #[test]
    fn random_step_rank_one_data() {
        let u = array![1.0, 2.0, 2.0];
        let data = Array2::from_shape_fn((40, 3), |(i, j)| (i as f64 - 20.0) * u[j]);
        let step = random_step(&data.view(), 9).unwrap();
        let w = step.w.coords();
        let unit = &u / 3.0;
        let dot = w.dot(&unit).abs();
        assert!(dot > 1.0 - 1e-9, "alignment {dot}");
    }

    #[test]
    fn empty_pipeline_is_identity() {
        let space = EmbeddingSpace::new(
            "s",
            vec!["a".into(), "b".into()],
            array![[1.0, 2.0], [3.0, 4.0]],
        )
        .unwrap();
        let pipeline = ProjectionPipeline::new("s");
        let out = apply_pipeline(&space, &pipeline).unwrap();
        assert_eq!(out.matrix(), space.matrix());
    }

    #[test]
    fn orthogonal_steps_drop_rank_exactly_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let data = Array2::from_shape_fn((30, 8), |_| rng.gen_range(-1.0..1.0));
        let mut pipeline = ProjectionPipeline::new("s");
        for axis in 0..3 {
            let mut v = Array1::<f64>::zeros(8);
            v[axis] = 1.0;
            pipeline.steps.push(ProjectionStep {
                w: UnitVector::new(v).unwrap(),
                strategy: Strategy::Random,
                iteration: axis,
                metadata: StepMetadata::default(),
            });
        }
        let before = crate::linalg::rank(&data.view()).unwrap();
        let projected = apply_steps(&data.view(), &pipeline.steps).unwrap();
        let after = crate::linalg::rank(&projected.view()).unwrap();
        assert_eq!(before, 8);
        assert_eq!(after, 5);
    }

    #[test]
    fn composed_matrix_matches_sequential() {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        let data = Array2::from_shape_fn((12, 6), |_| rng.gen_range(-2.0..2.0));
        let mut pipeline = ProjectionPipeline::new("s");
        for i in 0..4 {
            let v = Array1::from_shape_fn(6, |_| rng.gen_range(-1.0..1.0));
            pipeline.steps.push(ProjectionStep {
                w: UnitVector::new(v).unwrap(),
                strategy: Strategy::Random,
                iteration: i,
                metadata: StepMetadata::default(),
            });
        }
        let sequential = apply_steps(&data.view(), &pipeline.steps).unwrap();
        let m = pipeline.composed_matrix(6).unwrap();
        let composed = data.dot(&m);
        for (a, b) in sequential.iter().zip(composed.iter()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn pipeline_json_round_trip() {
        let mut pipeline = ProjectionPipeline::new("space-1");
        pipeline.steps.push(ProjectionStep {
            w: UnitVector::new(array![0.6, 0.8]).unwrap(),
            strategy: Strategy::Mp,
            iteration: 0,
            metadata: StepMetadata {
                mean_distance: Some(1.25),
                ..StepMetadata::default()
            },
        });
        pipeline.warnings.push("example".into());
        let json = pipeline.to_json().unwrap();
        let back = ProjectionPipeline::from_json(&json).unwrap();
        assert_eq!(back.source_space, "space-1");
        assert_eq!(back.len(), 1);
        assert_eq!(back.warnings, pipeline.warnings);
        for (a, b) in back.steps[0]
            .w
            .coords()
            .iter()
            .zip(pipeline.steps[0].w.coords().iter())
        {
            assert_eq!(a, b);
        }
    }
}
