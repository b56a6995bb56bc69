//! Strategy execution and the seeded multi-run experiment loop.
//!
//! A single run walks the configured strategy sequence, projecting the space
//! one step at a time and evaluating the selected metrics after every step
//! (iteration 0 is the untouched space). Multi-run experiments execute runs
//! in parallel with seed `rng_seed + run_index` and aggregate final values
//! and trajectories into confidence intervals.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use ndarray::Array2;
use rayon::prelude::*;

use debias_core::attribute::{LabeledPointSet, Split};
use debias_core::debias::{
    apply_steps, inlp_run, mp_pipeline, random_step, tmp_step, InlpParams, ProjectionPipeline,
    ProjectionStep, TmpMode,
};
use debias_core::embeddings::EmbeddingSpace;
use debias_core::metrics::{
    similarity_correlation, weat_effect_size, MissingTokenPolicy, SimilarityBenchmark, WeatTest,
};
use debias_core::probes::{
    evaluate_probe, gather_split, kmeans_vmeasure, train_linear, KMeansParams, TrainParams,
};
use debias_core::ApproxMedianParams;

use crate::config::{ExperimentConfig, StrategyElement, StrategyConfig};
use crate::report::{EvaluationReport, ScalarSummary, SeriesSummary};

/// Everything a run needs, loaded once and shared read-only.
pub struct RunInputs {
    pub space: EmbeddingSpace,
    pub dataset: Option<LabeledPointSet>,
    pub benchmarks: Vec<SimilarityBenchmark>,
    pub weat_tests: Vec<WeatTest>,
    pub guarding: bool,
    pub clustering: bool,
}

#[derive(Debug, Clone)]
pub struct SingleRunOutcome {
    pub trajectories: BTreeMap<String, Vec<f64>>,
    pub finals: BTreeMap<String, f64>,
    pub pipeline: ProjectionPipeline,
    pub warnings: Vec<String>,
}

pub fn trainer_params(strategy: &StrategyConfig, seed: u64) -> TrainParams {
    TrainParams {
        trainer: strategy.trainer,
        lambda: strategy.lambda,
        epochs: strategy.epochs,
        rng_seed: seed,
        average: true,
    }
}

fn class_names(dataset: &LabeledPointSet) -> Vec<String> {
    dataset.classes.iter().map(|c| c.label.clone()).collect()
}

/// Binary (minus, plus) index pair for strategies that need polar classes.
fn polar_classes(dataset: &LabeledPointSet) -> Result<(Vec<usize>, Vec<usize>)> {
    if dataset.classes.len() < 2 {
        bail!("strategy needs at least two classes");
    }
    Ok((
        dataset.classes[0].indices.clone(),
        dataset.classes[1].indices.clone(),
    ))
}

struct MetricProbe<'a> {
    inputs: &'a RunInputs,
    strategy: &'a StrategyConfig,
    seed: u64,
}

impl MetricProbe<'_> {
    /// Metric values on the current matrix, keyed by metric name.
    fn evaluate(&self, matrix: &Array2<f64>) -> Result<BTreeMap<String, f64>> {
        let mut out = BTreeMap::new();
        let needs_space = !self.inputs.benchmarks.is_empty() || !self.inputs.weat_tests.is_empty();
        if needs_space {
            let space = self
                .inputs
                .space
                .with_matrix(self.inputs.space.name.clone(), matrix.clone())?;
            for bench in &self.inputs.benchmarks {
                let res = similarity_correlation(&space, bench)?;
                out.insert(format!("similarity_rho:{}", bench.name), res.rho);
            }
            for test in &self.inputs.weat_tests {
                let res = weat_effect_size(&space, test, MissingTokenPolicy::Skip)?;
                out.insert(format!("weat_effect:{}", test.name), res.effect_size);
            }
        }
        if self.inputs.guarding {
            let dataset = self
                .inputs
                .dataset
                .as_ref()
                .ok_or_else(|| anyhow!("guarding metric needs a labeled dataset"))?;
            let (train_x, train_y) = gather_split(&matrix.view(), dataset, Split::Train);
            let (dev_x, dev_y) = gather_split(&matrix.view(), dataset, Split::Dev);
            let probe = train_linear(
                &train_x.view(),
                &train_y,
                &class_names(dataset),
                &trainer_params(self.strategy, self.seed),
            )?;
            let report = evaluate_probe(&probe, &dev_x.view(), &dev_y, Split::Dev);
            out.insert("guarding_accuracy".into(), report.accuracy);
        }
        Ok(out)
    }
}

/// Execute the strategy sequence once, recording a trajectory point at
/// iteration 0 and after every projection step.
pub fn run_single(
    inputs: &RunInputs,
    config: &ExperimentConfig,
    elements: &[StrategyElement],
    seed: u64,
) -> Result<SingleRunOutcome> {
    let strategy = &config.strategy;
    let probe = MetricProbe {
        inputs,
        strategy,
        seed,
    };
    let mut current = inputs.space.matrix().clone();
    let mut pipeline = ProjectionPipeline::new(inputs.space.name.clone());
    let mut trajectories: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut record = |values: BTreeMap<String, f64>,
                      trajectories: &mut BTreeMap<String, Vec<f64>>| {
        for (k, v) in values {
            trajectories.entry(k).or_default().push(v);
        }
    };
    record(probe.evaluate(&current)?, &mut trajectories);

    let mut step_counter: u64 = 0;
    let mut push_step = |step: ProjectionStep,
                         current: &mut Array2<f64>,
                         pipeline: &mut ProjectionPipeline,
                         trajectories: &mut BTreeMap<String, Vec<f64>>|
     -> Result<()> {
        *current = apply_steps(&current.view(), std::slice::from_ref(&step))?;
        pipeline.steps.push(step);
        record(probe.evaluate(current)?, trajectories);
        Ok(())
    };

    for element in elements {
        match element {
            StrategyElement::Mp => {
                let dataset = inputs
                    .dataset
                    .as_ref()
                    .ok_or_else(|| anyhow!("MP needs a labeled dataset"))?;
                let sub = mp_pipeline(&current.view(), dataset, strategy.anchor.as_deref())?;
                pipeline.warnings.extend(sub.warnings.clone());
                for step in sub.steps {
                    push_step(step, &mut current, &mut pipeline, &mut trajectories)?;
                }
            }
            StrategyElement::Tmp => {
                let dataset = inputs
                    .dataset
                    .as_ref()
                    .ok_or_else(|| anyhow!("TMP needs a labeled dataset"))?;
                let (minus, plus) = polar_classes(dataset)?;
                let mode = if strategy.tmp_mode == "exact2d" {
                    TmpMode::Exact2d
                } else {
                    TmpMode::Approx(ApproxMedianParams::default())
                };
                let step = tmp_step(&current.view(), &minus, &plus, mode, seed)?;
                push_step(step, &mut current, &mut pipeline, &mut trajectories)?;
            }
            StrategyElement::Inlp { max_iters } => {
                let dataset = inputs
                    .dataset
                    .as_ref()
                    .ok_or_else(|| anyhow!("INLP needs a labeled dataset"))?;
                let params = InlpParams {
                    trainer: trainer_params(strategy, seed),
                    max_iters: max_iters.unwrap_or(strategy.inlp_max_iters),
                    stop_margin: strategy.stop_margin,
                    eval_split: Split::Dev,
                    orthogonalize: strategy.orthogonalize,
                    pre_check: false,
                };
                let outcome = inlp_run(&current.view(), dataset, &params)?;
                pipeline.warnings.extend(outcome.pipeline.warnings.clone());
                for step in outcome.pipeline.steps {
                    push_step(step, &mut current, &mut pipeline, &mut trajectories)?;
                }
            }
            StrategyElement::Random { count } => {
                for _ in 0..*count {
                    let step_seed = seed
                        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                        .wrapping_add(step_counter);
                    step_counter += 1;
                    let step = random_step(&current.view(), step_seed)?;
                    push_step(step, &mut current, &mut pipeline, &mut trajectories)?;
                }
            }
        }
    }

    let mut finals: BTreeMap<String, f64> = trajectories
        .iter()
        .filter_map(|(k, v)| v.last().map(|&x| (k.clone(), x)))
        .collect();

    if inputs.clustering {
        let dataset = inputs
            .dataset
            .as_ref()
            .ok_or_else(|| anyhow!("clustering metric needs a labeled dataset"))?;
        let split = if dataset.split_members(Split::Test).is_empty() {
            Split::Dev
        } else {
            Split::Test
        };
        let (points, labels) = gather_split(&current.view(), dataset, split);
        let score = kmeans_vmeasure(
            &points.view(),
            &labels,
            &KMeansParams {
                k: dataset.classes.len().min(2).max(2),
                restarts: 5,
                max_iters: 100,
                rng_seed: seed,
            },
        )?;
        finals.insert("vmeasure".into(), score.v);
    }

    let warnings = pipeline.warnings.clone();
    Ok(SingleRunOutcome {
        trajectories,
        finals,
        pipeline,
        warnings,
    })
}

/// Run `config.runs` seeded repetitions concurrently and aggregate.
///
/// Run `i` uses seed `rng_seed + i`; aggregation is ordered by run index, so
/// identical configs produce identical reports.
pub fn run_experiment(
    inputs: &RunInputs,
    config: &ExperimentConfig,
) -> Result<(EvaluationReport, Vec<SingleRunOutcome>)> {
    let elements = crate::config::parse_strategy(&config.strategy.spec)?;
    let outcomes: Result<Vec<SingleRunOutcome>> = (0..config.runs)
        .into_par_iter()
        .map(|i| {
            run_single(inputs, config, &elements, config.rng_seed + i as u64)
                .with_context(|| format!("run {i}"))
        })
        .collect();
    let outcomes = outcomes?;

    let hash = crate::report::config_hash(&config.canonical_json()?);
    let mut report = EvaluationReport::new(&config.name, hash, config.rng_seed, config.runs);

    let mut metric_names: Vec<String> = outcomes
        .iter()
        .flat_map(|o| o.finals.keys().cloned())
        .collect();
    metric_names.sort();
    metric_names.dedup();
    for name in &metric_names {
        let values: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| o.finals.get(name).copied())
            .collect();
        report
            .scalars
            .insert(name.clone(), ScalarSummary::from_runs(&values));
    }

    let mut series_names: Vec<String> = outcomes
        .iter()
        .flat_map(|o| o.trajectories.keys().cloned())
        .collect();
    series_names.sort();
    series_names.dedup();
    for name in &series_names {
        let rows: Vec<Vec<f64>> = outcomes
            .iter()
            .filter_map(|o| o.trajectories.get(name).cloned())
            .collect();
        report
            .series
            .insert(name.clone(), SeriesSummary::from_runs(&rows, config.runs <= 32));
    }

    for (i, o) in outcomes.iter().enumerate() {
        for w in &o.warnings {
            report.warnings.push(format!("run {i}: {w}"));
        }
    }
    report.details.insert(
        "pipeline_lengths".into(),
        serde_json::json!(outcomes.iter().map(|o| o.pipeline.len()).collect::<Vec<_>>()),
    );
    Ok((report, outcomes))
}
