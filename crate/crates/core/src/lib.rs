//! Linear concept erasure for embedding spaces.
//!
//! Removes a discrete attribute from a set of vectors with targeted
//! nullspace projections: a single mean-difference projection, a Tukey
//! median projection with worst-case guarantees, an iterative
//! classifier-driven baseline, and eigenvalue-weighted random projections
//! for ablations. The crate also ships the measurement battery used to judge
//! such transformations: linear and non-linear probes, clustering scores,
//! association tests, similarity correlations, neighborhood stability and
//! downstream true-positive-rate gaps.

pub mod attribute;
pub mod debias;
pub mod embeddings;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod metrics;
pub mod probes;
pub mod stats;
pub mod synth;

pub use attribute::{
    build_bias_dataset, seed_direction, split, AttributeClass, BiasDatasetParams, LabeledPointSet,
    NeutralFilter, Split,
};
pub use debias::{
    apply_pipeline, apply_steps, inlp_run, mp_multiclass, mp_pipeline, mp_step, random_step,
    tmp_step, InlpOutcome, InlpParams, ProjectionPipeline, ProjectionStep, StepMetadata, Strategy,
    TmpMode,
};
pub use embeddings::{
    cosine, load_text_embeddings, nearest_neighbors, save_text_embeddings, EmbeddingSpace,
    LoadReport, NeighborList, Query,
};
pub use error::{Error, Result};
pub use geometry::{
    best_linear_classifier, best_linear_classifier_2d, build_adversarial_instance, project_along,
    tukey_depth_approx, tukey_depth_exact_2d, tukey_median_approx, tukey_median_exact_2d,
    AdversarialInstance, AdversarialParams, ApproxMedianParams, DepthResult, Separator,
    UnitVector,
};
pub use metrics::{
    bias_by_neighbor, neighbor_stability, similarity_correlation, spearman, tpr_gap_suite,
    weat_effect_size, CorrelationKind, MissingTokenPolicy, PredictionRecord, SimilarityBenchmark,
    StabilityReport, TprGapReport, WeatResult, WeatTest,
};
pub use probes::{
    guarding_curve, kmeans_vmeasure, train_linear, train_mlp_probe, KMeansParams, LinearProbe,
    MlpParams, ProbeReport, TrainParams, TrainerKind, VMeasure,
};
