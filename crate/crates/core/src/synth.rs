//! Synthetic data generators shared by tests, benchmarks and experiment
//! demos: Gaussian class blobs, XOR layouts, and a planted-structure space
//! for projection ablations.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::attribute::{split, AttributeClass, LabeledPointSet};
use crate::embeddings::EmbeddingSpace;
use crate::metrics::SimilarityBenchmark;

/// A center vector with one nonzero coordinate.
pub fn axis_center(value: f64, axis: usize, d: usize) -> Array1<f64> {
    let mut v = Array1::<f64>::zeros(d);
    v[axis] = value;
    v
}

/// Gaussian blobs around the given centers, one class per center, with a
/// stratified split over the (train, dev, test) fractions.
pub fn gaussian_class_data(
    centers: &[Array1<f64>],
    per_class: usize,
    sigma: f64,
    fractions: (f64, f64, f64),
    seed: u64,
) -> (Array2<f64>, LabeledPointSet) {
    let d = centers[0].len();
    let n = centers.len() * per_class;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut matrix = Array2::<f64>::zeros((n, d));
    let mut classes = Vec::with_capacity(centers.len());
    for (c, center) in centers.iter().enumerate() {
        let mut indices = Vec::with_capacity(per_class);
        for i in 0..per_class {
            let row = c * per_class + i;
            for j in 0..d {
                let g: f64 = StandardNormal.sample(&mut rng);
                matrix[[row, j]] = center[j] + sigma * g;
            }
            indices.push(row);
        }
        classes.push(AttributeClass {
            label: format!("c{c}"),
            indices,
        });
    }
    let dataset = LabeledPointSet::new("synthetic", classes).expect("disjoint by construction");
    let dataset = split(&dataset, fractions, seed ^ 0x5eed).expect("valid fractions");
    (matrix, dataset)
}

/// Two Gaussian classes at +/- `sep` along axis 0, returned as explicit
/// train/test arrays with class ids.
pub fn two_gaussians_split(
    sep: f64,
    d: usize,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> (Array2<f64>, Vec<usize>, Array2<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut make = |n: usize| {
        let mut x = Array2::<f64>::zeros((n, d));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let c = i % 2;
            let center = if c == 1 { sep } else { -sep };
            for j in 0..d {
                let g: f64 = StandardNormal.sample(&mut rng);
                x[[i, j]] = if j == 0 { center + g } else { g };
            }
            y.push(c);
        }
        (x, y)
    };
    let (train_x, train_y) = make(n_train);
    let (test_x, test_y) = make(n_test);
    (train_x, train_y, test_x, test_y)
}

/// Noisy XOR layout: classes that no linear classifier can separate.
pub fn xor_dataset(n: usize, noise: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let corners = [
        ([0.0, 0.0], 0),
        ([1.0, 1.0], 0),
        ([0.0, 1.0], 1),
        ([1.0, 0.0], 1),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::<f64>::zeros((n, 2));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let (corner, label) = corners[i % 4];
        for j in 0..2 {
            let g: f64 = StandardNormal.sample(&mut rng);
            x[[i, j]] = corner[j] + noise * g;
        }
        y.push(label);
    }
    (x, y)
}

/// A space with a planted binary attribute along axis 0 and a planted
/// similarity structure on the remaining axes.
pub struct PlantedSpace {
    pub space: EmbeddingSpace,
    pub dataset: LabeledPointSet,
    pub benchmark: SimilarityBenchmark,
    /// The planted attribute axis.
    pub attribute_direction: Array1<f64>,
}

/// Build the planted ablation space.
///
/// Class tokens sit at `z +/- strength * e0` with `z` drawn on axes `1..d`;
/// neutral tokens are plain `z`. Benchmark pairs are sampled among class
/// tokens and their "human" score is the cosine of the z parts, so the
/// attribute component is pure noise for the benchmark until a projection
/// removes it.
pub fn planted_ablation_space(
    d: usize,
    per_class: usize,
    neutral: usize,
    pairs: usize,
    strength: f64,
    seed: u64,
) -> PlantedSpace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 2 * per_class + neutral;
    let mut matrix = Array2::<f64>::zeros((n, d));
    let mut clean = Array2::<f64>::zeros((n, d));
    let mut vocab = Vec::with_capacity(n);

    for i in 0..n {
        for j in 1..d {
            let g: f64 = StandardNormal.sample(&mut rng);
            matrix[[i, j]] = g;
            clean[[i, j]] = g;
        }
        if i < per_class {
            vocab.push(format!("plus{i:04}"));
            matrix[[i, 0]] = strength;
        } else if i < 2 * per_class {
            vocab.push(format!("minus{:04}", i - per_class));
            matrix[[i, 0]] = -strength;
        } else {
            vocab.push(format!("neut{:04}", i - 2 * per_class));
        }
    }

    let space = EmbeddingSpace::new("planted", vocab.clone(), matrix).expect("valid space");

    let classes = vec![
        AttributeClass {
            label: "minus".into(),
            indices: (per_class..2 * per_class).collect(),
        },
        AttributeClass {
            label: "plus".into(),
            indices: (0..per_class).collect(),
        },
    ];
    let dataset = LabeledPointSet::new("planted", classes).expect("disjoint");
    let dataset = split(&dataset, (0.7, 0.3, 0.0), seed ^ 0xab).expect("valid fractions");

    let mut benchmark_pairs = Vec::with_capacity(pairs);
    let class_count = 2 * per_class;
    let mut seen = std::collections::HashSet::new();
    while benchmark_pairs.len() < pairs {
        let a = rng.gen_range(0..class_count);
        let b = rng.gen_range(0..class_count);
        if a == b || !seen.insert((a.min(b), a.max(b))) {
            continue;
        }
        let ra = clean.row(a);
        let rb = clean.row(b);
        let na = ra.dot(&ra).sqrt();
        let nb = rb.dot(&rb).sqrt();
        let score = ra.dot(&rb) / (na * nb);
        benchmark_pairs.push((vocab[a].clone(), vocab[b].clone(), score));
    }

    PlantedSpace {
        space,
        dataset,
        benchmark: SimilarityBenchmark {
            name: "planted-sim".into(),
            pairs: benchmark_pairs,
        },
        attribute_direction: axis_center(1.0, 0, d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribute::Split;

    #[test]
    fn gaussian_data_shapes_and_splits() {
        let centers = [axis_center(2.0, 0, 5), axis_center(-2.0, 0, 5)];
        let (matrix, dataset) = gaussian_class_data(&centers, 50, 1.0, (0.6, 0.2, 0.2), 1);
        assert_eq!(matrix.nrows(), 100);
        assert_eq!(dataset.classes.len(), 2);
        assert_eq!(dataset.split_members(Split::Train).len(), 60);
        assert_eq!(dataset.split_members(Split::Dev).len(), 20);
        assert_eq!(dataset.split_members(Split::Test).len(), 20);
    }

    #[test]
    fn planted_space_has_expected_structure() {
        let planted = planted_ablation_space(20, 30, 10, 25, 3.0, 5);
        assert_eq!(planted.space.len(), 70);
        assert_eq!(planted.benchmark.pairs.len(), 25);
        // Class tokens carry the attribute on axis 0.
        let v = planted.space.vector("plus0000").unwrap();
        assert!((v[0] - 3.0).abs() < 1e-12);
        let v = planted.space.vector("minus0000").unwrap();
        assert!((v[0] + 3.0).abs() < 1e-12);
        let v = planted.space.vector("neut0000").unwrap();
        assert_eq!(v[0], 0.0);
    }
}
