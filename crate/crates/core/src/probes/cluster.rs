//! Lloyd's k-means with k-means++ seeding, scored against gold labels by
//! V-measure (the harmonic mean of homogeneity and completeness).

use ndarray::ArrayView2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub rng_seed: u64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams {
            k: 2,
            restarts: 10,
            max_iters: 100,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VMeasure {
    pub v: f64,
    pub homogeneity: f64,
    pub completeness: f64,
}

/// Cluster assignments with the best inertia over the configured restarts.
pub fn kmeans(points: &ArrayView2<f64>, params: &KMeansParams) -> Result<Vec<usize>> {
    let n = points.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("empty point set".into()));
    }
    if params.k == 0 || params.k > n {
        return Err(Error::InvalidArgument(format!(
            "k={} with {n} points",
            params.k
        )));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for r in 0..params.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed.wrapping_add(r as u64));
        let (assign, inertia) = lloyd(points, params.k, params.max_iters, &mut rng);
        if best.as_ref().map_or(true, |(bi, _)| inertia < *bi) {
            best = Some((inertia, assign));
        }
    }
    Ok(best.expect("at least one restart").1)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn lloyd(
    points: &ArrayView2<f64>,
    k: usize,
    max_iters: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, f64) {
    let n = points.nrows();
    let d = points.ncols();
    let rows: Vec<Vec<f64>> = points.rows().into_iter().map(|r| r.to_vec()).collect();

    // k-means++ seeding.
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(rows[rng.gen_range(0..n)].clone());
    while centers.len() < k {
        let weights: Vec<f64> = rows
            .iter()
            .map(|p| {
                centers
                    .iter()
                    .map(|c| dist2(p, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            // All points coincide with existing centers; duplicate one.
            centers.push(rows[rng.gen_range(0..n)].clone());
            continue;
        }
        let mut target = rng.gen_range(0.0..total);
        let mut chosen = n - 1;
        for (i, w) in weights.iter().enumerate() {
            if target < *w {
                chosen = i;
                break;
            }
            target -= w;
        }
        centers.push(rows[chosen].clone());
    }

    let mut assign = vec![0usize; n];
    for _ in 0..max_iters {
        let mut changed = false;
        for (i, p) in rows.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let dd = dist2(p, center);
                if dd < best_d {
                    best_d = dd;
                    best = c;
                }
            }
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in rows.iter().enumerate() {
            counts[assign[i]] += 1;
            for (j, &x) in p.iter().enumerate() {
                sums[assign[i]][j] += x;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Re-seed an empty cluster at the point farthest from its center.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        dist2(&rows[a], &centers[assign[a]])
                            .partial_cmp(&dist2(&rows[b], &centers[assign[b]]))
                            .unwrap()
                    })
                    .unwrap();
                centers[c] = rows[far].clone();
            } else {
                for j in 0..d {
                    centers[c][j] = sums[c][j] / counts[c] as f64;
                }
            }
        }
    }
    let inertia: f64 = rows
        .iter()
        .enumerate()
        .map(|(i, p)| dist2(p, &centers[assign[i]]))
        .sum();
    (assign, inertia)
}

fn entropy(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// V-measure of a clustering against gold labels.
///
/// Homogeneity is I(C;K)/H(C) and completeness I(C;K)/H(K); a degenerate
/// zero entropy on either side scores that side 1, and V is 0 when both
/// components vanish.
pub fn vmeasure_from_assignments(labels: &[usize], clusters: &[usize]) -> Result<VMeasure> {
    if labels.len() != clusters.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: clusters.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::InvalidArgument("empty assignment".into()));
    }
    let n = labels.len();
    let kc = labels.iter().max().unwrap() + 1;
    let kk = clusters.iter().max().unwrap() + 1;
    let mut contingency = vec![vec![0usize; kk]; kc];
    let mut class_counts = vec![0usize; kc];
    let mut cluster_counts = vec![0usize; kk];
    for (&c, &k) in labels.iter().zip(clusters.iter()) {
        contingency[c][k] += 1;
        class_counts[c] += 1;
        cluster_counts[k] += 1;
    }

    let h_c = entropy(&class_counts, n);
    let h_k = entropy(&cluster_counts, n);
    let nf = n as f64;
    let mut mi = 0.0;
    for c in 0..kc {
        for k in 0..kk {
            let joint = contingency[c][k];
            if joint == 0 {
                continue;
            }
            let pj = joint as f64 / nf;
            mi += pj
                * ((joint as f64 * nf) / (class_counts[c] as f64 * cluster_counts[k] as f64))
                    .ln();
        }
    }
    let mi = mi.max(0.0);

    let homogeneity = if h_c == 0.0 { 1.0 } else { mi / h_c };
    let completeness = if h_k == 0.0 { 1.0 } else { mi / h_k };
    let v = if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    };
    Ok(VMeasure {
        v,
        homogeneity,
        completeness,
    })
}

/// Cluster `points` with k-means and score against `labels`.
pub fn kmeans_vmeasure(
    points: &ArrayView2<f64>,
    labels: &[usize],
    params: &KMeansParams,
) -> Result<VMeasure> {
    if labels.len() != points.nrows() {
        return Err(Error::DimensionMismatch {
            expected: points.nrows(),
            got: labels.len(),
        });
    }
    let assign = kmeans(points, params)?;
    vmeasure_from_assignments(labels, &assign)
}
