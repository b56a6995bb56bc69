//! Hard instances for single-projection guarding: a jittered regular simplex
//! in a d-dimensional slice of R^{d+1} facing a tight cluster lifted far
//! along the extra axis. After any single projection these stay almost
//! separable, which caps the misclassifications any method can force.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdversarialParams {
    /// Simplex dimension; the instance lives in R^{d+1}.
    pub d: usize,
    /// Simplex-side point count.
    pub m: usize,
    /// Cluster-side point count.
    pub n: usize,
    /// Cluster offset along the extra axis; defaults to 4d.
    pub cluster_offset: Option<f64>,
    /// Cluster radius; defaults to 1/(2d).
    pub eps: Option<f64>,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdversarialInstance {
    /// m x (d+1): points near the scaled simplex vertices, last coordinate 0.
    pub simplex_points: Array2<f64>,
    /// n x (d+1): points within `eps` of (0, ..., 0, cluster_offset).
    pub cluster_points: Array2<f64>,
    pub d: usize,
    pub cluster_offset: f64,
    pub eps: f64,
    /// Unit-circumradius simplex vertices, (d+1) x d.
    pub vertices: Array2<f64>,
}

impl AdversarialInstance {
    pub fn ambient_dim(&self) -> usize {
        self.d + 1
    }

    /// Misclassification cap for the best classifier after any single
    /// projection: ceil(m / d).
    pub fn upper_bound(&self) -> usize {
        self.simplex_points.nrows().div_ceil(self.d)
    }
}

/// Vertices of the regular d-simplex, centered at the origin with unit
/// circumradius, expressed in d coordinates. Pairwise dot products are -1/d.
pub fn regular_simplex_vertices(d: usize) -> Array2<f64> {
    // Start from the standard basis of R^{d+1}, center it, and express the
    // result in an orthonormal basis of the sum-zero subspace.
    let k = d + 1;
    let centered = {
        let mut m = Array2::<f64>::zeros((k, k));
        for i in 0..k {
            for j in 0..k {
                m[[i, j]] = if i == j { 1.0 } else { 0.0 } - 1.0 / k as f64;
            }
        }
        m
    };
    // Gram-Schmidt a basis of the sum-zero subspace from e_i - e_{i+1}.
    let mut basis: Vec<Array1<f64>> = Vec::with_capacity(d);
    for i in 0..d {
        let mut v = Array1::<f64>::zeros(k);
        v[i] = 1.0;
        v[i + 1] = -1.0;
        for b in &basis {
            let c = b.dot(&v);
            v = &v - &(b * c);
        }
        let norm = v.dot(&v).sqrt();
        basis.push(v / norm);
    }
    let mut out = Array2::<f64>::zeros((k, d));
    for i in 0..k {
        let row = centered.row(i);
        for (j, b) in basis.iter().enumerate() {
            out[[i, j]] = row.dot(b);
        }
    }
    // Normalize to unit circumradius.
    for mut row in out.rows_mut() {
        let norm = row.dot(&row).sqrt();
        row.mapv_inplace(|x| x / norm);
    }
    out
}

fn sample_in_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            let u: f64 = rng.gen_range(0.0..1.0);
            let r = radius * 0.999 * u.powf(1.0 / dim as f64);
            return v.into_iter().map(|x| x * r / norm).collect();
        }
    }
}

/// Build the hard instance in R^{d+1}.
///
/// Simplex points are spread round-robin so no vertex hosts more than
/// ceil(m/(d+1)) of them, with jitter an order of magnitude below `eps` so
/// the separation argument keeps its slack.
pub fn build_adversarial_instance(params: &AdversarialParams) -> Result<AdversarialInstance> {
    let d = params.d;
    if d < 1 {
        return Err(Error::InvalidArgument("d must be >= 1".into()));
    }
    if params.m == 0 || params.n == 0 {
        return Err(Error::InvalidArgument("m and n must be >= 1".into()));
    }
    let offset = params.cluster_offset.unwrap_or(4.0 * d as f64);
    let eps = params.eps.unwrap_or(1.0 / (2.0 * d as f64));
    let jitter = eps / 8.0;
    let ambient = d + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);

    let vertices = regular_simplex_vertices(d);

    let mut simplex_points = Array2::<f64>::zeros((params.m, ambient));
    for i in 0..params.m {
        let v = vertices.row(i % (d + 1));
        let noise = sample_in_ball(&mut rng, d, jitter);
        for j in 0..d {
            simplex_points[[i, j]] = v[j] + noise[j];
        }
        simplex_points[[i, d]] = 0.0;
    }

    let mut cluster_points = Array2::<f64>::zeros((params.n, ambient));
    for i in 0..params.n {
        let noise = sample_in_ball(&mut rng, ambient, eps);
        for (j, &x) in noise.iter().enumerate() {
            cluster_points[[i, j]] = x;
        }
        cluster_points[[i, d]] += offset;
    }

    Ok(AdversarialInstance {
        simplex_points,
        cluster_points,
        d,
        cluster_offset: offset,
        eps,
        vertices,
    })
}
