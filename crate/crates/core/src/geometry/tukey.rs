//! Tukey depth and Tukey medians: exact routines in the plane, sampled
//! approximations in arbitrary dimension.
//!
//! Halfspaces are closed everywhere in this module: a point on the boundary
//! hyperplane counts. Counting uses a small relative tolerance so that
//! points constructed to lie exactly on a boundary are not dropped by
//! floating-point noise.

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

use super::{DepthResult, UnitVector};

const BOUNDARY_TOL: f64 = 1e-9;

/// Number of points of `points` in the closed halfspace
/// `{x : (x - q) . u >= 0}`.
fn halfspace_count(points: &ArrayView2<f64>, q: &ArrayView1<f64>, u: &[f64]) -> usize {
    let mut count = 0;
    for row in points.rows() {
        let mut dot = 0.0;
        let mut norm2 = 0.0;
        for (k, &x) in row.iter().enumerate() {
            let v = x - q[k];
            dot += v * u[k];
            norm2 += v * v;
        }
        if dot >= -BOUNDARY_TOL * norm2.sqrt() {
            count += 1;
        }
    }
    count
}

/// Planar depth kernel over offset vectors `v_i = p_i - q` with precomputed
/// norms. Returns the minimal closed-halfplane count and its direction.
fn depth_kernel_2d(vs: &[[f64; 2]], norms: &[f64]) -> (usize, [f64; 2]) {
    let mut zero_count = 0usize;
    // (angle, direction) of every critical normal.
    let mut criticals: Vec<(f64, [f64; 2])> = Vec::with_capacity(2 * vs.len());
    for (v, &norm) in vs.iter().zip(norms.iter()) {
        if norm == 0.0 {
            zero_count += 1;
            continue;
        }
        let a = [-v[1] / norm, v[0] / norm];
        let b = [v[1] / norm, -v[0] / norm];
        criticals.push((a[1].atan2(a[0]), a));
        criticals.push((b[1].atan2(b[0]), b));
    }
    if criticals.is_empty() {
        return (vs.len(), [1.0, 0.0]);
    }
    criticals.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());

    let count = |u: [f64; 2]| -> usize {
        let mut c = zero_count;
        for (v, &norm) in vs.iter().zip(norms.iter()) {
            if norm == 0.0 {
                continue;
            }
            if v[0] * u[0] + v[1] * u[1] >= -BOUNDARY_TOL * norm {
                c += 1;
            }
        }
        c
    };

    let mut best_count = usize::MAX;
    let mut best_dir = [1.0, 0.0];
    let mut eval = |u: [f64; 2]| {
        let c = count(u);
        if c < best_count {
            best_count = c;
            best_dir = u;
        }
    };
    for i in 0..criticals.len() {
        let (_, a) = criticals[i];
        eval(a);
        // One direction inside the open arc to the next critical.
        let (_, b) = criticals[(i + 1) % criticals.len()];
        let mid = [a[0] + b[0], a[1] + b[1]];
        let norm = (mid[0] * mid[0] + mid[1] * mid[1]).sqrt();
        if norm > 1e-12 {
            eval([mid[0] / norm, mid[1] / norm]);
        } else {
            eval([-a[1], a[0]]);
        }
    }
    (best_count, best_dir)
}

fn offsets(points: &[[f64; 2]], q: [f64; 2]) -> (Vec<[f64; 2]>, Vec<f64>) {
    let mut vs = Vec::with_capacity(points.len());
    let mut norms = Vec::with_capacity(points.len());
    for p in points {
        let v = [p[0] - q[0], p[1] - q[1]];
        vs.push(v);
        norms.push((v[0] * v[0] + v[1] * v[1]).sqrt());
    }
    (vs, norms)
}

fn rows_2d(points: &ArrayView2<f64>) -> Vec<[f64; 2]> {
    points.rows().into_iter().map(|r| [r[0], r[1]]).collect()
}

/// Exact Tukey depth of `q` w.r.t. 2-D `points`.
///
/// The count of points in a closed halfplane through `q` is piecewise
/// constant as the halfplane normal rotates, changing only at directions
/// perpendicular to some `p - q`. Evaluating every such critical direction
/// plus one direction inside each open arc between consecutive criticals
/// therefore covers every value the count can take.
pub fn tukey_depth_exact_2d(q: &ArrayView1<f64>, points: &ArrayView2<f64>) -> Result<DepthResult> {
    if q.len() != 2 || points.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: points.ncols().max(q.len()),
        });
    }
    if points.nrows() == 0 {
        return Err(Error::InvalidArgument("empty point set".into()));
    }
    let pts = rows_2d(points);
    let (vs, norms) = offsets(&pts, [q[0], q[1]]);
    let (depth, dir) = depth_kernel_2d(&vs, &norms);
    Ok(DepthResult {
        point: q.to_owned(),
        depth,
        witness_direction: UnitVector::new(Array1::from(dir.to_vec()))?,
    })
}

fn line_intersection(
    a1: [f64; 2],
    d1: [f64; 2],
    a2: [f64; 2],
    d2: [f64; 2],
) -> Option<[f64; 2]> {
    let det = d1[0] * d2[1] - d1[1] * d2[0];
    let scale = (d1[0].abs() + d1[1].abs()) * (d2[0].abs() + d2[1].abs());
    if det.abs() <= 1e-12 * scale.max(1e-300) {
        return None;
    }
    let rx = a2[0] - a1[0];
    let ry = a2[1] - a1[1];
    let t = (rx * d2[1] - ry * d2[0]) / det;
    Some([a1[0] + t * d1[0], a1[1] + t * d1[1]])
}

/// Exact Tukey median in the plane.
///
/// A deepest point exists among the pairwise intersections of lines through
/// point pairs, plus the points themselves; every candidate is scored with
/// the exact depth routine. Depth ties resolve to the lexicographically
/// smallest candidate.
pub fn tukey_median_exact_2d(points: &ArrayView2<f64>) -> Result<DepthResult> {
    if points.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: points.ncols(),
        });
    }
    let n = points.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("empty point set".into()));
    }
    let pts = rows_2d(points);

    let mut lines: Vec<([f64; 2], [f64; 2])> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = [pts[j][0] - pts[i][0], pts[j][1] - pts[i][1]];
            if (d[0] * d[0] + d[1] * d[1]).sqrt() > 1e-12 {
                lines.push((pts[i], d));
            }
        }
    }

    let mut best_depth = 0usize;
    let mut best_point = pts[0];
    let mut best_dir = [1.0, 0.0];
    let mut seen_any = false;
    let mut eval = |cand: [f64; 2]| {
        if !cand[0].is_finite() || !cand[1].is_finite() {
            return;
        }
        let (vs, norms) = offsets(&pts, cand);
        let (depth, dir) = depth_kernel_2d(&vs, &norms);
        let better = depth > best_depth
            || (depth == best_depth && (cand[0], cand[1]) < (best_point[0], best_point[1]));
        if !seen_any || better {
            seen_any = true;
            best_depth = depth;
            best_point = cand;
            best_dir = dir;
        }
    };

    for &p in &pts {
        eval(p);
    }
    for i in 0..lines.len() {
        for j in (i + 1)..lines.len() {
            if let Some(x) = line_intersection(lines[i].0, lines[i].1, lines[j].0, lines[j].1) {
                eval(x);
            }
        }
    }

    Ok(DepthResult {
        point: Array1::from(best_point.to_vec()),
        depth: best_depth,
        witness_direction: UnitVector::new(Array1::from(best_dir.to_vec()))?,
    })
}

/// Sampled upper bound on the Tukey depth of `q` in any dimension.
///
/// Minimizes the closed-halfspace count over `directions` unit directions
/// drawn from the seeded generator. With a fixed seed the sample sequence is
/// nested, so the bound is monotone non-increasing in `directions`.
pub fn tukey_depth_approx(
    q: &ArrayView1<f64>,
    points: &ArrayView2<f64>,
    directions: usize,
    rng_seed: u64,
) -> Result<DepthResult> {
    if directions == 0 {
        return Err(Error::InvalidArgument("directions must be >= 1".into()));
    }
    if points.ncols() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            got: points.ncols(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let d = q.len();
    let mut best_count = usize::MAX;
    let mut best_dir = vec![0.0; d];
    for _ in 0..directions {
        let u = sample_unit(&mut rng, d);
        let c = halfspace_count(points, q, &u);
        if c < best_count {
            best_count = c;
            best_dir = u;
        }
    }
    Ok(DepthResult {
        point: q.to_owned(),
        depth: best_count,
        witness_direction: UnitVector::new(Array1::from(best_dir))?,
    })
}

fn sample_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ApproxMedianParams {
    /// Centroid-walk moves before local refinement.
    pub iterations: usize,
    /// Direction samples per depth evaluation.
    pub directions: usize,
    /// Shrinking-radius refinement rounds.
    pub refine_rounds: usize,
    /// Candidate perturbations per refinement round.
    pub refine_samples: usize,
}

impl Default for ApproxMedianParams {
    fn default() -> Self {
        ApproxMedianParams {
            iterations: 40,
            directions: 512,
            refine_rounds: 12,
            refine_samples: 40,
        }
    }
}

/// Approximate Tukey median. Starts at the coordinate-wise median, walks
/// toward the centroid of the shallow side of the current witness halfspace
/// with a decaying step, then refines the best point seen with a
/// shrinking-radius local search. Every visited point is scored by the
/// sampled depth bound and the deepest one wins.
pub fn tukey_median_approx(
    points: &ArrayView2<f64>,
    rng_seed: u64,
    params: ApproxMedianParams,
) -> Result<DepthResult> {
    let n = points.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("empty point set".into()));
    }
    if params.iterations == 0 || params.directions == 0 {
        return Err(Error::InvalidArgument(
            "iterations and directions must be >= 1".into(),
        ));
    }
    let d = points.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let mut cur = coordinate_median(points);
    let dirs: Vec<Vec<f64>> = (0..params.directions)
        .map(|_| sample_unit(&mut rng, d))
        .collect();

    let score = |q: &Array1<f64>| -> (usize, usize) {
        let mut best = usize::MAX;
        let mut which = 0;
        for (k, u) in dirs.iter().enumerate() {
            let c = halfspace_count(points, &q.view(), u);
            if c < best {
                best = c;
                which = k;
            }
        }
        (best, which)
    };

    let (cur_depth, cur_witness) = score(&cur);
    let mut cur_witness = cur_witness;
    let mut best_point = cur.clone();
    let mut best_depth = cur_depth;
    let mut best_witness = cur_witness;

    // Phase 1: decaying walk toward the shallow side's centroid. This
    // centers the search even when the coordinate median starts far off.
    for t in 0..params.iterations {
        let u = &dirs[cur_witness];
        let mut centroid = Array1::<f64>::zeros(d);
        let mut members = 0usize;
        for row in points.rows() {
            let mut dot = 0.0;
            for k in 0..d {
                dot += (row[k] - cur[k]) * u[k];
            }
            if dot >= 0.0 {
                centroid += &row;
                members += 1;
            }
        }
        if members == 0 {
            // Depth-zero start far outside the hull: aim at the full centroid.
            centroid = points.mean_axis(Axis(0)).expect("non-empty");
        } else {
            centroid /= members as f64;
        }

        let eta = (0.8 / (1.0 + 0.12 * t as f64)).max(0.05);
        cur = &cur + &((&centroid - &cur) * eta);
        let (cd, cw) = score(&cur);
        cur_witness = cw;
        if cd > best_depth {
            best_point = cur.clone();
            best_depth = cd;
            best_witness = cw;
        }
    }

    // Phase 2: shrinking-radius perturbation search around the best point.
    // The deepest region can be a small polygon the walk orbits without
    // entering; local perturbations with decaying scale land inside it.
    let spread = {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in points.iter() {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        (hi - lo).max(1e-9)
    };
    let mut radius = 0.25 * spread;
    for _ in 0..params.refine_rounds {
        for _ in 0..params.refine_samples {
            let mut cand = best_point.clone();
            for k in 0..d {
                let g: f64 = StandardNormal.sample(&mut rng);
                cand[k] += radius * g;
            }
            let (cd, cw) = score(&cand);
            if cd > best_depth {
                best_point = cand;
                best_depth = cd;
                best_witness = cw;
            }
        }
        radius *= 0.7;
    }

    Ok(DepthResult {
        point: best_point,
        depth: best_depth,
        witness_direction: UnitVector::new(Array1::from(dirs[best_witness].clone()))?,
    })
}

fn coordinate_median(points: &ArrayView2<f64>) -> Array1<f64> {
    let n = points.nrows();
    let d = points.ncols();
    let mut out = Array1::<f64>::zeros(d);
    for j in 0..d {
        let mut col: Vec<f64> = points.column(j).to_vec();
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out[j] = if n % 2 == 1 {
            col[n / 2]
        } else {
            0.5 * (col[n / 2 - 1] + col[n / 2])
        };
    }
    out
}
