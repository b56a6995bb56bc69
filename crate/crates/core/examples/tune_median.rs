use debias_core::geometry::{
    tukey_depth_exact_2d, tukey_median_approx, tukey_median_exact_2d, ApproxMedianParams,
};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn exact_depth(q: &Array1<f64>, pts: &Array2<f64>) -> usize {
    tukey_depth_exact_2d(&q.view(), &pts.view()).unwrap().depth
}

fn coordinate_median(pts: &Array2<f64>) -> Array1<f64> {
    let n = pts.nrows();
    let mut out = Array1::<f64>::zeros(2);
    for j in 0..2 {
        let mut col: Vec<f64> = pts.column(j).to_vec();
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out[j] = if n % 2 == 1 {
            col[n / 2]
        } else {
            0.5 * (col[n / 2 - 1] + col[n / 2])
        };
    }
    out
}

/// Pattern search baseline: shrinking random perturbations scored by exact depth? No - sampled.
fn pattern_search(pts: &Array2<f64>, seed: u64, rounds: usize, per_round: usize) -> Array1<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<[f64; 2]> = (0..512)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            let n = (a * a + b * b).sqrt();
            [a / n, b / n]
        })
        .collect();
    let score = |q: &Array1<f64>| -> usize {
        dirs.iter()
            .map(|u| {
                pts.rows()
                    .into_iter()
                    .filter(|p| (p[0] - q[0]) * u[0] + (p[1] - q[1]) * u[1] >= -1e-12)
                    .count()
            })
            .min()
            .unwrap()
    };
    // spread of the data
    let spread = {
        let mn = pts.iter().cloned().fold(f64::INFINITY, f64::min);
        let mx = pts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        mx - mn
    };
    let mut best = coordinate_median(pts);
    let mut best_score = score(&best);
    let mut radius = spread * 0.25;
    for _ in 0..rounds {
        for _ in 0..per_round {
            let dx: f64 = StandardNormal.sample(&mut rng);
            let dy: f64 = StandardNormal.sample(&mut rng);
            let cand = Array1::from(vec![best[0] + radius * dx, best[1] + radius * dy]);
            let s = score(&cand);
            if s > best_score {
                best = cand;
                best_score = s;
            }
        }
        radius *= 0.7;
    }
    best
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let iterations: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let directions: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(512);
    let nmax: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(40);
    let trials: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(100);

    let params = ApproxMedianParams {
        iterations,
        directions,
        ..ApproxMedianParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut walk_hits = 0;
    let mut coord_hits = 0;
    let mut pattern_hits = 0;
    let start = std::time::Instant::now();
    for trial in 0..trials {
        let n = rng.gen_range(3..=nmax);
        let pts = Array2::from_shape_fn((n, 2), |_| rng.gen_range(-3.0..3.0));
        let exact = tukey_median_exact_2d(&pts.view()).unwrap().depth;

        let approx = tukey_median_approx(&pts.view(), 1000 + trial as u64, params).unwrap();
        if exact_depth(&approx.point, &pts) + 1 >= exact {
            walk_hits += 1;
        }
        if exact_depth(&coordinate_median(&pts), &pts) + 1 >= exact {
            coord_hits += 1;
        }
        let ps = pattern_search(&pts, 1000 + trial as u64, 12, 40);
        if exact_depth(&ps, &pts) + 1 >= exact {
            pattern_hits += 1;
        }
    }
    println!(
        "nmax={nmax} trials={trials}: walk {walk_hits}, coordmedian {coord_hits}, pattern {pattern_hits} ({:?})",
        start.elapsed()
    );
}
