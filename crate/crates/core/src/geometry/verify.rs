//! Randomized verifiers for the projection bounds: the misclassification
//! floor of median-difference projections, the centerpoint depth guarantee,
//! and the hard-instance misclassification cap.

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::orthonormal_complement;

use super::{
    best_linear_classifier, build_adversarial_instance, project_along, tukey_median_exact_2d,
    AdversarialParams, UnitVector,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundSuiteReport {
    pub name: String,
    pub cases: usize,
    pub violations: usize,
    pub notes: Vec<String>,
}

impl BoundSuiteReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn random_class(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    // Mix of shapes: uniform box, gaussian blob, or blob plus outliers.
    let style = rng.gen_range(0..3);
    let mut pts = Array2::<f64>::zeros((n, 2));
    match style {
        0 => {
            for mut row in pts.rows_mut() {
                row[0] = rng.gen_range(-3.0..3.0);
                row[1] = rng.gen_range(-3.0..3.0);
            }
        }
        1 => {
            let cx: f64 = rng.gen_range(-2.0..2.0);
            let cy: f64 = rng.gen_range(-2.0..2.0);
            for mut row in pts.rows_mut() {
                let gx: f64 = StandardNormal.sample(rng);
                let gy: f64 = StandardNormal.sample(rng);
                row[0] = cx + gx;
                row[1] = cy + gy;
            }
        }
        _ => {
            let cx: f64 = rng.gen_range(-1.0..1.0);
            let cy: f64 = rng.gen_range(-1.0..1.0);
            for (i, mut row) in pts.rows_mut().into_iter().enumerate() {
                if i % 7 == 0 {
                    row[0] = cx + rng.gen_range(-12.0..12.0);
                    row[1] = cy + rng.gen_range(-12.0..12.0);
                } else {
                    row[0] = cx + 0.4 * rng.gen_range(-1.0..1.0);
                    row[1] = cy + 0.4 * rng.gen_range(-1.0..1.0);
                }
            }
        }
    }
    pts
}

/// After projecting along the difference of the class Tukey medians, the
/// best linear classifier must misclassify at least min(t-, t+) points.
pub fn verify_median_projection_bound(instances: usize, rng_seed: u64) -> Result<BoundSuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut report = BoundSuiteReport {
        name: "median-projection misclassification floor".into(),
        cases: 0,
        violations: 0,
        notes: Vec::new(),
    };
    while report.cases < instances {
        let n_minus = rng.gen_range(3..=30);
        let n_plus = rng.gen_range(3..=30);
        let minus = random_class(&mut rng, n_minus);
        let plus = random_class(&mut rng, n_plus);

        let med_minus = tukey_median_exact_2d(&minus.view())?;
        let med_plus = tukey_median_exact_2d(&plus.view())?;
        let diff = &med_plus.point - &med_minus.point;
        let w = match UnitVector::new(diff) {
            Ok(w) => w,
            Err(_) => continue, // coincident medians: no direction to test
        };

        let minus_proj = project_along(&minus.view(), &w)?;
        let plus_proj = project_along(&plus.view(), &w)?;
        let (errors, _) = super::best_linear_classifier_2d(&minus_proj.view(), &plus_proj.view())?;
        let bound = med_minus.depth.min(med_plus.depth);

        report.cases += 1;
        if errors < bound {
            report.violations += 1;
            if report.notes.len() < 5 {
                report.notes.push(format!(
                    "case {}: errors {errors} < bound {bound} (n-={n_minus}, n+={n_plus})",
                    report.cases
                ));
            }
        }
    }
    Ok(report)
}

/// The exact planar Tukey median has depth at least ceil(n/3) (and at most
/// ceil(n/2)).
pub fn verify_median_depth_bound(instances: usize, rng_seed: u64) -> Result<BoundSuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut report = BoundSuiteReport {
        name: "tukey median depth >= ceil(n/3)".into(),
        cases: 0,
        violations: 0,
        notes: Vec::new(),
    };
    for case in 0..instances {
        let n = rng.gen_range(1..=25);
        let pts = random_class(&mut rng, n);
        let res = tukey_median_exact_2d(&pts.view())?;
        let lower = (n + 2) / 3;
        let upper = n.div_ceil(2);
        report.cases += 1;
        if res.depth < lower || res.depth > upper {
            report.violations += 1;
            if report.notes.len() < 5 {
                report.notes.push(format!(
                    "case {case}: n={n} depth={} outside [{lower},{upper}]",
                    res.depth
                ));
            }
        }
    }
    Ok(report)
}

fn sample_unit(rng: &mut ChaCha8Rng, d: usize) -> Array1<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return Array1::from(v) / norm;
        }
    }
}

fn reduce_to_complement(points: &ArrayView2<f64>, w: &UnitVector) -> Result<Array2<f64>> {
    let projected = project_along(points, w)?;
    let basis = orthonormal_complement(w.coords());
    Ok(projected.dot(&basis))
}

/// On the hard instance, for every sampled projection direction the optimal
/// classifier makes at most ceil(m/d) mistakes.
pub fn verify_misclassification_upper_bound(
    d: usize,
    m: usize,
    n: usize,
    directions: usize,
    rng_seed: u64,
) -> Result<BoundSuiteReport> {
    let mut report = BoundSuiteReport {
        name: format!("hard-instance misclassification cap (d={d}, m={m}, n={n})"),
        cases: 0,
        violations: 0,
        notes: Vec::new(),
    };
    let inst = build_adversarial_instance(&AdversarialParams {
        d,
        m,
        n,
        cluster_offset: None,
        eps: None,
        rng_seed,
    })?;
    let bound = inst.upper_bound();
    let ambient = inst.ambient_dim();

    let total = m + n;
    let mut stacked = Array2::<f64>::zeros((total, ambient));
    let mut labels = Vec::with_capacity(total);
    for (i, row) in inst.simplex_points.rows().into_iter().enumerate() {
        stacked.row_mut(i).assign(&row);
        labels.push(-1i8);
    }
    for (i, row) in inst.cluster_points.rows().into_iter().enumerate() {
        stacked.row_mut(m + i).assign(&row);
        labels.push(1i8);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ 0x9e37_79b9_7f4a_7c15);
    for case in 0..directions {
        let w = UnitVector::new(sample_unit(&mut rng, ambient))?;
        let reduced = reduce_to_complement(&stacked.view(), &w)?;
        let (errors, _) = best_linear_classifier(&reduced.view(), &labels)?;
        report.cases += 1;
        if errors > bound {
            report.violations += 1;
            if report.notes.len() < 5 {
                report
                    .notes
                    .push(format!("direction {case}: errors {errors} > bound {bound}"));
            }
        }
    }
    Ok(report)
}

/// Sanity slice across the suites with small instance counts; the CLI and
/// acceptance tests drive the full-size runs.
pub fn quick_all(rng_seed: u64) -> Result<Vec<BoundSuiteReport>> {
    Ok(vec![
        verify_median_projection_bound(25, rng_seed)?,
        verify_median_depth_bound(25, rng_seed.wrapping_add(1))?,
        verify_misclassification_upper_bound(2, 6, 6, 50, rng_seed.wrapping_add(2))?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Axis;

    #[test]
    fn small_suites_pass() {
        for report in quick_all(12).unwrap() {
            assert!(report.passed(), "{}: {:?}", report.name, report.notes);
        }
    }

    #[test]
    fn reduction_preserves_pairwise_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = Array2::from_shape_fn((6, 4), |_| rng.gen_range(-2.0..2.0));
        let w = UnitVector::new(sample_unit(&mut rng, 4)).unwrap();
        let projected = project_along(&pts.view(), &w).unwrap();
        let reduced = reduce_to_complement(&pts.view(), &w).unwrap();
        assert_eq!(reduced.ncols(), 3);
        for i in 0..6 {
            for j in (i + 1)..6 {
                let dp = (&projected.index_axis(Axis(0), i)
                    - &projected.index_axis(Axis(0), j))
                    .mapv(|x| x * x)
                    .sum()
                    .sqrt();
                let dr = (&reduced.index_axis(Axis(0), i) - &reduced.index_axis(Axis(0), j))
                    .mapv(|x| x * x)
                    .sum()
                    .sqrt();
                assert!((dp - dr).abs() < 1e-9);
            }
        }
    }
}
