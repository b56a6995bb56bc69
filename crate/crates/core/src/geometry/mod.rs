//! Geometric primitives: projection along a direction, Tukey depth and
//! medians, an exact misclassification oracle, and hard-instance
//! construction with bound verifiers.

mod adversarial;
mod oracle;
mod tukey;
pub mod verify;

pub use adversarial::{build_adversarial_instance, AdversarialInstance, AdversarialParams};
pub use oracle::{best_linear_classifier, best_linear_classifier_2d, Separator};
pub use tukey::{
    tukey_depth_approx, tukey_depth_exact_2d, tukey_median_approx, tukey_median_exact_2d,
    ApproxMedianParams,
};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A direction with unit Euclidean norm.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitVector(Array1<f64>);

impl UnitVector {
    /// Normalize `v`; errors if its norm is too small to be a direction.
    pub fn new(v: Array1<f64>) -> Result<Self> {
        let norm = v.dot(&v).sqrt();
        if norm < 1e-10 {
            return Err(Error::DegenerateDirection(format!(
                "norm {norm:.3e} below threshold"
            )));
        }
        Ok(UnitVector(v / norm))
    }

    pub fn coords(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn view(&self) -> ArrayView1<'_, f64> {
        self.0.view()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Project every row of `points` onto the hyperplane orthogonal to `w`:
/// `p_w = p - (p . w) w`.
pub fn project_along(points: &ArrayView2<f64>, w: &UnitVector) -> Result<Array2<f64>> {
    if points.ncols() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            got: points.ncols(),
        });
    }
    let coeffs = points.dot(w.coords());
    let mut out = points.to_owned();
    for (mut row, &c) in out.rows_mut().into_iter().zip(coeffs.iter()) {
        row.scaled_add(-c, &w.view());
    }
    Ok(out)
}

/// Project a single point.
pub fn project_point(p: &ArrayView1<f64>, w: &UnitVector) -> Array1<f64> {
    let c = p.dot(w.coords());
    p - &(w.coords() * c)
}

/// A point with its Tukey depth and the halfspace direction attaining it.
///
/// The closed halfspace `{x : (x - point) . witness >= 0}` contains exactly
/// `depth` points of the reference set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DepthResult {
    pub point: Array1<f64>,
    pub depth: usize,
    pub witness_direction: UnitVector,
}

/// Serialize points as CSV, one point per row.
pub fn points_to_csv(points: &ArrayView2<f64>) -> String {
    let mut out = String::new();
    for row in points.rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Parse the CSV form produced by [`points_to_csv`].
pub fn points_from_csv(text: &str) -> Result<Array2<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|e| Error::parse("<csv>", lineno + 1, e.to_string()))?;
        if let Some(first) = rows.first() {
            if vals.len() != first.len() {
                return Err(Error::parse("<csv>", lineno + 1, "ragged row"));
            }
        }
        rows.push(vals);
    }
    let n = rows.len();
    let d = rows.first().map(|r| r.len()).unwrap_or(0);
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((n, d), flat).map_err(|e| Error::InvalidArgument(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn projection_kills_own_direction() {
        let w = UnitVector::new(array![1.0, 0.0]).unwrap();
        let pts = array![[1.0, 0.0]];
        let out = project_along(&pts.view(), &w).unwrap();
        assert_eq!(out, array![[0.0, 0.0]]);
    }

    #[test]
    fn projection_hand_case() {
        // p = (1,0), w = (1/sqrt2, -1/sqrt2): (p.w) = 1/sqrt2, result (0.5, 0.5).
        let w = UnitVector::new(array![1.0, -1.0]).unwrap();
        let pts = array![[1.0, 0.0]];
        let out = project_along(&pts.view(), &w).unwrap();
        assert!((out[[0, 0]] - 0.5).abs() < 1e-12);
        assert!((out[[0, 1]] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn projection_fixes_orthogonal_points() {
        let w = UnitVector::new(array![0.0, 1.0, 0.0]).unwrap();
        let pts = array![[3.0, 0.0, -2.0]];
        let out = project_along(&pts.view(), &w).unwrap();
        assert_eq!(out, pts);
    }

    #[test]
    fn projection_outputs_orthogonal_to_w_and_idempotent() {
        let w = UnitVector::new(array![0.3, -1.2, 0.4, 2.0]).unwrap();
        let pts = array![
            [1.0, 2.0, 3.0, 4.0],
            [-0.5, 0.25, 8.0, -3.5],
            [0.0, 0.0, 0.0, 0.0]
        ];
        let once = project_along(&pts.view(), &w).unwrap();
        for row in once.rows() {
            assert!(row.dot(w.coords()).abs() < 1e-10);
        }
        let twice = project_along(&once.view(), &w).unwrap();
        for (a, b) in once.iter().zip(twice.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn projection_commutes_with_mean() {
        let w = UnitVector::new(array![2.0, 1.0]).unwrap();
        let pts = array![[1.0, 5.0], [3.0, -2.0], [0.5, 0.5]];
        let projected = project_along(&pts.view(), &w).unwrap();
        let mean_then = project_point(
            &pts.mean_axis(ndarray::Axis(0)).unwrap().view(),
            &w,
        );
        let then_mean = projected.mean_axis(ndarray::Axis(0)).unwrap();
        for (a, b) in mean_then.iter().zip(then_mean.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_vector_rejects_zero() {
        assert!(UnitVector::new(array![0.0, 0.0]).is_err());
        assert!(UnitVector::new(array![1e-13, 0.0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let pts = array![[1.5, -2.25], [0.0, 3.125]];
        let text = points_to_csv(&pts.view());
        let back = points_from_csv(&text).unwrap();
        assert_eq!(pts, back);
    }
}
