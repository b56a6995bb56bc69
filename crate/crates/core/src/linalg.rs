//! Small dense linear-algebra kernels: symmetric eigendecomposition (cyclic
//! Jacobi), singular values via the Gram matrix, and orthonormal bases.
//!
//! Everything here is deterministic and allocation-simple; the matrices this
//! toolkit touches are at most a few hundred columns wide.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Eigendecomposition of a real symmetric matrix.
///
/// Eigenvalues are sorted in descending order; `vectors` holds the matching
/// eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

/// Cyclic Jacobi rotation method for symmetric matrices.
///
/// Converges quadratically; 20 sweeps is far more than needed for the
/// dimensions used here (d <= ~300).
pub fn sym_eigen(matrix: &ArrayView2<f64>) -> Result<SymEigen> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: matrix.ncols(),
        });
    }
    let mut a = matrix.to_owned();
    let mut v = Array2::<f64>::eye(n);

    let max_sweeps = 30;
    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[[p, q]] * a[[p, q]];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + frobenius(&a.view())) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[[p, p]];
                let aqq = a[[q, q]];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[j, j]].partial_cmp(&a[[i, i]]).unwrap());

    let values = Array1::from_iter(order.iter().map(|&i| a[[i, i]]));
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&v.column(src));
    }
    Ok(SymEigen { values, vectors })
}

fn frobenius(a: &ArrayView2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Singular values of an arbitrary n x d matrix, descending.
///
/// Computed as square roots of the eigenvalues of the d x d Gram matrix;
/// adequate for the rank checks this crate performs.
pub fn singular_values(matrix: &ArrayView2<f64>) -> Result<Array1<f64>> {
    let gram = matrix.t().dot(matrix);
    let eig = sym_eigen(&gram.view())?;
    Ok(eig.values.mapv(|v| v.max(0.0).sqrt()))
}

/// Numerical rank with a tolerance relative to the largest singular value.
pub fn rank(matrix: &ArrayView2<f64>) -> Result<usize> {
    let sv = singular_values(matrix)?;
    let top = sv.iter().cloned().fold(0.0_f64, f64::max);
    if top == 0.0 {
        return Ok(0);
    }
    let tol = top * 1e-9 * (matrix.nrows().max(matrix.ncols()) as f64);
    Ok(sv.iter().filter(|&&s| s > tol).count())
}

/// Covariance matrix of row-point data (population normalization, 1/n).
pub fn covariance(points: &ArrayView2<f64>) -> Array2<f64> {
    let n = points.nrows().max(1) as f64;
    let mean = points.mean_axis(Axis(0)).expect("non-empty");
    let centered = points - &mean;
    centered.t().dot(&centered) / n
}

/// Orthonormal basis of the hyperplane orthogonal to `w` (which must be unit).
///
/// Returns a d x (d-1) matrix whose columns span the complement; used to
/// re-express projected point sets in d-1 coordinates.
pub fn orthonormal_complement(w: &Array1<f64>) -> Array2<f64> {
    let d = w.len();
    let mut basis: Vec<Array1<f64>> = Vec::with_capacity(d - 1);
    for i in 0..d {
        let mut e = Array1::<f64>::zeros(d);
        e[i] = 1.0;
        // Remove the w component, then Gram-Schmidt against accepted columns.
        let mut u = &e - &(w * w.dot(&e));
        for b in &basis {
            let c = b.dot(&u);
            u = &u - &(b * c);
        }
        let norm = u.dot(&u).sqrt();
        if norm > 1e-8 {
            basis.push(u / norm);
        }
        if basis.len() == d - 1 {
            break;
        }
    }
    let mut out = Array2::<f64>::zeros((d, basis.len()));
    for (j, b) in basis.iter().enumerate() {
        out.column_mut(j).assign(b);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eigen_of_diagonal() {
        let a = array![[3.0, 0.0], [0.0, 1.0]];
        let e = sym_eigen(&a.view()).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        // A = V diag(values) V^T must reproduce the input.
        let a = array![
            [4.0, 1.0, -2.0],
            [1.0, 2.0, 0.5],
            [-2.0, 0.5, 3.0]
        ];
        let e = sym_eigen(&a.view()).unwrap();
        let lam = Array2::from_diag(&e.values);
        let rec = e.vectors.dot(&lam).dot(&e.vectors.t());
        for (x, y) in a.iter().zip(rec.iter()) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn eigen_2x2_analytic() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1.
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let e = sym_eigen(&a.view()).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        let v0 = e.vectors.column(0);
        assert!((v0[0].abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn rank_of_rank_one_matrix() {
        let u = array![1.0, 2.0, 3.0];
        let mut m = Array2::<f64>::zeros((5, 3));
        for i in 0..5 {
            for j in 0..3 {
                m[[i, j]] = (i as f64 + 1.0) * u[j];
            }
        }
        assert_eq!(rank(&m.view()).unwrap(), 1);
    }

    #[test]
    fn complement_basis_is_orthonormal() {
        let w = array![0.6, 0.8, 0.0];
        let b = orthonormal_complement(&w);
        assert_eq!(b.ncols(), 2);
        for j in 0..2 {
            let col = b.column(j).to_owned();
            assert!(w.dot(&col).abs() < 1e-12);
            assert!((col.dot(&col) - 1.0).abs() < 1e-12);
        }
        let c0 = b.column(0).to_owned();
        let c1 = b.column(1).to_owned();
        assert!(c0.dot(&c1).abs() < 1e-12);
    }
}
