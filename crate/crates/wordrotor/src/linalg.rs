//! Dense symmetric eigendecomposition for small matrices (embedding
//! dimension is at most a few hundred), via the cyclic Jacobi method.

use ndarray::{Array1, Array2};

pub(crate) struct SymmetricEigen {
    /// Eigenvalues in descending order.
    pub values: Array1<f64>,
    /// Eigenvectors as columns, parallel to `values`.
    pub vectors: Array2<f64>,
}

/// Eigendecomposition of a symmetric matrix. Sweeps Jacobi rotations until
/// the off-diagonal mass is negligible relative to the matrix scale; for
/// symmetric input convergence is quadratic and a handful of sweeps suffice.
pub(crate) fn symmetric_eigen(m: &Array2<f64>) -> SymmetricEigen {
    let d = m.nrows();
    assert_eq!(d, m.ncols(), "eigendecomposition needs a square matrix");
    let mut a = m.clone();
    let mut v: Array2<f64> = Array2::eye(d);

    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-15 * scale.max(f64::MIN_POSITIVE);
    const MAX_SWEEPS: usize = 64;

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= tol {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }

    sorted_descending(a, v)
}

fn rotate(a: &mut Array2<f64>, v: &mut Array2<f64>, p: usize, q: usize, c: f64, s: f64) {
    let d = a.nrows();
    for k in 0..d {
        let akp = a[[k, p]];
        let akq = a[[k, q]];
        a[[k, p]] = c * akp - s * akq;
        a[[k, q]] = s * akp + c * akq;
    }
    for k in 0..d {
        let apk = a[[p, k]];
        let aqk = a[[q, k]];
        a[[p, k]] = c * apk - s * aqk;
        a[[q, k]] = s * apk + c * aqk;
    }
    for k in 0..d {
        let vkp = v[[k, p]];
        let vkq = v[[k, q]];
        v[[k, p]] = c * vkp - s * vkq;
        v[[k, q]] = s * vkp + c * vkq;
    }
}

fn off_diagonal_norm(a: &Array2<f64>) -> f64 {
    let d = a.nrows();
    let mut sum = 0.0;
    for p in 0..d {
        for q in (p + 1)..d {
            sum += 2.0 * a[[p, q]] * a[[p, q]];
        }
    }
    sum.sqrt()
}

fn sorted_descending(a: Array2<f64>, v: Array2<f64>) -> SymmetricEigen {
    let d = a.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        a[[j, j]]
            .partial_cmp(&a[[i, i]])
            .expect("finite eigenvalues")
    });
    let mut values = Array1::zeros(d);
    let mut vectors = Array2::zeros((d, d));
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = a[[src, src]];
        vectors.column_mut(dst).assign(&v.column(src));
    }
    SymmetricEigen { values, vectors }
}
