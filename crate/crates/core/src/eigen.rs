//! Dense symmetric eigendecomposition by cyclic Jacobi rotations.

use crate::tensor::Tensor2;

/// Result of [`jacobi_eigen`]: ascending eigenvalues and the matching
/// orthonormal eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Tensor2,
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoConvergence {
    pub sweeps: usize,
    pub off_diagonal_norm: f64,
}

pub const MAX_SWEEPS: usize = 100;

/// Diagonalizes a symmetric matrix. Only the upper triangle is read.
pub fn jacobi_eigen(a: &Tensor2, max_sweeps: usize) -> Result<SymmetricEigen, NoConvergence> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "matrix must be square");
    let mut m: Vec<f64> = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = a.get(i, j);
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let off = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += m[i * n + j] * m[i * n + j];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off_norm = off(&m);
        if off_norm <= 1e-14 * scale {
            break;
        }
        if sweeps == max_sweeps {
            return Err(NoConvergence {
                sweeps,
                off_diagonal_norm: off_norm,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = Tensor2::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors.set(k, col, v[k * n + src]);
        }
    }
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}
