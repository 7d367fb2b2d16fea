//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use crate::error::{Error, Result};

pub const DEFAULT_EIG_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_SWEEPS: usize = 64;
/// Input asymmetry allowed relative to max(1, ‖A‖_F).
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Dense square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::GridMismatch(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                n,
                n
            )));
        }
        Ok(SymMatrix { n, data })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        SymMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn off_diagonal(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self.get(i, j).powi(2);
                }
            }
        }
        s.sqrt()
    }
}

/// Eigenpairs sorted by descending eigenvalue; `vectors[n]` pairs with
/// `values[n]` and the vectors are orthonormal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

pub fn jacobi_eigh(a: &SymMatrix, tol: f64) -> Result<SymEigen> {
    jacobi_eigh_with(a, tol, DEFAULT_MAX_SWEEPS)
}

/// Cyclic Jacobi: sweeps over all (p, q) pairs until the off-diagonal
/// Frobenius mass is at most `tol · ‖A‖_F`.
pub fn jacobi_eigh_with(a: &SymMatrix, tol: f64, max_sweeps: usize) -> Result<SymEigen> {
    let n = a.n;
    let norm = a.frobenius();
    let asym = a.max_asymmetry();
    if asym > SYMMETRY_TOL * norm.max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    if a.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix entry".into()));
    }

    // work on the symmetrized copy
    let mut m = a.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m.data[i * n + j] + m.data[j * n + i]);
            m.data[i * n + j] = avg;
            m.data[j * n + i] = avg;
        }
    }
    // v is stored row-major with eigenvectors as columns
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let threshold = tol * norm;
    let mut sweeps = 0;
    loop {
        let off = m.off_diagonal();
        if off <= threshold || norm == 0.0 {
            break;
        }
        if sweeps == max_sweeps {
            return Err(Error::NoConvergence { sweeps, off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m.data, &mut v, n, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(j, j).total_cmp(&m.get(i, i)).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let vectors = order
        .iter()
        .map(|&c| (0..n).map(|r| v[r * n + c]).collect())
        .collect();
    Ok(SymEigen {
        values,
        vectors,
        sweeps,
    })
}

/// One Jacobi rotation annihilating m[p][q].
fn rotate(m: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = m[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = m[p * n + p];
    let aqq = m[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.is_infinite() {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = m[r * n + p];
        let arq = m[r * n + q];
        let new_p = c * arp - s * arq;
        let new_q = s * arp + c * arq;
        m[r * n + p] = new_p;
        m[p * n + r] = new_p;
        m[r * n + q] = new_q;
        m[q * n + r] = new_q;
    }
    m[p * n + p] = app - t * apq;
    m[q * n + q] = aqq + t * apq;
    m[p * n + q] = 0.0;
    m[q * n + p] = 0.0;

    for r in 0..n {
        let vrp = v[r * n + p];
        let vrq = v[r * n + q];
        v[r * n + p] = c * vrp - s * vrq;
        v[r * n + q] = s * vrp + c * vrq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(a: &SymMatrix, e: &SymEigen) -> f64 {
        e.values
            .iter()
            .zip(&e.vectors)
            .map(|(l, x)| {
                a.mul_vec(x)
                    .iter()
                    .zip(x)
                    .map(|(ax, xi)| (ax - l * xi).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn diagonal() {
        let a = SymMatrix::from_row_major(2, vec![1.0, 0.0, 0.0, 2.0]).unwrap();
        let e = jacobi_eigh(&a, DEFAULT_EIG_TOL).unwrap();
        assert_eq!(e.values, vec![2.0, 1.0]);
        assert_eq!(e.vectors, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(e.sweeps, 0);
    }

    #[test]
    fn exchange_matrix() {
        let a = SymMatrix::from_row_major(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let e = jacobi_eigh(&a, DEFAULT_EIG_TOL).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-15);
        assert!((e.values[1] + 1.0).abs() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = &e.vectors[0];
        let v1 = &e.vectors[1];
        assert!((v0[0].abs() - h).abs() < 1e-15 && (v0[0] - v0[1]).abs() < 1e-15);
        assert!((v1[0].abs() - h).abs() < 1e-15 && (v1[0] + v1[1]).abs() < 1e-15);
    }

    #[test]
    fn zero_and_empty() {
        let e = jacobi_eigh(&SymMatrix::zeros(3), DEFAULT_EIG_TOL).unwrap();
        assert_eq!(e.values, vec![0.0; 3]);
        let e = jacobi_eigh(&SymMatrix::zeros(0), DEFAULT_EIG_TOL).unwrap();
        assert!(e.values.is_empty());
    }

    #[test]
    fn rejects_asymmetric() {
        let a = SymMatrix::from_row_major(2, vec![1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            jacobi_eigh(&a, DEFAULT_EIG_TOL),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn no_convergence_reported() {
        let a = SymMatrix::from_fn(6, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        assert!(matches!(
            jacobi_eigh_with(&a, DEFAULT_EIG_TOL, 1),
            Err(Error::NoConvergence { sweeps: 1, .. })
        ));
    }

    #[test]
    fn hilbert_matrix_residuals() {
        let a = SymMatrix::from_fn(8, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let e = jacobi_eigh(&a, DEFAULT_EIG_TOL).unwrap();
        assert!(residual(&a, &e) < 1e-12);
        assert!((e.values.iter().sum::<f64>() - a.trace()).abs() < 1e-13);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }
}
