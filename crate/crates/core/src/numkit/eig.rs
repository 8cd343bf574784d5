use super::Matrix;
use crate::{Error, Result};

const MAX_SWEEPS: usize = 100;
const OFF_TOL: f64 = 1e-12;

/// Spectral decomposition `A = V · diag(λ) · Vᵀ` of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEig {
    /// Eigenvalues sorted non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in eigenvalue order.
    pub eigenvectors: Matrix,
}

impl SymEig {
    /// `V · diag(λ) · Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for r in 0..n {
            for (c, lam) in self.eigenvalues.iter().enumerate() {
                scaled[(r, c)] *= lam;
            }
        }
        scaled.matmul_nt(&self.eigenvectors).expect("square factors")
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// The input is symmetrized as `(A + Aᵀ)/2`; asymmetry above `1e-9` (relative
/// to the largest entry) is rejected. Sweeps stop once the off-diagonal
/// Frobenius norm falls below `1e-12 · max(1, ‖A‖_F)`, with a cap of 100
/// sweeps.
pub fn sym_eig(a: &Matrix) -> Result<SymEig> {
    if !a.is_square() {
        return Err(Error::contract(format!("sym_eig needs a square matrix, got {}x{}", a.rows(), a.cols())));
    }
    if !a.is_finite() {
        return Err(Error::contract("sym_eig input has non-finite entries"));
    }
    let n = a.rows();
    let scale = a.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let asym = a.max_abs_diff(&a.transpose());
    if asym > 1e-9 * scale {
        return Err(Error::contract(format!("sym_eig input is not symmetric (max |A - Aᵀ| = {asym:e})")));
    }

    let mut m = a.clone();
    m.symmetrize();
    let mut v = Matrix::identity(n);
    let tol = OFF_TOL * m.frobenius_norm().max(1.0);

    let mut converged = off_norm(&m) <= tol;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off_norm: off_norm(&m) });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
        converged = off_norm(&m) <= tol;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors[(r, dst)] = v[(r, src)];
        }
    }
    Ok(SymEig { eigenvalues, eigenvectors })
}

fn off_norm(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

// Annihilates m[p][q] with a plane rotation, accumulating it into v.
fn rotate(m: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = m[(p, p)];
    let aqq = m[(q, q)];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = m.rows();

    m[(p, p)] = app - t * apq;
    m[(q, q)] = aqq + t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        m[(k, p)] = new_kp;
        m[(p, k)] = new_kp;
        m[(k, q)] = new_kq;
        m[(q, k)] = new_kq;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{standard_normal, Rng};

    fn random_symmetric(rng: &mut Rng, n: usize) -> Matrix {
        let mut a = standard_normal(rng, n, n);
        a.symmetrize();
        a
    }

    #[test]
    fn diagonal_input() {
        let e = sym_eig(&Matrix::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn two_by_two() {
        // characteristic polynomial (2 - λ)² - 1 = 0 ⇒ λ ∈ {3, 1}
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = sym_eig(&a).unwrap();
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let mut rng = Rng::new(10);
        for n in [1, 2, 5, 10, 30] {
            let a = random_symmetric(&mut rng, n);
            let e = sym_eig(&a).unwrap();
            assert!(e.reconstruct().max_abs_diff(&a) < 1e-8);
            let vtv = e.eigenvectors.matmul_tn(&e.eigenvectors).unwrap();
            assert!(vtv.max_abs_diff(&Matrix::identity(n)) < 1e-8);
            assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            let sum: f64 = e.eigenvalues.iter().sum();
            assert!((sum - a.trace()).abs() <= 1e-8 * a.trace().abs().max(1.0));
        }
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(sym_eig(&Matrix::zeros(2, 3)), Err(Error::Contract(_))));
    }

    #[test]
    fn asymmetric_rejected() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(sym_eig(&a).is_err());
    }
}
