//! Root-based eigendecomposition for small complex matrices, plus Hermitian
//! Jacobi eigenvalues for Gram/singular-value diagnostics.
//!
//! The primary eigenvalue path is characteristic polynomial + simultaneous
//! root iteration; it degrades gracefully near defective (exceptional) points
//! where iterative vector-based solvers stall, and its error is visible in the
//! reported residuals.

use num_complex::Complex64;

use super::matrix::{vec_norm, vec_normalize, ComplexMatrix};
use super::poly::{canonical_sort, char_poly, cluster_points, poly_roots, RootCluster};
use crate::Result;

#[derive(Debug, Clone)]
pub struct Eigensystem {
    /// Canonical order: descending real part, ties by descending imaginary part.
    pub eigenvalues: Vec<Complex64>,
    /// Unit-norm right eigenvectors, one per eigenvalue (columns may be nearly
    /// linearly dependent close to an exceptional point).
    pub eigenvectors: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
}

impl Eigensystem {
    /// Condition number of the eigenvector Gram matrix V^H V; large values
    /// flag near-defective spectra.
    pub fn gram_condition(&self) -> f64 {
        let n = self.eigenvalues.len();
        let gram = ComplexMatrix::from_fn(n, |i, j| {
            self.eigenvectors[i]
                .iter()
                .zip(&self.eigenvectors[j])
                .map(|(a, b)| a.conj() * b)
                .sum()
        });
        let eigs = hermitian_eigenvalues(&gram);
        let max = eigs.iter().cloned().fold(0.0, f64::max);
        let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0);
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    pub fn min_gap(&self) -> f64 {
        let n = self.eigenvalues.len();
        let mut gap = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                gap = gap.min((self.eigenvalues[i] - self.eigenvalues[j]).norm());
            }
        }
        gap
    }
}

pub fn eigendecompose(m: &ComplexMatrix) -> Result<Eigensystem> {
    m.check_finite("eigendecompose input")?;
    let n = m.dim();
    let p = char_poly(m)?;
    let roots = poly_roots(&p, None)?;
    let mut eigenvalues = roots.roots;
    canonical_sort(&mut eigenvalues);

    let scale = m.max_abs().max(1.0);
    let mut eigenvectors = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for (k, &lambda) in eigenvalues.iter().enumerate() {
        let shifted = m.sub_scaled_identity(lambda);
        // deterministic start vector, varied per eigenvalue index
        let mut v: Vec<Complex64> = (0..n)
            .map(|i| {
                let phase = 0.7 * (i as f64 + 1.0) + 1.3 * (k as f64);
                Complex64::new(phase.cos(), phase.sin())
            })
            .collect();
        vec_normalize(&mut v);
        for _ in 0..3 {
            v = shifted.solve_regularized(&v);
            vec_normalize(&mut v);
        }
        let mv = m.matvec(&v);
        let residual = vec_norm(
            &mv.iter()
                .zip(&v)
                .map(|(a, b)| a - lambda * b)
                .collect::<Vec<_>>(),
        ) / scale.max(lambda.norm());
        eigenvectors.push(v);
        residuals.push(residual);
    }
    Ok(Eigensystem {
        eigenvalues,
        eigenvectors,
        residuals,
    })
}

/// Eigenvalue clusters of a matrix at absolute tolerance `tol`.
pub fn eigenvalue_clusters(eigs: &Eigensystem, tol: f64) -> Vec<RootCluster> {
    cluster_points(&eigs.eigenvalues, tol)
}

/// Eigenvalues of a Hermitian matrix by the cyclic complex Jacobi method.
/// Input is assumed Hermitian; only the given entries' Hermitian part is used.
pub fn hermitian_eigenvalues(g: &ComplexMatrix) -> Vec<f64> {
    let n = g.dim();
    let mut a = ComplexMatrix::from_fn(n, |i, j| 0.5 * (g[(i, j)] + g[(j, i)].conj()));
    let scale = a.max_abs().max(1e-300);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off < 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.norm() < 1e-18 * scale {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let phase = apq / apq.norm();
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // columns: col_p' = c*col_p - s*conj(phase)*col_q, etc.
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = c * aip - s * phase.conj() * aiq;
                    a[(i, q)] = s * phase * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = c * apj - s * phase * aqj;
                    a[(q, j)] = s * phase.conj() * apj + c * aqj;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|k| a[(k, k)].re).collect();
    eigs.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eigs
}

/// Singular values in descending order, via Hermitian eigenvalues of A^H A.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    let gram = a.adjoint().matmul(a);
    hermitian_eigenvalues(&gram)
        .into_iter()
        .map(|x| x.max(0.0).sqrt())
        .collect()
}

/// dim ker(A) with singular values below `rel_tol * sigma_max` counted zero.
pub fn nullity(a: &ComplexMatrix, rel_tol: f64) -> usize {
    let sv = singular_values(a);
    let smax = sv.first().cloned().unwrap_or(0.0);
    if smax == 0.0 {
        return a.dim();
    }
    sv.iter().filter(|&&s| s < rel_tol * smax).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_matrix_eigensystem() {
        let d = [c(0.0, 1.0), c(0.0, 1.0 / 3.0), c(0.0, -1.0 / 3.0), c(0.0, -1.0)];
        let m = ComplexMatrix::from_fn(4, |i, j| if i == j { d[i] } else { c(0.0, 0.0) });
        let eig = eigendecompose(&m).unwrap();
        for (got, want) in eig.eigenvalues.iter().zip(d) {
            assert!((got - want).norm() < 1e-10);
        }
        for (k, v) in eig.eigenvectors.iter().enumerate() {
            // coordinate basis up to phase
            let idx = v
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
                .unwrap()
                .0;
            assert!(v[idx].norm() > 1.0 - 1e-8);
            assert!(eig.residuals[k] < 1e-10);
        }
    }

    #[test]
    fn jordan_block_is_defective() {
        let m =
            ComplexMatrix::from_flat(2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
                .unwrap();
        let eig = eigendecompose(&m).unwrap();
        for lambda in &eig.eigenvalues {
            assert!(lambda.norm() < 1e-6);
        }
        // one-dimensional eigenvector span: huge Gram condition
        assert!(eig.gram_condition() > 1e6);
        assert_eq!(nullity(&m, 1e-6), 1);
    }

    #[test]
    fn hermitian_jacobi_matches_known_spectrum() {
        // [[2, i],[-i, 2]] has eigenvalues 3 and 1
        let m =
            ComplexMatrix::from_flat(2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)])
                .unwrap();
        let eigs = hermitian_eigenvalues(&m);
        assert!((eigs[0] - 3.0).abs() < 1e-12);
        assert!((eigs[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_values_of_diag() {
        let m = ComplexMatrix::from_fn(3, |i, j| {
            if i == j {
                c([3.0, 2.0, 0.0][i], 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let sv = singular_values(&m);
        assert!((sv[0] - 3.0).abs() < 1e-12);
        assert!((sv[1] - 2.0).abs() < 1e-12);
        assert!(sv[2].abs() < 1e-12);
        assert_eq!(nullity(&m, 1e-8), 1);
    }
}
