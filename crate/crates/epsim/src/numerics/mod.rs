//! Self-contained dense complex linear algebra and polynomial machinery for
//! matrices of dimension n <= 8. All operations are pure functions.

mod eigen;
mod expm;
mod matrix;
mod poly;

pub use eigen::{
    eigendecompose, eigenvalue_clusters, hermitian_eigenvalues, nullity, singular_values,
    Eigensystem,
};
pub use expm::{expm, propagate};
pub use matrix::{vec_norm, vec_normalize, ComplexMatrix};
pub use poly::{
    canonical_sort, char_poly, cluster_points, default_root_cluster_tol, poly_roots,
    quartic_discriminant, Polynomial, PolyRoots, RootCluster,
};

/// Default absolute tolerance for treating eigenvalues as a repeated cluster,
/// scaled by the dominant eigenvalue magnitude.
pub fn default_cluster_tol(eigenvalue_scale: f64) -> f64 {
    1e-6 * eigenvalue_scale.max(1.0)
}
