//! Monic complex polynomials: characteristic polynomials, simultaneous
//! root iteration with multiplicity clustering, and the quartic discriminant.

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::{Error, Result};

const EPS: f64 = f64::EPSILON;

/// Polynomial with coefficients in degree-descending order.
#[derive(Debug, Clone)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().all(|c| c.norm() == 0.0) {
            return Err(Error::InvalidInput("zero polynomial".into()));
        }
        if coeffs[0].norm() == 0.0 {
            return Err(Error::InvalidInput(
                "leading coefficient must be nonzero".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn monic(&self) -> Self {
        let lead = self.coeffs[0];
        Self {
            coeffs: self.coeffs.iter().map(|c| c / lead).collect(),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        let d = self.degree();
        let coeffs: Vec<Complex64> = self
            .coeffs
            .iter()
            .take(d)
            .enumerate()
            .map(|(k, &c)| c * ((d - k) as f64))
            .collect();
        Self { coeffs }
    }
}

/// Characteristic polynomial det(lambda I - M) by the Faddeev-LeVerrier
/// recurrence; exact up to rounding for n <= 8.
pub fn char_poly(m: &ComplexMatrix) -> Result<Polynomial> {
    m.check_finite("char_poly input")?;
    let n = m.dim();
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    let mut aux = ComplexMatrix::identity(n);
    for k in 1..=n {
        let mk = m.matmul(&aux);
        let ck = -mk.trace() / (k as f64);
        coeffs.push(ck);
        aux = mk;
        for d in 0..n {
            aux[(d, d)] += ck;
        }
    }
    Polynomial::new(coeffs)
}

/// One root cluster: centroid, multiplicity and spread of the members.
#[derive(Debug, Clone)]
pub struct RootCluster {
    pub value: Complex64,
    pub multiplicity: usize,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct PolyRoots {
    /// All degree-many roots, canonical order (descending re, then im).
    pub roots: Vec<Complex64>,
    pub clusters: Vec<RootCluster>,
}

/// Default clustering radius: stagnation scale of an m-fold root under
/// double-precision coefficient noise, with a safety factor.
pub fn default_root_cluster_tol(degree: usize, scale: f64) -> f64 {
    let base = (1e3 * EPS).powf(1.0 / degree.max(1) as f64);
    (base * scale.max(1.0)).max(1e-12)
}

/// Find all roots by Durand-Kerner simultaneous iteration with Newton
/// polishing of well-separated roots, then cluster near-coincident roots.
pub fn poly_roots(p: &Polynomial, cluster_tol: Option<f64>) -> Result<PolyRoots> {
    if p.degree() == 0 {
        return Err(Error::InvalidInput("degree must be >= 1".into()));
    }
    let p = p.monic();
    let n = p.degree();
    let radius = 1.0 + p.coeffs().iter().skip(1).map(|c| c.norm()).fold(0.0, f64::max);

    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64) + 0.3;
            radius * 0.7 * Complex64::new(angle.cos(), angle.sin())
        })
        .collect();

    for _ in 0..600 {
        let mut max_step = 0.0f64;
        for k in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != k {
                    denom *= z[k] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                // coincident iterates; nudge
                z[k] += Complex64::new(1e-8 * radius, 1e-8 * radius);
                continue;
            }
            let step = p.eval(z[k]) / denom;
            z[k] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-15 * radius {
            break;
        }
    }

    // Newton polish roots that are well separated from the rest.
    let dp = p.derivative();
    for k in 0..n {
        let min_dist = (0..n)
            .filter(|&j| j != k)
            .map(|j| (z[k] - z[j]).norm())
            .fold(f64::INFINITY, f64::min);
        if min_dist < 1e-4 * radius {
            continue;
        }
        for _ in 0..8 {
            let d = dp.eval(z[k]);
            if d.norm() == 0.0 {
                break;
            }
            let step = p.eval(z[k]) / d;
            if step.norm() > 0.5 * min_dist {
                break;
            }
            z[k] -= step;
            if step.norm() < 1e-16 * radius {
                break;
            }
        }
    }

    let scale = z.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let tol = cluster_tol.unwrap_or_else(|| default_root_cluster_tol(n, scale));
    let clusters = cluster_points(&z, tol);

    // Snap clustered iterates to their centroid. Near an m-fold root the
    // individual iterates stagnate at radius ~ eps^(1/m), but their mean
    // cancels the stagnation pattern and recovers the root to ~ eps.
    for cluster in &clusters {
        if cluster.multiplicity > 1 {
            for r in &mut z {
                if (*r - cluster.value).norm() <= cluster.radius + tol {
                    *r = cluster.value;
                }
            }
        }
    }

    let mut roots = z;
    canonical_sort(&mut roots);
    Ok(PolyRoots { roots, clusters })
}

/// Union-find clustering of points with linkage radius `tol`.
pub fn cluster_points(points: &[Complex64], tol: f64) -> Vec<RootCluster> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if (points[i] - points[j]).norm() <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_of[r] {
            Some(g) => groups[g].push(i),
            None => {
                root_of[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    let mut clusters: Vec<RootCluster> = groups
        .iter()
        .map(|g| {
            let centroid = g.iter().map(|&i| points[i]).sum::<Complex64>() / (g.len() as f64);
            let radius = g
                .iter()
                .map(|&i| (points[i] - centroid).norm())
                .fold(0.0, f64::max);
            RootCluster {
                value: centroid,
                multiplicity: g.len(),
                radius,
            }
        })
        .collect();
    clusters.sort_by(|a, b| {
        b.value
            .re
            .partial_cmp(&a.value.re)
            .unwrap()
            .then(b.value.im.partial_cmp(&a.value.im).unwrap())
    });
    clusters
}

/// Canonical eigenvalue/root order: descending real part, ties broken by
/// descending imaginary part.
pub fn canonical_sort(values: &mut [Complex64]) {
    // real-part ties are resolved with a scale-relative tolerance so that
    // rounding noise of order eps cannot scramble purely imaginary spectra
    let scale = values.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = 1e-9 * scale;
    values.sort_by(|a, b| {
        let re_order = if (a.re - b.re).abs() <= tol {
            std::cmp::Ordering::Equal
        } else {
            b.re.partial_cmp(&a.re).unwrap()
        };
        re_order.then(b.im.partial_cmp(&a.im).unwrap())
    });
}

/// Discriminant of a degree-4 polynomial (resultant of p and p' up to sign,
/// normalized to the monic form). Zero iff p has a repeated root. For a
/// biquadratic z^4 + P z^2 + Q this equals 16 Q (P^2 - 4Q)^2.
pub fn quartic_discriminant(p: &Polynomial) -> Result<Complex64> {
    if p.degree() != 4 {
        return Err(Error::InvalidInput(format!(
            "quartic_discriminant requires degree 4, got {}",
            p.degree()
        )));
    }
    let m = p.monic();
    let b = m.coeffs()[1];
    let c = m.coeffs()[2];
    let d = m.coeffs()[3];
    let e = m.coeffs()[4];

    let b2 = b * b;
    let b3 = b2 * b;
    let b4 = b3 * b;
    let c2 = c * c;
    let c3 = c2 * c;
    let c4 = c3 * c;
    let d2 = d * d;
    let d3 = d2 * d;
    let d4 = d3 * d;
    let e2 = e * e;
    let e3 = e2 * e;

    Ok(256.0 * e3 - 192.0 * b * d * e2 - 128.0 * c2 * e2 + 144.0 * c * d2 * e - 27.0 * d4
        + 144.0 * b2 * c * e2
        - 6.0 * b2 * d2 * e
        - 80.0 * b * c2 * d * e
        + 18.0 * b * c * d3
        + 16.0 * c4 * e
        - 4.0 * c3 * d2
        - 27.0 * b4 * e2
        + 18.0 * b3 * c * d * e
        - 4.0 * b3 * d3
        - 4.0 * b2 * c3 * e
        + b2 * c2 * d2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real_poly(coeffs: &[f64]) -> Polynomial {
        Polynomial::new(coeffs.iter().map(|&x| c(x, 0.0)).collect()).unwrap()
    }

    #[test]
    fn char_poly_identity_2x2() {
        // (lambda - 1)^2 = lambda^2 - 2 lambda + 1
        let p = char_poly(&ComplexMatrix::identity(2)).unwrap();
        let want = [1.0, -2.0, 1.0];
        for (got, want) in p.coeffs().iter().zip(want) {
            assert!((got - c(want, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn roots_of_z2_plus_1() {
        let p = real_poly(&[1.0, 0.0, 1.0]);
        let r = poly_roots(&p, None).unwrap();
        assert_eq!(r.roots.len(), 2);
        assert!((r.roots[0] - c(0.0, 1.0)).norm() < 1e-12);
        assert!((r.roots[1] - c(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn roots_of_biquadratic() {
        // roots +-1, +-1/3
        let p = real_poly(&[1.0, 0.0, -10.0 / 9.0, 0.0, 1.0 / 9.0]);
        let r = poly_roots(&p, None).unwrap();
        let want = [1.0, 1.0 / 3.0, -1.0 / 3.0, -1.0];
        for (got, want) in r.roots.iter().zip(want) {
            assert!((got - c(want, 0.0)).norm() < 1e-10, "{got} vs {want}");
        }
        for root in &r.roots {
            assert!(p.eval(*root).norm() < 1e-9);
        }
    }

    #[test]
    fn quadruple_root_clusters() {
        let p = real_poly(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        let r = poly_roots(&p, None).unwrap();
        assert_eq!(r.clusters.len(), 1);
        assert_eq!(r.clusters[0].multiplicity, 4);
        assert!(r.clusters[0].value.norm() < 1e-3);
    }

    #[test]
    fn zero_polynomial_rejected() {
        assert!(Polynomial::new(vec![c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn discriminant_of_biquadratic() {
        // P = -10/9, Q = 1/9: 16 Q (P^2 - 4Q)^2 = (16/9)(64/81)^2
        let p = real_poly(&[1.0, 0.0, -10.0 / 9.0, 0.0, 1.0 / 9.0]);
        let d = quartic_discriminant(&p).unwrap();
        let want = 16.0 / 9.0 * (64.0f64 / 81.0).powi(2);
        assert!((d - c(want, 0.0)).norm() < 1e-12 * want);
        assert!(d.re > 0.0);
    }

    #[test]
    fn discriminant_of_quadruple_root_is_zero() {
        let p = real_poly(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(quartic_discriminant(&p).unwrap().norm() < 1e-15);
    }

    #[test]
    fn discriminant_rejects_wrong_degree() {
        let p = real_poly(&[1.0, 0.0, 1.0]);
        assert!(quartic_discriminant(&p).is_err());
    }
}
