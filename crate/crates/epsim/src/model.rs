//! Construction of the programmable non-Hermitian Hamiltonian family from
//! physical parameters: normalized spin operators, the general 4-level
//! tridiagonal form, the globally shifted effective form, and the
//! PT-symmetric family g (J X + i gamma Z) in any dimension 2S+1.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numerics::ComplexMatrix;
use crate::{Error, Result};

/// Dissipation pattern used throughout: gamma * (1, 1/3, -1/3, -1).
pub const GAMMA_PATTERN: [f64; 4] = [1.0, 1.0 / 3.0, -1.0 / 3.0, -1.0];

/// Normalized spin operators X and Z for spin S in dimension 2S+1.
/// Z is diagonal with entries m/S; X is the normalized ladder symmetric form.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub two_s: u32,
    pub dim: usize,
    pub x: ComplexMatrix,
    pub z: ComplexMatrix,
}

/// Build the normalized spin operators for half-integer spin S = two_s / 2.
pub fn spin_operators(two_s: u32) -> Result<SpinOperators> {
    if two_s == 0 {
        return Err(Error::InvalidInput(
            "spin must be a positive half-integer (2S >= 1)".into(),
        ));
    }
    let s = two_s as f64 / 2.0;
    let dim = two_s as usize + 1;
    // m runs S, S-1, ..., -S with the row index
    let m_of = |k: usize| s - k as f64;
    let z = ComplexMatrix::from_fn(dim, |i, j| {
        if i == j {
            Complex64::new(m_of(i) / s, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let x = ComplexMatrix::from_fn(dim, |i, j| {
        if j == i + 1 || i == j + 1 {
            let k = i.min(j);
            let val = (s * (s + 1.0) - m_of(k) * m_of(k + 1)).sqrt() / (2.0 * s);
            Complex64::new(val, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(SpinOperators { two_s, dim, x, z })
}

/// Dissipation parameters: either four explicit unitless rates or the
/// pattern form gamma * (1, 1/3, -1/3, -1) with a single scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaSpec {
    Explicit([f64; 4]),
    Pattern { scale: f64 },
}

impl GammaSpec {
    pub fn values(&self) -> [f64; 4] {
        match self {
            GammaSpec::Explicit(v) => *v,
            GammaSpec::Pattern { scale } => {
                let mut out = GAMMA_PATTERN;
                for v in &mut out {
                    *v *= scale;
                }
                out
            }
        }
    }

    pub fn pattern_scale(&self) -> Option<f64> {
        match self {
            GammaSpec::Pattern { scale } => Some(*scale),
            GammaSpec::Explicit(_) => None,
        }
    }
}

/// Full parameterization of the 4-level Hamiltonian family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    /// Overall strength, angular frequency (rad/s).
    pub g: f64,
    /// Unitless coherent strengths (J1, J2, J3).
    pub j: [f64; 3],
    pub gamma: GammaSpec,
    /// Unitless global dissipation shift parameter.
    pub alpha: f64,
}

impl HamiltonianSpec {
    pub fn pattern(g: f64, j: [f64; 3], gamma_scale: f64, alpha: f64) -> Self {
        Self {
            g,
            j,
            gamma: GammaSpec::Pattern { scale: gamma_scale },
            alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) || !self.g.is_finite() {
            return Err(Error::InvalidSpec(format!("g must be > 0 and finite, got {}", self.g)));
        }
        let finite = self.j.iter().all(|x| x.is_finite())
            && self.gamma.values().iter().all(|x| x.is_finite())
            && self.alpha.is_finite();
        if !finite {
            return Err(Error::InvalidSpec("non-finite spec component".into()));
        }
        Ok(())
    }
}

/// The general 4x4 form: diagonal i g gamma_k, off-diagonal couplings
/// g (J1/sqrt(3), 2 J2/3, J3/sqrt(3)) on the adjacent bands.
pub fn build_general(spec: &HamiltonianSpec) -> Result<ComplexMatrix> {
    spec.validate()?;
    let g = spec.g;
    let gamma = spec.gamma.values();
    let sqrt3 = 3f64.sqrt();
    let couplings = [
        g * spec.j[0] / sqrt3,
        g * 2.0 * spec.j[1] / 3.0,
        g * spec.j[2] / sqrt3,
    ];
    let mut m = ComplexMatrix::zeros(4);
    for k in 0..4 {
        m[(k, k)] = Complex64::new(0.0, g * gamma[k]);
    }
    for k in 0..3 {
        m[(k, k + 1)] = Complex64::new(couplings[k], 0.0);
        m[(k + 1, k)] = Complex64::new(couplings[k], 0.0);
    }
    Ok(m)
}

/// The effective fitting model: build_general(spec) - i alpha g gamma I.
/// Requires the pattern form (a single scalar gamma defines the shift).
pub fn build_effective(spec: &HamiltonianSpec) -> Result<ComplexMatrix> {
    let scale = spec.gamma.pattern_scale().ok_or_else(|| {
        Error::InvalidSpec("effective Hamiltonian requires pattern-form gamma with a scalar".into())
    })?;
    let h = build_general(spec)?;
    Ok(h.sub_scaled_identity(Complex64::new(0.0, spec.alpha * spec.g * scale)))
}

/// The PT-symmetric family g (J X + i gamma Z) in dimension 2S+1.
pub fn build_pt_epn(two_s: u32, j: f64, gamma: f64, g: f64) -> Result<ComplexMatrix> {
    let ops = spin_operators(two_s)?;
    let jx = ops.x.scale(Complex64::new(g * j, 0.0));
    let igz = ops.z.scale(Complex64::new(0.0, g * gamma));
    Ok(jx.add(&igz))
}
