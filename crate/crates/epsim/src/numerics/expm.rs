//! Matrix exponential by scaling-and-squaring with a truncated Taylor series,
//! and Schroedinger-picture propagation exp(-i M t) v.

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::{Error, Result};

/// exp(A) for small dense complex A.
pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.check_finite("expm input")?;
    let n = a.dim();
    let norm = a.one_norm();
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.scale(Complex64::new(1.0 / 2f64.powi(s as i32), 0.0));

    let mut result = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=30u32 {
        term = term.matmul(&scaled).scale(Complex64::new(1.0 / k as f64, 0.0));
        result = result.add(&term);
        if term.max_abs() < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        result = result.matmul(&result);
    }
    Ok(result)
}

/// Evolve v under dpsi/dt = -i M psi for time t >= 0 (M in rad/s, t in s).
pub fn propagate(m: &ComplexMatrix, v: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    m.check_finite("propagate matrix")?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidInput(format!("time must be finite and >= 0, got {t}")));
    }
    if v.len() != m.dim() {
        return Err(Error::Dimension(format!(
            "state length {} does not match matrix dimension {}",
            v.len(),
            m.dim()
        )));
    }
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("propagate state".into()));
    }
    let u = expm(&m.scale(Complex64::new(0.0, -t)))?;
    Ok(u.matvec(v))
}
