//! Clebsch-Gordan pump rates from laser polarization and the inverse
//! polarization-design problem. The CG table is carried as exact rationals so
//! the constraint identity r1 - 3 r2 + 3 r3 - r4 = 0 is exact.

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::{Error, Result};

/// Fractional intensities (sigma+, sigma-, pi) of the pump laser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polarization {
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub pi: f64,
}

impl Polarization {
    pub fn new(sigma_plus: f64, sigma_minus: f64, pi: f64) -> Result<Self> {
        let p = Self {
            sigma_plus,
            sigma_minus,
            pi,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.sigma_plus, self.sigma_minus, self.pi];
        if parts.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidInput(
                "polarization components must be finite and >= 0".into(),
            ));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "polarization components must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.sigma_plus, self.sigma_minus, self.pi]
    }
}

/// |C|^2 table for the four system sublevels m = 5/2 ... -1/2 (rows) against
/// photon polarization q = +1, 0, -1 (columns). Exact rationals; each row
/// sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CGTable {
    pub rows: [[Rational64; 3]; 4],
}

/// Closed-form J -> J-1 squared coefficients for J = 5/2:
/// q=+1: (J-M)(J-M-1)/20, q=0: (J-M)(J+M)/10, q=-1: (J+M)(J+M-1)/20.
pub fn cg_table() -> CGTable {
    let j = Rational64::new(5, 2);
    let mut rows = [[Rational64::zero(); 3]; 4];
    for (i, two_m) in [5i64, 3, 1, -1].iter().enumerate() {
        let m = Rational64::new(*two_m, 2);
        rows[i][0] = (j - m) * (j - m - 1) / 20;
        rows[i][1] = (j - m) * (j + m) / 10;
        rows[i][2] = (j + m) * (j + m - 1) / 20;
    }
    CGTable { rows }
}

/// Four pump rates, unitless relative values, plus the constraint residual
/// r1 - 3 r2 + 3 r3 - r4 (identically zero for rates produced from the table).
#[derive(Debug, Clone, Serialize)]
pub struct RateVector {
    pub rates: [f64; 4],
    /// Exact-rational rendering of each rate (available when the polarization
    /// was exactly rational).
    pub rates_exact: Option<[String; 4]>,
    pub constraint_residual: f64,
}

impl RateVector {
    pub fn constraint_residual_of(rates: &[f64; 4]) -> f64 {
        rates[0] - 3.0 * rates[1] + 3.0 * rates[2] - rates[3]
    }
}

/// Pump rates r_i = sum_q |C|^2(m_i, q) eps_q. The polarization fields map
/// to photon q as sigma+ -> +1, pi -> 0, sigma- -> -1 (the table's column
/// order is q = +1, 0, -1).
pub fn pump_rates(eps: &Polarization) -> Result<RateVector> {
    eps.validate()?;
    let table = cg_table();
    let mut rates = [0.0f64; 4];
    let eps_arr = eps.as_array();
    let eps_q = [eps_arr[0], eps_arr[2], eps_arr[1]];
    for i in 0..4 {
        rates[i] = (0..3)
            .map(|q| table.rows[i][q].to_f64().unwrap() * eps_q[q])
            .sum();
    }
    let rates_exact = rational_polarization(eps).map(|eps_r| {
        let eps_rq = [eps_r[0], eps_r[2], eps_r[1]];
        let mut out: [String; 4] = Default::default();
        for i in 0..4 {
            let r: Rational64 = (0..3).map(|q| table.rows[i][q] * eps_rq[q]).sum();
            out[i] = r.to_string();
        }
        out
    });
    Ok(RateVector {
        constraint_residual: RateVector::constraint_residual_of(&rates),
        rates,
        rates_exact,
    })
}

/// Exact pump rates for a rational polarization (sigma+, sigma-, pi); the
/// constraint identity is exact here by construction.
pub fn pump_rates_exact(eps: [Rational64; 3]) -> [Rational64; 4] {
    let table = cg_table();
    let eps_q = [eps[0], eps[2], eps[1]];
    let mut rates = [Rational64::zero(); 4];
    for i in 0..4 {
        rates[i] = (0..3).map(|q| table.rows[i][q] * eps_q[q]).sum();
    }
    rates
}

/// Recognize float polarizations that are small-denominator rationals.
fn rational_polarization(eps: &Polarization) -> Option<[Rational64; 3]> {
    let mut out = [Rational64::zero(); 3];
    for (k, &x) in eps.as_array().iter().enumerate() {
        out[k] = small_rational(x)?;
    }
    Some(out)
}

fn small_rational(x: f64) -> Option<Rational64> {
    for den in 1..=120i64 {
        let num = (x * den as f64).round();
        if (num / den as f64 - x).abs() < 1e-12 {
            return Some(Rational64::new(num as i64, den));
        }
    }
    None
}

#[derive(Debug, Clone, Serialize)]
pub struct PolarizationSolution {
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub pi: f64,
    pub scale: f64,
    pub residual: f64,
    pub exact_feasible: bool,
}

/// Solve for the polarization (and free overall scale) whose pump rates best
/// match `target` in least squares over the simplex. Targets violating the
/// constraint identity are reported infeasible with the residual attached.
pub fn solve_polarization(target: &[f64; 4]) -> Result<PolarizationSolution> {
    if target.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidInput(
            "target rates must be finite and >= 0".into(),
        ));
    }
    let norm: f64 = target.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidInput("target rates are all zero".into()));
    }
    let constraint = RateVector::constraint_residual_of(target);
    if constraint.abs() > 1e-10 * norm.max(1.0) {
        return Err(Error::Infeasible(format!(
            "target violates the dipole constraint r1 - 3 r2 + 3 r3 - r4 = 0 \
             (residual {constraint:.6e}); no polarization can realize it"
        )));
    }

    let table = cg_table();
    let a: Vec<[f64; 3]> = (0..4)
        .map(|i| {
            let mut row = [0.0; 3];
            for q in 0..3 {
                row[q] = table.rows[i][q].to_f64().unwrap();
            }
            row
        })
        .collect();

    // Least squares A x = target over x >= 0 by active-set enumeration
    // (2^3 support patterns); deterministic tie-break prefers the solution
    // with the smallest sigma- component.
    let mut best: Option<([f64; 3], f64)> = None;
    for mask in 1u8..8 {
        let active: Vec<usize> = (0..3).filter(|q| mask & (1 << q) != 0).collect();
        if let Some(x) = nnls_on_support(&a, target, &active) {
            let residual = lsq_residual(&a, &x, target);
            let better = match &best {
                None => true,
                Some((bx, br)) => {
                    residual < br - 1e-12 * norm
                        || (residual <= br + 1e-12 * norm && x[2] < bx[2] - 1e-15)
                }
            };
            if better {
                best = Some((x, residual));
            }
        }
    }
    let (x, residual) =
        best.ok_or_else(|| Error::Infeasible("no nonnegative solution support".into()))?;
    let scale: f64 = x.iter().sum();
    if scale <= 0.0 {
        return Err(Error::Infeasible("solution degenerates to zero intensity".into()));
    }
    // x is in table column order (q = +1, 0, -1)
    Ok(PolarizationSolution {
        sigma_plus: x[0] / scale,
        sigma_minus: x[2] / scale,
        pi: x[1] / scale,
        scale,
        residual,
        exact_feasible: residual <= 1e-10 * norm.max(1.0),
    })
}

fn nnls_on_support(a: &[[f64; 3]], target: &[f64; 4], active: &[usize]) -> Option<[f64; 3]> {
    let k = active.len();
    // normal equations on the active columns
    let mut ata = vec![vec![0.0f64; k]; k];
    let mut atb = vec![0.0f64; k];
    for (ci, &qi) in active.iter().enumerate() {
        for (cj, &qj) in active.iter().enumerate() {
            ata[ci][cj] = (0..4).map(|r| a[r][qi] * a[r][qj]).sum();
        }
        atb[ci] = (0..4).map(|r| a[r][qi] * target[r]).sum();
    }
    let sol = solve_small(&mut ata, &mut atb)?;
    if sol.iter().any(|&v| v < -1e-12) {
        return None;
    }
    let mut x = [0.0f64; 3];
    for (ci, &qi) in active.iter().enumerate() {
        x[qi] = sol[ci].max(0.0);
    }
    Some(x)
}

fn solve_small(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot_row][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in i + 1..n {
            acc -= a[i][j] * x[j];
        }
        x[i] = acc / a[i][i];
    }
    Some(x)
}

fn lsq_residual(a: &[[f64; 3]], x: &[f64; 3], target: &[f64; 4]) -> f64 {
    (0..4)
        .map(|r| {
            let pred: f64 = (0..3).map(|q| a[r][q] * x[q]).sum();
            (pred - target[r]).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaEstimate {
    pub gamma_hat: f64,
    pub residuals: [f64; 4],
}

/// Least-squares fit of measured rates (s^-1) against the designed pattern
/// (2 g gamma / 3) * (0, 1, 2, 3); g in rad/s.
pub fn gamma_from_rates(measured: &[f64; 4], g: f64) -> Result<GammaEstimate> {
    if !(g > 0.0) {
        return Err(Error::InvalidInput("g must be > 0".into()));
    }
    if measured.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidInput("all measured rates are zero".into()));
    }
    let pattern = [0.0, 1.0, 2.0, 3.0];
    let num: f64 = measured.iter().zip(&pattern).map(|(y, k)| y * k).sum();
    let den: f64 = pattern.iter().map(|k| k * k).sum();
    let slope = num / den;
    let gamma_hat = slope * 3.0 / (2.0 * g);
    let mut residuals = [0.0; 4];
    for k in 0..4 {
        residuals[k] = measured[k] - slope * pattern[k];
    }
    Ok(GammaEstimate {
        gamma_hat,
        residuals,
    })
}
