//! The energy-extraction pipeline: fit the dissipation scale gamma to
//! measured |2> populations, diagonalize the extracted Hamiltonian, and
//! attach percentile-bootstrap confidence intervals.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::expsim::{population_trace, TimeSeriesDataset, INITIAL_STATE, MEASURED_STATE};
use crate::model::{build_general, GammaSpec, HamiltonianSpec};
use crate::numerics::eigendecompose;
use crate::spectra::DEFAULT_FLAG_TOL;
use crate::{Error, Result};

pub const DEFAULT_BOUNDS: (f64, f64) = (0.0, 3.0);
pub const DEFAULT_RESAMPLES: usize = 200;
pub const DEFAULT_CI_LEVEL: f64 = 0.68;
const COARSE_GRID: usize = 48;
const REFINE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct BandEstimate {
    pub re: f64,
    pub im: f64,
    pub ci_re: Option<(f64, f64)>,
    pub ci_im: Option<(f64, f64)>,
    pub near_ep_flag: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub gamma_hat: f64,
    pub sse: f64,
    pub n_evaluations: usize,
    pub bands: Vec<BandEstimate>,
    pub ci_gamma: Option<(f64, f64)>,
    pub bootstrap_samples: usize,
    pub seed: Option<u64>,
}

/// Weighted (1/sigma^2) or plain sum of squared residuals of the model
/// P_|2>(t; gamma) against the data.
fn objective(
    data: &TimeSeriesDataset,
    template: &HamiltonianSpec,
    gamma: f64,
    p2: &[f64],
    weighted: bool,
) -> Result<f64> {
    let spec = HamiltonianSpec {
        gamma: GammaSpec::Pattern { scale: gamma },
        ..template.clone()
    };
    let trace = population_trace(&spec, INITIAL_STATE, &data.times)?;
    let model = &trace.populations[MEASURED_STATE];
    let mut sse = 0.0;
    for k in 0..p2.len() {
        let r = p2[k] - model[k];
        let w = if weighted {
            1.0 / (data.sigma[k] * data.sigma[k])
        } else {
            1.0
        };
        sse += w * r * r;
    }
    Ok(sse)
}

fn golden_refine(
    mut a: f64,
    mut b: f64,
    mut f: impl FnMut(f64) -> Result<f64>,
    evals: &mut usize,
) -> Result<f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    *evals += 2;
    while b - a > REFINE_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INV_PHI;
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INV_PHI;
            fd = f(d)?;
        }
        *evals += 1;
    }
    Ok(0.5 * (a + b))
}

fn fit_gamma_values(
    data: &TimeSeriesDataset,
    template: &HamiltonianSpec,
    bounds: (f64, f64),
    p2: &[f64],
    weighted: bool,
) -> Result<(f64, f64, usize)> {
    let (lo, hi) = bounds;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidInput(format!(
            "bounds must be finite with lo < hi, got ({lo}, {hi})"
        )));
    }
    if data.times.len() < 3 || p2.len() != data.times.len() {
        return Err(Error::InvalidInput(format!(
            "need at least 3 data points, got {}",
            data.times.len()
        )));
    }
    let mut evals = 0usize;
    let step = (hi - lo) / (COARSE_GRID - 1) as f64;
    let grid: Vec<f64> = (0..COARSE_GRID).map(|k| lo + step * k as f64).collect();
    let mut values = Vec::with_capacity(grid.len());
    for &g in &grid {
        values.push(objective(data, template, g, p2, weighted)?);
        evals += 1;
    }
    let vmax = values.iter().cloned().fold(f64::MIN, f64::max);
    let vmin = values.iter().cloned().fold(f64::MAX, f64::min);
    if vmax - vmin < 1e-12 {
        return Err(Error::NoInformation(
            "objective is flat over the whole gamma range".into(),
        ));
    }

    // multi-start over every coarse-grid local minimum (endpoints included)
    let mut best: Option<(f64, f64)> = None;
    for k in 0..grid.len() {
        let left_ok = k == 0 || values[k] <= values[k - 1];
        let right_ok = k == grid.len() - 1 || values[k] <= values[k + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        let a = if k == 0 { grid[0] } else { grid[k - 1] };
        let b = if k == grid.len() - 1 {
            grid[grid.len() - 1]
        } else {
            grid[k + 1]
        };
        let gamma = golden_refine(
            a,
            b,
            |g| objective(data, template, g, p2, weighted),
            &mut evals,
        )?;
        let value = objective(data, template, gamma, p2, weighted)?;
        evals += 1;
        if best.map_or(true, |(_, v)| value < v) {
            best = Some((gamma, value));
        }
    }
    let (gamma_hat, sse) = best.unwrap();
    Ok((gamma_hat, sse, evals))
}

/// Fit gamma as the single free parameter; no confidence intervals yet.
pub fn fit_gamma(
    data: &TimeSeriesDataset,
    template: &HamiltonianSpec,
    bounds: (f64, f64),
    weighted: bool,
) -> Result<FitResult> {
    let (gamma_hat, sse, evals) = fit_gamma_values(data, template, bounds, &data.p2, weighted)?;
    let bands = extract_bands(gamma_hat, template)?;
    Ok(FitResult {
        gamma_hat,
        sse,
        n_evaluations: evals,
        bands: bands
            .iter()
            .map(|&lambda| BandEstimate {
                re: lambda.re,
                im: lambda.im,
                ci_re: None,
                ci_im: None,
                near_ep_flag: near_ep(&bands),
            })
            .collect(),
        ci_gamma: None,
        bootstrap_samples: 0,
        seed: None,
    })
}

/// Eigenvalues of the extracted Hamiltonian (no global shift), normalized to
/// g, in canonical order. The production path is diagonalization.
pub fn extract_bands(gamma_hat: f64, template: &HamiltonianSpec) -> Result<Vec<Complex64>> {
    let spec = HamiltonianSpec {
        gamma: GammaSpec::Pattern { scale: gamma_hat },
        alpha: 0.0,
        ..template.clone()
    };
    let h = build_general(&spec)?;
    let normalized = h.scale(Complex64::new(1.0 / spec.g, 0.0));
    Ok(eigendecompose(&normalized)?.eigenvalues)
}

fn near_ep(bands: &[Complex64]) -> bool {
    let mut gap = f64::INFINITY;
    for i in 0..bands.len() {
        for j in i + 1..bands.len() {
            gap = gap.min((bands[i] - bands[j]).norm());
        }
    }
    gap < DEFAULT_FLAG_TOL
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = q * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

fn ci_of(mut samples: Vec<f64>, level: f64) -> (f64, f64) {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tail = 0.5 * (1.0 - level);
    (percentile(&samples, tail), percentile(&samples, 1.0 - tail))
}

/// Percentile bootstrap: perturb every point by Normal(0, sigma_k), refit,
/// re-extract bands, and read confidence bounds from the resampled statistics.
pub fn bootstrap_ci(
    data: &TimeSeriesDataset,
    template: &HamiltonianSpec,
    bounds: (f64, f64),
    n_resamples: usize,
    ci_level: f64,
    seed: u64,
    weighted: bool,
) -> Result<FitResult> {
    if data.sigma.iter().any(|&s| s < 0.0) {
        return Err(Error::InvalidInput("sigma must be >= 0".into()));
    }
    if !(0.0 < ci_level && ci_level < 1.0) {
        return Err(Error::InvalidInput("ci_level must lie in (0, 1)".into()));
    }
    let mut base = fit_gamma(data, template, bounds, weighted)?;

    let n_bands = base.bands.len();
    let mut gamma_samples = Vec::with_capacity(n_resamples);
    let mut band_re: Vec<Vec<f64>> = vec![Vec::with_capacity(n_resamples); n_bands];
    let mut band_im: Vec<Vec<f64>> = vec![Vec::with_capacity(n_resamples); n_bands];
    let mut failures = 0usize;
    for r in 0..n_resamples {
        // per-resample generator derived from (master seed, resample index)
        let mut rng = ChaCha8Rng::seed_from_u64(
            seed.wrapping_mul(0x9e3779b97f4a7c15)
                .wrapping_add(r as u64)
                .wrapping_mul(0xbf58476d1ce4e5b9),
        );
        let perturbed: Vec<f64> = data
            .p2
            .iter()
            .zip(&data.sigma)
            .map(|(&p, &s)| {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                p + s * z
            })
            .collect();
        match fit_gamma_values(data, template, bounds, &perturbed, weighted) {
            Ok((gamma_s, _, _)) => {
                gamma_samples.push(gamma_s);
                let bands = extract_bands(gamma_s, template)?;
                for (b, lambda) in bands.iter().enumerate() {
                    band_re[b].push(lambda.re);
                    band_im[b].push(lambda.im);
                }
            }
            Err(_) => failures += 1,
        }
    }
    if failures * 20 > n_resamples {
        return Err(Error::FitFailure(format!(
            "{failures} of {n_resamples} bootstrap resamples failed to fit"
        )));
    }

    base.ci_gamma = Some(ci_of(gamma_samples, ci_level));
    for (b, band) in base.bands.iter_mut().enumerate() {
        band.ci_re = Some(ci_of(band_re[b].clone(), ci_level));
        band.ci_im = Some(ci_of(band_im[b].clone(), ci_level));
    }
    base.bootstrap_samples = n_resamples - failures;
    base.seed = Some(seed);
    Ok(base)
}
