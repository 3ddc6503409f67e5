//! Locating exceptional points along parameter scans, tracing EP2 curves in
//! the (J1, J2) plane, and classifying degeneracy order and type.
//!
//! The primary detection signal along a scan is the discriminant of the
//! characteristic polynomial: simple zeros show up as sign changes and are
//! bracketed by bisection. Even-order (touching) zeros carry no sign change;
//! those are caught as minima of the smallest eigenvalue gap and refined by
//! golden-section search. Every candidate must then pass a gap-collapse and
//! multiplicity check before a record is emitted, which also separates
//! exceptional from diabolic degeneracies.

use num_complex::Complex64;
use serde::Serialize;

use crate::model::{build_general, HamiltonianSpec};
use crate::numerics::{
    char_poly, default_cluster_tol, eigendecompose, nullity, quartic_discriminant,
    ComplexMatrix, Eigensystem,
};
use crate::spectra::Axis;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneracyKind {
    Exceptional,
    Diabolic,
}

/// One eigenvalue cluster with its algebraic/geometric multiplicities.
#[derive(Debug, Clone, Serialize)]
pub struct DegeneracyCluster {
    pub eigenvalue_re: f64,
    pub eigenvalue_im: f64,
    pub algebraic_mult: usize,
    pub geometric_mult: usize,
    pub kind: DegeneracyKind,
}

impl DegeneracyCluster {
    pub fn eigenvalue(&self) -> Complex64 {
        Complex64::new(self.eigenvalue_re, self.eigenvalue_im)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpDiagnostics {
    pub discriminant: f64,
    pub min_gap: f64,
    pub gram_cond: f64,
    pub bracket_width: f64,
}

/// A located parameter-space degeneracy. Eigenvalue is normalized to g.
#[derive(Debug, Clone, Serialize)]
pub struct EPRecord {
    pub axis: String,
    pub axis_value: f64,
    pub eigenvalue_re: f64,
    pub eigenvalue_im: f64,
    pub algebraic_mult: usize,
    pub geometric_mult: usize,
    pub kind: DegeneracyKind,
    pub diagnostics: EpDiagnostics,
}

/// Coefficients of the biquadratic characteristic polynomial
/// lambda^4 + P lambda^2 + Q of the symmetric family (pattern gamma,
/// J = (J1, J2, J1)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedInvariants {
    pub p: f64,
    pub q: f64,
}

pub fn reduced_invariants(gamma: f64, j1: f64, j2: f64) -> ReducedInvariants {
    let g2 = gamma * gamma;
    let j1_2 = j1 * j1;
    let j2_2 = j2 * j2;
    ReducedInvariants {
        p: 10.0 * g2 / 9.0 - 2.0 * j1_2 / 3.0 - 4.0 * j2_2 / 9.0,
        q: j1_2 * j1_2 / 9.0 + (2.0 * j1_2 - 4.0 * j2_2) * g2 / 9.0 + g2 * g2 / 9.0,
    }
}

impl ReducedInvariants {
    /// Discriminant of lambda^4 + P lambda^2 + Q.
    pub fn discriminant(&self) -> f64 {
        16.0 * self.q * (self.p * self.p - 4.0 * self.q).powi(2)
    }
}

/// Cluster the spectrum of `m` and classify each cluster.
/// `cluster_tol` is both the eigenvalue clustering tolerance (scaled by the
/// dominant eigenvalue magnitude) and the relative singular-value threshold
/// for the geometric-multiplicity rank decision.
pub fn classify_degeneracy(
    m: &ComplexMatrix,
    cluster_tol: f64,
) -> Result<Vec<DegeneracyCluster>> {
    let eig = eigendecompose(m)?;
    classify_from_eigensystem(m, &eig, cluster_tol)
}

fn classify_from_eigensystem(
    m: &ComplexMatrix,
    eig: &Eigensystem,
    cluster_tol: f64,
) -> Result<Vec<DegeneracyCluster>> {
    let scale = eig.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = cluster_tol * scale.max(1.0);
    let clusters = crate::numerics::cluster_points(&eig.eigenvalues, tol);
    let mut out = Vec::new();
    for cluster in clusters {
        let algebraic = cluster.multiplicity;
        let geometric = if algebraic == 1 {
            1
        } else {
            let shifted = m.sub_scaled_identity(cluster.value);
            nullity(&shifted, cluster_tol).max(1).min(algebraic)
        };
        let kind = if geometric < algebraic {
            DegeneracyKind::Exceptional
        } else {
            DegeneracyKind::Diabolic
        };
        out.push(DegeneracyCluster {
            eigenvalue_re: cluster.value.re,
            eigenvalue_im: cluster.value.im,
            algebraic_mult: algebraic,
            geometric_mult: geometric,
            kind,
        });
    }
    Ok(out)
}

struct ScanPoint {
    x: f64,
    discriminant: f64,
    gap: f64,
}

fn normalized_matrix(template: &HamiltonianSpec, axis: Axis, x: f64) -> Result<ComplexMatrix> {
    let spec = axis.apply(template, x)?;
    let h = build_general(&spec)?;
    Ok(h.scale(Complex64::new(1.0 / spec.g, 0.0)))
}

fn scan_discriminant(m: &ComplexMatrix) -> Result<f64> {
    let p = char_poly(m)?;
    Ok(quartic_discriminant(&p)?.re)
}

fn min_gap_at(template: &HamiltonianSpec, axis: Axis, x: f64) -> Result<f64> {
    let m = normalized_matrix(template, axis, x)?;
    Ok(eigendecompose(&m)?.min_gap())
}

/// Scan `axis` over `interval`, bracket every degeneracy signal, and emit one
/// record per confirmed degenerate eigenvalue cluster, sorted by axis value.
pub fn locate_ep_on_scan(
    template: &HamiltonianSpec,
    axis: Axis,
    interval: (f64, f64),
    tol: f64,
) -> Result<Vec<EPRecord>> {
    let (lo, hi) = interval;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidInput(format!(
            "interval must be finite with lo < hi, got ({lo}, {hi})"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be > 0".into()));
    }

    let n_grid = 801usize;
    let step = (hi - lo) / (n_grid - 1) as f64;
    let mut points = Vec::with_capacity(n_grid);
    for k in 0..n_grid {
        let x = lo + step * k as f64;
        let m = normalized_matrix(template, axis, x)?;
        let eig = eigendecompose(&m)?;
        points.push(ScanPoint {
            x,
            discriminant: scan_discriminant(&m)?,
            gap: eig.min_gap(),
        });
    }

    let disc_scale = points
        .iter()
        .map(|p| p.discriminant.abs())
        .fold(0.0, f64::max);
    if disc_scale < 1e-12 {
        return Err(Error::DegenerateFamily(
            "discriminant is identically zero on the scan interval".into(),
        ));
    }

    let mut candidates: Vec<f64> = Vec::new();

    // simple zeros: discriminant sign changes, refined by bisection
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.discriminant == 0.0 {
            candidates.push(a.x);
            continue;
        }
        if a.discriminant.signum() != b.discriminant.signum() && b.discriminant != 0.0 {
            let mut xa = a.x;
            let mut xb = b.x;
            let mut fa = a.discriminant;
            while xb - xa > tol {
                let xm = 0.5 * (xa + xb);
                let fm = scan_discriminant(&normalized_matrix(template, axis, xm)?)?;
                if fm == 0.0 {
                    xa = xm;
                    xb = xm;
                    break;
                }
                if fm.signum() == fa.signum() {
                    xa = xm;
                    fa = fm;
                } else {
                    xb = xm;
                }
            }
            candidates.push(0.5 * (xa + xb));
        }
    }

    // touching zeros: local minima of the eigenvalue gap, refined by
    // golden-section search on the gap
    let gap_threshold = 0.2;
    for k in 1..n_grid - 1 {
        if points[k].gap <= points[k - 1].gap
            && points[k].gap <= points[k + 1].gap
            && points[k].gap < gap_threshold
        {
            let x = golden_min(
                points[k - 1].x,
                points[k + 1].x,
                tol,
                |x| min_gap_at(template, axis, x),
            )?;
            // the gap can bottom out in a flat plateau (clustered eigenvalues
            // report gap 0 over a finite width); recentre on the plateau
            let x = plateau_center(points[k - 1].x, points[k + 1].x, x, tol, |x| {
                min_gap_at(template, axis, x)
            })?;
            candidates.push(x);
        }
    }

    // merge nearby candidates, keeping the one with the smallest gap
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let merge_radius = (10.0 * tol).max(4.0 * step);
    let mut merged: Vec<f64> = Vec::new();
    let mut group: Vec<f64> = Vec::new();
    for x in candidates {
        if let Some(&last) = group.last() {
            if x - last > merge_radius {
                merged.push(best_of_group(&group, template, axis)?);
                group.clear();
            }
        }
        group.push(x);
    }
    if !group.is_empty() {
        merged.push(best_of_group(&group, template, axis)?);
    }

    // confirmation: gap collapse plus multiplicity classification
    let cluster_tol = default_cluster_tol(1.0).max(10.0 * tol.sqrt());
    let mut records = Vec::new();
    for x in merged {
        let m = normalized_matrix(template, axis, x)?;
        let eig = eigendecompose(&m)?;
        if eig.min_gap() > 10.0 * cluster_tol {
            continue;
        }
        let disc = scan_discriminant(&m)?;
        let gram = eig.gram_condition();
        for cluster in classify_from_eigensystem(&m, &eig, cluster_tol)? {
            if cluster.algebraic_mult < 2 {
                continue;
            }
            records.push(EPRecord {
                axis: axis.name().to_string(),
                axis_value: x,
                eigenvalue_re: cluster.eigenvalue_re,
                eigenvalue_im: cluster.eigenvalue_im,
                algebraic_mult: cluster.algebraic_mult,
                geometric_mult: cluster.geometric_mult,
                kind: cluster.kind,
                diagnostics: EpDiagnostics {
                    discriminant: disc,
                    min_gap: eig.min_gap(),
                    gram_cond: gram,
                    bracket_width: tol,
                },
            });
        }
    }
    records.sort_by(|a, b| {
        a.axis_value
            .partial_cmp(&b.axis_value)
            .unwrap()
            .then(b.eigenvalue_re.partial_cmp(&a.eigenvalue_re).unwrap())
    });
    Ok(records)
}

fn best_of_group(group: &[f64], template: &HamiltonianSpec, axis: Axis) -> Result<f64> {
    let mut best = group[0];
    let mut best_gap = f64::INFINITY;
    for &x in group {
        let gap = min_gap_at(template, axis, x)?;
        if gap < best_gap {
            best_gap = gap;
            best = x;
        }
    }
    Ok(best)
}

/// Midpoint of the contiguous region around `x` where `f` sits at its
/// minimum level. For a sharp minimum this returns `x` unchanged.
fn plateau_center(
    a: f64,
    b: f64,
    x: f64,
    tol: f64,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    let fx = f(x)?;
    let thresh = fx + 1e-9;
    let left = if f(a)? > thresh {
        let (mut lo, mut hi) = (a, x);
        while hi - lo > tol {
            let m = 0.5 * (lo + hi);
            if f(m)? > thresh {
                lo = m;
            } else {
                hi = m;
            }
        }
        0.5 * (lo + hi)
    } else {
        a
    };
    let right = if f(b)? > thresh {
        let (mut lo, mut hi) = (x, b);
        while hi - lo > tol {
            let m = 0.5 * (lo + hi);
            if f(m)? > thresh {
                hi = m;
            } else {
                lo = m;
            }
        }
        0.5 * (lo + hi)
    } else {
        b
    };
    Ok(0.5 * (left + right))
}

fn golden_min(
    mut a: f64,
    mut b: f64,
    tol: f64,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
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
    }
    Ok(0.5 * (a + b))
}

/// The two analytic EP2 branch conditions of the symmetric family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ep2Branch {
    /// Q = 0 (a double root at lambda = 0).
    Q0,
    /// P^2 = 4Q (a symmetric pair of double roots).
    P24Q,
}

impl Ep2Branch {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "q0" => Ok(Ep2Branch::Q0),
            "p24q" => Ok(Ep2Branch::P24Q),
            other => Err(Error::InvalidInput(format!(
                "unknown branch {other:?}; expected q0 or p24q"
            ))),
        }
    }

    fn condition(self, gamma: f64, j1: f64, j2: f64) -> f64 {
        let inv = reduced_invariants(gamma, j1, j2);
        match self {
            Ep2Branch::Q0 => inv.q,
            Ep2Branch::P24Q => inv.p * inv.p - 4.0 * inv.q,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Ep2Curve {
    pub branch: Ep2Branch,
    pub gamma: f64,
    /// Solved (J1, J2) pairs, in grid order.
    pub points: Vec<(f64, f64)>,
    /// J1 values where the branch condition had no solution with J2 >= 0.
    pub gaps: Vec<f64>,
    /// Present when the trace terminated at the fourfold degeneracy (1, 1).
    pub terminal_ep4: Option<(f64, f64)>,
}

const CURVE_TOL: f64 = 1e-10;
const EP4_STOP_RADIUS: f64 = 1e-5; // 10 x curve tolerance target of 1e-6

/// For each J1 on the grid, solve the branch condition for J2 >= 0 by
/// bracketed bisection on the exact invariants. Tracing stops when the curve
/// reaches the fourfold degeneracy at (1, 1).
pub fn trace_ep2_curve(branch: Ep2Branch, gamma_fixed: f64, j1_grid: &[f64]) -> Result<Ep2Curve> {
    if !(gamma_fixed > 0.0) {
        return Err(Error::InvalidInput("gamma_fixed must be > 0".into()));
    }
    let mut points = Vec::new();
    let mut gaps = Vec::new();
    let mut terminal = None;
    let mut previous_j2: Option<f64> = None;

    for &j1 in j1_grid {
        match solve_branch_for_j2(branch, gamma_fixed, j1, previous_j2) {
            Some(j2) => {
                if ((j1 - 1.0).powi(2) + (j2 - 1.0).powi(2)).sqrt() < EP4_STOP_RADIUS {
                    terminal = Some((1.0, 1.0));
                    break;
                }
                points.push((j1, j2));
                previous_j2 = Some(j2);
            }
            None => gaps.push(j1),
        }
    }
    Ok(Ep2Curve {
        branch,
        gamma: gamma_fixed,
        points,
        gaps,
        terminal_ep4: terminal,
    })
}

/// Find nonnegative roots of the branch condition in J2 by scanning for sign
/// changes and bisecting; with several roots, the one closest to the previous
/// curve point wins (continuation).
fn solve_branch_for_j2(
    branch: Ep2Branch,
    gamma: f64,
    j1: f64,
    previous: Option<f64>,
) -> Option<f64> {
    let f = |j2: f64| branch.condition(gamma, j1, j2);
    let hi = 3.0 + j1.abs() + gamma.abs();
    let n = 600;
    let step = hi / n as f64;
    let samples: Vec<f64> = (0..=n).map(|k| f(step * k as f64)).collect();
    let fmax = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut roots = Vec::new();
    let mut xa = 0.0;
    let mut fa = samples[0];
    if fa == 0.0 {
        roots.push(0.0);
    }
    for k in 1..=n {
        let xb = step * k as f64;
        let fb = samples[k];
        if fb == 0.0 {
            roots.push(xb);
        } else if fa != 0.0 && fa.signum() != fb.signum() {
            let (mut a, mut b, mut va) = (xa, xb, fa);
            while b - a > CURVE_TOL {
                let m = 0.5 * (a + b);
                let vm = f(m);
                if vm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if vm.signum() == va.signum() {
                    a = m;
                    va = vm;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        xa = xb;
        fa = fb;
    }
    // touching zeros (|f| local minima that never change sign) are real
    // branch points too: refine by golden-section and accept near-zero minima
    for k in 0..=n {
        let here = samples[k].abs();
        let left = if k > 0 { samples[k - 1].abs() } else { f64::INFINITY };
        let right = if k < n { samples[k + 1].abs() } else { f64::INFINITY };
        if here > 0.0 && here <= left && here <= right {
            let a = step * (k.saturating_sub(1)) as f64;
            let b = step * (k + 1).min(n) as f64;
            let x = golden_min(a, b, 1e-12, |j2| Ok(f(j2).abs()))
                .expect("infallible objective");
            if f(x).abs() <= 1e-14 * fmax.max(1.0)
                && roots.iter().all(|r: &f64| (r - x).abs() > 10.0 * CURVE_TOL)
            {
                roots.push(x);
            }
        }
    }
    if roots.is_empty() {
        return None;
    }
    match previous {
        Some(prev) => roots
            .into_iter()
            .min_by(|a, b| (a - prev).abs().partial_cmp(&(b - prev).abs()).unwrap()),
        None => roots
            .into_iter()
            .min_by(|a, b| a.partial_cmp(b).unwrap()),
    }
}

impl Ep2Curve {
    pub fn to_csv(&self, header_comments: &[String]) -> String {
        let mut out = String::new();
        for line in header_comments {
            out.push_str(&format!("# {line}\n"));
        }
        out.push_str("j1,j2\n");
        for &(j1, j2) in &self.points {
            out.push_str(&format!("{j1:.12e},{j2:.12e}\n"));
        }
        if let Some((j1, j2)) = self.terminal_ep4 {
            out.push_str(&format!("{j1:.12e},{j2:.12e}\n"));
        }
        out
    }
}
