//! Independent reference implementations used only to cross-check the
//! production numerics: an adaptive Runge-Kutta propagator, a Sylvester
//! resultant determinant, and a shifted-QR eigensolver. These deliberately
//! share no code with the library paths they verify.

#![allow(dead_code)]

use num_complex::Complex64;

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) integration of d psi/dt = -i M psi.

pub fn rk_propagate(m: &[Vec<Complex64>], psi0: &[Complex64], t: f64, tol: f64) -> Vec<Complex64> {
    let f = |y: &[Complex64]| -> Vec<Complex64> {
        let n = y.len();
        (0..n)
            .map(|i| {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    acc += m[i][j] * y[j];
                }
                -Complex64::i() * acc
            })
            .collect()
    };

    // Dormand-Prince coefficients
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let n = psi0.len();
    let mut y = psi0.to_vec();
    let mut t_now = 0.0f64;
    if t == 0.0 {
        return y;
    }
    // initial step from the matrix scale
    let mnorm: f64 = m
        .iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-30);
    let mut h = (0.1 / mnorm).min(t);

    let mut steps = 0usize;
    while t_now < t {
        steps += 1;
        assert!(steps < 2_000_000, "rk oracle failed to converge");
        if t_now + h > t {
            h = t - t_now;
        }
        let mut k: Vec<Vec<Complex64>> = Vec::with_capacity(7);
        k.push(f(&y));
        for s in 0..6 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..n {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k.push(f(&ys));
        }
        let mut y5 = y.clone();
        let mut y4 = y.clone();
        for (j, kj) in k.iter().enumerate() {
            for i in 0..n {
                y5[i] += h * B5[j] * kj[i];
                y4[i] += h * B4[j] * kj[i];
            }
        }
        let err: f64 = (0..n)
            .map(|i| (y5[i] - y4[i]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let scale = tol * (1.0 + y.iter().map(|z| z.norm()).fold(0.0, f64::max));
        if err <= scale {
            t_now += h;
            y = y5;
        }
        let factor = if err > 0.0 {
            0.9 * (scale / err).powf(0.2)
        } else {
            5.0
        };
        h *= factor.clamp(0.2, 5.0);
    }
    y
}

// ---------------------------------------------------------------------------
// Discriminant via the Sylvester resultant of p and p'.

/// Discriminant of a monic quartic with coefficients
/// [1, b, c, d, e] (descending), computed as det of the 7x7 Sylvester
/// matrix of p and p'.
pub fn sylvester_discriminant(coeffs: &[Complex64; 5]) -> Complex64 {
    let p = coeffs;
    let dp = [
        4.0 * p[0],
        3.0 * p[1],
        2.0 * p[2],
        p[3],
    ];
    // Sylvester matrix: 3 shifted rows of p (degree 4), 4 shifted rows of p'.
    let mut s = [[Complex64::new(0.0, 0.0); 7]; 7];
    for r in 0..3 {
        for c in 0..5 {
            s[r][r + c] = p[c];
        }
    }
    for r in 0..4 {
        for c in 0..4 {
            s[3 + r][r + c] = dp[c];
        }
    }
    let resultant = det7(&mut s);
    // disc = (-1)^(n(n-1)/2) Res(p, p') / a_n with n = 4, a_n = 1
    resultant / p[0]
}

fn det7(a: &mut [[Complex64; 7]; 7]) -> Complex64 {
    let n = 7;
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].norm().partial_cmp(&a[j][col].norm()).unwrap())
            .unwrap();
        if a[pivot][col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                let sub = f * a[col][c];
                a[r][c] -= sub;
            }
        }
    }
    det
}

// ---------------------------------------------------------------------------
// Shifted QR eigenvalues for small dense complex matrices.

pub fn qr_eigenvalues(m: &[Vec<Complex64>]) -> Vec<Complex64> {
    let n = m.len();
    let mut a: Vec<Vec<Complex64>> = m.to_vec();
    hessenberg(&mut a);
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n;
    let mut iters = 0usize;
    while hi > 0 {
        iters += 1;
        assert!(iters < 100_000, "qr oracle failed to converge");
        if hi == 1 {
            eigs.push(a[0][0]);
            break;
        }
        // deflate when the last subdiagonal entry is negligible
        let scale = a[hi - 1][hi - 1].norm() + a[hi - 2][hi - 2].norm();
        if a[hi - 1][hi - 2].norm() <= 1e-15 * scale.max(1e-300) {
            eigs.push(a[hi - 1][hi - 1]);
            hi -= 1;
            continue;
        }
        let shift = wilkinson_shift(
            a[hi - 2][hi - 2],
            a[hi - 2][hi - 1],
            a[hi - 1][hi - 2],
            a[hi - 1][hi - 1],
        );
        qr_step(&mut a, hi, shift);
    }
    eigs
}

fn hessenberg(a: &mut [Vec<Complex64>]) {
    let n = a.len();
    for col in 0..n.saturating_sub(2) {
        for row in (col + 2..n).rev() {
            if a[row][col].norm() == 0.0 {
                continue;
            }
            let (c, s) = givens(a[row - 1][col], a[row][col]);
            apply_givens_left(a, row - 1, row, c, s);
            apply_givens_right(a, row - 1, row, c, s);
        }
    }
}

fn qr_step(a: &mut [Vec<Complex64>], hi: usize, shift: Complex64) {
    for k in 0..hi {
        a[k][k] -= shift;
    }
    // QR by Givens on the subdiagonal, then RQ
    let mut rotations = Vec::with_capacity(hi - 1);
    for k in 0..hi - 1 {
        let (c, s) = givens(a[k][k], a[k + 1][k]);
        apply_givens_left_range(a, k, k + 1, c, s, hi);
        rotations.push((k, c, s));
    }
    for &(k, c, s) in &rotations {
        apply_givens_right_range(a, k, k + 1, c, s, hi);
    }
    for k in 0..hi {
        a[k][k] += shift;
    }
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    // eigenvalue of the trailing 2x2 closest to d
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - 4.0 * det).sqrt();
    let l1 = 0.5 * (tr + disc);
    let l2 = 0.5 * (tr - disc);
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Complex Givens (c real, s complex) with c*x + s*y = r, -conj(s)*x + c*y = 0.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let norm = (x.norm_sqr() + y.norm_sqr()).sqrt();
    if norm == 0.0 || y.norm() == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    let c = x.norm() / norm;
    if x.norm() == 0.0 {
        // rotate y straight into the pivot slot
        return (0.0, y.conj() / y.norm());
    }
    let phase = x / x.norm();
    let s = phase * y.conj() / norm;
    (c, s)
}

fn apply_givens_left(a: &mut [Vec<Complex64>], i: usize, j: usize, c: f64, s: Complex64) {
    let n = a.len();
    apply_givens_left_range(a, i, j, c, s, n);
    // keep the similarity: left rotation must be paired by the caller
}

fn apply_givens_left_range(
    a: &mut [Vec<Complex64>],
    i: usize,
    j: usize,
    c: f64,
    s: Complex64,
    hi: usize,
) {
    for col in 0..hi {
        let x = a[i][col];
        let y = a[j][col];
        a[i][col] = c * x + s * y;
        a[j][col] = -s.conj() * x + c * y;
    }
}

fn apply_givens_right(a: &mut [Vec<Complex64>], i: usize, j: usize, c: f64, s: Complex64) {
    let n = a.len();
    apply_givens_right_range(a, i, j, c, s, n);
}

fn apply_givens_right_range(
    a: &mut [Vec<Complex64>],
    i: usize,
    j: usize,
    c: f64,
    s: Complex64,
    hi: usize,
) {
    for row in 0..hi {
        let x = a[row][i];
        let y = a[row][j];
        a[row][i] = c * x + s.conj() * y;
        a[row][j] = -s * x + c * y;
    }
}

// ---------------------------------------------------------------------------
// Small conversions shared by the test files.

pub fn to_rows(m: &epsim::numerics::ComplexMatrix) -> Vec<Vec<Complex64>> {
    let n = m.dim();
    (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect()
}

/// Greedy optimal matching distance between two unordered spectra.
pub fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut remaining: Vec<Complex64> = b.to_vec();
    let mut worst = 0.0f64;
    for &x in a {
        let (idx, d) = remaining
            .iter()
            .enumerate()
            .map(|(i, &y)| (i, (x - y).norm()))
            .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap())
            .unwrap();
        worst = worst.max(d);
        remaining.swap_remove(idx);
    }
    worst
}
