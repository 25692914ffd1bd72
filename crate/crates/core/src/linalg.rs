//! Small dense eigenvalue routines.
//!
//! Blocks of order one to three use closed-form root formulas. Larger real
//! symmetric matrices go through a cyclic Jacobi iteration; larger Hermitian
//! matrices are embedded as real symmetric matrices of twice the order first.

use nalgebra::{Complex, DMatrix};
use std::f64::consts::PI;

pub type C64 = Complex<f64>;

/// Off-diagonal tolerance for the cyclic Jacobi sweeps, relative to the
/// Frobenius norm of the input.
pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    assert!(a.is_square(), "eigenvalues of a non-square matrix");
    let mut ev = match a.nrows() {
        0 => Vec::new(),
        1 => vec![a[(0, 0)]],
        2 => {
            let (l1, l2) = herm2(a[(0, 0)], a[(1, 1)], 0.5 * (a[(0, 1)] + a[(1, 0)]).abs());
            vec![l1, l2]
        }
        3 => {
            let h = a.map(|v| C64::new(v, 0.0));
            herm3(&h).to_vec()
        }
        _ => jacobi_eigenvalues(a),
    };
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &DMatrix<C64>) -> Vec<f64> {
    assert!(h.is_square(), "eigenvalues of a non-square matrix");
    let n = h.nrows();
    let mut ev = match n {
        0 => Vec::new(),
        1 => vec![h[(0, 0)].re],
        2 => {
            let off = 0.5 * (h[(0, 1)] + h[(1, 0)].conj());
            let (l1, l2) = herm2(h[(0, 0)].re, h[(1, 1)].re, off.norm());
            vec![l1, l2]
        }
        3 => herm3(h).to_vec(),
        _ => {
            // [[X, -Y], [Y, X]] carries every eigenvalue of X + iY twice.
            let mut big = DMatrix::<f64>::zeros(2 * n, 2 * n);
            for i in 0..n {
                for j in 0..n {
                    let v = h[(i, j)];
                    big[(i, j)] = v.re;
                    big[(i + n, j + n)] = v.re;
                    big[(i, j + n)] = -v.im;
                    big[(i + n, j)] = v.im;
                }
            }
            let mut all = jacobi_eigenvalues(&big);
            all.sort_by(|x, y| x.total_cmp(y));
            all.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
        }
    };
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

pub fn max_eigenvalue(a: &DMatrix<f64>) -> f64 {
    *sym_eigenvalues(a).last().expect("empty matrix")
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(a)[0]
}

pub fn hermitian_max_eigenvalue(h: &DMatrix<C64>) -> f64 {
    *hermitian_eigenvalues(h).last().expect("empty matrix")
}

fn herm2(a: f64, d: f64, off_abs: f64) -> (f64, f64) {
    let mean = 0.5 * (a + d);
    let r = (0.5 * (a - d)).hypot(off_abs);
    (mean - r, mean + r)
}

/// Trigonometric solution of the characteristic cubic of a 3x3 Hermitian matrix.
fn herm3(h: &DMatrix<C64>) -> [f64; 3] {
    let p1 = h[(0, 1)].norm_sqr() + h[(0, 2)].norm_sqr() + h[(1, 2)].norm_sqr();
    let q = (h[(0, 0)].re + h[(1, 1)].re + h[(2, 2)].re) / 3.0;
    let p2 = (h[(0, 0)].re - q).powi(2)
        + (h[(1, 1)].re - q).powi(2)
        + (h[(2, 2)].re - q).powi(2)
        + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return [q, q, q];
    }
    let b = h.map(|v| v / p) - DMatrix::<C64>::identity(3, 3) * C64::new(q / p, 0.0);
    let det = b[(0, 0)] * (b[(1, 1)] * b[(2, 2)] - b[(1, 2)] * b[(2, 1)])
        - b[(0, 1)] * (b[(1, 0)] * b[(2, 2)] - b[(1, 2)] * b[(2, 0)])
        + b[(0, 2)] * (b[(1, 0)] * b[(2, 1)] - b[(1, 1)] * b[(2, 0)]);
    let r = (0.5 * det.re).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let l2 = 3.0 * q - l1 - l3;
    [l1, l2, l3]
}

/// Cyclic Jacobi iteration on a real symmetric matrix; returns unsorted eigenvalues.
pub fn jacobi_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    // symmetrize so rounding in the caller cannot bias the rotations
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    let scale = m.norm().max(f64::MIN_POSITIVE);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= JACOBI_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[(i, i)]).collect()
}

/// `a ⊗ I_n`.
pub fn kron_identity(a: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows() * n, a.ncols() * n, |i, j| {
        if i % n == j % n {
            a[(i / n, j / n)]
        } else {
            0.0
        }
    })
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Largest modulus among the eigenvalues of a real square matrix.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    match a.nrows() {
        0 => 0.0,
        1 => a[(0, 0)].abs(),
        2 => {
            let tr = a[(0, 0)] + a[(1, 1)];
            let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
            let disc = tr * tr - 4.0 * det;
            if disc >= 0.0 {
                let s = disc.sqrt();
                (0.5 * (tr + s)).abs().max((0.5 * (tr - s)).abs())
            } else {
                det.abs().sqrt()
            }
        }
        _ => a
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max),
    }
}

/// Derivative-free minimizer used by the dissipation search.
pub fn nelder_mead<F>(f: F, start: &[f64], step: &[f64], iters: usize) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += step[i];
        simplex.push(p);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    for _ in 0..iters {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        if (vals[n] - vals[0]).abs() <= 1e-15 * (1.0 + vals[0].abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            (0..n)
                .map(|j| centroid[j] + t * (simplex[n][j] - centroid[j]))
                .collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                vals[n] = fe;
            } else {
                simplex[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            simplex[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let x = along(-0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = f(&x);
                (x, v)
            };
            if fc < vals[n].min(fr) {
                simplex[n] = xc;
                vals[n] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=n {
                    for j in 0..n {
                        simplex[i][j] = best[j] + 0.5 * (simplex[i][j] - best[j]);
                    }
                    vals[i] = f(&simplex[i]);
                }
            }
        }
    }
    let (i, v) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i, *v))
        .expect("non-empty simplex");
    (simplex[i].clone(), v)
}
