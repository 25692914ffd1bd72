//! Scalar FDI values for gradient descent on circles `|z| = ρ` and the
//! endpoint polynomials obtained by evaluating them at `z = ±ρ`.

use crate::error::{invalid, Result};
use crate::iqc::{BlockIqc, LtiSystem};
use crate::linalg::C64;
use crate::rates::ProblemSpec;
use nalgebra::DMatrix;

use super::popov::transfer;

/// Noiseless sector endpoint value `(t - 1 + Lα)(t - 1 + mα)`.
pub fn f_noiseless(t: f64, spec: &ProblemSpec) -> f64 {
    (t - 1.0 + spec.l * spec.alpha) * (t - 1.0 + spec.m * spec.alpha)
}

/// Noisy sector endpoint polynomial in `t`, quadratic in `λ`.
pub fn f_sector(t: f64, lambda: f64, spec: &ProblemSpec) -> f64 {
    let ProblemSpec { m, l, alpha: a, delta: d } = *spec;
    let s = t - 1.0;
    -a * a * (l - m).powi(2)
        + 2.0 * m * l * a * a * lambda * (1.0 - d * d)
        + 2.0 * a * lambda * (m + l) * s
        + lambda * (2.0 - d * d * lambda) * s * s
}

/// Coefficients `(c0, c1, c2)` of `f_sector(t, ·)` as a polynomial in `λ`.
pub fn f_sector_lambda_coeffs(t: f64, spec: &ProblemSpec) -> (f64, f64, f64) {
    let ProblemSpec { m, l, alpha: a, delta: d } = *spec;
    let s = t - 1.0;
    (
        -a * a * (l - m).powi(2),
        2.0 * m * l * a * a * (1.0 - d * d) + 2.0 * a * (m + l) * s + 2.0 * s * s,
        -d * d * s * s,
    )
}

/// Noisy off-by-one endpoint polynomial.
pub fn f_offbyone(t: f64, rho: f64, lambda: f64, gamma: f64, spec: &ProblemSpec) -> f64 {
    let ProblemSpec { m, l, alpha: a, delta: d } = *spec;
    let r2 = rho * rho;
    let s = t - 1.0;
    -a * a * ((l - m).powi(2) - 2.0 * m * l * lambda * (1.0 - d * d)) * r2
        - gamma * gamma * (s + l * a).powi(2)
        + 2.0 * lambda * a * r2 * (l + m) * s
        + lambda * r2 * (2.0 - lambda * d * d) * s * s
        - 2.0 * a * gamma * ((l - m) - m * lambda * (1.0 - d * d)) * (1.0 - a * l - t) * t
        + 2.0 * lambda * gamma * ((1.0 - a * l) * t - r2) * s
}

/// Noisy sector FDI at a circle point, scaled so that `≥ 0` means the FDI holds there.
pub fn sector_circle_value(z: C64, lambda: f64, spec: &ProblemSpec) -> f64 {
    let ProblemSpec { m, l, alpha: a, delta: d } = *spec;
    let w = z - 1.0;
    -a * a * (l - m).powi(2)
        + 2.0 * m * l * a * a * lambda * (1.0 - d * d)
        + 2.0 * a * lambda * (m + l) * w.re
        + lambda * (2.0 - d * d * lambda) * w.norm_sqr()
}

/// Noisy off-by-one FDI at a circle point of radius `|z|`, same sign convention.
pub fn offbyone_circle_value(z: C64, lambda: f64, gamma: f64, spec: &ProblemSpec) -> f64 {
    let ProblemSpec { m, l, alpha: a, delta: d } = *spec;
    let r2 = z.norm_sqr();
    let w = z - 1.0;
    -a * a * ((l - m).powi(2) - 2.0 * m * l * lambda * (1.0 - d * d)) * r2
        - gamma * gamma * (w + l * a).norm_sqr()
        + 2.0 * lambda * a * r2 * (l + m) * w.re
        + lambda * r2 * (2.0 - lambda * d * d) * w.norm_sqr()
        - 2.0 * a * gamma * ((l - m) - m * lambda * (1.0 - d * d)) * ((1.0 - a * l - z) * z.conj()).re
        + 2.0 * lambda * gamma * (((1.0 - a * l) * z - r2) * w).re
}

/// Schur-complement form of the noisy FDI for a base constraint `M`:
/// `W = Gᴴ(SᵀT⁻¹S + Q)G + λ(GᴴSᵀT⁻¹ + T⁻¹SG) + λ²T⁻¹ - λI` with
/// `T = λ(1-δ²)I - R`. The noisy FDI holds at `z` iff `W ≤ 0`.
pub fn generic_noisy_fdi(
    sys: &LtiSystem,
    base: &BlockIqc,
    delta: f64,
    lambda: f64,
    z: C64,
) -> Result<DMatrix<C64>> {
    let n = base.input_dim();
    let t = DMatrix::<f64>::identity(n, n) * (lambda * (1.0 - delta * delta)) - &base.r;
    let t_inv = t
        .try_inverse()
        .ok_or_else(|| invalid("lambda", "λ(1-δ²)I - R is singular"))?;
    let g = transfer(sys, z)?;
    let c = |a: &DMatrix<f64>| a.map(|v| C64::new(v, 0.0));
    let core = base.s.transpose() * &t_inv * &base.s + &base.q;
    let ts = c(&(&t_inv * &base.s)) * &g;
    let lam = C64::new(lambda, 0.0);
    let w = g.adjoint() * c(&core) * &g
        + (ts.adjoint() + &ts) * lam
        + c(&t_inv) * C64::new(lambda * lambda, 0.0)
        - DMatrix::<C64>::identity(n, n) * lam;
    Ok((&w + w.adjoint()) * C64::new(0.5, 0.0))
}

/// Circle point with real part `t` (upper half plane).
pub fn circle_point(t: f64, rho: f64) -> C64 {
    C64::new(t, (rho * rho - t * t).max(0.0).sqrt())
}

/// Largest second difference of the off-by-one circle value on an equispaced
/// grid of `n` real parts spanning `[-ρ, ρ]`; nonpositive means concave.
pub fn offbyone_max_second_difference(rho: f64, lambda: f64, gamma: f64, spec: &ProblemSpec, n: usize) -> f64 {
    let vals: Vec<f64> = (0..n)
        .map(|i| {
            let t = -rho + 2.0 * rho * i as f64 / (n - 1) as f64;
            offbyone_circle_value(circle_point(t, rho), lambda, gamma, spec)
        })
        .collect();
    vals.windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::popov::popov_value;
    use crate::iqc::{noise_augment, off_by_one_matrix, sector_matrix};
    use crate::linalg::hermitian_max_eigenvalue;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(m: f64, l: f64, a: f64, d: f64) -> ProblemSpec {
        ProblemSpec::new(m, l, a, d).unwrap()
    }

    #[test]
    fn zero_multiplier_value() {
        let s = spec(1.0, 10.0, 0.15, 0.1);
        for t in [-0.9, 0.0, 0.5, 1.3] {
            assert!((f_sector(t, 0.0, &s) + 0.15f64.powi(2) * 81.0).abs() < 1e-14);
        }
    }

    #[test]
    fn interior_rate_endpoints_feasible() {
        let s = spec(1.0, 10.0, 0.15, 0.1);
        let rho = crate::rates::interior_rate(&s).unwrap();
        assert!((rho - 0.872673).abs() < 1e-6);
        for t in [rho, -rho] {
            assert!(f_sector(t, 35.0, &s) >= -1e-9);
        }
    }

    #[test]
    fn lambda_coefficients_reproduce_polynomial() {
        let s = spec(0.7, 4.0, 0.3, 0.2);
        for t in [-0.8, 0.1, 0.95] {
            let (c0, c1, c2) = f_sector_lambda_coeffs(t, &s);
            for lam in [0.0, 1.5, 20.0] {
                let v = c0 + c1 * lam + c2 * lam * lam;
                assert!((v - f_sector(t, lam, &s)).abs() < 1e-12 * (1.0 + v.abs()));
            }
        }
    }

    #[test]
    fn offbyone_at_zero_weight_matches_scaled_sector() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let s = spec(1.0, rng.random_range(2.0..50.0), rng.random_range(0.01..0.2), rng.random_range(0.0..0.9));
            let rho = rng.random_range(0.1..1.2);
            let lam = rng.random_range(0.0..10.0);
            let t = rng.random_range(-rho..rho);
            let a = f_offbyone(t, rho, lam, 0.0, &s);
            let b = rho * rho * f_sector(t, lam, &s);
            assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn circle_values_match_endpoint_polynomials_at_real_points() {
        let s = spec(1.0, 10.0, 0.15, 0.1);
        for rho in [0.5, 0.865, 1.0] {
            for t in [rho, -rho] {
                let z = C64::new(t, 0.0);
                assert!((sector_circle_value(z, 20.0, &s) - f_sector(t, 20.0, &s)).abs() < 1e-12);
                let a = offbyone_circle_value(z, 20.0, 0.4, &s);
                assert!((a - f_offbyone(t, rho, 20.0, 0.4, &s)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sector_circle_value_is_rescaled_generic_form() {
        let s = spec(1.0, 10.0, 0.15, 0.1);
        let sys = LtiSystem::gradient_descent(s.alpha, 1);
        let base = sector_matrix(&DMatrix::identity(1, 1), s.m, s.l).unwrap();
        let lam = 35.0;
        let tt = lam * (1.0 - 0.01) + 2.0;
        for j in 1..30 {
            let z = C64::from_polar(0.87, 0.2 * j as f64);
            let w = generic_noisy_fdi(&sys, &base, s.delta, lam, z).unwrap()[(0, 0)].re;
            let scaled = -(z - 1.0).norm_sqr() * tt * w;
            let direct = sector_circle_value(z, lam, &s);
            assert!((scaled - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn offbyone_circle_value_is_rescaled_generic_form() {
        let s = spec(1.0, 10.0, 0.15, 0.1);
        let sys = LtiSystem::gradient_descent(s.alpha, 1).off_by_one(s.l);
        let base = off_by_one_matrix(&DMatrix::identity(1, 1), s.m, s.l, 0.55).unwrap();
        let lam = 35.0;
        let tt = lam * (1.0 - 0.01) + 2.0;
        for j in 1..30 {
            let z = C64::from_polar(0.865, 0.2 * j as f64);
            let w = generic_noisy_fdi(&sys, &base, s.delta, lam, z).unwrap()[(0, 0)].re;
            let scaled = -(z - 1.0).norm_sqr() * z.norm_sqr() * tt * w;
            let direct = offbyone_circle_value(z, lam, 0.55, &s);
            assert!((scaled - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn schur_form_sign_matches_full_noisy_fdi() {
        let s = spec(1.0, 10.0, 0.15, 0.1);
        let sys = LtiSystem::gradient_descent(s.alpha, 1);
        let base = sector_matrix(&DMatrix::identity(1, 1), s.m, s.l).unwrap();
        for (rho, lam) in [(0.88, 35.0), (0.86, 35.0), (0.9, 5.0), (0.95, 150.0)] {
            let full = noise_augment(&base, s.delta, lam).unwrap();
            let sys2 = sys.with_noise_channel();
            for j in 1..24 {
                let z = C64::from_polar(rho, 0.26 * j as f64);
                let top = hermitian_max_eigenvalue(&popov_value(&sys2, &full.iqc, z).unwrap());
                let w = generic_noisy_fdi(&sys, &base, s.delta, lam, z).unwrap()[(0, 0)].re;
                if w.abs() > 1e-9 {
                    assert_eq!(top <= 0.0, w <= 0.0, "rho {rho} lam {lam} z {z}");
                }
            }
        }
    }

    #[test]
    fn offbyone_concave_for_long_steps() {
        let s = spec(1.0, 10.0, 0.15, 0.1);
        assert!(offbyone_max_second_difference(0.865, 35.0, 0.556071, &s, 65) <= 1e-12);
        // quadratic coefficient 4λγ(1 - αL) turns positive for αL < 1
        let short = spec(1.0, 10.0, 0.05, 0.1);
        assert!(offbyone_max_second_difference(0.955, 35.0, 0.5, &short, 65) > 0.0);
    }
}
