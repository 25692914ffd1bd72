use crate::error::{invalid, Error, Result};
use crate::iqc::{BlockIqc, LtiSystem};
use crate::linalg::{hermitian_max_eigenvalue, C64};
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// A point on the circle `|z| = ρ` and the Popov matrix there.
#[derive(Debug, Clone, PartialEq)]
pub struct PopovSample {
    pub z: C64,
    pub value: DMatrix<C64>,
}

fn complexify(a: &DMatrix<f64>) -> DMatrix<C64> {
    a.map(|v| C64::new(v, 0.0))
}

/// `G(z) = (zI - A)⁻¹B`.
pub fn transfer(sys: &LtiSystem, z: C64) -> Result<DMatrix<C64>> {
    let n = sys.state_dim();
    let shifted = DMatrix::<C64>::identity(n, n) * z - complexify(&sys.a);
    let scale = (z.norm() + sys.a.amax() * n as f64).max(1.0).powi(n as i32);
    let lu = shifted.lu();
    if lu.determinant().norm() <= 1e-12 * scale {
        return Err(Error::EigenvalueOnCircle { re: z.re, im: z.im });
    }
    lu.solve(&complexify(&sys.b))
        .ok_or(Error::EigenvalueOnCircle { re: z.re, im: z.im })
}

fn check_dims(sys: &LtiSystem, m: &BlockIqc) -> Result<()> {
    if m.state_dim() != sys.state_dim() || m.input_dim() != sys.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "popov_value",
            expected: format!("state {}, input {}", sys.state_dim(), sys.input_dim()),
            got: format!("state {}, input {}", m.state_dim(), m.input_dim()),
        });
    }
    Ok(())
}

/// `Π = GᴴQG + GᴴSᵀ + SG + R` with `G = (zI - A)⁻¹B`.
pub fn popov_value(sys: &LtiSystem, m: &BlockIqc, z: C64) -> Result<DMatrix<C64>> {
    check_dims(sys, m)?;
    let g = transfer(sys, z)?;
    let gh = g.adjoint();
    let sg = complexify(&m.s) * &g;
    let pi = &gh * complexify(&m.q) * &g + sg.adjoint() + sg + complexify(&m.r);
    Ok((&pi + pi.adjoint()) * C64::new(0.5, 0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdiReport {
    pub holds: bool,
    /// Circle point with the largest top eigenvalue.
    pub worst_z: C64,
    pub worst_eigenvalue: f64,
    /// Points skipped because they are eigenvalues of `A`.
    pub skipped: usize,
}

/// Checks `Π(z) ≤ 0` at `n_samples` equispaced points of `|z| = ρ`, starting at `z = ρ`.
pub fn fdi_sampled(sys: &LtiSystem, m: &BlockIqc, rho: f64, n_samples: usize) -> Result<FdiReport> {
    if n_samples < 16 {
        return Err(invalid("n_samples", format!("need at least 16, got {n_samples}")));
    }
    if !(rho.is_finite() && rho > 0.0) {
        return Err(invalid("rho", format!("must be positive, got {rho}")));
    }
    check_dims(sys, m)?;
    let tol = 1e-9 * m.scale().max(1.0);
    let mut report = FdiReport {
        holds: true,
        worst_z: C64::new(rho, 0.0),
        worst_eigenvalue: f64::NEG_INFINITY,
        skipped: 0,
    };
    for j in 0..n_samples {
        let z = C64::from_polar(rho, 2.0 * PI * j as f64 / n_samples as f64);
        let value = match popov_value(sys, m, z) {
            Ok(v) => v,
            Err(Error::EigenvalueOnCircle { .. }) => {
                report.skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let top = hermitian_max_eigenvalue(&value);
        if top > report.worst_eigenvalue {
            report.worst_eigenvalue = top;
            report.worst_z = z;
        }
    }
    report.holds = report.worst_eigenvalue <= tol;
    Ok(report)
}

pub fn sample_circle(sys: &LtiSystem, m: &BlockIqc, rho: f64, n: usize) -> Vec<PopovSample> {
    (0..n)
        .filter_map(|j| {
            let z = C64::from_polar(rho, 2.0 * PI * j as f64 / n as f64);
            popov_value(sys, m, z).ok().map(|value| PopovSample { z, value })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iqc::{noise_augment, sector_matrix};

    fn gd_sector(alpha: f64) -> (LtiSystem, BlockIqc) {
        let sys = LtiSystem::gradient_descent(alpha, 1);
        let m = sector_matrix(&DMatrix::identity(1, 1), 1.0, 10.0).unwrap();
        (sys, m)
    }

    #[test]
    fn tight_point_value_is_zero() {
        let (sys, m) = gd_sector(2.0 / 11.0);
        let z = C64::new(-9.0 / 11.0, 0.0);
        let h = -(2.0 / 11.0) / (z.re - 1.0);
        assert!((h - 0.1).abs() < 1e-15);
        let pi = popov_value(&sys, &m, z).unwrap();
        let oracle = -(z.re - 1.0 + 10.0 * 2.0 / 11.0) * (z.re - 1.0 + 2.0 / 11.0) / (z.re - 1.0).powi(2) * 2.0;
        assert!(pi[(0, 0)].re.abs() < 1e-14);
        assert!((pi[(0, 0)].re - oracle).abs() < 1e-14);
    }

    #[test]
    fn popov_matches_factored_scalar_form() {
        let alpha = 0.13;
        let (sys, m) = gd_sector(alpha);
        for j in 1..40 {
            let z = C64::from_polar(0.9, 0.16 * j as f64);
            let h = C64::new(-alpha, 0.0) / (z - 1.0);
            // 2Re((L·h - 1)(1 - m·h)*) with h ↦ u-to-y gain
            let oracle = 2.0 * ((h * 10.0 - 1.0) * (C64::new(1.0, 0.0) - h).conj()).re;
            let pi = popov_value(&sys, &m, z).unwrap();
            assert!((pi[(0, 0)].re - oracle).abs() < 1e-12, "{z}");
            assert!(pi[(0, 0)].im.abs() < 1e-15);
        }
    }

    #[test]
    fn eigenvalue_point_rejected() {
        let (sys, m) = gd_sector(0.1);
        assert!(matches!(
            popov_value(&sys, &m, C64::new(1.0, 0.0)),
            Err(Error::EigenvalueOnCircle { .. })
        ));
    }

    #[test]
    fn zero_constraint_gives_zero() {
        let sys = LtiSystem::gradient_descent(0.1, 2);
        let m = BlockIqc::new(DMatrix::zeros(2, 2), DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)).unwrap();
        let pi = popov_value(&sys, &m, C64::new(0.3, 0.4)).unwrap();
        assert!(pi.iter().all(|v| *v == C64::new(0.0, 0.0)));
    }

    #[test]
    fn sampled_fdi_noiseless_gd() {
        let (sys, m) = gd_sector(2.0 / 11.0);
        let ok = fdi_sampled(&sys, &m, 9.0 / 11.0, 64).unwrap();
        assert!(ok.holds);
        assert!(ok.worst_eigenvalue.abs() < 1e-12);
        let bad = fdi_sampled(&sys, &m, 0.8, 64).unwrap();
        assert!(!bad.holds);
        let short = gd_sector(0.1);
        let r = fdi_sampled(&short.0, &short.1, 0.85, 64).unwrap();
        assert!(!r.holds);
        assert!((r.worst_z.re - 0.85).abs() < 1e-12);
        assert!(fdi_sampled(&sys, &m, 0.8, 8).is_err());
    }

    #[test]
    fn negative_definite_constraint_always_holds() {
        let sys = LtiSystem::gradient_descent(0.7, 1).off_by_one(3.0);
        let m = BlockIqc::new(-DMatrix::identity(2, 2), DMatrix::zeros(1, 2), -DMatrix::identity(1, 1)).unwrap();
        for rho in [0.2, 0.9, 1.5] {
            assert!(fdi_sampled(&sys, &m, rho, 32).unwrap().holds);
        }
    }

    #[test]
    fn unit_circle_skips_the_pole() {
        let (sys, m) = gd_sector(0.1);
        let r = fdi_sampled(&sys, &m, 1.0, 16).unwrap();
        assert_eq!(r.skipped, 1);
    }

    #[test]
    fn noisy_popov_is_hermitian() {
        let (sys, m) = gd_sector(0.15);
        let noisy = noise_augment(&m, 0.1, 35.0).unwrap();
        let sys2 = sys.with_noise_channel();
        for s in sample_circle(&sys2, &noisy.iqc, 0.87, 20) {
            let diff = &s.value - s.value.adjoint();
            assert!(diff.iter().all(|v| v.norm() < 1e-12));
        }
    }
}
