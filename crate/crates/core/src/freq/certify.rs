//! Certificate construction for gradient descent with relative gradient noise.

use super::endpoint::{
    f_noiseless, f_offbyone, f_sector, f_sector_lambda_coeffs, offbyone_max_second_difference,
};
use super::stability::{minimal_stability_witness, StabilityWitness};
use crate::error::{Error, Result};
use crate::iqc::{off_by_one_matrix, sector_matrix, LtiSystem};
use crate::rates::{rho_gd_noisy, ProblemSpec};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Relative endpoint tolerance: values must exceed `-ENDPOINT_TOL·α²L²(1+λ)`.
pub const ENDPOINT_TOL: f64 = 1e-9;
/// Resolution of the rate bisection.
pub const BISECTION_TOL: f64 = 1e-10;
const CONCAVITY_GRID: usize = 65;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CertificateKind {
    SectorNoiseless,
    SectorNoisy,
    OffByOneNoisy,
}

impl CertificateKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CertificateKind::SectorNoiseless => "sector-noiseless",
            CertificateKind::SectorNoisy => "sector-noisy",
            CertificateKind::OffByOneNoisy => "off-by-one-noisy",
        }
    }
}

/// A certified rate with its multipliers and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub rho: f64,
    pub lambda: f64,
    pub gamma: Option<f64>,
    pub kind: CertificateKind,
    /// FDI values at `z = +ρ` and `z = -ρ`.
    pub endpoint_values: (f64, f64),
    pub witness: Option<StabilityWitness>,
}

impl Certificate {
    pub fn converges(&self) -> bool {
        self.rho < 1.0
    }
}

/// Tolerance scale `α²L²(1+λ)`.
pub fn endpoint_scale(spec: &ProblemSpec, lambda: f64) -> f64 {
    (spec.alpha * spec.l).powi(2) * (1.0 + lambda)
}

fn scalar_c() -> DMatrix<f64> {
    DMatrix::identity(1, 1)
}

fn sector_witness(spec: &ProblemSpec, rho: f64) -> Option<StabilityWitness> {
    let sys = LtiSystem::gradient_descent(spec.alpha, 1);
    let m = sector_matrix(&scalar_c(), spec.m, spec.l).ok()?;
    minimal_stability_witness(&sys, &m, rho, spec.m)
}

/// Circle-criterion certificate at rate `ρ` without noise.
pub fn certify_sector_noiseless(spec: &ProblemSpec, rho: f64) -> Result<Option<Certificate>> {
    spec.validate()?;
    let spec = spec.with_delta(0.0);
    let endpoints = (f_noiseless(rho, &spec), f_noiseless(-rho, &spec));
    let tol = -ENDPOINT_TOL * endpoint_scale(&spec, 0.0);
    if endpoints.0 < tol || endpoints.1 < tol {
        return Ok(None);
    }
    Ok(sector_witness(&spec, rho).map(|w| Certificate {
        rho,
        lambda: 0.0,
        gamma: None,
        kind: CertificateKind::SectorNoiseless,
        endpoint_values: endpoints,
        witness: Some(w),
    }))
}

/// `{λ ≥ 0 : c0 + c1λ + c2λ² ≥ -τ(1+λ)}` intersected with `[0, hi]`.
fn quadratic_superlevel(c0: f64, c1: f64, c2: f64, tau: f64, hi: f64) -> Option<(f64, f64)> {
    let (a, b, c) = (c2, c1 + tau, c0 + tau);
    let (lo_root, hi_root) = if a == 0.0 {
        if b > 0.0 {
            (-c / b, f64::INFINITY)
        } else if b < 0.0 {
            (f64::NEG_INFINITY, -c / b)
        } else if c >= 0.0 {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            return None;
        }
    } else {
        // a < 0: the set between the roots
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
        (r1.min(r2), r1.max(r2))
    };
    let (lo, up) = (lo_root.max(0.0), hi_root.min(hi));
    (lo <= up).then_some((lo, up))
}

/// Feasible multiplier range for the noisy sector endpoint test at rate `ρ`.
fn sector_lambda_range(spec: &ProblemSpec, rho: f64, tau: f64) -> Option<(f64, f64)> {
    let hi = 2.0 / (spec.delta * spec.delta);
    let (p0, p1, p2) = f_sector_lambda_coeffs(rho, spec);
    let (n0, n1, n2) = f_sector_lambda_coeffs(-rho, spec);
    let a = quadratic_superlevel(p0, p1, p2, tau, hi)?;
    let b = quadratic_superlevel(n0, n1, n2, tau, hi)?;
    let (lo, up) = (a.0.max(b.0), a.1.min(b.1));
    (lo <= up).then_some((lo, up))
}

/// The multiplier in `[lo, hi]` maximizing the smaller endpoint value.
fn best_lambda(spec: &ProblemSpec, rho: f64, lo: f64, hi: f64) -> f64 {
    let worst = |lam: f64| f_sector(rho, lam, spec).min(f_sector(-rho, lam, spec));
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if worst(m1) < worst(m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    let mid = 0.5 * (a + b);
    [lo, hi, mid]
        .into_iter()
        .max_by(|x, y| worst(*x).total_cmp(&worst(*y)))
        .unwrap_or(mid)
}

fn sector_noisy_at(spec: &ProblemSpec, rho: f64) -> Option<Certificate> {
    let tau = ENDPOINT_TOL * (spec.alpha * spec.l).powi(2);
    let (lo, hi) = sector_lambda_range(spec, rho, tau)?;
    let lambda = best_lambda(spec, rho, lo, hi);
    let endpoints = (f_sector(rho, lambda, spec), f_sector(-rho, lambda, spec));
    let floor = -ENDPOINT_TOL * endpoint_scale(spec, lambda);
    if endpoints.0 < floor || endpoints.1 < floor {
        return None;
    }
    let witness = sector_witness(spec, rho)?;
    Some(Certificate {
        rho,
        lambda,
        gamma: None,
        kind: CertificateKind::SectorNoisy,
        endpoint_values: endpoints,
        witness: Some(witness),
    })
}

/// Decides whether the noisy sector FDI certifies rate `ρ`.
///
/// Rates below the quadratic lower bound are rejected outright.
pub fn certify_sector_noisy(spec: &ProblemSpec, rho: f64) -> Result<Option<Certificate>> {
    spec.validate()?;
    if spec.delta == 0.0 {
        return certify_sector_noiseless(spec, rho);
    }
    if !(rho.is_finite() && rho > 0.0) || rho < rho_gd_noisy(spec) * (1.0 - 1e-12) {
        return Ok(None);
    }
    Ok(sector_noisy_at(spec, rho))
}

fn strictly_feasible(spec: &ProblemSpec, rho: f64) -> bool {
    sector_lambda_range(spec, rho, 0.0).is_some()
}

/// Smallest rate certified by the noisy sector FDI, to [`BISECTION_TOL`].
pub fn rho_star_sector(spec: &ProblemSpec) -> Result<Certificate> {
    spec.validate()?;
    let lower = rho_gd_noisy(spec);
    if spec.delta == 0.0 {
        return certify_sector_noiseless(spec, lower)?
            .ok_or_else(|| Error::Infeasible(format!("no witness at rate {lower}")));
    }
    if let Some(cert) = sector_noisy_at(spec, lower) {
        return Ok(cert);
    }
    let top = 2.0f64.max(2.0 * lower);
    if !strictly_feasible(spec, top) {
        return Err(Error::Infeasible(format!("sector FDI fails up to rate {top}")));
    }
    let (mut lo, mut hi) = (lower, top);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if strictly_feasible(spec, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    sector_noisy_at(spec, hi).ok_or_else(|| Error::Infeasible(format!("no certificate at rate {hi}")))
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StronglyConvexOptions {
    /// Build the off-by-one certificate even outside `1/L ≤ α ≤ 2/((1+δ)L+(1-δ)m)`
    /// and report its diagnostics instead of falling back. Not backed by a theorem.
    pub allow_outside_window: bool,
}

/// `λ⋆ = (2 - α(L+m))/δ²`.
pub fn offbyone_lambda_star(spec: &ProblemSpec) -> f64 {
    (2.0 - spec.alpha * (spec.l + spec.m)) / (spec.delta * spec.delta)
}

/// `γ⋆ = ρ⋆(κ - 1 + (κ+1)(δ - ρ⋆)) / ((κ - (1-δ))δ)` with `ρ⋆ = 1 - αm(1-δ)`.
pub fn offbyone_gamma_star(spec: &ProblemSpec) -> f64 {
    let k = spec.kappa();
    let d = spec.delta;
    let rho = 1.0 - spec.alpha * spec.m * (1.0 - d);
    rho * (k - 1.0 + (k + 1.0) * (d - rho)) / ((k - (1.0 - d)) * d)
}

/// Off-by-one certificate at the quadratic lower bound, or the sector
/// fallback outside the step-size window.
pub fn certify_strongly_convex(spec: &ProblemSpec) -> Result<Option<Certificate>> {
    certify_strongly_convex_with(spec, StronglyConvexOptions::default())
}

pub fn certify_strongly_convex_with(
    spec: &ProblemSpec,
    opts: StronglyConvexOptions,
) -> Result<Option<Certificate>> {
    spec.validate()?;
    if spec.delta == 0.0 {
        return certify_sector_noiseless(spec, rho_gd_noisy(spec));
    }
    if !spec.in_strongly_convex_window() && !opts.allow_outside_window {
        return rho_star_sector(spec).map(Some);
    }
    let rho = 1.0 - spec.alpha * spec.m * (1.0 - spec.delta);
    let lambda = offbyone_lambda_star(spec);
    let gamma = offbyone_gamma_star(spec);
    let lam_max = 2.0 / (spec.delta * spec.delta);
    if !(lambda > 0.0 && lambda < lam_max && gamma > 0.0 && gamma < rho * rho) {
        return Ok(None);
    }
    let endpoints = (
        f_offbyone(rho, rho, lambda, gamma, spec),
        f_offbyone(-rho, rho, lambda, gamma, spec),
    );
    let floor = -ENDPOINT_TOL * endpoint_scale(spec, lambda);
    if endpoints.0 < floor || endpoints.1 < floor {
        return Ok(None);
    }
    let curvature = offbyone_max_second_difference(rho, lambda, gamma, spec, CONCAVITY_GRID);
    if curvature > ENDPOINT_TOL * endpoint_scale(spec, lambda) {
        return Ok(None);
    }
    let sys = LtiSystem::gradient_descent(spec.alpha, 1).off_by_one(spec.l);
    let m = off_by_one_matrix(&scalar_c(), spec.m, spec.l, gamma)?;
    let Some(witness) = minimal_stability_witness(&sys, &m, rho, spec.m) else {
        return Ok(None);
    };
    Ok(Some(Certificate {
        rho,
        lambda,
        gamma: Some(gamma),
        kind: CertificateKind::OffByOneNoisy,
        endpoint_values: endpoints,
        witness: Some(witness),
    }))
}
