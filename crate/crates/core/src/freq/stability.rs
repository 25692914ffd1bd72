use crate::iqc::{BlockIqc, LtiSystem};
use crate::linalg::{min_eigenvalue, spectral_radius, symmetrize};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Feedback `u = (N + ε(S + RN))x` under which the closed loop is ρ-Schur
/// and the constraint form stays nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityWitness {
    /// Scalar multiple of the output map used as `N`.
    #[serde(rename = "N_scalar")]
    pub n_scalar: f64,
    pub epsilon: f64,
}

/// Both eigenvalues of a 2×2 matrix lie strictly inside `|z| < ρ`.
///
/// With `p(z) = z² - tz + d`, the rescaled polynomial `p(ρz)/ρ²` is Schur iff
/// `|t|/ρ < 1 + d/ρ²` and `|d|/ρ² < 1`.
pub fn schur_test(a: &DMatrix<f64>, rho: f64) -> bool {
    assert_eq!(a.shape(), (2, 2), "schur_test expects a 2x2 matrix");
    if !(rho > 0.0) {
        return false;
    }
    let tr = a[(0, 0)] + a[(1, 1)];
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let (t, d) = (tr / rho, det / (rho * rho));
    t.abs() < 1.0 + d && d.abs() < 1.0
}

fn is_rho_schur(a: &DMatrix<f64>, rho: f64) -> bool {
    match a.nrows() {
        1 => a[(0, 0)].abs() < rho,
        2 => schur_test(a, rho),
        _ => spectral_radius(a) < rho,
    }
}

fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    let ata = a.transpose() * a;
    crate::linalg::max_eigenvalue(&ata).max(0.0).sqrt()
}

/// Searches `ε ∈ {0} ∪ {2⁻ʲ}` (largest first, capped at `2/‖R‖`) for a
/// ρ-Schur closed loop `A + B(N + ε(S + RN))` with `N = n_scalar · C`.
///
/// Requires `Q + 2Re(SᴴN) + NᴴRN ≥ 0`. The same feedback with zero noise is a
/// witness for every noise augmentation of `M`.
pub fn minimal_stability_witness(
    sys: &LtiSystem,
    m: &BlockIqc,
    rho: f64,
    n_scalar: f64,
) -> Option<StabilityWitness> {
    let n = &sys.c * n_scalar;
    if n.shape() != (m.input_dim(), m.state_dim()) || sys.input_dim() != m.input_dim() {
        return None;
    }
    let sn = m.s.transpose() * &n;
    let base = symmetrize(&(&m.q + &sn + sn.transpose() + n.transpose() * &m.r * &n));
    if min_eigenvalue(&base) < -1e-12 * (1.0 + m.scale()) {
        return None;
    }
    let slope = &m.s + &m.r * &n;
    let r_norm = spectral_norm(&m.r);
    let cap = if r_norm > 0.0 { 2.0 / r_norm } else { f64::INFINITY };
    let closed = |eps: f64| &sys.a + &sys.b * (&n + &slope * eps);
    if is_rho_schur(&closed(0.0), rho) {
        return Some(StabilityWitness { n_scalar, epsilon: 0.0 });
    }
    (0..=60)
        .map(|j| 0.5f64.powi(j))
        .filter(|&eps| eps <= cap)
        .find(|&eps| is_rho_schur(&closed(eps), rho))
        .map(|epsilon| StabilityWitness { n_scalar, epsilon })
}
