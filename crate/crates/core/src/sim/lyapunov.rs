use crate::error::{Error, Result};
use crate::iqc::{iqc_partial_sums, BlockIqc, LtiSystem, Trajectory};
use crate::linalg::kron_identity;
use nalgebra::{DMatrix, DVector};

const REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovReport {
    pub passed: bool,
    /// First index where the one-step dissipation or the decay envelope fails.
    pub first_violation: Option<usize>,
    /// All partial sums of the constraint along the trajectory are nonnegative.
    pub iqc_nonnegative: bool,
    /// `max_k V(k) / (ρ^{2k} V(0))`, including points at rounding level.
    pub envelope_ratio: f64,
}

fn expand(b: &BlockIqc, n: usize) -> BlockIqc {
    BlockIqc {
        q: kron_identity(&b.q, n),
        s: kron_identity(&b.s, n),
        r: kron_identity(&b.r, n),
    }
}

/// Checks `V(k+1) ≤ ρ²V(k) - σ(k)` along the trajectory, with `V(s) = sᵀPs`
/// and `σ` the constraint form, together with the envelope
/// `V(k) ≤ ρ^{2k} V(0)`.
///
/// `sys`, `m` and `p` describe one coordinate; a trajectory in `Rⁿ` uses
/// `P ⊗ Iₙ` and the coordinatewise constraint.
pub fn lyapunov_decay_check(
    traj: &Trajectory,
    sys: &LtiSystem,
    m: &BlockIqc,
    rho: f64,
    p: &DMatrix<f64>,
) -> Result<LyapunovReport> {
    let n = traj.dim();
    let (a, b, mm, pp) = if n == 1 {
        (sys.a.clone(), sys.b.clone(), m.clone(), p.clone())
    } else {
        (kron_identity(&sys.a, n), kron_identity(&sys.b, n), expand(m, n), kron_identity(p, n))
    };
    if pp.shape() != (mm.state_dim(), mm.state_dim()) {
        return Err(Error::DimensionMismatch {
            context: "lyapunov storage",
            expected: format!("{0}x{0}", mm.state_dim()),
            got: format!("{}x{}", pp.nrows(), pp.ncols()),
        });
    }
    let rho2 = rho * rho;
    let states: Vec<(DVector<f64>, DVector<f64>)> = (0..traj.len())
        .map(|k| traj.stacked(k, mm.state_dim(), mm.input_dim()))
        .collect::<Result<_>>()?;
    let v = |s: &DVector<f64>| s.dot(&(&pp * s));
    let size = |s: &DVector<f64>| s.dot(&(pp.abs() * s.abs()));
    let v0 = v(&states[0].0);
    // states near x⋆ are only known to rounding precision of x⋆ itself
    let resolution = 16.0 * f64::EPSILON * (1.0 + traj.x_star.amax()) * (1.0 + a.amax());
    let floor = pp.abs().sum() * resolution * resolution;
    let mut first_violation = None;
    let mut envelope_ratio: f64 = 0.0;
    let mut weight = 1.0;
    for (k, (s, _)) in states.iter().enumerate() {
        let vk = v(s);
        if k > 0 {
            let (sp, wp) = &states[k - 1];
            // the recorded state must follow the plant
            let pred = &a * sp + &b * wp;
            let drift = (&pred - s).amax();
            let sigma = mm.quad_form(sp, wp);
            let scale = size(sp) + size(s) + sp.dot(&(mm.q.abs() * sp.abs())) + wp.dot(&(mm.r.abs() * wp.abs()));
            let bad_step = vk > rho2 * v(sp) - sigma + REL_TOL * scale + floor;
            if (bad_step || drift > 1e-9 * (1.0 + s.amax())) && first_violation.is_none() {
                first_violation = Some(k - 1);
            }
        }
        if v0 > 0.0 {
            let ratio = vk / (weight * v0);
            envelope_ratio = envelope_ratio.max(ratio);
            if vk > (1.0 + REL_TOL) * weight * v0 + floor && first_violation.is_none() {
                first_violation = Some(k);
            }
        } else if (vk < 0.0 || v0 < 0.0) && first_violation.is_none() {
            first_violation = Some(k);
        }
        weight *= rho2;
    }
    let sums = iqc_partial_sums(traj, &mm, rho)?;
    Ok(LyapunovReport {
        passed: first_violation.is_none(),
        first_violation,
        iqc_nonnegative: sums.all_nonnegative(REL_TOL),
        envelope_ratio,
    })
}
