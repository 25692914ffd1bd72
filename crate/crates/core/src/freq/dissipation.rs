//! Dissipation inequality `[[AᵀPA - ρ²P, AᵀPB], [BᵀPA, BᵀPB]] + M ≤ 0`, `P > 0`.

pub use super::certify::CertificateKind as DissipationKind;
use crate::error::{invalid, Result};
use crate::iqc::{noise_augment, off_by_one_matrix, sector_matrix, BlockIqc, LtiSystem};
use crate::linalg::{max_eigenvalue, min_eigenvalue, nelder_mead, symmetrize};
use crate::rates::ProblemSpec;
use nalgebra::DMatrix;

/// Required strict margin on the largest LMI eigenvalue.
pub const LMI_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DissipationReport {
    pub feasible: bool,
    pub max_eigenvalue: f64,
    pub p_min_eigenvalue: f64,
}

pub fn lmi_matrix(sys: &LtiSystem, m: &BlockIqc, rho: f64, p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let ns = sys.state_dim();
    if p.shape() != (ns, ns) || m.state_dim() != ns || m.input_dim() != sys.input_dim() {
        return Err(invalid("P", format!("expected {ns}x{ns} with matching constraint")));
    }
    let pa = p * &sys.a;
    let pb = p * &sys.b;
    let nu = sys.input_dim();
    let mut out = m.assemble();
    let tl = sys.a.transpose() * &pa - p * (rho * rho);
    let tr = sys.a.transpose() * &pb;
    let br = sys.b.transpose() * &pb;
    let mut view = out.view_mut((0, 0), (ns, ns));
    view += &tl;
    let mut view = out.view_mut((0, ns), (ns, nu));
    view += &tr;
    let mut view = out.view_mut((ns, 0), (nu, ns));
    view += &tr.transpose();
    let mut view = out.view_mut((ns, ns), (nu, nu));
    view += &br;
    Ok(symmetrize(&out))
}

/// Checks `P > 0` and the dissipation LMI (largest eigenvalue `≤ 0`).
pub fn dissipation_verify(sys: &LtiSystem, m: &BlockIqc, rho: f64, p: &DMatrix<f64>) -> Result<DissipationReport> {
    let lmi = lmi_matrix(sys, m, rho, p)?;
    let max_eigenvalue = max_eigenvalue(&lmi);
    let p_min_eigenvalue = min_eigenvalue(&symmetrize(p));
    Ok(DissipationReport {
        feasible: p_min_eigenvalue > 0.0 && max_eigenvalue <= 0.0,
        max_eigenvalue,
        p_min_eigenvalue,
    })
}


/// A storage matrix together with the multipliers it was found with.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationCertificate {
    pub kind: DissipationKind,
    pub rho: f64,
    pub p: DMatrix<f64>,
    pub lambda: f64,
    pub gamma: Option<f64>,
    pub max_eigenvalue: f64,
    pub sys: LtiSystem,
    pub iqc: BlockIqc,
}

struct Problem {
    kind: DissipationKind,
    spec: ProblemSpec,
    rho: f64,
    lam_max: f64,
}

impl Problem {
    fn system(&self) -> LtiSystem {
        let gd = LtiSystem::gradient_descent(self.spec.alpha, 1);
        match self.kind {
            DissipationKind::SectorNoiseless => gd,
            DissipationKind::SectorNoisy => gd.with_noise_channel(),
            DissipationKind::OffByOneNoisy => gd.off_by_one_with_noise(self.spec.l),
        }
    }

    /// `(P, λ, γ)` from the search vector; `None` outside the admissible box.
    fn decode(&self, x: &[f64]) -> Option<(DMatrix<f64>, f64, Option<f64>)> {
        let (p, rest) = match self.kind {
            DissipationKind::OffByOneNoisy => (DMatrix::from_row_slice(2, 2, &[x[0], x[1], x[1], x[2]]), &x[3..]),
            _ => (DMatrix::from_element(1, 1, x[0]), &x[1..]),
        };
        let lambda = rest.first().copied().unwrap_or(0.0);
        if !(0.0..=self.lam_max).contains(&lambda) {
            return None;
        }
        let gamma = rest.get(1).copied();
        if let Some(g) = gamma {
            if !(0.0..=self.rho * self.rho).contains(&g) {
                return None;
            }
        }
        Some((p, lambda, gamma))
    }

    fn constraint(&self, lambda: f64, gamma: Option<f64>) -> Result<BlockIqc> {
        let c = DMatrix::identity(1, 1);
        let (m, l, d) = (self.spec.m, self.spec.l, self.spec.delta);
        Ok(match self.kind {
            DissipationKind::SectorNoiseless => sector_matrix(&c, m, l)?,
            DissipationKind::SectorNoisy => noise_augment(&sector_matrix(&c, m, l)?, d, lambda)?.iqc,
            DissipationKind::OffByOneNoisy => {
                noise_augment(&off_by_one_matrix(&c, m, l, gamma.unwrap_or(0.0))?, d, lambda)?.iqc
            }
        })
    }

    fn objective(&self, sys: &LtiSystem, x: &[f64]) -> f64 {
        let Some((p, lambda, gamma)) = self.decode(x) else {
            return f64::INFINITY;
        };
        let Ok(m) = self.constraint(lambda, gamma) else {
            return f64::INFINITY;
        };
        let pmin = min_eigenvalue(&p);
        let lmi = lmi_matrix(sys, &m, self.rho, &p).map(|a| max_eigenvalue(&a)).unwrap_or(f64::INFINITY);
        if pmin <= 0.0 {
            lmi.max(0.0) + 1.0 - pmin
        } else {
            lmi
        }
    }

    fn starts(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        let lam_grid: Vec<f64> = match self.kind {
            DissipationKind::SectorNoiseless => vec![0.0],
            _ => [0.05, 0.2, 0.5]
                .iter()
                .map(|f| f * self.lam_max.min(400.0))
                .collect(),
        };
        let mut out = Vec::new();
        for &lam in &lam_grid {
            for &p in &[0.3, 3.0, 30.0] {
                let (x, step) = match self.kind {
                    DissipationKind::SectorNoiseless => (vec![p], vec![p]),
                    DissipationKind::SectorNoisy => (vec![p, lam], vec![p, lam.max(1.0)]),
                    DissipationKind::OffByOneNoisy => {
                        let g = 0.5 * self.rho * self.rho;
                        (
                            vec![p, 0.0, p / self.spec.l.powi(2), lam, g],
                            vec![p, 0.1 * p, p / self.spec.l.powi(2), lam.max(1.0), 0.5 * g],
                        )
                    }
                };
                out.push((x, step));
            }
        }
        out
    }
}

/// Searches a storage function for the scalar gradient-descent plant, with
/// `P` a scalar (sector) or a 2×2 block (off-by-one augmented state).
///
/// The LMI is jointly affine in `(P, λ, γ)`, so the largest eigenvalue is a
/// convex function of the search vector; Nelder–Mead with restarts minimizes it.
pub fn dissipation_search_scalar(
    spec: &ProblemSpec,
    rho: f64,
    kind: DissipationKind,
) -> Result<Option<DissipationCertificate>> {
    spec.validate()?;
    if !(rho.is_finite() && rho > 0.0) {
        return Err(invalid("rho", format!("must be positive, got {rho}")));
    }
    if kind != DissipationKind::SectorNoiseless && spec.delta == 0.0 {
        return Err(invalid("delta", "noisy dissipation search needs delta > 0"));
    }
    let problem = Problem {
        kind,
        spec: *spec,
        rho,
        lam_max: if spec.delta > 0.0 { 2.0 / (spec.delta * spec.delta) } else { 0.0 },
    };
    let sys = problem.system();
    let f = |x: &[f64]| problem.objective(&sys, x);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for (start, step) in problem.starts() {
        let mut x = start;
        let mut val = f(&x);
        let mut step = step;
        for _ in 0..6 {
            let (nx, nv) = nelder_mead(f, &x, &step, 4000);
            let stalled = nv >= val - 1e-14 * (1.0 + val.abs());
            x = nx;
            val = nv;
            if val <= -LMI_MARGIN && stalled {
                break;
            }
            step = x.iter().map(|v| 0.2 * v.abs().max(1e-3)).collect();
        }
        if best.as_ref().is_none_or(|b| val < b.1) {
            best = Some((x, val));
        }
        if val <= -10.0 * LMI_MARGIN {
            break;
        }
    }
    let Some((x, _)) = best else { return Ok(None) };
    let Some((p, lambda, gamma)) = problem.decode(&x) else {
        return Ok(None);
    };
    let iqc = problem.constraint(lambda, gamma)?;
    let report = dissipation_verify(&sys, &iqc, rho, &p)?;
    if !(report.p_min_eigenvalue > 0.0 && report.max_eigenvalue <= -LMI_MARGIN) {
        return Ok(None);
    }
    Ok(Some(DissipationCertificate {
        kind,
        rho,
        p,
        lambda,
        gamma,
        max_eigenvalue: report.max_eigenvalue,
        sys,
        iqc,
    }))
}
