//! End-to-end cross-check of one certificate: closed form, endpoint
//! identities, minimal stability, a storage function at a slightly larger
//! rate, Lyapunov decay along simulated runs and the lower-bound gap.

use crate::error::Result;
use crate::freq::certify::{Certificate, CertificateKind, ENDPOINT_TOL};
use crate::freq::dissipation::{dissipation_search_scalar, DissipationCertificate};
use crate::freq::endpoint::{f_noiseless, f_offbyone, f_sector, offbyone_circle_value, sector_circle_value};
use crate::freq::stability::minimal_stability_witness;
use crate::iqc::{off_by_one_matrix, sector_matrix, LtiSystem};
use crate::linalg::C64;
use crate::rates::{classify_regime, FunctionClass, ProblemSpec, RegimeKind};
use crate::registry::{certifiers, functions, policies};
use crate::sim::lyapunov::lyapunov_decay_check;
use crate::sim::run::{lower_bound_witness, run_inexact_gd};
use nalgebra::{DMatrix, DVector};

/// Margin added to the certified rate for the storage-function search.
pub const DISSIPATION_SLACK: f64 = 1e-3;
pub const LYAPUNOV_STEPS: usize = 300;
const TIGHT_TOL: f64 = 1e-8;
const INTERIOR_TOL: f64 = 1e-6;
const IDENTITY_TOL: f64 = 1e-10;
const GAP_TOL: f64 = 1e-9;

pub const STAGES: [&str; 6] = [
    "closed-form",
    "endpoints",
    "minimal-stability",
    "dissipation",
    "lyapunov",
    "witness-gap",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Test hook: flip the sign of the storage matrix before the decay check.
    pub corrupt_storage: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub certificate: Certificate,
    pub regime: RegimeKind,
    pub stages: Vec<StageResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.stages.iter().all(|s| s.passed)
    }

    pub fn first_failure(&self) -> Option<&StageResult> {
        self.stages.iter().find(|s| !s.passed)
    }
}

fn stage(name: &'static str, passed: bool, detail: String) -> StageResult {
    StageResult { name, passed, detail }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn closed_form(spec: &ProblemSpec, class: FunctionClass, cert: &Certificate) -> Result<StageResult> {
    let regime = classify_regime(spec, class);
    let tol = if regime.kind.is_tight() { TIGHT_TOL } else { INTERIOR_TOL };
    let mut ok = rel_close(cert.rho, regime.certified_rho, tol);
    let mut detail = format!(
        "certified {:.12} vs closed form {:.12} ({})",
        cert.rho,
        regime.certified_rho,
        regime.kind.as_str()
    );
    if class == FunctionClass::StronglyConvex {
        let sector = certifiers().get(FunctionClass::Sector.as_str())?.certify(spec)?;
        ok &= cert.rho <= sector.rho + tol;
        detail.push_str(&format!("; sector rate {:.12}", sector.rho));
    }
    Ok(stage("closed-form", ok, detail))
}

fn endpoints(spec: &ProblemSpec, cert: &Certificate) -> StageResult {
    let rho = cert.rho;
    let (lam, d, a) = (cert.lambda, spec.delta, spec.alpha);
    let (m, l) = (spec.m, spec.l);
    let scale = (a * l).powi(2) * (1.0 + lam);
    let near = |x: f64, y: f64| (x - y).abs() <= IDENTITY_TOL * scale.max(x.abs()).max(y.abs());
    let z = |t: f64| C64::new(t, 0.0);
    let (recomputed, mut checks): ((f64, f64), Vec<(&str, bool)>) = match cert.kind {
        CertificateKind::SectorNoiseless => ((f_noiseless(rho, spec), f_noiseless(-rho, spec)), Vec::new()),
        CertificateKind::SectorNoisy => {
            let lo = 1.0 - a * m * (1.0 - d);
            let hi = 1.0 - a * l * (1.0 + d);
            let sq_lo = -(a * (l + m * (d * d * lam - d * lam - 1.0))).powi(2);
            let sq_hi = -(a * (m + l * (d * d * lam + d * lam - 1.0))).powi(2);
            (
                (f_sector(rho, lam, spec), f_sector(-rho, lam, spec)),
                vec![
                    ("square at 1-αm(1-δ)", near(f_sector(lo, lam, spec), sq_lo)),
                    ("square at 1-αL(1+δ)", near(f_sector(hi, lam, spec), sq_hi)),
                    ("circle at +ρ", near(sector_circle_value(z(rho), lam, spec), f_sector(rho, lam, spec))),
                    ("circle at -ρ", near(sector_circle_value(z(-rho), lam, spec), f_sector(-rho, lam, spec))),
                ],
            )
        }
        CertificateKind::OffByOneNoisy => {
            let g = cert.gamma.unwrap_or(0.0);
            let sq = -(a * (rho * (l - m * (1.0 + d * lam - d * d * lam)) - g * (l - m * (1.0 - d)))).powi(2);
            let plus = f_offbyone(rho, rho, lam, g, spec);
            let minus = f_offbyone(-rho, rho, lam, g, spec);
            (
                (plus, minus),
                vec![
                    ("square at ρ", near(plus, sq)),
                    ("circle at +ρ", near(offbyone_circle_value(z(rho), lam, g, spec), plus)),
                    ("circle at -ρ", near(offbyone_circle_value(z(-rho), lam, g, spec), minus)),
                ],
            )
        }
    };
    let floor = -ENDPOINT_TOL * scale;
    checks.push(("recorded +ρ", near(recomputed.0, cert.endpoint_values.0)));
    checks.push(("recorded -ρ", near(recomputed.1, cert.endpoint_values.1)));
    checks.push(("nonnegative", recomputed.0 >= floor && recomputed.1 >= floor));
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let detail = if failed.is_empty() {
        format!("F(+ρ) = {:.3e}, F(-ρ) = {:.3e}", recomputed.0, recomputed.1)
    } else {
        format!("failed: {}", failed.join(", "))
    };
    stage("endpoints", failed.is_empty(), detail)
}

fn minimal_stability(spec: &ProblemSpec, cert: &Certificate) -> Result<StageResult> {
    let c = DMatrix::identity(1, 1);
    let gd = LtiSystem::gradient_descent(spec.alpha, 1);
    let (sys, m) = match cert.kind {
        CertificateKind::OffByOneNoisy => (
            gd.off_by_one(spec.l),
            off_by_one_matrix(&c, spec.m, spec.l, cert.gamma.unwrap_or(0.0))?,
        ),
        _ => (gd, sector_matrix(&c, spec.m, spec.l)?),
    };
    Ok(match minimal_stability_witness(&sys, &m, cert.rho, spec.m) {
        Some(w) => stage(
            "minimal-stability",
            true,
            format!("u = {}·x with ε = {}", w.n_scalar, w.epsilon),
        ),
        None => stage("minimal-stability", false, "no ρ-Schur linear feedback found".into()),
    })
}

fn lyapunov(
    spec: &ProblemSpec,
    class: FunctionClass,
    dc: &DissipationCertificate,
    opts: VerifyOptions,
) -> Result<StageResult> {
    let names: [(&str, usize); 3] = match class {
        FunctionClass::StronglyConvex => [("quadratic-m", 1), ("diagonal", 3), ("zigzag", 1)],
        FunctionClass::Sector => [("quadratic-L", 1), ("zigzag", 1), ("oscillator", 1)],
    };
    let p = if opts.corrupt_storage { -&dc.p } else { dc.p.clone() };
    let (fr, pr) = (functions(), policies());
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for (fname, dim) in names {
        let f = fr.get(fname)?(spec.m, spec.l, dim)?;
        for pname in ["plus", "sphere", "greedy"] {
            let policy = pr.get(pname)?(spec.delta, opts.seed)?;
            let x0 = &f.x_star + DVector::from_fn(dim, |i, _| 1.0 + 0.5 * i as f64);
            let run = run_inexact_gd(&f, &x0, spec.alpha, &policy, LYAPUNOV_STEPS)?;
            let report = lyapunov_decay_check(&run.trajectory, &dc.sys, &dc.iqc, dc.rho, &p)?;
            worst = worst.max(report.envelope_ratio);
            if !report.passed {
                failures.push(format!("{fname}/{pname} at k = {:?}", report.first_violation));
            }
        }
    }
    Ok(if failures.is_empty() {
        stage("lyapunov", true, format!("9 runs, largest V(k) / (ρ^{{2k}} V(0)) = {worst:.3e}"))
    } else {
        stage("lyapunov", false, format!("failed: {}", failures.join(", ")))
    })
}

fn witness_gap(spec: &ProblemSpec, regime: RegimeKind, cert: &Certificate) -> Result<StageResult> {
    let w = lower_bound_witness(spec)?;
    let gap = cert.rho - w.rate;
    let ok = gap >= -GAP_TOL * (1.0 + cert.rho) && (!regime.is_tight() || gap <= GAP_TOL * (1.0 + cert.rho));
    Ok(stage(
        "witness-gap",
        ok,
        format!("witnessed {:.15}, gap {gap:.3e}", w.rate),
    ))
}

/// Runs every stage; a spec without any certificate is an error.
pub fn verify_chain(spec: &ProblemSpec, class: FunctionClass, opts: VerifyOptions) -> Result<VerifyReport> {
    spec.validate()?;
    let cert = certifiers().get(class.as_str())?.certify(spec)?;
    let regime = classify_regime(spec, class).kind;
    let mut stages = vec![
        closed_form(spec, class, &cert)?,
        endpoints(spec, &cert),
        minimal_stability(spec, &cert)?,
    ];
    let rho = cert.rho + DISSIPATION_SLACK;
    match dissipation_search_scalar(spec, rho, cert.kind)? {
        Some(dc) => {
            stages.push(stage(
                "dissipation",
                true,
                format!("P found at ρ = {rho:.6}, largest LMI eigenvalue {:.3e}", dc.max_eigenvalue),
            ));
            stages.push(lyapunov(spec, class, &dc, opts)?);
        }
        None => {
            stages.push(stage("dissipation", false, format!("no storage function at ρ = {rho:.6}")));
            stages.push(stage("lyapunov", false, "skipped: no storage function".into()));
        }
    }
    stages.push(witness_gap(spec, regime, &cert)?);
    debug_assert_eq!(stages.iter().map(|s| s.name).collect::<Vec<_>>(), STAGES);
    Ok(VerifyReport {
        certificate: cert,
        regime,
        stages,
    })
}

impl From<&VerifyReport> for serde_json::Value {
    fn from(r: &VerifyReport) -> Self {
        serde_json::json!({
            "schema": crate::output::SCHEMA_VERSION,
            "mode": "verify",
            "passed": r.passed(),
            "regime": r.regime.as_str(),
            "certificate": crate::output::certificate_json(&r.certificate),
            "stages": r.stages.iter().map(|s| serde_json::json!({
                "name": s.name,
                "passed": s.passed,
                "detail": s.detail,
            })).collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m: f64, l: f64, a: f64, d: f64) -> ProblemSpec {
        ProblemSpec::new(m, l, a, d).unwrap()
    }

    fn run(s: ProblemSpec, class: FunctionClass, corrupt: bool) -> VerifyReport {
        verify_chain(&s, class, VerifyOptions { corrupt_storage: corrupt, seed: 0 }).unwrap()
    }

    #[test]
    fn strongly_convex_chain_passes() {
        let r = run(spec(1.0, 10.0, 0.15, 0.1), FunctionClass::StronglyConvex, false);
        assert!(r.passed(), "{:#?}", r.stages);
    }

    #[test]
    fn small_step_sector_chain_passes() {
        let r = run(spec(1.0, 10.0, 0.05, 0.1), FunctionClass::Sector, false);
        assert!(r.passed(), "{:#?}", r.stages);
    }

    #[test]
    fn interior_and_noiseless_chains_pass() {
        for (s, c) in [
            (spec(1.0, 10.0, 0.15, 0.1), FunctionClass::Sector),
            (spec(1.0, 10.0, 0.1, 0.0), FunctionClass::Sector),
            (spec(1.0, 10.0, 0.18, 0.1), FunctionClass::Sector),
        ] {
            let r = run(s, c, false);
            assert!(r.passed(), "{s:?}: {:#?}", r.stages);
        }
    }

    #[test]
    fn corrupted_storage_fails_at_lyapunov() {
        let r = run(spec(1.0, 10.0, 0.15, 0.1), FunctionClass::StronglyConvex, true);
        assert!(!r.passed());
        assert_eq!(r.first_failure().unwrap().name, "lyapunov");
    }

    #[test]
    fn report_document_validates() {
        let r = run(spec(1.0, 10.0, 0.05, 0.1), FunctionClass::Sector, false);
        crate::output::validate_document(&serde_json::Value::from(&r)).unwrap();
    }
}
