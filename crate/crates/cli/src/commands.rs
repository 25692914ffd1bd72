use crate::args::{CertifyArgs, SimulateArgs, SpecArgs, SweepArgs, VerifyArgs};
use crate::config::SweepConfig;
use crate::CliError;
use gdcert::freq::Certificate;
use gdcert::output::{certificate_json, fmt_f64, to_json_string, trajectory_table, validate_document, SCHEMA_VERSION};
use gdcert::rates::classify_regime;
use gdcert::registry::{certifiers, functions, policies};
use gdcert::sim::{empirical_constant, empirical_rate, lower_bound_witness, run_inexact_gd, RunStatus};
use gdcert::verify::{verify_chain, VerifyOptions};
use gdcert::nalgebra::DVector;
use gdcert::{FunctionClass, ProblemSpec};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::io::Write;

/// Slack allowed between a measured rate and the certified one.
const SOUNDNESS_SLACK: f64 = 1e-3;

fn spec_json(s: &ProblemSpec) -> Value {
    json!({ "m": s.m, "L": s.l, "alpha": s.alpha, "delta": s.delta })
}

fn emit(doc: &Value) -> Result<(), CliError> {
    validate_document(doc).map_err(|e| CliError::VerificationFailed(format!("output document: {e}")))?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", to_json_string(doc))?;
    Ok(())
}

fn build_spec(a: &SpecArgs) -> Result<(ProblemSpec, FunctionClass), CliError> {
    let spec = ProblemSpec::new(a.m, a.l, a.alpha(), a.delta)?;
    let class: FunctionClass = a.class.parse()?;
    Ok((spec, class))
}

fn certify_spec(spec: &ProblemSpec, class: FunctionClass) -> Result<Certificate, CliError> {
    Ok(certifiers().get(class.as_str())?.certify(spec)?)
}

pub fn certify(a: CertifyArgs) -> Result<u8, CliError> {
    let (spec, class) = build_spec(&a.spec)?;
    let certifier = certifiers();
    let certifier = certifier.get(class.as_str())?;
    let regime = classify_regime(&spec, class);
    match a.rho {
        None => {
            let cert = certifier.certify(&spec)?;
            emit(&json!({
                "schema": SCHEMA_VERSION,
                "mode": "optimize",
                "class": class.as_str(),
                "spec": spec_json(&spec),
                "regime": regime.kind.as_str(),
                "rho": cert.rho,
                "divergent": !cert.converges(),
                "certificate": certificate_json(&cert),
            }))?;
            Ok(0)
        }
        Some(rho) => {
            if !(rho.is_finite() && rho > 0.0) {
                return Err(CliError::Usage(format!("--rho must be positive, got {rho}")));
            }
            let cert = certifier.decide(&spec, rho)?;
            emit(&json!({
                "schema": SCHEMA_VERSION,
                "mode": "decide",
                "class": class.as_str(),
                "spec": spec_json(&spec),
                "rho": rho,
                "certified": cert.is_some(),
                "certificate": cert.as_ref().map(certificate_json),
            }))?;
            Ok(if cert.is_some() { 0 } else { 2 })
        }
    }
}

const SWEEP_HEADER: [&str; 12] = [
    "m", "L", "alpha", "delta", "class", "regime", "rho_certified", "lambda", "gamma", "rho_witnessed", "gap", "seed",
];

fn sweep_row(spec: &ProblemSpec, class: FunctionClass, seed: u64) -> Result<Vec<String>, CliError> {
    let mut row = vec![
        fmt_f64(spec.m),
        fmt_f64(spec.l),
        fmt_f64(spec.alpha),
        fmt_f64(spec.delta),
        class.as_str().to_string(),
    ];
    let witnessed = lower_bound_witness(spec)?.rate;
    match certify_spec(spec, class) {
        Ok(cert) => row.extend([
            classify_regime(spec, class).kind.as_str().to_string(),
            fmt_f64(cert.rho),
            fmt_f64(cert.lambda),
            cert.gamma.map(fmt_f64).unwrap_or_default(),
            fmt_f64(witnessed),
            fmt_f64(cert.rho - witnessed),
        ]),
        Err(CliError::NotCertifiable(_)) => row.extend([
            "uncertifiable".to_string(),
            String::new(),
            String::new(),
            String::new(),
            fmt_f64(witnessed),
            String::new(),
        ]),
        Err(e) => return Err(e),
    }
    row.push(seed.to_string());
    Ok(row)
}

pub fn sweep(a: SweepArgs) -> Result<u8, CliError> {
    let cfg = SweepConfig::from_args(a)?;
    let specs = cfg.specs()?;
    let rows: Vec<Vec<String>> = specs
        .par_iter()
        .map(|s| sweep_row(s, cfg.class, cfg.seed))
        .collect::<Result<_, _>>()?;
    let sink: Box<dyn Write> = match &cfg.output {
        Some(p) => Box::new(
            std::fs::File::create(p).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display())))?,
        ),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(SWEEP_HEADER)?;
    for r in &rows {
        w.write_record(r)?;
    }
    w.flush()?;
    eprintln!("{} rows", rows.len());
    Ok(0)
}

pub fn simulate(a: SimulateArgs) -> Result<u8, CliError> {
    let (spec, _) = build_spec(&a.spec)?;
    let f = functions().get(&a.function)?(spec.m, spec.l, a.dim)?;
    let policy = policies().get(&a.policy)?(spec.delta, a.seed)?;
    let class = f.class();
    let cert = certify_spec(&spec, class)?;
    let x0 = if a.x0.is_empty() {
        f.x_star.add_scalar(1.0)
    } else if a.x0.len() == a.dim {
        DVector::from_column_slice(&a.x0)
    } else {
        return Err(CliError::Usage(format!("--x0 has {} entries, expected {}", a.x0.len(), a.dim)));
    };
    let run = run_inexact_gd(&f, &x0, spec.alpha, &policy, a.steps)?;
    let estimate = empirical_rate(&run.trajectory, a.burn_in)?;
    let sound = if estimate.diverged {
        !cert.converges()
    } else {
        estimate.rate <= cert.rho + SOUNDNESS_SLACK
    };
    if let Some(path) = &a.trajectory {
        let (header, rows) = trajectory_table(&run.trajectory);
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
        w.write_record(&header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
    }
    let diverged_at = match run.status {
        RunStatus::Completed => None,
        RunStatus::Diverged(k) => Some(k),
    };
    emit(&json!({
        "schema": SCHEMA_VERSION,
        "mode": "simulate",
        "seed": a.seed,
        "spec": spec_json(&spec),
        "function": a.function,
        "policy": policy.name(),
        "class": class.as_str(),
        "steps": a.steps,
        "burn_in": a.burn_in,
        "diverged_at": diverged_at,
        "empirical_rate": estimate.rate,
        "empirical_constant": empirical_constant(&run.trajectory, cert.rho),
        "certified_rate": cert.rho,
        "sound": sound,
    }))?;
    Ok(if sound { 0 } else { 3 })
}

pub fn verify(a: VerifyArgs) -> Result<u8, CliError> {
    let (spec, class) = build_spec(&a.spec)?;
    let opts = VerifyOptions {
        corrupt_storage: a.inject_fault,
        seed: a.seed,
    };
    let report = verify_chain(&spec, class, opts)?;
    for s in &report.stages {
        eprintln!("{:<18} {}  {}", s.name, if s.passed { "ok  " } else { "FAIL" }, s.detail);
    }
    let mut doc = Value::from(&report);
    doc["seed"] = json!(a.seed);
    doc["spec"] = spec_json(&spec);
    doc["class"] = json!(class.as_str());
    emit(&doc)?;
    match report.first_failure() {
        None => Ok(0),
        Some(s) => Err(CliError::VerificationFailed(format!("stage `{}`: {}", s.name, s.detail))),
    }
}
