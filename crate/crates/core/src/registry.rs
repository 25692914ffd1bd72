//! Name-keyed registries for certifiers, test functions and noise policies.

use crate::error::{Error, Result};
use crate::freq::certify::{certify_sector_noisy, certify_strongly_convex, rho_star_sector, Certificate};
use crate::rates::{FunctionClass, ProblemSpec};
use crate::sim::functions::{FunctionKind, TestFunction};
use crate::sim::noise::{NoiseKind, NoisePolicy};
use nalgebra::DVector;
use std::collections::BTreeMap;

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<String, Box<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &str, entry: Box<T>) -> &mut Self {
        self.entries.insert(name.to_string(), entry);
        self
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries.get(name).map(|b| b.as_ref()).ok_or_else(|| Error::UnknownName {
            kind: self.kind,
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}

/// A certification strategy for one function class.
pub trait Certifier: Send + Sync {
    fn class(&self) -> FunctionClass;

    /// Smallest certified rate.
    fn certify(&self, spec: &ProblemSpec) -> Result<Certificate>;

    /// Whether the rate `rho` is certified.
    fn decide(&self, spec: &ProblemSpec, rho: f64) -> Result<Option<Certificate>>;
}

pub struct SectorCertifier;

impl Certifier for SectorCertifier {
    fn class(&self) -> FunctionClass {
        FunctionClass::Sector
    }

    fn certify(&self, spec: &ProblemSpec) -> Result<Certificate> {
        rho_star_sector(spec)
    }

    fn decide(&self, spec: &ProblemSpec, rho: f64) -> Result<Option<Certificate>> {
        certify_sector_noisy(spec, rho)
    }
}

pub struct StronglyConvexCertifier;

impl Certifier for StronglyConvexCertifier {
    fn class(&self) -> FunctionClass {
        FunctionClass::StronglyConvex
    }

    fn certify(&self, spec: &ProblemSpec) -> Result<Certificate> {
        certify_strongly_convex(spec)?
            .ok_or_else(|| Error::Infeasible("off-by-one multipliers fail their checks".into()))
    }

    fn decide(&self, spec: &ProblemSpec, rho: f64) -> Result<Option<Certificate>> {
        let best = self.certify(spec)?;
        if rho >= best.rho {
            return Ok(Some(best));
        }
        // the sector certificate is valid for the smaller class as well
        certify_sector_noisy(spec, rho)
    }
}

pub fn certifiers() -> Registry<dyn Certifier> {
    let mut r: Registry<dyn Certifier> = Registry::new("class");
    r.register(FunctionClass::Sector.as_str(), Box::new(SectorCertifier))
        .register(FunctionClass::StronglyConvex.as_str(), Box::new(StronglyConvexCertifier));
    r
}

/// Builds a test function from `(m, L, dim)`.
pub type FunctionFactory = dyn Fn(f64, f64, usize) -> Result<TestFunction> + Send + Sync;

fn default_minimizer(dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |i, _| 0.25 * (i + 1) as f64)
}

pub fn functions() -> Registry<FunctionFactory> {
    let mut r: Registry<FunctionFactory> = Registry::new("function");
    r.register(
        "quadratic-m",
        Box::new(|m, l, d| TestFunction::new(FunctionKind::QuadraticGain(m), m, l, default_minimizer(d))),
    )
    .register(
        "quadratic-L",
        Box::new(|m, l, d| TestFunction::new(FunctionKind::QuadraticGain(l), m, l, default_minimizer(d))),
    )
    .register(
        "quadratic-mid",
        Box::new(|m, l, d| TestFunction::new(FunctionKind::QuadraticGain(0.5 * (m + l)), m, l, default_minimizer(d))),
    )
    .register(
        "diagonal",
        Box::new(|m, l, d| {
            let spectrum = if d == 1 {
                vec![0.5 * (m + l)]
            } else {
                (0..d).map(|i| m + (l - m) * i as f64 / (d - 1) as f64).collect()
            };
            TestFunction::new(FunctionKind::DiagonalQuadratic(spectrum), m, l, default_minimizer(d))
        }),
    )
    .register(
        "zigzag",
        Box::new(|m, l, d| {
            let breaks = (0..10).map(|j| 0.02 * 2f64.powi(j)).collect();
            TestFunction::new(FunctionKind::SlopeZigzag(breaks), m, l, default_minimizer(d))
        }),
    )
    .register(
        "oscillator",
        Box::new(|m, l, d| TestFunction::new(FunctionKind::GainOscillator(50.0), m, l, default_minimizer(d))),
    );
    r
}

/// Builds a noise policy from `(δ, seed)`.
pub type PolicyFactory = dyn Fn(f64, u64) -> Result<NoisePolicy> + Send + Sync;

pub fn policies() -> Registry<PolicyFactory> {
    let mut r: Registry<PolicyFactory> = Registry::new("policy");
    r.register("zero", Box::new(|d, _| NoisePolicy::new(NoiseKind::Zero, d)))
        .register("plus", Box::new(|d, _| NoisePolicy::new(NoiseKind::ScaledPlus, d)))
        .register("minus", Box::new(|d, _| NoisePolicy::new(NoiseKind::ScaledMinus, d)))
        .register("sphere", Box::new(|d, s| NoisePolicy::new(NoiseKind::RandomSphere(s), d)))
        .register("greedy", Box::new(|d, _| NoisePolicy::new(NoiseKind::Greedy, d)));
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookups_and_unknown_names() {
        let c = certifiers();
        assert_eq!(c.names(), vec!["sector", "strongly-convex"]);
        let err = c.get("convex").err().unwrap();
        assert!(err.to_string().contains("sector, strongly-convex"));
        assert_eq!(functions().names().len(), 6);
        assert!(policies().get("greedy").is_ok());
    }

    #[test]
    fn strategies_dispatch_by_name() {
        let spec = ProblemSpec::new(1.0, 10.0, 0.15, 0.1).unwrap();
        let reg = certifiers();
        let s = reg.get("sector").unwrap().certify(&spec).unwrap();
        let f = reg.get("strongly-convex").unwrap().certify(&spec).unwrap();
        assert!(f.rho < s.rho);
        assert!(reg.get("strongly-convex").unwrap().decide(&spec, 0.87).unwrap().is_some());
        assert!(reg.get("strongly-convex").unwrap().decide(&spec, 0.86).unwrap().is_none());
        assert!(reg.get("sector").unwrap().decide(&spec, 0.87).unwrap().is_none());
    }

    #[test]
    fn factories_respect_classes() {
        for name in functions().names() {
            let f = functions().get(name).unwrap()(1.0, 10.0, 3).unwrap();
            assert_eq!(f.dim(), 3);
            let expected = if name == "oscillator" { FunctionClass::Sector } else { FunctionClass::StronglyConvex };
            assert_eq!(f.class(), expected, "{name}");
        }
    }
}
