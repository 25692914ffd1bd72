//! Closed-form rates and step-size thresholds for inexact gradient descent.

use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerance for comparing a step size against the branch thresholds.
/// Ties resolve toward the exactly characterized branch.
pub const BRANCH_TOL: f64 = 1e-12;

/// Function class parameters, step size and relative noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub m: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub alpha: f64,
    pub delta: f64,
}

impl ProblemSpec {
    pub fn new(m: f64, l: f64, alpha: f64, delta: f64) -> Result<Self> {
        let spec = Self { m, l, alpha, delta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_moduli(self.m, self.l)?;
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(invalid("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if !(self.delta.is_finite() && (0.0..1.0).contains(&self.delta)) {
            return Err(invalid("delta", format!("must lie in [0, 1), got {}", self.delta)));
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        self.l / self.m
    }

    /// `2 / (L + m)`, the noiseless optimal step size.
    pub fn alpha_opt(&self) -> f64 {
        2.0 / (self.l + self.m)
    }

    pub fn alpha_minus(&self) -> f64 {
        alpha_minus_unchecked(self.m, self.l, self.delta)
    }

    pub fn alpha_plus(&self) -> f64 {
        alpha_plus_unchecked(self.m, self.l, self.delta)
    }

    /// Upper end of the strongly convex step-size window, `2 / ((1+δ)L + (1-δ)m)`.
    pub fn alpha_sharp(&self) -> f64 {
        2.0 / ((1.0 + self.delta) * self.l + (1.0 - self.delta) * self.m)
    }

    /// True when `1/L ≤ α ≤ 2/((1+δ)L + (1-δ)m)`.
    pub fn in_strongly_convex_window(&self) -> bool {
        self.alpha >= 1.0 / self.l - BRANCH_TOL && self.alpha <= self.alpha_sharp() + BRANCH_TOL
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..*self }
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }
}

fn check_moduli(m: f64, l: f64) -> Result<()> {
    if !(m.is_finite() && m > 0.0) {
        return Err(invalid("m", format!("must be positive, got {m}")));
    }
    if !(l.is_finite() && l > m) {
        return Err(invalid("L", format!("must exceed m = {m}, got {l}")));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta.is_finite() && (0.0..1.0).contains(&delta)) {
        return Err(invalid("delta", format!("must lie in [0, 1), got {delta}")));
    }
    Ok(())
}

/// Noiseless worst-case rate `max(1 - αm, αL - 1)`.
pub fn rho_gd(m: f64, l: f64, alpha: f64) -> Result<f64> {
    check_moduli(m, l)?;
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(invalid("alpha", format!("must be nonnegative, got {alpha}")));
    }
    Ok((1.0 - alpha * m).max(alpha * l - 1.0))
}

/// Lower bound `max(1 - (1-δ)αm, (1+δ)αL - 1)` attained by quadratics.
pub fn rho_gd_noisy(spec: &ProblemSpec) -> f64 {
    let ProblemSpec { m, l, alpha, delta } = *spec;
    (1.0 - (1.0 - delta) * alpha * m).max((1.0 + delta) * alpha * l - 1.0)
}

pub fn alpha_minus(m: f64, l: f64, delta: f64) -> Result<f64> {
    check_moduli(m, l)?;
    check_delta(delta)?;
    Ok(alpha_minus_unchecked(m, l, delta))
}

pub fn alpha_plus(m: f64, l: f64, delta: f64) -> Result<f64> {
    check_moduli(m, l)?;
    check_delta(delta)?;
    Ok(alpha_plus_unchecked(m, l, delta))
}

fn alpha_minus_unchecked(m: f64, l: f64, delta: f64) -> f64 {
    (2.0 / (l + m) - delta / m) / (1.0 - delta)
}

fn alpha_plus_unchecked(m: f64, l: f64, delta: f64) -> f64 {
    (2.0 / (l + m) + delta / l) / (1.0 + delta)
}

/// Square-root rate certified over the sector class when neither boundary
/// branch applies. Requires `α < 2/(L+m)`.
pub fn interior_rate(spec: &ProblemSpec) -> Result<f64> {
    spec.validate()?;
    let ProblemSpec { m, l, alpha, delta } = *spec;
    if alpha >= 2.0 / (l + m) {
        return Err(Error::StepSizeOutOfRange {
            alpha,
            reason: format!("requires alpha < 2/(L+m) = {}", 2.0 / (l + m)),
        });
    }
    let arg = 1.0 - 2.0 * alpha * l * m / (l + m)
        + alpha * delta * delta * (l + m - 2.0 * alpha * l * m) / (2.0 - alpha * (l + m));
    Ok(arg.sqrt())
}

/// `((1+δ)κ - (1-δ)) / ((1+δ)κ + (1-δ))`, the smallest lower bound over all step sizes.
pub fn sharp_step_rate(m: f64, l: f64, delta: f64) -> Result<f64> {
    check_moduli(m, l)?;
    check_delta(delta)?;
    let k = l / m;
    Ok(((1.0 + delta) * k - (1.0 - delta)) / ((1.0 + delta) * k + (1.0 - delta)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionClass {
    Sector,
    StronglyConvex,
}

impl FunctionClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            FunctionClass::Sector => "sector",
            FunctionClass::StronglyConvex => "strongly-convex",
        }
    }
}

impl std::str::FromStr for FunctionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sector" | "S" => Ok(FunctionClass::Sector),
            "strongly-convex" | "F" => Ok(FunctionClass::StronglyConvex),
            other => Err(Error::UnknownName {
                kind: "function class",
                name: other.to_string(),
                known: "sector, strongly-convex".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeKind {
    NoiselessSector,
    SmallStep,
    LargeStep,
    Interior,
    StronglyConvex,
    Uncertifiable,
}

impl RegimeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeKind::NoiselessSector => "noiseless-sector",
            RegimeKind::SmallStep => "small-step",
            RegimeKind::LargeStep => "large-step",
            RegimeKind::Interior => "interior",
            RegimeKind::StronglyConvex => "strongly-convex",
            RegimeKind::Uncertifiable => "uncertifiable",
        }
    }

    /// Whether the certified rate coincides with the quadratic lower bound.
    pub fn is_tight(&self) -> bool {
        !matches!(self, RegimeKind::Interior | RegimeKind::Uncertifiable)
    }
}

/// Closed-form regime. `certified_rho` may be `>= 1` (a divergence bound) and is
/// infinite only for `Uncertifiable`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRegime {
    pub kind: RegimeKind,
    pub certified_rho: f64,
}

impl RateRegime {
    pub fn converges(&self) -> bool {
        self.certified_rho < 1.0
    }
}

pub fn classify_regime(spec: &ProblemSpec, class: FunctionClass) -> RateRegime {
    let lower = rho_gd_noisy(spec);
    if spec.delta == 0.0 {
        return RateRegime {
            kind: RegimeKind::NoiselessSector,
            certified_rho: lower,
        };
    }
    if class == FunctionClass::StronglyConvex && spec.in_strongly_convex_window() {
        return RateRegime {
            kind: RegimeKind::StronglyConvex,
            certified_rho: lower,
        };
    }
    classify_sector(spec, lower)
}

fn classify_sector(spec: &ProblemSpec, lower: f64) -> RateRegime {
    let small_window = spec.delta < 2.0 / (spec.kappa() + 1.0);
    if small_window && spec.alpha <= spec.alpha_minus() + BRANCH_TOL {
        RateRegime {
            kind: RegimeKind::SmallStep,
            certified_rho: lower,
        }
    } else if spec.alpha >= spec.alpha_plus() - BRANCH_TOL {
        RateRegime {
            kind: RegimeKind::LargeStep,
            certified_rho: lower,
        }
    } else {
        match interior_rate(spec) {
            Ok(rho) => RateRegime {
                kind: RegimeKind::Interior,
                certified_rho: rho.max(lower),
            },
            Err(_) => RateRegime {
                kind: RegimeKind::Uncertifiable,
                certified_rho: f64::INFINITY,
            },
        }
    }
}
