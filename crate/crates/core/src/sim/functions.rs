use crate::error::{invalid, Result};
use crate::rates::FunctionClass;
use nalgebra::DVector;

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionKind {
    /// `f(x) = (k/2)|x - x⋆|²`.
    QuadraticGain(f64),
    /// `f(x) = ½ Σ sᵢ(xᵢ - x⋆ᵢ)²`.
    DiagonalQuadratic(Vec<f64>),
    /// Separable, odd, piecewise-linear gradient whose slope alternates
    /// between `L` and `m` at the given positive breakpoints, starting with `L`.
    SlopeZigzag(Vec<f64>),
    /// Radial gradient `d·(½(L+m) + ½(L-m)·sin(ω ln(1 + |d|²)))` with `d = x - x⋆`.
    GainOscillator(f64),
}

/// A test function described by its gradient only.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub kind: FunctionKind,
    pub m: f64,
    pub l: f64,
    pub x_star: DVector<f64>,
}

impl TestFunction {
    pub fn new(kind: FunctionKind, m: f64, l: f64, x_star: DVector<f64>) -> Result<Self> {
        if !(m > 0.0 && l > m && l.is_finite()) {
            return Err(invalid("m, L", format!("need 0 < m < L, got m = {m}, L = {l}")));
        }
        if x_star.is_empty() || x_star.iter().any(|v| !v.is_finite()) {
            return Err(invalid("x_star", "must be a finite, nonempty vector"));
        }
        match &kind {
            FunctionKind::QuadraticGain(k) => {
                if !(m..=l).contains(k) {
                    return Err(invalid("k", format!("gain {k} outside [{m}, {l}]")));
                }
            }
            FunctionKind::DiagonalQuadratic(s) => {
                if s.len() != x_star.len() {
                    return Err(invalid("spectrum", format!("length {} != dimension {}", s.len(), x_star.len())));
                }
                if let Some(bad) = s.iter().find(|v| !(m..=l).contains(*v)) {
                    return Err(invalid("spectrum", format!("eigenvalue {bad} outside [{m}, {l}]")));
                }
            }
            FunctionKind::SlopeZigzag(b) => {
                if b.is_empty() || b[0] <= 0.0 || b.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("breakpoints", "must be positive and strictly increasing"));
                }
            }
            FunctionKind::GainOscillator(w) => {
                if !w.is_finite() {
                    return Err(invalid("omega", "must be finite"));
                }
            }
        }
        Ok(Self { kind, m, l, x_star })
    }

    pub fn quadratic(k: f64, m: f64, l: f64, dim: usize) -> Result<Self> {
        Self::new(FunctionKind::QuadraticGain(k), m, l, DVector::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.x_star.len()
    }

    /// Smallest class the function is built to belong to.
    pub fn class(&self) -> FunctionClass {
        match self.kind {
            FunctionKind::GainOscillator(_) => FunctionClass::Sector,
            _ => FunctionClass::StronglyConvex,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FunctionKind::QuadraticGain(_) => "quadratic",
            FunctionKind::DiagonalQuadratic(_) => "diagonal",
            FunctionKind::SlopeZigzag(_) => "zigzag",
            FunctionKind::GainOscillator(_) => "oscillator",
        }
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = x - &self.x_star;
        match &self.kind {
            FunctionKind::QuadraticGain(k) => d * *k,
            FunctionKind::DiagonalQuadratic(s) => d.zip_map(&DVector::from_column_slice(s), |a, b| a * b),
            FunctionKind::SlopeZigzag(b) => d.map(|t| zigzag(t, b, self.m, self.l)),
            FunctionKind::GainOscillator(w) => {
                let r2 = d.norm_squared();
                let gain = 0.5 * (self.l + self.m) + 0.5 * (self.l - self.m) * (w * r2.ln_1p()).sin();
                d * gain
            }
        }
    }
}

fn zigzag(t: f64, breaks: &[f64], m: f64, l: f64) -> f64 {
    let a = t.abs();
    let mut acc = 0.0;
    let mut prev = 0.0;
    let mut slope = l;
    for &b in breaks {
        if a <= b {
            break;
        }
        acc += slope * (b - prev);
        prev = b;
        slope = if slope == l { m } else { l };
    }
    (acc + slope * (a - prev)).copysign(t)
}
