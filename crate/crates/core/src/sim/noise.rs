use crate::error::{invalid, Result};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Zero,
    /// `e = δ∇f`.
    ScaledPlus,
    /// `e = -δ∇f`.
    ScaledMinus,
    /// Uniformly random direction with norm exactly `δ|∇f|`.
    RandomSphere(u64),
    /// One-step worst case, see [`greedy_noise`].
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePolicy {
    pub kind: NoiseKind,
    pub delta: f64,
}

impl NoisePolicy {
    pub fn new(kind: NoiseKind, delta: f64) -> Result<Self> {
        if !(delta.is_finite() && (0.0..1.0).contains(&delta)) {
            return Err(invalid("delta", format!("must lie in [0, 1), got {delta}")));
        }
        Ok(Self { kind, delta })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            NoiseKind::Zero => "zero",
            NoiseKind::ScaledPlus => "plus",
            NoiseKind::ScaledMinus => "minus",
            NoiseKind::RandomSphere(_) => "sphere",
            NoiseKind::Greedy => "greedy",
        }
    }

    /// Per-run noise generator; random policies restart from their seed.
    pub fn source(&self) -> NoiseSource {
        let rng = match self.kind {
            NoiseKind::RandomSphere(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        NoiseSource { policy: *self, rng }
    }
}

pub struct NoiseSource {
    policy: NoisePolicy,
    rng: Option<ChaCha8Rng>,
}

impl NoiseSource {
    pub fn next(&mut self, x: &DVector<f64>, x_star: &DVector<f64>, grad: &DVector<f64>, alpha: f64) -> DVector<f64> {
        let delta = self.policy.delta;
        match self.policy.kind {
            NoiseKind::Zero => DVector::zeros(grad.len()),
            NoiseKind::ScaledPlus => grad * delta,
            NoiseKind::ScaledMinus => grad * -delta,
            NoiseKind::RandomSphere(_) => {
                let rng = self.rng.as_mut().expect("sphere policy carries an rng");
                let dir = loop {
                    let w = DVector::from_fn(grad.len(), |_, _| StandardNormal.sample(&mut *rng));
                    if w.norm() > 0.0 {
                        break w;
                    }
                };
                scale_to(&dir, delta * grad.norm())
            }
            NoiseKind::Greedy => greedy_noise(&(x - x_star), grad, alpha, delta),
        }
    }
}

fn scale_to(v: &DVector<f64>, radius: f64) -> DVector<f64> {
    let n = v.norm();
    if n == 0.0 || radius == 0.0 {
        return DVector::zeros(v.len());
    }
    let mut out = v * (radius / n);
    // keep the bound exact under rounding
    let mut over = out.norm();
    while over > radius {
        out *= radius / over * (1.0 - f64::EPSILON);
        over = out.norm();
    }
    out
}

/// Maximizes `|d - α(∇f + e)|` over `|e| ≤ δ|∇f|`: `e = -δ|∇f|·w/|w|` with
/// `w = d - α∇f`, falling back to the first coordinate axis when `w = 0`.
pub fn greedy_noise(d: &DVector<f64>, grad: &DVector<f64>, alpha: f64, delta: f64) -> DVector<f64> {
    let radius = delta * grad.norm();
    let w = d - grad * alpha;
    if w.norm() == 0.0 {
        let mut e = DVector::zeros(grad.len());
        if !e.is_empty() {
            e[0] = radius;
        }
        return e;
    }
    scale_to(&(-w), radius)
}
