use super::functions::TestFunction;
use super::noise::{NoiseKind, NoisePolicy};
use crate::error::{invalid, Error, Result};
use crate::iqc::{off_by_one_states, Trajectory};
use crate::rates::ProblemSpec;
use nalgebra::DVector;

/// Runs stop once `|x - x⋆|` exceeds this bound.
pub const DIVERGENCE_BOUND: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    /// Stopped at this iteration index with a non-finite or huge state.
    Diverged(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub trajectory: Trajectory,
    pub status: RunStatus,
}

/// Iterates `x(k+1) = x(k) - α(∇f(x(k)) + e(k))` for `steps` steps.
///
/// The trajectory holds `x(0..=steps)` with gradients, noise and the
/// off-by-one states at every stored point.
pub fn run_inexact_gd(
    f: &TestFunction,
    x0: &DVector<f64>,
    alpha: f64,
    policy: &NoisePolicy,
    steps: usize,
) -> Result<Run> {
    if steps == 0 {
        return Err(invalid("steps", "must be at least 1"));
    }
    if x0.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            context: "run_inexact_gd start",
            expected: f.dim().to_string(),
            got: x0.len().to_string(),
        });
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(invalid("alpha", format!("must be positive, got {alpha}")));
    }
    let mut src = policy.source();
    let mut xs = Vec::with_capacity(steps + 1);
    let mut us = Vec::with_capacity(steps + 1);
    let mut es = Vec::with_capacity(steps + 1);
    let mut status = RunStatus::Completed;
    let mut x = x0.clone();
    for k in 0..=steps {
        let g = f.gradient(&x);
        let e = src.next(&x, &f.x_star, &g, alpha);
        let next = &x - (&g + &e) * alpha;
        xs.push(x);
        us.push(g);
        es.push(e);
        if k == steps {
            break;
        }
        let dist = (&next - &f.x_star).norm();
        if !dist.is_finite() || dist > DIVERGENCE_BOUND {
            status = RunStatus::Diverged(k + 1);
            break;
        }
        x = next;
    }
    let v = off_by_one_states(&f.x_star, &xs, &us, f.l);
    Ok(Run {
        trajectory: Trajectory {
            x_star: f.x_star.clone(),
            x: xs,
            u: us,
            e: Some(es),
            v: Some(v),
        },
        status,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub rate: f64,
    /// The iterate hit `x⋆` exactly at the burn-in index.
    pub at_optimum: bool,
    pub diverged: bool,
}

/// Distances at or below this are rounding noise around `x⋆`.
fn resolution(traj: &Trajectory) -> f64 {
    RESOLUTION_FACTOR * f64::EPSILON * traj.x_star.amax()
}

const RESOLUTION_FACTOR: f64 = 1e4;

/// `max_{k > b} (|x(k) - x⋆| / |x(b) - x⋆|)^{1/(k-b)}` for burn-in `b`,
/// over the iterates before the first one within rounding distance of `x⋆`.
///
/// Runs that left every bounded region report a rate of at least one, and
/// need not satisfy the length requirement.
pub fn empirical_rate(traj: &Trajectory, burn_in: usize) -> Result<RateEstimate> {
    let dist: Vec<f64> = (0..traj.len()).map(|k| traj.distance(k)).collect();
    let diverged = dist.iter().any(|d| !d.is_finite() || *d > DIVERGENCE_BOUND)
        || (dist.len() >= 2 && dist.len() <= burn_in + 11 && dist[dist.len() - 1] > dist[0] * 1e6);
    if diverged {
        let b = burn_in.min(dist.len().saturating_sub(2));
        let base = dist[b];
        let growth = (b + 1..dist.len())
            .filter(|&k| dist[k].is_finite())
            .map(|k| (dist[k] / base).powf(1.0 / (k - b) as f64))
            .fold(1.0, f64::max);
        return Ok(RateEstimate {
            rate: growth,
            at_optimum: false,
            diverged: true,
        });
    }
    let steps = traj.len().saturating_sub(1);
    if steps <= burn_in + 10 {
        return Err(Error::TrajectoryTooShort(format!(
            "{steps} steps, need more than {} for burn-in {burn_in}",
            burn_in + 10
        )));
    }
    let floor = resolution(traj);
    let base = dist[burn_in];
    if base <= floor {
        return Ok(RateEstimate {
            rate: 0.0,
            at_optimum: true,
            diverged: false,
        });
    }
    let end = (burn_in + 1..dist.len())
        .find(|&k| dist[k] <= floor)
        .map_or(dist.len(), |k| k + 1);
    let rate = (burn_in + 1..end)
        .map(|k| (dist[k] / base).powf(1.0 / (k - burn_in) as f64))
        .fold(0.0, f64::max);
    Ok(RateEstimate {
        rate,
        at_optimum: false,
        diverged: false,
    })
}

/// `max_k |x(k) - x⋆| / (ρᵏ |x(0) - x⋆|)` over iterates resolved from `x⋆`.
pub fn empirical_constant(traj: &Trajectory, rho: f64) -> f64 {
    let d0 = traj.distance(0);
    if d0 == 0.0 {
        return 0.0;
    }
    let floor = resolution(traj);
    (0..traj.len())
        .map(|k| traj.distance(k))
        .take_while(|&d| d > floor)
        .enumerate()
        .map(|(k, d)| d / (rho.powi(k as i32) * d0))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub trajectory: Trajectory,
    pub rate: f64,
    /// `true` when the `L`-gain quadratic with `e = +δ∇f` wins.
    pub upper_branch: bool,
}

const WITNESS_STEPS: usize = 40;

/// Runs the two quadratic lower-bound constructions and keeps the slower one.
pub fn lower_bound_witness(spec: &ProblemSpec) -> Result<Witness> {
    spec.validate()?;
    let x0 = DVector::from_element(1, 1.0);
    let mut best: Option<Witness> = None;
    for (gain, kind, upper) in [
        (spec.m, NoiseKind::ScaledMinus, false),
        (spec.l, NoiseKind::ScaledPlus, true),
    ] {
        let f = TestFunction::quadratic(gain, spec.m, spec.l, 1)?;
        let policy = NoisePolicy::new(kind, spec.delta)?;
        let run = run_inexact_gd(&f, &x0, spec.alpha, &policy, WITNESS_STEPS)?;
        let rate = match empirical_rate(&run.trajectory, 0) {
            Ok(r) => r.rate,
            Err(_) => run.trajectory.distance(1) / run.trajectory.distance(0),
        };
        if best.as_ref().is_none_or(|b| rate > b.rate) {
            best = Some(Witness {
                trajectory: run.trajectory,
                rate,
                upper_branch: upper,
            });
        }
    }
    Ok(best.expect("two candidate runs"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::rho_gd_noisy;

    fn s(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    fn geometric(r: f64, c: f64, n: usize) -> Trajectory {
        let xs: Vec<_> = (0..n).map(|k| s(c * r.powi(k as i32))).collect();
        Trajectory::from_states(s(0.0), xs, |x| x.clone(), 10.0)
    }

    #[test]
    fn quadratic_runs_are_linear_recursions() {
        let f = TestFunction::quadratic(10.0, 1.0, 10.0, 1).unwrap();
        let plus = NoisePolicy::new(NoiseKind::ScaledPlus, 0.1).unwrap();
        let run = run_inexact_gd(&f, &s(1.0), 0.15, &plus, 30).unwrap();
        for k in 0..30 {
            let ratio = run.trajectory.x[k + 1][0] / run.trajectory.x[k][0];
            assert!((ratio + 0.65).abs() < 1e-12);
        }
        let f = TestFunction::quadratic(1.0, 1.0, 10.0, 1).unwrap();
        let minus = NoisePolicy::new(NoiseKind::ScaledMinus, 0.1).unwrap();
        let run = run_inexact_gd(&f, &s(1.0), 0.15, &minus, 30).unwrap();
        assert!((run.trajectory.x[1][0] - 0.865).abs() < 1e-15);
    }

    #[test]
    fn fixed_point_stays_put() {
        let f = TestFunction::new(
            super::super::functions::FunctionKind::SlopeZigzag(vec![0.2, 0.5]),
            1.0,
            10.0,
            DVector::from_vec(vec![1.0, 2.0]),
        )
        .unwrap();
        let zero = NoisePolicy::new(NoiseKind::Zero, 0.0).unwrap();
        let run = run_inexact_gd(&f, &f.x_star, 0.1, &zero, 20).unwrap();
        assert!(run.trajectory.x.iter().all(|x| *x == f.x_star));
        run.trajectory.validate(10.0).unwrap();
    }

    #[test]
    fn rate_estimator_examples() {
        assert!((empirical_rate(&geometric(0.9, 1.0, 60), 0).unwrap().rate - 0.9).abs() < 1e-14);
        assert!((empirical_rate(&geometric(-0.65, 1.0, 60), 0).unwrap().rate - 0.65).abs() < 1e-14);
        assert!((empirical_rate(&geometric(0.9, 2.0, 60), 5).unwrap().rate - 0.9).abs() < 1e-12);
        assert!(empirical_rate(&geometric(0.9, 1.0, 12), 5).is_err());
        let mut dead = geometric(0.5, 1.0, 40);
        for x in dead.x.iter_mut().skip(3) {
            x[0] = 0.0;
        }
        let r = empirical_rate(&dead, 3).unwrap();
        assert!(r.at_optimum && r.rate == 0.0);
    }

    #[test]
    fn rounding_plateau_is_ignored() {
        let xs: Vec<_> = (0..300).map(|k| s(0.75 + 0.8f64.powi(k))).collect();
        let t = Trajectory::from_states(s(0.75), xs, |x| x.add_scalar(-0.75), 10.0);
        // without the cutoff the plateau near 1e-16 reads as a rate near 0.89
        let r = empirical_rate(&t, 10).unwrap();
        assert!((r.rate - 0.8).abs() < 1e-6, "{}", r.rate);
        assert!(empirical_constant(&t, 0.8) < 1.01);
    }

    #[test]
    fn divergent_runs_report_growth() {
        let f = TestFunction::quadratic(10.0, 1.0, 10.0, 1).unwrap();
        let plus = NoisePolicy::new(NoiseKind::ScaledPlus, 0.5).unwrap();
        let run = run_inexact_gd(&f, &s(1.0), 0.3, &plus, 500).unwrap();
        assert!(matches!(run.status, RunStatus::Diverged(_)));
        let r = empirical_rate(&run.trajectory, 20).unwrap();
        assert!(r.diverged);
        assert!((r.rate - 3.5).abs() < 1e-9);
    }

    #[test]
    fn constant_is_reported() {
        let t = geometric(0.8, 3.0, 30);
        assert!((empirical_constant(&t, 0.8) - 1.0).abs() < 1e-12);
        assert!(empirical_constant(&t, 0.7) > 1.0);
    }

    #[test]
    fn witness_examples() {
        let w = lower_bound_witness(&ProblemSpec::new(1.0, 10.0, 0.15, 0.1).unwrap()).unwrap();
        assert!(!w.upper_branch);
        assert!((w.rate - 0.865).abs() < 1e-12);
        let spec = ProblemSpec::new(1.0, 10.0, 0.18, 0.1).unwrap();
        let w = lower_bound_witness(&spec).unwrap();
        assert!(w.upper_branch);
        assert!((w.rate - 0.98).abs() < 1e-12);
        assert!((w.rate - rho_gd_noisy(&spec)).abs() < 1e-12);
        let w = lower_bound_witness(&ProblemSpec::new(1.0, 10.0, 2.0 / 11.0, 0.0).unwrap()).unwrap();
        assert!((w.rate - 9.0 / 11.0).abs() < 1e-12);
        let w = lower_bound_witness(&ProblemSpec::new(1.0, 10.0, 0.3, 0.5).unwrap()).unwrap();
        assert!((w.rate - 3.5).abs() < 1e-9);
    }
}
