//! Quadratic constraints on (state, input) sequences: the sector and
//! off-by-one IQC matrices, their noise augmentation, weighted partial sums
//! along trajectories, and sample-based class membership checks.

use crate::error::{invalid, Error, Result};
use crate::linalg::{max_eigenvalue, symmetrize};
use nalgebra::{DMatrix, DVector};

/// Violation tolerance for the membership checks, relative to `L²|x - y|²`.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// `x(k+1) = A x(k) + B u(k)` with output `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl LtiSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let ns = a.nrows();
        if !a.is_square() {
            return Err(mismatch("LtiSystem::A", format!("{ns}x{ns}"), a.shape()));
        }
        if b.nrows() != ns {
            return Err(mismatch("LtiSystem::B rows", ns.to_string(), b.shape()));
        }
        if c.ncols() != ns {
            return Err(mismatch("LtiSystem::C cols", ns.to_string(), c.shape()));
        }
        if b.iter().all(|&v| v == 0.0) {
            return Err(invalid("B", "input matrix must be nonzero"));
        }
        Ok(Self { a, b, c })
    }

    /// Plant of gradient descent on `R^n`: `A = I`, `B = -αI`, `C = I`.
    pub fn gradient_descent(alpha: f64, n: usize) -> Self {
        Self {
            a: DMatrix::identity(n, n),
            b: DMatrix::identity(n, n) * -alpha,
            c: DMatrix::identity(n, n),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    /// Augments the state with `v(k+1) = L C x(k) - u(k)`.
    pub fn off_by_one(&self, l: f64) -> Self {
        let (ns, n) = (self.state_dim(), self.c.nrows());
        let mut a = DMatrix::zeros(ns + n, ns + n);
        a.view_mut((0, 0), (ns, ns)).copy_from(&self.a);
        a.view_mut((ns, 0), (n, ns)).copy_from(&(&self.c * l));
        let mut b = DMatrix::zeros(ns + n, self.input_dim());
        b.view_mut((0, 0), (ns, self.input_dim())).copy_from(&self.b);
        b.view_mut((ns, 0), (n, n)).copy_from(&-DMatrix::<f64>::identity(n, n));
        let mut c = DMatrix::zeros(n, ns + n);
        c.view_mut((0, 0), (n, ns)).copy_from(&self.c);
        Self { a, b, c }
    }

    /// Off-by-one augmentation with a noise input that enters the original
    /// state only: `x⁺ = Ax + B(u + e)`, `v⁺ = LCx - u`.
    pub fn off_by_one_with_noise(&self, l: f64) -> Self {
        let aug = self.off_by_one(l);
        let (ns, nu) = (self.state_dim(), self.input_dim());
        let mut b = DMatrix::zeros(aug.state_dim(), 2 * nu);
        b.view_mut((0, 0), (aug.state_dim(), nu)).copy_from(&aug.b);
        b.view_mut((0, nu), (ns, nu)).copy_from(&self.b);
        Self { b, ..aug }
    }

    /// Input matrix `[B B]` for the additive noise channel `u + e`.
    pub fn with_noise_channel(&self) -> Self {
        let (ns, n) = (self.state_dim(), self.input_dim());
        let mut b = DMatrix::zeros(ns, 2 * n);
        b.view_mut((0, 0), (ns, n)).copy_from(&self.b);
        b.view_mut((0, n), (ns, n)).copy_from(&self.b);
        Self {
            a: self.a.clone(),
            b,
            c: self.c.clone(),
        }
    }
}

fn mismatch(context: &'static str, expected: String, got: (usize, usize)) -> Error {
    Error::DimensionMismatch {
        context,
        expected,
        got: format!("{}x{}", got.0, got.1),
    }
}

/// Symmetric constraint matrix `[[Q, Sᵀ], [S, R]]` over (state, input).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockIqc {
    pub q: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl BlockIqc {
    pub fn new(q: DMatrix<f64>, s: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        let (ns, nu) = (q.nrows(), r.nrows());
        if !q.is_square() || !r.is_square() || s.shape() != (nu, ns) {
            return Err(Error::DimensionMismatch {
                context: "BlockIqc",
                expected: format!("Q {ns}x{ns}, S {nu}x{ns}, R {nu}x{nu}"),
                got: format!("Q {:?}, S {:?}, R {:?}", q.shape(), s.shape(), r.shape()),
            });
        }
        let asym = (&q - q.transpose()).amax().max((&r - r.transpose()).amax());
        if asym > 1e-12 * (1.0 + q.amax().max(r.amax())) {
            return Err(invalid("M", "Q and R must be symmetric"));
        }
        Ok(Self { q, s, r })
    }

    /// `[C_w D_w]ᵀ M_w [C_w D_w]` split into blocks after `state_dim` columns.
    pub fn from_factorization(
        cw_dw: &DMatrix<f64>,
        mw: &DMatrix<f64>,
        state_dim: usize,
    ) -> Result<Self> {
        if mw.nrows() != cw_dw.nrows() || !mw.is_square() || state_dim > cw_dw.ncols() {
            return Err(mismatch("BlockIqc::from_factorization", format!("{} rows", mw.nrows()), cw_dw.shape()));
        }
        let full = symmetrize(&(cw_dw.transpose() * mw * cw_dw));
        Ok(Self::split(&full, state_dim))
    }

    pub fn split(full: &DMatrix<f64>, state_dim: usize) -> Self {
        let nu = full.nrows() - state_dim;
        Self {
            q: full.view((0, 0), (state_dim, state_dim)).into_owned(),
            s: full.view((state_dim, 0), (nu, state_dim)).into_owned(),
            r: full.view((state_dim, state_dim), (nu, nu)).into_owned(),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.r.nrows()
    }

    pub fn assemble(&self) -> DMatrix<f64> {
        let (ns, nu) = (self.state_dim(), self.input_dim());
        let mut m = DMatrix::zeros(ns + nu, ns + nu);
        m.view_mut((0, 0), (ns, ns)).copy_from(&self.q);
        m.view_mut((ns, 0), (nu, ns)).copy_from(&self.s);
        m.view_mut((0, ns), (ns, nu)).copy_from(&self.s.transpose());
        m.view_mut((ns, ns), (nu, nu)).copy_from(&self.r);
        m
    }

    /// `⟨Qx,x⟩ + 2⟨Sx,u⟩ + ⟨Ru,u⟩`.
    pub fn quad_form(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        x.dot(&(&self.q * x)) + 2.0 * u.dot(&(&self.s * x)) + u.dot(&(&self.r * u))
    }

    pub fn scale(&self) -> f64 {
        self.q.amax().max(self.s.amax()).max(self.r.amax())
    }
}

fn check_sector(m: f64, l: f64) -> Result<()> {
    if !(m.is_finite() && l.is_finite() && m < l) {
        return Err(invalid("m, L", format!("need m < L, got m = {m}, L = {l}")));
    }
    Ok(())
}

/// Sector IQC: `Q = -2LmCᵀC`, `S = (L+m)C`, `R = -2I`.
pub fn sector_matrix(c: &DMatrix<f64>, m: f64, l: f64) -> Result<BlockIqc> {
    check_sector(m, l)?;
    let n = c.nrows();
    Ok(BlockIqc {
        q: c.transpose() * c * (-2.0 * l * m),
        s: c * (l + m),
        r: DMatrix::identity(n, n) * -2.0,
    })
}

/// The same matrix assembled from `w = (Ly - u, u - my)` and `M_w = [[0, I], [I, 0]]`.
pub fn sector_matrix_factored(c: &DMatrix<f64>, m: f64, l: f64) -> Result<BlockIqc> {
    check_sector(m, l)?;
    let (n, ns) = c.shape();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut cw = DMatrix::zeros(2 * n, ns + n);
    cw.view_mut((0, 0), (n, ns)).copy_from(&(c * l));
    cw.view_mut((0, ns), (n, n)).copy_from(&-&eye);
    cw.view_mut((n, 0), (n, ns)).copy_from(&(c * -m));
    cw.view_mut((n, ns), (n, n)).copy_from(&eye);
    BlockIqc::from_factorization(&cw, &swap_form(n), ns)
}

fn swap_form(n: usize) -> DMatrix<f64> {
    let mut mw = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        mw[(i, n + i)] = 1.0;
        mw[(n + i, i)] = 1.0;
    }
    mw
}

/// Weighted off-by-one IQC over the augmented state `(x, v)` and input `u`.
pub fn off_by_one_matrix(c: &DMatrix<f64>, m: f64, l: f64, gamma: f64) -> Result<BlockIqc> {
    check_sector(m, l)?;
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(invalid("gamma", format!("must be nonnegative, got {gamma}")));
    }
    let (n, ns) = c.shape();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut q = DMatrix::zeros(ns + n, ns + n);
    q.view_mut((0, 0), (ns, ns)).copy_from(&(c.transpose() * c * (-2.0 * l * m)));
    q.view_mut((ns, 0), (n, ns)).copy_from(&(c * (m * gamma)));
    q.view_mut((0, ns), (ns, n)).copy_from(&(c.transpose() * (m * gamma)));
    let mut s = DMatrix::zeros(n, ns + n);
    s.view_mut((0, 0), (n, ns)).copy_from(&(c * (l + m)));
    s.view_mut((0, ns), (n, n)).copy_from(&(&eye * -gamma));
    Ok(BlockIqc { q, s, r: eye * -2.0 })
}

/// Factored route for the off-by-one matrix, `w = (Ly - γv - u, u - my)`.
pub fn off_by_one_matrix_factored(c: &DMatrix<f64>, m: f64, l: f64, gamma: f64) -> Result<BlockIqc> {
    check_sector(m, l)?;
    let (n, ns) = c.shape();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut cw = DMatrix::zeros(2 * n, ns + 2 * n);
    cw.view_mut((0, 0), (n, ns)).copy_from(&(c * l));
    cw.view_mut((0, ns), (n, n)).copy_from(&(&eye * -gamma));
    cw.view_mut((0, ns + n), (n, n)).copy_from(&-&eye);
    cw.view_mut((n, 0), (n, ns)).copy_from(&(c * -m));
    cw.view_mut((n, ns + n), (n, n)).copy_from(&eye);
    BlockIqc::from_factorization(&cw, &swap_form(n), ns + n)
}

/// `M(δ, λ)` over (state, (u, e)).
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyIqc {
    pub iqc: BlockIqc,
    /// `R + λδ²I ≤ 0`, the upper bound on λ.
    pub admissible: bool,
}

pub fn noise_augment(base: &BlockIqc, delta: f64, lambda: f64) -> Result<NoisyIqc> {
    if !(delta.is_finite() && (0.0..1.0).contains(&delta)) {
        return Err(invalid("delta", format!("must lie in [0, 1), got {delta}")));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(invalid("lambda", format!("must be nonnegative, got {lambda}")));
    }
    let (ns, n) = (base.state_dim(), base.input_dim());
    let eye = DMatrix::<f64>::identity(n, n);
    let shifted = &base.r + &eye * (lambda * delta * delta);
    let mut s = DMatrix::zeros(2 * n, ns);
    s.view_mut((0, 0), (n, ns)).copy_from(&base.s);
    let mut r = DMatrix::zeros(2 * n, 2 * n);
    r.view_mut((0, 0), (n, n)).copy_from(&shifted);
    r.view_mut((n, n), (n, n)).copy_from(&(&eye * -lambda));
    let admissible = max_eigenvalue(&shifted) <= 1e-12 * (1.0 + shifted.amax());
    Ok(NoisyIqc {
        iqc: BlockIqc {
            q: base.q.clone(),
            s,
            r,
        },
        admissible,
    })
}

/// States, gradients, noise and auxiliary off-by-one states along a run.
///
/// Every stored sequence has the same length. `v` follows
/// `v(0) = 0, v(k+1) = L(x(k) - x⋆) - u(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub x_star: DVector<f64>,
    pub x: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
    pub e: Option<Vec<DVector<f64>>>,
    pub v: Option<Vec<DVector<f64>>>,
}

impl Trajectory {
    /// Builds `u = ∇f(x)` and the off-by-one states for a given state sequence.
    pub fn from_states<G>(x_star: DVector<f64>, x: Vec<DVector<f64>>, grad: G, l: f64) -> Self
    where
        G: Fn(&DVector<f64>) -> DVector<f64>,
    {
        let u: Vec<DVector<f64>> = x.iter().map(&grad).collect();
        let v = off_by_one_states(&x_star, &x, &u, l);
        Self {
            x_star,
            x,
            u,
            e: None,
            v: Some(v),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x_star.len()
    }

    pub fn deviation(&self, k: usize) -> DVector<f64> {
        &self.x[k] - &self.x_star
    }

    pub fn distance(&self, k: usize) -> f64 {
        self.deviation(k).norm()
    }

    pub fn validate(&self, l: f64) -> Result<()> {
        let n = self.len();
        let lens_ok = self.u.len() == n
            && self.e.as_ref().is_none_or(|e| e.len() == n)
            && self.v.as_ref().is_none_or(|v| v.len() == n);
        if !lens_ok {
            return Err(invalid("trajectory", "sequences differ in length"));
        }
        if let Some(v) = &self.v {
            let expect = off_by_one_states(&self.x_star, &self.x, &self.u, l);
            for (k, (a, b)) in v.iter().zip(&expect).enumerate() {
                if a != b {
                    return Err(invalid("trajectory", format!("v breaks its recursion at k = {k}")));
                }
            }
        }
        Ok(())
    }

    /// State and input at step `k`, stacked to the dimensions of a constraint.
    ///
    /// The state is `x - x⋆` or `(x - x⋆, v)`; the input is `u` or `(u, e)`.
    pub fn stacked(&self, k: usize, state_dim: usize, input_dim: usize) -> Result<(DVector<f64>, DVector<f64>)> {
        let n = self.dim();
        let dx = self.deviation(k);
        let state = if state_dim == n {
            dx
        } else if state_dim == 2 * n {
            let v = self
                .v
                .as_ref()
                .ok_or_else(|| invalid("trajectory", "constraint needs off-by-one states"))?;
            stack(&dx, &v[k])
        } else {
            return Err(Error::DimensionMismatch {
                context: "trajectory state",
                expected: format!("{n} or {}", 2 * n),
                got: state_dim.to_string(),
            });
        };
        let input = if input_dim == n {
            self.u[k].clone()
        } else if input_dim == 2 * n {
            match &self.e {
                Some(e) => stack(&self.u[k], &e[k]),
                None => stack(&self.u[k], &DVector::zeros(n)),
            }
        } else {
            return Err(Error::DimensionMismatch {
                context: "trajectory input",
                expected: format!("{n} or {}", 2 * n),
                got: input_dim.to_string(),
            });
        };
        Ok((state, input))
    }
}

pub fn off_by_one_states(
    x_star: &DVector<f64>,
    x: &[DVector<f64>],
    u: &[DVector<f64>],
    l: f64,
) -> Vec<DVector<f64>> {
    let mut v = Vec::with_capacity(x.len());
    if x.is_empty() {
        return v;
    }
    v.push(DVector::zeros(x_star.len()));
    for k in 0..x.len() - 1 {
        v.push((&x[k] - x_star) * l - &u[k]);
    }
    v
}

pub(crate) fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// Rescaled partial sums `T_N = ρ^{2N} S_N`, which share the sign of `S_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSums {
    pub rho: f64,
    pub scaled: Vec<f64>,
    /// Same recursion on `|σ(k)|`, used as the rounding scale.
    pub magnitude: Vec<f64>,
}

impl PartialSums {
    /// `S_N`; may overflow to infinity for long horizons.
    pub fn unscaled(&self, n: usize) -> f64 {
        self.scaled[n] * self.rho.powi(-2 * n as i32)
    }

    pub fn first_negative(&self, rel_tol: f64) -> Option<usize> {
        self.scaled
            .iter()
            .zip(&self.magnitude)
            .position(|(t, a)| *t < -rel_tol * a)
    }

    pub fn all_nonnegative(&self, rel_tol: f64) -> bool {
        self.first_negative(rel_tol).is_none()
    }
}

/// `S_N = Σ_{k≤N} ρ^{-2k} σ(k)`, carried as `T_N = ρ²T_{N-1} + σ(N)`.
pub fn iqc_partial_sums(traj: &Trajectory, iqc: &BlockIqc, rho: f64) -> Result<PartialSums> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(invalid("rho", format!("must be positive, got {rho}")));
    }
    let rho2 = rho * rho;
    let (mut t, mut a) = (0.0, 0.0);
    let mut scaled = Vec::with_capacity(traj.len());
    let mut magnitude = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        let (x, u) = traj.stacked(k, iqc.state_dim(), iqc.input_dim())?;
        let sigma = iqc.quad_form(&x, &u);
        let size = x.dot(&(iqc.q.abs() * x.abs()))
            + 2.0 * u.abs().dot(&(iqc.s.abs() * x.abs()))
            + u.abs().dot(&(iqc.r.abs() * u.abs()));
        t = rho2 * t + sigma;
        a = rho2 * a + size;
        scaled.push(t);
        magnitude.push(a);
    }
    Ok(PartialSums { rho, scaled, magnitude })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub holds: bool,
    /// Largest normalized violation (positive means the inequality fails).
    pub worst_violation: f64,
    pub worst_index: Option<usize>,
}

fn report(values: impl Iterator<Item = f64>) -> MembershipReport {
    let mut worst = f64::NEG_INFINITY;
    let mut idx = None;
    for (i, v) in values.enumerate() {
        if v > worst {
            worst = v;
            idx = Some(i);
        }
    }
    MembershipReport {
        holds: worst <= MEMBERSHIP_TOL,
        worst_violation: worst.max(0.0),
        worst_index: idx.filter(|_| worst > MEMBERSHIP_TOL),
    }
}

/// Checks `⟨m(x-x⋆) - ∇f(x), L(x-x⋆) - ∇f(x)⟩ ≤ 0` at each sample point.
pub fn sector_membership_check<G>(
    grad: G,
    points: &[DVector<f64>],
    m: f64,
    l: f64,
    x_star: &DVector<f64>,
) -> MembershipReport
where
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    report(points.iter().map(|x| {
        let d = x - x_star;
        let g = grad(x);
        let scale = l * l * d.norm_squared();
        let val = (&d * m - &g).dot(&(&d * l - &g));
        if scale > 0.0 {
            val / scale
        } else {
            // at x⋆ the gradient has to vanish
            g.norm_squared()
        }
    }))
}

/// Checks `⟨∇f(x)-∇f(y) - m(x-y), ∇f(x)-∇f(y) - L(x-y)⟩ ≤ 0` on each pair.
pub fn monotone_membership_check<G>(
    grad: G,
    pairs: &[(DVector<f64>, DVector<f64>)],
    m: f64,
    l: f64,
) -> MembershipReport
where
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    report(pairs.iter().map(|(x, y)| {
        let d = x - y;
        let g = grad(x) - grad(y);
        let scale = l * l * d.norm_squared();
        let val = (&g - &d * m).dot(&(&g - &d * l));
        if scale > 0.0 {
            val / scale
        } else {
            0.0
        }
    }))
}

/// Searches two-step state sequences drawn from `candidates` for one whose
/// off-by-one partial sums go negative. Such a sequence shows the gradient
/// is not that of a function in F(m, L).
pub fn find_off_by_one_violation<G>(
    grad: G,
    candidates: &[DVector<f64>],
    x_star: &DVector<f64>,
    m: f64,
    l: f64,
    rho: f64,
    gamma: f64,
) -> Result<Option<(Trajectory, PartialSums)>>
where
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = x_star.len();
    let iqc = off_by_one_matrix(&DMatrix::identity(n, n), m, l, gamma)?;
    let grads: Vec<DVector<f64>> = candidates.iter().map(&grad).collect();
    let lookup = |x: &DVector<f64>| -> DVector<f64> {
        candidates
            .iter()
            .position(|c| c == x)
            .map(|i| grads[i].clone())
            .unwrap_or_else(|| grad(x))
    };
    for a in candidates {
        for b in candidates {
            let traj = Trajectory::from_states(x_star.clone(), vec![a.clone(), b.clone()], lookup, l);
            let sums = iqc_partial_sums(&traj, &iqc, rho)?;
            if sums.first_negative(1e-9).is_some() {
                return Ok(Some((traj, sums)));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    fn eye(n: usize) -> DMatrix<f64> {
        DMatrix::identity(n, n)
    }

    #[test]
    fn sector_blocks_scalar() {
        let m = sector_matrix(&eye(1), 1.0, 10.0).unwrap();
        assert_eq!(m.q[(0, 0)], -20.0);
        assert_eq!(m.s[(0, 0)], 11.0);
        assert_eq!(m.r[(0, 0)], -2.0);
        assert!(sector_matrix(&eye(1), 10.0, 10.0).is_err());
    }

    #[test]
    fn sector_factorization_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = DMatrix::from_fn(2, 3, |_, _| rng.random_range(-1.0..1.0));
        let a = sector_matrix(&c, 0.5, 4.0).unwrap().assemble();
        let b = sector_matrix_factored(&c, 0.5, 4.0).unwrap().assemble();
        assert!((a - b).amax() < 1e-12);
    }

    #[test]
    fn off_by_one_blocks() {
        let m = off_by_one_matrix(&eye(1), 1.0, 10.0, 0.5).unwrap();
        assert_eq!(m.q, DMatrix::from_row_slice(2, 2, &[-20.0, 0.5, 0.5, 0.0]));
        assert_eq!(m.s, DMatrix::from_row_slice(1, 2, &[11.0, -0.5]));
        assert_eq!(m.r, DMatrix::from_element(1, 1, -2.0));
        let full = m.assemble();
        assert_eq!(full, full.transpose());
        assert!(off_by_one_matrix(&eye(1), 1.0, 10.0, -0.1).is_err());
    }

    #[test]
    fn off_by_one_reduces_to_padded_sector() {
        let c = DMatrix::from_row_slice(1, 2, &[1.0, -0.5]);
        let ob = off_by_one_matrix(&c, 1.0, 3.0, 0.0).unwrap();
        let sec = sector_matrix(&c, 1.0, 3.0).unwrap();
        assert_eq!(ob.q.view((0, 0), (2, 2)).into_owned(), sec.q);
        assert!(ob.q.row(2).iter().chain(ob.q.column(2).iter()).all(|&v| v == 0.0));
        assert_eq!(ob.s.view((0, 0), (1, 2)).into_owned(), sec.s);
        assert_eq!(ob.s[(0, 2)], 0.0);
        assert_eq!(ob.r, sec.r);
    }

    #[test]
    fn off_by_one_factorization_agrees() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, -0.2, 0.8]);
        let a = off_by_one_matrix(&c, 0.7, 5.0, 0.4).unwrap().assemble();
        let b = off_by_one_matrix_factored(&c, 0.7, 5.0, 0.4).unwrap().assemble();
        assert!((a - b).amax() < 1e-12);
    }

    #[test]
    fn noise_augmentation() {
        let base = sector_matrix(&eye(1), 1.0, 10.0).unwrap();
        let z = noise_augment(&base, 0.1, 0.0).unwrap();
        assert_eq!(z.iqc.r, DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, 0.0]));
        let ok = noise_augment(&base, 0.1, 35.0).unwrap();
        assert!(ok.admissible);
        assert!((ok.iqc.r[(0, 0)] + 1.65).abs() < 1e-12);
        assert_eq!(ok.iqc.r[(1, 1)], -35.0);
        let bad = noise_augment(&base, 0.1, 250.0).unwrap();
        assert!(!bad.admissible);
        assert!((bad.iqc.r[(0, 0)] - 0.5).abs() < 1e-12);
        assert!(noise_augment(&base, 1.0, 1.0).is_err());
        assert!(noise_augment(&base, 0.5, -1.0).is_err());
    }

    #[test]
    fn boundary_feedback_annihilates_sector_form() {
        let iqc = sector_matrix(&eye(1), 1.0, 10.0).unwrap();
        let xs: Vec<_> = (0..20).map(|k| scalar(0.9f64.powi(k))).collect();
        let traj = Trajectory::from_states(scalar(0.0), xs, |x| x * 1.0, 10.0);
        let sums = iqc_partial_sums(&traj, &iqc, 0.8).unwrap();
        assert!(sums
            .scaled
            .iter()
            .zip(&sums.magnitude)
            .all(|(t, a)| t.abs() <= 1e-14 * a));
    }

    #[test]
    fn sector_summand_factorization_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (m, l) = (0.3, 7.0);
        let iqc = sector_matrix(&eye(3), m, l).unwrap();
        for _ in 0..100 {
            let x = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
            let u = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
            let direct = iqc.quad_form(&x, &u);
            let factored = 2.0 * (&x * l - &u).dot(&(&u - &x * m));
            assert!((direct - factored).abs() <= 1e-12 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn zero_noise_augmentation_leaves_partial_sums_unchanged() {
        let iqc = sector_matrix(&eye(2), 1.0, 4.0).unwrap();
        let xs: Vec<_> = (0..30)
            .map(|k| DVector::from_vec(vec![(0.3 * k as f64).sin(), 0.8f64.powi(k)]))
            .collect();
        let mut traj = Trajectory::from_states(DVector::zeros(2), xs, |x| x * 2.0, 4.0);
        traj.e = Some(vec![DVector::zeros(2); traj.len()]);
        let plain = iqc_partial_sums(&traj, &iqc, 0.9).unwrap();
        let noisy = noise_augment(&iqc, 0.0, 3.0).unwrap();
        let aug = iqc_partial_sums(&traj, &noisy.iqc, 0.9).unwrap();
        assert_eq!(plain.scaled, aug.scaled);
    }

    #[test]
    fn rescaled_sums_survive_long_horizons() {
        let iqc = sector_matrix(&eye(1), 1.0, 10.0).unwrap();
        let xs: Vec<_> = (0..5000).map(|k| scalar(if k % 2 == 0 { 1.0 } else { -0.5 })).collect();
        let traj = Trajectory::from_states(scalar(0.0), xs, |x| x * 3.0, 10.0);
        let sums = iqc_partial_sums(&traj, &iqc, 0.5).unwrap();
        assert!(sums.scaled.iter().all(|t| t.is_finite() && *t > 0.0));
        assert!(sums.unscaled(4999).is_infinite());
        // σ(0) = 2(10 - 3)(3 - 1) = 28, σ(1) = 2(-5 + 1.5)(-1.5 + 0.5) = 7
        assert!((sums.unscaled(1) - (28.0 + 7.0 / 0.25)).abs() < 1e-9);
    }

    #[test]
    fn sector_check_examples() {
        let pts: Vec<_> = (-50..=50).map(|i| scalar(0.1 * i as f64 + 2.0)).collect();
        let star = scalar(2.0);
        for k in [1.0, 4.0, 10.0] {
            let r = sector_membership_check(|x| (x - &star) * k, &pts, 1.0, 10.0, &star);
            assert!(r.holds, "k = {k}");
        }
        let piecewise = |x: &DVector<f64>| {
            let d = x[0] - 2.0;
            scalar(if d < 0.0 { 10.0 * d } else { d })
        };
        assert!(sector_membership_check(piecewise, &pts, 1.0, 10.0, &star).holds);
        let outside = sector_membership_check(|x| (x - &star) * 11.0, &pts, 1.0, 10.0, &star);
        assert!(!outside.holds);
        assert!(outside.worst_violation > 0.0);
    }

    #[test]
    fn monotone_check_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pairs: Vec<_> = (0..500)
            .map(|_| {
                (
                    DVector::from_fn(2, |_, _| rng.random_range(-3.0..3.0)),
                    DVector::from_fn(2, |_, _| rng.random_range(-3.0..3.0)),
                )
            })
            .collect();
        let h = DMatrix::from_row_slice(2, 2, &[5.0, 2.0, 2.0, 3.0]);
        assert!(monotone_membership_check(|x| &h * x, &pairs, 1.0, 10.0).holds);
        let soft = |x: &DVector<f64>| x.map(|t| 2.0 * t + (t).atan());
        assert!(monotone_membership_check(soft, &pairs, 2.0, 3.0).holds);
        let steep = monotone_membership_check(|x| x * 12.0, &pairs, 1.0, 10.0);
        assert!(!steep.holds);
    }

    #[test]
    fn gradient_descent_plant_and_augmentation() {
        let sys = LtiSystem::gradient_descent(0.2, 1);
        let aug = sys.off_by_one(10.0);
        assert_eq!(aug.a, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 10.0, 0.0]));
        assert_eq!(aug.b, DMatrix::from_row_slice(2, 1, &[-0.2, -1.0]));
        let noisy = aug.with_noise_channel();
        assert_eq!(noisy.b, DMatrix::from_row_slice(2, 2, &[-0.2, -0.2, -1.0, -1.0]));
        let exact_v = sys.off_by_one_with_noise(10.0);
        assert_eq!(exact_v.b, DMatrix::from_row_slice(2, 2, &[-0.2, -0.2, -1.0, 0.0]));
        assert_eq!(exact_v.a, aug.a);
        assert!(LtiSystem::new(eye(2), DMatrix::zeros(2, 1), DMatrix::zeros(1, 2)).is_err());
        assert!(LtiSystem::new(eye(2), DMatrix::zeros(3, 1), DMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn v_recursion_validated() {
        let xs: Vec<_> = (0..5).map(|k| scalar(k as f64)).collect();
        let mut traj = Trajectory::from_states(scalar(1.0), xs, |x| x * 2.0, 5.0);
        traj.validate(5.0).unwrap();
        assert_eq!(traj.v.as_ref().unwrap()[0][0], 0.0);
        // v(1) = L(x0 - x⋆) - u0 = 5 * (-1) - 0
        assert_eq!(traj.v.as_ref().unwrap()[1][0], -5.0);
        traj.v.as_mut().unwrap()[3][0] += 1.0;
        assert!(traj.validate(5.0).is_err());
    }
}
