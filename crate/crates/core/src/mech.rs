//! Discrete mechanics on Q × Q for Q = ℝⁿ: discrete Lagrangians, forced
//! discrete Euler–Lagrange residuals, discrete Legendre transforms and the
//! forward variational integrator.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::solvers::{self, ResidualSystem, SolverOptions};

const SYMMETRY_TOL: f64 = 1e-12;

fn fd_step(x: f64) -> f64 {
    1e-6 * (1.0 + x.abs())
}

/// Central-difference gradient of a scalar function.
pub(crate) fn central_gradient(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>) -> DVector<f64> {
    let mut xp = x.clone();
    DVector::from_fn(x.len(), |i, _| {
        let h = fd_step(x[i]);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        (fp - fm) / (2.0 * h)
    })
}

/// Central-difference Jacobian of a vector function.
pub(crate) fn central_jacobian(
    f: impl Fn(&DVector<f64>) -> DVector<f64>,
    x: &DVector<f64>,
    rows: usize,
) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(rows, x.len());
    let mut xp = x.clone();
    for j in 0..x.len() {
        let h = fd_step(x[j]);
        xp[j] = x[j] + h;
        let fp = f(&xp);
        xp[j] = x[j] - h;
        let fm = f(&xp);
        xp[j] = x[j];
        jac.set_column(j, &((fp - fm) / (2.0 * h)));
    }
    jac
}

/// Potential energy `V : ℝⁿ → ℝ`.
pub trait Potential: Send + Sync {
    fn value(&self, q: &DVector<f64>) -> f64;

    fn gradient(&self, q: &DVector<f64>) -> DVector<f64> {
        central_gradient(|x| self.value(x), q)
    }

    fn hessian(&self, q: &DVector<f64>) -> DMatrix<f64> {
        central_jacobian(|x| self.gradient(x), q, q.len())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPotential;

impl Potential for ZeroPotential {
    fn value(&self, _q: &DVector<f64>) -> f64 {
        0.0
    }
    fn gradient(&self, q: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(q.len())
    }
    fn hessian(&self, q: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(q.len(), q.len())
    }
}

/// `V(q) = ½ qᵀ K q` with symmetric `K`.
#[derive(Debug, Clone)]
pub struct QuadraticPotential {
    pub stiffness: DMatrix<f64>,
}

impl Potential for QuadraticPotential {
    fn value(&self, q: &DVector<f64>) -> f64 {
        0.5 * q.dot(&(&self.stiffness * q))
    }
    fn gradient(&self, q: &DVector<f64>) -> DVector<f64> {
        &self.stiffness * q
    }
    fn hessian(&self, _q: &DVector<f64>) -> DMatrix<f64> {
        self.stiffness.clone()
    }
}

/// Decoupled pendula, `V(q) = -w Σ cos qᵢ`.
#[derive(Debug, Clone, Copy)]
pub struct PendulumPotential {
    pub weight: f64,
}

impl Potential for PendulumPotential {
    fn value(&self, q: &DVector<f64>) -> f64 {
        -self.weight * q.iter().map(|x| x.cos()).sum::<f64>()
    }
    fn gradient(&self, q: &DVector<f64>) -> DVector<f64> {
        q.map(|x| self.weight * x.sin())
    }
    fn hessian(&self, q: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(&q.map(|x| self.weight * x.cos()))
    }
}

/// Potential given by a closure; derivatives by finite differences.
pub struct FnPotential<F>(pub F);

impl<F: Fn(&DVector<f64>) -> f64 + Send + Sync> Potential for FnPotential<F> {
    fn value(&self, q: &DVector<f64>) -> f64 {
        (self.0)(q)
    }
}

/// A discrete Lagrangian `L_d(q_k, q_{k+1})`. Derivatives default to central
/// differences with step `1e-6 (1 + |q|)`.
pub trait DiscreteLagrangian {
    fn dim(&self) -> usize;

    fn value(&self, qk: &DVector<f64>, qk1: &DVector<f64>) -> f64;

    fn d1(&self, qk: &DVector<f64>, qk1: &DVector<f64>) -> DVector<f64> {
        central_gradient(|x| self.value(x, qk1), qk)
    }

    fn d2(&self, qk: &DVector<f64>, qk1: &DVector<f64>) -> DVector<f64> {
        central_gradient(|x| self.value(qk, x), qk1)
    }

    /// `∂(D₁L_d)/∂q_k`.
    fn d11(&self, qk: &DVector<f64>, qk1: &DVector<f64>) -> DMatrix<f64> {
        central_jacobian(|x| self.d1(x, qk1), qk, self.dim())
    }

    /// `∂(D₁L_d)/∂q_{k+1}`.
    fn d12(&self, qk: &DVector<f64>, qk1: &DVector<f64>) -> DMatrix<f64> {
        central_jacobian(|x| self.d1(qk, x), qk1, self.dim())
    }

    /// `∂(D₂L_d)/∂q_{k+1}`.
    fn d22(&self, qk: &DVector<f64>, qk1: &DVector<f64>) -> DMatrix<f64> {
        central_jacobian(|x| self.d2(qk, x), qk1, self.dim())
    }
}

/// `L(q, q̇) = ½ q̇ᵀ M q̇ − V(q)` discretized by the trapezoidal rule with step `h`.
#[derive(Clone)]
pub struct RnLagrangian {
    mass: DMatrix<f64>,
    potential: Arc<dyn Potential>,
    h: f64,
}

impl fmt::Debug for RnLagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RnLagrangian").field("mass", &self.mass).field("h", &self.h).finish_non_exhaustive()
    }
}

impl RnLagrangian {
    /// Rejects non-square, asymmetric or singular mass matrices and `h ≤ 0`.
    pub fn new(mass: DMatrix<f64>, potential: Arc<dyn Potential>, h: f64) -> Result<Self> {
        if !mass.is_square() {
            return Err(Error::InvalidInput("mass matrix must be square".into()));
        }
        if (&mass - mass.transpose()).abs().max() > SYMMETRY_TOL {
            return Err(Error::InvalidInput("mass matrix must be symmetric".into()));
        }
        if mass.clone().lu().try_inverse().is_none() {
            return Err(Error::InvalidInput("mass matrix must be invertible".into()));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("step must be positive, got {h}")));
        }
        Ok(RnLagrangian { mass, potential, h })
    }

    pub fn free(mass: DMatrix<f64>, h: f64) -> Result<Self> {
        Self::new(mass, Arc::new(ZeroPotential), h)
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn potential(&self) -> &dyn Potential {
        self.potential.as_ref()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Same model with a different step.
    pub fn with_step(&self, h: f64) -> Result<Self> {
        Self::new(self.mass.clone(), self.potential.clone(), h)
    }

    /// Continuous energy `½ vᵀ M v + V(q)`.
    pub fn energy(&self, q: &DVector<f64>, v: &DVector<f64>) -> f64 {
        0.5 * v.dot(&(&self.mass * v)) + self.potential.value(q)
    }
}

impl DiscreteLagrangian for RnLagrangian {
    fn dim(&self) -> usize {
        self.mass.nrows()
    }

    fn value(&self, qk: &DVector<f64>, qk1: &DVector<f64>) -> f64 {
        trapezoidal_ld(self, qk, qk1)
    }

    fn d1(&self, qk: &DVector<f64>, qk1: &DVector<f64>) -> DVector<f64> {
        let d = qk1 - qk;
        -(&self.mass * d) / self.h - self.potential.gradient(qk) * (0.5 * self.h)
    }

    fn d2(&self, qk: &DVector<f64>, qk1: &DVector<f64>) -> DVector<f64> {
        let d = qk1 - qk;
        (&self.mass * d) / self.h - self.potential.gradient(qk1) * (0.5 * self.h)
    }

    fn d11(&self, qk: &DVector<f64>, _qk1: &DVector<f64>) -> DMatrix<f64> {
        &self.mass / self.h - self.potential.hessian(qk) * (0.5 * self.h)
    }

    fn d12(&self, _qk: &DVector<f64>, _qk1: &DVector<f64>) -> DMatrix<f64> {
        -&self.mass / self.h
    }

    fn d22(&self, _qk: &DVector<f64>, qk1: &DVector<f64>) -> DMatrix<f64> {
        &self.mass / self.h - self.potential.hessian(qk1) * (0.5 * self.h)
    }
}

/// `(1/2h) δᵀ M δ − (h/2)(V(q_k) + V(q_{k+1}))` with `δ = q_{k+1} − q_k`.
pub fn trapezoidal_ld(l: &RnLagrangian, qk: &DVector<f64>, qk1: &DVector<f64>) -> f64 {
    let d = qk1 - qk;
    d.dot(&(&l.mass * &d)) / (2.0 * l.h) - 0.5 * l.h * (l.potential.value(qk) + l.potential.value(qk1))
}

/// Left and right discrete forces `f⁻(q_k, q_{k+1}, u⁻)`, `f⁺(q_k, q_{k+1}, u⁺)`.
pub trait ForcePair {
    fn dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    fn f_minus(&self, qk: &DVector<f64>, qk1: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    fn f_plus(&self, qk: &DVector<f64>, qk1: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
}

/// Forces affine in the control: `f^± = B^± u + A^±`, constant coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForces {
    pub b_minus: DMatrix<f64>,
    pub b_plus: DMatrix<f64>,
    pub a_minus: DVector<f64>,
    pub a_plus: DVector<f64>,
}

impl AffineForces {
    pub fn new(b_minus: DMatrix<f64>, b_plus: DMatrix<f64>, a_minus: DVector<f64>, a_plus: DVector<f64>) -> Result<Self> {
        let n = b_minus.nrows();
        if b_plus.nrows() != n || b_minus.ncols() != b_plus.ncols() || a_minus.len() != n || a_plus.len() != n {
            return Err(Error::DimensionMismatch("affine force blocks disagree in shape".into()));
        }
        if b_minus.ncols() > n {
            return Err(Error::DimensionMismatch("more controls than degrees of freedom".into()));
        }
        Ok(AffineForces { b_minus, b_plus, a_minus, a_plus })
    }

    /// `f^± = u^±`.
    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    /// `f^± = s u^±`; `s = h/2` makes `u` a physical force sampled at the nodes.
    pub fn scaled_identity(n: usize, s: f64) -> Self {
        AffineForces {
            b_minus: DMatrix::identity(n, n) * s,
            b_plus: DMatrix::identity(n, n) * s,
            a_minus: DVector::zeros(n),
            a_plus: DVector::zeros(n),
        }
    }

    /// `f^± = s B u^±` with a shared actuation matrix.
    pub fn actuated(b: DMatrix<f64>, s: f64) -> Self {
        let n = b.nrows();
        AffineForces {
            b_minus: &b * s,
            b_plus: &b * s,
            a_minus: DVector::zeros(n),
            a_plus: DVector::zeros(n),
        }
    }

    /// Control-free constant forces.
    pub fn constant(a_minus: DVector<f64>, a_plus: DVector<f64>) -> Self {
        let n = a_minus.len();
        AffineForces { b_minus: DMatrix::zeros(n, 0), b_plus: DMatrix::zeros(n, 0), a_minus, a_plus }
    }

    pub fn zero(n: usize) -> Self {
        Self::constant(DVector::zeros(n), DVector::zeros(n))
    }
}

impl ForcePair for AffineForces {
    fn dim(&self) -> usize {
        self.b_minus.nrows()
    }
    fn control_dim(&self) -> usize {
        self.b_minus.ncols()
    }
    fn f_minus(&self, _qk: &DVector<f64>, _qk1: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.b_minus * u + &self.a_minus
    }
    fn f_plus(&self, _qk: &DVector<f64>, _qk1: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.b_plus * u + &self.a_plus
    }
}

/// `D₂L_d(q_{k−1}, q_k) + D₁L_d(q_k, q_{k+1}) + f⁺_{k−1} + f⁻_k`.
#[allow(clippy::too_many_arguments)]
pub fn forced_del_residual<L: DiscreteLagrangian + ?Sized, F: ForcePair + ?Sized>(
    l: &L,
    forces: &F,
    qkm1: &DVector<f64>,
    qk: &DVector<f64>,
    qkp1: &DVector<f64>,
    u_km1_plus: &DVector<f64>,
    u_k_minus: &DVector<f64>,
) -> DVector<f64> {
    l.d2(qkm1, qk) + l.d1(qk, qkp1) + forces.f_plus(qkm1, qk, u_km1_plus) + forces.f_minus(qk, qkp1, u_k_minus)
}

/// Forced discrete Legendre transforms `p_k = −D₁L_d − f⁻_k`, `p_{k+1} = D₂L_d + f⁺_k`.
pub fn legendre_pair<L: DiscreteLagrangian + ?Sized, F: ForcePair + ?Sized>(
    l: &L,
    forces: &F,
    qk: &DVector<f64>,
    qkp1: &DVector<f64>,
    u_minus: &DVector<f64>,
    u_plus: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let pk = -l.d1(qk, qkp1) - forces.f_minus(qk, qkp1, u_minus);
    let pk1 = l.d2(qk, qkp1) + forces.f_plus(qk, qkp1, u_plus);
    (pk, pk1)
}

/// Control pair `(u⁻_k, u⁺_k)` for one interval.
pub type ControlPair = (DVector<f64>, DVector<f64>);

struct StepSystem<'a, L: ?Sized, F: ?Sized> {
    l: &'a L,
    forces: &'a F,
    qkm1: &'a DVector<f64>,
    qk: &'a DVector<f64>,
    u_prev_plus: &'a DVector<f64>,
    u_minus: &'a DVector<f64>,
}

impl<L: DiscreteLagrangian + ?Sized, F: ForcePair + ?Sized> ResidualSystem for StepSystem<'_, L, F> {
    fn dim(&self) -> usize {
        self.l.dim()
    }

    fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(forced_del_residual(self.l, self.forces, self.qkm1, self.qk, x, self.u_prev_plus, self.u_minus))
    }

    fn jacobian(&self, x: &DVector<f64>) -> Option<Result<DMatrix<f64>>> {
        let n = self.l.dim();
        let force_part = central_jacobian(|y| self.forces.f_minus(self.qk, y, self.u_minus), x, n);
        Some(Ok(self.l.d12(self.qk, x) + force_part))
    }
}

/// Forward variational integrator. Produces `q_0..q_N` from `(q_0, q_1)`.
///
/// `controls[k] = (u⁻_k, u⁺_k)` for interval `k`; an empty slice means zero controls.
pub fn integrate<L: DiscreteLagrangian + ?Sized, F: ForcePair + ?Sized>(
    l: &L,
    forces: &F,
    q0: &DVector<f64>,
    q1: &DVector<f64>,
    controls: &[ControlPair],
    steps: usize,
) -> Result<Vec<DVector<f64>>> {
    let n = l.dim();
    if q0.len() != n || q1.len() != n || forces.dim() != n {
        return Err(Error::DimensionMismatch("initial data and forces must match the Lagrangian".into()));
    }
    if steps == 0 {
        return Ok(vec![q0.clone()]);
    }
    if !controls.is_empty() && controls.len() < steps {
        return Err(Error::DimensionMismatch(format!("need {steps} control pairs, got {}", controls.len())));
    }
    let zero = DVector::zeros(forces.control_dim());
    let control = |k: usize| -> (&DVector<f64>, &DVector<f64>) {
        controls.get(k).map(|(a, b)| (a, b)).unwrap_or((&zero, &zero))
    };
    let opts = SolverOptions { tol: 1e-12, max_iter: 50 };
    let mut q = vec![q0.clone(), q1.clone()];
    for k in 1..steps {
        let guess = &q[k] * 2.0 - &q[k - 1];
        let sys = StepSystem {
            l,
            forces,
            qkm1: &q[k - 1],
            qk: &q[k],
            u_prev_plus: control(k - 1).1,
            u_minus: control(k).0,
        };
        let report = solvers::newton(&sys, guess, &opts).map_err(|_| Error::StepSolveFailed { step: k, residual: f64::NAN })?;
        if report.residual_norm > 1e-10 {
            return Err(Error::StepSolveFailed { step: k, residual: report.residual_norm });
        }
        q.push(report.x);
    }
    Ok(q)
}

struct MomentumStep<'a, L: ?Sized, F: ?Sized> {
    l: &'a L,
    forces: &'a F,
    qk: &'a DVector<f64>,
    pk: &'a DVector<f64>,
    u_minus: &'a DVector<f64>,
}

impl<L: DiscreteLagrangian + ?Sized, F: ForcePair + ?Sized> ResidualSystem for MomentumStep<'_, L, F> {
    fn dim(&self) -> usize {
        self.l.dim()
    }

    fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.pk + self.l.d1(self.qk, x) + self.forces.f_minus(self.qk, x, self.u_minus))
    }

    fn jacobian(&self, x: &DVector<f64>) -> Option<Result<DMatrix<f64>>> {
        let n = self.l.dim();
        let force_part = central_jacobian(|y| self.forces.f_minus(self.qk, y, self.u_minus), x, n);
        Some(Ok(self.l.d12(self.qk, x) + force_part))
    }
}

/// Position–momentum form of [`integrate`]: from `(q_0, p_0)` solves
/// `p_k = −D₁L_d(q_k, q_{k+1}) − f⁻_k` for `q_{k+1}` and sets
/// `p_{k+1} = D₂L_d(q_k, q_{k+1}) + f⁺_k`. Returns `(q_0..q_N, p_0..p_N)`.
#[allow(clippy::type_complexity)]
pub fn integrate_momentum<L: DiscreteLagrangian + ?Sized, F: ForcePair + ?Sized>(
    l: &L,
    forces: &F,
    q0: &DVector<f64>,
    p0: &DVector<f64>,
    controls: &[ControlPair],
    steps: usize,
) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>)> {
    let n = l.dim();
    if q0.len() != n || p0.len() != n || forces.dim() != n {
        return Err(Error::DimensionMismatch("initial data and forces must match the Lagrangian".into()));
    }
    if !controls.is_empty() && controls.len() < steps {
        return Err(Error::DimensionMismatch(format!("need {steps} control pairs, got {}", controls.len())));
    }
    let zero = DVector::zeros(forces.control_dim());
    let opts = SolverOptions { tol: 1e-12, max_iter: 50 };
    let mut q = vec![q0.clone()];
    let mut p = vec![p0.clone()];
    for k in 0..steps {
        let (um, up) = controls.get(k).map(|(a, b)| (a, b)).unwrap_or((&zero, &zero));
        let guess = if k > 0 { &q[k] * 2.0 - &q[k - 1] } else { q[k].clone() };
        let sys = MomentumStep { l, forces, qk: &q[k], pk: &p[k], u_minus: um };
        let report = solvers::newton(&sys, guess, &opts).map_err(|_| Error::StepSolveFailed { step: k, residual: f64::NAN })?;
        if report.residual_norm > 1e-10 * (1.0 + p[k].amax()) {
            return Err(Error::StepSolveFailed { step: k, residual: report.residual_norm });
        }
        let q1 = report.x;
        let p1 = l.d2(&q[k], &q1) + forces.f_plus(&q[k], &q1, up);
        q.push(q1);
        p.push(p1);
    }
    Ok((q, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn one_d(potential: Arc<dyn Potential>, h: f64) -> RnLagrangian {
        RnLagrangian::new(DMatrix::identity(1, 1), potential, h).unwrap()
    }

    #[test]
    fn trapezoidal_values() {
        let l = one_d(Arc::new(ZeroPotential), 0.1);
        assert_eq!(trapezoidal_ld(&l, &v(&[0.3]), &v(&[0.3])), 0.0);
        assert_relative_eq!(trapezoidal_ld(&l, &v(&[0.0]), &v(&[1.0])), 5.0, epsilon = 1e-14);
        let osc = one_d(Arc::new(QuadraticPotential { stiffness: DMatrix::identity(1, 1) }), 1.0);
        assert_eq!(trapezoidal_ld(&osc, &v(&[0.0]), &v(&[0.0])), 0.0);
    }

    #[test]
    fn rejects_bad_mass() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(RnLagrangian::free(m, 0.1).is_err());
        assert!(RnLagrangian::free(DMatrix::zeros(2, 2), 0.1).is_err());
        assert!(RnLagrangian::free(DMatrix::identity(2, 2), 0.0).is_err());
    }

    #[test]
    fn analytic_derivatives_match_generic_defaults() {
        struct Generic<'a>(&'a RnLagrangian);
        impl DiscreteLagrangian for Generic<'_> {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn value(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
                self.0.value(a, b)
            }
        }
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let l = RnLagrangian::new(m, Arc::new(PendulumPotential { weight: 2.0 }), 0.05).unwrap();
        let g = Generic(&l);
        let (a, b) = (v(&[0.2, -0.4]), v(&[0.25, -0.37]));
        assert_relative_eq!(l.d1(&a, &b), g.d1(&a, &b), epsilon = 1e-6);
        assert_relative_eq!(l.d2(&a, &b), g.d2(&a, &b), epsilon = 1e-6);
        assert_relative_eq!(l.d11(&a, &b), g.d11(&a, &b), epsilon = 1e-3);
        assert_relative_eq!(l.d12(&a, &b), g.d12(&a, &b), epsilon = 1e-3);
        assert_relative_eq!(l.d22(&a, &b), g.d22(&a, &b), epsilon = 1e-3);
    }

    #[test]
    fn free_particle_residual_and_integration() {
        let h = 0.1;
        let l = one_d(Arc::new(ZeroPotential), h);
        let f = AffineForces::zero(1);
        let z = DVector::zeros(0);
        let r = forced_del_residual(&l, &f, &v(&[0.0]), &v(&[0.5]), &v(&[0.7]), &z, &z);
        assert_relative_eq!(r[0], (2.0 * 0.5 - 0.0 - 0.7) / h, epsilon = 1e-12);
        let q = integrate(&l, &f, &v(&[0.0]), &v(&[h]), &[], 20).unwrap();
        for (k, qk) in q.iter().enumerate() {
            assert_relative_eq!(qk[0], k as f64 * h, epsilon = 1e-12);
        }
    }

    #[test]
    fn oscillator_residual_matches_hand_assembly() {
        let h = 0.1;
        let l = one_d(Arc::new(QuadraticPotential { stiffness: DMatrix::identity(1, 1) }), h);
        let f = AffineForces::zero(1);
        let z = DVector::zeros(0);
        let (a, b, c) = (1.0, 0.1f64.cos(), 0.2f64.cos());
        let r = forced_del_residual(&l, &f, &v(&[a]), &v(&[b]), &v(&[c]), &z, &z)[0];
        // (b - a)/h - (h/2) b + (-(c - b)/h - (h/2) b)
        let hand = (b - a) / h - (c - b) / h - h * b;
        assert_relative_eq!(r, hand, epsilon = 1e-12);
    }

    #[test]
    fn constant_force_residual_oracle() {
        let h = 0.05;
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let l = RnLagrangian::free(m.clone(), h).unwrap();
        let c = v(&[0.3, -1.2]);
        let f = AffineForces::constant(&c * (h / 2.0), &c * (h / 2.0));
        let z = DVector::zeros(0);
        let q0 = v(&[0.1, 0.2]);
        let q1 = v(&[0.15, 0.1]);
        let q2 = &q1 * 2.0 - &q0 + m.clone().try_inverse().unwrap() * &c * (h * h);
        let r = forced_del_residual(&l, &f, &q0, &q1, &q2, &z, &z);
        assert!(r.amax() < 1e-12, "{r}");
        let q = integrate(&l, &f, &q0, &q1, &[], 2).unwrap();
        assert_relative_eq!(q[2], q2, epsilon = 1e-12);
    }

    #[test]
    fn legendre_pair_reproduces_explicit_momenta() {
        let h = 0.2;
        let m = DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, 0.7]);
        let pot = PendulumPotential { weight: 0.8 };
        let l = RnLagrangian::new(m.clone(), Arc::new(pot), h).unwrap();
        let f = AffineForces::identity(2);
        let (x0, x1) = (v(&[0.3, -0.1]), v(&[0.5, 0.2]));
        let (um, up) = (v(&[0.4, 0.9]), v(&[-0.3, 0.1]));
        let (p0, p1) = legendre_pair(&l, &f, &x0, &x1, &um, &up);
        let vel = (&x1 - &x0) / h;
        let p0_oracle = &m * &vel + pot.gradient(&x0) * (h / 2.0) - &um;
        let p1_oracle = &m * &vel - pot.gradient(&x1) * (h / 2.0) + &up;
        assert_relative_eq!(p0, p0_oracle, epsilon = 1e-12);
        assert_relative_eq!(p1, p1_oracle, epsilon = 1e-12);
    }

    #[test]
    fn momentum_matching_along_trajectory() {
        let h = 0.05;
        let l = one_d(Arc::new(PendulumPotential { weight: 1.0 }), h);
        let f = AffineForces::scaled_identity(1, h / 2.0);
        let controls: Vec<ControlPair> =
            (0..30).map(|k| (v(&[(k as f64 * 0.1).sin()]), v(&[(k as f64 * 0.1 + 0.05).cos()]))).collect();
        let q = integrate(&l, &f, &v(&[0.4]), &v(&[0.42]), &controls, 30).unwrap();
        for k in 1..30 {
            let (_, p_left) = legendre_pair(&l, &f, &q[k - 1], &q[k], &controls[k - 1].0, &controls[k - 1].1);
            let (p_right, _) = legendre_pair(&l, &f, &q[k], &q[k + 1], &controls[k].0, &controls[k].1);
            assert_relative_eq!(p_left, p_right, epsilon = 1e-10);
        }
    }

    #[test]
    fn momentum_form_agrees_with_position_form() {
        let l = RnLagrangian::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 2.0]),
            Arc::new(PendulumPotential { weight: 1.3 }),
            0.05,
        )
        .unwrap();
        let f = AffineForces::scaled_identity(2, 0.025);
        let u = vec![(v(&[0.3, -0.1]), v(&[0.2, 0.0])); 40];
        let (q, p) = integrate_momentum(&l, &f, &v(&[0.1, 0.2]), &v(&[0.5, -0.3]), &u, 40).unwrap();
        let q2 = integrate(&l, &f, &q[0], &q[1], &u, 40).unwrap();
        for k in 0..=40 {
            assert!((&q[k] - &q2[k]).amax() < 1e-10);
        }
        let (pk, _) = legendre_pair(&l, &f, &q[7], &q[8], &u[7].0, &u[7].1);
        assert!((pk - &p[7]).amax() < 1e-10);
    }
}
