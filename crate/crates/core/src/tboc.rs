//! Optimal control on T*Q × T*Q for Q = ℝⁿ.
//!
//! The cost is rewritten as a Lagrangian `𝓛_d(x_k, p_k, x_{k+1}, p_{k+1})` by
//! solving the forced Legendre transforms for the controls. Its discrete
//! Euler–Lagrange equations, with the boundary states pinned, form a square
//! root-finding problem in the interior states `(x_k, p_k)`, `k = 1..N−1`.
//!
//! Underactuated models (`rank B < n`) add, per interval, the `n − m`
//! components of each momentum equation that the controls cannot reach as
//! constraints `Φ^±`, with multipliers `λ^±`.

use std::sync::Arc;

use log::info;
use nalgebra::{DMatrix, DVector};

use crate::cost::{ControlPenalty, QuadraticEffort};
use crate::error::{Error, Result};
use crate::mech::{central_gradient, AffineForces, ControlPair, DiscreteLagrangian, ForcePair, RnLagrangian};
use crate::solvers::{self, ResidualSystem, SolveReport, SolverKind, SolverOptions};

/// Partial gradients of an interval cost `C_d(q_k, u⁻, q_{k+1}, u⁺)`.
#[derive(Debug, Clone)]
pub struct CostGradient {
    pub qk: DVector<f64>,
    pub u_minus: DVector<f64>,
    pub qk1: DVector<f64>,
    pub u_plus: DVector<f64>,
}

/// Interval cost `C_d(q_k, u⁻_k, q_{k+1}, u⁺_k)`.
pub trait ControlCost: Send + Sync {
    fn value(&self, qk: &DVector<f64>, um: &DVector<f64>, qk1: &DVector<f64>, up: &DVector<f64>) -> f64;

    /// Defaults to central differences.
    fn gradient(&self, qk: &DVector<f64>, um: &DVector<f64>, qk1: &DVector<f64>, up: &DVector<f64>) -> CostGradient {
        CostGradient {
            qk: central_gradient(|x| self.value(x, um, qk1, up), qk),
            u_minus: central_gradient(|x| self.value(qk, x, qk1, up), um),
            qk1: central_gradient(|x| self.value(qk, um, x, up), qk1),
            u_plus: central_gradient(|x| self.value(qk, um, qk1, x), up),
        }
    }
}

/// `(h/2)(C(u⁻) + C(u⁺))`, the trapezoidal rule for `∫ C(u) dt`.
#[derive(Debug, Clone)]
pub struct NodeCost {
    pub h: f64,
    pub penalty: Arc<dyn ControlPenalty>,
}

impl NodeCost {
    /// `w (h/4)(‖u⁻‖² + ‖u⁺‖²)`.
    pub fn effort(h: f64, weight: f64) -> Self {
        NodeCost { h, penalty: Arc::new(QuadraticEffort { weight }) }
    }
}

impl ControlCost for NodeCost {
    fn value(&self, _qk: &DVector<f64>, um: &DVector<f64>, _qk1: &DVector<f64>, up: &DVector<f64>) -> f64 {
        0.5 * self.h * (self.penalty.value(um) + self.penalty.value(up))
    }

    fn gradient(&self, qk: &DVector<f64>, um: &DVector<f64>, qk1: &DVector<f64>, up: &DVector<f64>) -> CostGradient {
        CostGradient {
            qk: DVector::zeros(qk.len()),
            u_minus: self.penalty.gradient(um) * (0.5 * self.h),
            qk1: DVector::zeros(qk1.len()),
            u_plus: self.penalty.gradient(up) * (0.5 * self.h),
        }
    }
}

/// Pinned boundary states `(x(0), p(0), x(T), p(T))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRn {
    pub x0: DVector<f64>,
    pub p0: DVector<f64>,
    pub xt: DVector<f64>,
    pub pt: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Actuation {
    Full,
    Underactuated { b_minus: DMatrix<f64>, b_plus: DMatrix<f64>, a_minus: DVector<f64>, a_plus: DVector<f64> },
}

/// Numerical rank with relative threshold `1e-10`.
pub(crate) fn rank(b: &DMatrix<f64>) -> usize {
    if b.ncols() == 0 || b.nrows() == 0 {
        return 0;
    }
    let s = b.clone().svd(false, false).singular_values;
    let smax = s.max();
    s.iter().filter(|&&x| x > 1e-10 * smax.max(1e-300)).count()
}

/// Left inverse `(BᵀB)⁻¹Bᵀ` and an orthonormal basis of `range(B)^⊥` (from QR of `[B | I]`).
pub(crate) fn actuation_maps(b: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, m) = b.shape();
    let r = rank(b);
    if r != m {
        return Err(Error::RankDeficient { rank: r, expected: m });
    }
    let pinv = (b.transpose() * b)
        .try_inverse()
        .ok_or(Error::RankDeficient { rank: r, expected: m })?
        * b.transpose();
    let mut aug = DMatrix::zeros(n, m + n);
    aug.view_mut((0, 0), (n, m)).copy_from(b);
    aug.view_mut((0, m), (n, n)).copy_from(&DMatrix::identity(n, n));
    let q = aug.qr().q();
    let complement = q.columns(m, n - m).into_owned();
    Ok((pinv, complement))
}

/// Optimal control problem on T*ℝⁿ.
#[derive(Clone)]
pub struct OcProblemRn {
    lagrangian: RnLagrangian,
    forces: AffineForces,
    cost: Arc<dyn ControlCost>,
    boundary: BoundaryRn,
    steps: usize,
    pinv_minus: DMatrix<f64>,
    pinv_plus: DMatrix<f64>,
    comp_minus: DMatrix<f64>,
    comp_plus: DMatrix<f64>,
}

impl std::fmt::Debug for OcProblemRn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OcProblemRn")
            .field("lagrangian", &self.lagrangian)
            .field("forces", &self.forces)
            .field("boundary", &self.boundary)
            .field("steps", &self.steps)
            .finish_non_exhaustive()
    }
}

/// Interval data derived from `(x_k, p_k, x_{k+1}, p_{k+1})`.
struct IntervalEval {
    u_minus: DVector<f64>,
    u_plus: DVector<f64>,
    phi_minus: DVector<f64>,
    phi_plus: DVector<f64>,
}

/// Result of [`OcProblemRn::solve`].
#[derive(Debug, Clone)]
pub struct OcSolutionRn {
    pub x: Vec<DVector<f64>>,
    pub p: Vec<DVector<f64>>,
    pub controls: Vec<ControlPair>,
    pub lambda: Vec<(DVector<f64>, DVector<f64>)>,
    pub cost: f64,
    pub report: SolveReport,
}

impl OcProblemRn {
    pub fn new(
        lagrangian: RnLagrangian,
        forces: AffineForces,
        cost: Arc<dyn ControlCost>,
        boundary: BoundaryRn,
        steps: usize,
    ) -> Result<Self> {
        let n = lagrangian.dim();
        if steps < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 steps, got {steps}")));
        }
        if forces.dim() != n {
            return Err(Error::DimensionMismatch(format!("forces act on ℝ^{} but Q = ℝ^{n}", forces.dim())));
        }
        for (name, v) in [("x0", &boundary.x0), ("p0", &boundary.p0), ("xT", &boundary.xt), ("pT", &boundary.pt)] {
            if v.len() != n {
                return Err(Error::DimensionMismatch(format!("boundary {name} has length {}, expected {n}", v.len())));
            }
        }
        if forces.control_dim() == 0 {
            return Err(Error::InvalidInput("optimal control needs at least one control".into()));
        }
        let (pinv_minus, comp_minus) = actuation_maps(&forces.b_minus)?;
        let (pinv_plus, comp_plus) = actuation_maps(&forces.b_plus)?;
        Ok(OcProblemRn { lagrangian, forces, cost, boundary, steps, pinv_minus, pinv_plus, comp_minus, comp_plus })
    }

    pub fn lagrangian(&self) -> &RnLagrangian {
        &self.lagrangian
    }

    pub fn forces(&self) -> &AffineForces {
        &self.forces
    }

    pub fn boundary(&self) -> &BoundaryRn {
        &self.boundary
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dim(&self) -> usize {
        self.lagrangian.dim()
    }

    pub fn control_dim(&self) -> usize {
        self.forces.control_dim()
    }

    pub fn actuation(&self) -> Actuation {
        if self.control_dim() == self.dim() {
            Actuation::Full
        } else {
            Actuation::Underactuated {
                b_minus: self.forces.b_minus.clone(),
                b_plus: self.forces.b_plus.clone(),
                a_minus: self.forces.a_minus.clone(),
                a_plus: self.forces.a_plus.clone(),
            }
        }
    }

    /// Number of unactuated directions `n − dim U`.
    pub fn unactuated_dim(&self) -> usize {
        self.dim() - self.control_dim()
    }

    /// `2(N−1)n`.
    pub fn state_unknowns(&self) -> usize {
        2 * (self.steps - 1) * self.dim()
    }

    /// `2N(n − dim U)`.
    pub fn multiplier_unknowns(&self) -> usize {
        2 * self.steps * self.unactuated_dim()
    }

    pub fn unknown_dim(&self) -> usize {
        self.state_unknowns() + self.multiplier_unknowns()
    }

    /// Splits the unknown vector into full state sequences (boundaries inserted) and multipliers.
    #[allow(clippy::type_complexity)]
    pub fn unpack(&self, z: &DVector<f64>) -> (Vec<DVector<f64>>, Vec<DVector<f64>>, Vec<(DVector<f64>, DVector<f64>)>) {
        let n = self.dim();
        let nn = self.steps;
        let mut x = Vec::with_capacity(nn + 1);
        let mut p = Vec::with_capacity(nn + 1);
        x.push(self.boundary.x0.clone());
        p.push(self.boundary.p0.clone());
        for k in 1..nn {
            let off = 2 * n * (k - 1);
            x.push(z.rows(off, n).into_owned());
            p.push(z.rows(off + n, n).into_owned());
        }
        x.push(self.boundary.xt.clone());
        p.push(self.boundary.pt.clone());
        let r = self.unactuated_dim();
        let base = self.state_unknowns();
        let lambda = (0..nn)
            .map(|k| {
                let off = base + 2 * r * k;
                (z.rows(off, r).into_owned(), z.rows(off + r, r).into_owned())
            })
            .collect();
        (x, p, lambda)
    }

    /// Inverse of [`unpack`](Self::unpack); boundary entries of `x`, `p` are ignored.
    pub fn pack(&self, x: &[DVector<f64>], p: &[DVector<f64>], lambda: &[(DVector<f64>, DVector<f64>)]) -> DVector<f64> {
        let n = self.dim();
        let r = self.unactuated_dim();
        let mut z = DVector::zeros(self.unknown_dim());
        for k in 1..self.steps {
            let off = 2 * n * (k - 1);
            z.rows_mut(off, n).copy_from(&x[k]);
            z.rows_mut(off + n, n).copy_from(&p[k]);
        }
        let base = self.state_unknowns();
        for (k, (lm, lp)) in lambda.iter().enumerate().take(self.steps) {
            z.rows_mut(base + 2 * r * k, r).copy_from(lm);
            z.rows_mut(base + 2 * r * k + r, r).copy_from(lp);
        }
        z
    }

    fn interval(&self, xk: &DVector<f64>, pk: &DVector<f64>, xk1: &DVector<f64>, pk1: &DVector<f64>) -> IntervalEval {
        let l = &self.lagrangian;
        let r_minus = -l.d1(xk, xk1) - pk - &self.forces.a_minus;
        let r_plus = pk1 - l.d2(xk, xk1) - &self.forces.a_plus;
        IntervalEval {
            u_minus: &self.pinv_minus * &r_minus,
            u_plus: &self.pinv_plus * &r_plus,
            phi_minus: self.comp_minus.transpose() * &r_minus,
            phi_plus: self.comp_plus.transpose() * &r_plus,
        }
    }

    /// Controls `(u⁻_k, u⁺_k)` recovered from the forced Legendre transforms.
    pub fn controls(&self, xk: &DVector<f64>, pk: &DVector<f64>, xk1: &DVector<f64>, pk1: &DVector<f64>) -> ControlPair {
        let e = self.interval(xk, pk, xk1, pk1);
        (e.u_minus, e.u_plus)
    }

    /// `𝓛_d(x_k, p_k, x_{k+1}, p_{k+1}) = C_d(x_k, u⁻, x_{k+1}, u⁺)`.
    pub fn augmented_value(&self, xk: &DVector<f64>, pk: &DVector<f64>, xk1: &DVector<f64>, pk1: &DVector<f64>) -> f64 {
        let e = self.interval(xk, pk, xk1, pk1);
        self.cost.value(xk, &e.u_minus, xk1, &e.u_plus)
    }

    /// Constraints `(Φ⁻_k, Φ⁺_k)`: momentum-equation components outside the force image.
    pub fn constraints(&self, xk: &DVector<f64>, pk: &DVector<f64>, xk1: &DVector<f64>, pk1: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let e = self.interval(xk, pk, xk1, pk1);
        (e.phi_minus, e.phi_plus)
    }

    /// `Σ_k 𝓛_d` over full state sequences.
    pub fn action(&self, x: &[DVector<f64>], p: &[DVector<f64>]) -> f64 {
        (0..self.steps).map(|k| self.augmented_value(&x[k], &p[k], &x[k + 1], &p[k + 1])).sum()
    }

    /// Action plus `Σ λ⁻·Φ⁻ + λ⁺·Φ⁺`, as a function of the packed unknowns.
    pub fn multiplier_action(&self, z: &DVector<f64>) -> f64 {
        let (x, p, lambda) = self.unpack(z);
        let mut s = 0.0;
        for k in 0..self.steps {
            let e = self.interval(&x[k], &p[k], &x[k + 1], &p[k + 1]);
            s += self.cost.value(&x[k], &e.u_minus, &x[k + 1], &e.u_plus);
            s += lambda[k].0.dot(&e.phi_minus) + lambda[k].1.dot(&e.phi_plus);
        }
        s
    }

    /// Gradients of one interval's (multiplier-augmented) Lagrangian in `(x_k, p_k, x_{k+1}, p_{k+1})`.
    #[allow(clippy::too_many_arguments)]
    fn interval_gradient(
        &self,
        xk: &DVector<f64>,
        pk: &DVector<f64>,
        xk1: &DVector<f64>,
        pk1: &DVector<f64>,
        lambda: &(DVector<f64>, DVector<f64>),
    ) -> [DVector<f64>; 4] {
        let l = &self.lagrangian;
        let e = self.interval(xk, pk, xk1, pk1);
        let c = self.cost.gradient(xk, &e.u_minus, xk1, &e.u_plus);
        // ρ^± is the covector paired with r^± = (−D₁L_d − p_k − A⁻, p_{k+1} − D₂L_d − A⁺)
        let rho_m = self.pinv_minus.transpose() * &c.u_minus + &self.comp_minus * &lambda.0;
        let rho_p = self.pinv_plus.transpose() * &c.u_plus + &self.comp_plus * &lambda.1;
        let d11 = l.d11(xk, xk1);
        let d12 = l.d12(xk, xk1);
        let d22 = l.d22(xk, xk1);
        let g_xk = &c.qk - d11.transpose() * &rho_m - &d12 * &rho_p;
        let g_xk1 = &c.qk1 - d12.transpose() * &rho_m - d22.transpose() * &rho_p;
        [g_xk, -&rho_m, g_xk1, rho_p]
    }

    /// Stacked DEL equations of the (multiplier-augmented) Lagrangian, node by
    /// node `(∂/∂x_k, ∂/∂p_k)` for `k = 1..N−1`, followed by `(Φ⁻_k, Φ⁺_k)` for
    /// `k = 0..N−1` when underactuated.
    pub fn underactuated_residual(
        &self,
        x: &[DVector<f64>],
        p: &[DVector<f64>],
        lambda: &[(DVector<f64>, DVector<f64>)],
    ) -> DVector<f64> {
        let n = self.dim();
        let nn = self.steps;
        let r = self.unactuated_dim();
        let mut out = DVector::zeros(self.unknown_dim());
        let base = self.state_unknowns();
        for k in 0..nn {
            let [gxk, gpk, gxk1, gpk1] = self.interval_gradient(&x[k], &p[k], &x[k + 1], &p[k + 1], &lambda[k]);
            if k >= 1 {
                let off = 2 * n * (k - 1);
                let mut seg = out.rows_mut(off, n);
                seg += &gxk;
                let mut seg = out.rows_mut(off + n, n);
                seg += &gpk;
            }
            if k + 1 < nn {
                let off = 2 * n * k;
                let mut seg = out.rows_mut(off, n);
                seg += &gxk1;
                let mut seg = out.rows_mut(off + n, n);
                seg += &gpk1;
            }
            if r > 0 {
                let (pm, pp) = self.constraints(&x[k], &p[k], &x[k + 1], &p[k + 1]);
                out.rows_mut(base + 2 * r * k, r).copy_from(&pm);
                out.rows_mut(base + 2 * r * k + r, r).copy_from(&pp);
            }
        }
        out
    }

    /// DEL equations of `Σ 𝓛_d` in the interior states; length `2(N−1)n`.
    pub fn optimality_residual(&self, x: &[DVector<f64>], p: &[DVector<f64>]) -> DVector<f64> {
        let r = self.unactuated_dim();
        let zero = vec![(DVector::zeros(r), DVector::zeros(r)); self.steps];
        self.underactuated_residual(x, p, &zero).rows(0, self.state_unknowns()).into_owned()
    }

    /// Residual of the packed unknowns (the function whose root is solved for).
    pub fn residual(&self, z: &DVector<f64>) -> DVector<f64> {
        let (x, p, lambda) = self.unpack(z);
        self.underactuated_residual(&x, &p, &lambda)
    }

    /// Linear interpolation of `x`, unforced Legendre momenta, zero multipliers.
    pub fn initial_guess(&self) -> DVector<f64> {
        let nn = self.steps;
        let b = &self.boundary;
        let x: Vec<DVector<f64>> = (0..=nn).map(|k| &b.x0 + (&b.xt - &b.x0) * (k as f64 / nn as f64)).collect();
        let mut p: Vec<DVector<f64>> = (0..nn).map(|k| -self.lagrangian.d1(&x[k], &x[k + 1])).collect();
        p.push(b.pt.clone());
        let r = self.unactuated_dim();
        self.pack(&x, &p, &vec![(DVector::zeros(r), DVector::zeros(r)); nn])
    }

    /// Newton from the initial guess, falling back to Levenberg–Marquardt.
    pub fn solve(&self, opts: &SolverOptions) -> Result<OcSolutionRn> {
        let sol = self.solve_unchecked(SolverKind::Newton, opts)?;
        if sol.report.converged {
            return Ok(sol);
        }
        Err(Error::NoConvergence { best_residual: sol.report.residual_norm, iterations: sol.report.iterations })
    }

    /// Like [`solve`](Self::solve) but returns the best iterate even without convergence.
    pub fn solve_unchecked(&self, kind: SolverKind, opts: &SolverOptions) -> Result<OcSolutionRn> {
        self.solve_from(self.initial_guess(), kind, opts)
    }

    /// As [`solve_unchecked`](Self::solve_unchecked) from given packed unknowns.
    pub fn solve_from(&self, z0: DVector<f64>, kind: SolverKind, opts: &SolverOptions) -> Result<OcSolutionRn> {
        if z0.len() != self.unknown_dim() {
            return Err(Error::DimensionMismatch(format!("expected {} unknowns, got {}", self.unknown_dim(), z0.len())));
        }
        let first = solvers::solve(self, z0.clone(), kind, opts);
        let report = match (kind, first) {
            (_, Ok(r)) if r.converged => r,
            (SolverKind::Newton, first) => {
                info!("newton did not converge; falling back to Levenberg-Marquardt");
                let lm_opts = SolverOptions { tol: opts.tol, max_iter: opts.max_iter.max(SolverOptions::levenberg_marquardt().max_iter) };
                let lm = solvers::levenberg_marquardt(self, z0, &lm_opts)?;
                match first {
                    Ok(r) if r.residual_norm < lm.residual_norm => r,
                    _ => lm,
                }
            }
            (_, first) => first?,
        };
        Ok(self.assemble(report))
    }

    fn assemble(&self, report: SolveReport) -> OcSolutionRn {
        let (x, p, lambda) = self.unpack(&report.x);
        let controls: Vec<ControlPair> =
            (0..self.steps).map(|k| self.controls(&x[k], &p[k], &x[k + 1], &p[k + 1])).collect();
        let cost = self.action(&x, &p);
        OcSolutionRn { x, p, controls, lambda, cost, report }
    }
}

impl ResidualSystem for OcProblemRn {
    fn dim(&self) -> usize {
        self.unknown_dim()
    }

    fn eval(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.residual(z))
    }
}

/// Analytic value of the explicit quadratic `𝓛_d` for identity forces and
/// cost `(h/4)(‖u⁻‖² + ‖u⁺‖²)`.
pub fn explicit_quadratic_lagrangian(
    l: &RnLagrangian,
    xk: &DVector<f64>,
    pk: &DVector<f64>,
    xk1: &DVector<f64>,
    pk1: &DVector<f64>,
) -> f64 {
    let h = l.h();
    let m = l.mass();
    let vel = m * (xk1 - xk) / h;
    let gk = l.potential().gradient(xk) * (h / 2.0);
    let gk1 = l.potential().gradient(xk1) * (h / 2.0);
    let a = &vel + gk - pk;
    let b = pk1 - vel + gk1;
    h / 4.0 * (a.norm_squared() + b.norm_squared())
}
