//! Optimal control on Lie groups.
//!
//! Each interval contributes the reduced cost
//! `ℓ_d = (h/2)(C(u⁻_k) + C(u⁺_k))`, where the controls are recovered from the
//! momenta `ν_k, ν_{k+1}` and the velocity `ξ_k` by inverting the forced
//! Legendre relations (see [`nu_momenta`](super::nu_momenta)):
//!
//! ```text
//! (h/2) B u⁻_k = μ_k + (h/2)∇V(g_k) − ν_k − (h/2)Dξ_k        =: r⁻_k
//! (h/2) B u⁺_k = ν_{k+1} − μ̃_k + (h/2)∇V(g_{k+1}) − (h/2)Dξ_k =: r⁺_k
//! ```
//!
//! with `μ_k = (dτ⁻¹_{hξ_k})*𝕀ξ_k` and `μ̃_k = (dτ⁻¹_{−hξ_k})*𝕀ξ_k = Ad*_{τ(hξ_k)}μ_k`.
//! Components of `r^±` outside the range of `B` cannot be produced by the
//! actuators; they become constraints `Φ^±_k` with multipliers `λ^±_k`.
//!
//! Stationarity of the action under variations `δg_k = g_k η_k` with fixed
//! endpoints, together with stationarity in `ν_k` and `λ^±_k`, plus the
//! reconstruction constraint `τ⁻¹(g_N⁻¹ g(T)) = 0`, gives the square system
//! solved here. With full actuation the `ν` unknowns can be eliminated
//! ([`Formulation::Reduced`]), leaving `N·n` equations in `ξ_0..ξ_{N−1}`.

use std::sync::Arc;

use log::{debug, info};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ReducedSystem;
use crate::cost::ControlPenalty;
use crate::error::{Error, Result};
use crate::lie::{GroupElement, GroupSpec, Retraction};
use crate::mech::ControlPair;
use crate::solvers::{self, ResidualSystem, SolveReport, SolverKind, SolverOptions};
use crate::tboc::actuation_maps;

/// Boundary configurations and body velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLie {
    pub g0: GroupElement,
    pub xi0: DVector<f64>,
    pub gt: GroupElement,
    pub xit: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Unknowns `ξ_0..ξ_{N−1}, ν_1..ν_{N−1}, λ^±_0..λ^±_{N−1}`.
    #[default]
    General,
    /// Fully actuated only: `ν_k` eliminated in closed form, unknowns `ξ_0..ξ_{N−1}`.
    Reduced,
}

/// Solved (or best) discrete trajectory.
#[derive(Debug, Clone)]
pub struct LieTrajectory {
    /// `ξ_0..ξ_{N−1}`.
    pub xi: Vec<DVector<f64>>,
    /// `ν_0..ν_N`, boundary entries pinned to `𝕀ξ(0)`, `𝕀ξ(T)`.
    pub nu: Vec<DVector<f64>>,
    /// `(λ⁻_k, λ⁺_k)`, `k = 0..N−1`; empty vectors when fully actuated.
    pub lambda: Vec<(DVector<f64>, DVector<f64>)>,
    /// `g_0..g_N` with `g_{k+1} = g_k τ(hξ_k)`.
    pub g: Vec<GroupElement>,
    /// `(u⁻_k, u⁺_k)`, `k = 0..N−1`.
    pub controls: Vec<ControlPair>,
}

#[derive(Debug, Clone)]
pub struct LieSolution {
    pub trajectory: LieTrajectory,
    pub cost: f64,
    /// Report of the final solve stage.
    pub report: SolveReport,
    /// Iterations summed over all homotopy stages.
    pub total_iterations: usize,
}

/// Largest residual per equation group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualBreakdown {
    pub stationarity: f64,
    pub momentum_matching: f64,
    pub constraints: f64,
    pub closure: f64,
}

impl ResidualBreakdown {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.momentum_matching).max(self.constraints).max(self.closure)
    }
}

struct IntervalEval {
    u_minus: DVector<f64>,
    u_plus: DVector<f64>,
    phi_minus: DVector<f64>,
    phi_plus: DVector<f64>,
    rho_minus: DVector<f64>,
    rho_plus: DVector<f64>,
    cost: f64,
}

struct Evaluation {
    g: Vec<GroupElement>,
    nu: Vec<DVector<f64>>,
    intervals: Vec<IntervalEval>,
}

/// Optimal control problem on a Lie group.
#[derive(Debug, Clone)]
pub struct OcProblemLie {
    system: ReducedSystem,
    boundary: BoundaryLie,
    steps: usize,
    h: f64,
    cost: Arc<dyn ControlPenalty>,
    formulation: Formulation,
    pinv: DMatrix<f64>,
    complement: DMatrix<f64>,
}

fn norm_inf(v: &DVector<f64>) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.amax()
    }
}

impl OcProblemLie {
    /// `horizon = N h`.
    pub fn new(
        system: ReducedSystem,
        boundary: BoundaryLie,
        steps: usize,
        horizon: f64,
        cost: Arc<dyn ControlPenalty>,
    ) -> Result<Self> {
        let n = system.dim();
        if steps < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 steps, got {steps}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        for g in [&boundary.g0, &boundary.gt] {
            if g.kind() != system.kind() {
                return Err(Error::DimensionMismatch(format!(
                    "boundary element in {:?}, system on {:?}",
                    g.kind(),
                    system.kind()
                )));
            }
            g.validate()?;
        }
        if boundary.xi0.len() != n || boundary.xit.len() != n {
            return Err(Error::DimensionMismatch(format!("boundary velocities must have length {n}")));
        }
        if system.control_dim() == 0 {
            return Err(Error::InvalidInput("optimal control needs at least one control".into()));
        }
        let (pinv, complement) = actuation_maps(system.actuation())?;
        Ok(OcProblemLie {
            system,
            boundary,
            steps,
            h: horizon / steps as f64,
            cost,
            formulation: Formulation::General,
            pinv,
            complement,
        })
    }

    pub fn with_formulation(mut self, formulation: Formulation) -> Result<Self> {
        if formulation == Formulation::Reduced && self.unactuated_dim() > 0 {
            return Err(Error::InvalidInput("the reduced formulation needs full actuation".into()));
        }
        self.formulation = formulation;
        Ok(self)
    }

    pub fn with_cost(&self, cost: Arc<dyn ControlPenalty>) -> Self {
        OcProblemLie { cost, ..self.clone() }
    }

    pub fn with_boundary(&self, boundary: BoundaryLie) -> Result<Self> {
        let p = OcProblemLie::new(self.system.clone(), boundary, self.steps, self.h * self.steps as f64, self.cost.clone())?;
        p.with_formulation(self.formulation)
    }

    pub fn system(&self) -> &ReducedSystem {
        &self.system
    }

    pub fn boundary(&self) -> &BoundaryLie {
        &self.boundary
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn cost(&self) -> &Arc<dyn ControlPenalty> {
        &self.cost
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn unactuated_dim(&self) -> usize {
        self.system.dim() - self.system.control_dim()
    }

    pub fn unknown_dim(&self) -> usize {
        let (n, nn, r) = (self.dim(), self.steps, self.unactuated_dim());
        match self.formulation {
            Formulation::Reduced => nn * n,
            Formulation::General => nn * n + (nn - 1) * n + 2 * nn * r,
        }
    }

    fn nu_boundary(&self) -> (DVector<f64>, DVector<f64>) {
        (self.system.momentum(&self.boundary.xi0), self.system.momentum(&self.boundary.xit))
    }

    /// Splits packed unknowns into `ξ`, interior `ν` (empty when reduced) and `λ`.
    #[allow(clippy::type_complexity)]
    pub fn unpack(&self, z: &DVector<f64>) -> (Vec<DVector<f64>>, Vec<DVector<f64>>, Vec<(DVector<f64>, DVector<f64>)>) {
        let (n, nn, r) = (self.dim(), self.steps, self.unactuated_dim());
        let xi = (0..nn).map(|k| z.rows(k * n, n).into_owned()).collect();
        if self.formulation == Formulation::Reduced {
            let lambda = vec![(DVector::zeros(0), DVector::zeros(0)); nn];
            return (xi, Vec::new(), lambda);
        }
        let base = nn * n;
        let nu = (0..nn - 1).map(|k| z.rows(base + k * n, n).into_owned()).collect();
        let base = base + (nn - 1) * n;
        let lambda = (0..nn)
            .map(|k| (z.rows(base + 2 * r * k, r).into_owned(), z.rows(base + 2 * r * k + r, r).into_owned()))
            .collect();
        (xi, nu, lambda)
    }

    pub fn pack(&self, xi: &[DVector<f64>], nu_interior: &[DVector<f64>], lambda: &[(DVector<f64>, DVector<f64>)]) -> DVector<f64> {
        let (n, nn, r) = (self.dim(), self.steps, self.unactuated_dim());
        let mut z = DVector::zeros(self.unknown_dim());
        for (k, x) in xi.iter().enumerate().take(nn) {
            z.rows_mut(k * n, n).copy_from(x);
        }
        if self.formulation == Formulation::General {
            let base = nn * n;
            for (k, v) in nu_interior.iter().enumerate().take(nn - 1) {
                z.rows_mut(base + k * n, n).copy_from(v);
            }
            let base = base + (nn - 1) * n;
            for (k, (lm, lp)) in lambda.iter().enumerate().take(nn) {
                z.rows_mut(base + 2 * r * k, r).copy_from(lm);
                z.rows_mut(base + 2 * r * k + r, r).copy_from(lp);
            }
        }
        z
    }

    /// `g_0 = g(0)`, `g_{k+1} = g_k τ(hξ_k)`.
    pub fn reconstruct(&self, xi: &[DVector<f64>]) -> Vec<GroupElement> {
        let mut g = Vec::with_capacity(xi.len() + 1);
        g.push(self.boundary.g0.clone());
        for x in xi {
            let next = g.last().unwrap().compose(&self.system.group.tau(&(x * self.h)));
            g.push(next);
        }
        g
    }

    /// Interior momenta eliminated by matching `u⁺_{k−1} = u⁻_k` (full actuation):
    /// `ν_k = ½(μ_k + μ̃_{k−1} − (h/2) D(ξ_k − ξ_{k−1}))`.
    pub fn reduced_momenta(&self, xi: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let h = self.h;
        let sys = &self.system;
        (1..self.steps)
            .map(|k| {
                let mu = sys.mu_at(&(&xi[k] * h), &xi[k]);
                let mu_t = sys.mu_at(&(&xi[k - 1] * -h), &xi[k - 1]);
                (mu + mu_t - sys.drift() * (&xi[k] - &xi[k - 1]) * (h / 2.0)) * 0.5
            })
            .collect()
    }

    fn full_momenta(&self, xi: &[DVector<f64>], nu_interior: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let (nu0, nut) = self.nu_boundary();
        let interior =
            if self.formulation == Formulation::Reduced { self.reduced_momenta(xi) } else { nu_interior.to_vec() };
        let mut nu = Vec::with_capacity(self.steps + 1);
        nu.push(nu0);
        nu.extend(interior);
        nu.push(nut);
        nu
    }

    #[allow(clippy::too_many_arguments)]
    fn interval(
        &self,
        xi: &DVector<f64>,
        grad_k: &DVector<f64>,
        grad_k1: &DVector<f64>,
        nu_k: &DVector<f64>,
        nu_k1: &DVector<f64>,
        lambda: &(DVector<f64>, DVector<f64>),
    ) -> IntervalEval {
        let h = self.h;
        let sys = &self.system;
        let mu = sys.mu_at(&(xi * h), xi);
        let mu_t = sys.mu_at(&(xi * -h), xi);
        let drift = sys.drift() * xi * (h / 2.0);
        let r_minus = mu + grad_k * (h / 2.0) - nu_k - &drift;
        let r_plus = nu_k1 - mu_t + grad_k1 * (h / 2.0) - &drift;
        let u_minus = &self.pinv * &r_minus * (2.0 / h);
        let u_plus = &self.pinv * &r_plus * (2.0 / h);
        let phi_minus = self.complement.transpose() * &r_minus;
        let phi_plus = self.complement.transpose() * &r_plus;
        let mut rho_minus = self.pinv.transpose() * self.cost.gradient(&u_minus);
        let mut rho_plus = self.pinv.transpose() * self.cost.gradient(&u_plus);
        if !lambda.0.is_empty() {
            rho_minus += &self.complement * &lambda.0;
            rho_plus += &self.complement * &lambda.1;
        }
        let cost = 0.5 * h * (self.cost.value(&u_minus) + self.cost.value(&u_plus));
        IntervalEval { u_minus, u_plus, phi_minus, phi_plus, rho_minus, rho_plus, cost }
    }

    fn evaluate_with_path(
        &self,
        xi: &[DVector<f64>],
        g: Vec<GroupElement>,
        nu: Vec<DVector<f64>>,
        lambda: &[(DVector<f64>, DVector<f64>)],
    ) -> Evaluation {
        let grads: Vec<DVector<f64>> = g.iter().map(|gk| self.system.potential_gradient(gk)).collect();
        let intervals = (0..self.steps)
            .map(|k| self.interval(&xi[k], &grads[k], &grads[k + 1], &nu[k], &nu[k + 1], &lambda[k]))
            .collect();
        Evaluation { g, nu, intervals }
    }

    fn evaluate(&self, z: &DVector<f64>) -> (Vec<DVector<f64>>, Vec<(DVector<f64>, DVector<f64>)>, Evaluation) {
        let (xi, nu_interior, lambda) = self.unpack(z);
        let g = self.reconstruct(&xi);
        let nu = self.full_momenta(&xi, &nu_interior);
        let eval = self.evaluate_with_path(&xi, g, nu, &lambda);
        (xi, lambda, eval)
    }

    /// Residual blocks: stationarity under `δg_k = g_kη_k` (k = 1..N−1), matching in `ν_k`,
    /// the constraints `Φ^±_k`, and the reconstruction gap.
    #[allow(clippy::type_complexity)]
    fn blocks(
        &self,
        xi: &[DVector<f64>],
        eval: &Evaluation,
    ) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>, Vec<DVector<f64>>, DVector<f64>)> {
        let h = self.h;
        let sys = &self.system;
        let spec = &sys.group;
        let nn = self.steps;
        let half = h / 2.0;
        let d = sys.drift();
        let mut g_xi = Vec::with_capacity(nn);
        let mut g_a = Vec::with_capacity(nn);
        let mut g_b = Vec::with_capacity(nn);
        let has_potential = sys.potential().is_some();
        for (k, iv) in eval.intervals.iter().enumerate() {
            let jm = sys.mu_jacobian(h, &xi[k]) - d * half;
            let jp = -sys.mu_jacobian(-h, &xi[k]) - d * half;
            g_xi.push(jm.transpose() * &iv.rho_minus + jp.transpose() * &iv.rho_plus);
            if has_potential {
                g_a.push(sys.potential_hessian(&eval.g[k]).transpose() * &iv.rho_minus * half);
                g_b.push(sys.potential_hessian(&eval.g[k + 1]).transpose() * &iv.rho_plus * half);
            }
        }
        let mut stationarity = Vec::with_capacity(nn - 1);
        let mut matching = Vec::with_capacity(nn - 1);
        for k in 1..nn {
            let mut e = (spec.dtau_inv_matrix(&(&xi[k - 1] * -h)).transpose() * &g_xi[k - 1]
                - spec.dtau_inv_matrix(&(&xi[k] * h)).transpose() * &g_xi[k])
                / h;
            if has_potential {
                e += &g_b[k - 1] + &g_a[k];
            }
            stationarity.push(e);
            matching.push(&eval.intervals[k - 1].rho_plus - &eval.intervals[k].rho_minus);
        }
        let constraints = eval
            .intervals
            .iter()
            .flat_map(|iv| [iv.phi_minus.clone(), iv.phi_plus.clone()])
            .collect();
        let gap = eval.g[nn].inverse().compose(&self.boundary.gt);
        let closure = spec.tau_inv(&gap)?;
        Ok((stationarity, matching, constraints, closure))
    }

    /// Residual of the packed unknowns in the active formulation.
    pub fn residual(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let (xi, _, eval) = self.evaluate(z);
        let (stat, matching, constraints, closure) = self.blocks(&xi, &eval)?;
        let mut parts: Vec<&DVector<f64>> = stat.iter().collect();
        if self.formulation == Formulation::General {
            parts.extend(matching.iter());
            parts.extend(constraints.iter());
        }
        parts.push(&closure);
        let len: usize = parts.iter().map(|p| p.len()).sum();
        let mut out = DVector::zeros(len);
        let mut off = 0;
        for p in parts {
            out.rows_mut(off, p.len()).copy_from(p);
            off += p.len();
        }
        debug_assert_eq!(len, self.unknown_dim());
        Ok(out)
    }

    /// Fully actuated optimality system in `ξ_0..ξ_{N−1}` alone; length `N·n`.
    pub fn fully_actuated_residual(&self, xi: &[DVector<f64>]) -> Result<DVector<f64>> {
        let reduced = self.clone().with_formulation(Formulation::Reduced)?;
        reduced.residual(&reduced.pack(xi, &[], &[]))
    }

    /// General system in `(ξ, ν, λ)`, including the constraints `Φ^±`.
    pub fn underactuated_residual(
        &self,
        xi: &[DVector<f64>],
        nu_interior: &[DVector<f64>],
        lambda: &[(DVector<f64>, DVector<f64>)],
    ) -> Result<DVector<f64>> {
        let general = OcProblemLie { formulation: Formulation::General, ..self.clone() };
        general.residual(&general.pack(xi, nu_interior, lambda))
    }

    /// Same system as [`underactuated_residual`](Self::underactuated_residual); the
    /// potential terms enter whenever the system carries one.
    pub fn config_dependent_residual(
        &self,
        xi: &[DVector<f64>],
        nu_interior: &[DVector<f64>],
        lambda: &[(DVector<f64>, DVector<f64>)],
    ) -> Result<DVector<f64>> {
        if self.system.potential().is_none() {
            return Err(Error::InvalidInput("system has no potential".into()));
        }
        self.underactuated_residual(xi, nu_interior, lambda)
    }

    /// Max-abs residual per equation group at the packed unknowns.
    pub fn breakdown(&self, z: &DVector<f64>) -> Result<ResidualBreakdown> {
        let (xi, _, eval) = self.evaluate(z);
        let (stat, matching, constraints, closure) = self.blocks(&xi, &eval)?;
        let m = |v: &[DVector<f64>]| v.iter().map(norm_inf).fold(0.0, f64::max);
        let momentum_matching = if self.formulation == Formulation::General { m(&matching) } else { 0.0 };
        Ok(ResidualBreakdown {
            stationarity: m(&stat),
            momentum_matching,
            constraints: m(&constraints),
            closure: norm_inf(&closure),
        })
    }

    /// Velocities of a configuration path, `ξ_k = τ⁻¹(g_k⁻¹ g_{k+1})/h`.
    pub fn path_velocities(&self, g: &[GroupElement]) -> Result<Vec<DVector<f64>>> {
        g.windows(2)
            .map(|w| Ok(self.system.group.tau_inv(&w[0].inverse().compose(&w[1]))? / self.h))
            .collect()
    }

    /// `Σ ℓ_d + λ⁻·Φ⁻ + λ⁺·Φ⁺` along a configuration path `g_0..g_N` (endpoints
    /// free in this function). In the reduced formulation `nu_interior` is ignored.
    pub fn action_on_path(
        &self,
        g: &[GroupElement],
        nu_interior: &[DVector<f64>],
        lambda: &[(DVector<f64>, DVector<f64>)],
    ) -> Result<f64> {
        let xi = self.path_velocities(g)?;
        let nu = self.full_momenta(&xi, nu_interior);
        let r = self.unactuated_dim();
        let zero;
        let lambda = if self.formulation == Formulation::Reduced {
            zero = vec![(DVector::zeros(0), DVector::zeros(0)); self.steps];
            &zero[..]
        } else {
            let _ = r;
            lambda
        };
        let eval = self.evaluate_with_path(&xi, g.to_vec(), nu, lambda);
        Ok(eval
            .intervals
            .iter()
            .zip(lambda)
            .map(|(iv, (lm, lp))| iv.cost + lm.dot(&iv.phi_minus) + lp.dot(&iv.phi_plus))
            .sum())
    }

    /// Constant velocity with `τ(hξ)^N = g(0)⁻¹g(T)`, matched momenta, zero multipliers.
    pub fn initial_guess(&self) -> Result<DVector<f64>> {
        let gap = self.boundary.g0.inverse().compose(&self.boundary.gt);
        let spec = &self.system.group;
        let exp = GroupSpec { kind: spec.kind, retraction: Retraction::exponential() };
        let root = exp.tau(&(exp.tau_inv(&gap)? / self.steps as f64));
        let xi_bar = spec.tau_inv(&root)? / self.h;
        let xi = vec![xi_bar; self.steps];
        let nu = self.reduced_momenta(&xi);
        let r = self.unactuated_dim();
        Ok(self.pack(&xi, &nu, &vec![(DVector::zeros(r), DVector::zeros(r)); self.steps]))
    }

    /// Trajectory and controls at the packed unknowns.
    pub fn trajectory(&self, z: &DVector<f64>) -> (LieTrajectory, f64) {
        let (xi, lambda, eval) = self.evaluate(z);
        let cost = eval.intervals.iter().map(|iv| iv.cost).sum();
        let controls = eval.intervals.iter().map(|iv| (iv.u_minus.clone(), iv.u_plus.clone())).collect();
        (LieTrajectory { xi, nu: eval.nu, lambda, g: eval.g, controls }, cost)
    }

    /// Solves and fails with [`Error::NoConvergence`] if the tolerance is not met.
    pub fn solve(&self, kind: SolverKind, opts: &SolverOptions) -> Result<LieSolution> {
        let sol = self.solve_unchecked(kind, opts)?;
        if sol.report.converged {
            Ok(sol)
        } else {
            Err(Error::NoConvergence { best_residual: sol.report.residual_norm, iterations: sol.total_iterations })
        }
    }

    /// Solves, following the cost's homotopy (if any) with adaptive steps and
    /// warm starts, and returns the final iterate whether or not it converged.
    pub fn solve_unchecked(&self, kind: SolverKind, opts: &SolverOptions) -> Result<LieSolution> {
        self.solve_from(self.initial_guess()?, kind, opts)
    }

    /// As [`solve_unchecked`](Self::solve_unchecked) from a given starting point.
    pub fn solve_from(&self, z0: DVector<f64>, kind: SolverKind, opts: &SolverOptions) -> Result<LieSolution> {
        let mut z = z0;
        let mut total = 0;
        if let Some(start) = self.cost.homotopy(0.0) {
            let stage_opts = SolverOptions { tol: opts.tol.max(1e-8), max_iter: opts.max_iter };
            let rep = run_solver(&self.with_cost(start), z.clone(), kind, &stage_opts, true)?;
            total += rep.iterations;
            z = rep.x;
            let (mut t, mut dt) = (0.0_f64, 0.25_f64);
            let stage_opts = SolverOptions { max_iter: opts.max_iter.min(HOMOTOPY_STAGE_ITER), ..stage_opts };
            while t < 1.0 && dt >= HOMOTOPY_MIN_STEP {
                let next = (t + dt).min(1.0);
                let stage = self.cost.homotopy(next).expect("homotopy defined on [0, 1]");
                let rep = run_solver(&self.with_cost(stage), z.clone(), kind, &stage_opts, false)?;
                total += rep.iterations;
                debug!("homotopy t = {next:.4}: |F| = {:e}, converged {}", rep.residual_norm, rep.converged);
                if rep.converged {
                    z = rep.x;
                    t = next;
                    dt = (dt * 1.5).min(0.5);
                } else {
                    dt *= 0.5;
                }
            }
            if t < 1.0 {
                info!("homotopy stalled at t = {t:.4}");
            }
        }
        let report = run_solver(self, z, kind, opts, true)?;
        total += report.iterations;
        let (trajectory, cost) = self.trajectory(&report.x);
        Ok(LieSolution { trajectory, cost, report, total_iterations: total })
    }
}

const HOMOTOPY_STAGE_ITER: usize = 40;
const HOMOTOPY_MIN_STEP: f64 = 1e-3;

fn run_solver(
    p: &OcProblemLie,
    z0: DVector<f64>,
    kind: SolverKind,
    opts: &SolverOptions,
    fallback: bool,
) -> Result<SolveReport> {
    match kind {
        SolverKind::LevenbergMarquardt => solvers::levenberg_marquardt(p, z0, opts),
        SolverKind::Newton if !fallback => solvers::newton(p, z0, opts),
        SolverKind::Newton => {
            let first = solvers::newton(p, z0.clone(), opts);
            match first {
                Ok(r) if r.converged => Ok(r),
                other => {
                    info!("newton did not converge; falling back to Levenberg-Marquardt");
                    let lm = solvers::levenberg_marquardt(p, z0, opts)?;
                    Ok(match other {
                        Ok(r) if r.residual_norm < lm.residual_norm => r,
                        _ => lm,
                    })
                }
            }
        }
    }
}

impl ResidualSystem for OcProblemLie {
    fn dim(&self) -> usize {
        self.unknown_dim()
    }

    fn eval(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.residual(z)
    }
}
