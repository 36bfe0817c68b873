//! Forward controlled discrete Euler–Poincaré flow.

use nalgebra::{DMatrix, DVector};

use super::ReducedSystem;
use crate::error::{Error, Result};
use crate::lie::{coadjoint, GroupElement};
use crate::mech::ControlPair;
use crate::solvers::{self, ResidualSystem, SolverOptions};

/// Momenta `(ν_k, ν_{k+1})` of one interval:
/// `ν_k = μ_k − (h/2) f(ξ_k, u⁻) + (h/2)∇V(g_k)`,
/// `ν_{k+1} = Ad*_{τ(hξ_k)} μ_k + (h/2) f(ξ_k, u⁺) − (h/2)∇V(g_{k+1})`.
pub fn nu_momenta(
    sys: &ReducedSystem,
    h: f64,
    g_k: &GroupElement,
    xi: &DVector<f64>,
    u_minus: &DVector<f64>,
    u_plus: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let x = xi * h;
    let w = sys.group.tau(&x);
    let g_next = g_k.compose(&w);
    let mu = sys.mu_at(&x, xi);
    let nu_k = &mu - sys.force(xi, u_minus) * (h / 2.0) + sys.potential_gradient(g_k) * (h / 2.0);
    let nu_next =
        coadjoint(&w, &mu) + sys.force(xi, u_plus) * (h / 2.0) - sys.potential_gradient(&g_next) * (h / 2.0);
    (nu_k, nu_next)
}

struct VelocitySolve<'a> {
    sys: &'a ReducedSystem,
    h: f64,
    target: DVector<f64>,
}

impl ResidualSystem for VelocitySolve<'_> {
    fn dim(&self) -> usize {
        self.sys.dim()
    }

    fn eval(&self, xi: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.sys.mu_at(&(xi * self.h), xi) - self.sys.drift() * xi * (self.h / 2.0) - &self.target)
    }

    fn jacobian(&self, xi: &DVector<f64>) -> Option<Result<DMatrix<f64>>> {
        Some(Ok(self.sys.mu_jacobian(self.h, xi) - self.sys.drift() * (self.h / 2.0)))
    }
}

/// Solves `μ(ξ_k) − (h/2) f(ξ_k, u⁻_k) = ν_k − (h/2)∇V(g_k)` for `ξ_k`; returns `(ξ_k, μ_k)`
/// with `μ_k` taken from the right-hand side so that momentum transport is exact.
fn solve_velocity(
    sys: &ReducedSystem,
    h: f64,
    step: usize,
    g_k: &GroupElement,
    nu_k: &DVector<f64>,
    u_minus: &DVector<f64>,
    guess: DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let known = nu_k - sys.potential_gradient(g_k) * (h / 2.0);
    let target = &known + sys.actuation() * u_minus * (h / 2.0);
    let scale = 1.0 + target.amax();
    let problem = VelocitySolve { sys, h, target };
    let opts = SolverOptions { tol: 1e-14 * scale, max_iter: 50 };
    let report = solvers::newton(&problem, guess, &opts)
        .map_err(|_| Error::StepSolveFailed { step, residual: f64::NAN })?;
    if report.residual_norm > 1e-10 * scale {
        return Err(Error::StepSolveFailed { step, residual: report.residual_norm });
    }
    let xi = report.x;
    let mu = known + sys.force(&xi, u_minus) * (h / 2.0);
    Ok((xi, mu))
}

/// One step of the forced discrete Euler–Poincaré equations. From
/// `(μ_{k−1}, ξ_{k−1})` and the controls around node `k`, returns `(ξ_k, μ_k)`
/// satisfying `μ_k − Ad*_{τ(hξ_{k−1})}μ_{k−1} = (h/2)(f(ξ_k,u⁻_k) + f(ξ_{k−1},u⁺_{k−1})) − h∇V(g_k)`
/// and `μ_k = (dτ⁻¹_{hξ_k})* 𝕀ξ_k`.
#[allow(clippy::too_many_arguments)]
pub fn dep_step(
    sys: &ReducedSystem,
    h: f64,
    g_k: &GroupElement,
    mu_prev: &DVector<f64>,
    xi_prev: &DVector<f64>,
    u_prev_plus: &DVector<f64>,
    u_k_minus: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let w = sys.group.tau(&(xi_prev * h));
    let nu_k = coadjoint(&w, mu_prev) + sys.force(xi_prev, u_prev_plus) * (h / 2.0)
        - sys.potential_gradient(g_k) * (h / 2.0);
    solve_velocity(sys, h, 0, g_k, &nu_k, u_k_minus, xi_prev.clone())
}

/// Output of [`simulate`].
#[derive(Debug, Clone)]
pub struct DepTrajectory {
    pub g: Vec<GroupElement>,
    pub xi: Vec<DVector<f64>>,
    pub mu: Vec<DVector<f64>>,
    pub nu: Vec<DVector<f64>>,
}

impl DepTrajectory {
    /// `Ad*_{g_k⁻¹} μ_k`, constant along unforced, potential-free motion.
    pub fn spatial_momentum(&self, k: usize) -> DVector<f64> {
        coadjoint(&self.g[k].inverse(), &self.mu[k])
    }
}

/// Integrates from `g_0` with boundary momentum `ν_0 = 𝕀ξ(0)`. `controls[k] = (u⁻_k, u⁺_k)`;
/// an empty slice means no control.
pub fn simulate(
    sys: &ReducedSystem,
    h: f64,
    g0: &GroupElement,
    xi0: &DVector<f64>,
    controls: &[ControlPair],
    steps: usize,
) -> Result<DepTrajectory> {
    if g0.kind() != sys.kind() || xi0.len() != sys.dim() {
        return Err(Error::DimensionMismatch("initial state does not match the system".into()));
    }
    if !controls.is_empty() && controls.len() < steps {
        return Err(Error::DimensionMismatch(format!("need {steps} control pairs, got {}", controls.len())));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidInput("step must be positive".into()));
    }
    let zero = DVector::zeros(sys.control_dim());
    let control = |k: usize| controls.get(k).map(|(a, b)| (a, b)).unwrap_or((&zero, &zero));
    let mut traj = DepTrajectory {
        g: vec![g0.clone()],
        xi: Vec::with_capacity(steps),
        mu: Vec::with_capacity(steps),
        nu: vec![sys.momentum(xi0)],
    };
    let mut guess = xi0.clone();
    for k in 0..steps {
        let (um, up) = control(k);
        let (xi, mu) = solve_velocity(sys, h, k, &traj.g[k], &traj.nu[k], um, guess)
            .map_err(|e| match e {
                Error::StepSolveFailed { residual, .. } => Error::StepSolveFailed { step: k, residual },
                other => other,
            })?;
        let w = sys.group.tau(&(&xi * h));
        let g_next = traj.g[k].compose(&w);
        let nu_next = coadjoint(&w, &mu) + sys.force(&xi, up) * (h / 2.0) - sys.potential_gradient(&g_next) * (h / 2.0);
        guess = xi.clone();
        traj.xi.push(xi);
        traj.mu.push(mu);
        traj.g.push(g_next);
        traj.nu.push(nu_next);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{GroupSpec, Retraction};
    use approx::assert_relative_eq;

    fn body(retraction: Retraction) -> ReducedSystem {
        ReducedSystem::fully_actuated(
            GroupSpec::so3(retraction),
            DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 2.0, 3.0])),
        )
        .unwrap()
    }

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn principal_axis_rotation_is_relative_equilibrium() {
        for r in [Retraction::Cayley, Retraction::exponential()] {
            let sys = body(r);
            let xi0 = v(&[0.0, 0.7, 0.0]);
            let traj = simulate(&sys, 0.05, &sys.group.identity(), &xi0, &[], 50).unwrap();
            // ξ_0 differs from ξ(0) at O(h²) when μ ≠ 𝕀ξ, then stays put
            assert!(traj.xi[0][0] == 0.0 && traj.xi[0][2] == 0.0);
            assert!((traj.xi[0][1] - 0.7).abs() < 1e-3);
            for xi in &traj.xi {
                assert_relative_eq!(xi, &traj.xi[0], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zero_control_nu_is_transported_mu() {
        let sys = body(Retraction::Cayley);
        let xi = v(&[0.3, -0.2, 0.9]);
        let z = DVector::zeros(3);
        let g = sys.group.tau(&v(&[0.1, 0.2, 0.3]));
        let (a, b) = nu_momenta(&sys, 0.1, &g, &xi, &z, &z);
        let mu = sys.mu_at(&(&xi * 0.1), &xi);
        assert_relative_eq!(a, mu.clone(), epsilon = 1e-15);
        assert_relative_eq!(b, coadjoint(&sys.group.tau(&(&xi * 0.1)), &mu), epsilon = 1e-15);
    }

    #[test]
    fn nu_pairing_identity_on_se3() {
        let sys = ReducedSystem::fully_actuated(
            GroupSpec::se3(Retraction::Cayley),
            DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 2.0, 3.0, 4.0, 4.0, 5.0])),
        )
        .unwrap()
        .with_drift(DMatrix::identity(6, 6) * -0.1)
        .unwrap();
        let h = 0.2;
        let xi = v(&[0.3, -0.2, 0.9, 1.0, 0.0, -0.5]);
        let up = v(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let (_, nu1) = nu_momenta(&sys, h, &sys.group.identity(), &xi, &DVector::zeros(6), &up);
        let eta = v(&[0.7, -0.1, 0.2, 0.5, 0.3, -0.9]);
        let w = sys.group.tau(&(&xi * h));
        let mu = sys.mu_at(&(&xi * h), &xi);
        let lhs = nu1.dot(&eta);
        let rhs = mu.dot(&crate::lie::adjoint(&w, &eta)) + (h / 2.0) * sys.force(&xi, &up).dot(&eta);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn velocity_jacobian_matches_differences() {
        use crate::solvers::fd_jacobian;
        let mut seed = 0x2545f4914f6cdd1du64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for r in [Retraction::Cayley, Retraction::exponential()] {
            let sys = ReducedSystem::fully_actuated(
                GroupSpec::se3(r),
                DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 2.0, 3.0, 4.0, 4.0, 5.0])),
            )
            .unwrap()
            .with_drift(DMatrix::identity(6, 6) * -0.2)
            .unwrap();
            for _ in 0..50 {
                let xi = DVector::from_fn(6, |_, _| next());
                let s = VelocitySolve { sys: &sys, h: 0.1, target: DVector::from_fn(6, |_, _| next()) };
                let fx = s.eval(&xi).unwrap();
                let fd = fd_jacobian(&s, &xi, &fx).unwrap();
                let an = s.jacobian(&xi).unwrap().unwrap();
                assert!((&an - &fd).amax() <= 1e-5 * an.amax().max(1.0));
            }
        }
    }

    #[test]
    fn dep_step_satisfies_both_relations() {
        let sys = body(Retraction::exponential());
        let h = 0.1;
        let g = sys.group.tau(&v(&[0.2, 0.1, -0.3]));
        let xi_prev = v(&[0.4, -0.5, 0.2]);
        let mu_prev = sys.mu_at(&(&xi_prev * h), &xi_prev);
        let (up, um) = (v(&[0.3, 0.0, -0.2]), v(&[0.1, 0.5, 0.0]));
        let (xi, mu) = dep_step(&sys, h, &g, &mu_prev, &xi_prev, &up, &um).unwrap();
        let lhs = &mu - coadjoint(&sys.group.tau(&(&xi_prev * h)), &mu_prev);
        let rhs = (sys.force(&xi, &um) + sys.force(&xi_prev, &up)) * (h / 2.0);
        assert!((lhs - rhs).amax() < 1e-10);
        assert!((sys.mu_at(&(&xi * h), &xi) - &mu).amax() < 1e-10);
    }
}
