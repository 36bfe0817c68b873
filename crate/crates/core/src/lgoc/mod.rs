//! Discrete Euler–Poincaré mechanics and optimal control on Lie groups.
//!
//! A [`ReducedSystem`] has reduced Lagrangian `l(ξ) = ½ ξᵀ𝕀ξ`, an optional
//! potential `V(g)` and continuous-time forces `f(ξ, u) = Dξ + Bu` where `B`
//! spans the actuated directions. The step uses the trapezoidal rule, so the
//! forced discrete Euler–Poincaré equations read
//!
//! ```text
//! μ_k − Ad*_{τ(hξ_{k−1})} μ_{k−1} = (h/2) f(ξ_k, u⁻_k) + (h/2) f(ξ_{k−1}, u⁺_{k−1}) − h ∇V(g_k)
//! μ_k = (dτ⁻¹_{hξ_k})* 𝕀ξ_k,        g_{k+1} = g_k τ(hξ_k)
//! ```
//!
//! with `∇V` the left-trivialized gradient.

mod dynamics;
mod optimal;

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{Error, Result};
use crate::lie::{hat, GroupElement, GroupKind, GroupSpec, Retraction};
use crate::mech::Potential;

pub use dynamics::{dep_step, nu_momenta, simulate, DepTrajectory};
pub use optimal::{BoundaryLie, Formulation, LieSolution, LieTrajectory, OcProblemLie, ResidualBreakdown};

/// Potential energy on a group with left-trivialized derivatives:
/// `⟨∇V(g), η⟩ = d/dε V(g τ(εη))` and `H(g) η = d/dε ∇V(g τ(εη))` at ε = 0.
pub trait GroupPotential: Debug + Send + Sync {
    fn value(&self, g: &GroupElement) -> f64;

    /// Defaults to central differences along left-translated exponential curves.
    fn gradient(&self, g: &GroupElement) -> DVector<f64> {
        let spec = GroupSpec { kind: g.kind(), retraction: Retraction::exponential() };
        let n = spec.algebra_dim();
        let eps = 1e-6;
        DVector::from_fn(n, |j, _| {
            let mut e = DVector::zeros(n);
            e[j] = eps;
            let fp = self.value(&g.compose(&spec.tau(&e)));
            let fm = self.value(&g.compose(&spec.tau(&-e)));
            (fp - fm) / (2.0 * eps)
        })
    }

    fn hessian(&self, g: &GroupElement) -> DMatrix<f64> {
        let spec = GroupSpec { kind: g.kind(), retraction: Retraction::exponential() };
        let n = spec.algebra_dim();
        let eps = 1e-4;
        let mut out = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = eps;
            let gp = self.gradient(&g.compose(&spec.tau(&e)));
            let gm = self.gradient(&g.compose(&spec.tau(&-e)));
            out.set_column(j, &((gp - gm) / (2.0 * eps)));
        }
        out
    }
}

/// `V(R) = w ⟨R χ, e₃⟩`: a body whose centre of mass sits at `χ` in body
/// coordinates under uniform gravity along `−e₃`. On SE(3) only the rotation enters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeavyTopPotential {
    pub weight: f64,
    pub center: Vector3<f64>,
}

impl HeavyTopPotential {
    fn embed(&self, g: &GroupElement, v: Vector3<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(g.kind().algebra_dim());
        out.rows_mut(0, 3).copy_from(&v);
        out
    }
}

impl GroupPotential for HeavyTopPotential {
    fn value(&self, g: &GroupElement) -> f64 {
        let r = g.rotation().expect("heavy top potential needs a rotation");
        self.weight * (r * self.center).z
    }

    fn gradient(&self, g: &GroupElement) -> DVector<f64> {
        let r = g.rotation().expect("heavy top potential needs a rotation");
        let s = r.transpose() * Vector3::z();
        self.embed(g, self.weight * self.center.cross(&s))
    }

    fn hessian(&self, g: &GroupElement) -> DMatrix<f64> {
        let r = g.rotation().expect("heavy top potential needs a rotation");
        let s = r.transpose() * Vector3::z();
        let h3 = hat(&self.center) * hat(&s) * self.weight;
        let n = g.kind().algebra_dim();
        let mut out = DMatrix::zeros(n, n);
        out.view_mut((0, 0), (3, 3)).copy_from(&h3);
        out
    }
}

/// An ℝⁿ potential seen on the additive group.
#[derive(Clone)]
pub struct AbelianPotential(pub Arc<dyn Potential>);

impl Debug for AbelianPotential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("AbelianPotential")
    }
}

impl AbelianPotential {
    fn coords(g: &GroupElement) -> &DVector<f64> {
        match g {
            GroupElement::Real(x) => x,
            _ => panic!("abelian potential evaluated on a non-abelian group"),
        }
    }
}

impl GroupPotential for AbelianPotential {
    fn value(&self, g: &GroupElement) -> f64 {
        self.0.value(Self::coords(g))
    }
    fn gradient(&self, g: &GroupElement) -> DVector<f64> {
        self.0.gradient(Self::coords(g))
    }
    fn hessian(&self, g: &GroupElement) -> DMatrix<f64> {
        self.0.hessian(Self::coords(g))
    }
}

/// Left-invariant mechanical system on a Lie group with affine control forces.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub group: GroupSpec,
    inertia: DMatrix<f64>,
    potential: Option<Arc<dyn GroupPotential>>,
    drift: DMatrix<f64>,
    actuation: DMatrix<f64>,
}

impl ReducedSystem {
    /// Checks that `𝕀` is symmetric positive definite and shapes agree.
    pub fn new(group: GroupSpec, inertia: DMatrix<f64>, actuation: DMatrix<f64>) -> Result<Self> {
        let n = group.algebra_dim();
        if inertia.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!("inertia must be {n}×{n}")));
        }
        if (&inertia - inertia.transpose()).abs().max() > 1e-12 {
            return Err(Error::InvalidInput("inertia must be symmetric".into()));
        }
        if inertia.clone().cholesky().is_none() {
            return Err(Error::InvalidInput("inertia must be positive definite".into()));
        }
        if actuation.nrows() != n || actuation.ncols() > n {
            return Err(Error::DimensionMismatch(format!("actuation must be {n}×m with m ≤ {n}")));
        }
        Ok(ReducedSystem { group, inertia, potential: None, drift: DMatrix::zeros(n, n), actuation })
    }

    /// Fully actuated in the coordinate basis, `B = I`.
    pub fn fully_actuated(group: GroupSpec, inertia: DMatrix<f64>) -> Result<Self> {
        let n = group.algebra_dim();
        Self::new(group, inertia, DMatrix::identity(n, n))
    }

    /// Actuates the listed basis directions (zero-based) with unit gains.
    pub fn with_actuated_axes(group: GroupSpec, inertia: DMatrix<f64>, axes: &[usize]) -> Result<Self> {
        let n = group.algebra_dim();
        let mut b = DMatrix::zeros(n, axes.len());
        for (col, &ax) in axes.iter().enumerate() {
            if ax >= n {
                return Err(Error::InvalidInput(format!("axis {ax} out of range for dimension {n}")));
            }
            b[(ax, col)] = 1.0;
        }
        Self::new(group, inertia, b)
    }

    pub fn with_potential(mut self, potential: Arc<dyn GroupPotential>) -> Self {
        self.potential = Some(potential);
        self
    }

    /// Linear drift `d(ξ) = Dξ` (e.g. viscous drag).
    pub fn with_drift(mut self, drift: DMatrix<f64>) -> Result<Self> {
        let n = self.dim();
        if drift.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!("drift must be {n}×{n}")));
        }
        self.drift = drift;
        Ok(self)
    }

    pub fn with_retraction(mut self, retraction: Retraction) -> Result<Self> {
        self.group = GroupSpec::new(self.group.kind, retraction)?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.group.algebra_dim()
    }

    pub fn kind(&self) -> GroupKind {
        self.group.kind
    }

    pub fn control_dim(&self) -> usize {
        self.actuation.ncols()
    }

    pub fn inertia(&self) -> &DMatrix<f64> {
        &self.inertia
    }

    pub fn actuation(&self) -> &DMatrix<f64> {
        &self.actuation
    }

    pub fn drift(&self) -> &DMatrix<f64> {
        &self.drift
    }

    pub fn potential(&self) -> Option<&Arc<dyn GroupPotential>> {
        self.potential.as_ref()
    }

    /// `∂_ξ l(ξ) = 𝕀ξ`.
    pub fn momentum(&self, xi: &DVector<f64>) -> DVector<f64> {
        &self.inertia * xi
    }

    pub fn kinetic_energy(&self, xi: &DVector<f64>) -> f64 {
        0.5 * xi.dot(&(&self.inertia * xi))
    }

    pub fn potential_value(&self, g: &GroupElement) -> f64 {
        self.potential.as_ref().map_or(0.0, |v| v.value(g))
    }

    pub(crate) fn potential_gradient(&self, g: &GroupElement) -> DVector<f64> {
        self.potential.as_ref().map_or_else(|| DVector::zeros(self.dim()), |v| v.gradient(g))
    }

    pub(crate) fn potential_hessian(&self, g: &GroupElement) -> DMatrix<f64> {
        self.potential.as_ref().map_or_else(|| DMatrix::zeros(self.dim(), self.dim()), |v| v.hessian(g))
    }

    /// Continuous force `f(ξ, u) = Dξ + Bu`.
    pub fn force(&self, xi: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.drift * xi + &self.actuation * u
    }

    /// `μ(x, ξ) = (dτ⁻¹_x)* 𝕀ξ`.
    pub(crate) fn mu_at(&self, x: &DVector<f64>, xi: &DVector<f64>) -> DVector<f64> {
        self.group.dtau_inv_dual(x, &(&self.inertia * xi))
    }

    /// `∂/∂ξ (dτ⁻¹_{sξ})* 𝕀ξ` for `s = ±h`.
    pub(crate) fn mu_jacobian(&self, s: f64, xi: &DVector<f64>) -> DMatrix<f64> {
        let x = xi * s;
        let w = &self.inertia * xi;
        self.group.dtau_inv_matrix(&x).transpose() * &self.inertia + self.group.dtau_inv_dual_jacobian(&x, &w) * s
    }
}
