//! Example systems and control costs.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cost::{ControlPenalty, QuadraticEffort, SmoothedL1};
use crate::error::{Error, Result};
use crate::lgoc::ReducedSystem;
use crate::lie::{GroupElement, GroupSpec, Retraction};
use crate::mech::{AffineForces, Potential, RnLagrangian};
use crate::tboc::{BoundaryRn, NodeCost, OcProblemRn};

/// Five-thruster underwater vehicle with a solid-cylinder mass distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UuvParams {
    pub mass: f64,
    pub radius: f64,
    pub length: f64,
    /// Moment arm of the three vertical thrusters.
    pub arm_c: f64,
    /// Moment arm of the two horizontal thrusters.
    pub arm_d: f64,
    /// Viscous drag, row-major 6×6 in (ω, v) ordering.
    pub drag: [[f64; 6]; 6],
}

impl Default for UuvParams {
    fn default() -> Self {
        let mut drag = [[0.0; 6]; 6];
        for (i, row) in drag.iter_mut().enumerate() {
            row[i] = if i < 3 { -0.1 } else { -0.2 };
        }
        UuvParams { mass: 3.0, radius: 0.1, length: 0.6, arm_c: 0.3, arm_d: 0.3, drag }
    }
}

impl UuvParams {
    pub fn drag_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(6, 6, |i, j| self.drag[i][j])
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass", self.mass),
            ("radius", self.radius),
            ("length", self.length),
            ("arm_c", self.arm_c),
            ("arm_d", self.arm_d),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("uuv {name} must be positive, got {v}")));
            }
        }
        let h = self.drag_matrix();
        let sym = -(&h + h.transpose());
        if sym.cholesky().is_none() {
            return Err(Error::InvalidInput("uuv drag H + Hᵀ must be negative definite".into()));
        }
        Ok(())
    }
}

/// `diag(½mr², m(3r²+L²)/12, m(3r²+L²)/12, m, m, m)`, cylinder axis along body x.
pub fn uuv_inertia(p: &UuvParams) -> DMatrix<f64> {
    let (m, r, l) = (p.mass, p.radius, p.length);
    let ix = 0.5 * m * r * r;
    let iy = m * (3.0 * r * r + l * l) / 12.0;
    DMatrix::from_diagonal(&DVector::from_column_slice(&[ix, iy, iy, m, m, m]))
}

/// Constant linear part `u ↦ b` of the thruster map; row 6 is zero.
pub fn uuv_actuation(p: &UuvParams) -> DMatrix<f64> {
    let (c, d) = (p.arm_c, p.arm_d);
    let s = c * (PI / 3.0).sin();
    #[rustfmt::skip]
    let b = DMatrix::from_row_slice(6, 5, &[
        0.0,     0.0,     0.0,  -d,  d,
        c / 2.0, c / 2.0, -c,   0.0, 0.0,
        -s,      s,       0.0,  0.0, 0.0,
        1.0,     1.0,     1.0,  0.0, 0.0,
        0.0,     0.0,     0.0,  1.0, 1.0,
        0.0,     0.0,     0.0,  0.0, 0.0,
    ]);
    b
}

/// `a(W) + Σ_s b_s e^s` with drift `a(W) = H τ⁻¹(W)`.
pub fn uuv_control_force(p: &UuvParams, spec: &GroupSpec, w: &GroupElement, u: &DVector<f64>) -> Result<DVector<f64>> {
    if u.len() != 5 {
        return Err(Error::DimensionMismatch(format!("uuv takes 5 thrusts, got {}", u.len())));
    }
    Ok(p.drag_matrix() * spec.tau_inv(w)? + uuv_actuation(p) * u)
}

/// The vehicle as a reduced system on SE(3) with drift `Hξ`.
pub fn make_uuv(p: &UuvParams, retraction: Retraction) -> Result<ReducedSystem> {
    p.validate()?;
    ReducedSystem::new(GroupSpec::se3(retraction), uuv_inertia(p), uuv_actuation(p))?.with_drift(p.drag_matrix())
}

/// Rigid body on SO(3) with unit torques about the listed body axes (zero-based).
pub fn make_rigid_body_so3(inertia: [f64; 3], actuated: &[usize], retraction: Retraction) -> Result<ReducedSystem> {
    if inertia.iter().any(|&i| !(i > 0.0 && i.is_finite())) {
        return Err(Error::InvalidInput(format!("inertia entries must be positive, got {inertia:?}")));
    }
    let mut seen = [false; 3];
    for &a in actuated {
        if a >= 3 || std::mem::replace(&mut seen[a], true) {
            return Err(Error::InvalidInput(format!("bad actuated axis list {actuated:?}")));
        }
    }
    ReducedSystem::with_actuated_axes(
        GroupSpec::so3(retraction),
        DMatrix::from_diagonal(&DVector::from_column_slice(&inertia)),
        actuated,
    )
}

/// Fully actuated point mass in ℝⁿ with force `u` sampled at the nodes
/// (`f^± = (h/2)u^±`) and running cost `∫ C(u) dt`.
pub fn make_point_mass(
    mass: DMatrix<f64>,
    potential: Arc<dyn Potential>,
    boundary: BoundaryRn,
    steps: usize,
    horizon: f64,
    cost: Arc<dyn ControlPenalty>,
) -> Result<OcProblemRn> {
    if steps == 0 || !(horizon > 0.0) {
        return Err(Error::InvalidInput("need steps ≥ 1 and a positive horizon".into()));
    }
    let h = horizon / steps as f64;
    let n = mass.nrows();
    let lagrangian = RnLagrangian::new(mass, potential, h)?;
    let forces = AffineForces::scaled_identity(n, h / 2.0);
    OcProblemRn::new(lagrangian, forces, Arc::new(NodeCost { h, penalty: cost }), boundary, steps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    L2 {
        #[serde(default = "unit")]
        weight: f64,
    },
    SmoothedL1 {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        u_min: Option<f64>,
        u_max: Option<f64>,
        #[serde(default = "default_penalty")]
        penalty: f64,
    },
}

fn unit() -> f64 {
    1.0
}
fn default_epsilon() -> f64 {
    SmoothedL1::default().epsilon
}
fn default_penalty() -> f64 {
    SmoothedL1::default().penalty
}

impl Default for CostSpec {
    fn default() -> Self {
        CostSpec::L2 { weight: 1.0 }
    }
}

impl CostSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CostSpec::L2 { weight } if !(weight > 0.0) => {
                Err(Error::InvalidInput(format!("cost weight must be positive, got {weight}")))
            }
            CostSpec::SmoothedL1 { epsilon, u_min, u_max, penalty } => {
                if !(epsilon > 0.0) {
                    return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
                }
                if !(penalty >= 0.0) {
                    return Err(Error::InvalidInput(format!("penalty must be non-negative, got {penalty}")));
                }
                if let (Some(lo), Some(hi)) = (u_min, u_max) {
                    if lo >= hi {
                        return Err(Error::InvalidInput(format!("u_min {lo} must be below u_max {hi}")));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn penalty(&self) -> Result<Arc<dyn ControlPenalty>> {
        self.validate()?;
        Ok(match *self {
            CostSpec::L2 { weight } => Arc::new(QuadraticEffort { weight }),
            CostSpec::SmoothedL1 { epsilon, u_min, u_max, penalty } => Arc::new(SmoothedL1 {
                epsilon,
                u_min: u_min.unwrap_or(f64::NEG_INFINITY),
                u_max: u_max.unwrap_or(f64::INFINITY),
                penalty,
            }),
        })
    }
}
