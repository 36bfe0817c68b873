//! Running-cost densities `C(u)` on the control space.
//!
//! Both optimal control discretizations sample them at the two ends of an
//! interval and weight by `h/2`.

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub trait ControlPenalty: Debug + Send + Sync {
    fn value(&self, u: &DVector<f64>) -> f64;
    fn gradient(&self, u: &DVector<f64>) -> DVector<f64>;
    /// A family of easier penalties, `t = 1` giving `self`, for solving by
    /// continuation from `t = 0`. `None` when the penalty is easy enough as is.
    fn homotopy(&self, _t: f64) -> Option<Arc<dyn ControlPenalty>> {
        None
    }
}

/// `w · ½‖u‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticEffort {
    pub weight: f64,
}

impl Default for QuadraticEffort {
    fn default() -> Self {
        QuadraticEffort { weight: 1.0 }
    }
}

impl ControlPenalty for QuadraticEffort {
    fn value(&self, u: &DVector<f64>) -> f64 {
        0.5 * self.weight * u.norm_squared()
    }
    fn gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        u * self.weight
    }
}

/// `Σ √(uᵢ² + ε²)` plus a quadratic penalty on leaving `[u_min, u_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothedL1 {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_lower")]
    pub u_min: f64,
    #[serde(default = "default_upper")]
    pub u_max: f64,
    #[serde(default = "default_penalty")]
    pub penalty: f64,
}

fn default_epsilon() -> f64 {
    1e-4
}
fn default_lower() -> f64 {
    f64::NEG_INFINITY
}
fn default_upper() -> f64 {
    f64::INFINITY
}
fn default_penalty() -> f64 {
    1e3
}

impl Default for SmoothedL1 {
    fn default() -> Self {
        SmoothedL1 { epsilon: default_epsilon(), u_min: default_lower(), u_max: default_upper(), penalty: default_penalty() }
    }
}

impl SmoothedL1 {
    pub fn with_bounds(epsilon: f64, bound: f64) -> Self {
        SmoothedL1 { epsilon, u_min: -bound, u_max: bound, penalty: default_penalty() }
    }

    fn violation(&self, x: f64) -> f64 {
        if x > self.u_max {
            x - self.u_max
        } else if x < self.u_min {
            x - self.u_min
        } else {
            0.0
        }
    }
}

impl ControlPenalty for SmoothedL1 {
    fn value(&self, u: &DVector<f64>) -> f64 {
        let e2 = self.epsilon * self.epsilon;
        u.iter().map(|x| (x * x + e2).sqrt() + self.penalty * self.violation(*x).powi(2)).sum()
    }
    fn gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        let e2 = self.epsilon * self.epsilon;
        u.map(|x| x / (x * x + e2).sqrt() + 2.0 * self.penalty * self.violation(x))
    }
    /// `ε(t) = ε^t`, from a unit smoothing down to the target.
    fn homotopy(&self, t: f64) -> Option<Arc<dyn ControlPenalty>> {
        if self.epsilon >= 1.0 {
            return None;
        }
        Some(Arc::new(SmoothedL1 { epsilon: self.epsilon.powf(t.clamp(0.0, 1.0)), ..*self }))
    }
}
