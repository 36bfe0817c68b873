//! Two coupled pendula driven by a single actuator. The unactuated momentum
//! components become constraints with Lagrange multipliers.
//!
//! `cargo run --example underactuated_pendulum`

use std::sync::Arc;

use discvar::mech::{AffineForces, PendulumPotential, RnLagrangian};
use discvar::solvers::SolverOptions;
use discvar::tboc::{BoundaryRn, NodeCost, OcProblemRn};
use nalgebra::{DMatrix, DVector};

fn main() -> discvar::Result<()> {
    let steps = 32;
    let h = 2.0 / steps as f64;
    let v = DVector::from_column_slice;
    let mass = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
    let l = RnLagrangian::new(mass, Arc::new(PendulumPotential { weight: 1.5 }), h)?;
    let b = DMatrix::from_column_slice(2, 1, &[1.0, 0.2]);
    let bnd = BoundaryRn { x0: v(&[0.0, 0.0]), p0: v(&[0.0, 0.0]), xt: v(&[0.3, 0.05]), pt: v(&[0.0, 0.0]) };
    let p = OcProblemRn::new(l, AffineForces::actuated(b, h / 2.0), Arc::new(NodeCost::effort(h, 1.0)), bnd, steps)?;
    let sol = p.solve(&SolverOptions::newton())?;
    println!("{} unknowns, |F| = {:.2e} after {} iterations, cost {:.5}", p.unknown_dim(), sol.report.residual_norm, sol.report.iterations, sol.cost);
    for k in (0..=steps).step_by(4) {
        let u = sol.controls.get(k).map_or(f64::NAN, |c| c.0[0]);
        println!("t = {:>5.3}  q = [{:>7.4}, {:>7.4}]  u⁻ = {u:>8.4}", k as f64 * h, sol.x[k][0], sol.x[k][1]);
    }
    Ok(())
}
