//! The same mechanical optimal control problem solved twice: once on T*ℝ²
//! with positions and momenta as unknowns, once on the additive group ℝ²
//! with body velocities as unknowns. The two agree to round-off.
//!
//! `cargo run --example cross_solver`

use std::sync::Arc;

use discvar::cost::QuadraticEffort;
use discvar::lgoc::{AbelianPotential, BoundaryLie, OcProblemLie, ReducedSystem};
use discvar::lie::{GroupElement, GroupSpec};
use discvar::mech::QuadraticPotential;
use discvar::solvers::{SolverKind, SolverOptions};
use discvar::systems::make_point_mass;
use discvar::tboc::BoundaryRn;
use nalgebra::{DMatrix, DVector};

fn main() -> discvar::Result<()> {
    let (steps, horizon) = (24, 2.0);
    let v = DVector::from_column_slice;
    let mass = DMatrix::from_row_slice(2, 2, &[2.0, 0.4, 0.4, 1.0]);
    let potential = Arc::new(QuadraticPotential { stiffness: DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, 0.7]) });
    let (x0, v0, xt, vt) = (v(&[0.0, 0.5]), v(&[0.2, 0.0]), v(&[1.0, -0.3]), v(&[0.0, 0.1]));

    let bnd = BoundaryRn { x0: x0.clone(), p0: &mass * &v0, xt: xt.clone(), pt: &mass * &vt };
    let vector = make_point_mass(mass.clone(), potential.clone(), bnd, steps, horizon, Arc::new(QuadraticEffort::default()))?
        .solve(&SolverOptions::newton())?;

    let sys = ReducedSystem::fully_actuated(GroupSpec::real(2), mass)?.with_potential(Arc::new(AbelianPotential(potential)));
    let bnd = BoundaryLie { g0: GroupElement::Real(x0), xi0: v0, gt: GroupElement::Real(xt), xit: vt };
    let group = OcProblemLie::new(sys, bnd, steps, horizon, Arc::new(QuadraticEffort::default()))?
        .solve(SolverKind::Newton, &SolverOptions::newton())?;

    let gap = vector
        .x
        .iter()
        .zip(&group.trajectory.g)
        .map(|(x, g)| match g {
            GroupElement::Real(y) => (x - y).amax(),
            _ => f64::NAN,
        })
        .fold(0.0, f64::max);
    println!("cost: T*ℝ² {:.12}  ℝ² group {:.12}", vector.cost, group.cost);
    println!("max position gap {gap:.2e}");
    Ok(())
}
