//! Optimal control of a heavy top (rigid body in gravity) torqued about two
//! body axes: the configuration-dependent case, where the potential gradient
//! enters the optimality conditions.
//!
//! `cargo run --release --example heavy_top`

use std::sync::Arc;

use discvar::cost::QuadraticEffort;
use discvar::lgoc::{BoundaryLie, HeavyTopPotential, OcProblemLie};
use discvar::lie::{GroupSpec, Retraction};
use discvar::solvers::{SolverKind, SolverOptions};
use discvar::systems::make_rigid_body_so3;
use nalgebra::{DVector, Vector3};

fn main() -> discvar::Result<()> {
    let steps = 24;
    let sys = make_rigid_body_so3([1.0, 1.2, 0.8], &[0, 1], Retraction::Cayley)?
        .with_potential(Arc::new(HeavyTopPotential { weight: 0.8, center: Vector3::new(0.05, -0.1, 0.5) }));
    let exp = GroupSpec::so3(Retraction::exponential());
    let v = DVector::from_column_slice;
    let bnd = BoundaryLie { g0: exp.tau(&v(&[0.1, 0.0, 0.0])), xi0: v(&[0.0, 0.1, 0.0]), gt: exp.tau(&v(&[0.3, 0.2, 0.4])), xit: DVector::zeros(3) };
    let p = OcProblemLie::new(sys, bnd, steps, 2.0, Arc::new(QuadraticEffort::default()))?;
    let sol = p.solve(SolverKind::Newton, &SolverOptions::newton())?;
    let br = p.breakdown(&sol.report.x)?;
    println!(
        "|F| = {:.2e} after {} iterations; stationarity {:.1e}, matching {:.1e}, constraints {:.1e}, closure {:.1e}",
        sol.report.residual_norm, sol.total_iterations, br.stationarity, br.momentum_matching, br.constraints, br.closure
    );
    for (k, (xi, (a, _))) in sol.trajectory.xi.iter().zip(&sol.trajectory.controls).enumerate().step_by(4) {
        println!("k = {k:>2}  ξ = [{:>7.4}, {:>7.4}, {:>7.4}]  u⁻ = [{:>7.4}, {:>7.4}]", xi[0], xi[1], xi[2], a[0], a[1]);
    }
    Ok(())
}
