//! Rest-to-rest reorientation of a rigid body torqued about two body axes,
//! with a smoothed L1 cost and bounds |u| ≤ 1. The solve walks the smoothing
//! ε from 1 down to 1e-4 with warm starts; the optimal torques come out
//! bang-off-bang.
//!
//! `cargo run --release --example rigid_body_l1`

use std::sync::Arc;

use discvar::cost::SmoothedL1;
use discvar::lgoc::{BoundaryLie, OcProblemLie};
use discvar::lie::{GroupSpec, Retraction};
use discvar::solvers::{SolverKind, SolverOptions};
use discvar::systems::make_rigid_body_so3;
use nalgebra::DVector;

fn main() -> discvar::Result<()> {
    let steps = 20;
    let sys = make_rigid_body_so3([1.0, 2.0, 3.0], &[0, 1], Retraction::Cayley)?;
    let exp = GroupSpec::so3(Retraction::exponential());
    let bnd = BoundaryLie {
        g0: sys.group.identity(),
        xi0: DVector::zeros(3),
        gt: exp.tau(&DVector::from_column_slice(&[0.3, -0.2, 0.3])),
        xit: DVector::zeros(3),
    };
    let p = OcProblemLie::new(sys, bnd, steps, 6.0, Arc::new(SmoothedL1::with_bounds(1e-4, 1.0)))?;
    let sol = p.solve(SolverKind::Newton, &SolverOptions::newton())?;
    println!("converged: {} Newton iterations in total, |F| = {:.2e}, cost {:.4}", sol.total_iterations, sol.report.residual_norm, sol.cost);
    println!("{:>3} {:>9} {:>9} {:>9} {:>9}", "k", "u⁻₁", "u⁺₁", "u⁻₂", "u⁺₂");
    for (k, (a, b)) in sol.trajectory.controls.iter().enumerate() {
        println!("{k:>3} {:>9.4} {:>9.4} {:>9.4} {:>9.4}", a[0], b[0], a[1], b[1]);
    }
    Ok(())
}
