//! Underwater vehicle on SE(3) with five thrusters (no direct heave force):
//! rest-to-rest move of 1 m along x plus a 30° turn about z, solved with
//! Levenberg–Marquardt. Writes trajectory and controls CSVs when given a
//! directory.
//!
//! `cargo run --release --example uuv_reconfiguration -- [out_dir]`

use std::sync::Arc;

use discvar::cli::output::{controls_table, group_table};
use discvar::cost::QuadraticEffort;
use discvar::lgoc::{BoundaryLie, OcProblemLie};
use discvar::lie::{GroupElement, GroupSpec, Retraction};
use discvar::solvers::{SolverKind, SolverOptions};
use discvar::systems::{make_uuv, UuvParams};
use nalgebra::{DVector, Vector3};

fn main() -> discvar::Result<()> {
    let steps = 32;
    let sys = make_uuv(&UuvParams::default(), Retraction::Cayley)?;
    let turn = GroupSpec::so3(Retraction::exponential()).tau(&DVector::from_column_slice(&[0.0, 0.0, 30f64.to_radians()]));
    let gt = GroupElement::se3(turn.rotation().unwrap(), Vector3::new(1.0, 0.0, 0.0))?;
    let bnd = BoundaryLie { g0: sys.group.identity(), xi0: DVector::zeros(6), gt, xit: DVector::zeros(6) };
    let p = OcProblemLie::new(sys, bnd, steps, 10.0, Arc::new(QuadraticEffort::default()))?;
    let sol = p.solve(SolverKind::LevenbergMarquardt, &SolverOptions::levenberg_marquardt())?;
    let br = p.breakdown(&sol.report.x)?;
    println!(
        "converged in {} iterations, |F| = {:.2e}, unactuated constraint {:.1e}, cost {:.4}",
        sol.total_iterations, sol.report.residual_norm, br.constraints, sol.cost
    );
    let t = &sol.trajectory;
    for k in (0..steps).step_by(4) {
        let u = &t.controls[k].0;
        println!("k = {k:>2}  u⁻ = [{}]", u.iter().map(|x| format!("{x:>8.4}")).collect::<Vec<_>>().join(" "));
    }
    if let Some(dir) = std::env::args().nth(1) {
        let dir = std::path::PathBuf::from(dir);
        std::fs::create_dir_all(&dir)?;
        group_table(p.h(), &t.g, &t.xi, &t.nu, &t.lambda, p.unactuated_dim()).write(&dir.join("trajectory.csv"))?;
        controls_table(p.h(), &t.controls).write(&dir.join("controls.csv"))?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
