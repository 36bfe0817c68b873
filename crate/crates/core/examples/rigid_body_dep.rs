//! Free rigid body on SO(3) with the discrete Euler–Poincaré integrator. The
//! spatial angular momentum is conserved to round-off; energy oscillates.
//!
//! `cargo run --example rigid_body_dep -- [cay|exp]`

use discvar::lgoc::{simulate, ReducedSystem};
use discvar::lie::{GroupSpec, Retraction};
use nalgebra::{DMatrix, DVector};

fn main() -> discvar::Result<()> {
    let retraction = match std::env::args().nth(1).as_deref() {
        Some("exp") => Retraction::exponential(),
        _ => Retraction::Cayley,
    };
    let inertia = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 2.0, 3.0]));
    let sys = ReducedSystem::fully_actuated(GroupSpec::so3(retraction), inertia)?;
    let xi0 = DVector::from_column_slice(&[0.4, 1.0, -0.3]);
    let steps = 10_000;
    let traj = simulate(&sys, 0.01, &sys.group.identity(), &xi0, &[], steps)?;
    let pi0 = traj.spatial_momentum(0);
    let e0 = sys.kinetic_energy(&traj.xi[0]);
    println!("retraction {retraction:?}, π₀ = {:?}", pi0.as_slice());
    for k in (0..steps).step_by(1000) {
        let drift = (traj.spatial_momentum(k) - &pi0).amax();
        let de = sys.kinetic_energy(&traj.xi[k]) - e0;
        println!("k = {k:>5}  ξ = [{:>7.4}, {:>7.4}, {:>7.4}]  |π − π₀| = {drift:.1e}  E − E₀ = {de:>9.2e}", traj.xi[k][0], traj.xi[k][1], traj.xi[k][2]);
    }
    Ok(())
}
