//! Minimum-effort transfer of a unit mass from rest at 0 to rest at 1 in unit
//! time, compared with the continuous optimum x(t) = 3t² − 2t³, cost 6.
//!
//! The residual is an absolute gradient whose round-off floor grows like h⁻³,
//! so the default tolerance 1e-9 is out of reach beyond N ≈ 100.
//!
//! `cargo run --example double_integrator`

use std::sync::Arc;

use discvar::cost::QuadraticEffort;
use discvar::mech::ZeroPotential;
use discvar::solvers::SolverOptions;
use discvar::systems::make_point_mass;
use discvar::tboc::BoundaryRn;
use nalgebra::{DMatrix, DVector};

fn main() -> discvar::Result<()> {
    let one = |x: f64| DVector::from_element(1, x);
    println!("{:>4} {:>12} {:>12} {:>6}", "N", "max |x − x*|", "|cost − 6|", "iters");
    for steps in [8, 16, 32, 64] {
        let bnd = BoundaryRn { x0: one(0.0), p0: one(0.0), xt: one(1.0), pt: one(0.0) };
        let p = make_point_mass(DMatrix::identity(1, 1), Arc::new(ZeroPotential), bnd, steps, 1.0, Arc::new(QuadraticEffort::default()))?;
        let sol = p.solve(&SolverOptions::newton())?;
        let h = 1.0 / steps as f64;
        let err = sol
            .x
            .iter()
            .enumerate()
            .map(|(k, x)| {
                let t = k as f64 * h;
                (x[0] - (3.0 * t * t - 2.0 * t * t * t)).abs()
            })
            .fold(0.0, f64::max);
        println!("{steps:>4} {err:>12.3e} {:>12.3e} {:>6}", (sol.cost - 6.0).abs(), sol.report.iterations);
    }
    Ok(())
}
