mod common;

use std::sync::Arc;

use common::*;
use discvar::cost::QuadraticEffort;
use discvar::lgoc::{simulate, Formulation, HeavyTopPotential, OcProblemLie};
use discvar::lie::Retraction;
use discvar::solvers::{SolverKind, SolverOptions};
use discvar::systems::make_rigid_body_so3;
use nalgebra::Vector3;

fn solve(p: &OcProblemLie) -> discvar::lgoc::LieSolution {
    p.solve(SolverKind::Newton, &SolverOptions::newton()).unwrap()
}

#[test]
fn cayley_and_exponential_solutions_agree_at_second_order() {
    let mut gaps = Vec::new();
    for steps in [20, 40, 80] {
        let a = solve(&so3_full(Retraction::Cayley, steps));
        let b = solve(&so3_full(Retraction::exponential(), steps));
        let gap = a.trajectory.g.iter().zip(&b.trajectory.g).map(|(x, y)| x.distance(y)).fold(0.0, f64::max);
        gaps.push(gap);
    }
    let slope = (gaps[0] / gaps[2]).log2() / 2.0;
    assert!(slope >= 1.8, "gaps {gaps:?}, slope {slope}");
}

#[test]
fn l2_controls_match_at_shared_nodes() {
    // the node-momentum stationarity equates ∇C(u⁺_k) and ∇C(u⁻_{k+1}) on the actuated axes
    for steps in [8, 16, 32] {
        for p in [so3_full(Retraction::Cayley, steps), so3_two_torque(Retraction::Cayley, steps)] {
            let sol = solve(&p);
            let c = &sol.trajectory.controls;
            let gap = (0..steps - 1).map(|k| (&c[k].1 - &c[k + 1].0).amax()).fold(0.0, f64::max);
            assert!(gap < 1e-7, "N = {steps}: node gap {gap:e}");
        }
    }
}

#[test]
fn constant_potential_leaves_residual_unchanged() {
    let base = so3_full(Retraction::Cayley, 6);
    let sys = base
        .system()
        .clone()
        .with_potential(Arc::new(HeavyTopPotential { weight: 0.0, center: Vector3::new(0.1, 0.2, 0.3) }));
    let with = OcProblemLie::new(sys, base.boundary().clone(), 6, 2.0, Arc::new(QuadraticEffort::default())).unwrap();
    let mut r = rng(11);
    for _ in 0..10 {
        let z = lgoc_random_point(&base, &mut r, 0.3);
        let d = (base.residual(&z).unwrap() - with.residual(&z).unwrap()).amax();
        assert!(d < 1e-13, "{d:e}");
    }
}

#[test]
fn reduced_solution_solves_general_system() {
    let p = so3_full(Retraction::exponential(), 12);
    let reduced = p.clone().with_formulation(Formulation::Reduced).unwrap();
    let a = solve(&reduced);
    let b = solve(&p);
    let gap = a.trajectory.xi.iter().zip(&b.trajectory.xi).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max);
    assert!(gap < 1e-8, "{gap:e}");
    assert!((a.cost - b.cost).abs() < 1e-8);
}

#[test]
fn heavy_top_energy_stays_bounded() {
    let sys = make_rigid_body_so3([1.0, 1.2, 0.8], &[0, 1, 2], Retraction::Cayley)
        .unwrap()
        .with_potential(Arc::new(HeavyTopPotential { weight: 0.8, center: Vector3::new(0.05, -0.1, 0.5) }));
    let h = 0.01;
    let g0 = sys.group.tau(&v(&[0.4, 0.1, 0.0]));
    let traj = simulate(&sys, h, &g0, &v(&[0.3, -0.2, 1.0]), &[], 10_000).unwrap();
    let energy: Vec<f64> =
        (0..traj.xi.len()).map(|k| sys.kinetic_energy(&traj.xi[k]) + sys.potential_value(&traj.g[k])).collect();
    let e0 = energy[0];
    let worst = energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-2 * e0.abs().max(1.0), "energy excursion {worst:e}");
    let late = energy[energy.len() - 1000..].iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
    assert!(late <= 2.0 * worst.max(1e-14));
    for k in 0..traj.g.len() {
        assert!(traj.g[k].validate().is_ok(), "left the group at step {k}");
    }
}
