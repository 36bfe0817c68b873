#![allow(dead_code)]

use std::sync::Arc;

use discvar::cost::{QuadraticEffort, SmoothedL1};
use discvar::lgoc::{BoundaryLie, HeavyTopPotential, OcProblemLie};
use discvar::lie::{GroupElement, GroupSpec, Retraction};
use discvar::mech::{AffineForces, PendulumPotential, RnLagrangian};
use discvar::systems::{make_rigid_body_so3, make_uuv, UuvParams};
use discvar::tboc::{BoundaryRn, NodeCost, OcProblemRn};
use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

pub fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

/// ‖a − b‖∞ / max(‖b‖∞, 1e-12).
pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1e-12)
}

/// Central difference of the multiplier action in every unknown; compares with the residual.
pub fn tboc_fd_error(p: &OcProblemRn, z: &DVector<f64>) -> f64 {
    let r = p.residual(z);
    let eps = 1e-5;
    let fd = DVector::from_fn(z.len(), |i, _| {
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[i] += eps;
        zm[i] -= eps;
        (p.multiplier_action(&zp) - p.multiplier_action(&zm)) / (2.0 * eps)
    });
    rel_err(&r, &fd)
}

/// Finite-difference gradient of the action under `g_k → g_k exp(εe_j)` (interior k),
/// then in the interior `ν_k` and `λ^±_k`, in residual order. The closure rows are dropped.
pub fn lgoc_fd_error(p: &OcProblemLie, z: &DVector<f64>) -> f64 {
    let (xi, nu, lambda) = p.unpack(z);
    let g = p.reconstruct(&xi);
    let n = p.dim();
    let nn = p.steps();
    let exp = GroupSpec::new(p.system().kind(), Retraction::exponential()).unwrap();
    let eps = 1e-5;
    let mut fd = Vec::new();
    for k in 1..nn {
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = eps;
            let shift = |s: f64| -> f64 {
                let mut gg: Vec<GroupElement> = g.clone();
                gg[k] = g[k].compose(&exp.tau(&(&e * s)));
                p.action_on_path(&gg, &nu, &lambda).unwrap()
            };
            fd.push((shift(1.0) - shift(-1.0)) / (2.0 * eps));
        }
    }
    if !nu.is_empty() {
        for k in 0..nn - 1 {
            for j in 0..n {
                let shift = |s: f64| -> f64 {
                    let mut nn2 = nu.clone();
                    nn2[k][j] += s * eps;
                    p.action_on_path(&g, &nn2, &lambda).unwrap()
                };
                fd.push((shift(1.0) - shift(-1.0)) / (2.0 * eps));
            }
        }
        let r = p.unactuated_dim();
        for k in 0..nn {
            for side in 0..2 {
                for j in 0..r {
                    let shift = |s: f64| -> f64 {
                        let mut l2 = lambda.clone();
                        if side == 0 {
                            l2[k].0[j] += s * eps;
                        } else {
                            l2[k].1[j] += s * eps;
                        }
                        p.action_on_path(&g, &nu, &l2).unwrap()
                    };
                    fd.push((shift(1.0) - shift(-1.0)) / (2.0 * eps));
                }
            }
        }
    }
    let fd = DVector::from_vec(fd);
    let r = p.residual(z).unwrap();
    let body = r.rows(0, r.len() - n).into_owned();
    rel_err(&body, &fd)
}

/// Random unknowns around the initial guess.
pub fn lgoc_random_point(p: &OcProblemLie, rng: &mut ChaCha8Rng, scale: f64) -> DVector<f64> {
    let z0 = p.initial_guess().unwrap();
    let dz = rand_vec(rng, z0.len(), scale);
    z0 + dz
}

pub fn double_integrator(steps: usize) -> OcProblemRn {
    let h = 1.0 / steps as f64;
    let l = RnLagrangian::free(DMatrix::identity(1, 1), h).unwrap();
    let bnd = BoundaryRn { x0: v(&[0.0]), p0: v(&[0.0]), xt: v(&[1.0]), pt: v(&[0.0]) };
    OcProblemRn::new(l, AffineForces::scaled_identity(1, h / 2.0), Arc::new(NodeCost::effort(h, 1.0)), bnd, steps).unwrap()
}

/// Planar double pendulum-like chain with gravity, torque on the first joint only.
pub fn underactuated_pendulum(steps: usize) -> OcProblemRn {
    let h = 2.0 / steps as f64;
    let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
    let l = RnLagrangian::new(m, Arc::new(PendulumPotential { weight: 1.5 }), h).unwrap();
    let b = DMatrix::from_column_slice(2, 1, &[1.0, 0.2]);
    let bnd = BoundaryRn { x0: v(&[0.0, 0.0]), p0: v(&[0.0, 0.0]), xt: v(&[0.3, 0.05]), pt: v(&[0.0, 0.0]) };
    OcProblemRn::new(l, AffineForces::actuated(b, h / 2.0), Arc::new(NodeCost::effort(h, 1.0)), bnd, steps).unwrap()
}

pub fn so3_boundary(a: &[f64], b: &[f64], xi0: &[f64], xit: &[f64]) -> BoundaryLie {
    let exp = GroupSpec::so3(Retraction::exponential());
    BoundaryLie { g0: exp.tau(&v(a)), xi0: v(xi0), gt: exp.tau(&v(b)), xit: v(xit) }
}

pub fn so3_full(retraction: Retraction, steps: usize) -> OcProblemLie {
    let sys = make_rigid_body_so3([1.0, 2.0, 3.0], &[0, 1, 2], retraction).unwrap();
    let bnd = so3_boundary(&[0.1, -0.2, 0.3], &[0.7, 0.4, -0.5], &[0.1, 0.0, 0.2], &[0.0, 0.3, 0.0]);
    OcProblemLie::new(sys, bnd, steps, 2.0, Arc::new(QuadraticEffort::default())).unwrap()
}

pub fn so3_two_torque(retraction: Retraction, steps: usize) -> OcProblemLie {
    let sys = make_rigid_body_so3([1.0, 2.0, 3.0], &[0, 1], retraction).unwrap();
    let bnd = so3_boundary(&[0.0, 0.0, 0.0], &[0.4, -0.3, 0.5], &[0.0; 3], &[0.0; 3]);
    OcProblemLie::new(sys, bnd, steps, 3.0, Arc::new(QuadraticEffort::default())).unwrap()
}

/// Rest-to-rest reorientation with bounded, smoothed L1 effort.
pub fn so3_two_torque_l1(steps: usize) -> OcProblemLie {
    let sys = make_rigid_body_so3([1.0, 2.0, 3.0], &[0, 1], Retraction::Cayley).unwrap();
    let bnd = so3_boundary(&[0.0; 3], &[0.3, -0.2, 0.3], &[0.0; 3], &[0.0; 3]);
    OcProblemLie::new(sys, bnd, steps, 6.0, Arc::new(SmoothedL1::with_bounds(1e-4, 1.0))).unwrap()
}

pub fn heavy_top(steps: usize) -> OcProblemLie {
    let sys = make_rigid_body_so3([1.0, 1.2, 0.8], &[0, 1], Retraction::Cayley)
        .unwrap()
        .with_potential(Arc::new(HeavyTopPotential { weight: 0.8, center: Vector3::new(0.05, -0.1, 0.5) }));
    let bnd = so3_boundary(&[0.1, 0.0, 0.0], &[0.3, 0.2, 0.4], &[0.0, 0.1, 0.0], &[0.0; 3]);
    OcProblemLie::new(sys, bnd, steps, 2.0, Arc::new(QuadraticEffort::default())).unwrap()
}

/// 1 m translation along body x plus 30° about z, rest to rest.
pub fn uuv_reconfiguration(steps: usize) -> OcProblemLie {
    let sys = make_uuv(&UuvParams::default(), Retraction::Cayley).unwrap();
    let exp = GroupSpec::so3(Retraction::exponential());
    let r = exp.tau(&v(&[0.0, 0.0, 30f64.to_radians()])).rotation().unwrap();
    let gt = GroupElement::se3(r, Vector3::new(1.0, 0.0, 0.0)).unwrap();
    let bnd = BoundaryLie { g0: sys.group.identity(), xi0: DVector::zeros(6), gt, xit: DVector::zeros(6) };
    OcProblemLie::new(sys, bnd, steps, 10.0, Arc::new(QuadraticEffort::default())).unwrap()
}
