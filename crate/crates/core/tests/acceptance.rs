//! The acceptance suite: one test per criterion, each printing a single
//! `criterion N: PASS|FAIL` line (written straight to stderr so it shows
//! without `--nocapture`).

mod common;

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use discvar::cli::output::Table;
use discvar::cost::QuadraticEffort;
use discvar::lgoc::{simulate, AbelianPotential, BoundaryLie, Formulation, OcProblemLie, ReducedSystem};
use discvar::lie::{adjoint, cayley_tangent_via_matrices, GroupElement, GroupKind, GroupSpec, Retraction};
use discvar::mech::QuadraticPotential;
use discvar::solvers::{SolverKind, SolverOptions};
use discvar::systems::make_point_mass;
use discvar::tboc::{BoundaryRn, OcProblemRn};
use nalgebra::{DMatrix, DVector};

struct Outcome {
    checks: Vec<(String, bool)>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { checks: Vec::new() }
    }

    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.checks.push((what.into(), ok));
    }

    fn within(&mut self, what: &str, value: f64, bound: f64) {
        self.check(format!("{what} {value:.2e} ≤ {bound:.0e}"), value <= bound);
    }

    fn finish(self, id: usize, elapsed: Duration, budget_s: Option<f64>) {
        let mut checks = self.checks;
        if let Some(b) = budget_s {
            let s = elapsed.as_secs_f64();
            checks.push((format!("runtime {s:.2}s < {b}s"), s < b));
        }
        let pass = checks.iter().all(|c| c.1);
        let detail: Vec<String> =
            checks.iter().map(|(w, ok)| if *ok { w.clone() } else { format!("[failed] {w}") }).collect();
        let line = format!(
            "criterion {id}: {} ({:.2}s) {}\n",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            detail.join("; ")
        );
        let _ = std::io::stderr().write_all(line.as_bytes());
        assert!(pass, "{}", line.trim_end());
    }
}

fn groups() -> Vec<(GroupSpec, f64)> {
    // exponential tangents are truncated ad-series, so draws stay where the
    // order-12 remainder is below 1e-12
    let mut out = Vec::new();
    for kind in [GroupKind::RealN(3), GroupKind::SO3, GroupKind::SE3] {
        out.push((GroupSpec::new(kind, Retraction::Cayley).unwrap(), 1.0));
        out.push((GroupSpec::new(kind, Retraction::exponential()).unwrap(), 0.5));
    }
    out
}

fn scaled(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

#[test]
fn criterion_01_retraction_identities() {
    let t = Instant::now();
    let mut o = Outcome::new();
    for (i, (spec, scale)) in groups().into_iter().enumerate() {
        let mut rng = rng(100 + i as u64);
        let n = spec.algebra_dim();
        let (mut inv, mut l2, mut l3, mut comp) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..1000 {
            let xi = rand_vec(&mut rng, n, scale);
            let eta = rand_vec(&mut rng, n, 1.0);
            let e = spec.tau(&xi).compose(&spec.tau(&-&xi));
            inv = inv.max(e.distance(&spec.identity()));
            let lhs = spec.dtau(&xi, &eta);
            l2 = l2.max(scaled(&lhs, &adjoint(&spec.tau(&xi), &spec.dtau(&-&xi, &eta))));
            let lhs = spec.dtau_inv(&xi, &eta);
            let rhs = spec.dtau_inv(&-&xi, &adjoint(&spec.tau(&-&xi), &eta));
            l3 = l3.max(scaled(&lhs, &rhs));
            comp = comp.max(scaled(&spec.dtau(&xi, &spec.dtau_inv(&xi, &eta)), &eta));
            comp = comp.max(scaled(&spec.dtau_inv(&xi, &spec.dtau(&xi, &eta)), &eta));
        }
        let name = format!("{:?}/{:?}", spec.kind, spec.retraction).replace(" { series_order: 12 }", "");
        let worst = inv.max(l2).max(l3).max(comp);
        o.within(&name, worst, 1e-10);
    }
    o.finish(1, t.elapsed(), Some(5.0));
}

#[test]
fn criterion_02_se3_dcay_inverse() {
    let t = Instant::now();
    let mut o = Outcome::new();
    let spec = GroupSpec::se3(Retraction::Cayley);
    let mut rng = rng(200);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let xi = rand_vec(&mut rng, 6, 2.0);
        let eta = rand_vec(&mut rng, 6, 1.0);
        let forward = cayley_tangent_via_matrices(GroupKind::SE3, &xi);
        let inverse = forward.try_inverse().expect("dcay is invertible");
        worst = worst.max(scaled(&spec.dtau_inv(&xi, &eta), &(inverse * &eta)));
    }
    o.within("closed form vs inverted operator", worst, 1e-10);
    o.finish(2, t.elapsed(), Some(5.0));
}

#[test]
fn criterion_03_dep_conservation() {
    let t = Instant::now();
    let mut o = Outcome::new();
    let steps = 10_000;
    for r in [Retraction::Cayley, Retraction::exponential()] {
        let sys = ReducedSystem::fully_actuated(
            GroupSpec::so3(r),
            DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 2.0, 3.0])),
        )
        .unwrap();
        let xi0 = v(&[0.4, 1.0, -0.3]);
        let traj = simulate(&sys, 0.01, &sys.group.identity(), &xi0, &[], steps).unwrap();
        let pi0 = traj.spatial_momentum(0);
        let drift = (1..steps).map(|k| (traj.spatial_momentum(k) - &pi0).amax()).fold(0.0, f64::max);
        let energy: Vec<f64> = traj.xi.iter().map(|x| sys.kinetic_energy(x)).collect();
        let (lo, hi) = energy.iter().fold((f64::MAX, f64::MIN), |(a, b), &e| (a.min(e), b.max(e)));
        // least-squares slope of energy against step index
        let m = energy.len() as f64;
        let kbar = (m - 1.0) / 2.0;
        let ebar = energy.iter().sum::<f64>() / m;
        let (num, den) = energy.iter().enumerate().fold((0.0, 0.0), |(n, d), (k, e)| {
            let dk = k as f64 - kbar;
            (n + dk * (e - ebar), d + dk * dk)
        });
        let name = if r == Retraction::Cayley { "cay" } else { "exp" };
        o.within(&format!("{name} spatial momentum drift"), drift, 1e-12);
        o.within(&format!("{name} energy slope/step"), (num / den).abs(), 1e-8);
        o.within(&format!("{name} energy band (relative)"), (hi - lo) / ebar, 1e-2);
    }
    o.finish(3, t.elapsed(), Some(10.0));
}

fn real_system(n: usize) -> ReducedSystem {
    ReducedSystem::fully_actuated(GroupSpec::real(n), DMatrix::identity(n, n)).unwrap()
}

#[test]
fn criterion_04_system_sizes() {
    let t = Instant::now();
    let mut o = Outcome::new();
    let mut all_ok = true;
    for n in [1usize, 2, 3, 6] {
        for steps in [4usize, 16, 32] {
            let zero = DVector::zeros(n);
            let bnd = BoundaryRn { x0: zero.clone(), p0: zero.clone(), xt: DVector::from_element(n, 1.0), pt: zero };
            let tb = make_point_mass(
                DMatrix::identity(n, n),
                Arc::new(QuadraticPotential { stiffness: DMatrix::zeros(n, n) }),
                bnd,
                steps,
                1.0,
                Arc::new(QuadraticEffort::default()),
            )
            .unwrap();
            let z = tb.initial_guess();
            let want = 2 * (steps - 1) * n;
            all_ok &= tb.unknown_dim() == want && z.len() == want && tb.residual(&z).len() == want;

            let mut systems = vec![real_system(n)];
            match n {
                3 => systems.push(ReducedSystem::fully_actuated(GroupSpec::so3(Retraction::Cayley), DMatrix::identity(3, 3)).unwrap()),
                6 => systems.push(ReducedSystem::fully_actuated(GroupSpec::se3(Retraction::Cayley), DMatrix::identity(6, 6)).unwrap()),
                _ => {}
            }
            for sys in systems {
                let id = sys.group.identity();
                let gt = sys.group.tau(&DVector::from_element(n, 0.1));
                let bnd = BoundaryLie { g0: id, xi0: DVector::zeros(n), gt, xit: DVector::zeros(n) };
                let p = OcProblemLie::new(sys, bnd, steps, 1.0, Arc::new(QuadraticEffort::default()))
                    .unwrap()
                    .with_formulation(Formulation::Reduced)
                    .unwrap();
                let z = p.initial_guess().unwrap();
                let want = steps * n;
                all_ok &= p.unknown_dim() == want && z.len() == want && p.residual(&z).unwrap().len() == want;
            }
        }
    }
    o.check("2(N−1)n and N·n for n ∈ {1,2,3,6}, N ∈ {4,16,32}", all_ok);
    o.finish(4, t.elapsed(), None);
}

fn cubic(s: f64) -> f64 {
    3.0 * s * s - 2.0 * s * s * s
}

#[test]
fn criterion_05_double_integrator() {
    let t = Instant::now();
    let mut o = Outcome::new();
    let mut sols = Vec::new();
    for steps in [16usize, 32, 64] {
        let p = double_integrator(steps);
        sols.push(p.solve(&SolverOptions::newton()).unwrap());
    }
    let fine = &sols[2];
    let h = 1.0 / 64.0;
    let err = fine.x.iter().enumerate().map(|(k, x)| (x[0] - cubic(k as f64 * h)).abs()).fold(0.0, f64::max);
    o.within("‖x − (3t² − 2t³)‖∞", err, 1e-2);
    o.within("|cost − 6| / 6", (fine.cost - 6.0).abs() / 6.0, 1e-2);
    // self-convergence on the coarse grid t = k/16
    let diff = |a: &[DVector<f64>], sa: usize, b: &[DVector<f64>], sb: usize| {
        (0..=16).map(|k| (a[k * sa][0] - b[k * sb][0]).abs()).fold(0.0, f64::max)
    };
    let d1 = diff(&sols[0].x, 1, &sols[1].x, 2);
    let d2 = diff(&sols[1].x, 2, &sols[2].x, 4);
    let order = (d1 / d2).log2();
    o.check(format!("self-convergence order {order:.2} ≥ 1.8 (|x16−x32| {d1:.2e}, |x32−x64| {d2:.2e})"), order >= 1.8);
    o.finish(5, t.elapsed(), Some(5.0));
}

#[test]
fn criterion_06_cross_solver() {
    let t = Instant::now();
    let mut o = Outcome::new();
    let (steps, horizon) = (24, 2.0);
    let mass = DMatrix::from_row_slice(2, 2, &[2.0, 0.4, 0.4, 1.0]);
    let stiffness = DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, 0.7]);
    let potential = Arc::new(QuadraticPotential { stiffness });
    let (x0, v0, xt, vt) = (v(&[0.0, 0.5]), v(&[0.2, 0.0]), v(&[1.0, -0.3]), v(&[0.0, 0.1]));

    let bnd = BoundaryRn { x0: x0.clone(), p0: &mass * &v0, xt: xt.clone(), pt: &mass * &vt };
    let tb: OcProblemRn =
        make_point_mass(mass.clone(), potential.clone(), bnd, steps, horizon, Arc::new(QuadraticEffort::default())).unwrap();
    let a = tb.solve(&SolverOptions::newton()).unwrap();

    let sys = ReducedSystem::fully_actuated(GroupSpec::real(2), mass)
        .unwrap()
        .with_potential(Arc::new(AbelianPotential(potential)));
    let bnd = BoundaryLie { g0: GroupElement::Real(x0), xi0: v0, gt: GroupElement::Real(xt), xit: vt };
    let lie = OcProblemLie::new(sys, bnd, steps, horizon, Arc::new(QuadraticEffort::default())).unwrap();
    let b = lie.solve(SolverKind::Newton, &SolverOptions::newton()).unwrap();

    let traj = a
        .x
        .iter()
        .zip(&b.trajectory.g)
        .map(|(x, g)| match g {
            GroupElement::Real(y) => (x - y).amax(),
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    let controls = a
        .controls
        .iter()
        .zip(&b.trajectory.controls)
        .map(|(p, q)| (&p.0 - &q.0).amax().max((&p.1 - &q.1).amax()))
        .fold(0.0, f64::max);
    o.within("trajectory", traj, 1e-6);
    o.within("controls", controls, 1e-6);
    o.within("cost", (a.cost - b.cost).abs(), 1e-6);
    o.finish(6, t.elapsed(), Some(10.0));
}

#[test]
fn criterion_07_variational_gradients() {
    let t = Instant::now();
    let mut o = Outcome::new();
    let mut seed = 700;
    let mut tboc = |name: &str, p: &OcProblemRn, o: &mut Outcome| {
        seed += 1;
        let mut rng = rng(seed);
        let z0 = p.initial_guess();
        let worst = (0..20).map(|_| tboc_fd_error(p, &(&z0 + rand_vec(&mut rng, z0.len(), 0.3)))).fold(0.0, f64::max);
        o.within(name, worst, 1e-6);
    };
    tboc("tboc full", &double_integrator(8), &mut o);
    tboc("tboc underactuated", &underactuated_pendulum(8), &mut o);
    let lgoc = |name: &str, p: &OcProblemLie, scale: f64, seed: u64, o: &mut Outcome| {
        let mut rng = rng(seed);
        let worst = (0..20).map(|_| lgoc_fd_error(p, &lgoc_random_point(p, &mut rng, scale))).fold(0.0, f64::max);
        o.within(name, worst, 1e-6);
    };
    for (i, r) in [Retraction::Cayley, Retraction::exponential()].into_iter().enumerate() {
        let p = so3_full(r, 6).with_formulation(Formulation::Reduced).unwrap();
        lgoc(if i == 0 { "lgoc full (cay)" } else { "lgoc full (exp)" }, &p, 0.3, 710 + i as u64, &mut o);
    }
    lgoc("lgoc full general", &so3_full(Retraction::Cayley, 6), 0.3, 712, &mut o);
    lgoc("lgoc underactuated", &so3_two_torque(Retraction::exponential(), 6), 0.3, 713, &mut o);
    lgoc("lgoc underactuated L1", &so3_two_torque_l1(5), 0.3, 714, &mut o);
    lgoc("config-dependent", &heavy_top(6), 0.3, 715, &mut o);
    lgoc("uuv", &uuv_reconfiguration(5), 0.2, 716, &mut o);
    o.finish(7, t.elapsed(), None);
}

#[test]
fn criterion_08_uuv_reconfiguration() {
    let t = Instant::now();
    let mut o = Outcome::new();
    let p = uuv_reconfiguration(32);
    let sol = p.solve_unchecked(SolverKind::LevenbergMarquardt, &SolverOptions::levenberg_marquardt()).unwrap();
    o.check(format!("converged in {} ≤ 40 iterations", sol.total_iterations), sol.report.converged && sol.total_iterations <= 40);
    o.within("residual", sol.report.residual_norm, 1e-6);
    let br = p.breakdown(&sol.report.x).unwrap();
    o.within("Φ±₆", br.constraints, 1e-9);

    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs/uuv_reconfiguration.json");
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| Command::new(env!("CARGO_BIN_EXE_discvar")).args(args).output().unwrap();
    let out = dir.path().to_str().unwrap();
    let solved = run(&["solve", cfg.to_str().unwrap(), "--out", out]);
    let traj = dir.path().join("trajectory.csv");
    let verified = run(&["verify", cfg.to_str().unwrap(), traj.to_str().unwrap()]);
    o.check("cli solve exit 0", solved.status.code() == Some(0));
    o.check("cli verify exit 0", verified.status.code() == Some(0));
    // the stored path is the same problem as the library solve
    let table = Table::read(&traj).unwrap();
    let last = GroupElement::from_flat(GroupKind::SE3, table.vector(32, "g").unwrap().as_slice()).unwrap();
    o.within("cli end pose vs target", last.distance(&p.boundary().gt), 1e-9);
    o.finish(8, t.elapsed(), Some(60.0));
}

#[test]
fn criterion_09_l1_two_torque() {
    let t = Instant::now();
    let mut o = Outcome::new();
    let eps = 1e-4;
    let p = so3_two_torque_l1(20);
    let sol = p.solve_unchecked(SolverKind::Newton, &SolverOptions::newton()).unwrap();
    o.check(format!("converged (|F| {:.1e})", sol.report.residual_norm), sol.report.converged);
    let c = &sol.trajectory.controls;
    let umax = c.iter().map(|(a, b)| a.amax().max(b.amax())).fold(0.0, f64::max);
    o.within("max |u| − 1", umax - 1.0, 1e-3);
    let jump = (0..c.len() - 1).map(|k| (&c[k].1 - &c[k + 1].0).amax()).fold(0.0, f64::max);
    let within = c.iter().map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
    o.check(
        format!("max node jump |u⁺_k − u⁻_k+1| {jump:.2e} > 10ε (largest in-interval change |u⁻_k − u⁺_k| {within:.2e})"),
        jump > 10.0 * eps,
    );
    o.finish(9, t.elapsed(), Some(30.0));
}

#[test]
fn criterion_10_left_invariance() {
    let t = Instant::now();
    let mut o = Outcome::new();
    let p = so3_full(Retraction::Cayley, 16);
    let a = p.solve(SolverKind::Newton, &SolverOptions::newton()).unwrap();
    let mut rng = rng(1000);
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let gbar = p.system().group.tau(&rand_vec(&mut rng, 3, 2.0));
        let b0 = p.boundary();
        let moved = BoundaryLie {
            g0: gbar.compose(&b0.g0),
            xi0: b0.xi0.clone(),
            gt: gbar.compose(&b0.gt),
            xit: b0.xit.clone(),
        };
        let b = p.with_boundary(moved).unwrap().solve(SolverKind::Newton, &SolverOptions::newton()).unwrap();
        let (ta, tb) = (&a.trajectory, &b.trajectory);
        for (x, y) in ta.xi.iter().zip(&tb.xi).chain(ta.nu.iter().zip(&tb.nu)) {
            worst = worst.max((x - y).amax());
        }
        for (x, y) in ta.controls.iter().zip(&tb.controls) {
            worst = worst.max((&x.0 - &y.0).amax()).max((&x.1 - &y.1).amax());
        }
    }
    o.within("max change in ξ, ν, u±", worst, 1e-9);
    o.finish(10, t.elapsed(), None);
}
