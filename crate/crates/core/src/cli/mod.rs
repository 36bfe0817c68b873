//! Command-line front end: `discvar simulate|solve <config>` and
//! `discvar verify <config> <trajectory.csv>`.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 no convergence
//! (artifacts still written) or failed verification.

pub mod config;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use log::{error, info};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use self::config::{Command, Model, Overrides, Resolved, RetractionChoice};
use self::output::{controls_table, group_table, vector_table, Report, Table, Timings};
use crate::error::{Error, Result};
use crate::lgoc::{nu_momenta, simulate};
use crate::mech::{integrate_momentum, legendre_pair, ControlPair};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "discvar", version, about = "Discrete variational mechanics and optimal control")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
    /// Solver (or, for verify, residual) tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub retraction: Option<RetractionChoice>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Forward simulation with open-loop controls.
    Simulate { config: PathBuf },
    /// Optimal control solve.
    Solve { config: PathBuf },
    /// Re-evaluate residuals of a stored trajectory.
    Verify { config: PathBuf, trajectory: PathBuf },
}

/// Parses arguments and runs; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    run(cli)
}

pub fn run(cli: Cli) -> i32 {
    let ov = Overrides { tol: cli.tol, max_iter: cli.max_iter, retraction: cli.retraction, out: cli.out.clone() };
    let (path, command) = match &cli.command {
        Cmd::Simulate { config } => (config, Some(Command::Simulate)),
        Cmd::Solve { config } => (config, Some(Command::Solve)),
        Cmd::Verify { config, .. } => (config, None),
    };
    let setup = Instant::now();
    let resolved = match config::load(path).and_then(|c| c.resolve(&ov)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    match (&cli.command, command) {
        (Cmd::Verify { trajectory, .. }, _) => run_verify(&resolved, trajectory, cli.tol),
        (_, Some(cmd)) => match execute(&resolved, cmd, setup) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_CONFIG
            }
        },
        _ => unreachable!(),
    }
}

fn perturbed(res: &Resolved, z: DVector<f64>) -> DVector<f64> {
    let amp = res.config.problem.perturbation;
    if amp == 0.0 {
        return z;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(res.seed());
    z.map(|x| x + amp * rng.random_range(-1.0..1.0))
}

struct Outcome {
    trajectory: Table,
    controls: Vec<ControlPair>,
    converged: bool,
    iterations: usize,
    residual_norm: f64,
    cost: Option<f64>,
    message: Option<String>,
}

fn execute(res: &Resolved, cmd: Command, setup: Instant) -> Result<i32> {
    std::fs::create_dir_all(&res.out_dir)?;
    let setup_s = setup.elapsed().as_secs_f64();
    let started = Instant::now();
    let outcome = match cmd {
        Command::Simulate => run_simulate(res),
        Command::Solve => run_solve(res),
    };
    let run_s = started.elapsed().as_secs_f64();
    let outcome = match outcome {
        Ok(o) => o,
        Err(e @ Error::Config(_)) => return Err(e),
        Err(e) => {
            error!("{e}");
            let report = Report {
                command: cmd_name(cmd).into(),
                system: res.system_name().into(),
                retraction: res.retraction.name().into(),
                steps: res.steps(),
                h: res.h,
                converged: false,
                iterations: 0,
                residual_norm: f64::NAN,
                cost: None,
                solver: (cmd == Command::Solve).then_some(res.kind),
                seed: res.seed(),
                message: Some(e.to_string()),
                timings: Timings { setup_s, run_s, write_s: 0.0 },
            };
            report.write(&res.out_dir.join("report.json"))?;
            eprintln!("error: {e}");
            return Ok(EXIT_FAILED);
        }
    };
    let writing = Instant::now();
    outcome.trajectory.write(&res.out_dir.join("trajectory.csv"))?;
    controls_table(res.h, &outcome.controls).write(&res.out_dir.join("controls.csv"))?;
    let report = Report {
        command: cmd_name(cmd).into(),
        system: res.system_name().into(),
        retraction: res.retraction.name().into(),
        steps: res.steps(),
        h: res.h,
        converged: outcome.converged,
        iterations: outcome.iterations,
        residual_norm: outcome.residual_norm,
        cost: outcome.cost,
        solver: (cmd == Command::Solve).then_some(res.kind),
        seed: res.seed(),
        message: outcome.message,
        timings: Timings { setup_s, run_s, write_s: writing.elapsed().as_secs_f64() },
    };
    report.write(&res.out_dir.join("report.json"))?;
    info!("wrote {}", res.out_dir.display());
    if cmd == Command::Simulate {
        println!("simulate: {} steps, max momentum residual {:.3e}", outcome.iterations, outcome.residual_norm);
        Ok(EXIT_OK)
    } else if outcome.converged {
        println!("solve: converged in {} iterations, |F| = {:.3e}", outcome.iterations, outcome.residual_norm);
        Ok(EXIT_OK)
    } else {
        eprintln!("solve: no convergence after {} iterations, best |F| = {:.3e}", outcome.iterations, outcome.residual_norm);
        Ok(EXIT_FAILED)
    }
}

fn cmd_name(cmd: Command) -> &'static str {
    match cmd {
        Command::Simulate => "simulate",
        Command::Solve => "solve",
    }
}

fn run_simulate(res: &Resolved) -> Result<Outcome> {
    let controls = res.controls()?;
    let steps = res.steps();
    match &res.model {
        Model::Group(sys) => {
            let (g0, xi0) = res.start_group()?;
            let traj = simulate(sys, res.h, &g0, &xi0, &controls, steps)?;
            let mut resid: f64 = 0.0;
            for k in 0..steps {
                let (a, b) = nu_momenta(sys, res.h, &traj.g[k], &traj.xi[k], &controls[k].0, &controls[k].1);
                resid = resid.max((a - &traj.nu[k]).amax()).max((b - &traj.nu[k + 1]).amax());
            }
            Ok(Outcome {
                trajectory: group_table(res.h, &traj.g, &traj.xi, &traj.nu, &[], 0),
                controls,
                converged: true,
                iterations: steps,
                residual_norm: resid,
                cost: None,
                message: None,
            })
        }
        Model::Vector { .. } => {
            let (q0, p0) = res.start_vector()?;
            let (l, forces) = res.vector_dynamics()?;
            let (q, p) = integrate_momentum(&l, &forces, &q0, &p0, &controls, steps)?;
            let mut resid: f64 = 0.0;
            for k in 0..steps {
                let (a, b) = legendre_pair(&l, &forces, &q[k], &q[k + 1], &controls[k].0, &controls[k].1);
                resid = resid.max((a - &p[k]).amax()).max((b - &p[k + 1]).amax());
            }
            Ok(Outcome {
                trajectory: vector_table(res.h, &q, &p, &[], 0),
                controls,
                converged: true,
                iterations: steps,
                residual_norm: resid,
                cost: None,
                message: None,
            })
        }
    }
}

fn run_solve(res: &Resolved) -> Result<Outcome> {
    match &res.model {
        Model::Group(_) => {
            let p = res.group_problem()?;
            let z0 = perturbed(res, p.initial_guess()?);
            let sol = p.solve_from(z0, res.kind, &res.opts)?;
            let t = &sol.trajectory;
            Ok(Outcome {
                trajectory: group_table(res.h, &t.g, &t.xi, &t.nu, &t.lambda, p.unactuated_dim()),
                controls: t.controls.clone(),
                converged: sol.report.converged,
                iterations: sol.total_iterations,
                residual_norm: sol.report.residual_norm,
                cost: Some(sol.cost),
                message: None,
            })
        }
        Model::Vector { .. } => {
            let p = res.vector_problem()?;
            let z0 = perturbed(res, p.initial_guess());
            let sol = p.solve_from(z0, res.kind, &res.opts)?;
            Ok(Outcome {
                trajectory: vector_table(res.h, &sol.x, &sol.p, &sol.lambda, p.unactuated_dim()),
                controls: sol.controls.clone(),
                converged: sol.report.converged,
                iterations: sol.report.iterations,
                residual_norm: sol.report.residual_norm,
                cost: Some(sol.cost),
                message: None,
            })
        }
    }
}

fn run_verify(res: &Resolved, traj: &Path, tol: Option<f64>) -> i32 {
    let report = Report::read(&traj.with_file_name("report.json")).ok();
    let command = match report.as_ref().map(|r| r.command.as_str()) {
        Some("simulate") => Command::Simulate,
        Some(_) => Command::Solve,
        None if res.config.problem.boundary.end.is_none() => Command::Simulate,
        None => Command::Solve,
    };
    let residuals = match verify::verify(res, traj, command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("verify: {e}");
            return EXIT_CONFIG;
        }
    };
    let tol = tol.unwrap_or(res.config.problem.verify.tol);
    let dyn_tol = res.config.problem.verify.dynamics_tol;
    let show = |name: &str, v: Option<f64>, bound: f64| match v {
        Some(v) => println!("{name:<15} {v:.3e}  (tol {bound:.1e})  {}", if v <= bound { "ok" } else { "FAIL" }),
        None => println!("{name:<15} n/a"),
    };
    show("dynamics", Some(residuals.dynamics), dyn_tol);
    show("optimality", residuals.optimality, tol);
    show("constraints", residuals.constraints, tol);
    show("boundary", Some(residuals.boundary), tol);
    show("reconstruction", residuals.reconstruction, tol);
    let solved_with = report.as_ref().map(|r| r.retraction.as_str());
    if let Some(name) = solved_with {
        if name != res.retraction.name() {
            println!(
                "note: computed with the `{name}` retraction, checked under `{}`; residuals measure the \
                 O(h²) retraction difference and are reported, not failed",
                res.retraction.name()
            );
            return EXIT_OK;
        }
    }
    if residuals.passes(tol, dyn_tol) {
        println!("verify: ok");
        EXIT_OK
    } else {
        println!("verify: FAILED");
        EXIT_FAILED
    }
}
