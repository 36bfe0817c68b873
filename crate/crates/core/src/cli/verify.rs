//! Re-evaluates the discrete equations on stored output.

use std::path::Path;

use nalgebra::DVector;
use serde::Serialize;

use super::config::{Command, Model, Resolved};
use super::output::{read_controls, Table};
use crate::error::{Error, Result};
use crate::lgoc::{nu_momenta, Formulation};
use crate::lie::GroupElement;
use crate::mech::{legendre_pair, ControlPair};

/// Largest residual per check; `None` when a check does not apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    pub dynamics: f64,
    pub optimality: Option<f64>,
    pub constraints: Option<f64>,
    pub boundary: f64,
    pub reconstruction: Option<f64>,
}

impl Residuals {
    pub fn passes(&self, tol: f64, dynamics_tol: f64) -> bool {
        let within = |x: Option<f64>| x.is_none_or(|v| v <= tol);
        self.dynamics <= dynamics_tol
            && within(self.optimality)
            && within(self.constraints)
            && self.boundary <= tol
            && within(self.reconstruction)
    }
}

fn mismatch(msg: impl Into<String>) -> Error {
    Error::DimensionMismatch(msg.into())
}

fn amax(v: &DVector<f64>) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.amax()
    }
}

fn required(t: &Table, row: usize, prefix: &str, n: usize) -> Result<DVector<f64>> {
    let v = t.vector(row, prefix).ok_or_else(|| mismatch(format!("row {row}: missing `{prefix}` values")))?;
    if v.len() != n {
        return Err(mismatch(format!("`{prefix}` has {} columns, expected {n}", v.len())));
    }
    Ok(v)
}

fn lambdas(t: &Table, steps: usize, r: usize) -> Result<Vec<(DVector<f64>, DVector<f64>)>> {
    (0..steps)
        .map(|k| {
            if r == 0 {
                Ok((DVector::zeros(0), DVector::zeros(0)))
            } else {
                Ok((required(t, k, "lambda_minus", r)?, required(t, k, "lambda_plus", r)?))
            }
        })
        .collect()
}

fn load_controls(traj: &Path, steps: usize, m: usize) -> Result<Vec<ControlPair>> {
    let path = traj.with_file_name("controls.csv");
    let c = read_controls(&path)?;
    if c.len() != steps || c.iter().any(|(a, b)| a.len() != m || b.len() != m) {
        return Err(mismatch(format!("{}: expected {steps} rows of {m} controls", path.display())));
    }
    Ok(c)
}

pub fn verify(res: &Resolved, traj: &Path, command: Command) -> Result<Residuals> {
    let t = Table::read(traj)?;
    let steps = res.steps();
    if t.rows.len() != steps + 1 {
        return Err(mismatch(format!("trajectory has {} rows, expected {}", t.rows.len(), steps + 1)));
    }
    let n = res.dim();
    let controls = load_controls(traj, steps, res.control_dim())?;
    match &res.model {
        Model::Group(sys) => {
            let kind = sys.kind();
            let flat = GroupElement::flat_len(kind);
            let g = (0..=steps)
                .map(|k| {
                    let v = required(&t, k, "g", flat)?;
                    GroupElement::from_flat(kind, v.as_slice())
                })
                .collect::<Result<Vec<_>>>()?;
            let xi = (0..steps).map(|k| required(&t, k, "xi", n)).collect::<Result<Vec<_>>>()?;
            let nu = (0..=steps).map(|k| required(&t, k, "nu", n)).collect::<Result<Vec<_>>>()?;
            let h = res.h;
            let mut dynamics: f64 = 0.0;
            for k in 0..steps {
                let (a, b) = nu_momenta(sys, h, &g[k], &xi[k], &controls[k].0, &controls[k].1);
                dynamics = dynamics.max(amax(&(a - &nu[k]))).max(amax(&(b - &nu[k + 1])));
            }
            let mut recon: f64 = 0.0;
            let mut gk = g[0].clone();
            for k in 0..steps {
                gk = gk.compose(&sys.group.tau(&(&xi[k] * h)));
                recon = recon.max(gk.distance(&g[k + 1]));
            }
            let (g0, xi0) = res.start_group()?;
            let mut boundary = g[0].distance(&g0).max(amax(&(&nu[0] - sys.momentum(&xi0))));
            if command == Command::Simulate {
                return Ok(Residuals { dynamics, optimality: None, constraints: None, boundary, reconstruction: Some(recon) });
            }
            let p = res.group_problem()?.with_formulation(Formulation::General)?;
            let lambda = lambdas(&t, steps, p.unactuated_dim())?;
            let z = p.pack(&xi, &nu[1..steps], &lambda);
            let br = p.breakdown(&z)?;
            boundary = boundary.max(br.closure).max(amax(&(&nu[steps] - sys.momentum(&p.boundary().xit))));
            Ok(Residuals {
                dynamics,
                optimality: Some(br.stationarity.max(br.momentum_matching)),
                constraints: Some(br.constraints),
                boundary,
                reconstruction: Some(recon),
            })
        }
        Model::Vector { .. } => {
            let q = (0..=steps).map(|k| required(&t, k, "q", n)).collect::<Result<Vec<_>>>()?;
            let pm = (0..=steps).map(|k| required(&t, k, "p", n)).collect::<Result<Vec<_>>>()?;
            let (l, forces) = res.vector_dynamics()?;
            let mut dynamics: f64 = 0.0;
            for k in 0..steps {
                let (a, b) = legendre_pair(&l, &forces, &q[k], &q[k + 1], &controls[k].0, &controls[k].1);
                dynamics = dynamics.max(amax(&(a - &pm[k]))).max(amax(&(b - &pm[k + 1])));
            }
            let (q0, p0) = res.start_vector()?;
            let mut boundary = amax(&(&q[0] - q0)).max(amax(&(&pm[0] - p0)));
            if command == Command::Simulate {
                return Ok(Residuals { dynamics, optimality: None, constraints: None, boundary, reconstruction: None });
            }
            let p = res.vector_problem()?;
            let b = p.boundary();
            boundary = boundary.max(amax(&(&q[steps] - &b.xt))).max(amax(&(&pm[steps] - &b.pt)));
            let lambda = lambdas(&t, steps, p.unactuated_dim())?;
            let z = p.pack(&q, &pm, &lambda);
            let r = p.residual(&z);
            let split = p.state_unknowns();
            Ok(Residuals {
                dynamics,
                optimality: Some(amax(&r.rows(0, split).into_owned())),
                constraints: Some(amax(&r.rows(split, r.len() - split).into_owned())),
                boundary,
                reconstruction: None,
            })
        }
    }
}
