//! JSON run configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lgoc::{BoundaryLie, Formulation, HeavyTopPotential, OcProblemLie, ReducedSystem};
use crate::lie::{GroupElement, GroupKind, GroupSpec, Retraction, DEFAULT_SERIES_ORDER};
use crate::mech::{AffineForces, ControlPair, PendulumPotential, Potential, QuadraticPotential, RnLagrangian, ZeroPotential};
use crate::solvers::{SolverKind, SolverOptions};
use crate::systems::{make_point_mass, make_rigid_body_so3, make_uuv, CostSpec, UuvParams};
use crate::tboc::{BoundaryRn, OcProblemRn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Solve,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Informational; the subcommand decides what runs.
    #[serde(default)]
    pub command: Option<Command>,
    pub system: SystemConfig,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Seeds the initial-guess perturbation.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    PointMass {
        dim: usize,
        /// Row-major `dim × dim`; identity when omitted.
        #[serde(default)]
        mass: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        potential: PotentialConfig,
    },
    RigidBodySo3 {
        inertia: [f64; 3],
        /// Zero-based body axes carrying a torque.
        #[serde(default = "all_axes")]
        actuated: Vec<usize>,
        #[serde(default)]
        heavy_top: Option<HeavyTopConfig>,
    },
    UuvSe3 {
        #[serde(default)]
        params: UuvParams,
    },
    Custom {
        group: GroupConfig,
        inertia: Vec<Vec<f64>>,
        /// Row-major `n × m`; identity when omitted.
        #[serde(default)]
        actuation: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        drift: Option<Vec<Vec<f64>>>,
    },
}

fn all_axes() -> Vec<usize> {
    vec![0, 1, 2]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupConfig {
    R1,
    R2,
    R3,
    R6,
    So3,
    Se3,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    #[default]
    None,
    Quadratic {
        stiffness: Vec<Vec<f64>>,
    },
    Pendulum {
        weight: f64,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeavyTopConfig {
    pub weight: f64,
    pub center: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RetractionChoice {
    #[default]
    #[value(name = "cay")]
    #[serde(alias = "cay")]
    Cayley,
    #[value(name = "exp")]
    #[serde(alias = "exp")]
    Exponential,
}

impl RetractionChoice {
    pub fn retraction(self, series_order: usize) -> Retraction {
        match self {
            RetractionChoice::Cayley => Retraction::Cayley,
            RetractionChoice::Exponential => Retraction::Exponential { series_order },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RetractionChoice::Cayley => "cay",
            RetractionChoice::Exponential => "exp",
        }
    }
}

/// One boundary state. Vector-space systems use `q` and `p` (or `velocity`,
/// mapped through the mass matrix); group systems use `rotation`,
/// `translation` and `velocity`. Omitted entries are zero / identity.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    #[serde(default)]
    pub q: Option<Vec<f64>>,
    #[serde(default)]
    pub p: Option<Vec<f64>>,
    #[serde(default)]
    pub velocity: Option<Vec<f64>>,
    /// Row-major 3×3.
    #[serde(default)]
    pub rotation: Option<[[f64; 3]; 3]>,
    #[serde(default)]
    pub translation: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub start: StateConfig,
    /// Required by `solve`.
    #[serde(default)]
    pub end: Option<StateConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub kind: Option<SolverKind>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub formulation: Formulation,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Bound on optimality, constraint and boundary residuals.
    #[serde(default = "default_verify_tol")]
    pub tol: f64,
    /// Bound on the discrete dynamics residual.
    #[serde(default = "default_dynamics_tol")]
    pub dynamics_tol: f64,
}

fn default_verify_tol() -> f64 {
    1e-6
}
fn default_dynamics_tol() -> f64 {
    1e-8
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { tol: default_verify_tol(), dynamics_tol: default_dynamics_tol() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub steps: usize,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub h: Option<f64>,
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub cost: CostSpec,
    #[serde(default)]
    pub retraction: RetractionChoice,
    #[serde(default = "default_series_order")]
    pub series_order: usize,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Open-loop controls `[[u⁻…], [u⁺…]]` per interval for `simulate`; zero when omitted.
    #[serde(default)]
    pub controls: Option<Vec<[Vec<f64>; 2]>>,
    /// Uniform noise of this amplitude (seeded) added to the initial guess.
    #[serde(default)]
    pub perturbation: f64,
    #[serde(default)]
    pub verify: VerifyConfig,
}

fn default_series_order() -> usize {
    DEFAULT_SERIES_ORDER
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_dir() }
    }
}

fn field(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{path}: {msg}"))
}

fn matrix(path: &str, rows: &[Vec<f64>], shape: (usize, Option<usize>)) -> Result<DMatrix<f64>> {
    if rows.len() != shape.0 {
        return Err(field(path, format!("expected {} rows, got {}", shape.0, rows.len())));
    }
    let cols = shape.1.unwrap_or_else(|| rows.first().map_or(0, |r| r.len()));
    if rows.iter().any(|r| r.len() != cols) {
        return Err(field(path, format!("every row must have {cols} entries")));
    }
    Ok(DMatrix::from_fn(shape.0, cols, |i, j| rows[i][j]))
}

fn vector(path: &str, v: &Option<Vec<f64>>, n: usize) -> Result<DVector<f64>> {
    match v {
        None => Ok(DVector::zeros(n)),
        Some(x) if x.len() == n => Ok(DVector::from_column_slice(x)),
        Some(x) => Err(field(path, format!("expected {n} entries, got {}", x.len()))),
    }
}

/// The model a configuration describes.
#[derive(Clone)]
pub enum Model {
    Vector { mass: DMatrix<f64>, potential: Arc<dyn Potential> },
    Group(ReducedSystem),
}

/// Everything a run needs, validated.
#[derive(Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub model: Model,
    pub retraction: RetractionChoice,
    pub h: f64,
    pub horizon: f64,
    pub opts: SolverOptions,
    pub kind: SolverKind,
    pub out_dir: PathBuf,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Model::Vector { mass, .. } => f.debug_struct("Vector").field("mass", mass).finish_non_exhaustive(),
            Model::Group(s) => f.debug_tuple("Group").field(&s.kind()).finish(),
        }
    }
}

impl std::fmt::Debug for Resolved {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Resolved")
            .field("model", &self.model)
            .field("retraction", &self.retraction)
            .field("h", &self.h)
            .field("opts", &self.opts)
            .field("kind", &self.kind)
            .field("out_dir", &self.out_dir)
            .finish_non_exhaustive()
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub retraction: Option<RetractionChoice>,
    pub out: Option<PathBuf>,
}

pub fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str) -> Result<RunConfig> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

impl RunConfig {
    pub fn resolve(self, ov: &Overrides) -> Result<Resolved> {
        let pr = &self.problem;
        if pr.steps < 2 {
            return Err(field("problem.steps", format!("must be at least 2, got {}", pr.steps)));
        }
        let (h, horizon) = match (pr.h, pr.horizon) {
            (Some(h), None) => (h, h * pr.steps as f64),
            (None, Some(t)) => (t / pr.steps as f64, t),
            (Some(h), Some(t)) if ((h * pr.steps as f64) - t).abs() <= 1e-12 * t.abs().max(1.0) => (h, t),
            (Some(_), Some(_)) => return Err(field("problem.h", "inconsistent with problem.horizon / problem.steps")),
            (None, None) => return Err(field("problem", "one of `h` or `horizon` is required")),
        };
        if !(h > 0.0 && h.is_finite()) {
            return Err(field("problem.h", format!("must be positive, got {h}")));
        }
        if pr.series_order < 2 {
            return Err(field("problem.series_order", "must be at least 2"));
        }
        pr.cost.validate().map_err(|e| field("problem.cost", e))?;
        if !(pr.perturbation >= 0.0) {
            return Err(field("problem.perturbation", "must be non-negative"));
        }
        let retraction = ov.retraction.unwrap_or(pr.retraction);
        let retr = retraction.retraction(pr.series_order);
        let model = build_model(&self.system, retr)?;
        let kind = pr.solver.kind.unwrap_or(SolverKind::Newton);
        let base = SolverOptions::for_kind(kind);
        let opts = SolverOptions {
            tol: ov.tol.or(pr.solver.tol).unwrap_or(base.tol),
            max_iter: ov.max_iter.or(pr.solver.max_iter).unwrap_or(base.max_iter),
        };
        if !(opts.tol > 0.0) {
            return Err(field("problem.solver.tol", "must be positive"));
        }
        let out_dir = ov.out.clone().unwrap_or_else(|| self.output.dir.clone());
        let resolved = Resolved { config: self, model, retraction, h, horizon, opts, kind, out_dir };
        // surface boundary errors at load time
        resolved.state(&resolved.config.problem.boundary.start, "problem.boundary.start")?;
        if let Some(end) = &resolved.config.problem.boundary.end {
            resolved.state(end, "problem.boundary.end")?;
        }
        Ok(resolved)
    }
}

fn build_model(sys: &SystemConfig, retr: Retraction) -> Result<Model> {
    match sys {
        SystemConfig::PointMass { dim, mass, potential } => {
            if *dim == 0 {
                return Err(field("system.dim", "must be positive"));
            }
            let m = match mass {
                None => DMatrix::identity(*dim, *dim),
                Some(rows) => matrix("system.mass", rows, (*dim, Some(*dim)))?,
            };
            // validated through the Lagrangian constructor
            RnLagrangian::free(m.clone(), 1.0).map_err(|e| field("system.mass", e))?;
            let potential: Arc<dyn Potential> = match potential {
                PotentialConfig::None => Arc::new(ZeroPotential),
                PotentialConfig::Quadratic { stiffness } => Arc::new(QuadraticPotential {
                    stiffness: matrix("system.potential.stiffness", stiffness, (*dim, Some(*dim)))?,
                }),
                PotentialConfig::Pendulum { weight } => Arc::new(PendulumPotential { weight: *weight }),
            };
            Ok(Model::Vector { mass: m, potential })
        }
        SystemConfig::RigidBodySo3 { inertia, actuated, heavy_top } => {
            let mut s = make_rigid_body_so3(*inertia, actuated, retr).map_err(|e| field("system", e))?;
            if let Some(ht) = heavy_top {
                s = s.with_potential(Arc::new(HeavyTopPotential {
                    weight: ht.weight,
                    center: Vector3::from_column_slice(&ht.center),
                }));
            }
            Ok(Model::Group(s))
        }
        SystemConfig::UuvSe3 { params } => Ok(Model::Group(make_uuv(params, retr).map_err(|e| field("system.params", e))?)),
        SystemConfig::Custom { group, inertia, actuation, drift } => {
            let kind = match group {
                GroupConfig::R1 => GroupKind::RealN(1),
                GroupConfig::R2 => GroupKind::RealN(2),
                GroupConfig::R3 => GroupKind::RealN(3),
                GroupConfig::R6 => GroupKind::RealN(6),
                GroupConfig::So3 => GroupKind::SO3,
                GroupConfig::Se3 => GroupKind::SE3,
            };
            let spec = GroupSpec::new(kind, retr).map_err(|e| field("system.group", e))?;
            let n = spec.algebra_dim();
            let i = matrix("system.inertia", inertia, (n, Some(n)))?;
            let b = match actuation {
                None => DMatrix::identity(n, n),
                Some(rows) => matrix("system.actuation", rows, (n, None))?,
            };
            let mut s = ReducedSystem::new(spec, i, b).map_err(|e| field("system", e))?;
            if let Some(d) = drift {
                s = s.with_drift(matrix("system.drift", d, (n, Some(n)))?).map_err(|e| field("system.drift", e))?;
            }
            Ok(Model::Group(s))
        }
    }
}

impl Resolved {
    pub fn steps(&self) -> usize {
        self.config.problem.steps
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn system_name(&self) -> &'static str {
        match self.config.system {
            SystemConfig::PointMass { .. } => "point_mass",
            SystemConfig::RigidBodySo3 { .. } => "rigid_body_so3",
            SystemConfig::UuvSe3 { .. } => "uuv_se3",
            SystemConfig::Custom { .. } => "custom",
        }
    }

    pub fn dim(&self) -> usize {
        match &self.model {
            Model::Vector { mass, .. } => mass.nrows(),
            Model::Group(s) => s.dim(),
        }
    }

    pub fn control_dim(&self) -> usize {
        match &self.model {
            Model::Vector { mass, .. } => mass.nrows(),
            Model::Group(s) => s.control_dim(),
        }
    }

    fn state(&self, s: &StateConfig, path: &str) -> Result<()> {
        match &self.model {
            Model::Vector { .. } => self.vector_state(s, path).map(|_| ()),
            Model::Group(_) => self.group_state(s, path).map(|_| ()),
        }
    }

    fn vector_state(&self, s: &StateConfig, path: &str) -> Result<(DVector<f64>, DVector<f64>)> {
        let Model::Vector { mass, .. } = &self.model else {
            return Err(field(path, "vector state requested for a group system"));
        };
        let n = mass.nrows();
        if s.rotation.is_some() || s.translation.is_some() {
            return Err(field(path, "point masses take `q` and `p` or `velocity`"));
        }
        let q = vector(&format!("{path}.q"), &s.q, n)?;
        let p = match (&s.p, &s.velocity) {
            (Some(_), Some(_)) => return Err(field(path, "give either `p` or `velocity`, not both")),
            (_, Some(_)) => mass * vector(&format!("{path}.velocity"), &s.velocity, n)?,
            _ => vector(&format!("{path}.p"), &s.p, n)?,
        };
        Ok((q, p))
    }

    fn group_state(&self, s: &StateConfig, path: &str) -> Result<(GroupElement, DVector<f64>)> {
        let Model::Group(sys) = &self.model else {
            return Err(field(path, "group state requested for a point mass"));
        };
        if s.p.is_some() {
            return Err(field(path, "group systems take `velocity`, not `p`"));
        }
        let rot = || -> Result<Matrix3<f64>> {
            Ok(s.rotation.map_or_else(Matrix3::identity, |r| Matrix3::from_fn(|i, j| r[i][j])))
        };
        let g = match sys.kind() {
            GroupKind::RealN(n) => {
                if s.rotation.is_some() || s.translation.is_some() {
                    return Err(field(path, "vector groups take `q`"));
                }
                GroupElement::Real(vector(&format!("{path}.q"), &s.q, n)?)
            }
            GroupKind::SO3 => {
                if s.translation.is_some() || s.q.is_some() {
                    return Err(field(path, "SO(3) states take `rotation` only"));
                }
                GroupElement::so3(rot()?).map_err(|e| field(&format!("{path}.rotation"), e))?
            }
            GroupKind::SE3 => {
                if s.q.is_some() {
                    return Err(field(path, "SE(3) states take `rotation` and `translation`"));
                }
                let x = Vector3::from_column_slice(&s.translation.unwrap_or([0.0; 3]));
                GroupElement::se3(rot()?, x).map_err(|e| field(&format!("{path}.rotation"), e))?
            }
        };
        let xi = vector(&format!("{path}.velocity"), &s.velocity, sys.dim())?;
        Ok((g, xi))
    }

    pub fn start_vector(&self) -> Result<(DVector<f64>, DVector<f64>)> {
        self.vector_state(&self.config.problem.boundary.start, "problem.boundary.start")
    }

    pub fn start_group(&self) -> Result<(GroupElement, DVector<f64>)> {
        self.group_state(&self.config.problem.boundary.start, "problem.boundary.start")
    }

    fn end(&self) -> Result<&StateConfig> {
        self.config
            .problem
            .boundary
            .end
            .as_ref()
            .ok_or_else(|| field("problem.boundary.end", "required by solve"))
    }

    /// Open-loop controls for `simulate`.
    pub fn controls(&self) -> Result<Vec<ControlPair>> {
        let m = self.control_dim();
        let n = self.steps();
        match &self.config.problem.controls {
            None => Ok(vec![(DVector::zeros(m), DVector::zeros(m)); n]),
            Some(list) => {
                if list.len() != n {
                    return Err(field("problem.controls", format!("expected {n} entries, got {}", list.len())));
                }
                list.iter()
                    .enumerate()
                    .map(|(k, [a, b])| {
                        let path = format!("problem.controls[{k}]");
                        Ok((vector(&path, &Some(a.clone()), m)?, vector(&path, &Some(b.clone()), m)?))
                    })
                    .collect()
            }
        }
    }

    pub fn vector_problem(&self) -> Result<OcProblemRn> {
        let Model::Vector { mass, potential } = &self.model else {
            return Err(Error::Config("not a point-mass system".into()));
        };
        let (x0, p0) = self.start_vector()?;
        let (xt, pt) = self.vector_state(self.end()?, "problem.boundary.end")?;
        let cost = self.config.problem.cost.penalty()?;
        make_point_mass(mass.clone(), potential.clone(), BoundaryRn { x0, p0, xt, pt }, self.steps(), self.horizon, cost)
    }

    pub fn group_problem(&self) -> Result<OcProblemLie> {
        let Model::Group(sys) = &self.model else {
            return Err(Error::Config("not a group system".into()));
        };
        let (g0, xi0) = self.start_group()?;
        let (gt, xit) = self.group_state(self.end()?, "problem.boundary.end")?;
        let cost = self.config.problem.cost.penalty()?;
        let p = OcProblemLie::new(sys.clone(), BoundaryLie { g0, xi0, gt, xit }, self.steps(), self.horizon, cost)
            .map_err(|e| field("problem", e))?;
        p.with_formulation(self.config.problem.solver.formulation).map_err(|e| field("problem.solver.formulation", e))
    }

    /// Lagrangian and forces of a point mass at this step size.
    pub fn vector_dynamics(&self) -> Result<(RnLagrangian, AffineForces)> {
        let Model::Vector { mass, potential } = &self.model else {
            return Err(Error::Config("not a point-mass system".into()));
        };
        let l = RnLagrangian::new(mass.clone(), potential.clone(), self.h)?;
        Ok((l, AffineForces::scaled_identity(mass.nrows(), self.h / 2.0)))
    }
}
