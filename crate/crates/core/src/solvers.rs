//! Root finders for the square (or least-squares) systems produced by the
//! integrators and the optimal control discretizations.

use log::debug;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A residual map `F : ℝⁿ → ℝᵐ` whose zero is sought.
pub trait ResidualSystem {
    /// Number of unknowns.
    fn dim(&self) -> usize;

    /// Number of residual equations; equal to [`dim`](Self::dim) for square systems.
    fn residual_dim(&self) -> usize {
        self.dim()
    }

    fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>>;

    /// Analytic Jacobian, if available. Finite differences are used otherwise.
    fn jacobian(&self, _x: &DVector<f64>) -> Option<Result<DMatrix<f64>>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[default]
    Newton,
    LevenbergMarquardt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl SolverOptions {
    pub fn newton() -> Self {
        SolverOptions { tol: 1e-9, max_iter: 100 }
    }

    pub fn levenberg_marquardt() -> Self {
        SolverOptions { tol: 1e-9, max_iter: 500 }
    }

    pub fn for_kind(kind: SolverKind) -> Self {
        match kind {
            SolverKind::Newton => Self::newton(),
            SolverKind::LevenbergMarquardt => Self::levenberg_marquardt(),
        }
    }
}

/// Outcome of a solve. `x` is the final iterate (the best one for LM);
/// `residual_norm` is `‖F(x)‖_∞`.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
    pub step_norm_history: Vec<f64>,
}

impl SolveReport {
    /// Turns a non-converged report into [`Error::NoConvergence`].
    pub fn require_converged(self) -> Result<SolveReport> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence { best_residual: self.residual_norm, iterations: self.iterations })
        }
    }
}

/// Forward-difference Jacobian with step `1e-7 (1 + |x_j|)`.
pub fn fd_jacobian<S: ResidualSystem + ?Sized>(
    sys: &S,
    x: &DVector<f64>,
    fx: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let n = x.len();
    let mut jac = DMatrix::zeros(fx.len(), n);
    let mut xp = x.clone();
    for j in 0..n {
        let h = 1e-7 * (1.0 + x[j].abs());
        xp[j] = x[j] + h;
        let fp = sys.eval(&xp)?;
        xp[j] = x[j];
        jac.set_column(j, &((fp - fx) / h));
    }
    Ok(jac)
}

fn jacobian_of<S: ResidualSystem + ?Sized>(
    sys: &S,
    x: &DVector<f64>,
    fx: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    match sys.jacobian(x) {
        Some(j) => j,
        None => fd_jacobian(sys, x, fx),
    }
}

fn finite_norm(r: &Result<DVector<f64>>) -> Option<f64> {
    match r {
        Ok(f) => {
            let n = f.norm();
            n.is_finite().then_some(n)
        }
        Err(_) => None,
    }
}

fn inf_norm(f: &DVector<f64>) -> f64 {
    if f.is_empty() {
        0.0
    } else {
        f.amax()
    }
}

/// Dispatches to [`newton`] or [`levenberg_marquardt`].
pub fn solve<S: ResidualSystem + ?Sized>(
    sys: &S,
    x0: DVector<f64>,
    kind: SolverKind,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    match kind {
        SolverKind::Newton => newton(sys, x0, opts),
        SolverKind::LevenbergMarquardt => levenberg_marquardt(sys, x0, opts),
    }
}

/// Damped Newton with LU solves and step halving (at most 30 halvings).
pub fn newton<S: ResidualSystem + ?Sized>(
    sys: &S,
    x0: DVector<f64>,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    if sys.residual_dim() != sys.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Newton needs a square system, got {} equations in {} unknowns",
            sys.residual_dim(),
            sys.dim()
        )));
    }
    let mut x = x0;
    let mut fx = sys.eval(&x)?;
    let mut norm = fx.norm();
    let mut history = Vec::new();
    let mut it = 0;
    while inf_norm(&fx) > opts.tol && it < opts.max_iter {
        it += 1;
        let jac = jacobian_of(sys, &x, &fx)?;
        let dx = jac.lu().solve(&(-&fx)).ok_or(Error::SingularJacobian { iteration: it })?;
        if !dx.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularJacobian { iteration: it });
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=30 {
            let trial = &x + &dx * alpha;
            let ft = sys.eval(&trial);
            if let Some(nt) = finite_norm(&ft) {
                if nt < norm || inf_norm(ft.as_ref().unwrap()) <= opts.tol {
                    accepted = Some((trial, ft.unwrap(), nt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((xn, fnew, nn)) = accepted else {
            debug!("newton: line search stalled at iteration {it}, |F| = {norm:e}");
            break;
        };
        history.push(dx.norm() * alpha);
        debug!("newton it {it}: |F| = {nn:e}, alpha = {alpha}");
        x = xn;
        fx = fnew;
        norm = nn;
    }
    let r = inf_norm(&fx);
    Ok(SolveReport { x, converged: r <= opts.tol, iterations: it, residual_norm: r, step_norm_history: history })
}

/// Levenberg–Marquardt on `½‖F‖²`. The objective never increases; the best
/// iterate is returned whether or not the tolerance is met.
pub fn levenberg_marquardt<S: ResidualSystem + ?Sized>(
    sys: &S,
    x0: DVector<f64>,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let mut x = x0;
    let mut fx = sys.eval(&x)?;
    let mut norm = fx.norm();
    let mut lambda = 1e-3;
    let mut history = Vec::new();
    let mut it = 0;
    let n = sys.dim();
    while inf_norm(&fx) > opts.tol && it < opts.max_iter {
        it += 1;
        let jac = jacobian_of(sys, &x, &fx)?;
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &fx;
        let mut accepted = false;
        while lambda < 1e16 {
            let a = &jtj + DMatrix::identity(n, n) * lambda;
            let Some(dx) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            let trial = &x + &dx;
            let ft = sys.eval(&trial);
            match finite_norm(&ft) {
                Some(nt) if nt < norm => {
                    history.push(dx.norm());
                    x = trial;
                    fx = ft.unwrap();
                    norm = nt;
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        debug!("lm it {it}: |F| = {norm:e}, lambda = {lambda:e}");
        if !accepted {
            break;
        }
    }
    let r = inf_norm(&fx);
    Ok(SolveReport { x, converged: r <= opts.tol, iterations: it, residual_norm: r, step_norm_history: history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    struct Rosenbrock;

    impl ResidualSystem for Rosenbrock {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(DVector::from_column_slice(&[1.0 - x[0], 10.0 * (x[1] - x[0] * x[0])]))
        }
    }

    struct Circle;

    impl ResidualSystem for Circle {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(DVector::from_column_slice(&[x[0] * x[0] + x[1] * x[1] - 4.0, x[0] - x[1]]))
        }
        fn jacobian(&self, x: &DVector<f64>) -> Option<Result<DMatrix<f64>>> {
            Some(Ok(DMatrix::from_row_slice(2, 2, &[2.0 * x[0], 2.0 * x[1], 1.0, -1.0])))
        }
    }

    struct Degenerate;

    impl ResidualSystem for Degenerate {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(DVector::from_column_slice(&[x[0] + x[1] - 1.0, 2.0 * (x[0] + x[1])]))
        }
    }

    struct Scalar<F: Fn(f64) -> f64>(F);

    impl<F: Fn(f64) -> f64> ResidualSystem for Scalar<F> {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(DVector::from_element(1, (self.0)(x[0])))
        }
    }

    struct Linear(DMatrix<f64>);

    impl ResidualSystem for Linear {
        fn dim(&self) -> usize {
            self.0.ncols()
        }
        fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(&self.0 * x)
        }
    }

    #[test]
    fn fd_jacobian_examples() {
        let x = DVector::from_column_slice(&[0.3, -2.0, 5.0]);
        let id = Linear(DMatrix::identity(3, 3));
        let j = fd_jacobian(&id, &x, &id.eval(&x).unwrap()).unwrap();
        assert!((j - DMatrix::identity(3, 3)).amax() < 1e-7);
        let a = DMatrix::from_fn(3, 3, |i, k| ((i * 3 + k) as f64).sin());
        let lin = Linear(a.clone());
        let j = fd_jacobian(&lin, &x, &lin.eval(&x).unwrap()).unwrap();
        assert!((j - a).amax() < 1e-6);
        struct Quad;
        impl ResidualSystem for Quad {
            fn dim(&self) -> usize {
                2
            }
            fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
                Ok(DVector::from_column_slice(&[x[0] * x[0], x[0] * x[1]]))
            }
        }
        let p = DVector::from_column_slice(&[1.0, 2.0]);
        let j = fd_jacobian(&Quad, &p, &Quad.eval(&p).unwrap()).unwrap();
        assert!((j - DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 2.0, 1.0])).amax() < 1e-5);
    }

    #[test]
    fn newton_scalar_examples() {
        let one = DVector::from_element(1, 0.0);
        let r = newton(&Scalar(|x| x - 1.0), one, &SolverOptions::newton()).unwrap();
        assert!(r.converged && r.iterations == 1 && (r.x[0] - 1.0).abs() < 1e-9);

        let r = newton(&Scalar(|x| x * x - 4.0), DVector::from_element(1, 3.0), &SolverOptions::newton()).unwrap();
        assert!(r.converged && r.iterations <= 8 && (r.x[0] - 2.0).abs() < 1e-9);

        // double root: only linear convergence, flagged by many iterations
        let opts = SolverOptions { tol: 1e-12, max_iter: 20 };
        let r = newton(&Scalar(|x| x * x), DVector::from_element(1, 1.0), &opts).unwrap();
        assert!(!r.converged || r.iterations >= 15);
    }

    #[test]
    fn newton_quadratic_error_ratio_bounded() {
        struct Sq;
        impl ResidualSystem for Sq {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
                Ok(DVector::from_element(1, x[0] * x[0] - 4.0))
            }
            fn jacobian(&self, x: &DVector<f64>) -> Option<Result<DMatrix<f64>>> {
                Some(Ok(DMatrix::from_element(1, 1, 2.0 * x[0])))
            }
        }
        let mut errors = Vec::new();
        let mut x = 3.0;
        for _ in 0..4 {
            let r = newton(&Sq, DVector::from_element(1, x), &SolverOptions { tol: 0.0, max_iter: 1 }).unwrap();
            x = r.x[0];
            errors.push((x - 2.0).abs());
        }
        for w in errors.windows(2) {
            if w[0] > 1e-7 {
                assert!(w[1] / (w[0] * w[0]) < 1.0);
            }
        }
    }

    #[test]
    fn lm_scalar_examples() {
        let r = levenberg_marquardt(&Scalar(|x| x * x - 4.0), DVector::from_element(1, -3.0), &SolverOptions::levenberg_marquardt())
            .unwrap();
        assert!(r.converged && (r.x[0] + 2.0).abs() < 1e-9);
        struct Line;
        impl ResidualSystem for Line {
            fn dim(&self) -> usize {
                2
            }
            fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
                Ok(DVector::from_column_slice(&[x[0] - 1.0, 0.0]))
            }
        }
        let r = levenberg_marquardt(&Line, DVector::from_column_slice(&[4.0, 7.0]), &SolverOptions::levenberg_marquardt()).unwrap();
        assert!(r.converged && r.residual_norm <= 1e-9);
    }

    #[test]
    fn newton_solves_rosenbrock() {
        let r = newton(&Rosenbrock, DVector::from_column_slice(&[-1.2, 1.0]), &SolverOptions::newton()).unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.x, DVector::from_column_slice(&[1.0, 1.0]), epsilon = 1e-9);
    }

    #[test]
    fn newton_uses_analytic_jacobian_and_converges_quadratically() {
        let r = newton(&Circle, DVector::from_column_slice(&[3.0, 1.0]), &SolverOptions::newton()).unwrap();
        assert!(r.converged);
        let s = 2f64.sqrt();
        assert_relative_eq!(r.x, DVector::from_column_slice(&[s, s]), epsilon = 1e-12);
        assert!(r.iterations < 8);
    }

    #[test]
    fn lm_solves_rosenbrock_and_reports_best() {
        let r = levenberg_marquardt(&Rosenbrock, DVector::from_column_slice(&[-1.2, 1.0]), &SolverOptions::levenberg_marquardt())
            .unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.x, DVector::from_column_slice(&[1.0, 1.0]), epsilon = 1e-8);
    }

    #[test]
    fn lm_objective_never_increases() {
        // the solver is deterministic, so capping iterations exposes the accepted sequence
        let x0 = DVector::from_column_slice(&[-1.2, 1.0]);
        let mut last = f64::INFINITY;
        for k in 0..40 {
            let r = levenberg_marquardt(&Rosenbrock, x0.clone(), &SolverOptions { tol: 1e-14, max_iter: k }).unwrap();
            let obj = 0.5 * Rosenbrock.eval(&r.x).unwrap().norm_squared();
            assert!(obj <= last, "iteration {k}: {obj} > {last}");
            last = obj;
        }
    }

    #[test]
    fn inconsistent_system_is_reported() {
        let x0 = DVector::from_column_slice(&[0.3, 0.1]);
        assert!(matches!(newton(&Degenerate, x0.clone(), &SolverOptions::newton()), Err(Error::SingularJacobian { .. })));
        let r = levenberg_marquardt(&Degenerate, x0, &SolverOptions::levenberg_marquardt()).unwrap();
        assert!(!r.converged);
        assert!(matches!(r.require_converged(), Err(Error::NoConvergence { .. })));
    }
}
