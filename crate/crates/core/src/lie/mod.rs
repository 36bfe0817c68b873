//! Lie group kernel for ℝⁿ (additive), SO(3) and SE(3).
//!
//! Algebra elements are coordinate vectors in a fixed basis; on 𝔰𝔢(3) the
//! angular block comes first, `(ω₁, ω₂, ω₃, v₁, v₂, v₃)`. Dual vectors use the
//! same ordering and the pairing `⟨μ, ξ⟩ = μ·ξ`.
//!
//! A [`GroupSpec`] couples a group with a retraction `τ : 𝔤 → G` (exponential
//! or Cayley). Tangent maps are right-trivialized:
//!
//! ```text
//! ∂τ(ξ)·η = (dτ_ξ η)^ τ(ξ)
//! ```
//!
//! and `dτ⁻¹_ξ` is the inverse linear map. All functions here are pure.

mod se3;
pub mod series;
pub mod so3;

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use so3::{hat, vee};

/// Coordinates of an element of the Lie algebra 𝔤.
pub type AlgebraVector = DVector<f64>;
/// Coordinates of an element of the dual 𝔤*.
pub type CoAlgebraVector = DVector<f64>;

pub const DEFAULT_SERIES_ORDER: usize = 12;

const GROUP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    RealN(usize),
    SO3,
    SE3,
}

impl GroupKind {
    pub fn algebra_dim(&self) -> usize {
        match self {
            GroupKind::RealN(n) => *n,
            GroupKind::SO3 => 3,
            GroupKind::SE3 => 6,
        }
    }

    pub fn is_abelian(&self) -> bool {
        matches!(self, GroupKind::RealN(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retraction {
    /// Closed-form exponential; tangent maps use the ad-series up to `ad^series_order`.
    Exponential { series_order: usize },
    Cayley,
}

impl Retraction {
    pub fn exponential() -> Self {
        Retraction::Exponential { series_order: DEFAULT_SERIES_ORDER }
    }
}

/// A group together with the retraction used to parametrize it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub kind: GroupKind,
    pub retraction: Retraction,
}

impl GroupSpec {
    pub fn new(kind: GroupKind, retraction: Retraction) -> Result<Self> {
        if let GroupKind::RealN(0) = kind {
            return Err(Error::InvalidInput("ℝⁿ needs n ≥ 1".into()));
        }
        if let Retraction::Exponential { series_order } = retraction {
            if series_order == 0 && !kind.is_abelian() {
                return Err(Error::InvalidInput("exponential series order must be ≥ 1".into()));
            }
        }
        Ok(GroupSpec { kind, retraction })
    }

    pub fn real(n: usize) -> Self {
        GroupSpec { kind: GroupKind::RealN(n), retraction: Retraction::Cayley }
    }

    pub fn so3(retraction: Retraction) -> Self {
        GroupSpec { kind: GroupKind::SO3, retraction }
    }

    pub fn se3(retraction: Retraction) -> Self {
        GroupSpec { kind: GroupKind::SE3, retraction }
    }

    pub fn algebra_dim(&self) -> usize {
        self.kind.algebra_dim()
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity(self.kind)
    }

    fn check_dim(&self, v: &DVector<f64>) {
        assert_eq!(
            v.len(),
            self.algebra_dim(),
            "algebra vector has length {} but the group has dimension {}",
            v.len(),
            self.algebra_dim()
        );
    }

    /// The retraction `τ(ξ)`.
    pub fn tau(&self, xi: &AlgebraVector) -> GroupElement {
        self.check_dim(xi);
        match self.kind {
            GroupKind::RealN(_) => GroupElement::Real(xi.clone()),
            GroupKind::SO3 => {
                let w = Vector3::new(xi[0], xi[1], xi[2]);
                GroupElement::So3(match self.retraction {
                    Retraction::Cayley => so3::cay(&w),
                    Retraction::Exponential { .. } => so3::exp(&w),
                })
            }
            GroupKind::SE3 => GroupElement::Se3(match self.retraction {
                Retraction::Cayley => se3::cay(xi),
                Retraction::Exponential { .. } => se3::exp(xi),
            }),
        }
    }

    /// Inverse of the retraction on its chart.
    pub fn tau_inv(&self, g: &GroupElement) -> Result<AlgebraVector> {
        match (self.kind, g) {
            (GroupKind::RealN(n), GroupElement::Real(x)) if x.len() == n => Ok(x.clone()),
            (GroupKind::SO3, GroupElement::So3(r)) => {
                let w = match self.retraction {
                    Retraction::Cayley => so3::cay_inv(r)?,
                    Retraction::Exponential { .. } => so3::log(r)?,
                };
                Ok(DVector::from_column_slice(w.as_slice()))
            }
            (GroupKind::SE3, GroupElement::Se3(m)) => match self.retraction {
                Retraction::Cayley => se3::cay_inv(m),
                Retraction::Exponential { .. } => se3::log(m),
            },
            _ => Err(Error::DimensionMismatch(format!(
                "group element {:?} does not belong to {:?}",
                g.kind(),
                self.kind
            ))),
        }
    }

    /// Matrix of the Lie bracket `ad_ξ = [ξ, ·]` in the fixed basis.
    pub fn ad_matrix(&self, xi: &AlgebraVector) -> DMatrix<f64> {
        ad_matrix(self.kind, xi)
    }

    /// Matrix of `dτ_ξ`.
    pub fn dtau_matrix(&self, xi: &AlgebraVector) -> DMatrix<f64> {
        self.check_dim(xi);
        let n = self.algebra_dim();
        match (self.kind, self.retraction) {
            (GroupKind::RealN(_), _) => DMatrix::identity(n, n),
            (GroupKind::SO3, Retraction::Cayley) => {
                to_dmatrix3(&so3::dcay(&Vector3::new(xi[0], xi[1], xi[2])))
            }
            (GroupKind::SE3, Retraction::Cayley) => cayley_tangent_via_matrices(self.kind, xi),
            (_, Retraction::Exponential { series_order }) => {
                series::matrix_series(&series::dexp_coefficients(series_order), &self.ad_matrix(xi))
            }
        }
    }

    /// Matrix of `dτ⁻¹_ξ`.
    pub fn dtau_inv_matrix(&self, xi: &AlgebraVector) -> DMatrix<f64> {
        self.check_dim(xi);
        let n = self.algebra_dim();
        match (self.kind, self.retraction) {
            (GroupKind::RealN(_), _) => DMatrix::identity(n, n),
            (GroupKind::SO3, Retraction::Cayley) => {
                to_dmatrix3(&so3::dcay_inv(&Vector3::new(xi[0], xi[1], xi[2])))
            }
            (GroupKind::SE3, Retraction::Cayley) => se3::dcay_inv(xi),
            (_, Retraction::Exponential { series_order }) => series::matrix_series(
                &series::dexp_inv_coefficients(series_order),
                &self.ad_matrix(xi),
            ),
        }
    }

    /// Directional derivative `∂/∂ε dτ⁻¹_{ξ+εδ}` at ε = 0, as a matrix.
    pub fn dtau_inv_directional(&self, xi: &AlgebraVector, dir: &AlgebraVector) -> DMatrix<f64> {
        self.check_dim(xi);
        self.check_dim(dir);
        let n = self.algebra_dim();
        match (self.kind, self.retraction) {
            (GroupKind::RealN(_), _) => DMatrix::zeros(n, n),
            (GroupKind::SO3, Retraction::Cayley) => {
                let w = Vector3::new(xi[0], xi[1], xi[2]);
                let d = Vector3::new(dir[0], dir[1], dir[2]);
                to_dmatrix3(&(-0.5 * hat(&d) + 0.25 * (d * w.transpose() + w * d.transpose())))
            }
            (GroupKind::SE3, Retraction::Cayley) => se3::dcay_inv_directional(xi, dir),
            (_, Retraction::Exponential { series_order }) => series::matrix_series_derivative(
                &series::dexp_inv_coefficients(series_order),
                &self.ad_matrix(xi),
                &self.ad_matrix(dir),
            ),
        }
    }

    /// Jacobian in ξ of `(dτ⁻¹_ξ)* w` for a fixed covector `w`.
    pub fn dtau_inv_dual_jacobian(&self, xi: &AlgebraVector, w: &CoAlgebraVector) -> DMatrix<f64> {
        let n = self.algebra_dim();
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            let col = self.dtau_inv_directional(xi, &e).transpose() * w;
            jac.set_column(j, &col);
        }
        jac
    }

    pub fn dtau(&self, xi: &AlgebraVector, eta: &AlgebraVector) -> AlgebraVector {
        self.dtau_matrix(xi) * eta
    }

    pub fn dtau_inv(&self, xi: &AlgebraVector, eta: &AlgebraVector) -> AlgebraVector {
        self.dtau_inv_matrix(xi) * eta
    }

    /// `(dτ⁻¹_ξ)* μ`, defined by `⟨(dτ⁻¹_ξ)* μ, η⟩ = ⟨μ, dτ⁻¹_ξ η⟩`.
    pub fn dtau_inv_dual(&self, xi: &AlgebraVector, mu: &CoAlgebraVector) -> CoAlgebraVector {
        self.dtau_inv_matrix(xi).transpose() * mu
    }
}

fn to_dmatrix3(m: &Matrix3<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(3, 3, m.as_slice())
}

/// Matrix representation of an algebra element (homogeneous for ℝⁿ and SE(3)).
pub fn algebra_hat(kind: GroupKind, xi: &AlgebraVector) -> DMatrix<f64> {
    match kind {
        GroupKind::RealN(n) => {
            let mut m = DMatrix::zeros(n + 1, n + 1);
            m.view_mut((0, n), (n, 1)).copy_from(xi);
            m
        }
        GroupKind::SO3 => to_dmatrix3(&hat(&Vector3::new(xi[0], xi[1], xi[2]))),
        GroupKind::SE3 => {
            let m = se3::hat6(xi);
            DMatrix::from_column_slice(4, 4, m.as_slice())
        }
    }
}

/// Inverse of [`algebra_hat`].
pub fn algebra_vee(kind: GroupKind, m: &DMatrix<f64>) -> AlgebraVector {
    match kind {
        GroupKind::RealN(n) => m.view((0, n), (n, 1)).into_owned().column(0).into_owned(),
        GroupKind::SO3 => {
            let m3 = Matrix3::from_fn(|i, j| m[(i, j)]);
            DVector::from_column_slice(vee(&m3).as_slice())
        }
        GroupKind::SE3 => {
            let m4 = Matrix4::from_fn(|i, j| m[(i, j)]);
            se3::vee6(&m4)
        }
    }
}

pub fn ad_matrix(kind: GroupKind, xi: &AlgebraVector) -> DMatrix<f64> {
    let n = kind.algebra_dim();
    match kind {
        GroupKind::RealN(_) => DMatrix::zeros(n, n),
        GroupKind::SO3 => to_dmatrix3(&hat(&Vector3::new(xi[0], xi[1], xi[2]))),
        GroupKind::SE3 => {
            let w = hat(&Vector3::new(xi[0], xi[1], xi[2]));
            let v = hat(&Vector3::new(xi[3], xi[4], xi[5]));
            let mut m = DMatrix::zeros(6, 6);
            m.view_mut((0, 0), (3, 3)).copy_from(&w);
            m.view_mut((3, 0), (3, 3)).copy_from(&v);
            m.view_mut((3, 3), (3, 3)).copy_from(&w);
            m
        }
    }
}

/// Right-trivialized Cayley tangent from its defining matrix identity
/// `dcay_x y = (e - x/2)⁻¹ y (e + x/2)⁻¹`, column by column.
pub fn cayley_tangent_via_matrices(kind: GroupKind, xi: &AlgebraVector) -> DMatrix<f64> {
    let n = kind.algebra_dim();
    let x = algebra_hat(kind, xi);
    let id = DMatrix::identity(x.nrows(), x.ncols());
    let left = (&id - &x * 0.5).try_inverse().expect("e - x/2 is invertible on quadratic groups");
    let right = (&id + &x * 0.5).try_inverse().expect("e + x/2 is invertible on quadratic groups");
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        let y = algebra_hat(kind, &e);
        out.set_column(j, &algebra_vee(kind, &(&left * y * &right)));
    }
    out
}

/// `Ad_g η`.
pub fn adjoint(g: &GroupElement, eta: &AlgebraVector) -> AlgebraVector {
    g.adjoint_matrix() * eta
}

/// `Ad*_g μ`, defined by `⟨Ad*_g μ, η⟩ = ⟨μ, Ad_g η⟩`.
pub fn coadjoint(g: &GroupElement, mu: &CoAlgebraVector) -> CoAlgebraVector {
    g.adjoint_matrix().transpose() * mu
}

/// An element of ℝⁿ, SO(3) or SE(3).
#[derive(Debug, Clone, PartialEq)]
pub enum GroupElement {
    Real(DVector<f64>),
    So3(Matrix3<f64>),
    Se3(Matrix4<f64>),
}

impl GroupElement {
    pub fn identity(kind: GroupKind) -> Self {
        match kind {
            GroupKind::RealN(n) => GroupElement::Real(DVector::zeros(n)),
            GroupKind::SO3 => GroupElement::So3(Matrix3::identity()),
            GroupKind::SE3 => GroupElement::Se3(Matrix4::identity()),
        }
    }

    /// Builds a validated SO(3) element.
    pub fn so3(r: Matrix3<f64>) -> Result<Self> {
        let g = GroupElement::So3(r);
        g.validate()?;
        Ok(g)
    }

    /// Builds a validated SE(3) element from rotation and translation.
    pub fn se3(r: Matrix3<f64>, x: Vector3<f64>) -> Result<Self> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&x);
        let g = GroupElement::Se3(m);
        g.validate()?;
        Ok(g)
    }

    pub fn kind(&self) -> GroupKind {
        match self {
            GroupElement::Real(x) => GroupKind::RealN(x.len()),
            GroupElement::So3(_) => GroupKind::SO3,
            GroupElement::Se3(_) => GroupKind::SE3,
        }
    }

    pub fn rotation(&self) -> Option<Matrix3<f64>> {
        match self {
            GroupElement::So3(r) => Some(*r),
            GroupElement::Se3(m) => Some(m.fixed_view::<3, 3>(0, 0).into_owned()),
            GroupElement::Real(_) => None,
        }
    }

    pub fn translation(&self) -> Option<Vector3<f64>> {
        match self {
            GroupElement::Se3(m) => Some(m.fixed_view::<3, 1>(0, 3).into_owned()),
            _ => None,
        }
    }

    /// Group product `self · other`.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        match (self, other) {
            (GroupElement::Real(a), GroupElement::Real(b)) => GroupElement::Real(a + b),
            (GroupElement::So3(a), GroupElement::So3(b)) => GroupElement::So3(a * b),
            (GroupElement::Se3(a), GroupElement::Se3(b)) => {
                let mut m = a * b;
                m.fixed_view_mut::<1, 4>(3, 0).copy_from(&nalgebra::RowVector4::new(0.0, 0.0, 0.0, 1.0));
                GroupElement::Se3(m)
            }
            (a, b) => panic!("cannot compose {:?} with {:?}", a.kind(), b.kind()),
        }
    }

    pub fn inverse(&self) -> GroupElement {
        match self {
            GroupElement::Real(a) => GroupElement::Real(-a),
            GroupElement::So3(r) => GroupElement::So3(r.transpose()),
            GroupElement::Se3(m) => {
                let rt = m.fixed_view::<3, 3>(0, 0).transpose();
                let x = m.fixed_view::<3, 1>(0, 3).into_owned();
                let mut inv = Matrix4::identity();
                inv.fixed_view_mut::<3, 3>(0, 0).copy_from(&rt);
                inv.fixed_view_mut::<3, 1>(0, 3).copy_from(&(-rt * x));
                GroupElement::Se3(inv)
            }
        }
    }

    /// Matrix of `Ad_g` in the fixed algebra basis.
    pub fn adjoint_matrix(&self) -> DMatrix<f64> {
        match self {
            GroupElement::Real(x) => DMatrix::identity(x.len(), x.len()),
            GroupElement::So3(r) => to_dmatrix3(r),
            GroupElement::Se3(m) => {
                let r = m.fixed_view::<3, 3>(0, 0).into_owned();
                let x = Vector3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)]);
                let mut ad = DMatrix::zeros(6, 6);
                ad.view_mut((0, 0), (3, 3)).copy_from(&r);
                ad.view_mut((3, 0), (3, 3)).copy_from(&(hat(&x) * r));
                ad.view_mut((3, 3), (3, 3)).copy_from(&r);
                ad
            }
        }
    }

    /// Homogeneous matrix representation (ℝⁿ embeds as pure translations).
    pub fn to_matrix(&self) -> DMatrix<f64> {
        match self {
            GroupElement::Real(x) => {
                let n = x.len();
                let mut m = DMatrix::identity(n + 1, n + 1);
                m.view_mut((0, n), (n, 1)).copy_from(x);
                m
            }
            GroupElement::So3(r) => to_dmatrix3(r),
            GroupElement::Se3(m) => DMatrix::from_column_slice(4, 4, m.as_slice()),
        }
    }

    /// Row-major flattening: the vector for ℝⁿ, 9 entries for SO(3), 16 for SE(3).
    pub fn to_flat(&self) -> Vec<f64> {
        match self {
            GroupElement::Real(x) => x.iter().copied().collect(),
            GroupElement::So3(r) => r.transpose().as_slice().to_vec(),
            GroupElement::Se3(m) => m.transpose().as_slice().to_vec(),
        }
    }

    pub fn flat_len(kind: GroupKind) -> usize {
        match kind {
            GroupKind::RealN(n) => n,
            GroupKind::SO3 => 9,
            GroupKind::SE3 => 16,
        }
    }

    /// Inverse of [`to_flat`](Self::to_flat); validates the result.
    pub fn from_flat(kind: GroupKind, data: &[f64]) -> Result<Self> {
        if data.len() != Self::flat_len(kind) {
            return Err(Error::DimensionMismatch(format!(
                "{:?} needs {} entries, got {}",
                kind,
                Self::flat_len(kind),
                data.len()
            )));
        }
        let g = match kind {
            GroupKind::RealN(_) => GroupElement::Real(DVector::from_column_slice(data)),
            GroupKind::SO3 => GroupElement::So3(Matrix3::from_row_slice(data)),
            GroupKind::SE3 => GroupElement::Se3(Matrix4::from_row_slice(data)),
        };
        g.validate()?;
        Ok(g)
    }

    /// Checks orthogonality, orientation and the homogeneous last row.
    pub fn validate(&self) -> Result<()> {
        let check_rotation = |r: &Matrix3<f64>| -> Result<()> {
            let orth = (r.transpose() * r - Matrix3::identity()).abs().max();
            let det = r.determinant();
            if orth > GROUP_TOL || (det - 1.0).abs() > GROUP_TOL {
                return Err(Error::InvalidInput(format!(
                    "not a rotation: |RᵀR - I| = {orth:e}, det = {det}"
                )));
            }
            Ok(())
        };
        match self {
            GroupElement::Real(x) => {
                if x.iter().all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::InvalidInput("non-finite translation".into()))
                }
            }
            GroupElement::So3(r) => check_rotation(r),
            GroupElement::Se3(m) => {
                check_rotation(&m.fixed_view::<3, 3>(0, 0).into_owned())?;
                if m[(3, 0)] != 0.0 || m[(3, 1)] != 0.0 || m[(3, 2)] != 0.0 || m[(3, 3)] != 1.0 {
                    return Err(Error::InvalidInput("SE(3) last row must be (0, 0, 0, 1)".into()));
                }
                Ok(())
            }
        }
    }

    /// Frobenius distance between matrix representations.
    pub fn distance(&self, other: &GroupElement) -> f64 {
        (self.to_matrix() - other.to_matrix()).norm()
    }
}
