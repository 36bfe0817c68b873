//! SE(3) in homogeneous coordinates, algebra ordered `(ω, v)`.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, Vector3};

use super::so3::{self, hat};
use crate::error::{Error, Result};

fn split(xi: &DVector<f64>) -> (Vector3<f64>, Vector3<f64>) {
    (Vector3::new(xi[0], xi[1], xi[2]), Vector3::new(xi[3], xi[4], xi[5]))
}

fn assemble(r: &Matrix3<f64>, x: &Vector3<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(x);
    m
}

fn parts(m: &Matrix4<f64>) -> (Matrix3<f64>, Vector3<f64>) {
    (m.fixed_view::<3, 3>(0, 0).into_owned(), m.fixed_view::<3, 1>(0, 3).into_owned())
}

fn join(w: &Vector3<f64>, v: &Vector3<f64>) -> DVector<f64> {
    DVector::from_column_slice(&[w.x, w.y, w.z, v.x, v.y, v.z])
}

pub fn hat6(xi: &DVector<f64>) -> Matrix4<f64> {
    let (w, v) = split(xi);
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&hat(&w));
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&v);
    m
}

pub fn vee6(m: &Matrix4<f64>) -> DVector<f64> {
    let w = so3::vee(&m.fixed_view::<3, 3>(0, 0).into_owned());
    let v = m.fixed_view::<3, 1>(0, 3).into_owned();
    join(&w, &v)
}

/// Matrix Cayley map `(e - ξ/2)⁻¹(e + ξ/2)`.
pub fn cay(xi: &DVector<f64>) -> Matrix4<f64> {
    let (w, v) = split(xi);
    assemble(&so3::cay(&w), &(so3::cay_translation(&w) * v))
}

pub fn cay_inv(m: &Matrix4<f64>) -> Result<DVector<f64>> {
    let (r, x) = parts(m);
    let w = so3::cay_inv(&r)?;
    let v = (Matrix3::identity() - 0.5 * hat(&w)) * x;
    Ok(join(&w, &v))
}

pub fn exp(xi: &DVector<f64>) -> Matrix4<f64> {
    let (w, v) = split(xi);
    assemble(&so3::exp(&w), &(so3::exp_translation(&w) * v))
}

pub fn log(m: &Matrix4<f64>) -> Result<DVector<f64>> {
    let (r, x) = parts(m);
    let w = so3::log(&r)?;
    let v = so3::exp_translation(&w)
        .lu()
        .solve(&x)
        .ok_or_else(|| Error::OutOfChart("singular left Jacobian".into()))?;
    Ok(join(&w, &v))
}

/// Closed-form right-trivialized tangent inverse of the Cayley map.
pub fn dcay_inv(xi: &DVector<f64>) -> DMatrix<f64> {
    let (w, v) = split(xi);
    let wh = hat(&w);
    let d = Matrix3::identity() - 0.5 * wh;
    let a = d + 0.25 * w * w.transpose();
    let c = -0.5 * d * hat(&v);
    let mut out = DMatrix::zeros(6, 6);
    out.view_mut((0, 0), (3, 3)).copy_from(&a);
    out.view_mut((3, 0), (3, 3)).copy_from(&c);
    out.view_mut((3, 3), (3, 3)).copy_from(&d);
    out
}

pub fn dcay_inv_directional(xi: &DVector<f64>, dir: &DVector<f64>) -> DMatrix<f64> {
    let (w, v) = split(xi);
    let (dw, dv) = split(dir);
    let dwh = hat(&dw);
    let da = -0.5 * dwh + 0.25 * (dw * w.transpose() + w * dw.transpose());
    let dc = 0.25 * dwh * hat(&v) - 0.5 * (Matrix3::identity() - 0.5 * hat(&w)) * hat(&dv);
    let dd = -0.5 * dwh;
    let mut out = DMatrix::zeros(6, 6);
    out.view_mut((0, 0), (3, 3)).copy_from(&da);
    out.view_mut((3, 0), (3, 3)).copy_from(&dc);
    out.view_mut((3, 3), (3, 3)).copy_from(&dd);
    out
}
