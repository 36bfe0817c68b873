//! Closed-form maps on SO(3) and its algebra, with 𝔰𝔬(3) identified with ℝ³.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Rotations closer than this to angle π are outside every chart we use.
pub(crate) const PI_GUARD: f64 = 1e-8;

/// Skew-symmetric matrix of `w`, so that `hat(w) * v == w.cross(&v)`.
pub fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Inverse of [`hat`]; reads the off-diagonal entries (the symmetric part is ignored).
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Rotation angle in [0, π], robust near both ends.
pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    let s = 0.5 * vee(&(r - r.transpose())).norm();
    let c = 0.5 * (r.trace() - 1.0);
    s.atan2(c)
}

pub fn cay(w: &Vector3<f64>) -> Matrix3<f64> {
    let wh = hat(w);
    Matrix3::identity() + (wh + 0.5 * wh * wh) * (4.0 / (4.0 + w.norm_squared()))
}

pub fn cay_inv(r: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let angle = rotation_angle(r);
    if std::f64::consts::PI - angle < PI_GUARD {
        return Err(Error::OutOfChart(format!(
            "Cayley chart excludes rotations by π (angle {angle})"
        )));
    }
    Ok(vee(&(r - r.transpose())) * (2.0 / (1.0 + r.trace())))
}

/// `(I - ŵ/2)⁻¹`, the translation block of the SE(3) Cayley map.
pub fn cay_translation(w: &Vector3<f64>) -> Matrix3<f64> {
    let wh = hat(w);
    (Matrix3::identity() * 4.0 + 2.0 * wh + w * w.transpose()) / (4.0 + w.norm_squared())
}

/// Right-trivialized tangent of the SO(3) Cayley map.
pub fn dcay(w: &Vector3<f64>) -> Matrix3<f64> {
    (Matrix3::identity() * 2.0 + hat(w)) * (2.0 / (4.0 + w.norm_squared()))
}

pub fn dcay_inv(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::identity() - 0.5 * hat(w) + 0.25 * w * w.transpose()
}

/// Rodrigues' formula.
pub fn exp(w: &Vector3<f64>) -> Matrix3<f64> {
    let t2 = w.norm_squared();
    let t = t2.sqrt();
    let wh = hat(w);
    let (a, b) = if t < 1e-4 {
        (1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0)
    } else {
        (t.sin() / t, (1.0 - t.cos()) / t2)
    };
    Matrix3::identity() + a * wh + b * wh * wh
}

/// Left Jacobian `V(w)`, the translation block of the SE(3) exponential.
pub fn exp_translation(w: &Vector3<f64>) -> Matrix3<f64> {
    let t2 = w.norm_squared();
    let t = t2.sqrt();
    let wh = hat(w);
    let (b, c) = if t < 1e-4 {
        (0.5 - t2 / 24.0 + t2 * t2 / 720.0, 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0)
    } else {
        ((1.0 - t.cos()) / t2, (t - t.sin()) / (t2 * t))
    };
    Matrix3::identity() + b * wh + c * wh * wh
}

pub fn log(r: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let angle = rotation_angle(r);
    if std::f64::consts::PI - angle < PI_GUARD {
        return Err(Error::OutOfChart(format!(
            "exponential chart requires rotation angle < π (angle {angle})"
        )));
    }
    let axis = 0.5 * vee(&(r - r.transpose()));
    let scale = if angle < 1e-4 {
        1.0 + angle * angle / 6.0 + 7.0 * angle.powi(4) / 360.0
    } else {
        angle / angle.sin()
    };
    Ok(axis * scale)
}
