//! Truncated ad-series for the exponential retraction's tangent maps.

use nalgebra::DMatrix;

/// Bernoulli numbers `B_0..=B_order` with the `B_1 = -1/2` convention.
pub fn bernoulli(order: usize) -> Vec<f64> {
    let mut b = vec![0.0; order + 1];
    b[0] = 1.0;
    for m in 1..=order {
        // sum_{k<=m} C(m+1, k) B_k = 0
        let mut binom = 1.0;
        let mut acc = 0.0;
        for (k, bk) in b.iter().enumerate().take(m) {
            acc += binom * bk;
            binom *= (m + 1 - k) as f64 / (k + 1) as f64;
        }
        b[m] = -acc / (m + 1) as f64;
    }
    b
}

/// Coefficients of `dexp_x = Σ_j ad_x^j / (j+1)!`.
pub fn dexp_coefficients(order: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(order + 1);
    let mut fact = 1.0;
    for j in 0..=order {
        fact *= (j + 1) as f64;
        c.push(1.0 / fact);
    }
    c
}

/// Coefficients of `dexp_x⁻¹ = Σ_j B_j ad_x^j / j!`.
pub fn dexp_inv_coefficients(order: usize) -> Vec<f64> {
    let b = bernoulli(order);
    let mut fact = 1.0;
    b.iter()
        .enumerate()
        .map(|(j, bj)| {
            if j > 0 {
                fact *= j as f64;
            }
            bj / fact
        })
        .collect()
}

/// `Σ_j c_j A^j`, evaluated by Horner's rule.
pub fn matrix_series(coeffs: &[f64], a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut acc = DMatrix::identity(n, n) * *coeffs.last().unwrap_or(&0.0);
    for c in coeffs.iter().rev().skip(1) {
        acc = a * acc + DMatrix::identity(n, n) * *c;
    }
    acc
}

/// Directional derivative of `Σ_j c_j A(x)^j` along `dA = A(δ)` (A linear in x).
pub fn matrix_series_derivative(coeffs: &[f64], a: &DMatrix<f64>, da: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut power = DMatrix::identity(n, n);
    let mut dpower = DMatrix::zeros(n, n);
    let mut acc = DMatrix::zeros(n, n);
    for c in coeffs.iter().skip(1) {
        dpower = &dpower * a + &power * da;
        power = &power * a;
        acc += &dpower * *c;
    }
    acc
}
