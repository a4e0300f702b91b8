//! Polynomial helpers: Lagrange interpolation in barycentric form, conversion
//! to monomial coefficients, and Horner evaluation on scalars and matrices.

use nalgebra::DMatrix;

/// Barycentric weights `1 / Π_{k≠i} (x_i - x_k)` for distinct nodes.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    (0..nodes.len())
        .map(|i| {
            let prod: f64 = (0..nodes.len()).filter(|&k| k != i).map(|k| nodes[i] - nodes[k]).product();
            1.0 / prod
        })
        .collect()
}

/// Evaluate the interpolant through `(nodes, values)` at `x` (second barycentric form).
pub fn barycentric_eval(nodes: &[f64], weights: &[f64], values: &[f64], x: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&xi, &wi), &yi) in nodes.iter().zip(weights).zip(values) {
        let d = x - xi;
        if d == 0.0 {
            return yi;
        }
        let t = wi / d;
        num += t * yi;
        den += t;
    }
    num / den
}

/// Monomial coefficients (ascending powers) of the unique polynomial of degree
/// `< nodes.len()` through `(nodes[i], values[i])`.
///
/// Builds `Σ_i y_i w_i Π_{k≠i}(x - x_k)` from the master polynomial
/// `Π_k (x - x_k)` by synthetic division.
pub fn monomial_coefficients(nodes: &[f64], values: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    assert_eq!(n, values.len());
    if n == 0 {
        return Vec::new();
    }
    // master[k] is the coefficient of x^k; degree n, monic.
    let mut master = vec![0.0; n + 1];
    master[0] = 1.0;
    for (deg, &xk) in nodes.iter().enumerate() {
        for p in (0..=deg + 1).rev() {
            let lower = if p > 0 { master[p - 1] } else { 0.0 };
            master[p] = lower - xk * master[p];
        }
    }
    let w = barycentric_weights(nodes);
    let mut out = vec![0.0; n];
    let mut quotient = vec![0.0; n];
    for i in 0..n {
        // master / (x - x_i): descending synthetic division.
        let mut carry = master[n];
        for p in (0..n).rev() {
            quotient[p] = carry;
            carry = master[p] + nodes[i] * carry;
        }
        let scale = values[i] * w[i];
        for (o, q) in out.iter_mut().zip(&quotient) {
            *o += scale * q;
        }
    }
    out
}

/// Horner evaluation, coefficients in ascending powers.
pub fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// `Σ_i coeffs[i] X^i` by Horner's rule.
pub fn matrix_polynomial(coeffs: &[f64], x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut acc = DMatrix::zeros(n, n);
    for &c in coeffs.iter().rev() {
        acc = &acc * x;
        for i in 0..n {
            acc[(i, i)] += c;
        }
    }
    acc
}
