//! Differential operators on first-order jets.
//!
//! The `*_jet` functions work on component jets already evaluated at one
//! point; the field-level wrappers evaluate and delegate. The exterior
//! derivative of a one-form uses the normalization
//! `dη(X, Y) = ½ (X η(Y) − Y η(X) − η([X, Y]))`.

use crate::chart::Point;
use crate::dual::{self, Dual};
use crate::error::EvalError;
use crate::field::{MatrixJet, Metric, OneForm, Tensor11, VectorField};

/// Jet of the coordinate field `∂_index`.
pub fn coordinate_jet(dim: usize, index: usize) -> Vec<Dual> {
    (0..dim)
        .map(|k| Dual::constant(if k == index { 1.0 } else { 0.0 }, dim))
        .collect()
}

/// `X(h) = Σⱼ Xʲ ∂ⱼh` at the jet's base point.
pub fn derivative_along(x: &[Dual], h: &Dual) -> f64 {
    x.iter().zip(&h.grad).map(|(xj, g)| xj.value * g).sum()
}

/// `[X, Y]ᵏ = Σⱼ (Xʲ ∂ⱼYᵏ − Yʲ ∂ⱼXᵏ)`.
pub fn bracket_jet(x: &[Dual], y: &[Dual]) -> Vec<f64> {
    x.iter()
        .zip(y)
        .map(|(xk, yk)| derivative_along(x, yk) - derivative_along(y, xk))
        .collect()
}

/// Contraction `η(Y)` as a jet.
pub fn contract(eta: &[Dual], y: &[Dual]) -> Dual {
    dual::dot(eta, y)
}

fn pair(eta: &[Dual], v: &[f64]) -> f64 {
    eta.iter().zip(v).map(|(e, x)| e.value * x).sum()
}

/// `dη(X, Y) = ½ (X(η(Y)) − Y(η(X)) − η([X, Y]))`.
pub fn d_oneform_jet(eta: &[Dual], x: &[Dual], y: &[Dual]) -> f64 {
    let ey = contract(eta, y);
    let ex = contract(eta, x);
    0.5 * (derivative_along(x, &ey) - derivative_along(y, &ex) - pair(eta, &bracket_jet(x, y)))
}

/// `(L_X θ)(Y) = X(θ(Y)) − θ([X, Y])`.
pub fn lie_oneform_jet(x: &[Dual], theta: &[Dual], y: &[Dual]) -> f64 {
    derivative_along(x, &contract(theta, y)) - pair(theta, &bracket_jet(x, y))
}

/// `(L_X f)(Y) = [X, fY] − f[X, Y]`.
pub fn lie_t11_jet(x: &[Dual], f: &MatrixJet, y: &[Dual]) -> Vec<f64> {
    let fy = f.mul_vec(y);
    let a = bracket_jet(x, &fy);
    let b = f.apply_values(&bracket_jet(x, y));
    a.iter().zip(&b).map(|(u, v)| u - v).collect()
}

/// `(L_X g)(Y, Z) = X(g(Y, Z)) − g([X, Y], Z) − g(Y, [X, Z])`.
pub fn lie_metric_jet(x: &[Dual], g: &MatrixJet, y: &[Dual], z: &[Dual]) -> f64 {
    let gyz = contract(y, &g.mul_vec(z));
    let yv = dual::values(y);
    let zv = dual::values(z);
    derivative_along(x, &gyz) - g.bilinear_values(&bracket_jet(x, y), &zv) - g.bilinear_values(&yv, &bracket_jet(x, z))
}

/// Nijenhuis torsion `[f,f](X,Y) = f²[X,Y] + [fX,fY] − f[X,fY] − f[fX,Y]`.
pub fn nijenhuis_jet(f: &MatrixJet, x: &[Dual], y: &[Dual]) -> Vec<f64> {
    let fx = f.mul_vec(x);
    let fy = f.mul_vec(y);
    let t1 = f.apply_values(&f.apply_values(&bracket_jet(x, y)));
    let t2 = bracket_jet(&fx, &fy);
    let t3 = f.apply_values(&bracket_jet(x, &fy));
    let t4 = f.apply_values(&bracket_jet(&fx, y));
    (0..t1.len()).map(|k| t1[k] + t2[k] - t3[k] - t4[k]).collect()
}

pub fn lie_bracket(x: &VectorField, y: &VectorField, p: &Point) -> Result<Vec<f64>, EvalError> {
    Ok(bracket_jet(&x.jet(p)?, &y.jet(p)?))
}

pub fn d_oneform(eta: &OneForm, x: &VectorField, y: &VectorField, p: &Point) -> Result<f64, EvalError> {
    Ok(d_oneform_jet(&eta.jet(p)?, &x.jet(p)?, &y.jet(p)?))
}

pub fn lie_derivative_oneform(x: &VectorField, theta: &OneForm, y: &VectorField, p: &Point) -> Result<f64, EvalError> {
    Ok(lie_oneform_jet(&x.jet(p)?, &theta.jet(p)?, &y.jet(p)?))
}

pub fn lie_derivative_t11(x: &VectorField, f: &Tensor11, y: &VectorField, p: &Point) -> Result<Vec<f64>, EvalError> {
    Ok(lie_t11_jet(&x.jet(p)?, &f.jet(p)?, &y.jet(p)?))
}

pub fn lie_derivative_metric(
    x: &VectorField,
    g: &Metric,
    y: &VectorField,
    z: &VectorField,
    p: &Point,
) -> Result<f64, EvalError> {
    Ok(lie_metric_jet(&x.jet(p)?, &g.jet(p)?, &y.jet(p)?, &z.jet(p)?))
}

pub fn nijenhuis(f: &Tensor11, x: &VectorField, y: &VectorField, p: &Point) -> Result<Vec<f64>, EvalError> {
    Ok(nijenhuis_jet(&f.jet(p)?, &x.jet(p)?, &y.jet(p)?))
}
