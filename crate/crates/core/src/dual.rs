//! First-order multivariate dual numbers.
//!
//! A [`Dual`] carries a value together with its gradient with respect to the
//! chart coordinates. Arithmetic follows the product and chain rules, so any
//! algebraic combination of component functions yields exact first partials
//! up to rounding.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

#[derive(Clone, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub grad: Vec<f64>,
}

impl Dual {
    pub fn new(value: f64, grad: Vec<f64>) -> Self {
        Dual { value, grad }
    }

    /// A constant in `dim` variables.
    pub fn constant(value: f64, dim: usize) -> Self {
        Dual {
            value,
            grad: vec![0.0; dim],
        }
    }

    /// The coordinate function `x^index` evaluated at `value`.
    pub fn variable(value: f64, index: usize, dim: usize) -> Self {
        let mut grad = vec![0.0; dim];
        grad[index] = 1.0;
        Dual { value, grad }
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(0.0, dim)
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    /// Derivative along the direction `v`, i.e. `Σ v^j ∂_j`.
    pub fn directional(&self, v: &[f64]) -> f64 {
        self.grad.iter().zip(v).map(|(g, x)| g * x).sum()
    }

    pub fn scale(&self, k: f64) -> Dual {
        Dual {
            value: self.value * k,
            grad: self.grad.iter().map(|g| g * k).collect(),
        }
    }

    /// Compose with a scalar function `φ` given `φ(value)` and `φ'(value)`.
    pub fn chain(&self, value: f64, deriv: f64) -> Dual {
        Dual {
            value,
            grad: self.grad.iter().map(|g| g * deriv).collect(),
        }
    }

    pub fn sin(&self) -> Dual {
        self.chain(self.value.sin(), self.value.cos())
    }

    pub fn cos(&self) -> Dual {
        self.chain(self.value.cos(), -self.value.sin())
    }

    pub fn exp(&self) -> Dual {
        let e = self.value.exp();
        self.chain(e, e)
    }

    /// Integer power. Negative exponents of zero produce non-finite values;
    /// callers that need a domain check must test the base first.
    pub fn powi(&self, k: i32) -> Dual {
        if k == 0 {
            return Dual::constant(1.0, self.dim());
        }
        self.chain(self.value.powi(k), k as f64 * self.value.powi(k - 1))
    }

    pub fn recip(&self) -> Dual {
        let r = 1.0 / self.value;
        self.chain(r, -r * r)
    }

    /// Append `extra` zero partials (a function pulled back along a projection).
    pub fn extend(mut self, extra: usize) -> Dual {
        self.grad.extend(std::iter::repeat_n(0.0, extra));
        self
    }

    /// Keep only the first `dim` partials (restriction to a coordinate slice).
    pub fn truncate(mut self, dim: usize) -> Dual {
        self.grad.truncate(dim);
        self
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.grad.iter().all(|g| g.is_finite())
    }
}

impl fmt::Debug for Dual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dual({} ; {:?})", self.value, self.grad)
    }
}

/// `Σ aᵢ bᵢ` over dual slices.
pub fn dot(a: &[Dual], b: &[Dual]) -> Dual {
    let dim = a.first().map_or(0, Dual::dim);
    let mut acc = Dual::zero(dim);
    for (x, y) in a.iter().zip(b) {
        acc += &(x * y);
    }
    acc
}

/// Plain values of a dual slice.
pub fn values(v: &[Dual]) -> Vec<f64> {
    v.iter().map(|d| d.value).collect()
}

fn zip_grad(a: &[f64], b: &[f64], op: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| op(*x, *y)).collect()
}

impl<'a> Add<&'a Dual> for &'a Dual {
    type Output = Dual;
    fn add(self, rhs: &Dual) -> Dual {
        Dual::new(self.value + rhs.value, zip_grad(&self.grad, &rhs.grad, |x, y| x + y))
    }
}

impl<'a> Sub<&'a Dual> for &'a Dual {
    type Output = Dual;
    fn sub(self, rhs: &Dual) -> Dual {
        Dual::new(self.value - rhs.value, zip_grad(&self.grad, &rhs.grad, |x, y| x - y))
    }
}

impl<'a> Mul<&'a Dual> for &'a Dual {
    type Output = Dual;
    fn mul(self, rhs: &Dual) -> Dual {
        let (u, v) = (self.value, rhs.value);
        Dual::new(u * v, zip_grad(&self.grad, &rhs.grad, |du, dv| u * dv + v * du))
    }
}

impl<'a> Div<&'a Dual> for &'a Dual {
    type Output = Dual;
    fn div(self, rhs: &Dual) -> Dual {
        let (u, v) = (self.value, rhs.value);
        let q = u / v;
        Dual::new(q, zip_grad(&self.grad, &rhs.grad, |du, dv| (du - q * dv) / v))
    }
}

impl Neg for &Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        self.scale(-1.0)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Dual {
    type Output = Dual;
    fn mul(self, k: f64) -> Dual {
        self.scale(k)
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, k: f64) -> Dual {
        self.scale(k)
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    fn add(mut self, k: f64) -> Dual {
        self.value += k;
        self
    }
}

impl Sub<f64> for Dual {
    type Output = Dual;
    fn sub(mut self, k: f64) -> Dual {
        self.value -= k;
        self
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<Dual> for Dual {
            type Output = Dual;
            fn $m(self, rhs: Dual) -> Dual { (&self).$m(&rhs) }
        }
        impl<'a> $tr<&'a Dual> for Dual {
            type Output = Dual;
            fn $m(self, rhs: &Dual) -> Dual { (&self).$m(rhs) }
        }
        impl<'a> $tr<Dual> for &'a Dual {
            type Output = Dual;
            fn $m(self, rhs: Dual) -> Dual { self.$m(&rhs) }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul, Div div);

impl AddAssign<&Dual> for Dual {
    fn add_assign(&mut self, rhs: &Dual) {
        self.value += rhs.value;
        for (g, r) in self.grad.iter_mut().zip(&rhs.grad) {
            *g += r;
        }
    }
}

impl AddAssign<Dual> for Dual {
    fn add_assign(&mut self, rhs: Dual) {
        *self += &rhs;
    }
}

impl SubAssign<&Dual> for Dual {
    fn sub_assign(&mut self, rhs: &Dual) {
        self.value -= rhs.value;
        for (g, r) in self.grad.iter_mut().zip(&rhs.grad) {
            *g -= r;
        }
    }
}

impl SubAssign<Dual> for Dual {
    fn sub_assign(&mut self, rhs: Dual) {
        *self -= &rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn product_rule() {
        let x = Dual::variable(2.0, 0, 2);
        let y = Dual::variable(3.0, 1, 2);
        let p = &x * &y;
        assert_eq!(p.value, 6.0);
        assert_eq!(p.grad, vec![3.0, 2.0]);
    }

    #[test]
    fn quotient_and_recip_agree() {
        let x = Dual::variable(0.7, 0, 1);
        let y = Dual::new(1.3, vec![0.4]);
        let a = &x / &y;
        let b = &x * &y.recip();
        assert!(rel(a.value, b.value) < 1e-15);
        assert!(rel(a.grad[0], b.grad[0]) < 1e-15);
    }

    #[test]
    fn chain_rule_on_generators() {
        // d(sin u) = cos(u) du, d(exp u) = exp(u) du, d(u^3) = 3u^2 du
        let u = Dual::new(0.37, vec![1.5, -2.0]);
        let s = u.sin();
        let e = u.exp();
        let c = u.powi(3);
        for j in 0..2 {
            assert!(rel(s.grad[j], 0.37f64.cos() * u.grad[j]) < 1e-12);
            assert!(rel(e.grad[j], 0.37f64.exp() * u.grad[j]) < 1e-12);
            assert!(rel(c.grad[j], 3.0 * 0.37f64.powi(2) * u.grad[j]) < 1e-12);
        }
        let z = u.powi(0);
        assert_eq!(z.value, 1.0);
        assert_eq!(z.grad, vec![0.0, 0.0]);
    }

    #[test]
    fn extend_and_truncate() {
        let x = Dual::variable(1.0, 0, 2).extend(1);
        assert_eq!(x.grad, vec![1.0, 0.0, 0.0]);
        assert_eq!(x.truncate(1).grad, vec![1.0]);
    }
}
