//! Tensor fields on a chart.
//!
//! Every field is a function from a point to the *jet* of its components:
//! values plus first partials, as [`Dual`]s. Fields built by deformations are
//! closures over the fields they came from, so algebraic identities between
//! them hold up to rounding.

use std::fmt;
use std::sync::Arc;

use crate::chart::Point;
use crate::dual::{self, Dual};
use crate::error::EvalError;
use crate::expr::Expr;

type EvalFn<T> = Arc<dyn Fn(&[f64]) -> Result<T, EvalError> + Send + Sync>;

/// Square matrix of duals, row-major. For a (1,1)-tensor `f`, entry `(a, b)`
/// is the `a`-th component of `f(∂_b)`; for a metric it is `g(∂_a, ∂_b)`.
#[derive(Clone, PartialEq)]
pub struct MatrixJet {
    n: usize,
    data: Vec<Dual>,
}

impl MatrixJet {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Dual) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                data.push(f(a, b));
            }
        }
        MatrixJet { n, data }
    }

    pub fn zeros(n: usize, dim: usize) -> Self {
        MatrixJet::from_fn(n, |_, _| Dual::zero(dim))
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize) -> &Dual {
        &self.data[a * self.n + b]
    }

    pub fn get_mut(&mut self, a: usize, b: usize) -> &mut Dual {
        &mut self.data[a * self.n + b]
    }

    pub fn entries(&self) -> &[Dual] {
        &self.data
    }

    /// `M v` as a jet.
    pub fn mul_vec(&self, v: &[Dual]) -> Vec<Dual> {
        (0..self.n)
            .map(|a| dual::dot(&self.data[a * self.n..(a + 1) * self.n], v))
            .collect()
    }

    /// `M v` for a plain vector `v`, values only.
    pub fn apply_values(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|a| (0..self.n).map(|b| self.get(a, b).value * v[b]).sum())
            .collect()
    }

    /// `vᵀ M w` for plain vectors, values only.
    pub fn bilinear_values(&self, v: &[f64], w: &[f64]) -> f64 {
        let mut acc = 0.0;
        for a in 0..self.n {
            for b in 0..self.n {
                acc += v[a] * self.get(a, b).value * w[b];
            }
        }
        acc
    }

    pub fn values(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |a, b| self.get(a, b).value)
    }
}

impl fmt::Debug for MatrixJet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixJet")
            .field("n", &self.n)
            .field("values", &self.values())
            .finish()
    }
}

fn check_dim(p: &[f64], dim: usize) -> Result<(), EvalError> {
    if p.len() == dim {
        Ok(())
    } else {
        Err(EvalError::DimensionMismatch {
            expected: dim,
            got: p.len(),
        })
    }
}

fn check_len(v: &[f64], dim: usize) -> Result<(), EvalError> {
    check_dim(v, dim)
}

fn eval_all(exprs: &[Expr], p: &[f64]) -> Result<Vec<Dual>, EvalError> {
    exprs.iter().map(|e| e.eval_dual(p)).collect()
}

macro_rules! field_common {
    ($t:ident, $out:ty) => {
        impl $t {
            pub fn from_fn(dim: usize, f: impl Fn(&[f64]) -> Result<$out, EvalError> + Send + Sync + 'static) -> Self {
                $t {
                    dim,
                    eval: Arc::new(f),
                }
            }

            pub fn dim(&self) -> usize {
                self.dim
            }

            /// Jet at a raw coordinate slice.
            pub fn jet_at(&self, p: &[f64]) -> Result<$out, EvalError> {
                check_dim(p, self.dim)?;
                (self.eval)(p)
            }

            pub fn jet(&self, p: &Point) -> Result<$out, EvalError> {
                self.jet_at(p.coords())
            }
        }

        impl fmt::Debug for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}(dim = {})", stringify!($t), self.dim)
            }
        }
    };
}

#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    eval: EvalFn<Dual>,
}
field_common!(ScalarField, Dual);

impl ScalarField {
    pub fn from_expr(dim: usize, e: Expr) -> Self {
        ScalarField::from_fn(dim, move |p| e.eval_dual(p))
    }

    pub fn eval_dual(&self, p: &Point) -> Result<Dual, EvalError> {
        self.jet(p)
    }

    pub fn value(&self, p: &Point) -> Result<f64, EvalError> {
        Ok(self.jet(p)?.value)
    }
}

#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    eval: EvalFn<Vec<Dual>>,
}
field_common!(VectorField, Vec<Dual>);

impl VectorField {
    pub fn from_exprs(exprs: Vec<Expr>) -> Self {
        let dim = exprs.len();
        VectorField::from_fn(dim, move |p| eval_all(&exprs, p))
    }

    pub fn constant(components: Vec<f64>) -> Self {
        let dim = components.len();
        VectorField::from_fn(dim, move |_| {
            Ok(components.iter().map(|&c| Dual::constant(c, dim)).collect())
        })
    }

    /// The coordinate field `∂_index`.
    pub fn coordinate(dim: usize, index: usize) -> Self {
        let mut c = vec![0.0; dim];
        c[index] = 1.0;
        VectorField::constant(c)
    }

    pub fn values(&self, p: &Point) -> Result<Vec<f64>, EvalError> {
        Ok(dual::values(&self.jet(p)?))
    }

    /// `h·X`.
    pub fn scaled_by(&self, h: &ScalarField) -> VectorField {
        let (x, h) = (self.clone(), h.clone());
        VectorField::from_fn(self.dim, move |p| {
            let hv = h.jet_at(p)?;
            Ok(x.jet_at(p)?.iter().map(|c| c * &hv).collect())
        })
    }

    /// `a·X + b·Y`.
    pub fn combine(a: f64, x: &VectorField, b: f64, y: &VectorField) -> VectorField {
        let (x, y) = (x.clone(), y.clone());
        VectorField::from_fn(x.dim, move |p| {
            let (u, v) = (x.jet_at(p)?, y.jet_at(p)?);
            Ok(u.iter().zip(&v).map(|(s, t)| s * a + t * b).collect())
        })
    }
}

#[derive(Clone)]
pub struct OneForm {
    dim: usize,
    eval: EvalFn<Vec<Dual>>,
}
field_common!(OneForm, Vec<Dual>);

impl OneForm {
    pub fn from_exprs(exprs: Vec<Expr>) -> Self {
        let dim = exprs.len();
        OneForm::from_fn(dim, move |p| eval_all(&exprs, p))
    }

    pub fn constant(components: Vec<f64>) -> Self {
        let dim = components.len();
        OneForm::from_fn(dim, move |_| {
            Ok(components.iter().map(|&c| Dual::constant(c, dim)).collect())
        })
    }

    pub fn zero(dim: usize) -> Self {
        OneForm::constant(vec![0.0; dim])
    }

    /// The exact form `dh` of an expression, built from its symbolic partials
    /// so that the components carry their own derivatives.
    pub fn exact(h: &Expr, dim: usize) -> OneForm {
        OneForm::from_exprs((0..dim).map(|j| h.diff(j)).collect())
    }

    /// `Σ kᵢ θᵢ`.
    pub fn linear_combination(coeffs: &[f64], forms: &[OneForm]) -> OneForm {
        assert_eq!(coeffs.len(), forms.len());
        let dim = forms.first().map_or(0, OneForm::dim);
        let coeffs = coeffs.to_vec();
        let forms = forms.to_vec();
        OneForm::from_fn(dim, move |p| {
            let mut acc = vec![Dual::zero(p.len()); p.len()];
            for (k, form) in coeffs.iter().zip(&forms) {
                if *k == 0.0 {
                    continue;
                }
                for (a, c) in acc.iter_mut().zip(form.jet_at(p)?) {
                    *a += c.scale(*k);
                }
            }
            Ok(acc)
        })
    }

    pub fn values(&self, p: &Point) -> Result<Vec<f64>, EvalError> {
        Ok(dual::values(&self.jet(p)?))
    }

    /// `θ(v)` at `p`.
    pub fn apply(&self, p: &Point, v: &[f64]) -> Result<f64, EvalError> {
        check_len(v, self.dim)?;
        Ok(self.jet(p)?.iter().zip(v).map(|(c, x)| c.value * x).sum())
    }
}

#[derive(Clone)]
pub struct Tensor11 {
    dim: usize,
    eval: EvalFn<MatrixJet>,
}
field_common!(Tensor11, MatrixJet);

impl Tensor11 {
    /// `exprs[a][b]` is the `a`-th component of `f(∂_b)`.
    pub fn from_exprs(exprs: Vec<Vec<Expr>>) -> Self {
        let dim = exprs.len();
        Tensor11::from_fn(dim, move |p| {
            let mut m = MatrixJet::zeros(dim, p.len());
            for (a, row) in exprs.iter().enumerate() {
                for (b, e) in row.iter().enumerate() {
                    *m.get_mut(a, b) = e.eval_dual(p)?;
                }
            }
            Ok(m)
        })
    }

    pub fn identity(dim: usize) -> Self {
        Tensor11::from_fn(dim, move |p| {
            Ok(MatrixJet::from_fn(dim, |a, b| {
                Dual::constant(if a == b { 1.0 } else { 0.0 }, p.len())
            }))
        })
    }

    pub fn zero(dim: usize) -> Self {
        Tensor11::from_fn(dim, move |p| Ok(MatrixJet::zeros(dim, p.len())))
    }

    pub fn constant(m: Vec<Vec<f64>>) -> Self {
        let dim = m.len();
        Tensor11::from_fn(dim, move |p| {
            Ok(MatrixJet::from_fn(dim, |a, b| Dual::constant(m[a][b], p.len())))
        })
    }

    /// `f(v)` at `p`.
    pub fn apply(&self, p: &Point, v: &[f64]) -> Result<Vec<f64>, EvalError> {
        check_len(v, self.dim)?;
        Ok(self.jet(p)?.apply_values(v))
    }
}

#[derive(Clone)]
pub struct Metric {
    dim: usize,
    eval: EvalFn<MatrixJet>,
}
field_common!(Metric, MatrixJet);

impl Metric {
    /// Builds a metric from its upper triangle: `upper[a][b - a]` is
    /// `g(∂_a, ∂_b)` for `b ≥ a`. The lower triangle mirrors it.
    pub fn from_upper_exprs(upper: Vec<Vec<Expr>>) -> Self {
        let dim = upper.len();
        Metric::from_fn(dim, move |p| {
            let mut m = MatrixJet::zeros(dim, p.len());
            for (a, row) in upper.iter().enumerate() {
                for (k, e) in row.iter().enumerate() {
                    let b = a + k;
                    let v = e.eval_dual(p)?;
                    *m.get_mut(b, a) = v.clone();
                    *m.get_mut(a, b) = v;
                }
            }
            Ok(m)
        })
    }

    pub fn euclidean(dim: usize) -> Self {
        Metric::from_fn(dim, move |p| {
            Ok(MatrixJet::from_fn(dim, |a, b| {
                Dual::constant(if a == b { 1.0 } else { 0.0 }, p.len())
            }))
        })
    }

    /// `g(v, w)` at `p`.
    pub fn apply(&self, p: &Point, v: &[f64], w: &[f64]) -> Result<f64, EvalError> {
        check_len(v, self.dim)?;
        check_len(w, self.dim)?;
        Ok(self.jet(p)?.bilinear_values(v, w))
    }
}
