//! The expression language used for tensor components, θ-forms and
//! automorphism maps.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' '-'? integer)*
//! atom  := number | identifier | function '(' expr ')' | '(' expr ')'
//! function := sin | cos | exp
//! ```
//!
//! Identifiers resolve to chart coordinates first, then to parameters bound
//! when the expression is parsed.

mod parser;

use std::collections::BTreeMap;
use std::fmt;

use crate::chart::Chart;
use crate::dual::Dual;
use crate::error::{EvalError, ParseError};

pub use parser::parse_with;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Expression tree. Coordinates are stored by chart index; parameters keep
/// their name for printing and their bound value for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var { index: usize, name: String },
    Param { name: String, value: f64 },
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

pub type Params = BTreeMap<String, f64>;

/// Parse `text` against the coordinates of `chart` with no parameters.
pub fn parse(text: &str, chart: &Chart) -> Result<Expr, ParseError> {
    parse_with(text, chart.coord_names(), &Params::new())
}

/// Parse `text` against the coordinates of `chart` and the given parameters.
pub fn parse_params(text: &str, chart: &Chart, params: &Params) -> Result<Expr, ParseError> {
    parse_with(text, chart.coord_names(), params)
}

fn domain(msg: &str) -> EvalError {
    EvalError::Domain(msg.to_string())
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(index: usize, name: impl Into<String>) -> Expr {
        Expr::Var {
            index,
            name: name.into(),
        }
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_var_index(&self) -> Option<usize> {
        match self {
            Expr::Num(_) | Expr::Param { .. } => None,
            Expr::Var { index, .. } => Some(*index),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.max_var_index(),
            Expr::Binary(_, a, b) => match (a.max_var_index(), b.max_var_index()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Symbolic partial derivative with respect to coordinate `index`.
    /// No simplification is attempted.
    pub fn diff(&self, index: usize) -> Expr {
        let d = |e: &Expr| e.diff(index);
        let b = |e: &Expr| Box::new(e.clone());
        match self {
            Expr::Num(_) | Expr::Param { .. } => Expr::Num(0.0),
            Expr::Var { index: i, .. } => Expr::Num(if *i == index { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::Neg(Box::new(d(a))),
            Expr::Binary(op, u, v) => match op {
                BinOp::Add | BinOp::Sub => Expr::binary(*op, d(u), d(v)),
                BinOp::Mul => Expr::binary(
                    BinOp::Add,
                    Expr::binary(BinOp::Mul, d(u), (**v).clone()),
                    Expr::binary(BinOp::Mul, (**u).clone(), d(v)),
                ),
                BinOp::Div => Expr::binary(
                    BinOp::Div,
                    Expr::binary(
                        BinOp::Sub,
                        Expr::binary(BinOp::Mul, d(u), (**v).clone()),
                        Expr::binary(BinOp::Mul, (**u).clone(), d(v)),
                    ),
                    Expr::Pow(b(v), 2),
                ),
            },
            Expr::Pow(_, 0) => Expr::Num(0.0),
            Expr::Pow(a, k) => Expr::binary(
                BinOp::Mul,
                Expr::binary(BinOp::Mul, Expr::Num(*k as f64), Expr::Pow(b(a), k - 1)),
                d(a),
            ),
            Expr::Call(f, a) => {
                let outer = match f {
                    Func::Sin => Expr::Call(Func::Cos, b(a)),
                    Func::Cos => Expr::Neg(Box::new(Expr::Call(Func::Sin, b(a)))),
                    Func::Exp => self.clone(),
                };
                Expr::binary(BinOp::Mul, outer, d(a))
            }
        }
    }

    /// Plain evaluation.
    pub fn eval(&self, p: &[f64]) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Param { value, .. } => *value,
            Expr::Var { index, .. } => *p.get(*index).ok_or(EvalError::DimensionMismatch {
                expected: index + 1,
                got: p.len(),
            })?,
            Expr::Neg(a) => -a.eval(p)?,
            Expr::Binary(op, a, b) => {
                let (x, y) = (a.eval(p)?, b.eval(p)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(domain("division by zero"));
                        }
                        x / y
                    }
                }
            }
            Expr::Pow(a, k) => {
                let x = a.eval(p)?;
                if *k < 0 && x == 0.0 {
                    return Err(domain("negative power of zero"));
                }
                x.powi(*k)
            }
            Expr::Call(f, a) => {
                let x = a.eval(p)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(domain("non-finite value"))
        }
    }

    /// Value and gradient with respect to all coordinates of `p`.
    pub fn eval_dual(&self, p: &[f64]) -> Result<Dual, EvalError> {
        let n = p.len();
        let d = match self {
            Expr::Num(v) => Dual::constant(*v, n),
            Expr::Param { value, .. } => Dual::constant(*value, n),
            Expr::Var { index, .. } => {
                if *index >= n {
                    return Err(EvalError::DimensionMismatch {
                        expected: index + 1,
                        got: n,
                    });
                }
                Dual::variable(p[*index], *index, n)
            }
            Expr::Neg(a) => -a.eval_dual(p)?,
            Expr::Binary(op, a, b) => {
                let (x, y) = (a.eval_dual(p)?, b.eval_dual(p)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y.value == 0.0 {
                            return Err(domain("division by zero"));
                        }
                        x / y
                    }
                }
            }
            Expr::Pow(a, k) => {
                let x = a.eval_dual(p)?;
                if *k < 0 && x.value == 0.0 {
                    return Err(domain("negative power of zero"));
                }
                x.powi(*k)
            }
            Expr::Call(f, a) => {
                let x = a.eval_dual(p)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                }
            }
        };
        if d.is_finite() {
            Ok(d)
        } else {
            Err(domain("non-finite value"))
        }
    }
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Pow(..) => 4,
        Expr::Num(v) if *v < 0.0 || v.is_sign_negative() => 3,
        _ => 5,
    }
}

fn write_num(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v.is_sign_negative() {
        write!(f, "-{}", -v)
    } else {
        write!(f, "{v}")
    }
}

/// Canonical printer: minimal parentheses, reparses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool| {
            if paren {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Num(v) => write_num(f, *v),
            Expr::Var { name, .. } | Expr::Param { name, .. } => f.write_str(name),
            Expr::Neg(a) => {
                f.write_str("-")?;
                wrap(f, a, precedence(a) < 3)
            }
            Expr::Binary(op, a, b) => {
                let p = precedence(self);
                wrap(f, a, precedence(a) < p)?;
                write!(f, " {} ", op.symbol())?;
                // left associative: an equal-precedence right operand needs parentheses
                wrap(f, b, precedence(b) <= p)
            }
            Expr::Pow(a, k) => {
                wrap(f, a, precedence(a) < 5)?;
                write!(f, "^{k}")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart2() -> Chart {
        Chart::unit_box(["x1", "x2"]).unwrap()
    }

    #[test]
    fn parse_builds_expected_tree() {
        let e = parse("x1 + 2*x2", &chart2()).unwrap();
        let expected = Expr::binary(
            BinOp::Add,
            Expr::var(0, "x1"),
            Expr::binary(BinOp::Mul, Expr::num(2.0), Expr::var(1, "x2")),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn dual_value_and_partials() {
        let c = chart2();
        let d = parse("x1*x2", &c).unwrap().eval_dual(&[2.0, 3.0]).unwrap();
        assert_eq!(d.value, 6.0);
        assert_eq!(d.grad, vec![3.0, 2.0]);

        let c1 = Chart::unit_box(["x1"]).unwrap();
        let s = parse("sin(x1)", &c1).unwrap().eval_dual(&[0.0]).unwrap();
        assert_eq!((s.value, s.grad[0]), (0.0, 1.0));
        let e = parse("exp(x1)", &c1).unwrap().eval_dual(&[0.0]).unwrap();
        assert_eq!((e.value, e.grad[0]), (1.0, 1.0));
    }

    #[test]
    fn division_by_zero_is_a_domain_error() {
        let c = chart2();
        let e = parse("x1/x2", &c).unwrap();
        assert!(matches!(e.eval(&[1.0, 0.0]), Err(EvalError::Domain(_))));
        assert!(matches!(e.eval_dual(&[1.0, 0.0]), Err(EvalError::Domain(_))));
        let q = parse("x1^2/x2", &c).unwrap();
        assert!(matches!(q.eval_dual(&[0.5, 0.0]), Err(EvalError::Domain(_))));
        let r = parse("x2^-1", &c).unwrap();
        assert!(matches!(r.eval(&[0.5, 0.0]), Err(EvalError::Domain(_))));
    }

    #[test]
    fn precedence_of_power_and_negation() {
        let c = chart2();
        let e = parse("-x1^2", &c).unwrap();
        assert_eq!(e.eval(&[3.0, 0.0]).unwrap(), -9.0);
        let e = parse("2^-2", &c).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 0.25);
        let e = parse("8 / 4 / 2 - 1 - 1", &c).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), -1.0);
    }

    #[test]
    fn symbolic_partials_match_dual_partials() {
        let c = chart2();
        let e = parse("sin(x1*x2)^2 / (2 + cos(x2)) - exp(-x1) * x2^-1 + x1^3", &c).unwrap();
        for p in [[0.3, 0.7], [-0.9, 0.2], [0.5, -0.4]] {
            let d = e.eval_dual(&p).unwrap();
            for j in 0..2 {
                let s = e.diff(j).eval(&p).unwrap();
                assert!((s - d.grad[j]).abs() <= 1e-12 * (1.0 + s.abs()));
            }
        }
    }

    #[test]
    fn params_are_bound_at_parse_time() {
        let mut params = Params::new();
        params.insert("k".into(), 0.25);
        let e = parse_params("k*x1", &chart2(), &params).unwrap();
        assert_eq!(e.eval(&[2.0, 0.0]).unwrap(), 0.5);
        assert_eq!(e.to_string(), "k * x1");
    }

    #[test]
    fn printer_is_minimal_and_stable() {
        let c = chart2();
        for (src, printed) in [
            ("x1 - (x2 - 1)", "x1 - (x2 - 1)"),
            ("(x1 - x2) - 1", "x1 - x2 - 1"),
            ("-(x1 + x2)^3", "-(x1 + x2)^3"),
            ("(-x1)^2", "(-x1)^2"),
            ("sin((x1))*cos(x2)/exp(1)", "sin(x1) * cos(x2) / exp(1)"),
            ("x1/(x2*x1)", "x1 / (x2 * x1)"),
        ] {
            let e = parse(src, &c).unwrap();
            assert_eq!(e.to_string(), printed, "{src}");
            assert_eq!(parse(&e.to_string(), &c).unwrap(), e);
        }
    }
}
