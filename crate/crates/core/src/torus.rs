//! Lifting to `M × ℝ`, slicing back down, and deck-transformation checks
//! for the mapping torus of an automorphism.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chart::{sample_points, Chart, Point};
use crate::dual::Dual;
use crate::error::{Error, EvalError, Result};
use crate::expr::{BinOp, Expr};
use crate::field::{MatrixJet, Metric, OneForm, Tensor11, VectorField};
use crate::structure::FStructure;

/// A smooth map of a chart to itself given by coordinate expressions, with an
/// optional inverse.
#[derive(Debug, Clone)]
pub struct AutomorphismMap {
    dim: usize,
    map: Vec<Expr>,
    inverse: Option<Vec<Expr>>,
}

impl AutomorphismMap {
    pub fn new(dim: usize, map: Vec<Expr>, inverse: Option<Vec<Expr>>) -> Result<Self> {
        let check = |exprs: &[Expr], what: &str| -> Result<()> {
            if exprs.len() != dim {
                return Err(Error::Structure(format!(
                    "{what} has {} components, expected {dim}",
                    exprs.len()
                )));
            }
            if exprs.iter().filter_map(Expr::max_var_index).any(|i| i >= dim) {
                return Err(Error::Structure(format!(
                    "{what} refers to a coordinate outside the chart"
                )));
            }
            Ok(())
        };
        check(&map, "map")?;
        if let Some(inv) = &inverse {
            check(inv, "inverse")?;
        }
        Ok(AutomorphismMap { dim, map, inverse })
    }

    pub fn identity(chart: &Chart) -> Self {
        let map: Vec<Expr> = chart
            .coord_names()
            .iter()
            .enumerate()
            .map(|(i, n)| Expr::var(i, n.clone()))
            .collect();
        AutomorphismMap {
            dim: chart.dim(),
            inverse: Some(map.clone()),
            map,
        }
    }

    /// `x_index ↦ x_index + amount`, other coordinates fixed.
    pub fn translation(chart: &Chart, index: usize, amount: f64) -> Self {
        let shift = |k: f64| -> Vec<Expr> {
            chart
                .coord_names()
                .iter()
                .enumerate()
                .map(|(i, n)| {
                    let v = Expr::var(i, n.clone());
                    if i == index {
                        Expr::binary(BinOp::Add, v, Expr::num(k))
                    } else {
                        v
                    }
                })
                .collect()
        };
        AutomorphismMap {
            dim: chart.dim(),
            map: shift(amount),
            inverse: Some(shift(-amount)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn exprs(&self) -> &[Expr] {
        &self.map
    }

    pub fn inverse_exprs(&self) -> Option<&[Expr]> {
        self.inverse.as_deref()
    }

    pub fn inverted(&self) -> Option<AutomorphismMap> {
        self.inverse.as_ref().map(|inv| AutomorphismMap {
            dim: self.dim,
            map: inv.clone(),
            inverse: Some(self.map.clone()),
        })
    }

    /// `φ(p)` and the Jacobian `∂φ^a/∂x^b`.
    pub fn eval(&self, p: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>), EvalError> {
        let jets: Vec<Dual> = self.map.iter().map(|e| e.eval_dual(p)).collect::<Result<_, _>>()?;
        let q = jets.iter().map(|d| d.value).collect();
        let j = DMatrix::from_fn(self.dim, self.dim, |a, b| jets[a].grad[b]);
        Ok((q, j))
    }

    /// Max of `|φ(φ⁻¹(p)) − p|` and `|φ⁻¹(φ(p)) − p|`.
    pub fn inverse_residual(&self, points: &[Point]) -> Result<Option<f64>, EvalError> {
        let Some(inv) = &self.inverse else { return Ok(None) };
        let apply =
            |exprs: &[Expr], p: &[f64]| -> Result<Vec<f64>, EvalError> { exprs.iter().map(|e| e.eval(p)).collect() };
        let mut m: f64 = 0.0;
        for p in points {
            let p = p.coords();
            for (a, b) in [(&self.map, inv), (inv, &self.map)] {
                let q = apply(a, &apply(b, p)?)?;
                m = q.iter().zip(p).fold(m, |m, (x, y)| m.max((x - y).abs()));
            }
        }
        Ok(Some(m))
    }
}

/// Residuals of `φ*η = η`, `φ*g = g`, `dφ∘f = f∘dφ` and `dφ(ξ) = ξ∘φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutomorphismReport {
    pub eta_pullback: f64,
    pub metric_pullback: f64,
    pub f_commutes: f64,
    pub xi_pushforward: f64,
    pub inverse: Option<f64>,
    pub max: f64,
    pub tol: f64,
    pub passed: bool,
}

fn nan_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

pub fn check_automorphism(
    s: &FStructure,
    phi: &AutomorphismMap,
    points: &[Point],
    tol: f64,
) -> Result<AutomorphismReport> {
    if phi.dim() != s.dim() {
        return Err(Error::Structure(format!(
            "map of dimension {} on a structure of dimension {}",
            phi.dim(),
            s.dim()
        )));
    }
    let (mut eta_r, mut g_r, mut f_r, mut xi_r) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for p in points {
        let (q, j) = phi.eval(p.coords())?;
        let q = Point::new(q);
        let (here, there) = (s.jet(p)?, s.jet(&q)?);
        for i in 0..s.s() {
            let eta_p = DVector::from_vec(here.eta_values(i));
            let eta_q = DVector::from_vec(there.eta_values(i));
            eta_r = eta_r.max((j.transpose() * eta_q - eta_p).abs().max());
            let xi_p = DVector::from_vec(here.xi_values(i));
            let xi_q = DVector::from_vec(there.xi_values(i));
            xi_r = xi_r.max((&j * xi_p - xi_q).abs().max());
        }
        let (gp, gq) = (here.g.values(), there.g.values());
        g_r = g_r.max((j.transpose() * gq * &j - gp).abs().max());
        let (fp, fq) = (here.f.values(), there.f.values());
        f_r = f_r.max((&j * fp - fq * &j).abs().max());
    }
    let inverse = phi.inverse_residual(points)?.map(nan_inf);
    let (eta_r, g_r, f_r, xi_r) = (nan_inf(eta_r), nan_inf(g_r), nan_inf(f_r), nan_inf(xi_r));
    let max = [eta_r, g_r, f_r, xi_r, inverse.unwrap_or(0.0)]
        .into_iter()
        .fold(0.0, f64::max);
    Ok(AutomorphismReport {
        eta_pullback: eta_r,
        metric_pullback: g_r,
        f_commutes: f_r,
        xi_pushforward: xi_r,
        inverse,
        max,
        tol,
        passed: !points.is_empty() && max <= tol,
    })
}

/// First name of the form `t`, `t1`, `t2`, … not already used by `chart`.
fn free_name(chart: &Chart, base: &str) -> String {
    if chart.index_of(base).is_none() {
        return base.to_string();
    }
    (1..)
        .map(|k| format!("{base}{k}"))
        .find(|n| chart.index_of(n).is_none())
        .expect("unbounded search")
}

pub const LIFT_COORDINATE: &str = "t";

/// Chart of the lift: `chart` with a trailing coordinate `t ∈ [−1, 1]`.
pub fn lifted_chart(chart: &Chart) -> Result<Chart> {
    let mut chart = chart.clone();
    if let Some(i) = chart.index_of(LIFT_COORDINATE) {
        let name = free_name(&chart, LIFT_COORDINATE);
        chart.rename(i, name);
    }
    chart.with_coordinate(LIFT_COORDINATE, (-1.0, 1.0))
}

/// The lifted structure on `M × ℝ` with the new coordinate `t` last.
///
/// `f̄ = f ⊕ 0`, `η̄_α = η_α`, `η̄_{s+1} = (1/s) Σ η_α + dt`, `ξ̄_{s+1} = ∂_t`,
/// `ξ̄_α = ξ_α − (1/s) ∂_t` and `ḡ = g(P·, P·) + Σ η̄⊗η̄` with
/// `P = id − Σ η̄⊗ξ̄`. If the base chart already has a coordinate named `t`
/// it is renamed to the first free `t1`, `t2`, ….
pub fn lift(s: &FStructure) -> Result<FStructure> {
    let base = s.dim();
    let k = s.s();
    let kf = k as f64;
    let chart = lifted_chart(s.chart())?;
    let dim = base + 1;

    let down = move |p: &[f64]| p[..base].to_vec();
    let up = move |v: Vec<Dual>| -> Vec<Dual> { v.into_iter().map(|d| d.extend(1)).collect() };

    let f = {
        let f0 = s.f.clone();
        Tensor11::from_fn(dim, move |p| {
            let m = f0.jet_at(&down(p))?;
            Ok(MatrixJet::from_fn(dim, |a, b| {
                if a < base && b < base {
                    m.get(a, b).clone().extend(1)
                } else {
                    Dual::zero(dim)
                }
            }))
        })
    };

    let lift_eta = |e: &OneForm| {
        let e = e.clone();
        OneForm::from_fn(dim, move |p| {
            let mut v = up(e.jet_at(&down(p))?);
            v.push(Dual::zero(dim));
            Ok(v)
        })
    };
    let mut eta: Vec<OneForm> = s.eta.iter().map(lift_eta).collect();
    eta.push({
        let es = s.eta.clone();
        OneForm::from_fn(dim, move |p| {
            let q = down(p);
            let mut v = vec![Dual::zero(dim); dim];
            for e in &es {
                for (a, c) in v.iter_mut().zip(up(e.jet_at(&q)?)) {
                    *a += c.scale(1.0 / kf);
                }
            }
            v[base] = Dual::constant(1.0, dim);
            Ok(v)
        })
    });

    let mut xi: Vec<VectorField> =
        s.xi.iter()
            .map(|x| {
                let x = x.clone();
                VectorField::from_fn(dim, move |p| {
                    let mut v = up(x.jet_at(&down(p))?);
                    v.push(Dual::constant(-1.0 / kf, dim));
                    Ok(v)
                })
            })
            .collect();
    let mut dt = vec![0.0; dim];
    dt[base] = 1.0;
    xi.push(VectorField::constant(dt));

    let g = {
        let (g0, eta, xi) = (s.g.clone(), eta.clone(), xi.clone());
        Metric::from_fn(dim, move |p| {
            let gb = g0.jet_at(&down(p))?;
            let etas: Vec<Vec<Dual>> = eta.iter().map(|e| e.jet_at(p)).collect::<Result<_, _>>()?;
            let xis: Vec<Vec<Dual>> = xi.iter().map(|x| x.jet_at(p)).collect::<Result<_, _>>()?;
            let big = MatrixJet::from_fn(dim, |a, b| {
                if a < base && b < base {
                    gb.get(a, b).clone().extend(1)
                } else {
                    Dual::zero(dim)
                }
            });
            Ok(project_metric(&big, &xis, &etas))
        })
    };

    FStructure::new(s.n(), k + 1, chart, f, xi, eta, g)
}

/// `g(P·, P·) + Σ η⊗η` with `P = id − Σ η⊗ξ`.
fn project_metric(g: &MatrixJet, xis: &[Vec<Dual>], etas: &[Vec<Dual>]) -> MatrixJet {
    let n = g.size();
    let d = g.get(0, 0).dim();
    // P^a_b = δ^a_b − Σ ξ^a η_b
    let proj = MatrixJet::from_fn(n, |a, b| {
        let mut v = Dual::constant(if a == b { 1.0 } else { 0.0 }, d);
        for (x, e) in xis.iter().zip(etas) {
            v -= &x[a] * &e[b];
        }
        v
    });
    // (gP)_cb = Σ_d g_cd P^d_b
    let gp = MatrixJet::from_fn(n, |c, b| {
        let mut v = Dual::zero(d);
        for k in 0..n {
            v += g.get(c, k) * proj.get(k, b);
        }
        v
    });
    MatrixJet::from_fn(n, |a, b| {
        let mut v = Dual::zero(d);
        for c in 0..n {
            v += proj.get(c, a) * gp.get(c, b);
        }
        for e in etas {
            v += &e[a] * &e[b];
        }
        v
    })
}

/// Default tolerance for the slice precondition.
pub const SLICE_TOL: f64 = 1e-9;

/// Restricts a structure on `N × ℝ` (with `t` its last coordinate) to the
/// slice `t = 0`.
///
/// Requires `η_{s+1} − (1/s) Σ_{i≤s} ηᵢ` to have no components along the
/// slice coordinates, checked at `samples` points of the slice chart to within
/// `tol`. The slice structure is `η̄ᵢ = ηᵢ|`, `ξ̄ᵢ = ξᵢ + (1/s) ξ_{s+1}`,
/// `f̄ = f|` and `ḡ = g(P̄·, P̄·) + Σ η̄⊗η̄`.
pub fn slice(s: &FStructure, samples: usize, seed: u64, tol: f64) -> Result<FStructure> {
    if s.s() < 2 {
        return Err(Error::Precondition("slicing needs s ≥ 2".into()));
    }
    if s.n() == 0 && s.dim() < 2 {
        return Err(Error::Precondition("nothing left after slicing".into()));
    }
    let dim = s.dim() - 1;
    let k = s.s() - 1;
    let kf = k as f64;
    let chart = s.chart().without_last()?;

    let up = move |p: &[f64]| {
        let mut q = p.to_vec();
        q.push(0.0);
        q
    };
    let restrict = move |v: Vec<Dual>| -> Vec<Dual> { v.into_iter().take(dim).map(|d| d.truncate(dim)).collect() };

    let points = sample_points(&chart, samples, seed);
    let mut worst: f64 = 0.0;
    for p in &points {
        let q = Point::new(up(p.coords()));
        let last = s.eta[k].values(&q)?;
        let mut avg = vec![0.0; dim + 1];
        for e in &s.eta[..k] {
            for (a, c) in avg.iter_mut().zip(e.values(&q)?) {
                *a += c / kf;
            }
        }
        for a in 0..dim {
            worst = worst.max(nan_inf((last[a] - avg[a]).abs()));
        }
    }
    if !(worst <= tol) {
        return Err(Error::Precondition(format!(
            "t = 0 is not a leaf of the kernel of η_{} − (1/{k})Σηᵢ: slice components up to {worst:?}",
            k + 1
        )));
    }

    let eta: Vec<OneForm> = s.eta[..k]
        .iter()
        .map(|e| {
            let e = e.clone();
            OneForm::from_fn(dim, move |p| Ok(restrict(e.jet_at(&up(p))?)))
        })
        .collect();
    let xi: Vec<VectorField> = s.xi[..k]
        .iter()
        .map(|x| {
            let (x, last) = (x.clone(), s.xi[k].clone());
            VectorField::from_fn(dim, move |p| {
                let q = up(p);
                let mut v = x.jet_at(&q)?;
                for (a, c) in v.iter_mut().zip(last.jet_at(&q)?) {
                    *a += c.scale(1.0 / kf);
                }
                Ok(restrict(v))
            })
        })
        .collect();
    let f = {
        let f0 = s.f.clone();
        Tensor11::from_fn(dim, move |p| {
            let m = f0.jet_at(&up(p))?;
            Ok(MatrixJet::from_fn(dim, |a, b| m.get(a, b).clone().truncate(dim)))
        })
    };
    let g = {
        let (g0, eta, xi) = (s.g.clone(), eta.clone(), xi.clone());
        Metric::from_fn(dim, move |p| {
            let m = g0.jet_at(&up(p))?;
            let gr = MatrixJet::from_fn(dim, |a, b| m.get(a, b).clone().truncate(dim));
            let etas: Vec<Vec<Dual>> = eta.iter().map(|e| e.jet_at(p)).collect::<Result<_, _>>()?;
            let xis: Vec<Vec<Dual>> = xi.iter().map(|x| x.jet_at(p)).collect::<Result<_, _>>()?;
            Ok(project_metric(&gr, &xis, &etas))
        })
    };
    FStructure::new(s.n(), k, chart, f, xi, eta, g)
}

/// Deck transformation `Φ(p, t) = (φ(p), t + t0)` on the lifted chart.
pub fn deck_map(phi: &AutomorphismMap, lifted: &Chart, t0: f64) -> Result<AutomorphismMap> {
    if phi.dim() + 1 != lifted.dim() {
        return Err(Error::Structure(format!(
            "map of dimension {} does not match lifted chart of dimension {}",
            phi.dim(),
            lifted.dim()
        )));
    }
    let base = phi.dim();
    let t = Expr::var(base, lifted.coord_names()[base].clone());
    let extend = |exprs: &[Expr], shift: f64| -> Vec<Expr> {
        let mut v = exprs.to_vec();
        v.push(Expr::binary(BinOp::Add, t.clone(), Expr::num(shift)));
        v
    };
    AutomorphismMap::new(
        base + 1,
        extend(phi.exprs(), t0),
        phi.inverse_exprs().map(|inv| extend(inv, -t0)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeckReport {
    pub t0: f64,
    pub forward: AutomorphismReport,
    pub backward: Option<AutomorphismReport>,
    pub passed: bool,
}

/// Checks that `Φ` (and `Φ⁻¹` when the inverse is known) preserves the lifted
/// structure.
pub fn check_deck_invariance(
    lifted: &FStructure,
    phi: &AutomorphismMap,
    t0: f64,
    points: &[Point],
    tol: f64,
) -> Result<DeckReport> {
    if t0 == 0.0 || !t0.is_finite() {
        return Err(Error::Precondition(format!(
            "deck translation must be finite and nonzero, got {t0}"
        )));
    }
    let deck = deck_map(phi, lifted.chart(), t0)?;
    let forward = check_automorphism(lifted, &deck, points, tol)?;
    let backward = match deck.inverted() {
        Some(inv) => Some(check_automorphism(lifted, &inv, points, tol)?),
        None => None,
    };
    let passed = forward.passed && backward.is_none_or(|b| b.passed);
    Ok(DeckReport {
        t0,
        forward,
        backward,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Tensor11;

    #[test]
    fn free_names() {
        let c = Chart::unit_box(["x", "t", "t1"]).unwrap();
        assert_eq!(free_name(&c, "t"), "t2");
        assert_eq!(free_name(&c, "z"), "z");
    }

    #[test]
    fn translation_inverse() {
        let c = Chart::unit_box(["x", "y"]).unwrap();
        let m = AutomorphismMap::translation(&c, 1, 0.5);
        let (q, j) = m.eval(&[0.1, 0.2]).unwrap();
        assert_eq!(q, vec![0.1, 0.7]);
        assert_eq!(j, DMatrix::identity(2, 2));
        let pts = sample_points(&c, 8, 1);
        assert_eq!(m.inverse_residual(&pts).unwrap(), Some(0.0));
    }

    #[test]
    fn lift_renames_existing_t() {
        let chart = Chart::unit_box(["t"]).unwrap();
        let s = FStructure::new(
            0,
            1,
            chart,
            Tensor11::zero(1),
            vec![VectorField::coordinate(1, 0)],
            vec![OneForm::constant(vec![1.0])],
            Metric::euclidean(1),
        )
        .unwrap();
        let l = lift(&s).unwrap();
        assert_eq!(l.chart().coord_names(), &["t1".to_string(), "t".to_string()]);
        assert_eq!(l.s(), 2);
    }
}
