//! Rotation, anti-rotation and type II deformation.
//!
//! All three keep `f`'s kernel and the span of the characteristic fields.
//! Rotation and anti-rotation by the same matrix are mutually inverse; type II
//! deformations compose additively in θ.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::calculus::{coordinate_jet, d_oneform_jet, lie_oneform_jet};
use crate::chart::Point;
use crate::compare::{compare_structures, StructureDiff};
use crate::dual::{self, Dual};
use crate::error::{Error, Result};
use crate::field::{MatrixJet, Metric, OneForm, Tensor11, VectorField};
use crate::structure::FStructure;

pub const ORTHOGONALITY_TOL: f64 = 1e-10;
pub const ROW_SUM_FLOOR: f64 = 1e-8;

/// An orthogonal `s × s` matrix whose row sums `cᵢ = Σⱼ aᵢⱼ` are all nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationMatrix {
    a: DMatrix<f64>,
    c: Vec<f64>,
}

impl RotationMatrix {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::Matrix(format!(
                "expected a nonempty square matrix, got {}×{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let s = a.nrows();
        let defect = (a.transpose() * &a - DMatrix::identity(s, s)).abs().max();
        if !(defect <= ORTHOGONALITY_TOL) {
            return Err(Error::Matrix(format!(
                "‖AᵀA − I‖ = {defect:?} exceeds {ORTHOGONALITY_TOL:?}"
            )));
        }
        let c: Vec<f64> = a.row_iter().map(|r| r.sum()).collect();
        if let Some((i, ci)) = c.iter().enumerate().find(|(_, ci)| ci.abs() < ROW_SUM_FLOOR) {
            return Err(Error::Matrix(format!(
                "row sum c{} = {ci:?} is below {ROW_SUM_FLOOR:?}",
                i + 1
            )));
        }
        Ok(RotationMatrix { a, c })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let s = rows.len();
        if rows.iter().any(|r| r.len() != s) {
            return Err(Error::Matrix("rows must all have length s".into()));
        }
        Self::new(DMatrix::from_fn(s, s, |i, j| rows[i][j]))
    }

    pub fn identity(s: usize) -> Self {
        Self::new(DMatrix::identity(s, s)).expect("identity is orthogonal")
    }

    pub fn size(&self) -> usize {
        self.c.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn row_sums(&self) -> &[f64] {
        &self.c
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.a.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

/// `out[i] = Σ_t coeffs[(i, t)] · forms[t]`.
fn recombine_forms(coeffs: &DMatrix<f64>, forms: &[OneForm]) -> Vec<OneForm> {
    (0..coeffs.nrows())
        .map(|i| {
            let row: Vec<f64> = coeffs.row(i).iter().copied().collect();
            OneForm::linear_combination(&row, forms)
        })
        .collect()
}

fn recombine_fields(coeffs: &DMatrix<f64>, fields: &[VectorField]) -> Vec<VectorField> {
    let dim = fields[0].dim();
    (0..coeffs.nrows())
        .map(|i| {
            let row: Vec<f64> = coeffs.row(i).iter().copied().collect();
            let fields = fields.to_vec();
            VectorField::from_fn(dim, move |p| {
                let mut acc = vec![Dual::zero(p.len()); p.len()];
                for (k, x) in row.iter().zip(&fields) {
                    if *k == 0.0 {
                        continue;
                    }
                    for (a, c) in acc.iter_mut().zip(x.jet_at(p)?) {
                        *a += c.scale(*k);
                    }
                }
                Ok(acc)
            })
        })
        .collect()
}

fn outer_add(m: &mut MatrixJet, u: &[Dual], v: &[Dual], sign: f64) {
    for a in 0..u.len() {
        for b in 0..v.len() {
            let t = (&u[a] * &v[b]).scale(sign);
            *m.get_mut(a, b) += t;
        }
    }
}

/// `g − Σ old⊗old + Σ new⊗new`.
fn swap_metric(g: &Metric, old: &[OneForm], new: &[OneForm]) -> Metric {
    let (g, old, new) = (g.clone(), old.to_vec(), new.to_vec());
    Metric::from_fn(g.dim(), move |p| {
        let mut m = g.jet_at(p)?;
        for e in &old {
            let j = e.jet_at(p)?;
            outer_add(&mut m, &j, &j, -1.0);
        }
        for e in &new {
            let j = e.jet_at(p)?;
            outer_add(&mut m, &j, &j, 1.0);
        }
        Ok(m)
    })
}

fn check_size(s: &FStructure, a: &RotationMatrix) -> Result<()> {
    if a.size() != s.s() {
        return Err(Error::Matrix(format!("matrix is {0}×{0} but s = {1}", a.size(), s.s())));
    }
    Ok(())
}

/// Rotation: `η′ᵢ = Σ_t a_ti c_t η_t`, `ξ′ᵢ = Σ_t (a_ti / c_t) ξ_t`,
/// `g′ = g − Σ η_α⊗η_α + Σ η′_α⊗η′_α`, `f′ = f`.
pub fn rotate(s: &FStructure, a: &RotationMatrix) -> Result<FStructure> {
    check_size(s, a)?;
    let k = s.s();
    let (m, c) = (a.matrix(), a.row_sums());
    let eta_coeffs = DMatrix::from_fn(k, k, |i, t| m[(t, i)] * c[t]);
    let xi_coeffs = DMatrix::from_fn(k, k, |i, t| m[(t, i)] / c[t]);
    let eta = recombine_forms(&eta_coeffs, &s.eta);
    let xi = recombine_fields(&xi_coeffs, &s.xi);
    let g = swap_metric(&s.g, &s.eta, &eta);
    FStructure::new(s.n(), k, s.chart().clone(), s.f.clone(), xi, eta, g)
}

/// Anti-rotation: `η̃ᵢ = (1/cᵢ) Σ_t a_it η_t`, `ξ̃ᵢ = cᵢ Σ_t a_it ξ_t`,
/// `g̃ = g − Σ η_α⊗η_α + Σ η̃_α⊗η̃_α`, `f̃ = f`.
pub fn antirotate(s: &FStructure, a: &RotationMatrix) -> Result<FStructure> {
    check_size(s, a)?;
    let k = s.s();
    let (m, c) = (a.matrix(), a.row_sums());
    let eta_coeffs = DMatrix::from_fn(k, k, |i, t| m[(i, t)] / c[i]);
    let xi_coeffs = DMatrix::from_fn(k, k, |i, t| m[(i, t)] * c[i]);
    let eta = recombine_forms(&eta_coeffs, &s.eta);
    let xi = recombine_fields(&xi_coeffs, &s.xi);
    let g = swap_metric(&s.g, &s.eta, &eta);
    FStructure::new(s.n(), k, s.chart().clone(), s.f.clone(), xi, eta, g)
}

/// How far each θᵢ is from being closed and basic at the samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormCheck {
    pub index: usize,
    /// max |dθ(∂_a, ∂_b)|
    pub closed: f64,
    /// max |θ(ξⱼ)|
    pub horizontal: f64,
    /// max |(L_ξⱼ θ)(∂_a)|
    pub invariant: f64,
}

impl FormCheck {
    pub fn max(&self) -> f64 {
        self.closed.max(self.horizontal).max(self.invariant)
    }
}

pub fn check_closed_basic(s: &FStructure, thetas: &[OneForm], points: &[Point]) -> Result<Vec<FormCheck>> {
    let n = s.dim();
    let e: Vec<Vec<Dual>> = (0..n).map(|a| coordinate_jet(n, a)).collect();
    let mut out: Vec<FormCheck> = (0..thetas.len())
        .map(|index| FormCheck {
            index,
            closed: 0.0,
            horizontal: 0.0,
            invariant: 0.0,
        })
        .collect();
    for p in points {
        let xi: Vec<Vec<Dual>> = s.xi.iter().map(|x| x.jet(p)).collect::<std::result::Result<_, _>>()?;
        for (check, theta) in out.iter_mut().zip(thetas) {
            let th = theta.jet(p)?;
            for a in 0..n {
                for b in (a + 1)..n {
                    check.closed = check.closed.max(d_oneform_jet(&th, &e[a], &e[b]).abs());
                }
            }
            for x in &xi {
                check.horizontal = check.horizontal.max(dual::dot(&th, x).value.abs());
                for ea in &e {
                    check.invariant = check.invariant.max(lie_oneform_jet(x, &th, ea).abs());
                }
            }
        }
    }
    for c in &mut out {
        for v in [&mut c.closed, &mut c.horizontal, &mut c.invariant] {
            if v.is_nan() {
                *v = f64::INFINITY;
            }
        }
    }
    Ok(out)
}

fn check_thetas(s: &FStructure, thetas: &[OneForm]) -> Result<()> {
    if thetas.len() != s.s() {
        return Err(Error::Precondition(format!(
            "expected {} θ-forms, got {}",
            s.s(),
            thetas.len()
        )));
    }
    if let Some(t) = thetas.iter().find(|t| t.dim() != s.dim()) {
        return Err(Error::Precondition(format!(
            "θ-form of dimension {} on a chart of dimension {}",
            t.dim(),
            s.dim()
        )));
    }
    Ok(())
}

/// Type II deformation after checking that every θᵢ is closed and basic at
/// `points` to within `tol`.
pub fn type2(s: &FStructure, thetas: &[OneForm], points: &[Point], tol: f64) -> Result<FStructure> {
    check_thetas(s, thetas)?;
    let checks = check_closed_basic(s, thetas, points)?;
    let bad: Vec<String> = checks
        .iter()
        .filter(|c| !(c.max() <= tol))
        .map(|c| {
            format!(
                "θ{}: dθ residual {:?}, θ(ξ) residual {:?}, L_ξθ residual {:?}",
                c.index + 1,
                c.closed,
                c.horizontal,
                c.invariant
            )
        })
        .collect();
    if !bad.is_empty() {
        return Err(Error::Precondition(format!(
            "θ-forms not closed and basic: {}",
            bad.join("; ")
        )));
    }
    type2_unchecked(s, thetas)
}

/// Type II deformation: `η̄ᵢ = ηᵢ + θᵢ`, `ḡ = g + Σ ηᵢ⊗θᵢ + θᵢ⊗η̄ᵢ`,
/// `f̄ = f − Σ (θᵢ∘f)⊗ξᵢ`, characteristic fields unchanged.
pub fn type2_unchecked(s: &FStructure, thetas: &[OneForm]) -> Result<FStructure> {
    check_thetas(s, thetas)?;
    let eta: Vec<OneForm> = s
        .eta
        .iter()
        .zip(thetas)
        .map(|(e, t)| OneForm::linear_combination(&[1.0, 1.0], &[e.clone(), t.clone()]))
        .collect();

    let g = {
        let (g, old, th, new) = (s.g.clone(), s.eta.clone(), thetas.to_vec(), eta.clone());
        Metric::from_fn(s.dim(), move |p| {
            let mut m = g.jet_at(p)?;
            for ((e, t), eb) in old.iter().zip(&th).zip(&new) {
                let (e, t, eb) = (e.jet_at(p)?, t.jet_at(p)?, eb.jet_at(p)?);
                outer_add(&mut m, &e, &t, 1.0);
                outer_add(&mut m, &t, &eb, 1.0);
            }
            Ok(m)
        })
    };

    let f = {
        let (f, xi, th) = (s.f.clone(), s.xi.clone(), thetas.to_vec());
        Tensor11::from_fn(s.dim(), move |p| {
            let mut m = f.jet_at(p)?;
            let fm = m.clone();
            let n = fm.size();
            for (x, t) in xi.iter().zip(&th) {
                let (x, t) = (x.jet_at(p)?, t.jet_at(p)?);
                // (θ∘f)_b = Σ_c θ_c f^c_b
                for b in 0..n {
                    let mut tf = Dual::zero(p.len());
                    for c in 0..n {
                        tf += &t[c] * fm.get(c, b);
                    }
                    for a in 0..n {
                        *m.get_mut(a, b) -= &x[a] * &tf;
                    }
                }
            }
            Ok(m)
        })
    };

    FStructure::new(s.n(), s.s(), s.chart().clone(), f, s.xi.clone(), eta, g)
}

/// `θ̃ᵢ = (1/cᵢ) Σ_k a_ik θ_k`: the forms for which type II then rotation
/// agrees with rotation then type II by θ.
pub fn commuted_thetas(a: &RotationMatrix, thetas: &[OneForm]) -> Vec<OneForm> {
    let (m, c) = (a.matrix(), a.row_sums());
    let k = a.size();
    let coeffs = DMatrix::from_fn(k, k, |i, t| m[(i, t)] / c[i]);
    recombine_forms(&coeffs, thetas)
}

/// Runs both orders (rotate then type II by θ, and type II by θ̃ then rotate)
/// and reports the componentwise discrepancy.
pub fn compose_checks(
    s: &FStructure,
    a: &RotationMatrix,
    thetas: &[OneForm],
    points: &[Point],
    tol: f64,
) -> Result<StructureDiff> {
    check_size(s, a)?;
    let first = type2(&rotate(s, a)?, thetas, points, tol)?;
    let tilde = commuted_thetas(a, thetas);
    let second = rotate(&type2(s, &tilde, points, tol)?, a)?;
    compare_structures(&first, &second, points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_validation() {
        assert!(RotationMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).is_ok());
        // not orthogonal
        assert!(matches!(
            RotationMatrix::from_rows(&[vec![1.0, 0.1], vec![0.0, 1.0]]),
            Err(Error::Matrix(_))
        ));
        // rotation by π/4 has c₁ = cos − sin = 0
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(matches!(
            RotationMatrix::from_rows(&[vec![h, -h], vec![h, h]]),
            Err(Error::Matrix(_))
        ));
        let d = RotationMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert_eq!(d.row_sums(), &[1.0, -1.0]);
        assert!(RotationMatrix::from_rows(&[vec![1.0]]).is_ok());
        assert!(RotationMatrix::from_rows(&[vec![1.0, 0.0]]).is_err());
    }
}
