//! The map `h(A) = Aᵀ diag(1/c) v` on orthogonal matrices and a solver for
//! `h(A) = u`.
//!
//! Here `v = (−1/(s−1), …, −1/(s−1), 1)` and `cᵢ` are the row sums of `A`.
//! `h(A)` is the coordinate vector, in the original `ηᵢ`, of
//! `η̃_s − (1/(s−1)) Σ_{i<s} η̃ᵢ` after anti-rotating by `A`, so it always lies
//! in the hyperplane `V = {Σ uᵢ = 0}`.
//!
//! Since `A` is orthogonal, `‖h(A)‖ = ‖v/c‖` while `‖c‖² = ‖A·1‖² = s`, so
//! `‖h(A)‖² ≥ (Σ|vᵢ|)²/s = 4/s`. Conversely every `u ∈ V` with `‖u‖² ≥ 4/s`
//! is reached by an orthogonal map sending `(u, 1)` to `(v/c, c)` for a
//! suitable `c`. The image of `h` is therefore exactly
//! `{u ∈ V : ‖u‖ ≥ 2/√s}`. For `s = 2` the base point `v` lies on its
//! boundary and `dh_I` vanishes.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chart::Point;
use crate::deform::{antirotate, RotationMatrix, ROW_SUM_FLOOR};
use crate::error::{Error, Result};
use crate::structure::FStructure;

pub const RANK_THRESHOLD: f64 = 1e-10;
pub const SKEW_TOL: f64 = 1e-10;

pub fn row_sums(a: &DMatrix<f64>) -> Vec<f64> {
    a.row_iter().map(|r| r.sum()).collect()
}

/// `v = (−1/(s−1), …, −1/(s−1), 1)`.
pub fn base_vector(s: usize) -> Result<DVector<f64>> {
    if s < 2 {
        return Err(Error::Precondition(format!("s must be at least 2, got {s}")));
    }
    let w = -1.0 / (s - 1) as f64;
    Ok(DVector::from_fn(s, |i, _| if i + 1 == s { 1.0 } else { w }))
}

fn square(a: &DMatrix<f64>) -> Result<usize> {
    if !a.is_square() {
        return Err(Error::Matrix(format!(
            "expected a square matrix, got {}×{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

/// `h(A) = Aᵀ diag(1/c) v`.
pub fn h_map(a: &DMatrix<f64>) -> Result<DVector<f64>> {
    let s = square(a)?;
    let v = base_vector(s)?;
    let c = row_sums(a);
    if let Some((i, ci)) = c.iter().enumerate().find(|(_, ci)| !(ci.abs() >= ROW_SUM_FLOOR)) {
        return Err(Error::Matrix(format!(
            "row sum c{} = {ci:?} is below {ROW_SUM_FLOOR:?}",
            i + 1
        )));
    }
    let w = DVector::from_fn(s, |i, _| v[i] / c[i]);
    Ok(a.transpose() * w)
}

fn skew_defect(x: &DMatrix<f64>) -> f64 {
    (x + x.transpose()).abs().max()
}

/// Differential of `h` at the identity: `dh_I(X) = Xᵀ v − diag(c(X)) v`.
pub fn dh_identity(x: &DMatrix<f64>) -> Result<DVector<f64>> {
    let s = square(x)?;
    let defect = skew_defect(x);
    if !(defect <= SKEW_TOL) {
        return Err(Error::Matrix(format!("X is not skew-symmetric: ‖X + Xᵀ‖ = {defect:?}")));
    }
    let v = base_vector(s)?;
    let c = row_sums(x);
    Ok(x.transpose() * &v - DVector::from_fn(s, |i, _| c[i] * v[i]))
}

/// Number of skew parameters, `s(s−1)/2`.
pub fn skew_dim(s: usize) -> usize {
    s * s.saturating_sub(1) / 2
}

/// Skew matrix from its strict upper triangle, row by row.
pub fn skew_from_params(s: usize, x: &[f64]) -> DMatrix<f64> {
    assert_eq!(x.len(), skew_dim(s));
    let mut m = DMatrix::zeros(s, s);
    let mut k = 0;
    for i in 0..s {
        for j in (i + 1)..s {
            m[(i, j)] = x[k];
            m[(j, i)] = -x[k];
            k += 1;
        }
    }
    m
}

/// Matrix of `dh_I` in the basis `E_ij − E_ji`, `i < j`.
pub fn dh_matrix(s: usize) -> Result<DMatrix<f64>> {
    base_vector(s)?;
    let m = skew_dim(s);
    let mut out = DMatrix::zeros(s, m);
    for k in 0..m {
        let mut e = vec![0.0; m];
        e[k] = 1.0;
        out.set_column(k, &dh_identity(&skew_from_params(s, &e))?);
    }
    Ok(out)
}

/// Numerical rank of `dh_I` on skew matrices.
pub fn image_rank(s: usize) -> Result<usize> {
    let m = dh_matrix(s)?;
    let sv = m.svd(false, false).singular_values;
    let top = sv.iter().copied().fold(0.0, f64::max);
    Ok(sv.iter().filter(|&&x| x > RANK_THRESHOLD * top.max(1.0)).count())
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.abs().row_sum().max();
    let mut k = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        k += 1;
    }
    let a = m * scale;
    let mut term = DMatrix::identity(n, n);
    let mut sum = term.clone();
    for i in 1..=20 {
        term = &term * &a / i as f64;
        sum += &term;
        if term.abs().max() < 1e-18 {
            break;
        }
    }
    for _ in 0..k {
        sum = &sum * &sum;
    }
    sum
}

/// `2/√s`, the smallest norm of a point in the image of `h`.
pub fn min_image_norm(s: usize) -> f64 {
    2.0 / (s as f64).sqrt()
}

/// A target in `V = {Σ uᵢ = 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetVector(DVector<f64>);

impl TargetVector {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if u.len() < 2 {
            return Err(Error::Precondition(format!(
                "target must have at least 2 entries, got {}",
                u.len()
            )));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::Precondition("target has non-finite entries".into()));
        }
        let sum: f64 = u.iter().sum();
        let scale = u.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        if sum.abs() > 1e-10 * scale {
            return Err(Error::Precondition(format!("target entries must sum to 0, got {sum}")));
        }
        Ok(TargetVector(DVector::from_vec(u)))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    /// Whether some `A ∈ U` has `h(A) = u`.
    pub fn in_image(&self) -> bool {
        self.0.norm_squared() >= 4.0 / self.len() as f64 * (1.0 - 1e-12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub max_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    pub tol: f64,
    pub fd_step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iterations: 200,
            restarts: 8,
            seed: 42,
            tol: 1e-10,
            fd_step: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationSolution {
    /// Rows of the orthogonal matrix `A = exp(X)`.
    pub a: Vec<Vec<f64>>,
    /// Rows of the skew generator `X`.
    pub x: Vec<Vec<f64>>,
    pub row_sums: Vec<f64>,
    /// `max |h(A) − u|`.
    pub residual: f64,
    /// `max |AᵀA − I|`.
    pub orthogonality_defect: f64,
    pub iterations: usize,
    /// Index of the start that converged; 0 is the identity.
    pub start: usize,
}

impl RotationSolution {
    pub fn matrix(&self) -> DMatrix<f64> {
        let s = self.a.len();
        DMatrix::from_fn(s, s, |i, j| self.a[i][j])
    }

    pub fn rotation(&self) -> Result<RotationMatrix> {
        RotationMatrix::new(self.matrix())
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn residual_vec(s: usize, x: &[f64], u: &DVector<f64>) -> Option<DVector<f64>> {
    let h = h_map(&expm(&skew_from_params(s, x))).ok()?;
    let r = h - u;
    r.iter().all(|v| v.is_finite()).then_some(r)
}

fn norm(r: &Option<DVector<f64>>) -> f64 {
    r.as_ref().map_or(f64::INFINITY, |r| r.amax())
}

/// Damped Gauss–Newton from one start. Returns the best point and its
/// residual after at most `max_iterations` steps.
fn descend(s: usize, start: Vec<f64>, u: &DVector<f64>, opts: &SolveOptions) -> (Vec<f64>, f64, usize) {
    let m = start.len();
    let mut x = start;
    let mut r = residual_vec(s, &x, u);
    let mut best = norm(&r);
    let mut it = 0;
    while it < opts.max_iterations && best > opts.tol {
        it += 1;
        let Some(r0) = r.clone() else { break };
        let mut jac = DMatrix::zeros(s, m);
        let mut ok = true;
        for k in 0..m {
            let mut xp = x.clone();
            xp[k] += opts.fd_step;
            match residual_vec(s, &xp, u) {
                Some(rp) => jac.set_column(k, &((rp - &r0) / opts.fd_step)),
                None => ok = false,
            }
        }
        if !ok {
            break;
        }
        let svd = jac.svd(true, true);
        let Ok(step) = svd.solve(&r0, RANK_THRESHOLD) else {
            break;
        };
        let mut lambda = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a - lambda * d).collect();
            let rt = residual_vec(s, &trial, u);
            let nt = norm(&rt);
            if nt < best {
                x = trial;
                r = rt;
                best = nt;
                moved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (x, best, it)
}

/// Finds an orthogonal `A` with `h(A) = u`.
///
/// The first start is the identity; further starts draw skew parameters
/// uniformly from `[−π, π]` with a seeded generator. Targets outside the
/// image of `h` are rejected up front.
pub fn solve_rotation(u: &TargetVector, opts: &SolveOptions) -> Result<RotationSolution> {
    let s = u.len();
    if !u.in_image() {
        return Err(Error::Precondition(format!(
            "target is outside the image of h: ‖u‖ = {} < 2/√{s} = {}",
            u.as_vector().norm(),
            min_image_norm(s)
        )));
    }
    let target = u.as_vector();
    let m = skew_dim(s);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(Vec<f64>, f64, usize, usize)> = None;
    let mut total = 0;
    for start in 0..=opts.restarts {
        let x0: Vec<f64> = if start == 0 {
            vec![0.0; m]
        } else {
            (0..m)
                .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect()
        };
        let (x, res, it) = descend(s, x0, target, opts);
        total += it;
        if best.as_ref().is_none_or(|b| res < b.1) {
            best = Some((x, res, start, total));
        }
        if res <= opts.tol {
            break;
        }
    }
    let (x, residual, start, iterations) = best.expect("at least one start");
    if !(residual <= opts.tol) {
        return Err(Error::NoConvergence {
            iterations: total,
            best_residual: residual,
        });
    }
    let xm = skew_from_params(s, &x);
    let a = expm(&xm);
    let defect = (a.transpose() * &a - DMatrix::identity(s, s)).abs().max();
    Ok(RotationSolution {
        row_sums: row_sums(&a),
        a: rows(&a),
        x: rows(&xm),
        residual,
        orthogonality_defect: defect,
        iterations,
        start,
    })
}

/// Least-squares coordinates of `target` in `basis`, through the Gram system.
pub fn coordinates_in(target: &[f64], basis: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = basis.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&basis[i], &basis[j]));
    let det = gram.determinant();
    if !(det.abs() > crate::verify::GRAM_FLOOR) {
        return Err(Error::Precondition(format!(
            "basis is degenerate: Gram determinant {det:?}"
        )));
    }
    let rhs = DVector::from_fn(k, |i, _| dot(&basis[i], target));
    let sol = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Precondition("Gram system is singular".into()))?;
    Ok(sol.iter().copied().collect())
}

/// Coordinates, in the `ηᵢ` of `s` at `p`, of `η̃_s − (1/(s−1)) Σ_{i<s} η̃ᵢ`
/// where `η̃` are the anti-rotated forms.
pub fn antirotation_coordinates(s: &FStructure, a: &RotationMatrix, p: &Point) -> Result<Vec<f64>> {
    let k = s.s();
    let v = base_vector(k)?;
    let t = antirotate(s, a)?;
    let mut combo = vec![0.0; s.dim()];
    for (i, e) in t.eta.iter().enumerate() {
        for (c, x) in combo.iter_mut().zip(e.values(p)?) {
            *c += v[i] * x;
        }
    }
    let basis: Vec<Vec<f64>> = s
        .eta
        .iter()
        .map(|e| e.values(p))
        .collect::<std::result::Result<_, _>>()?;
    coordinates_in(&combo, &basis)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_maps_to_base_vector() {
        for s in 2..6 {
            let h = h_map(&DMatrix::identity(s, s)).unwrap();
            assert_eq!(h, base_vector(s).unwrap());
        }
    }

    #[test]
    fn expm_of_planar_rotation() {
        let a = 0.7f64;
        let r = expm(&skew_from_params(2, &[a]));
        let (c, s) = (a.cos(), a.sin());
        let want = DMatrix::from_row_slice(2, 2, &[c, s, -s, c]);
        assert!((r - want).abs().max() < 1e-15);
    }

    #[test]
    fn non_skew_rejected() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(dh_identity(&x), Err(Error::Matrix(_))));
    }

    #[test]
    fn target_validation() {
        assert!(TargetVector::new(vec![1.0, -1.0]).is_ok());
        assert!(TargetVector::new(vec![1.0, 1.0]).is_err());
        assert!(TargetVector::new(vec![0.0]).is_err());
    }
}
