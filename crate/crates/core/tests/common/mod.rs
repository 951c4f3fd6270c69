#![allow(dead_code)]

use fcontact::catalog::{self, CatalogEntry, CatalogParams};
use fcontact::deform::{RotationMatrix, ROW_SUM_FLOOR};
use fcontact::rotation_search::{expm, skew_dim, skew_from_params};
use fcontact::{sample_points, FStructure, OneForm, Point};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn entry(name: &str, n: usize, s: usize) -> CatalogEntry {
    catalog::get(name, CatalogParams::new(n, s)).unwrap()
}

pub fn points(s: &FStructure, count: usize) -> Vec<Point> {
    sample_points(s.chart(), count, 42)
}

/// Uniform-ish draw from O(s) ∩ {all row sums nonzero}: exp of a random skew
/// matrix, with a row flipped half the time to reach the other component.
pub fn random_orthogonal(s: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    loop {
        let x: Vec<f64> = (0..skew_dim(s)).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut a = expm(&skew_from_params(s, &x));
        if rng.random_bool(0.5) {
            a.row_mut(0).neg_mut();
        }
        if a.row_iter().all(|r| r.sum().abs() >= ROW_SUM_FLOOR) {
            return a;
        }
    }
}

pub fn random_rotation(s: usize, rng: &mut ChaCha8Rng) -> RotationMatrix {
    RotationMatrix::new(random_orthogonal(s, rng)).unwrap()
}

/// Random constant horizontal θ-forms with coefficients in [−1, 1].
pub fn random_thetas(e: &CatalogEntry, rng: &mut ChaCha8Rng) -> Vec<OneForm> {
    let coeffs: Vec<Vec<f64>> = (0..e.structure.s())
        .map(|_| e.horizontal.iter().map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    e.constant_thetas(&coeffs).unwrap()
}

/// Largest |value difference| of every tensor component (values only).
pub fn value_diff(a: &FStructure, b: &FStructure, pts: &[Point]) -> f64 {
    let mut m: f64 = 0.0;
    for p in pts {
        let (ja, jb) = (a.jet(p).unwrap(), b.jet(p).unwrap());
        m = m.max((ja.f.values() - jb.f.values()).abs().max());
        m = m.max((ja.g.values() - jb.g.values()).abs().max());
        for i in 0..a.s() {
            for (x, y) in ja.xi_values(i).iter().zip(jb.xi_values(i)) {
                m = m.max((x - y).abs());
            }
            for (x, y) in ja.eta_values(i).iter().zip(jb.eta_values(i)) {
                m = m.max((x - y).abs());
            }
        }
    }
    m
}

/// max |ω_a(∂_i, ∂_j) − ω_b(∂_i, ∂_j)| over coordinate pairs.
pub fn omega_diff(a: &FStructure, b: &FStructure, pts: &[Point]) -> f64 {
    let n = a.dim();
    let mut m: f64 = 0.0;
    for p in pts {
        let (ja, jb) = (a.jet(p).unwrap(), b.jet(p).unwrap());
        for i in 0..n {
            for j in 0..n {
                let (mut x, mut y) = (vec![0.0; n], vec![0.0; n]);
                x[i] = 1.0;
                y[j] = 1.0;
                m = m.max((ja.omega(&x, &y) - jb.omega(&x, &y)).abs());
            }
        }
    }
    m
}

/// max |f² + id − Σ η⊗ξ|.
pub fn f_squared_residual(s: &FStructure, pts: &[Point]) -> f64 {
    let n = s.dim();
    let mut m: f64 = 0.0;
    for p in pts {
        let j = s.jet(p).unwrap();
        let f = j.f.values();
        let mut r = &f * &f + DMatrix::identity(n, n);
        for i in 0..s.s() {
            let (xi, eta) = (j.xi_values(i), j.eta_values(i));
            for a in 0..n {
                for b in 0..n {
                    r[(a, b)] -= xi[a] * eta[b];
                }
            }
        }
        m = m.max(r.abs().max());
    }
    m
}
