//! Componentwise comparison of two structures at sample points.

use serde::{Deserialize, Serialize};

use crate::chart::Point;
use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::structure::FStructure;

/// Largest absolute difference, over values and first partials, of each
/// structure tensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureDiff {
    pub f: f64,
    pub xi: f64,
    pub eta: f64,
    pub g: f64,
    pub max: f64,
}

fn diff<'a>(a: impl IntoIterator<Item = &'a Dual>, b: impl IntoIterator<Item = &'a Dual>) -> f64 {
    let mut m: f64 = 0.0;
    for (x, y) in a.into_iter().zip(b) {
        m = m.max((x.value - y.value).abs());
        for (gx, gy) in x.grad.iter().zip(&y.grad) {
            m = m.max((gx - gy).abs());
        }
    }
    if m.is_nan() {
        f64::INFINITY
    } else {
        m
    }
}

pub fn compare_structures(a: &FStructure, b: &FStructure, points: &[Point]) -> Result<StructureDiff> {
    if a.dim() != b.dim() || a.s() != b.s() {
        return Err(Error::Structure(format!(
            "cannot compare structures of shape (dim {}, s {}) and (dim {}, s {})",
            a.dim(),
            a.s(),
            b.dim(),
            b.s()
        )));
    }
    let mut d = StructureDiff {
        f: 0.0,
        xi: 0.0,
        eta: 0.0,
        g: 0.0,
        max: 0.0,
    };
    for p in points {
        let ja = a.jet(p)?;
        let jb = b.jet(p)?;
        d.f = d.f.max(diff(ja.f.entries(), jb.f.entries()));
        d.g = d.g.max(diff(ja.g.entries(), jb.g.entries()));
        d.xi = d.xi.max(diff(ja.xi.iter().flatten(), jb.xi.iter().flatten()));
        d.eta = d.eta.max(diff(ja.eta.iter().flatten(), jb.eta.iter().flatten()));
    }
    d.max = d.f.max(d.g).max(d.xi).max(d.eta);
    Ok(d)
}
