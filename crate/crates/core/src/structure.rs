//! The structure bundle `(f, ξ₁..ξ_s, η₁..η_s, g)` on one chart.

use crate::chart::{Chart, Point};
use crate::dual::{self, Dual};
use crate::error::{Error, EvalError, Result};
use crate::field::{MatrixJet, Metric, OneForm, Tensor11, VectorField};

/// A candidate metric f-structure on a chart of dimension `2n + s`.
///
/// Construction only checks shapes. Whether the tensors satisfy the axioms
/// is decided pointwise by [`verify`](crate::verify::verify).
#[derive(Clone, Debug)]
pub struct FStructure {
    n: usize,
    s: usize,
    chart: Chart,
    pub f: Tensor11,
    pub xi: Vec<VectorField>,
    pub eta: Vec<OneForm>,
    pub g: Metric,
}

/// All structure tensors evaluated (with first partials) at one point.
#[derive(Clone, Debug)]
pub struct StructureJet {
    pub f: MatrixJet,
    pub xi: Vec<Vec<Dual>>,
    pub eta: Vec<Vec<Dual>>,
    pub g: MatrixJet,
}

impl FStructure {
    pub fn new(
        n: usize,
        s: usize,
        chart: Chart,
        f: Tensor11,
        xi: Vec<VectorField>,
        eta: Vec<OneForm>,
        g: Metric,
    ) -> Result<Self> {
        let dim = chart.dim();
        if s == 0 {
            return Err(Error::Structure("s must be positive".into()));
        }
        if dim != 2 * n + s {
            return Err(Error::Structure(format!(
                "chart dimension {dim} != 2n + s = {}",
                2 * n + s
            )));
        }
        if xi.len() != s || eta.len() != s {
            return Err(Error::Structure(format!(
                "expected {s} characteristic fields and one-forms, got {} and {}",
                xi.len(),
                eta.len()
            )));
        }
        let dims_ok =
            f.dim() == dim && g.dim() == dim && xi.iter().all(|x| x.dim() == dim) && eta.iter().all(|e| e.dim() == dim);
        if !dims_ok {
            return Err(Error::Structure(format!(
                "tensor dimensions do not match chart dimension {dim}"
            )));
        }
        Ok(FStructure {
            n,
            s,
            chart,
            f,
            xi,
            eta,
            g,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn jet(&self, p: &Point) -> Result<StructureJet, EvalError> {
        Ok(StructureJet {
            f: self.f.jet(p)?,
            xi: self.xi.iter().map(|x| x.jet(p)).collect::<Result<_, _>>()?,
            eta: self.eta.iter().map(|e| e.jet(p)).collect::<Result<_, _>>()?,
            g: self.g.jet(p)?,
        })
    }

    /// `ω(X, Y) = g(X, fY)` at `p`.
    pub fn fundamental_form(&self, x: &[f64], y: &[f64], p: &Point) -> Result<f64, EvalError> {
        let fy = self.f.apply(p, y)?;
        self.g.apply(p, x, &fy)
    }
}

impl StructureJet {
    pub fn dim(&self) -> usize {
        self.f.size()
    }

    /// Largest absolute component value, used to scale residuals.
    pub fn magnitude(&self) -> f64 {
        let mut m: f64 = 0.0;
        let mut see = |d: &Dual| m = m.max(d.value.abs());
        self.f.entries().iter().for_each(&mut see);
        self.g.entries().iter().for_each(&mut see);
        self.xi.iter().flatten().for_each(&mut see);
        self.eta.iter().flatten().for_each(&mut see);
        m
    }

    pub fn omega(&self, x: &[f64], y: &[f64]) -> f64 {
        self.g.bilinear_values(x, &self.f.apply_values(y))
    }

    pub fn xi_values(&self, i: usize) -> Vec<f64> {
        dual::values(&self.xi[i])
    }

    pub fn eta_values(&self, i: usize) -> Vec<f64> {
        dual::values(&self.eta[i])
    }
}
