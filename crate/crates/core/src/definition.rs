//! Serializable descriptions of structures, one-form lists and maps, with
//! every component given as an expression string.
//!
//! ```json
//! {
//!   "chart": { "dim": 3, "coords": ["x", "y", "z"], "box": [[-1, 1], [-1, 1], [-1, 1]] },
//!   "n": 1,
//!   "s": 1,
//!   "params": { "c": 2 },
//!   "tensors": {
//!     "f":   [["0", "1", "0"], ["-1", "0", "0"], ["0", "y", "0"]],
//!     "xi":  [["0", "0", "c"]],
//!     "eta": [["-y/2", "0", "1/2"]],
//!     "g":   [["0.25 + y^2/4", "0", "-y/4"], ["0.25", "0"], ["0.25"]]
//!   }
//! }
//! ```
//!
//! `f[a][b]` is the `a`-th component of `f(∂_b)`. `g` is given either by its
//! upper triangle (row `a` lists `g_aa … g_aN`) or by full rows, in which case
//! the lower triangle is ignored.

use serde::{Deserialize, Serialize};

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::expr::{parse_params, Expr, Params};
use crate::field::{Metric, OneForm, Tensor11, VectorField};
use crate::structure::FStructure;
use crate::torus::AutomorphismMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartDef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub coords: Vec<String>,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
}

impl ChartDef {
    pub fn build(&self) -> Result<Chart> {
        if let Some(d) = self.dim.filter(|&d| d != self.coords.len()) {
            return Err(Error::Chart(format!(
                "dim = {d} but {} coordinates are named",
                self.coords.len()
            )));
        }
        Chart::new(self.coords.clone(), self.bounds.iter().map(|b| (b[0], b[1])).collect())
    }

    pub fn from_chart(chart: &Chart) -> Self {
        ChartDef {
            dim: Some(chart.dim()),
            coords: chart.coord_names().to_vec(),
            bounds: chart.bounds().iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorDefs {
    pub f: Vec<Vec<String>>,
    pub xi: Vec<Vec<String>>,
    pub eta: Vec<Vec<String>>,
    pub g: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureDef {
    pub chart: ChartDef,
    pub n: usize,
    pub s: usize,
    #[serde(default)]
    pub params: Params,
    pub tensors: TensorDefs,
}

/// A map `φ` given by its coordinate expressions, optionally with `φ⁻¹`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDef {
    pub map: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse: Option<Vec<String>>,
}

/// Expression context: a chart plus named parameters.
pub struct Context<'a> {
    pub chart: &'a Chart,
    pub params: &'a Params,
}

impl<'a> Context<'a> {
    /// Rejects parameters that shadow a coordinate name.
    pub fn new(chart: &'a Chart, params: &'a Params) -> Result<Self> {
        if let Some(name) = params.keys().find(|k| chart.index_of(k).is_some()) {
            return Err(Error::Structure(format!(
                "parameter `{name}` has the same name as a coordinate"
            )));
        }
        if let Some((name, v)) = params.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Structure(format!("parameter `{name}` = {v} is not finite")));
        }
        Ok(Context { chart, params })
    }

    pub fn expr(&self, text: &str, path: &str) -> Result<Expr> {
        parse_params(text, self.chart, self.params).map_err(|source| Error::Definition {
            path: path.to_string(),
            source,
        })
    }

    /// One row of `dim` expressions.
    pub fn row(&self, row: &[String], path: &str) -> Result<Vec<Expr>> {
        let dim = self.chart.dim();
        if row.len() != dim {
            return Err(Error::Structure(format!(
                "{path}: expected {dim} components, got {}",
                row.len()
            )));
        }
        row.iter()
            .enumerate()
            .map(|(i, t)| self.expr(t, &format!("{path}[{i}]")))
            .collect()
    }

    pub fn one_forms(&self, rows: &[Vec<String>], path: &str) -> Result<Vec<OneForm>> {
        rows.iter()
            .enumerate()
            .map(|(i, r)| Ok(OneForm::from_exprs(self.row(r, &format!("{path}[{i}]"))?)))
            .collect()
    }

    pub fn vector_fields(&self, rows: &[Vec<String>], path: &str) -> Result<Vec<VectorField>> {
        rows.iter()
            .enumerate()
            .map(|(i, r)| Ok(VectorField::from_exprs(self.row(r, &format!("{path}[{i}]"))?)))
            .collect()
    }

    pub fn map(&self, def: &MapDef, path: &str) -> Result<AutomorphismMap> {
        let map = self.row(&def.map, &format!("{path}.map"))?;
        let inverse = match &def.inverse {
            Some(inv) => Some(self.row(inv, &format!("{path}.inverse"))?),
            None => None,
        };
        AutomorphismMap::new(self.chart.dim(), map, inverse)
    }
}

impl StructureDef {
    pub fn build(&self) -> Result<FStructure> {
        let chart = self.chart.build()?;
        let ctx = Context::new(&chart, &self.params)?;
        let dim = chart.dim();
        let t = &self.tensors;

        if t.f.len() != dim {
            return Err(Error::Structure(format!(
                "tensors.f: expected {dim} rows, got {}",
                t.f.len()
            )));
        }
        let f =
            t.f.iter()
                .enumerate()
                .map(|(a, r)| ctx.row(r, &format!("tensors.f[{a}]")))
                .collect::<Result<Vec<_>>>()?;

        if t.g.len() != dim {
            return Err(Error::Structure(format!(
                "tensors.g: expected {dim} rows, got {}",
                t.g.len()
            )));
        }
        let full = t.g.iter().all(|r| r.len() == dim);
        let mut upper = Vec::with_capacity(dim);
        for (a, r) in t.g.iter().enumerate() {
            let path = format!("tensors.g[{a}]");
            let want = if full { dim } else { dim - a };
            if r.len() != want {
                return Err(Error::Structure(format!(
                    "{path}: expected {} entries (upper triangle) or {dim} (full rows), got {}",
                    dim - a,
                    r.len()
                )));
            }
            let skip = if full { a } else { 0 };
            let row = r[skip..]
                .iter()
                .enumerate()
                .map(|(k, e)| ctx.expr(e, &format!("{path}[{}]", k + skip)))
                .collect::<Result<Vec<_>>>()?;
            upper.push(row);
        }

        let xi = ctx.vector_fields(&t.xi, "tensors.xi")?;
        let eta = ctx.one_forms(&t.eta, "tensors.eta")?;
        FStructure::new(
            self.n,
            self.s,
            chart,
            Tensor11::from_exprs(f),
            xi,
            eta,
            Metric::from_upper_exprs(upper),
        )
    }
}
