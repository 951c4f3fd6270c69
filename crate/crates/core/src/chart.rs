//! Coordinate charts and deterministic sample points.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLES: usize = 64;
pub const DEFAULT_SEED: u64 = 42;

/// An open box in ℝᴺ with named coordinates. The box is the sampling domain;
/// component functions may be evaluated anywhere they are defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    coords: Vec<String>,
    bounds: Vec<(f64, f64)>,
}

impl Chart {
    pub fn new(coords: Vec<String>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Chart("dimension must be at least 1".into()));
        }
        if coords.len() != bounds.len() {
            return Err(Error::Chart(format!(
                "{} coordinate names but {} intervals",
                coords.len(),
                bounds.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &coords {
            if !seen.insert(name.as_str()) {
                return Err(Error::Chart(format!("duplicate coordinate `{name}`")));
            }
            if !is_identifier(name) {
                return Err(Error::Chart(format!("`{name}` is not an identifier")));
            }
        }
        for (name, &(lo, hi)) in coords.iter().zip(&bounds) {
            if !(lo.is_finite() && hi.is_finite()) || hi - lo <= 1e-12 * (1.0 + lo.abs()) {
                return Err(Error::Chart(format!(
                    "interval [{lo}, {hi}] for `{name}` is degenerate"
                )));
            }
        }
        Ok(Chart { coords, bounds })
    }

    /// The box `[-1, 1]ᴺ` with the given coordinate names.
    pub fn unit_box<S: Into<String>>(coords: impl IntoIterator<Item = S>) -> Result<Self> {
        let coords: Vec<String> = coords.into_iter().map(Into::into).collect();
        let bounds = vec![(-1.0, 1.0); coords.len()];
        Chart::new(coords, bounds)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coord_names(&self) -> &[String] {
        &self.coords
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim() && p.0.iter().zip(&self.bounds).all(|(x, (lo, hi))| lo <= x && x <= hi)
    }

    /// Append one coordinate.
    pub fn with_coordinate(&self, name: &str, bounds: (f64, f64)) -> Result<Chart> {
        let mut coords = self.coords.clone();
        let mut b = self.bounds.clone();
        coords.push(name.to_string());
        b.push(bounds);
        Chart::new(coords, b)
    }

    /// Drop the last coordinate.
    pub fn without_last(&self) -> Result<Chart> {
        let k = self.dim() - 1;
        Chart::new(self.coords[..k].to_vec(), self.bounds[..k].to_vec())
    }

    pub(crate) fn rename(&mut self, index: usize, name: String) {
        self.coords[index] = name;
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A point in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

/// `count` distinct points drawn uniformly from the chart box. The sequence
/// depends only on the chart and `seed`.
pub fn sample_points(chart: &Chart, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Point> = Vec::with_capacity(count);
    let mut seen = HashSet::new();
    while out.len() < count {
        let coords: Vec<f64> = chart.bounds.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
        let key: Vec<u64> = coords.iter().map(|x| x.to_bits()).collect();
        if seen.insert(key) {
            out.push(Point(coords));
        }
    }
    out
}
