//! Named reference structures with known automorphisms.
//!
//! All entries live on `ℝ^{2n+s}` with coordinates `x1..xn, y1..yn` followed
//! by the `z` directions, and carry the flat model structure
//! `η^α = ½(dz^α − Σ yᵢ dxᵢ)`, `ξ_α = 2∂_{z^α}`,
//! `g = Σ η^α⊗η^α + ¼ Σ (dxᵢ² + dyᵢ²)`, with `f(∂_{xᵢ}) = −∂_{yᵢ}` and
//! `f(∂_{yᵢ}) = ∂_{xᵢ} + yᵢ Σ ∂_{z^α}`.

use serde::{Deserialize, Serialize};

use crate::definition::{ChartDef, Context, MapDef, StructureDef, TensorDefs};
use crate::error::{Error, Result};
use crate::expr::Params;
use crate::field::OneForm;
use crate::structure::FStructure;
use crate::torus::{lift, AutomorphismMap};
use crate::verify::Level;

pub const MAX_N: usize = 4;
pub const MAX_S: usize = 4;

/// Angle of the catalog's `(x, y)`-plane rotation.
pub const ROTATION_ANGLE: f64 = std::f64::consts::FRAC_PI_6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogParams {
    pub n: usize,
    /// Number of characteristic directions. For `lifted-k` this is `k + 1`.
    pub s: usize,
}

impl CatalogParams {
    pub fn new(n: usize, s: usize) -> Self {
        CatalogParams { n, s }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogInfo {
    pub name: String,
    pub description: String,
    pub n: [usize; 2],
    pub s: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct NamedAutomorphism {
    pub name: String,
    pub def: MapDef,
    pub map: AutomorphismMap,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub params: CatalogParams,
    /// Level the structure is known to reach.
    pub level: Level,
    pub structure: FStructure,
    /// Expression form, when the structure has one.
    pub definition: Option<StructureDef>,
    pub automorphisms: Vec<NamedAutomorphism>,
    /// Indices of the `x` and `y` coordinates. Constant combinations of their
    /// differentials are closed and basic.
    pub horizontal: Vec<usize>,
}

impl CatalogEntry {
    pub fn automorphism(&self, name: &str) -> Option<&NamedAutomorphism> {
        self.automorphisms.iter().find(|a| a.name == name)
    }

    /// `s` constant horizontal forms; `coeffs[i][k]` multiplies the
    /// differential of `horizontal[k]` in θᵢ.
    pub fn constant_thetas(&self, coeffs: &[Vec<f64>]) -> Result<Vec<OneForm>> {
        let dim = self.structure.dim();
        coeffs
            .iter()
            .map(|row| {
                if row.len() != self.horizontal.len() {
                    return Err(Error::Catalog(format!(
                        "expected {} horizontal coefficients, got {}",
                        self.horizontal.len(),
                        row.len()
                    )));
                }
                let mut c = vec![0.0; dim];
                for (&i, &k) in self.horizontal.iter().zip(row) {
                    c[i] = k;
                }
                Ok(OneForm::constant(c))
            })
            .collect()
    }
}

pub fn list() -> Vec<CatalogInfo> {
    vec![
        CatalogInfo {
            name: "sasakian-model".into(),
            description: "Heisenberg-type Sasakian structure on R^{2n+1}".into(),
            n: [1, MAX_N],
            s: [1, 1],
        },
        CatalogInfo {
            name: "s-model".into(),
            description: "flat S-structure on R^{2n+s} with s central directions".into(),
            n: [0, MAX_N],
            s: [1, MAX_S],
        },
        CatalogInfo {
            name: "lifted-k".into(),
            description: "sasakian-model lifted k = s - 1 times to R^{2n+1} x R^k".into(),
            n: [1, MAX_N],
            s: [2, MAX_S],
        },
    ]
}

pub fn get(name: &str, params: CatalogParams) -> Result<CatalogEntry> {
    let info = list()
        .into_iter()
        .find(|i| i.name == name)
        .ok_or_else(|| Error::Catalog(format!("unknown entry `{name}`")))?;
    let CatalogParams { n, s } = params;
    if !(info.n[0]..=info.n[1]).contains(&n) || !(info.s[0]..=info.s[1]).contains(&s) {
        return Err(Error::Catalog(format!(
            "`{name}` needs n in {}..={} and s in {}..={}, got n = {n}, s = {s}",
            info.n[0], info.n[1], info.s[0], info.s[1]
        )));
    }
    match name {
        "sasakian-model" => model(name, n, 1, params),
        "s-model" => model(name, n, s, params),
        _ => lifted(n, s - 1, params),
    }
}

fn z_names(s: usize) -> Vec<String> {
    if s == 1 {
        vec!["z".into()]
    } else {
        (1..=s).map(|a| format!("z{a}")).collect()
    }
}

fn model_def(n: usize, s: usize) -> StructureDef {
    let dim = 2 * n + s;
    let mut coords: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    coords.extend((1..=n).map(|i| format!("y{i}")));
    coords.extend(z_names(s));
    let (x, y, z) = (|i: usize| i, |i: usize| n + i, |a: usize| 2 * n + a);
    let zero = || vec![vec!["0".to_string(); dim]; dim];

    let mut f = zero();
    for i in 0..n {
        f[y(i)][x(i)] = "-1".into();
        f[x(i)][y(i)] = "1".into();
        for a in 0..s {
            f[z(a)][y(i)] = format!("y{}", i + 1);
        }
    }

    let xi = (0..s)
        .map(|a| {
            let mut r = vec!["0".to_string(); dim];
            r[z(a)] = "c".into();
            r
        })
        .collect();
    let eta = (0..s)
        .map(|a| {
            let mut r = vec!["0".to_string(); dim];
            for i in 0..n {
                r[x(i)] = format!("-y{}/2", i + 1);
            }
            r[z(a)] = "1/2".into();
            r
        })
        .collect();

    let mut g = zero();
    for i in 0..n {
        for j in i..n {
            let yy = if i == j {
                format!("y{}^2", i + 1)
            } else {
                format!("y{}*y{}", i + 1, j + 1)
            };
            g[x(i)][x(j)] = if i == j {
                format!("kappa + {s}*{yy}/4")
            } else {
                format!("{s}*{yy}/4")
            };
        }
        for a in 0..s {
            g[x(i)][z(a)] = format!("-y{}/4", i + 1);
        }
        g[y(i)][y(i)] = "kappa".into();
    }
    for a in 0..s {
        g[z(a)][z(a)] = "1/4".into();
    }
    let g = g.into_iter().enumerate().map(|(a, r)| r[a..].to_vec()).collect();

    StructureDef {
        chart: ChartDef {
            dim: Some(dim),
            coords,
            bounds: vec![[-1.0, 1.0]; dim],
        },
        n,
        s,
        params: Params::from([("c".to_string(), 2.0), ("kappa".to_string(), 0.25)]),
        tensors: TensorDefs { f, xi, eta, g },
    }
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

/// `lhs ± |k| rhs`, with `rhs` omitted when empty.
fn signed(lhs: &str, k: f64, rhs: &str) -> String {
    let op = if k < 0.0 { '-' } else { '+' };
    match rhs {
        "" => format!("{lhs} {op} {}", num(k.abs())),
        _ => format!("{lhs} {op} {} * {rhs}", num(k.abs())),
    }
}

/// Automorphism definitions of the model on `2n + s` base coordinates,
/// extended by the identity on `extra` trailing coordinates.
fn model_maps(coords: &[String], n: usize, s: usize) -> Vec<(String, MapDef)> {
    let id: Vec<String> = coords.to_vec();
    let zs = 2 * n..2 * n + s;

    let shift = |k: f64| -> Vec<String> {
        let mut m = id.clone();
        for a in zs.clone() {
            m[a] = signed(&coords[a], k, "");
        }
        m
    };

    let rotate = |angle: f64| -> Vec<String> {
        let (sn, cs) = angle.sin_cos();
        let mut m = id.clone();
        let mut corr = Vec::new();
        for i in 0..n {
            let (x, y) = (&coords[i], &coords[n + i]);
            m[i] = signed(&format!("{} * {x}", num(cs)), -sn, y);
            m[n + i] = signed(&format!("{} * {y}", num(cs)), sn, x);
            corr.push((sn * cs / 2.0, format!("({x}^2 - {y}^2)")));
            corr.push((-sn * sn, format!("{x} * {y}")));
        }
        for a in zs.clone() {
            m[a] = corr.iter().fold(coords[a].clone(), |acc, (k, t)| signed(&acc, *k, t));
        }
        m
    };

    vec![
        (
            "z-translation".into(),
            MapDef {
                map: shift(1.0),
                inverse: Some(shift(-1.0)),
            },
        ),
        (
            "xy-rotation".into(),
            MapDef {
                map: rotate(ROTATION_ANGLE),
                inverse: Some(rotate(-ROTATION_ANGLE)),
            },
        ),
    ]
}

fn build_maps(s: &FStructure, params: &Params, defs: Vec<(String, MapDef)>) -> Result<Vec<NamedAutomorphism>> {
    let ctx = Context::new(s.chart(), params)?;
    defs.into_iter()
        .map(|(name, def)| {
            let map = ctx.map(&def, &name)?;
            Ok(NamedAutomorphism { name, def, map })
        })
        .collect()
}

fn model(name: &str, n: usize, s: usize, params: CatalogParams) -> Result<CatalogEntry> {
    let def = model_def(n, s);
    let structure = def.build()?;
    let maps = model_maps(&def.chart.coords, n, s);
    let automorphisms = build_maps(&structure, &Params::new(), maps)?;
    Ok(CatalogEntry {
        name: name.into(),
        params,
        level: Level::S,
        structure,
        definition: Some(def),
        automorphisms,
        horizontal: (0..2 * n).collect(),
    })
}

fn lifted(n: usize, k: usize, params: CatalogParams) -> Result<CatalogEntry> {
    let mut structure = model_def(n, 1).build()?;
    for _ in 0..k {
        structure = lift(&structure)?;
    }
    let coords = structure.chart().coord_names().to_vec();
    let mut maps = model_maps(&coords, n, 1);
    for (_, m) in &mut maps {
        for i in 2 * n + 1..coords.len() {
            m.map[i] = coords[i].clone();
            if let Some(inv) = &mut m.inverse {
                inv[i] = coords[i].clone();
            }
        }
    }
    let automorphisms = build_maps(&structure, &Params::new(), maps)?;
    Ok(CatalogEntry {
        name: "lifted-k".into(),
        params,
        level: Level::S,
        structure,
        definition: None,
        automorphisms,
        horizontal: (0..2 * n).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert!(get("s-model", CatalogParams::new(2, 3)).is_ok());
        assert!(get("s-model", CatalogParams::new(5, 1)).is_err());
        assert!(get("sasakian-model", CatalogParams::new(1, 2)).is_err());
        assert!(get("lifted-k", CatalogParams::new(1, 1)).is_err());
        assert!(get("nope", CatalogParams::new(1, 1)).is_err());
    }

    #[test]
    fn lifted_chart_names() {
        let e = get("lifted-k", CatalogParams::new(1, 4)).unwrap();
        assert_eq!(e.structure.chart().coord_names(), &["x1", "y1", "z", "t1", "t2", "t"]);
        assert_eq!(e.structure.s(), 4);
    }
}
