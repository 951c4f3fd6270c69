//! Pointwise verification of the axiom hierarchy
//! metric f-manifold → metric f-contact → metric f-K-contact → S-manifold.
//!
//! Every axiom is evaluated at every sample point on the coordinate frame.
//! A residual passes at a point when `raw ≤ tol · (1 + m)`, where `m` is the
//! largest structure component magnitude at that point. Floor checks
//! (positive definiteness, independence of the ηᵢ) pass only with a zero
//! residual. All residuals are reported, even after the first failure.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::calculus::{bracket_jet, coordinate_jet, d_oneform_jet, lie_metric_jet, lie_t11_jet, nijenhuis_jet};
use crate::chart::Point;
use crate::dual::Dual;
use crate::structure::{FStructure, StructureJet};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const EIGEN_FLOOR: f64 = 1e-10;
pub const GRAM_FLOOR: f64 = 1e-10;
pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    None,
    MetricF,
    FContact,
    FKContact,
    S,
}

impl Level {
    pub const ALL: [Level; 5] = [Level::None, Level::MetricF, Level::FContact, Level::FKContact, Level::S];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::None => "none",
            Level::MetricF => "metric-f",
            Level::FContact => "f-contact",
            Level::FKContact => "f-k-contact",
            Level::S => "s",
        }
    }

    pub fn parse(s: &str) -> Option<Level> {
        Level::ALL.into_iter().find(|l| l.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    NotEvaluated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Scaled,
    Floor,
    FiniteDifference,
}

/// Result of one axiom over all samples. `max_residual` is the raw maximum;
/// `max_scaled` is the maximum of the quantity compared against the tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomResult {
    pub name: String,
    pub level: Level,
    pub max_residual: Option<f64>,
    pub max_scaled: Option<f64>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub requested: Level,
    pub level: Level,
    pub passed: bool,
    pub samples: usize,
    pub tolerance: f64,
    pub axioms: Vec<AxiomResult>,
}

impl VerificationReport {
    pub fn axiom(&self, name: &str) -> Option<&AxiomResult> {
        self.axioms.iter().find(|a| a.name == name)
    }

    /// Largest scaled residual among axioms that belong to levels up to `level`.
    pub fn max_scaled(&self, level: Level) -> f64 {
        self.axioms
            .iter()
            .filter(|a| a.level <= level)
            .filter_map(|a| a.max_scaled)
            .fold(0.0, f64::max)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.axioms
            .iter()
            .filter(|a| a.status != Status::Pass)
            .map(|a| a.name.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub level: Level,
    pub tol: f64,
    pub fd_check: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            level: Level::S,
            tol: DEFAULT_TOLERANCE,
            fd_check: false,
        }
    }
}

impl VerifyOptions {
    pub fn at(level: Level) -> Self {
        VerifyOptions {
            level,
            ..Default::default()
        }
    }
}

struct Acc {
    name: &'static str,
    level: Level,
    kind: Kind,
    raw: f64,
    scaled: f64,
    failed: bool,
    error: Option<String>,
}

impl Acc {
    fn new(name: &'static str, level: Level, kind: Kind) -> Self {
        Acc {
            name,
            level,
            kind,
            raw: 0.0,
            scaled: 0.0,
            failed: false,
            error: None,
        }
    }

    fn record(&mut self, raw: f64, scale: f64, tol: f64) {
        let raw = if raw.is_nan() { f64::INFINITY } else { raw };
        self.raw = self.raw.max(raw);
        match self.kind {
            Kind::Scaled => {
                self.scaled = self.scaled.max(raw / scale);
                if raw > tol * scale {
                    self.failed = true;
                }
            }
            Kind::Floor => {
                self.scaled = self.scaled.max(raw);
                if raw > 0.0 {
                    self.failed = true;
                }
            }
            Kind::FiniteDifference => {
                // raw is already relative per component here
                self.scaled = self.scaled.max(raw);
                if raw > FD_TOLERANCE {
                    self.failed = true;
                }
            }
        }
    }

    fn finish(self) -> AxiomResult {
        let status = if self.error.is_some() {
            Status::NotEvaluated
        } else if self.failed {
            Status::Fail
        } else {
            Status::Pass
        };
        AxiomResult {
            name: self.name.to_string(),
            level: self.level,
            max_residual: Some(self.raw),
            max_scaled: Some(self.scaled),
            status,
            note: self.error,
        }
    }
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter()
        .fold(0.0, |m, x| m.max(if x.is_nan() { f64::INFINITY } else { x.abs() }))
}

fn sym_eigen_min(m: nalgebra::DMatrix<f64>) -> f64 {
    let sym = (&m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Residuals of every axiom at one point, keyed by axiom name.
fn point_residuals(j: &StructureJet, level: Level) -> Vec<(&'static str, f64)> {
    let n = j.dim();
    let s = j.xi.len();
    let mut out = Vec::new();
    let e: Vec<Vec<Dual>> = (0..n).map(|a| coordinate_jet(n, a)).collect();
    let xi: Vec<Vec<f64>> = (0..s).map(|i| j.xi_values(i)).collect();
    let eta: Vec<Vec<f64>> = (0..s).map(|i| j.eta_values(i)).collect();
    let dotv = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let f = j.f.values();
    let g = j.g.values();

    if level >= Level::MetricF {
        let mut dual_res: f64 = 0.0;
        for i in 0..s {
            for k in 0..s {
                let d = if i == k { 1.0 } else { 0.0 };
                dual_res = dual_res.max((dotv(&eta[i], &xi[k]) - d).abs());
            }
        }
        out.push(("eta_xi_duality", dual_res));

        out.push(("f_xi_zero", max_abs(xi.iter().flat_map(|x| j.f.apply_values(x)))));

        // f² = −id + Σ ηᵢ ⊗ ξᵢ
        let f2 = &f * &f;
        let mut sq: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let mut rhs = if a == b { -1.0 } else { 0.0 };
                for i in 0..s {
                    rhs += xi[i][a] * eta[i][b];
                }
                sq = sq.max((f2[(a, b)] - rhs).abs());
            }
        }
        out.push(("f_squared", sq));

        // ηᵢ(f ∂_b) = 0: the image of f lies in ∩ ker ηᵢ
        let mut kern: f64 = 0.0;
        for eta_i in &eta {
            for b in 0..n {
                kern = kern.max((0..n).map(|a| eta_i[a] * f[(a, b)]).sum::<f64>().abs());
            }
        }
        out.push(("eta_f_zero", kern));

        // g(fX, fY) = g(X, Y) − Σ ηᵢ(X) ηᵢ(Y)
        let ftgf = f.transpose() * &g * &f;
        let mut comp: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let rhs = g[(a, b)] - (0..s).map(|i| eta[i][a] * eta[i][b]).sum::<f64>();
                comp = comp.max((ftgf[(a, b)] - rhs).abs());
            }
        }
        out.push(("compatibility", comp));

        out.push((
            "metric_symmetric",
            max_abs(
                (0..n)
                    .flat_map(|a| (0..n).map(move |b| (a, b)))
                    .map(|(a, b)| g[(a, b)] - g[(b, a)]),
            ),
        ));

        let lam = sym_eigen_min(g.clone());
        out.push(("metric_positive_definite", (EIGEN_FLOOR - lam).max(0.0)));

        let gram = nalgebra::DMatrix::from_fn(s, s, |a, b| dotv(&eta[a], &eta[b]));
        out.push(("eta_independent", (GRAM_FLOOR - gram.determinant()).max(0.0)));
    }

    if level >= Level::FContact {
        let mut contact: f64 = 0.0;
        for a in 0..n {
            for b in (a + 1)..n {
                let omega = j.omega(&dual_values(&e[a]), &dual_values(&e[b]));
                for eta_i in &j.eta {
                    contact = contact.max((d_oneform_jet(eta_i, &e[a], &e[b]) - omega).abs());
                }
            }
        }
        out.push(("contact", contact));

        let mut comm: f64 = 0.0;
        for i in 0..s {
            for k in (i + 1)..s {
                comm = comm.max(max_abs(bracket_jet(&j.xi[i], &j.xi[k])));
            }
        }
        out.push(("xi_commute", comm));
    }

    if level >= Level::FKContact {
        let mut kg: f64 = 0.0;
        let mut kf: f64 = 0.0;
        for x in &j.xi {
            for a in 0..n {
                for b in a..n {
                    kg = kg.max(lie_metric_jet(x, &j.g, &e[a], &e[b]).abs());
                }
                kf = kf.max(max_abs(lie_t11_jet(x, &j.f, &e[a])));
            }
        }
        out.push(("killing_metric", kg));
        out.push(("killing_f", kf));
    }

    if level >= Level::S {
        let mut norm: f64 = 0.0;
        for a in 0..n {
            for b in (a + 1)..n {
                let mut v = nijenhuis_jet(&j.f, &e[a], &e[b]);
                for (eta_i, xi_i) in j.eta.iter().zip(&xi) {
                    let d = d_oneform_jet(eta_i, &e[a], &e[b]);
                    for k in 0..n {
                        v[k] += 2.0 * d * xi_i[k];
                    }
                }
                norm = norm.max(max_abs(v));
            }
        }
        out.push(("normality", norm));
    }
    out
}

fn dual_values(v: &[Dual]) -> Vec<f64> {
    crate::dual::values(v)
}

const AXIOMS: [(&str, Level, Kind); 14] = [
    ("eta_xi_duality", Level::MetricF, Kind::Scaled),
    ("f_xi_zero", Level::MetricF, Kind::Scaled),
    ("f_squared", Level::MetricF, Kind::Scaled),
    ("eta_f_zero", Level::MetricF, Kind::Scaled),
    ("compatibility", Level::MetricF, Kind::Scaled),
    ("metric_symmetric", Level::MetricF, Kind::Scaled),
    ("metric_positive_definite", Level::MetricF, Kind::Floor),
    ("eta_independent", Level::MetricF, Kind::Floor),
    ("contact", Level::FContact, Kind::Scaled),
    ("xi_commute", Level::FContact, Kind::Scaled),
    ("killing_metric", Level::FKContact, Kind::Scaled),
    ("killing_f", Level::FKContact, Kind::Scaled),
    ("normality", Level::S, Kind::Scaled),
    ("fd_partials", Level::None, Kind::FiniteDifference),
];

fn flatten(j: &StructureJet) -> Vec<&Dual> {
    j.f.entries()
        .iter()
        .chain(j.xi.iter().flatten())
        .chain(j.eta.iter().flatten())
        .chain(j.g.entries())
        .collect()
}

/// Largest `|AD − FD| / (1 + |value|)` over all structure component partials
/// at `p`, using central differences with step [`FD_STEP`].
pub fn fd_residual(s: &FStructure, p: &Point) -> Result<(f64, f64), crate::error::EvalError> {
    let base = s.jet(p)?;
    let comps = flatten(&base);
    let mut raw: f64 = 0.0;
    let mut rel: f64 = 0.0;
    for k in 0..p.dim() {
        let mut plus = p.clone();
        let mut minus = p.clone();
        plus.0[k] += FD_STEP;
        minus.0[k] -= FD_STEP;
        let jp = s.jet(&plus)?;
        let jm = s.jet(&minus)?;
        for ((c, up), dn) in comps.iter().zip(flatten(&jp)).zip(flatten(&jm)) {
            let fd = (up.value - dn.value) / (2.0 * FD_STEP);
            let err = (c.grad[k] - fd).abs();
            raw = raw.max(err);
            rel = rel.max(err / (1.0 + c.value.abs()));
        }
    }
    Ok((raw, rel))
}

/// Verify `s` at the given points up to `opts.level`.
pub fn verify(s: &FStructure, points: &[Point], opts: &VerifyOptions) -> VerificationReport {
    let mut accs: Vec<Acc> = AXIOMS
        .iter()
        .filter(|(_, lvl, kind)| {
            if *kind == Kind::FiniteDifference {
                opts.fd_check
            } else {
                *lvl <= opts.level
            }
        })
        .map(|(name, lvl, kind)| Acc::new(name, *lvl, *kind))
        .collect();

    for p in points {
        let jet = match s.jet(p) {
            Ok(j) => j,
            Err(e) => {
                for acc in &mut accs {
                    acc.error
                        .get_or_insert_with(|| format!("evaluation failed at {:?}: {e}", p.coords()));
                }
                continue;
            }
        };
        let scale = 1.0 + jet.magnitude();
        for (name, raw) in point_residuals(&jet, opts.level) {
            if let Some(acc) = accs.iter_mut().find(|a| a.name == name) {
                acc.record(raw, scale, opts.tol);
            }
        }
        if opts.fd_check {
            let acc = accs
                .iter_mut()
                .find(|a| a.kind == Kind::FiniteDifference)
                .expect("fd accumulator");
            match fd_residual(s, p) {
                Ok((raw, rel)) => {
                    acc.record(rel, 1.0, opts.tol);
                    acc.raw = acc.raw.max(raw);
                }
                Err(e) => {
                    acc.error
                        .get_or_insert_with(|| format!("finite differences failed near {:?}: {e}", p.coords()));
                }
            }
        }
    }

    let axioms: Vec<AxiomResult> = accs.into_iter().map(Acc::finish).collect();
    let group_ok = |lvl: Level| {
        axioms
            .iter()
            .filter(|a| a.level == lvl)
            .all(|a| a.status == Status::Pass)
    };
    let mut level = Level::None;
    for lvl in [Level::MetricF, Level::FContact, Level::FKContact, Level::S] {
        if lvl > opts.level || !group_ok(lvl) {
            break;
        }
        level = lvl;
    }
    let fd_ok = axioms
        .iter()
        .filter(|a| a.level == Level::None)
        .all(|a| a.status == Status::Pass);
    VerificationReport {
        requested: opts.level,
        level,
        passed: level >= opts.level && fd_ok && !points.is_empty(),
        samples: points.len(),
        tolerance: opts.tol,
        axioms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{sample_points, Chart};
    use crate::field::{Metric, OneForm, Tensor11, VectorField};

    fn flat_line() -> FStructure {
        let chart = Chart::unit_box(["x1"]).unwrap();
        FStructure::new(
            0,
            1,
            chart,
            Tensor11::zero(1),
            vec![VectorField::coordinate(1, 0)],
            vec![OneForm::constant(vec![1.0])],
            Metric::euclidean(1),
        )
        .unwrap()
    }

    #[test]
    fn degenerate_line_reaches_s() {
        let s = flat_line();
        let pts = sample_points(s.chart(), 16, 1);
        let r = verify(&s, &pts, &VerifyOptions::default());
        assert_eq!(r.level, Level::S);
        assert!(r.passed);
        assert_eq!(r.max_scaled(Level::S), 0.0);
        assert_eq!(r.axioms.len(), 13);
    }

    #[test]
    fn scaled_xi_breaks_duality() {
        let mut s = flat_line();
        s.xi = vec![VectorField::constant(vec![2.0])];
        let pts = sample_points(s.chart(), 8, 1);
        let r = verify(&s, &pts, &VerifyOptions::default());
        let d = r.axiom("eta_xi_duality").unwrap();
        assert_eq!(d.max_residual, Some(1.0));
        assert_eq!(d.status, Status::Fail);
        assert_eq!(r.level, Level::None);
        assert!(!r.passed);
        // later axioms are still reported
        assert!(r.axiom("normality").is_some());
    }

    #[test]
    fn evaluation_errors_mark_not_evaluated() {
        let chart = Chart::unit_box(["x1"]).unwrap();
        let e = crate::expr::parse("1/x1", &chart).unwrap();
        let mut s = flat_line();
        s.eta = vec![OneForm::from_exprs(vec![e])];
        let pts = vec![Point::new(vec![0.0]), Point::new(vec![0.5])];
        let r = verify(&s, &pts, &VerifyOptions::default());
        assert!(r.axioms.iter().all(|a| a.status == Status::NotEvaluated));
        assert_eq!(r.level, Level::None);
    }

    #[test]
    fn level_names_roundtrip() {
        for l in Level::ALL {
            assert_eq!(Level::parse(l.as_str()), Some(l));
        }
        assert_eq!(Level::parse("S"), Some(Level::S));
    }
}
