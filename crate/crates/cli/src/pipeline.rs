//! Validation and execution of pipelines.

use std::io::Write;
use std::path::Path;

use fcontact::compare::compare_structures;
use fcontact::definition::Context;
use fcontact::deform::{antirotate, rotate, type2, RotationMatrix};
use fcontact::expr::Params;
use fcontact::rotation_search::{antirotation_coordinates, solve_rotation, SolveOptions, TargetVector};
use fcontact::torus::{check_deck_invariance, lift, lifted_chart, slice, AutomorphismMap};
use fcontact::verify::{verify, VerifyOptions};
use fcontact::{sample_points, Chart, FStructure, OneForm};
use serde_json::{json, Value};

use crate::config::{
    build_structure, load_catalog, load_structure_file, read_document, ConfigError, Document, Loaded, PipelineConfig,
    Sampling, Source, Step, Tolerances,
};
use crate::output::emit;

/// Overrides from the command line; they win over the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub fd_check: bool,
}

/// A step with all of its parameters parsed and checked.
enum Action {
    Verify(VerifyOptions),
    Rotate(RotationMatrix),
    Antirotate(RotationMatrix),
    Type2(Vec<OneForm>),
    Lift,
    Slice,
    CheckDeck {
        map: AutomorphismMap,
        label: String,
        t0: f64,
    },
    SearchRotation {
        target: TargetVector,
        apply: bool,
    },
    CompareToInput,
}

pub struct Plan {
    input: FStructure,
    actions: Vec<(&'static str, Action)>,
    sampling: Sampling,
    tol: Tolerances,
}

pub fn load_pipeline(path: &Path, overrides: &Overrides) -> Result<Plan, ConfigError> {
    let doc: Document<PipelineConfig> = read_document(path)?;
    let cfg = &doc.value;
    let base = path.parent().unwrap_or(Path::new("."));
    let loaded = match &cfg.source {
        Source::Catalog(c) => load_catalog(c)?,
        Source::File(p) => load_structure_file(&base.join(p))?,
        Source::Structure(def) => build_structure(&doc, def, "source.structure.")?,
    };
    let parts = Parts {
        steps: &cfg.steps,
        steps_path: "steps",
        sampling: cfg.sampling,
        tol: cfg.tolerance,
        params: &cfg.params,
    };
    plan(loaded, &doc, parts, overrides)
}

/// Everything a plan needs besides the starting structure.
pub struct Parts<'a> {
    pub steps: &'a [Step],
    /// Location of the step list inside its document, for error messages.
    pub steps_path: &'a str,
    pub sampling: Sampling,
    pub tol: Tolerances,
    pub params: &'a Params,
}

pub fn plan<T>(
    loaded: Loaded,
    doc: &Document<T>,
    parts: Parts<'_>,
    overrides: &Overrides,
) -> Result<Plan, ConfigError> {
    let mut sampling = parts.sampling;
    sampling.count = overrides.samples.unwrap_or(sampling.count);
    sampling.seed = overrides.seed.unwrap_or(sampling.seed);
    if sampling.count == 0 {
        return Err(ConfigError::new(format!(
            "{}: sampling.count must be positive",
            doc.file
        )));
    }
    let mut tol = parts.tol;
    tol.verify = overrides.tol.unwrap_or(tol.verify);
    let mut params = loaded.params.clone();
    params.extend(parts.params.clone());
    let actions = validate(doc, parts.steps_path, &loaded, parts.steps, &params, &tol, overrides)?;
    Ok(Plan {
        input: loaded.structure,
        actions,
        sampling,
        tol,
    })
}

/// Type-checks every step against the chart it will see, before anything runs.
fn validate<T>(
    doc: &Document<T>,
    steps_path: &str,
    loaded: &Loaded,
    steps: &[Step],
    params: &Params,
    tol: &Tolerances,
    overrides: &Overrides,
) -> Result<Vec<(&'static str, Action)>, ConfigError> {
    let mut chart: Chart = loaded.structure.chart().clone();
    let mut s = loaded.structure.s();
    let input_chart = chart.clone();
    let input_s = s;
    let mut out = Vec::with_capacity(steps.len());
    for (i, step) in steps.iter().enumerate() {
        let name = step.name();
        let prefix = format!("{steps_path}[{i}].{name}.");
        let fail = |msg: String| ConfigError::new(format!("{}: {steps_path}[{i}] ({name}): {msg}", doc.file));
        let matrix = |rows: &[Vec<f64>]| -> Result<RotationMatrix, ConfigError> {
            let a = RotationMatrix::from_rows(rows).map_err(|e| fail(e.to_string()))?;
            if a.size() != s {
                return Err(fail(format!(
                    "matrix is {0}×{0} but the structure has s = {s}",
                    a.size()
                )));
            }
            Ok(a)
        };
        let action = match step {
            Step::Verify(v) => Action::Verify(VerifyOptions {
                level: v.level,
                tol: tol.verify,
                fd_check: v.fd_check || overrides.fd_check,
            }),
            Step::Rotate(m) => Action::Rotate(matrix(&m.a)?),
            Step::Antirotate(m) => Action::Antirotate(matrix(&m.a)?),
            Step::Type2(t) => {
                if t.theta.len() != s {
                    return Err(fail(format!("expected {s} θ-forms, got {}", t.theta.len())));
                }
                let ctx = Context::new(&chart, params).map_err(|e| doc.error("", e))?;
                Action::Type2(
                    ctx.one_forms(&t.theta, &format!("{prefix}theta"))
                        .map_err(|e| doc.error("", e))?,
                )
            }
            Step::Lift => {
                chart = lifted_chart(&chart).map_err(|e| fail(e.to_string()))?;
                s += 1;
                Action::Lift
            }
            Step::Slice => {
                if s < 2 {
                    return Err(fail("slicing needs s ≥ 2".into()));
                }
                chart = chart.without_last().map_err(|e| fail(e.to_string()))?;
                s -= 1;
                Action::Slice
            }
            Step::CheckDeck(d) => {
                if !d.t0.is_finite() || d.t0 == 0.0 {
                    return Err(fail(format!("t0 must be finite and nonzero, got {}", d.t0)));
                }
                let (map, label) = match (&d.automorphism, &d.map) {
                    (Some(name), None) => {
                        let entry = loaded
                            .entry
                            .as_ref()
                            .ok_or_else(|| fail("named automorphisms need a catalog source".into()))?;
                        if chart.coord_names() != input_chart.coord_names() {
                            return Err(fail("named automorphisms act on the source chart only".into()));
                        }
                        let a = entry
                            .automorphism(name)
                            .ok_or_else(|| fail(format!("`{}` has no automorphism `{name}`", entry.name)))?;
                        (a.map.clone(), name.clone())
                    }
                    (None, Some(def)) => {
                        let ctx = Context::new(&chart, params).map_err(|e| doc.error("", e))?;
                        let map = ctx.map(def, &format!("{prefix}map")).map_err(|e| doc.error("", e))?;
                        (map, "map".to_string())
                    }
                    _ => return Err(fail("give exactly one of `automorphism` and `map`".into())),
                };
                Action::CheckDeck { map, label, t0: d.t0 }
            }
            Step::SearchRotation(r) => {
                let target = TargetVector::new(r.target.clone()).map_err(|e| fail(e.to_string()))?;
                if r.apply && target.len() != s {
                    return Err(fail(format!(
                        "target has {} entries but the structure has s = {s}",
                        target.len()
                    )));
                }
                Action::SearchRotation { target, apply: r.apply }
            }
            Step::CompareToInput => {
                if chart.dim() != input_chart.dim() || s != input_s {
                    return Err(fail(format!(
                        "current structure (dim {}, s = {s}) cannot be compared with the input (dim {}, s = {input_s})",
                        chart.dim(),
                        input_chart.dim()
                    )));
                }
                Action::CompareToInput
            }
        };
        out.push((name, action));
    }
    Ok(out)
}

fn shape(s: &FStructure) -> Value {
    json!({ "dim": s.dim(), "n": s.n(), "s": s.s(), "coords": s.chart().coord_names() })
}

/// Runs the plan, writing one JSON line per step. Returns whether every step
/// passed. A failing transform stops the pipeline, since later steps would
/// act on its missing output.
pub fn execute(plan: &Plan, out: &mut impl Write) -> std::io::Result<bool> {
    let mut current = plan.input.clone();
    let mut all = true;
    let Sampling { count, seed } = plan.sampling;
    for (index, (name, action)) in plan.actions.iter().enumerate() {
        let pts = sample_points(current.chart(), count, seed);
        let transformed = |r: fcontact::Result<FStructure>| match r {
            Ok(next) => (json!({ "passed": true, "structure": shape(&next) }), Some(next)),
            Err(e) => (json!({ "passed": false, "error": e.to_string() }), None),
        };
        let (mut record, next) = match action {
            Action::Verify(opts) => {
                let r = verify(&current, &pts, opts);
                (json!({ "passed": r.passed, "report": r }), None)
            }
            Action::Rotate(a) => transformed(rotate(&current, a)),
            Action::Antirotate(a) => transformed(antirotate(&current, a)),
            Action::Type2(th) => transformed(type2(&current, th, &pts, plan.tol.basic)),
            Action::Lift => transformed(lift(&current)),
            Action::Slice => transformed(slice(&current, count, seed, plan.tol.slice)),
            Action::CheckDeck { map, label, t0 } => {
                let result = lift(&current).and_then(|l| {
                    let lp = sample_points(l.chart(), count, seed);
                    check_deck_invariance(&l, map, *t0, &lp, plan.tol.deck)
                });
                match result {
                    Ok(r) => (json!({ "passed": r.passed, "automorphism": label, "report": r }), None),
                    Err(e) => (
                        json!({ "passed": false, "automorphism": label, "error": e.to_string() }),
                        None,
                    ),
                }
            }
            Action::SearchRotation { target, apply } => {
                let opts = SolveOptions {
                    seed,
                    tol: plan.tol.search,
                    ..SolveOptions::default()
                };
                match solve_rotation(target, &opts) {
                    Ok(sol) => {
                        let mut rec = json!({ "passed": true, "solution": sol, "applied": apply });
                        let mut next = None;
                        if target.len() == current.s() {
                            let result = sol.rotation().and_then(|a| {
                                let mut err: f64 = 0.0;
                                for p in &pts {
                                    let c = antirotation_coordinates(&current, &a, p)?;
                                    for (x, u) in c.iter().zip(target.as_vector().iter()) {
                                        err = err.max((x - u).abs());
                                    }
                                }
                                let anti = if *apply { Some(antirotate(&current, &a)?) } else { None };
                                Ok((err, anti))
                            });
                            match result {
                                Ok((err, anti)) => {
                                    rec["coordinate_error"] = json!(err);
                                    next = anti;
                                }
                                Err(e) => {
                                    rec["passed"] = json!(false);
                                    rec["error"] = json!(e.to_string());
                                }
                            }
                        }
                        (rec, next)
                    }
                    Err(e) => (
                        json!({ "passed": false, "error": e.to_string(), "applied": false }),
                        None,
                    ),
                }
            }
            Action::CompareToInput => match compare_structures(&current, &plan.input, &pts) {
                Ok(d) => (
                    json!({ "passed": d.max <= plan.tol.compare, "diff": d, "tolerance": plan.tol.compare }),
                    None,
                ),
                Err(e) => (json!({ "passed": false, "error": e.to_string() }), None),
            },
        };
        let passed = record["passed"].as_bool().unwrap_or(false);
        record["step"] = json!(name);
        record["index"] = json!(index);
        emit(out, &record)?;
        all &= passed;
        let is_transform = matches!(
            action,
            Action::Rotate(_) | Action::Antirotate(_) | Action::Type2(_) | Action::Lift | Action::Slice
        ) || matches!(action, Action::SearchRotation { apply: true, .. });
        if let Some(next) = next {
            current = next;
        } else if is_transform && !passed {
            break;
        }
    }
    Ok(all)
}
