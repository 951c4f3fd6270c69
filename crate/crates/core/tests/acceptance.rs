//! Acceptance suite. Prints one PASS/FAIL line per criterion followed by its
//! individual checks. Known-unattainable criteria are listed in
//! [`EXPECTED_FAILURES`]; the process exits nonzero on any other failure and
//! on an expected failure that unexpectedly passes.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{f_squared_residual, omega_diff, random_rotation, random_thetas, rng, value_diff};
use fcontact::catalog::{self, CatalogEntry, CatalogParams};
use fcontact::compare::compare_structures;
use fcontact::deform::{antirotate, compose_checks, rotate, type2};
use fcontact::expr::parse;
use fcontact::rotation_search::{
    antirotation_coordinates, base_vector, dh_identity, expm, h_map, image_rank, skew_dim, skew_from_params,
    solve_rotation, SolveOptions, TargetVector,
};
use fcontact::torus::{check_automorphism, check_deck_invariance, lift, slice, AutomorphismMap, SLICE_TOL};
use fcontact::verify::{verify, Level, Status, VerificationReport, VerifyOptions};
use fcontact::{sample_points, Error, Expr, FStructure, OneForm, Point, ScalarField};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

const SAMPLES: usize = 64;
const SEED: u64 = 42;
const TOL: f64 = 1e-9;

const EXPECTED_FAILURES: &[(u32, &str)] = &[
    (
        8,
        "for s = 2, h(exp aJ) = v / cos 2a is stationary at the identity, so dh_I = 0 and image_rank(2) = 0; \
         the rank s − 1 only holds from s = 3 on",
    ),
    (
        9,
        "the image of h is {u ∈ V : ‖u‖ ≥ 2/√s}; for s = 3, ‖v‖ = 1.2247 exceeds 2/√3 = 1.1547 by less than 0.3, \
         so part of the 0.3-disc around v is unreachable and targets drawn there are rejected",
    ),
];

struct Check {
    label: String,
    ok: bool,
    detail: String,
}

fn within(label: impl Into<String>, value: f64, tol: f64) -> Check {
    Check {
        label: label.into(),
        ok: value <= tol,
        detail: format!("{value:.3e} ≤ {tol:.0e}"),
    }
}

fn holds(label: impl Into<String>, ok: bool, detail: impl Into<String>) -> Check {
    Check {
        label: label.into(),
        ok,
        detail: detail.into(),
    }
}

fn entry(name: &str, n: usize, s: usize) -> CatalogEntry {
    catalog::get(name, CatalogParams::new(n, s)).expect("catalog entry")
}

fn points(s: &FStructure) -> Vec<Point> {
    sample_points(s.chart(), SAMPLES, SEED)
}

/// Largest raw residual over the evaluated tensor axioms; `None` if any
/// axiom failed or was not evaluated.
fn level_s_residual(r: &VerificationReport) -> Option<f64> {
    let mut m: f64 = 0.0;
    for a in r.axioms.iter().filter(|a| a.level != Level::None) {
        if a.status != Status::Pass {
            return None;
        }
        m = m.max(a.max_residual.unwrap_or(f64::INFINITY));
    }
    (r.level == Level::S).then_some(m)
}

fn level_residual(s: &FStructure, pts: &[Point]) -> Result<f64, String> {
    let r = verify(s, pts, &VerifyOptions::default());
    level_s_residual(&r).ok_or_else(|| format!("level {} failing {:?}", r.level, r.failing()))
}

fn level_check(label: impl Into<String>, s: &FStructure, pts: &[Point]) -> Check {
    summarize(label, [level_residual(s, pts)], TOL)
}

/// Worst residual over repeated level checks, or the first failure.
fn summarize(label: impl Into<String>, runs: impl IntoIterator<Item = Result<f64, String>>, tol: f64) -> Check {
    let mut m: f64 = 0.0;
    for run in runs {
        match run {
            Ok(r) => m = m.max(r),
            Err(e) => return holds(label, false, e),
        }
    }
    within(label, m, tol)
}

fn criterion_1() -> Vec<Check> {
    let mut checks = Vec::new();
    for (name, n, s) in [
        ("sasakian-model", 1, 1),
        ("sasakian-model", 2, 1),
        ("s-model", 1, 2),
        ("s-model", 1, 3),
    ] {
        let e = entry(name, n, s);
        let pts = points(&e.structure);
        checks.push(level_check(format!("{name} n={n} s={s} level S"), &e.structure, &pts));
        let r = verify(
            &e.structure,
            &pts,
            &VerifyOptions {
                fd_check: true,
                ..VerifyOptions::default()
            },
        );
        let fd = r
            .axiom("fd_partials")
            .and_then(|a| a.max_residual)
            .unwrap_or(f64::INFINITY);
        checks.push(within(format!("{name} n={n} s={s} fd residual"), fd, 1e-5));
    }
    checks
}

fn criterion_2_3() -> (Vec<Check>, Vec<Check>) {
    let (mut c2, mut c3) = (Vec::new(), Vec::new());
    for s in [2, 3] {
        let e = entry("s-model", 1, s);
        let pts = points(&e.structure);
        let mut r = rng(SEED + s as u64);
        let (mut omega, mut inverse) = (0.0f64, 0.0f64);
        let (mut rot_level, mut anti_level) = (Vec::new(), Vec::new());
        for _ in 0..50 {
            let a = random_rotation(s, &mut r);
            let rot = rotate(&e.structure, &a).unwrap();
            let anti = antirotate(&e.structure, &a).unwrap();
            rot_level.push(level_residual(&rot, &pts));
            anti_level.push(level_residual(&anti, &pts));
            omega = omega
                .max(omega_diff(&rot, &e.structure, &pts))
                .max(omega_diff(&anti, &e.structure, &pts));
            let back1 = antirotate(&rot, &a).unwrap();
            let back2 = rotate(&anti, &a).unwrap();
            inverse = inverse
                .max(value_diff(&back1, &e.structure, &pts))
                .max(value_diff(&back2, &e.structure, &pts));
        }
        c2.push(summarize(
            format!("s={s} rotate level S over 50 matrices"),
            rot_level,
            TOL,
        ));
        c2.push(summarize(
            format!("s={s} antirotate level S over 50 matrices"),
            anti_level,
            TOL,
        ));
        c2.push(within(format!("s={s} ω′ = ω over 50 matrices"), omega, 1e-12));
        c3.push(within(format!("s={s} inverse pair over 50 matrices"), inverse, 1e-12));
    }
    (c2, c3)
}

fn criterion_4() -> Vec<Check> {
    let mut checks = Vec::new();
    for s in [2, 3] {
        let e = entry("s-model", 1, s);
        let pts = points(&e.structure);
        let mut r = rng(SEED + 10 + s as u64);
        let (mut fsq, mut additive, mut inverse) = (0.0f64, 0.0f64, 0.0f64);
        let mut levels = Vec::new();
        for _ in 0..20 {
            let t1 = random_thetas(&e, &mut r);
            let t2 = random_thetas(&e, &mut r);
            let d = type2(&e.structure, &t1, &pts, TOL).unwrap();
            levels.push(level_residual(&d, &pts));
            fsq = fsq.max(f_squared_residual(&d, &pts));
            let sum: Vec<OneForm> = t1
                .iter()
                .zip(&t2)
                .map(|(a, b)| OneForm::linear_combination(&[1.0, 1.0], &[a.clone(), b.clone()]))
                .collect();
            let neg: Vec<OneForm> = t1
                .iter()
                .map(|a| OneForm::linear_combination(&[-1.0], std::slice::from_ref(a)))
                .collect();
            let two = type2(&d, &t2, &pts, TOL).unwrap();
            let one = type2(&e.structure, &sum, &pts, TOL).unwrap();
            additive = additive.max(value_diff(&two, &one, &pts));
            let back = type2(&d, &neg, &pts, TOL).unwrap();
            inverse = inverse.max(value_diff(&back, &e.structure, &pts));
        }
        checks.push(summarize(format!("s={s} type2 level S over 20 θ"), levels, TOL));
        checks.push(within(format!("s={s} f̄² identity"), fsq, 1e-9));
        checks.push(within(format!("s={s} additive composition"), additive, 1e-10));
        checks.push(within(format!("s={s} −θ inverse"), inverse, 1e-10));
    }
    checks
}

fn criterion_5() -> Vec<Check> {
    let mut checks = Vec::new();
    for s in [2, 3] {
        let e = entry("s-model", 1, s);
        let pts = points(&e.structure);
        let mut r = rng(SEED + 20 + s as u64);
        let mut d = 0.0f64;
        for _ in 0..20 {
            let a = random_rotation(s, &mut r);
            let th = random_thetas(&e, &mut r);
            d = d.max(compose_checks(&e.structure, &a, &th, &pts, TOL).unwrap().max);
        }
        checks.push(within(format!("s={s} composition paths over 20 pairs"), d, 1e-10));
    }
    checks
}

fn criterion_6() -> Vec<Check> {
    let e = entry("sasakian-model", 1, 1);
    let l = lift(&e.structure).unwrap();
    let pts = points(&l);
    let mut checks = vec![level_check("lift level S", &l, &pts)];
    let s = l.s();
    let (mut duality, mut exact) = (0.0f64, true);
    for p in &pts {
        let j = l.jet(p).unwrap();
        for i in 0..s {
            for k in 0..s {
                let d: f64 = j.eta_values(i).iter().zip(j.xi_values(k)).map(|(a, b)| a * b).sum();
                duality = duality.max((d - if i == k { 1.0 } else { 0.0 }).abs());
            }
        }
        let base = s - 1;
        let mut avg = vec![0.0; l.dim()];
        for i in 0..base {
            for (c, x) in avg.iter_mut().zip(j.eta_values(i)) {
                *c += x * (1.0 / base as f64);
            }
        }
        let comb: Vec<f64> = j.eta_values(base).iter().zip(&avg).map(|(a, b)| a - b).collect();
        let mut dt = vec![0.0; l.dim()];
        dt[l.dim() - 1] = 1.0;
        exact &= comb == dt;
    }
    checks.push(within("η̄ᵢ(ξ̄ⱼ) = δᵢⱼ", duality, 1e-12));
    let z = e.automorphism("z-translation").unwrap();
    let deck = check_deck_invariance(&l, &z.map, 1.0, &pts, 1e-10).unwrap();
    let worst_deck = deck.forward.max.max(deck.backward.as_ref().map_or(0.0, |b| b.max));
    checks.push(holds(
        "deck invariance (z-translation, t0 = 1)",
        deck.passed,
        format!("{worst_deck:.3e} ≤ 1e-10"),
    ));
    checks.push(holds("η̄_{s+1} − (1/s)Ση̄ = dt", exact, "bitwise"));
    checks
}

fn criterion_7() -> Vec<Check> {
    let mut checks = Vec::new();
    for info in catalog::list() {
        for n in info.n[0]..=info.n[1].min(2) {
            for s in info.s[0]..=info.s[1].min(3) {
                let e = entry(&info.name, n, s);
                let pts = points(&e.structure);
                let l = lift(&e.structure).unwrap();
                let label = format!("{} n={n} s={s}", info.name);
                match slice(&l, SAMPLES, SEED, SLICE_TOL) {
                    Ok(back) => {
                        let d = compare_structures(&back, &e.structure, &pts).unwrap();
                        checks.push(within(format!("{label} slice∘lift"), d.max, 1e-10));
                        checks.push(level_check(format!("{label} slice level S"), &back, &pts));
                    }
                    Err(err) => checks.push(holds(format!("{label} slice∘lift"), false, err.to_string())),
                }
            }
        }
    }
    checks
}

fn criterion_8() -> Vec<Check> {
    let mut checks = Vec::new();
    let mut exact = 0.0f64;
    for s in 2..=5 {
        let h = h_map(&DMatrix::identity(s, s)).unwrap();
        exact = exact.max((h - base_vector(s).unwrap()).amax());
    }
    checks.push(within("h(I) = v", exact, 4.0 * f64::EPSILON));

    let mut r = rng(SEED + 30);
    let mut sum = 0.0f64;
    for _ in 0..100 {
        let a = random_rotation(3, &mut r);
        sum = sum.max(h_map(a.matrix()).unwrap().sum().abs());
    }
    checks.push(within("|Σ h(A)ᵢ| over 100 matrices", sum, 1e-12));

    let mut decay = true;
    let mut ratios = Vec::new();
    for s in 2..=4 {
        let params: Vec<f64> = (0..skew_dim(s)).map(|_| r.random_range(-1.0..1.0)).collect();
        let x = skew_from_params(s, &params);
        let hi = h_map(&DMatrix::identity(s, s)).unwrap();
        let lin = dh_identity(&x).unwrap();
        let err = |eps: f64| (h_map(&expm(&(&x * eps))).unwrap() - &hi - &lin * eps).amax();
        let e = [err(1e-3), err(1e-4), err(1e-5)];
        for w in e.windows(2) {
            let ratio = w[0] / w[1];
            decay &= (100.0 / 3.0..=300.0).contains(&ratio);
            ratios.push(format!("{ratio:.1}"));
        }
    }
    checks.push(holds(
        "dh_I remainder decays quadratically",
        decay,
        format!("ratios per decade {}", ratios.join(", ")),
    ));

    for s in 2..=5 {
        let rank = image_rank(s).unwrap();
        checks.push(holds(
            format!("image_rank({s}) = {}", s - 1),
            rank == s - 1,
            format!("got {rank}"),
        ));
    }

    let mut formula = 0.0f64;
    for s in 2..=6 {
        let a: Vec<f64> = (0..s - 1).map(|i| 0.3 * i as f64 - 0.7).collect();
        let mut x = DMatrix::zeros(s, s);
        for i in 0..s - 1 {
            x[(i, s - 1)] = a[i];
            x[(s - 1, i)] = -a[i];
        }
        let got = dh_identity(&x).unwrap();
        let k = 1.0 / (s - 1) as f64 - 1.0;
        let mut want: Vec<f64> = a.iter().map(|ai| k * ai).collect();
        want.push(-k * a.iter().sum::<f64>());
        formula = formula.max(got.iter().zip(&want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max));
    }
    checks.push(within("X̃ formula with factor 1/(s−1) − 1", formula, 1e-12));
    checks
}

fn criterion_9() -> Vec<Check> {
    let s = 3;
    let e = entry("s-model", 1, s);
    let pts = sample_points(e.structure.chart(), 8, SEED);
    let v = base_vector(s).unwrap();
    // orthonormal basis of V
    let b1 = DVector::from_vec(vec![1.0, -1.0, 0.0]).normalize();
    let b2 = DVector::from_vec(vec![1.0, 1.0, -2.0]).normalize();
    let mut r = rng(SEED);
    let mut checks = Vec::new();
    let (mut residual, mut defect, mut row_floor, mut coords) = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64);
    let mut failures = Vec::new();
    let mut outside = 0;
    for k in 0..10 {
        // uniform in the 0.3-disc around v
        let rho = 0.3 * r.random_range(0.0f64..1.0).sqrt();
        let phi = r.random_range(0.0..std::f64::consts::TAU);
        let u = &v + &b1 * (rho * phi.cos()) + &b2 * (rho * phi.sin());
        let target = TargetVector::new(u.as_slice().to_vec()).unwrap();
        if !target.in_image() {
            outside += 1;
        }
        match solve_rotation(&target, &SolveOptions::default()) {
            Ok(sol) => {
                residual = residual.max(sol.residual);
                defect = defect.max(sol.orthogonality_defect);
                row_floor = sol.row_sums.iter().fold(row_floor, |m, c| m.min(c.abs()));
                let a = sol.rotation().unwrap();
                for p in &pts {
                    let c = antirotation_coordinates(&e.structure, &a, p).unwrap();
                    coords = coords.max(c.iter().zip(u.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
                }
            }
            Err(err) => failures.push(format!("target {k} ‖u − v‖ = {rho:.3}: {err}")),
        }
    }
    checks.push(holds(
        "all 10 targets converge",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{outside} of 10 outside the image")
        } else {
            failures.join("; ")
        },
    ));
    checks.push(within("residual", residual, 1e-10));
    checks.push(within("orthogonality defect", defect, 1e-12));
    checks.push(holds("min |cᵢ| ≥ 1e-8", row_floor >= 1e-8, format!("{row_floor:.3e}")));
    checks.push(within("antirotation realizes u", coords, 1e-9));
    checks
}

fn criterion_10() -> Vec<Check> {
    let mut checks = Vec::new();

    let e = entry("sasakian-model", 1, 1);
    let mut scaled = e.structure.clone();
    scaled.xi[0] = scaled.xi[0].scaled_by(&ScalarField::from_expr(3, Expr::num(2.0)));
    let r = verify(&scaled, &points(&scaled), &VerifyOptions::default());
    let duality = r.axiom("eta_xi_duality").map(|a| a.status);
    checks.push(holds(
        "scaled ξ fails eta_xi_duality",
        !r.passed && duality == Some(Status::Fail),
        format!("level {}", r.level),
    ));

    let m = entry("s-model", 1, 2);
    let chart = m.structure.chart();
    let bad = OneForm::from_exprs(["0", "x1", "0", "0"].iter().map(|t| parse(t, chart).unwrap()).collect());
    let pts = points(&m.structure);
    let res = type2(&m.structure, &[bad, OneForm::zero(4)], &pts, TOL);
    let ok = matches!(&res, Err(Error::Precondition(msg)) if msg.contains("dθ"));
    checks.push(holds(
        "non-closed θ rejected by the closedness check",
        ok,
        describe(&res),
    ));

    let exprs = ["2*x1", "y1", "z"]
        .map(|t| parse(t, e.structure.chart()).unwrap())
        .to_vec();
    let phi = AutomorphismMap::new(3, exprs, None).unwrap();
    let rep = check_automorphism(&e.structure, &phi, &points(&e.structure), 1e-10).unwrap();
    checks.push(holds(
        "non-isometry φ fails the metric pullback",
        !rep.passed && rep.metric_pullback > 1e-10,
        format!("metric pullback residual {:.3e}", rep.metric_pullback),
    ));

    let non_skew = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let res = dh_identity(&non_skew);
    checks.push(holds("non-skew X rejected", res.is_err(), describe(&res)));

    let res = TargetVector::new(vec![1.0, 0.5, 0.0]);
    checks.push(holds(
        "Σu ≠ 0 target rejected",
        matches!(res, Err(Error::Precondition(_))),
        describe(&res),
    ));
    checks
}

fn describe<T>(r: &Result<T, Error>) -> String {
    match r {
        Ok(_) => "accepted".into(),
        Err(e) => e.to_string(),
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let (c2, c3) = criterion_2_3();
    let results: Vec<(u32, &str, Vec<Check>)> = vec![
        (1, "axiom suite on the catalog models", criterion_1()),
        (2, "rotation and anti-rotation preserve the level and ω", c2),
        (3, "rotation and anti-rotation are mutually inverse", c3),
        (4, "type II deformations", criterion_4()),
        (5, "rotation commutes with type II deformation", criterion_5()),
        (6, "lift to the product with a line", criterion_6()),
        (7, "slice undoes lift", criterion_7()),
        (8, "the map h and its differential", criterion_8()),
        (9, "rotation search", criterion_9()),
        (10, "negative controls", criterion_10()),
    ];

    let mut unexpected = 0;
    let mut failed = 0;
    for (id, title, checks) in &results {
        let ok = checks.iter().all(|c| c.ok);
        let expected = EXPECTED_FAILURES.iter().find(|(e, _)| e == id);
        println!("{} criterion {id}: {title}", if ok { "PASS" } else { "FAIL" });
        for c in checks {
            println!("    {} {}: {}", if c.ok { "ok  " } else { "FAIL" }, c.label, c.detail);
        }
        match (ok, expected) {
            (false, Some((_, why))) => println!("    expected failure: {why}"),
            (false, None) => unexpected += 1,
            (true, Some(_)) => {
                println!("    listed as an expected failure but passed");
                unexpected += 1;
            }
            (true, None) => {}
        }
        failed += usize::from(!ok);
    }
    println!(
        "{} of {} criteria passed, {failed} failed ({unexpected} unexpected) in {:.1}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
