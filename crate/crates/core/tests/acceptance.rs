//! Acceptance run: one line per criterion, then a single assertion that all
//! of them passed.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use specflow::aps::{
    flow_side, index_decomposition_check, solve_index, ApsProblem, Convention, Variant,
};
use specflow::cplx::C64;
use specflow::family::Family;
use specflow::flow::{equivariant_flow, spectral_flow};
use specflow::models::{
    berger_crossings, build_berger_family, build_circle_family, rhs_flat, BergerModel, CircleModel,
    GeometryModel,
};
use specflow::verify::identity_suite;

const TOL: f64 = 1e-9;

type Outcome = Result<String, String>;

fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn near(a: C64, b: C64, tol: f64, what: &str) -> Result<(), String> {
    ensure((a - b).norm() < tol, || {
        format!("{what}: got {a}, expected {b}")
    })
}

fn err(e: specflow::SpecError) -> String {
    e.to_string()
}

struct CircleValues {
    sfl_plain: i64,
    sfl_z: C64,
    index: C64,
    index_exact: Option<i64>,
    per_character: Vec<(C64, i64)>,
}

fn circle(model: &CircleModel, z: C64) -> Result<CircleValues, String> {
    let family = Family::Modes(build_circle_family(model, z).map_err(err)?);
    let flow = equivariant_flow(&family, None).map_err(err)?;
    let problem = ApsProblem::new(family.clone(), Variant::Lorentzian, Convention::Inclusive);
    let index = solve_index(&problem, None).map_err(err)?;
    let dec = index_decomposition_check(&problem, None).map_err(err)?;
    Ok(CircleValues {
        sfl_plain: spectral_flow(&family).map_err(err)?,
        sfl_z: flow.value.value,
        index: index.index.value,
        index_exact: index.index.exact_integer,
        per_character: dec
            .per_character
            .iter()
            .map(|c| (c.character, c.index))
            .collect(),
    })
}

fn circle_k1(j_max: i64) -> Outcome {
    let z = cis(2.0 * PI / 5.0);
    let start = Instant::now();
    let v = circle(&CircleModel::k1(j_max), z)?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(v.sfl_plain == 1, || format!("sfl = {}", v.sfl_plain))?;
    near(v.sfl_z, z, TOL, "sfl_z")?;
    near(v.index, z, TOL, "inclusive ind_z")?;
    ensure(elapsed < 5.0, || format!("took {elapsed:.2} s"))?;
    Ok(format!(
        "sfl = 1, sfl_z = ind_z = {:.12}, {elapsed:.2} s",
        v.index
    ))
}

fn circle_k2(j_max: i64) -> Outcome {
    let mut parts = Vec::new();
    for z in [one(), C64::new(0.0, 1.0), cis(2.0 * PI / 7.0)] {
        let v = circle(&CircleModel::k2(j_max), z)?;
        near(v.index, one() - z, TOL, &format!("ind_z at z = {z}"))?;
        near(v.sfl_z, one() - z, TOL, &format!("sfl_z at z = {z}"))?;
        if z == one() {
            ensure(v.index_exact == Some(0), || {
                format!("index at z = 1 is {:?}", v.index_exact)
            })?;
            ensure(v.sfl_plain == 0, || format!("plain sfl {}", v.sfl_plain))?;
        } else {
            let mut got = v.per_character.clone();
            got.sort_by_key(|c| std::cmp::Reverse(c.1));
            let expected = [(one(), 1), (z, -1)];
            ensure(
                got.len() == 2
                    && got
                        .iter()
                        .zip(&expected)
                        .all(|(g, e)| g.1 == e.1 && (g.0 - e.0).norm() < TOL),
                || format!("per-character indices {got:?} at z = {z}"),
            )?;
        }
        parts.push(format!("{:.6}", v.index));
    }
    Ok(format!(
        "ind_z = 1 - z at z = 1, i, e^(2πi/7): [{}]; per character (+1, -1)",
        parts.join(", ")
    ))
}

struct BergerValues {
    crossing: f64,
    sfl: Vec<C64>,
}

fn berger(n_max: u32) -> Result<BergerValues, String> {
    let model = BergerModel::new(n_max);
    let crossings = berger_crossings(&model, &build_berger_family(&model, 0.0).map_err(err)?);
    ensure(
        crossings.len() == 1 && crossings[0].label == "n=2/p=1/-",
        || {
            format!(
                "crossings {:?}",
                crossings
                    .iter()
                    .map(|c| (&c.label, c.lambda))
                    .collect::<Vec<_>>()
            )
        },
    )?;
    let crossing = crossings[0].lambda;
    ensure((crossing - 4.0).abs() < TOL, || {
        format!("crossing at λ = {crossing}")
    })?;

    let mut sfl = Vec::new();
    for theta in [0.0, 0.3, 1.0, 2.5] {
        let fam = Family::Curves(build_berger_family(&model, theta).map_err(err)?);
        let flow = equivariant_flow(&fam, None).map_err(err)?;
        near(
            flow.value.value,
            C64::new(2.0 * theta.cos(), 0.0),
            TOL,
            &format!("sfl_γ at θ = {theta}"),
        )?;
        if theta == 0.0 {
            ensure(
                flow.value.exact_integer == Some(2) && flow.total() == 2,
                || format!("θ = 0 gives {:?}", flow.value.exact_integer),
            )?;
        }
        sfl.push(flow.value.value);
    }
    Ok(BergerValues { crossing, sfl })
}

fn criterion_berger() -> Outcome {
    let start = Instant::now();
    let v = berger(12)?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed < 5.0, || format!("took {elapsed:.2} s"))?;
    Ok(format!(
        "single crossing (2,1,-) at λ = {:.12}, sfl_γ = 2cos θ at θ = 0.3, 1.0, 2.5, exactly 2 at θ = 0, {elapsed:.2} s",
        v.crossing
    ))
}

fn criteria_identity_and_decomposition() -> (Outcome, Outcome) {
    let start = Instant::now();
    let suite = match identity_suite(2024, 120) {
        Ok(s) => s,
        Err(e) => return (Err(e.to_string()), Err("identity suite did not run".into())),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let tol = 1e-8;
    let identity = (|| {
        for c in &suite.instances {
            ensure(
                c.residual_lorentzian < tol
                    && c.residual_riemannian < tol
                    && c.variant_difference < tol,
                || {
                    format!(
                        "instance {}: residuals {:e} / {:e}, variants differ by {:e}",
                        c.instance,
                        c.residual_lorentzian,
                        c.residual_riemannian,
                        c.variant_difference
                    )
                },
            )?;
        }
        ensure(suite.passed == suite.count, || {
            format!("{}/{} passed", suite.passed, suite.count)
        })?;
        ensure(elapsed < 60.0, || format!("took {elapsed:.1} s"))?;
        let kernels = suite
            .instances
            .iter()
            .filter(|c| c.terminal_kernel_dim > 0)
            .count();
        Ok(format!(
            "{}/{} instances ({kernels} with terminal kernel), max residual {:.1e}, {elapsed:.1} s",
            suite.passed, suite.count, suite.max_residual
        ))
    })();
    let decomposition = (|| {
        let worst = suite
            .instances
            .iter()
            .map(|c| {
                c.index_decomposition_residual
                    .max(c.flow_decomposition_residual)
            })
            .fold(0.0, f64::max);
        ensure(worst < TOL, || {
            format!("largest decomposition residual {worst:e}")
        })?;
        Ok(format!(
            "index and flow decompositions on {} instances, max residual {worst:.1e}",
            suite.count
        ))
    })();
    (identity, decomposition)
}

fn criterion_axioms() -> Outcome {
    let n = 200u64;
    let mut summary = Vec::new();
    for (name, check) in common::AXIOMS {
        for seed in 0..n {
            check(seed).map_err(|e| format!("{name}, seed {seed}: {e}"))?;
        }
        summary.push(name);
    }
    Ok(format!("{n} instances each: {}", summary.join(", ")))
}

fn criterion_eta() -> Outcome {
    let n = 64u64;
    let mut agree: f64 = 0.0;
    let mut sym: f64 = 0.0;
    for seed in 0..n {
        agree = agree.max(common::eta_agreement(seed).map_err(|e| format!("seed {seed}: {e}"))?);
        sym = sym.max(common::eta_symmetric(seed).map_err(|e| format!("seed {seed}: {e}"))?);
    }
    Ok(format!(
        "closed form vs Abel on {n} progressions, max gap {agree:.1e}; {n} symmetric spectra, max |η| {sym:.1e}"
    ))
}

fn criterion_flat_assembly() -> Outcome {
    let model = CircleModel::k1(16);
    let r = rhs_flat(&GeometryModel::Circle(model.clone()), one()).map_err(err)?;
    near(r.interior_exact, one(), 1e-12, "closed-form interior")?;
    near(
        r.interior.value,
        r.interior_exact,
        1e-8,
        "interior quadrature",
    )?;
    near(
        r.boundary_transgression.value,
        C64::new(0.0, 0.0),
        1e-15,
        "transgression",
    )?;
    near(
        r.b.b_value.value,
        C64::new(-1.0, 0.0),
        1e-9,
        "boundary term",
    )?;
    ensure(r.matches_strict || r.matches_inclusive, || {
        format!(
            "total {} matches neither endpoint convention",
            r.total.value
        )
    })?;

    let family = Family::Modes(build_circle_family(&model, one()).map_err(err)?);
    let problem = ApsProblem::new(family, Variant::Lorentzian, Convention::Strict);
    let ind = solve_index(&problem, None).map_err(err)?;
    let side = flow_side(&problem, None).map_err(err)?;
    near(
        ind.index.value,
        side.value.value,
        1e-9,
        "strict ind vs sfl - tr(γ|ker A(1))",
    )?;

    let flag = match (r.matches_strict, r.matches_inclusive) {
        (true, true) => "both conventions",
        (true, false) => "strict convention",
        _ => "inclusive convention",
    };
    Ok(format!(
        "interior {:.10} (quadrature error {:.1e}), transgression 0, b = {:.3}, total {:.3} matches the {flag}; strict ind = {:.3} = sfl - tr(γ|ker)",
        r.interior.value.re, r.quadrature_error, r.b.b_value.value.re, r.total.value.re + 0.0, ind.index.value.re + 0.0
    ))
}

fn criterion_truncation() -> Outcome {
    let z = cis(2.0 * PI / 5.0);
    let (a, b) = (
        circle(&CircleModel::k1(16), z)?,
        circle(&CircleModel::k1(32), z)?,
    );
    ensure(a.sfl_plain == b.sfl_plain, || {
        "k=1 plain sfl changed".into()
    })?;
    near(a.sfl_z, b.sfl_z, TOL, "k=1 sfl_z under doubling")?;
    near(a.index, b.index, TOL, "k=1 ind_z under doubling")?;
    for z in [one(), C64::new(0.0, 1.0), cis(2.0 * PI / 7.0)] {
        let (a, b) = (
            circle(&CircleModel::k2(16), z)?,
            circle(&CircleModel::k2(32), z)?,
        );
        near(
            a.index,
            b.index,
            TOL,
            &format!("k=2 ind_z at z = {z} under doubling"),
        )?;
        ensure(
            a.per_character == b.per_character && a.index_exact == b.index_exact,
            || format!("k=2 per-character indices changed at z = {z}"),
        )?;
    }
    let (a, b) = (berger(12)?, berger(24)?);
    ensure((a.crossing - b.crossing).abs() < TOL, || {
        "Berger crossing moved".into()
    })?;
    for (x, y) in a.sfl.iter().zip(&b.sfl) {
        near(*x, *y, TOL, "Berger sfl_γ under doubling")?;
    }
    Ok("circle j_max 16 -> 32 and Berger n_max 12 -> 24 leave every value unchanged".into())
}

#[test]
fn acceptance() {
    let (identity, decomposition) = criteria_identity_and_decomposition();
    let results: Vec<(&str, Outcome)> = vec![
        ("circle k=1", circle_k1(16)),
        ("circle k=2", circle_k2(16)),
        ("Berger sphere", criterion_berger()),
        ("index = spectral flow identity suite", identity),
        ("decomposition suites", decomposition),
        ("spectral-flow axioms", criterion_axioms()),
        ("η cross-validation", criterion_eta()),
        (
            "flat assembly, circle k=1, γ = 1",
            criterion_flat_assembly(),
        ),
        ("truncation stability", criterion_truncation()),
    ];
    let mut failed = Vec::new();
    for (i, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(e) => {
                println!("criterion {}: FAIL  {name}: {e}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
