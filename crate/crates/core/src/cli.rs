//! Command-line scenario runner. Every run produces one JSON document
//! (`"schema": "specflow/1"`); `--csv` writes a flattened copy of it.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::aps::{
    flow_side, index_decomposition_check, solve_index, ApsProblem, Convention, Variant,
    STABILIZATION_TOL,
};
use crate::cplx::{cis, C64, ONE};
use crate::error::{Result, SpecError};
use crate::eta::{boundary_term, eta_abel_oracle, eta_closed_form, CharacterSpectrum, ABEL_TOL};
use crate::family::{
    build_flow_partition_with, Family, PartitionOptions, WindowRule, MARGIN_MIN, MAX_SEGMENTS,
    ZERO_TOL,
};
use crate::flow::{sfl_equivariant, DECOMPOSITION_TOL};
use crate::linalg::{ComplexMatrix, RANK_TOL};
use crate::models::{
    berger_crossings, build_berger_family, build_circle_family, rhs_flat, su2_character,
    ActionConvention, BergerModel, CircleModel, GeometryModel,
};
use crate::symmetry::{decompose, SymmetryAction, CHAR_IDENT_TOL};
use crate::verify::{identity_suite, IDENTITY_TOL};

pub const SCHEMA: &str = "specflow/1";

/// Agreement required between the index and its flow-side expression.
const CROSS_CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "specflow",
    version,
    about = "Equivariant spectral flow and APS index computations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the JSON document here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write a flattened `path,value` table.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equivariant spectral flow of a family.
    Sfl(SflArgs),
    /// Equivariant APS index of `∂_t − iB` or `∂_t + B`.
    Index(IndexArgs),
    /// η-invariant of a spectrum, or the boundary term of two spectra.
    Eta(EtaArgs),
    /// Seeded check of index = spectral flow on random equivariant families.
    VerifyIdentity(VerifyArgs),
    /// Built-in geometric examples.
    Example(ExampleArgs),
}

#[derive(Debug, Args)]
pub struct SflArgs {
    /// Family as inline JSON or a file path.
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long, value_enum, default_value_t = WindowArg::LargestGap)]
    pub window_rule: WindowArg,
    #[arg(long)]
    pub margin_min: Option<f64>,
    #[arg(long)]
    pub max_segments: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long, value_enum, default_value_t = ConventionArg::Strict)]
    pub convention: ConventionArg,
    #[arg(long, value_enum, default_value_t = VariantArg::Lorentzian)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
}

#[derive(Debug, Args)]
pub struct EtaArgs {
    /// Spectrum as inline JSON or a file path.
    #[arg(long)]
    pub spectrum: String,
    /// Second endpoint; when given, the boundary term is assembled.
    #[arg(long)]
    pub spectrum1: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Generate random equivariant instances (the only supported source).
    #[arg(long)]
    pub random: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct ExampleArgs {
    #[arg(value_enum)]
    pub name: ExampleName,
    #[arg(long)]
    pub gamma: Option<String>,
    /// SU(2) rotation angle for the Berger example.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, value_enum, default_value_t = ConventionArg::Strict)]
    pub convention: ConventionArg,
    #[arg(long, value_enum, default_value_t = ActionArg::Fiber)]
    pub action: ActionArg,
    #[arg(long, default_value_t = 16)]
    pub jmax: i64,
    #[arg(long, default_value_t = 12)]
    pub nmax: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExampleName {
    CircleK1,
    CircleK2,
    Berger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Strict,
    Inclusive,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Strict => Convention::Strict,
            ConventionArg::Inclusive => Convention::Inclusive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Lorentzian,
    Riemannian,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Lorentzian => Variant::Lorentzian,
            VariantArg::Riemannian => Variant::Riemannian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ActionArg {
    Fiber,
    FiberBase,
}

impl From<ActionArg> for ActionConvention {
    fn from(a: ActionArg) -> Self {
        match a {
            ActionArg::Fiber => ActionConvention::Fiber,
            ActionArg::FiberBase => ActionConvention::FiberBase,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    LargestGap,
    SmallestRadius,
}

/// Group element named on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaSpec {
    Identity,
    Unit(C64),
    Su2(f64),
    Matrix(ComplexMatrix),
}

impl GammaSpec {
    /// Accepts `identity`, `z=<f>πi` (also `z=<f>pi*i`, meaning `e^{fπi}`),
    /// `z=<re>,<im>`, `angle=<φ>`, `theta=<θ>` and `matrix=<json or path>`.
    pub fn parse(s: &str) -> Result<GammaSpec> {
        let s = s.trim();
        if s == "1" || s.eq_ignore_ascii_case("identity") {
            return Ok(GammaSpec::Identity);
        }
        let (key, val) = s
            .split_once('=')
            .ok_or_else(|| SpecError::invalid(format!("cannot parse group element '{s}'")))?;
        let num = |v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| SpecError::invalid(format!("'{v}' is not a number")))
        };
        let spec = match key.trim() {
            "z" => {
                let v = val.trim();
                let stripped = ["πi", "π*i", "pi*i", "pii", "pi i"]
                    .iter()
                    .find_map(|suf| v.strip_suffix(suf));
                match stripped {
                    Some(f) => {
                        let f = if f.is_empty() { 1.0 } else { num(f)? };
                        GammaSpec::Unit(cis(f * PI))
                    }
                    None => {
                        let (re, im) = v.split_once(',').ok_or_else(|| {
                            SpecError::invalid(format!(
                                "z must be '<f>πi' or '<re>,<im>', got '{v}'"
                            ))
                        })?;
                        GammaSpec::Unit(C64::new(num(re)?, num(im)?))
                    }
                }
            }
            "angle" => GammaSpec::Unit(cis(num(val)?)),
            "theta" => GammaSpec::Su2(num(val)?),
            "matrix" => {
                let text = inline_or_file(val)?;
                GammaSpec::Matrix(
                    serde_json::from_str(&text)
                        .map_err(|e| SpecError::invalid(format!("matrix: {e}")))?,
                )
            }
            other => {
                return Err(SpecError::invalid(format!(
                    "unknown group element kind '{other}'"
                )))
            }
        };
        if let GammaSpec::Unit(z) = spec {
            if (z.norm() - 1.0).abs() > 1e-12 {
                return Err(SpecError::invalid(format!(
                    "z = {z} is not on the unit circle"
                )));
            }
        }
        Ok(spec)
    }

    fn describe(&self) -> Value {
        match self {
            GammaSpec::Identity => json!({"kind": "identity"}),
            GammaSpec::Unit(z) => json!({"kind": "unit", "z": [z.re, z.im]}),
            GammaSpec::Su2(t) => json!({"kind": "su2", "theta": t}),
            GammaSpec::Matrix(m) => json!({"kind": "matrix", "matrix": m}),
        }
    }

    fn unit(&self) -> Result<C64> {
        match self {
            GammaSpec::Identity => Ok(ONE),
            GammaSpec::Unit(z) => Ok(*z),
            _ => Err(SpecError::invalid(
                "this example needs a unit complex group element",
            )),
        }
    }
}

fn inline_or_file(s: &str) -> Result<String> {
    let t = s.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        return Ok(s.to_string());
    }
    fs::read_to_string(Path::new(s))
        .map_err(|e| SpecError::invalid(format!("cannot read '{s}': {e}")))
}

fn load_family(s: &str) -> Result<Family> {
    Family::from_json(&inline_or_file(s)?)
}

fn load_spectrum(s: &str) -> Result<CharacterSpectrum> {
    let spec: CharacterSpectrum = serde_json::from_str(&inline_or_file(s)?)
        .map_err(|e| SpecError::invalid(format!("spectrum: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

/// Symmetry for a family: the action on sampled families, the fiber
/// override on mode families. Curve families carry their own characters.
fn resolve_action(family: &Family, gamma: &GammaSpec) -> Result<Option<SymmetryAction>> {
    let dim = match family {
        Family::Sampled(s) => s.dim(),
        Family::Modes(m) => match m.modes().first().map(|x| &x.family) {
            Some(crate::family::ModeFamily::Sampled(s)) => s.dim(),
            _ => 0,
        },
        Family::Curves(_) => 0,
    };
    match (family, gamma) {
        (_, GammaSpec::Identity) => Ok(None),
        (Family::Curves(_), _) => Err(SpecError::invalid(
            "curve families carry their own characters; omit --gamma",
        )),
        (_, GammaSpec::Su2(_)) => Err(SpecError::invalid(
            "an SU(2) angle only applies to the Berger example",
        )),
        (_, GammaSpec::Unit(z)) => Ok(Some(SymmetryAction::scalar(dim, *z)?.with_label("scalar"))),
        (_, GammaSpec::Matrix(m)) => Ok(Some(decompose(m)?.with_label("matrix"))),
    }
}

#[derive(Debug, Clone, Serialize)]
struct Tolerances {
    zero_tol_relative: f64,
    margin_min: f64,
    max_segments: usize,
    rank_tol: f64,
    char_ident_tol: f64,
    decomposition_tol: f64,
    stabilization_tol: f64,
    identity_tol: f64,
    abel_tol: f64,
}

impl Tolerances {
    fn defaults() -> Self {
        Tolerances {
            zero_tol_relative: ZERO_TOL,
            margin_min: MARGIN_MIN,
            max_segments: MAX_SEGMENTS,
            rank_tol: RANK_TOL,
            char_ident_tol: CHAR_IDENT_TOL,
            decomposition_tol: DECOMPOSITION_TOL,
            stabilization_tol: STABILIZATION_TOL,
            identity_tol: IDENTITY_TOL,
            abel_tol: ABEL_TOL,
        }
    }
}

/// Output of one run, before rendering.
pub struct Outcome {
    pub document: Value,
    pub exit_code: i32,
}

fn document(
    command: &str,
    inputs: Value,
    conventions: Value,
    truncation: Value,
    result: Value,
    tol: &Tolerances,
) -> Value {
    json!({
        "schema": SCHEMA,
        "command": command,
        "inputs": inputs,
        "conventions": conventions,
        "truncation": truncation,
        "tolerances": tol,
        "result": result,
    })
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("result types serialize")
}

fn cplx(z: C64) -> Value {
    json!([z.re, z.im])
}

fn parse_gamma(g: &Option<String>) -> Result<GammaSpec> {
    g.as_deref()
        .map_or(Ok(GammaSpec::Identity), GammaSpec::parse)
}

fn run_sfl(a: &SflArgs) -> Result<Outcome> {
    let family = load_family(&a.family)?;
    let gamma = parse_gamma(&a.gamma)?;
    let mut tol = Tolerances::defaults();
    let mut opts = PartitionOptions::default();
    if let Some(m) = a.margin_min {
        if !(m > 0.0) {
            return Err(SpecError::invalid("--margin-min must be positive"));
        }
        opts.margin_min = m;
        tol.margin_min = m;
    }
    if let Some(n) = a.max_segments {
        if n == 0 {
            return Err(SpecError::invalid("--max-segments must be positive"));
        }
        opts.max_segments = n;
        tol.max_segments = n;
    }
    opts.window_rule = match a.window_rule {
        WindowArg::LargestGap => WindowRule::LargestGap,
        WindowArg::SmallestRadius => WindowRule::SmallestRadius,
    };
    let action = resolve_action(&family, &gamma)?;
    let partition = build_flow_partition_with(&family, &opts)?;
    let flow = sfl_equivariant(&family, action.as_ref(), &partition)?;
    let result = json!({
        "sfl": flow.value,
        "sfl_plain": flow.total(),
        "per_character": flow.per_character,
        "decomposition_residual": flow.decomposition_residual(),
        "certification": {
            "segments": partition.segments(),
            "min_margin": partition.min_margin(),
            "window_rule": opts.window_rule,
        },
    });
    let truncation = family_truncation(&family);
    Ok(Outcome {
        document: document(
            "sfl",
            json!({"family_kind": family.kind(), "gamma": gamma.describe()}),
            json!({"endpoint": null, "action": action_label(&family)}),
            truncation,
            result,
            &tol,
        ),
        exit_code: 0,
    })
}

fn family_truncation(family: &Family) -> Value {
    match family {
        Family::Modes(m) => json!({"j_max": m.truncation()}),
        _ => Value::Null,
    }
}

fn action_label(family: &Family) -> Value {
    match family {
        Family::Modes(_) => json!("modes"),
        Family::Curves(_) => json!("curve-characters"),
        Family::Sampled(_) => json!("matrix"),
    }
}

fn run_index(a: &IndexArgs) -> Result<Outcome> {
    let family = load_family(&a.family)?;
    let gamma = parse_gamma(&a.gamma)?;
    let action = resolve_action(&family, &gamma)?;
    let problem = ApsProblem::new(family.clone(), a.variant.into(), a.convention.into())
        .with_horizon(a.horizon)?;
    let idx = solve_index(&problem, action.as_ref())?;
    let side = flow_side(&problem, action.as_ref())?;
    let residual = (idx.index.value - side.value.value).norm();
    if residual > CROSS_CHECK_TOL {
        return Err(SpecError::InternalInconsistency(format!(
            "index {} differs from the spectral-flow side {} by {residual:e}",
            idx.index.value, side.value.value
        )));
    }
    let result = json!({
        "index": idx,
        "flow_side": {
            "sfl": side.flow.value,
            "terminal_kernel": side.terminal_kernel,
            "value": side.value,
        },
        "identity_residual": residual,
    });
    Ok(Outcome {
        document: document(
            "index",
            json!({"family_kind": family.kind(), "gamma": gamma.describe(), "horizon": a.horizon}),
            json!({"endpoint": problem.convention, "variant": problem.variant, "action": action_label(&family)}),
            family_truncation(&family),
            result,
            &Tolerances::defaults(),
        ),
        exit_code: 0,
    })
}

fn eta_report(spec: &CharacterSpectrum) -> Result<Value> {
    let closed = match eta_closed_form(spec) {
        Ok(v) => to_value(&v),
        Err(SpecError::UseNumericOracle) => Value::Null,
        Err(e) => return Err(e),
    };
    let abel = eta_abel_oracle(spec, None)?;
    Ok(json!({
        "closed_form": closed,
        "abel": abel,
        "kernel_trace": cplx(spec.kernel_trace()),
    }))
}

fn run_eta(a: &EtaArgs) -> Result<Outcome> {
    let s0 = load_spectrum(&a.spectrum)?;
    let mut result = json!({"spectrum0": eta_report(&s0)?});
    if let Some(s1) = &a.spectrum1 {
        let s1 = load_spectrum(s1)?;
        result["spectrum1"] = eta_report(&s1)?;
        result["boundary_term"] = to_value(&boundary_term(&s0, &s1)?);
    }
    Ok(Outcome {
        document: document(
            "eta",
            json!({"spectrum0": s0, "spectrum1": a.spectrum1.as_ref().map(|s| load_spectrum(s)).transpose()?}),
            json!({"endpoint": null, "action": null}),
            Value::Null,
            result,
            &Tolerances::defaults(),
        ),
        exit_code: 0,
    })
}

fn run_verify(a: &VerifyArgs) -> Result<Outcome> {
    if !a.random {
        return Err(SpecError::invalid("verify-identity needs --random"));
    }
    if a.n == 0 {
        return Err(SpecError::invalid("--n must be positive"));
    }
    let suite = identity_suite(a.seed, a.n)?;
    let exit_code = if suite.passed == suite.count { 0 } else { 4 };
    Ok(Outcome {
        document: document(
            "verify-identity",
            json!({
                "seed": a.seed,
                "n": a.n,
                "generator": "ChaCha8 seeded per instance; Haar unitaries from QR of complex Gaussian matrices; \
                              block-diagonal equivariant families conjugated by a random unitary",
            }),
            json!({"endpoint": Convention::Strict, "variants": [Variant::Lorentzian, Variant::Riemannian], "action": "matrix"}),
            Value::Null,
            json!({
                "passed": suite.passed,
                "count": suite.count,
                "max_residual": suite.max_residual,
                "instances": suite.instances,
            }),
            &Tolerances::defaults(),
        ),
        exit_code,
    })
}

fn circle_report(model: &CircleModel, z: C64, convention: Convention) -> Result<Value> {
    let family = Family::Modes(build_circle_family(model, z)?);
    let problem = ApsProblem::new(family.clone(), Variant::Lorentzian, convention);
    let idx = solve_index(&problem, None)?;
    let side = flow_side(&problem, None)?;
    let residual = (idx.index.value - side.value.value).norm();
    if residual > CROSS_CHECK_TOL {
        return Err(SpecError::InternalInconsistency(format!(
            "circle index {} differs from the spectral-flow side {}",
            idx.index.value, side.value.value
        )));
    }
    let dec = index_decomposition_check(&problem, None)?;
    Ok(json!({
        "sfl": side.flow.value,
        "sfl_plain": side.flow.total(),
        "sfl_per_character": side.flow.per_character,
        "terminal_kernel": side.terminal_kernel,
        "index": idx.index,
        "index_per_character": dec.per_character,
        "identity_residual": residual,
    }))
}

fn stable(a: &Value, b: &Value, key: &str) -> bool {
    let get = |v: &Value| -> Option<(f64, f64)> {
        let x = v.get(key)?.get("value")?;
        Some((x.get(0)?.as_f64()?, x.get(1)?.as_f64()?))
    };
    match (get(a), get(b)) {
        (Some(x), Some(y)) => (x.0 - y.0).abs() <= 1e-9 && (x.1 - y.1).abs() <= 1e-9,
        _ => false,
    }
}

fn run_example(a: &ExampleArgs) -> Result<Outcome> {
    match a.name {
        ExampleName::CircleK1 | ExampleName::CircleK2 => {
            if a.theta.is_some() {
                return Err(SpecError::invalid(
                    "--theta only applies to the Berger example",
                ));
            }
            let gamma = parse_gamma(&a.gamma)?;
            let z = gamma.unit()?;
            let base = if a.name == ExampleName::CircleK1 {
                CircleModel::k1(a.jmax)
            } else {
                CircleModel::k2(a.jmax)
            };
            let model = base.with_convention(a.action.into());
            model.validate()?;
            let convention: Convention = a.convention.into();
            let main = circle_report(&model, z, convention)?;
            let doubled = CircleModel {
                j_max: 2 * a.jmax,
                ..model.clone()
            };
            let check = circle_report(&doubled, z, convention)?;
            let rhs = rhs_flat(&GeometryModel::Circle(model.clone()), z)?;
            let name = if a.name == ExampleName::CircleK1 {
                "circle-k1"
            } else {
                "circle-k2"
            };
            let mut result = main.clone();
            result["rhs_flat"] = to_value(&rhs);
            Ok(Outcome {
                document: document(
                    "example",
                    json!({"example": name, "model": model, "gamma": gamma.describe()}),
                    json!({"endpoint": convention, "action": model.action_convention.label(), "variant": Variant::Lorentzian}),
                    json!({
                        "j_max": a.jmax,
                        "stability": {
                            "doubled_j_max": 2 * a.jmax,
                            "sfl_stable": stable(&main, &check, "sfl"),
                            "index_stable": stable(&main, &check, "index"),
                        },
                    }),
                    result,
                    &Tolerances::defaults(),
                ),
                exit_code: 0,
            })
        }
        ExampleName::Berger => {
            let theta = match (a.theta, parse_gamma(&a.gamma)?) {
                (Some(t), GammaSpec::Identity) => t,
                (None, GammaSpec::Su2(t)) => t,
                (None, GammaSpec::Identity) => 0.0,
                _ => {
                    return Err(SpecError::invalid(
                        "give the Berger group element once, as --theta or --gamma theta=",
                    ))
                }
            };
            let convention: Convention = a.convention.into();
            let report = |n_max: u32| -> Result<(Value, BergerModel)> {
                let model = BergerModel::new(n_max);
                let fam = build_berger_family(&model, theta)?;
                let crossings = berger_crossings(&model, &fam);
                let family = Family::Curves(fam);
                let problem = ApsProblem::new(family, Variant::Lorentzian, convention);
                let side = flow_side(&problem, None)?;
                let idx = solve_index(&problem, None)?;
                Ok((
                    json!({
                        "crossings": crossings,
                        "sfl": side.flow.value,
                        "sfl_plain": side.flow.total(),
                        "sfl_per_character": side.flow.per_character,
                        "expected_character": su2_character(2, theta),
                        "index": idx.index,
                    }),
                    model,
                ))
            };
            let (main, model) = report(a.nmax)?;
            let (check, _) = report(2 * a.nmax)?;
            Ok(Outcome {
                document: document(
                    "example",
                    json!({"example": "berger", "model": model, "gamma": GammaSpec::Su2(theta).describe()}),
                    json!({"endpoint": convention, "action": "su2", "variant": Variant::Lorentzian}),
                    json!({
                        "n_max": a.nmax,
                        "stability": {
                            "doubled_n_max": 2 * a.nmax,
                            "sfl_stable": stable(&main, &check, "sfl"),
                            "index_stable": stable(&main, &check, "index"),
                        },
                    }),
                    main,
                    &Tolerances::defaults(),
                ),
                exit_code: 0,
            })
        }
    }
}

pub fn run(command: &Command) -> Result<Outcome> {
    match command {
        Command::Sfl(a) => run_sfl(a),
        Command::Index(a) => run_index(a),
        Command::Eta(a) => run_eta(a),
        Command::VerifyIdentity(a) => run_verify(a),
        Command::Example(a) => run_example(a),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Sfl(_) => "sfl",
        Command::Index(_) => "index",
        Command::Eta(_) => "eta",
        Command::VerifyIdentity(_) => "verify-identity",
        Command::Example(_) => "example",
    }
}

pub fn error_document(command: &str, e: &SpecError) -> Value {
    json!({
        "schema": SCHEMA,
        "command": command,
        "error": {"kind": e.kind(), "message": e.to_string(), "exit_code": e.exit_code()},
    })
}

/// `path,value` rows for every leaf of a JSON document.
pub fn flatten(doc: &Value) -> Vec<(String, String)> {
    fn walk(v: &Value, path: String, out: &mut Vec<(String, String)>) {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    let p = if path.is_empty() {
                        k.clone()
                    } else {
                        format!("{path}.{k}")
                    };
                    walk(x, p, out);
                }
            }
            Value::Array(a) => {
                for (i, x) in a.iter().enumerate() {
                    walk(x, format!("{path}[{i}]"), out);
                }
            }
            Value::String(s) => out.push((path, s.clone())),
            other => out.push((path, other.to_string())),
        }
    }
    let mut out = Vec::new();
    walk(doc, String::new(), &mut out);
    out
}

fn write_csv(path: &Path, doc: &Value) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["path", "value"])?;
    for (p, v) in flatten(doc) {
        w.write_record([p, v])?;
    }
    w.flush()
}

fn emit(cli: &Cli, doc: &Value) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(doc).expect("documents serialize") + "\n";
    match &cli.out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    if let Some(p) = &cli.csv {
        write_csv(p, doc)?;
    }
    Ok(())
}

/// Runs a parsed command line; returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let name = command_name(&cli.command);
    let (doc, code) = match run(&cli.command) {
        Ok(o) => (o.document, o.exit_code),
        Err(e) => {
            eprintln!("specflow {name}: {e}");
            (error_document(name, &e), e.exit_code())
        }
    };
    if let Err(e) = emit(cli, &doc) {
        eprintln!("specflow: cannot write output: {e}");
        return 2;
    }
    code
}

/// Entry point for the binary: parses `args`, runs, and returns the exit
/// code (2 for usage errors).
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let _ = e.print();
            match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            }
        }
    }
}
