//! The two example geometries: twisted circle bundles `A_t = i∂_x + tJ`
//! over `S¹` and Berger-sphere Dirac spectra, plus the flat-case right-hand
//! side of the index theorem.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::aps::{flow_side, ApsProblem, Convention, Variant};
use crate::cplx::{circle_distance, C64};
use crate::error::{Result, SpecError};
use crate::eta::{boundary_term, BoundaryTerm, CharacterSpectrum, FinitePoint, Progression};
use crate::family::{
    find_zero_crossings, Curve, CurveExpr, CurveFamily, Family, ModeBlock, ModeBlockFamily,
    ModeFamily, SampledFamily,
};
use crate::linalg::{ComplexMatrix, HermitianBlock};
use crate::symmetry::EquivariantValue;

/// Agreement required between the assembled right-hand side and an index.
pub const RHS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionConvention {
    /// `z` acts on fibers only, through `α(z)`.
    Fiber,
    /// Additionally rotates the base: mode `j` picks up `z^j`.
    FiberBase,
}

impl ActionConvention {
    pub fn label(self) -> &'static str {
        match self {
            ActionConvention::Fiber => "fiber",
            ActionConvention::FiberBase => "fiber_base",
        }
    }
}

/// `A_t = i∂_x + tJ` on `S¹ × ℂᵏ`, in the Fourier basis where mode `j`
/// is the block `j·I + tJ`.
///
/// `J` is stored by its eigenvalues: it commutes with the diagonal fiber
/// action, so both diagonalize in one basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleModel {
    pub twist: Vec<f64>,
    /// `α(z) = diag(z^{w_i})`.
    pub fiber_weights: Vec<i32>,
    pub j_max: i64,
    pub action_convention: ActionConvention,
}

impl CircleModel {
    /// `k = 1`, `J = 1`, `α(z) = z`.
    pub fn k1(j_max: i64) -> Self {
        CircleModel {
            twist: vec![1.0],
            fiber_weights: vec![1],
            j_max,
            action_convention: ActionConvention::Fiber,
        }
    }

    /// `k = 2`, `J = diag(1, −1)`, `α(z) = diag(1, z)`.
    pub fn k2(j_max: i64) -> Self {
        CircleModel {
            twist: vec![1.0, -1.0],
            fiber_weights: vec![0, 1],
            j_max,
            action_convention: ActionConvention::Fiber,
        }
    }

    pub fn with_convention(mut self, c: ActionConvention) -> Self {
        self.action_convention = c;
        self
    }

    pub fn k(&self) -> usize {
        self.twist.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.twist.is_empty() || self.twist.len() != self.fiber_weights.len() {
            return Err(SpecError::invalid(
                "twist and fiber weights need the same positive length",
            ));
        }
        if self.twist.iter().any(|x| !x.is_finite()) {
            return Err(SpecError::invalid("twist eigenvalues must be finite"));
        }
        if self.j_max < 1 {
            return Err(SpecError::invalid("j_max must be at least 1"));
        }
        Ok(())
    }

    pub fn alpha(&self, z: C64) -> ComplexMatrix {
        let d: Vec<C64> = self.fiber_weights.iter().map(|&w| z.powi(w)).collect();
        ComplexMatrix::from_diag(&d)
    }

    fn base_character(&self, z: C64, j: i64) -> C64 {
        match self.action_convention {
            ActionConvention::Fiber => C64::new(1.0, 0.0),
            ActionConvention::FiberBase => z.powi(j as i32),
        }
    }

    fn mode_character(&self, z: C64, j: i64, i: usize) -> C64 {
        self.base_character(z, j) * z.powi(self.fiber_weights[i])
    }

    /// Spectrum of `A_t` over all of `ℤ`, with the trace of `γ = z` on
    /// each eigenspace.
    pub fn endpoint_spectrum(&self, z: C64, t: f64) -> Result<CharacterSpectrum> {
        self.validate()?;
        check_unit(z)?;
        let mut finite = Vec::new();
        let mut progressions = Vec::new();
        let q = match self.action_convention {
            ActionConvention::Fiber => C64::new(1.0, 0.0),
            ActionConvention::FiberBase => z,
        };
        for (i, &mu) in self.twist.iter().enumerate() {
            // eigenvalues j + x, written as j' + a with a ∈ (0, 1], j = j' − s
            let x = t * mu;
            let mut a = x - x.floor();
            if !(1e-12..=1.0 - 1e-12).contains(&a) {
                a = 1.0;
            }
            let s = (x - a).round() as i64;
            let ch = |jp: i64| self.mode_character(z, jp - s, i);
            if a == 1.0 {
                finite.push(FinitePoint::kernel(1, ch(-1)));
                progressions.push(Progression::new(1.0, ch(0), ch(-2)).with_ratio(q));
            } else {
                progressions.push(Progression::new(a, ch(0), ch(-1)).with_ratio(q));
            }
        }
        Ok(
            CharacterSpectrum::new(finite, progressions)
                .with_gamma_id(format!("z={}", fmt_unit(z))),
        )
    }
}

fn check_unit(z: C64) -> Result<()> {
    if (z.norm() - 1.0).abs() > 1e-12 {
        return Err(SpecError::invalid(format!(
            "group element {z} is not on the unit circle"
        )));
    }
    Ok(())
}

fn fmt_unit(z: C64) -> String {
    format!("{:.12}{:+.12}i", z.re, z.im)
}

/// Mode blocks `j·I + tJ` for `|j| ≤ j_max` with `γ = z` acting through
/// `α(z)` and the base character of the action convention.
pub fn build_circle_family(model: &CircleModel, z: C64) -> Result<ModeBlockFamily> {
    model.validate()?;
    check_unit(z)?;
    let k = model.k();
    let mut modes = Vec::with_capacity(2 * model.j_max as usize + 1);
    for j in -model.j_max..=model.j_max {
        let start = HermitianBlock::from_real_diag(&vec![j as f64; k]);
        let end_diag: Vec<f64> = model.twist.iter().map(|mu| j as f64 + mu).collect();
        let end = HermitianBlock::from_real_diag(&end_diag);
        modes.push(ModeBlock {
            label: j,
            family: ModeFamily::Sampled(SampledFamily::linear(start, end)?),
            base_character: model.base_character(z, j),
        });
    }
    Ok(ModeBlockFamily::new(modes, Some(model.alpha(z)))?.with_truncation(model.j_max))
}

/// Berger metrics `g_λ` on `S³ = SU(2)` for `λ ∈ [λ_lo, λ_hi]`, with Dirac
/// spectrum organised by the irreducible representations `R_n`, `n ≤ n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BergerModel {
    pub n_max: u32,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
}

/// Upper end of the parameter range on which only one curve can vanish.
pub const BERGER_LAMBDA_MAX: f64 = 4.0 * std::f64::consts::SQRT_2;

impl BergerModel {
    pub fn new(n_max: u32) -> Self {
        BergerModel {
            n_max,
            lambda_lo: 1.0,
            lambda_hi: 5.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 1 {
            return Err(SpecError::invalid("n_max must be at least 1"));
        }
        if !(self.lambda_lo > 0.0
            && self.lambda_lo < self.lambda_hi
            && self.lambda_hi < BERGER_LAMBDA_MAX)
        {
            return Err(SpecError::invalid(format!(
                "lambda range [{}, {}] must satisfy 0 < lo < hi < 4√2",
                self.lambda_lo, self.lambda_hi
            )));
        }
        Ok(())
    }

    pub fn lambda_at(&self, t: f64) -> f64 {
        self.lambda_lo + t * (self.lambda_hi - self.lambda_lo)
    }
}

/// `χ_n(θ) = sin(nθ)/sin θ`, summed over weights so that `θ ∈ πℤ` is exact.
pub fn su2_character(n: u32, theta: f64) -> f64 {
    (0..n)
        .map(|m| ((n as f64 - 1.0 - 2.0 * m as f64) * theta).cos())
        .sum()
}

/// Eigenvalues `e^{i(n−1−2m)θ}` of the rotation by `θ` on `R_n`, with
/// coinciding ones merged.
pub fn su2_weights(n: u32, theta: f64) -> Vec<(C64, usize)> {
    let mut out: Vec<(C64, usize)> = Vec::new();
    for m in 0..n {
        let w = C64::from_polar(1.0, (n as f64 - 1.0 - 2.0 * m as f64) * theta);
        match out.iter_mut().find(|(x, _)| circle_distance(*x, w) < 1e-12) {
            Some(e) => e.1 += 1,
            None => out.push((w, 1)),
        }
    }
    out
}

/// One curve per Dirac eigenvalue branch, each carrying the weights of
/// `R_n` under `γ = rotation by θ`.
pub fn build_berger_family(model: &BergerModel, theta: f64) -> Result<CurveFamily> {
    model.validate()?;
    if !theta.is_finite() {
        return Err(SpecError::invalid("theta must be finite"));
    }
    let (lo, hi) = (model.lambda_lo, model.lambda_hi);
    let mut curves = Vec::new();
    for n in 1..=model.n_max {
        let weights = su2_weights(n, theta);
        let scaled = |k: usize| weights.iter().map(|&(w, m)| (w, m * k)).collect::<Vec<_>>();
        curves.push(Curve::new(
            format!("n={n}/top"),
            CurveExpr::BergerTop {
                n,
                lambda_lo: lo,
                lambda_hi: hi,
            },
            scaled(2),
        ));
        for p in 1..n {
            for (sign, tag) in [(1i8, "+"), (-1i8, "-")] {
                curves.push(Curve::new(
                    format!("n={n}/p={p}/{tag}"),
                    CurveExpr::BergerBranch {
                        n,
                        p,
                        sign,
                        lambda_lo: lo,
                        lambda_hi: hi,
                    },
                    scaled(1),
                ));
            }
        }
    }
    CurveFamily::new(curves)
}

#[derive(Debug, Clone, Serialize)]
pub struct BergerCrossing {
    pub label: String,
    pub lambda: f64,
    pub direction: i8,
    pub multiplicity: usize,
    #[serde(with = "crate::cplx")]
    pub character_sum: C64,
}

pub fn berger_crossings(model: &BergerModel, family: &CurveFamily) -> Vec<BergerCrossing> {
    find_zero_crossings(family)
        .into_iter()
        .map(|c| BergerCrossing {
            label: c.label,
            lambda: model.lambda_at(c.t),
            direction: c.direction,
            multiplicity: c.multiplicity,
            character_sum: c.character_sum,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum GeometryModel {
    Circle(CircleModel),
    Berger(BergerModel),
}

/// A model together with the family it generates.
#[derive(Debug, Clone, Serialize)]
pub struct ModelDocument {
    pub descriptor: GeometryModel,
    pub family: Family,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointSet {
    /// `M_γ = M`: `ℓ = 1`, `ℓ^⊥ = 0`.
    Whole,
    Empty,
}

#[derive(Debug, Clone, Serialize)]
pub struct RhsReport {
    pub fixed_point_set: FixedPointSet,
    pub interior: EquivariantValue,
    /// Closed-form value the interior quadrature is checked against.
    #[serde(with = "crate::cplx")]
    pub interior_exact: C64,
    pub quadrature_error: f64,
    pub boundary_transgression: EquivariantValue,
    pub b: BoundaryTerm,
    pub total: EquivariantValue,
    pub index_strict: EquivariantValue,
    pub index_inclusive: EquivariantValue,
    pub matches_strict: bool,
    pub matches_inclusive: bool,
}

/// Midpoint rule on an `n × n` grid over `[0, 1]_t × [0, 2π]_x` of
/// `(2πi)^{−1} tr(γ·F_{tx})`, with the curvature of `∇ = d − itJ dx` taken
/// by central differences of the connection coefficients.
pub fn interior_quadrature(model: &CircleModel, gamma: &ComplexMatrix, n: usize) -> C64 {
    let k = model.k();
    let conn_x = |t: f64, _x: f64| -> Vec<C64> {
        model
            .twist
            .iter()
            .map(|mu| C64::new(0.0, -t * mu))
            .collect()
    };
    let (ht, hx) = (1.0 / n as f64, 2.0 * PI / n as f64);
    let d = 1e-4;
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..n {
        let t = (a as f64 + 0.5) * ht;
        for b in 0..n {
            let x = (b as f64 + 0.5) * hx;
            // A_t ≡ 0 and A_x is diagonal, so F_tx = ∂_t A_x
            let plus = conn_x(t + d, x);
            let minus = conn_x(t - d, x);
            let f_tx: C64 = (0..k)
                .map(|i| gamma[(i, i)] * (plus[i] - minus[i]) / (2.0 * d))
                .sum();
            // the degree-two part of tr(γ e^{−Ω}) is −tr(γΩ), Ω = F
            acc += -f_tx * ht * hx;
        }
    }
    acc / C64::new(0.0, 2.0 * PI)
}

/// Interior, transgression and boundary terms of the index theorem for the
/// flat circle model, compared against both endpoint conventions.
pub fn rhs_flat(model: &GeometryModel, z: C64) -> Result<RhsReport> {
    let circle = match model {
        GeometryModel::Circle(c) => c,
        GeometryModel::Berger(_) => {
            return Err(SpecError::OutOfScope(
                "index formula for curved Berger geometries".into(),
            ))
        }
    };
    circle.validate()?;
    check_unit(z)?;
    let gamma_id = format!("z={}", fmt_unit(z));
    let is_identity = (z - C64::new(1.0, 0.0)).norm() <= 1e-14;
    let fixed = if is_identity || circle.action_convention == ActionConvention::Fiber {
        FixedPointSet::Whole
    } else {
        FixedPointSet::Empty
    };
    let alpha = circle.alpha(z);
    let (interior, interior_exact, quadrature_error) = match fixed {
        FixedPointSet::Whole => {
            let q = interior_quadrature(circle, &alpha, 64);
            let exact: C64 = (0..circle.k())
                .map(|i| alpha[(i, i)] * circle.twist[i])
                .sum();
            (q, exact, (q - exact).norm())
        }
        FixedPointSet::Empty => (C64::new(0.0, 0.0), C64::new(0.0, 0.0), 0.0),
    };
    let b = boundary_term(
        &circle.endpoint_spectrum(z, 0.0)?,
        &circle.endpoint_spectrum(z, 1.0)?,
    )?;
    let total = interior + b.b_value.value;

    let family = Family::Modes(build_circle_family(circle, z)?);
    let side = |c: Convention| {
        flow_side(
            &ApsProblem::new(family.clone(), Variant::Lorentzian, c),
            None,
        )
    };
    let strict = side(Convention::Strict)?.value;
    let inclusive = side(Convention::Inclusive)?.value;
    let matches_strict = (strict.value - total).norm() < RHS_TOL;
    let matches_inclusive = (inclusive.value - total).norm() < RHS_TOL;
    Ok(RhsReport {
        fixed_point_set: fixed,
        interior: EquivariantValue::complex(interior, gamma_id.clone()),
        interior_exact,
        quadrature_error,
        boundary_transgression: EquivariantValue::zero(gamma_id.clone()),
        b,
        total: EquivariantValue::complex(total, gamma_id),
        index_strict: strict,
        index_inclusive: inclusive,
        matches_strict,
        matches_inclusive,
    })
}
