//! Equivariant η-invariants of spectra that are finite modifications of
//! arithmetic progressions, and the boundary term `𝔟`.
//!
//! A spectrum carries, for every eigenvalue λ, the trace `χ_λ = tr(γ|E_λ)`.
//! The η-function is `η_γ(s) = Σ sign(λ)|λ|^{−s} χ_λ` and `η_γ` is its
//! continuation to `s = 0`.

use serde::{Deserialize, Serialize};

use crate::cplx::{cis, C64};
use crate::error::{Result, SpecError};
use crate::symmetry::EquivariantValue;

/// Largest `|λ|` treated as a kernel eigenvalue.
pub const KERNEL_TOL: f64 = 1e-10;
/// Abel oracle: extrapolation error above which the oracle gives up.
pub const ABEL_TOL: f64 = 1e-5;
/// Abel oracle: bound on the discarded tail of every truncated sum.
pub const TAIL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitePoint {
    pub value: f64,
    pub multiplicity: usize,
    /// Per-unit character; the trace contribution is `multiplicity · character`.
    #[serde(with = "crate::cplx")]
    pub character: C64,
    /// Kernel entries (value 0) enter kernel traces, never η.
    #[serde(default)]
    pub kernel: bool,
}

impl FinitePoint {
    pub fn new(value: f64, multiplicity: usize, character: C64) -> Self {
        FinitePoint {
            value,
            multiplicity,
            character,
            kernel: false,
        }
    }

    pub fn kernel(multiplicity: usize, character: C64) -> Self {
        FinitePoint {
            value: 0.0,
            multiplicity,
            character,
            kernel: true,
        }
    }

    pub fn trace(&self) -> C64 {
        self.character * self.multiplicity as f64
    }
}

/// `{c(j + a) : j ∈ ℤ} \ {0}` with traces
/// `w₊ qᵐ` at `c(m + a)` and `w₋ q⁻ᵐ` at `−c(m + b)`, `m ≥ 0`, where
/// `b = 1 − a`, or `b = 1` when `a = 1` (the zero is excluded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progression {
    pub offset: f64,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(with = "crate::cplx")]
    pub w_plus: C64,
    #[serde(with = "crate::cplx")]
    pub w_minus: C64,
    #[serde(with = "crate::cplx", default = "unit")]
    pub ratio: C64,
}

fn one() -> f64 {
    1.0
}

fn unit() -> C64 {
    C64::new(1.0, 0.0)
}

impl Progression {
    pub fn new(offset: f64, w_plus: C64, w_minus: C64) -> Self {
        Progression {
            offset,
            scale: 1.0,
            w_plus,
            w_minus,
            ratio: unit(),
        }
    }

    pub fn with_ratio(mut self, q: C64) -> Self {
        self.ratio = q;
        self
    }

    pub fn with_scale(mut self, c: f64) -> Self {
        self.scale = c;
        self
    }

    /// Offset of the negative branch.
    pub fn negative_offset(&self) -> f64 {
        if self.offset == 1.0 {
            1.0
        } else {
            1.0 - self.offset
        }
    }

    pub fn has_trivial_ratio(&self) -> bool {
        (self.ratio - unit()).norm() <= 1e-14
    }

    fn validate(&self) -> Result<()> {
        if !(self.offset > 0.0 && self.offset <= 1.0) {
            return Err(SpecError::invalid(format!(
                "progression offset {} outside (0, 1]",
                self.offset
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(SpecError::invalid(format!(
                "progression scale {} must be positive",
                self.scale
            )));
        }
        if ((self.ratio.norm() - 1.0).abs()) > 1e-12 {
            return Err(SpecError::invalid("progression ratio must have modulus 1"));
        }
        if !(self.w_plus.norm().is_finite() && self.w_minus.norm().is_finite()) {
            return Err(SpecError::invalid("progression weights must be finite"));
        }
        Ok(())
    }

    /// Trace at the m-th positive and m-th negative point.
    fn traces(&self, m: usize) -> (C64, C64) {
        let phase = self.ratio.arg() * m as f64;
        (self.w_plus * cis(phase), self.w_minus * cis(-phase))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CharacterSpectrum {
    #[serde(default)]
    pub finite_part: Vec<FinitePoint>,
    #[serde(default)]
    pub progressions: Vec<Progression>,
    #[serde(default = "default_gamma")]
    pub gamma_id: String,
}

fn default_gamma() -> String {
    "identity".into()
}

impl CharacterSpectrum {
    pub fn new(finite_part: Vec<FinitePoint>, progressions: Vec<Progression>) -> Self {
        CharacterSpectrum {
            finite_part,
            progressions,
            gamma_id: default_gamma(),
        }
    }

    pub fn with_gamma_id(mut self, id: impl Into<String>) -> Self {
        self.gamma_id = id.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.finite_part {
            if !p.value.is_finite() || !p.character.norm().is_finite() {
                return Err(SpecError::invalid("non-finite spectral point"));
            }
            if p.kernel && p.value.abs() > KERNEL_TOL {
                return Err(SpecError::invalid(format!(
                    "kernel entry has non-zero value {}",
                    p.value
                )));
            }
            if !p.kernel && p.value.abs() <= KERNEL_TOL {
                return Err(SpecError::invalid(
                    "zero eigenvalue must be tagged as kernel",
                ));
            }
        }
        self.progressions.iter().try_for_each(Progression::validate)
    }

    /// `tr(γ|ker)` from the kernel-tagged entries.
    pub fn kernel_trace(&self) -> C64 {
        self.finite_part
            .iter()
            .filter(|p| p.kernel)
            .map(FinitePoint::trace)
            .sum()
    }

    /// The spectrum under `λ ↦ cλ`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.finite_part {
            p.value *= c;
        }
        for p in &mut out.progressions {
            p.scale *= c;
        }
        out
    }

    fn finite_eta(&self) -> C64 {
        self.finite_part
            .iter()
            .filter(|p| !p.kernel)
            .map(|p| p.trace() * p.value.signum())
            .sum()
    }
}

/// η from `ζ_H(0, a) = ½ − a` for trivial-ratio progressions.
pub fn eta_closed_form(spectrum: &CharacterSpectrum) -> Result<EquivariantValue> {
    spectrum.validate()?;
    let mut eta = spectrum.finite_eta();
    for p in &spectrum.progressions {
        if !p.has_trivial_ratio() {
            return Err(SpecError::UseNumericOracle);
        }
        let a = p.offset;
        let b = p.negative_offset();
        eta += p.w_plus * (0.5 - a) - p.w_minus * (0.5 - b);
    }
    Ok(EquivariantValue::complex(eta, spectrum.gamma_id.clone()))
}

#[derive(Debug, Clone, Serialize)]
pub struct AbelEstimate {
    pub value: EquivariantValue,
    /// Difference between the two highest extrapolation orders.
    pub error_estimate: f64,
    /// Coefficient of the `1/ε` pole of the regularized sum.
    #[serde(with = "crate::cplx")]
    pub pole: C64,
    pub r_sequence: Vec<f64>,
}

/// `r = 1 − 2^{−k}` for `k = 4..=12`.
pub fn default_r_sequence() -> Vec<f64> {
    (4..=12).map(|k| 1.0 - 2f64.powi(-k)).collect()
}

/// Neumaier-compensated complex sum.
#[derive(Default)]
struct Accumulator {
    sum: C64,
    comp: C64,
}

impl Accumulator {
    fn add(&mut self, x: C64) {
        let (re, cre) = two_sum(self.sum.re, x.re);
        let (im, cim) = two_sum(self.sum.im, x.im);
        self.sum = C64::new(re, im);
        self.comp += C64::new(cre, cim);
    }

    fn total(&self) -> C64 {
        self.sum + self.comp
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let c = if a.abs() >= b.abs() {
        (a - s) + b
    } else {
        (b - s) + a
    };
    (s, c)
}

/// `Σ sign(λ) χ_λ e^{−ε|λ|}`, with every progression truncated where the
/// geometric tail bound drops below [`TAIL_TOL`].
fn abel_sum(spectrum: &CharacterSpectrum, eps: f64) -> C64 {
    let mut acc = Accumulator::default();
    for p in spectrum.finite_part.iter().filter(|p| !p.kernel) {
        acc.add(p.trace() * p.value.signum() * (-eps * p.value.abs()).exp());
    }
    for p in &spectrum.progressions {
        let step = eps * p.scale;
        let w = p.w_plus.norm().max(p.w_minus.norm()).max(1e-300);
        // tail beyond m terms ≤ w·e^{−step·m}/(1 − e^{−step}) per branch
        let denom = -(-step).exp_m1();
        let m_max = ((2.0 * w / (TAIL_TOL * denom)).ln() / step).ceil().max(1.0) as usize;
        let a = p.offset;
        let b = p.negative_offset();
        for m in 0..m_max {
            let (tp, tm) = p.traces(m);
            let mf = m as f64;
            acc.add(tp * (-step * (mf + a)).exp());
            acc.add(-tm * (-step * (mf + b)).exp());
        }
    }
    acc.total()
}

/// Value at 0 of the interpolating polynomial through `(x_i, y_i)`, with
/// the difference between the last two orders as error estimate.
fn neville_at_zero(xs: &[f64], ys: &[C64]) -> (C64, f64) {
    let n = xs.len();
    let mut p: Vec<C64> = ys.to_vec();
    let mut prev_top = p[n - 1];
    let mut top = p[n - 1];
    for k in 1..n {
        for i in (k..n).rev() {
            let (xi, xj) = (xs[i], xs[i - k]);
            p[i] = (p[i] * xj - p[i - 1] * xi) / (xj - xi);
        }
        prev_top = top;
        top = p[n - 1];
    }
    (top, (top - prev_top).norm())
}

/// η by Abel summation: with `ε = −ln r`, `F(ε) = c₋₁/ε + η + O(ε)`, so
/// `εF` extrapolates to `c₋₁` and `(εF − c₋₁)/ε` to `η`.
pub fn eta_abel_oracle(
    spectrum: &CharacterSpectrum,
    r_sequence: Option<&[f64]>,
) -> Result<AbelEstimate> {
    spectrum.validate()?;
    let rs: Vec<f64> = match r_sequence {
        Some(r) => r.to_vec(),
        None => default_r_sequence(),
    };
    if rs.len() < 3 {
        return Err(SpecError::invalid(
            "Abel oracle needs at least three r values",
        ));
    }
    if rs.iter().any(|&r| !(r > 0.0 && r < 1.0)) || rs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpecError::invalid(
            "r sequence must increase strictly inside (0, 1)",
        ));
    }
    let eps: Vec<f64> = rs.iter().map(|r| -r.ln()).collect();
    let y: Vec<C64> = eps.iter().map(|&e| abel_sum(spectrum, e) * e).collect();
    let (pole, pole_err) = neville_at_zero(&eps, &y);
    let z: Vec<C64> = y.iter().zip(&eps).map(|(yi, e)| (yi - pole) / e).collect();
    let (eta, eta_err) = neville_at_zero(&eps, &z);
    let error_estimate = eta_err.max(pole_err);
    if error_estimate > ABEL_TOL || !eta.norm().is_finite() {
        return Err(SpecError::NoConvergence {
            residual: error_estimate,
        });
    }
    Ok(AbelEstimate {
        value: EquivariantValue::complex(eta, spectrum.gamma_id.clone()),
        error_estimate,
        pole,
        r_sequence: rs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaMethod {
    ClosedForm,
    AbelOracle,
}

/// Closed form where available, otherwise the Abel oracle.
pub fn eta(spectrum: &CharacterSpectrum) -> Result<(EquivariantValue, EtaMethod)> {
    match eta_closed_form(spectrum) {
        Ok(v) => Ok((v, EtaMethod::ClosedForm)),
        Err(SpecError::UseNumericOracle) => Ok((
            eta_abel_oracle(spectrum, None)?.value,
            EtaMethod::AbelOracle,
        )),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryComponents {
    #[serde(with = "crate::cplx")]
    pub kernel_trace_0: C64,
    #[serde(with = "crate::cplx")]
    pub kernel_trace_1: C64,
    #[serde(with = "crate::cplx")]
    pub eta_0: C64,
    #[serde(with = "crate::cplx")]
    pub eta_1: C64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryTerm {
    pub b_value: EquivariantValue,
    pub components: BoundaryComponents,
    pub eta_methods: (EtaMethod, EtaMethod),
}

/// `𝔟 = −½(tr(γ|ker A(0)) + tr(γ|ker A(1)) + η_γ(A(0)) − η_γ(A(1)))`.
pub fn boundary_term(a0: &CharacterSpectrum, a1: &CharacterSpectrum) -> Result<BoundaryTerm> {
    let (e0, m0) = eta(a0)?;
    let (e1, m1) = eta(a1)?;
    let components = BoundaryComponents {
        kernel_trace_0: a0.kernel_trace(),
        kernel_trace_1: a1.kernel_trace(),
        eta_0: e0.value,
        eta_1: e1.value,
    };
    let b = -0.5
        * (components.kernel_trace_0 + components.kernel_trace_1 + components.eta_0
            - components.eta_1);
    Ok(BoundaryTerm {
        b_value: EquivariantValue::complex(b, a0.gamma_id.clone()),
        components,
        eta_methods: (m0, m1),
    })
}
