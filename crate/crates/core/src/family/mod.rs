//! Time-parametrized self-adjoint families `A(t)`, `t ∈ [0, 1]`.
//!
//! Three representations share one interface:
//!
//! * [`SampledFamily`]: Hermitian matrices at sample times, linearly
//!   interpolated in between. The interpolant is the family; all
//!   certificates refer to it.
//! * [`CurveFamily`]: closed-form eigenvalue curves with multiplicities and
//!   symmetry characters.
//! * [`ModeBlockFamily`]: a direct sum over Fourier modes, each mode a
//!   sampled or curve family with a base character.

mod curves;
mod partition;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::cplx::{C64, ONE};
use crate::error::{Result, SpecError};
use crate::linalg::{ComplexMatrix, HermitianBlock};
use crate::symmetry::{decompose, restrict, SymmetryAction};

pub use curves::{
    find_zero_crossings, CharacterComponent, Crossing, Curve, CurveExpr, CurveFamily,
};
pub use partition::{
    build_flow_partition, build_flow_partition_with, envelope, verify_partition, FlowPartition,
    PartitionOptions, WindowRule, MARGIN_MIN, MAX_SEGMENTS,
};

/// Relative slack allowed on the declared Lipschitz bound.
pub const LIP_SLACK: f64 = 0.05;

/// Eigenvalues with modulus below `ZERO_TOL · max(1, ‖A‖)` are treated as
/// exact zeros.
pub const ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub block: HermitianBlock,
}

/// Piecewise-linear family through Hermitian samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SampledRepr", into = "SampledRepr")]
pub struct SampledFamily {
    samples: Vec<Sample>,
    lipschitz_bound: f64,
    /// `‖B_{i+1} − B_i‖ / (t_{i+1} − t_i)` per sample interval.
    slopes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SampledRepr {
    dim: usize,
    samples: Vec<Sample>,
    lipschitz_bound: f64,
}

impl TryFrom<SampledRepr> for SampledFamily {
    type Error = SpecError;

    fn try_from(r: SampledRepr) -> Result<Self> {
        let fam = SampledFamily::new(r.samples, Some(r.lipschitz_bound))?;
        if fam.dim() != r.dim {
            return Err(SpecError::invalid(format!(
                "declared dim {} does not match samples of dim {}",
                r.dim,
                fam.dim()
            )));
        }
        Ok(fam)
    }
}

impl From<SampledFamily> for SampledRepr {
    fn from(f: SampledFamily) -> Self {
        SampledRepr {
            dim: f.dim(),
            samples: f.samples,
            lipschitz_bound: f.lipschitz_bound,
        }
    }
}

impl PartialEq for SampledFamily {
    fn eq(&self, other: &Self) -> bool {
        self.samples == other.samples && self.lipschitz_bound == other.lipschitz_bound
    }
}

impl SampledFamily {
    /// Validates sample times (strictly increasing from 0 to 1) and the
    /// Lipschitz bound; `None` uses the tightest bound the samples allow.
    pub fn new(samples: Vec<Sample>, lipschitz_bound: Option<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(SpecError::invalid(
                "a sampled family needs samples at t = 0 and t = 1",
            ));
        }
        if samples[0].t != 0.0 || samples[samples.len() - 1].t != 1.0 {
            return Err(SpecError::invalid(
                "sample times must start at 0 and end at 1",
            ));
        }
        let dim = samples[0].block.dim();
        for w in samples.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(SpecError::invalid(
                    "sample times must be strictly increasing",
                ));
            }
        }
        if samples.iter().any(|s| s.block.dim() != dim) {
            return Err(SpecError::invalid(
                "all samples must have the same dimension",
            ));
        }
        let slopes: Vec<f64> = samples
            .windows(2)
            .map(|w| {
                let diff = w[1].block.matrix() - w[0].block.matrix();
                HermitianBlock::new(diff)
                    .map(|d| d.norm())
                    .unwrap_or(f64::INFINITY)
                    / (w[1].t - w[0].t)
            })
            .collect();
        let steepest = slopes.iter().copied().fold(0.0, f64::max);
        let lipschitz_bound = match lipschitz_bound {
            None => steepest,
            Some(b) => {
                if !(b >= 0.0) || !b.is_finite() {
                    return Err(SpecError::invalid(
                        "Lipschitz bound must be finite and non-negative",
                    ));
                }
                if steepest > b * (1.0 + LIP_SLACK) + 1e-12 {
                    return Err(SpecError::invalid(format!(
                        "samples change at rate {steepest} exceeding the Lipschitz bound {b}"
                    )));
                }
                b
            }
        };
        Ok(SampledFamily {
            samples,
            lipschitz_bound,
            slopes,
        })
    }

    pub fn from_pairs(pairs: Vec<(f64, HermitianBlock)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(t, block)| Sample { t, block })
                .collect(),
            None,
        )
    }

    pub fn constant(block: HermitianBlock) -> Self {
        Self::from_pairs(vec![(0.0, block.clone()), (1.0, block)]).expect("valid constant family")
    }

    /// `(1 − t)·start + t·end`.
    pub fn linear(start: HermitianBlock, end: HermitianBlock) -> Result<Self> {
        Self::from_pairs(vec![(0.0, start), (1.0, end)])
    }

    pub fn dim(&self) -> usize {
        self.samples[0].block.dim()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz_bound
    }

    pub fn sample_times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Index `i` with `t_i ≤ t ≤ t_{i+1}`.
    fn bracket(&self, t: f64) -> usize {
        let n = self.samples.len();
        match self.samples.binary_search_by(|s| s.t.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.clamp(1, n - 1) - 1,
        }
    }

    /// The interpolated operator; exactly the sample at sample times.
    pub fn at(&self, t: f64) -> HermitianBlock {
        let t = t.clamp(0.0, 1.0);
        if let Ok(i) = self.samples.binary_search_by(|s| s.t.total_cmp(&t)) {
            return self.samples[i].block.clone();
        }
        let i = self.bracket(t);
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        a.block.lerp(&b.block, (t - a.t) / (b.t - a.t))
    }

    /// Largest interpolation slope on sample intervals meeting `[u, v]`.
    pub fn slope_on(&self, u: f64, v: f64) -> f64 {
        let (i, j) = (self.bracket(u), self.bracket(v));
        let mut s: f64 = 0.0;
        for k in i..=j {
            if k < self.slopes.len() {
                s = s.max(self.slopes[k]);
            }
        }
        s
    }

    pub fn norm_max(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.block.norm())
            .fold(0.0, f64::max)
    }

    /// Same sample times, each block transformed.
    pub fn map_blocks(
        &self,
        mut f: impl FnMut(f64, &HermitianBlock) -> Result<HermitianBlock>,
    ) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|s| {
                Ok(Sample {
                    t: s.t,
                    block: f(s.t, &s.block)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SampledFamily::new(samples, None)
    }

    /// Compression to `E_λ(γ)` at every sample.
    pub fn restrict(&self, action: &SymmetryAction, lambda: C64) -> Result<Self> {
        self.map_blocks(|_, b| restrict(action, b, lambda))
    }

    /// Resample on the union of both sample grids.
    pub fn resample(&self, times: &[f64]) -> Result<Self> {
        Self::from_pairs(times.iter().map(|&t| (t, self.at(t))).collect())
    }
}

/// Union of two sorted time grids.
pub fn merge_times(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut set: BTreeSet<u64> = a.iter().map(|t| t.to_bits()).collect();
    set.extend(b.iter().map(|t| t.to_bits()));
    let mut out: Vec<f64> = set.into_iter().map(f64::from_bits).collect();
    out.sort_by(f64::total_cmp);
    out
}

/// A single mode's family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModeFamily {
    Sampled(SampledFamily),
    Curves(CurveFamily),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeBlock {
    pub label: i64,
    pub family: ModeFamily,
    #[serde(with = "crate::cplx")]
    pub base_character: C64,
}

/// Direct sum of mode families. The symmetry acts on mode `m` as
/// `base_character(m) · fiber_action`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ModesRepr", into = "ModesRepr")]
pub struct ModeBlockFamily {
    modes: Vec<ModeBlock>,
    fiber_action: Option<ComplexMatrix>,
    truncation: Option<i64>,
    fiber_symmetry: OnceLock<Option<SymmetryAction>>,
}

#[derive(Serialize, Deserialize)]
struct ModesRepr {
    modes: Vec<ModeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fiber_action: Option<ComplexMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truncation: Option<i64>,
}

impl TryFrom<ModesRepr> for ModeBlockFamily {
    type Error = SpecError;

    fn try_from(r: ModesRepr) -> Result<Self> {
        let mut fam = ModeBlockFamily::new(r.modes, r.fiber_action)?;
        fam.truncation = r.truncation;
        Ok(fam)
    }
}

impl From<ModeBlockFamily> for ModesRepr {
    fn from(f: ModeBlockFamily) -> Self {
        ModesRepr {
            modes: f.modes,
            fiber_action: f.fiber_action,
            truncation: f.truncation,
        }
    }
}

impl PartialEq for ModeBlockFamily {
    fn eq(&self, other: &Self) -> bool {
        self.modes == other.modes
            && self.fiber_action == other.fiber_action
            && self.truncation == other.truncation
    }
}

impl ModeBlockFamily {
    pub fn new(mut modes: Vec<ModeBlock>, fiber_action: Option<ComplexMatrix>) -> Result<Self> {
        modes.sort_by_key(|m| m.label);
        if modes.windows(2).any(|w| w[0].label == w[1].label) {
            return Err(SpecError::invalid("mode labels must be unique"));
        }
        if modes.is_empty() {
            return Err(SpecError::invalid("mode family needs at least one mode"));
        }
        for m in &modes {
            if (m.base_character.norm() - 1.0).abs() > 1e-12 {
                return Err(SpecError::invalid(format!(
                    "base character of mode {} is not unit modulus",
                    m.label
                )));
            }
            if let (Some(fa), ModeFamily::Sampled(s)) = (&fiber_action, &m.family) {
                if fa.rows() != s.dim() {
                    return Err(SpecError::invalid(format!(
                        "fiber action has dimension {} but mode {} has dimension {}",
                        fa.rows(),
                        m.label,
                        s.dim()
                    )));
                }
            }
        }
        Ok(ModeBlockFamily {
            modes,
            fiber_action,
            truncation: None,
            fiber_symmetry: OnceLock::new(),
        })
    }

    pub fn modes(&self) -> &[ModeBlock] {
        &self.modes
    }

    pub fn fiber_action(&self) -> Option<&ComplexMatrix> {
        self.fiber_action.as_ref()
    }

    pub fn truncation(&self) -> Option<i64> {
        self.truncation
    }

    pub fn max_label(&self) -> i64 {
        self.modes.iter().map(|m| m.label.abs()).max().unwrap_or(0)
    }

    /// Decomposed fiber action, or the supplied override.
    pub fn fiber_symmetry(&self) -> Result<Option<&SymmetryAction>> {
        if self.fiber_symmetry.get().is_none() {
            let sym = match &self.fiber_action {
                None => None,
                Some(u) => Some(decompose(u)?),
            };
            let _ = self.fiber_symmetry.set(sym);
        }
        Ok(self.fiber_symmetry.get().and_then(|s| s.as_ref()))
    }

    pub fn with_fiber_action(&self, fiber_action: Option<ComplexMatrix>) -> Result<Self> {
        let mut f = ModeBlockFamily::new(self.modes.clone(), fiber_action)?;
        f.truncation = self.truncation;
        Ok(f)
    }

    /// Marks the family as the `|j| ≤ j_max` truncation of an infinite one.
    pub fn with_truncation(mut self, j_max: i64) -> Self {
        self.truncation = Some(j_max);
        self
    }

    pub fn norm_max(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| match &m.family {
                ModeFamily::Sampled(s) => s.norm_max(),
                ModeFamily::Curves(c) => c.norm_max(),
            })
            .fold(0.0, f64::max)
    }
}

/// Keeps modes with `|label| ≤ j_max` and records the truncation.
pub fn truncate_modes(family: &ModeBlockFamily, j_max: i64) -> Result<ModeBlockFamily> {
    if j_max < 1 {
        return Err(SpecError::invalid("j_max must be at least 1"));
    }
    let modes: Vec<ModeBlock> = family
        .modes
        .iter()
        .filter(|m| m.label.abs() <= j_max)
        .cloned()
        .collect();
    let mut out = ModeBlockFamily::new(modes, family.fiber_action.clone())?;
    out.truncation = match family.truncation {
        Some(t) if t <= j_max => Some(t),
        _ => Some(j_max),
    };
    if family.max_label() <= j_max {
        out.truncation = family.truncation;
    }
    Ok(out)
}

/// Any of the three family representations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Family {
    Sampled(SampledFamily),
    Curves(CurveFamily),
    Modes(ModeBlockFamily),
}

impl Family {
    pub fn kind(&self) -> &'static str {
        match self {
            Family::Sampled(_) => "sampled",
            Family::Curves(_) => "curves",
            Family::Modes(_) => "modes",
        }
    }

    pub fn norm_max(&self) -> f64 {
        match self {
            Family::Sampled(s) => s.norm_max(),
            Family::Curves(c) => c.norm_max(),
            Family::Modes(m) => m.norm_max(),
        }
    }

    /// Absolute tolerance below which an eigenvalue counts as zero.
    pub fn zero_tol(&self) -> f64 {
        ZERO_TOL * self.norm_max().max(1.0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("family serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| SpecError::invalid(format!("family JSON: {e}")))
    }
}

impl From<SampledFamily> for Family {
    fn from(f: SampledFamily) -> Self {
        Family::Sampled(f)
    }
}

impl From<CurveFamily> for Family {
    fn from(f: CurveFamily) -> Self {
        Family::Curves(f)
    }
}

impl From<ModeBlockFamily> for Family {
    fn from(f: ModeBlockFamily) -> Self {
        Family::Modes(f)
    }
}

/// One eigenvalue (cluster) with its multiplicity and, when known, the
/// character of the symmetry on it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralPoint {
    pub value: f64,
    pub multiplicity: usize,
    #[serde(with = "crate::cplx::opt")]
    pub character: Option<C64>,
}

fn sampled_points(
    block: &HermitianBlock,
    action: Option<&SymmetryAction>,
    base: Option<C64>,
) -> Result<Vec<SpectralPoint>> {
    match action {
        None => Ok(block
            .eigenvalues()
            .iter()
            .map(|&value| SpectralPoint {
                value,
                multiplicity: 1,
                character: base,
            })
            .collect()),
        Some(action) => {
            let mut out = Vec::with_capacity(block.dim());
            for ch in action.characters() {
                let r = restrict(action, block, ch.eigenvalue)?;
                let c = base.unwrap_or(ONE) * ch.eigenvalue;
                out.extend(r.eigenvalues().iter().map(|&value| SpectralPoint {
                    value,
                    multiplicity: 1,
                    character: Some(c),
                }));
            }
            Ok(out)
        }
    }
}

/// Spectrum of `A(t)` with characters propagated from the representation.
pub fn spectrum_at(family: &Family, t: f64) -> Result<Vec<SpectralPoint>> {
    spectrum_with_action(family, None, t)
}

/// As [`spectrum_at`], with an explicit symmetry for sampled families (or a
/// fiber override for mode families).
pub fn spectrum_with_action(
    family: &Family,
    action: Option<&SymmetryAction>,
    t: f64,
) -> Result<Vec<SpectralPoint>> {
    if !(0.0..=1.0).contains(&t) {
        return Err(SpecError::invalid(format!("t = {t} outside [0, 1]")));
    }
    let mut pts = match family {
        Family::Sampled(s) => sampled_points(&s.at(t), action, None)?,
        Family::Curves(c) => {
            if action.is_some() {
                return Err(SpecError::invalid(
                    "curve families carry their own characters",
                ));
            }
            c.points_at(t, ONE)
        }
        Family::Modes(m) => {
            let fiber = match action {
                Some(a) => Some(a),
                None => m.fiber_symmetry()?,
            };
            let mut out = Vec::new();
            for mode in &m.modes {
                match &mode.family {
                    ModeFamily::Sampled(s) => {
                        out.extend(sampled_points(&s.at(t), fiber, Some(mode.base_character))?)
                    }
                    ModeFamily::Curves(c) => out.extend(c.points_at(t, mode.base_character)),
                }
            }
            out
        }
    };
    pts.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> HermitianBlock {
        HermitianBlock::from_real_diag(v)
    }

    #[test]
    fn sampled_validation() {
        assert!(SampledFamily::from_pairs(vec![(0.0, diag(&[1.0]))]).is_err());
        assert!(SampledFamily::from_pairs(vec![(0.0, diag(&[1.0])), (0.5, diag(&[1.0]))]).is_err());
        assert!(SampledFamily::from_pairs(vec![
            (0.0, diag(&[1.0])),
            (0.6, diag(&[1.0])),
            (0.6, diag(&[1.0])),
            (1.0, diag(&[1.0]))
        ])
        .is_err());
        let samples = vec![
            Sample {
                t: 0.0,
                block: diag(&[0.0]),
            },
            Sample {
                t: 1.0,
                block: diag(&[2.0]),
            },
        ];
        assert!(SampledFamily::new(samples.clone(), Some(1.0)).is_err());
        assert!(SampledFamily::new(samples.clone(), Some(1.95)).is_ok());
        assert_eq!(
            SampledFamily::new(samples, None).unwrap().lipschitz_bound(),
            2.0
        );
    }

    #[test]
    fn interpolation_and_exact_samples() {
        let f = SampledFamily::from_pairs(vec![
            (0.0, diag(&[1.0, -1.0])),
            (0.3, diag(&[0.1, 2.0 / 3.0])),
            (1.0, diag(&[-1.0, 0.5])),
        ])
        .unwrap();
        assert_eq!(&f.at(0.3), &f.samples()[1].block);
        let mid = f.at(0.15);
        assert!((mid.matrix()[(0, 0)].re - 0.55).abs() < 1e-15);
        let fam = Family::Sampled(f.clone());
        let pts = spectrum_at(&fam, 0.3).unwrap();
        let vals: Vec<f64> = pts.iter().map(|p| p.value).collect();
        assert_eq!(vals, f.samples()[1].block.eigenvalues().to_vec());
    }

    #[test]
    fn constant_family_spectrum() {
        let fam = Family::Sampled(SampledFamily::constant(diag(&[2.0, 1.0])));
        for t in [0.0, 0.37, 1.0] {
            let pts = spectrum_at(&fam, t).unwrap();
            assert_eq!(pts.len(), 2);
            assert_eq!((pts[0].value, pts[0].multiplicity), (1.0, 1));
            assert_eq!((pts[1].value, pts[1].multiplicity), (2.0, 1));
        }
    }

    #[test]
    fn truncation_is_identity_beyond_range() {
        let modes = (-3..=3)
            .map(|j| ModeBlock {
                label: j,
                family: ModeFamily::Sampled(SampledFamily::constant(diag(&[j as f64]))),
                base_character: ONE,
            })
            .collect();
        let fam = ModeBlockFamily::new(modes, None).unwrap();
        let t = truncate_modes(&fam, 5).unwrap();
        assert_eq!(t, fam);
        let t = truncate_modes(&fam, 2).unwrap();
        assert_eq!(t.modes().len(), 5);
        assert_eq!(t.truncation(), Some(2));
        assert!(truncate_modes(&fam, 0).is_err());
    }

    #[test]
    fn duplicate_mode_labels_rejected() {
        let m = ModeBlock {
            label: 1,
            family: ModeFamily::Sampled(SampledFamily::constant(diag(&[1.0]))),
            base_character: ONE,
        };
        assert!(ModeBlockFamily::new(vec![m.clone(), m], None).is_err());
    }

    #[test]
    fn family_json_schema() {
        let f = Family::Sampled(
            SampledFamily::linear(diag(&[0.1, -0.3]), diag(&[1.0 / 7.0, 2.0])).unwrap(),
        );
        let s = f.to_json();
        assert!(s.starts_with("{\"kind\":\"sampled\",\"dim\":2,"));
        assert_eq!(Family::from_json(&s).unwrap(), f);
        assert!(Family::from_json("{\"kind\":\"other\"}").is_err());
    }
}
