//! Equivariant index of `D = ∂_t − iB(t)` (and `D̂ = ∂_t + B(t)`) on
//! `[0, T]` under APS boundary conditions.
//!
//! Kernel elements are solutions `f' = iBf` with `f(0) ∈ V₀ = E_<0(B(0))`
//! and `f(T) ∈ V₁`, where `V₁ = E_>0(B(T))` (strict) or `E_≥0(B(T))`
//! (inclusive). With propagator `Φ`, the kernel is the null space of
//! `Q_{V₁⊥}* Φ Q_{V₀}`. The adjoint problem has solutions `g' = iBg` for the
//! Lorentzian operator and `g' = Bg` for the Riemannian one, with
//! `g(0) ∈ V₀⊥` and `g(T) ∈ V₁⊥`; its solution space is propagated by
//! `Φ^{−*}`.

use serde::{Deserialize, Serialize};

use crate::cplx::{C64, ONE};
use crate::error::{Result, SpecError};
use crate::family::{CurveFamily, Family, ModeBlockFamily, ModeFamily, SampledFamily};
use crate::flow::{equivariant_flow, merge_counts, FlowResult, DECOMPOSITION_TOL};
use crate::linalg::{
    default_steps, kernel_basis_scaled, propagate_resolvent_pair, require_separated,
    singular_values, ComplexMatrix, Generator, HermitianBlock, PropagatorPair, RANK_TOL,
};
use crate::parallel::par_map;
use crate::symmetry::{
    character_counts, equivariant_trace, require_commutes, EquivariantValue, SymmetryAction,
};

/// Relative change of boundary-map singular values accepted as converged
/// for the Riemannian propagator.
pub const STABILIZATION_TOL: f64 = 1e-8;

const MAX_REFINEMENTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `∂_t − iB`
    Lorentzian,
    /// `∂_t + B`
    Riemannian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// `f(T) ∈ E_(0,∞)(B(T))`
    Strict,
    /// `f(T) ∈ E_[0,∞)(B(T))`
    Inclusive,
}

impl Convention {
    /// Whether an eigenvalue at `T` lies in the admitted terminal space.
    fn admits(self, v: f64, ztol: f64) -> bool {
        match self {
            Convention::Strict => v > ztol,
            Convention::Inclusive => v >= -ztol,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ApsProblem {
    pub family: Family,
    pub horizon: f64,
    pub variant: Variant,
    pub convention: Convention,
}

impl ApsProblem {
    pub fn new(family: impl Into<Family>, variant: Variant, convention: Convention) -> Self {
        ApsProblem {
            family: family.into(),
            horizon: 1.0,
            variant,
            convention,
        }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(SpecError::invalid("horizon must be positive"));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn with_family(&self, family: impl Into<Family>) -> Self {
        ApsProblem {
            family: family.into(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexResult {
    pub index: EquivariantValue,
    pub kernel_trace: EquivariantValue,
    pub cokernel_trace: EquivariantValue,
    pub kernel_dim: usize,
    pub cokernel_dim: usize,
    /// Smallest singular-value gap ratio behind any rank decision.
    pub boundary_map_rank_gap: f64,
    /// Largest propagator step count used.
    pub steps: usize,
    /// Riemannian only: final relative change of boundary-map singular values.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stabilization: Option<f64>,
    pub variant: Variant,
    pub convention: Convention,
}

/// Result of solving one block.
#[derive(Debug, Clone, Default)]
struct Piece {
    kernel: Vec<(C64, i64)>,
    cokernel: Vec<(C64, i64)>,
    kernel_trace: C64,
    cokernel_trace: C64,
    gap: f64,
    steps: usize,
    stabilization: Option<f64>,
}

/// Eigenvalues of the endpoint must be clearly zero or clearly non-zero.
fn check_endpoint(block: &HermitianBlock, ztol: f64) -> Result<()> {
    let limit = RANK_TOL * block.norm().max(1.0);
    for &v in block.eigenvalues() {
        if v.abs() > ztol && v.abs() < limit {
            return Err(SpecError::DegenerateEndpoint { eigenvalue: v });
        }
    }
    Ok(())
}

/// Per-interval step counts aligned with the sample knots.
fn knot_steps(s: &SampledFamily, horizon: f64) -> Vec<usize> {
    let total = default_steps(s.norm_max(), horizon) as f64;
    s.samples()
        .windows(2)
        .map(|w| ((total * (w[1].t - w[0].t)).ceil() as usize).max(2))
        .collect()
}

/// Propagator over `[0, T]`, stepping each knot interval separately so that
/// the generator is smooth on every step.
fn propagate(
    s: &SampledFamily,
    horizon: f64,
    steps: &[usize],
    scale: usize,
    generator: Generator,
) -> Result<PropagatorPair> {
    let n = s.dim();
    let mut forward = ComplexMatrix::identity(n);
    let mut inverse = ComplexMatrix::identity(n);
    let mut total = 0;
    for (w, &k) in s.samples().windows(2).zip(steps) {
        let pair = propagate_resolvent_pair(
            |t| s.at(t / horizon),
            horizon * w[0].t,
            horizon * w[1].t,
            k * scale,
            generator,
        )?;
        forward = &pair.forward * &forward;
        inverse = &inverse * &pair.inverse;
        total += k * scale;
    }
    Ok(PropagatorPair {
        forward,
        inverse,
        steps: total,
    })
}

struct BoundaryData {
    v0: ComplexMatrix,
    v0_perp: ComplexMatrix,
    v1: ComplexMatrix,
    v1_perp: ComplexMatrix,
}

/// Boundary maps `(Q_{V₁⊥}* Φ Q_{V₀}, Q_{V₁}* Φ^{−*} Q_{V₀⊥})`.
fn boundary_maps(bd: &BoundaryData, pair: &PropagatorPair) -> (ComplexMatrix, ComplexMatrix) {
    let fwd = &(&bd.v1_perp.adjoint() * &pair.forward) * &bd.v0;
    let adj = &(&bd.v1.adjoint() * &pair.inverse.adjoint()) * &bd.v0_perp;
    (fwd, adj)
}

/// Reference norms `(‖Φ‖, ‖Φ^{−1}‖)` for the boundary-map rank decisions.
fn pair_scales(pair: &PropagatorPair) -> (f64, f64) {
    (pair.forward.norm_spectral(), pair.inverse.norm_spectral())
}

fn relative_sv(m: &ComplexMatrix, scale: f64) -> Vec<f64> {
    let s = singular_values(m);
    let top = s.first().copied().unwrap_or(0.0).max(scale);
    if top == 0.0 {
        return s;
    }
    s.into_iter().map(|x| x / top).collect()
}

fn sv_change(
    a: &(ComplexMatrix, ComplexMatrix),
    b: &(ComplexMatrix, ComplexMatrix),
    scales: (f64, f64),
) -> f64 {
    let d = |x: &ComplexMatrix, y: &ComplexMatrix, scale: f64| {
        relative_sv(x, scale)
            .iter()
            .zip(relative_sv(y, scale))
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    };
    d(&a.0, &b.0, scales.0).max(d(&a.1, &b.1, scales.1))
}

/// `(4·P(2N) − P(N))/3` for the second-order symmetric scheme.
fn richardson(coarse: &PropagatorPair, fine: &PropagatorPair) -> PropagatorPair {
    let mix = |c: &ComplexMatrix, f: &ComplexMatrix| (&f.scale_real(4.0) - c).scale_real(1.0 / 3.0);
    PropagatorPair {
        forward: mix(&coarse.forward, &fine.forward),
        inverse: mix(&coarse.inverse, &fine.inverse),
        steps: fine.steps,
    }
}

/// Riemannian propagator refined until the boundary maps stabilize.
fn riemannian_pair(
    s: &SampledFamily,
    horizon: f64,
    bd: &BoundaryData,
) -> Result<(PropagatorPair, f64)> {
    let steps = knot_steps(s, horizon);
    let mut coarse = propagate(s, horizon, &steps, 1, Generator::Riemannian)?;
    let mut fine = propagate(s, horizon, &steps, 2, Generator::Riemannian)?;
    let mut prev = richardson(&coarse, &fine);
    let mut prev_maps = boundary_maps(bd, &prev);
    let mut change = f64::INFINITY;
    for level in 2..MAX_REFINEMENTS {
        coarse = fine;
        fine = propagate(s, horizon, &steps, 1 << level, Generator::Riemannian)?;
        let next = richardson(&coarse, &fine);
        let maps = boundary_maps(bd, &next);
        change = sv_change(&prev_maps, &maps, pair_scales(&next));
        prev = next;
        prev_maps = maps;
        if change <= STABILIZATION_TOL {
            return Ok((prev, change));
        }
    }
    Err(SpecError::NoConvergence { residual: change })
}

fn subspace_counts(
    action: Option<&SymmetryAction>,
    basis: &ComplexMatrix,
    base: C64,
) -> Result<(Vec<(C64, i64)>, C64)> {
    match action {
        None => Ok((
            vec![(base, basis.cols() as i64)],
            base * basis.cols() as f64,
        )),
        Some(a) => {
            let counts = character_counts(a, basis)?;
            let tr = equivariant_trace(a, basis)?.value;
            Ok((
                counts.into_iter().map(|(l, n)| (base * l, n)).collect(),
                base * tr,
            ))
        }
    }
}

fn solve_sampled(
    s: &SampledFamily,
    action: Option<&SymmetryAction>,
    base: C64,
    problem: &ApsProblem,
    ztol: f64,
) -> Result<Piece> {
    if let Some(a) = action {
        s.samples()
            .iter()
            .try_for_each(|x| require_commutes(a, &x.block))?;
    }
    let b0 = s.at(0.0);
    let b1 = s.at(1.0);
    check_endpoint(&b0, ztol)?;
    check_endpoint(&b1, ztol)?;
    let conv = problem.convention;
    let bd = BoundaryData {
        v0: b0.eigen().basis_where(|v| v < -ztol),
        v0_perp: b0.eigen().basis_where(|v| v >= -ztol),
        v1: b1.eigen().basis_where(|v| conv.admits(v, ztol)),
        v1_perp: b1.eigen().basis_where(|v| !conv.admits(v, ztol)),
    };
    let (pair, stabilization) = match problem.variant {
        Variant::Lorentzian => {
            let steps = knot_steps(s, problem.horizon);
            (
                propagate(s, problem.horizon, &steps, 1, Generator::Lorentzian)?,
                None,
            )
        }
        Variant::Riemannian => {
            let (p, c) = riemannian_pair(s, problem.horizon, &bd)?;
            (p, Some(c))
        }
    };
    let (fwd, adj) = boundary_maps(&bd, &pair);
    let (fwd_scale, inv_scale) = pair_scales(&pair);
    let ker = kernel_basis_scaled(&fwd, RANK_TOL, fwd_scale);
    require_separated(&ker)?;
    let coker = kernel_basis_scaled(&adj, RANK_TOL, inv_scale);
    require_separated(&coker)?;
    let ker_space = &bd.v0 * &ker.basis;
    let coker_space = &bd.v0_perp * &coker.basis;
    let (kernel, kernel_trace) = subspace_counts(action, &ker_space, base)?;
    let (cokernel, cokernel_trace) = subspace_counts(action, &coker_space, base)?;
    Ok(Piece {
        kernel,
        cokernel,
        kernel_trace,
        cokernel_trace,
        gap: ker.gap_ratio.min(coker.gap_ratio),
        steps: pair.steps,
        stabilization,
    })
}

/// Scalar curves decouple: each is a one-dimensional problem whose solution
/// never vanishes, so only the endpoint signs matter.
fn solve_curves(c: &CurveFamily, base: C64, conv: Convention, ztol: f64) -> Piece {
    let mut p = Piece {
        gap: f64::INFINITY,
        ..Default::default()
    };
    for curve in c.curves() {
        let (l0, l1) = (curve.eval(0.0), curve.eval(1.0));
        let in_v0 = l0 < -ztol;
        let admitted = conv.admits(l1, ztol);
        for comp in &curve.components {
            let chi = base * comp.character;
            let m = comp.multiplicity as i64;
            if in_v0 && admitted {
                p.kernel.push((chi, m));
                p.kernel_trace += chi * m as f64;
            }
            if !in_v0 && !admitted {
                p.cokernel.push((chi, m));
                p.cokernel_trace += chi * m as f64;
            }
        }
    }
    p
}

fn pieces(problem: &ApsProblem, action: Option<&SymmetryAction>) -> Result<(Vec<Piece>, String)> {
    let ztol = problem.family.zero_tol();
    let conv = problem.convention;
    match &problem.family {
        Family::Sampled(s) => {
            let id = action.map_or("identity".to_string(), |a| a.label().to_string());
            Ok((vec![solve_sampled(s, action, ONE, problem, ztol)?], id))
        }
        Family::Curves(c) => {
            if action.is_some() {
                return Err(SpecError::invalid(
                    "curve families carry their own characters",
                ));
            }
            Ok((
                vec![solve_curves(c, ONE, conv, ztol)],
                "curve-characters".into(),
            ))
        }
        Family::Modes(m) => {
            let fiber = match action {
                Some(a) => Some(a),
                None => m.fiber_symmetry()?,
            };
            let results = par_map(m.modes(), |mode| match &mode.family {
                ModeFamily::Sampled(s) => {
                    solve_sampled(s, fiber, mode.base_character, problem, ztol)
                }
                ModeFamily::Curves(c) => Ok(solve_curves(c, mode.base_character, conv, ztol)),
            });
            let id = format!("modes/{}", fiber.map_or("identity", |a| a.label()));
            Ok((results.into_iter().collect::<Result<Vec<_>>>()?, id))
        }
    }
}

/// Equivariant APS index from the propagator boundary map.
///
/// `action` is the symmetry for sampled families and overrides the fiber
/// action of mode families.
pub fn solve_index(problem: &ApsProblem, action: Option<&SymmetryAction>) -> Result<IndexResult> {
    let (pieces, gamma_id) = pieces(problem, action)?;
    let kernel = merge_counts(pieces.iter().flat_map(|p| p.kernel.iter().copied()));
    let cokernel = merge_counts(pieces.iter().flat_map(|p| p.cokernel.iter().copied()));
    let value = |counts: &[(C64, i64)], direct: C64| {
        let via = EquivariantValue::from_character_counts(counts, gamma_id.clone());
        EquivariantValue {
            value: direct,
            gamma_id: gamma_id.clone(),
            exact_integer: via.exact_integer,
        }
    };
    let kernel_trace = value(&kernel, pieces.iter().map(|p| p.kernel_trace).sum());
    let cokernel_trace = value(&cokernel, pieces.iter().map(|p| p.cokernel_trace).sum());
    for (tr, counts) in [(&kernel_trace, &kernel), (&cokernel_trace, &cokernel)] {
        let via: C64 = counts.iter().map(|(l, n)| l * *n as f64).sum();
        if (via - tr.value).norm() > DECOMPOSITION_TOL {
            return Err(SpecError::InternalInconsistency(format!(
                "trace {} disagrees with character counts {via}",
                tr.value
            )));
        }
    }
    let dim = |c: &[(C64, i64)]| c.iter().map(|(_, n)| *n as usize).sum();
    Ok(IndexResult {
        index: kernel_trace.clone() - cokernel_trace.clone(),
        kernel_dim: dim(&kernel),
        cokernel_dim: dim(&cokernel),
        kernel_trace,
        cokernel_trace,
        boundary_map_rank_gap: pieces.iter().map(|p| p.gap).fold(f64::INFINITY, f64::min),
        steps: pieces.iter().map(|p| p.steps).max().unwrap_or(0),
        stabilization: pieces
            .iter()
            .filter_map(|p| p.stabilization)
            .reduce(f64::max),
        variant: problem.variant,
        convention: problem.convention,
    })
}

/// `tr(γ|ker B(T))` with zero snapping.
pub fn terminal_kernel_trace(
    family: &Family,
    action: Option<&SymmetryAction>,
) -> Result<EquivariantValue> {
    let ztol = family.zero_tol();
    let sampled = |s: &SampledFamily, a: Option<&SymmetryAction>, base: C64| {
        let basis = s.at(1.0).eigen().basis_where(|v| v.abs() <= ztol);
        subspace_counts(a, &basis, base)
    };
    let curves = |c: &CurveFamily, base: C64| {
        let mut counts = Vec::new();
        for curve in c.curves() {
            if curve.eval(1.0).abs() <= ztol {
                for comp in &curve.components {
                    counts.push((base * comp.character, comp.multiplicity as i64));
                }
            }
        }
        counts
    };
    let (counts, gamma_id) = match family {
        Family::Sampled(s) => (
            sampled(s, action, ONE)?.0,
            action.map_or("identity".to_string(), |a| a.label().to_string()),
        ),
        Family::Curves(c) => (curves(c, ONE), "curve-characters".to_string()),
        Family::Modes(m) => {
            let fiber = match action {
                Some(a) => Some(a),
                None => m.fiber_symmetry()?,
            };
            let mut counts = Vec::new();
            for mode in m.modes() {
                match &mode.family {
                    ModeFamily::Sampled(s) => {
                        counts.extend(sampled(s, fiber, mode.base_character)?.0)
                    }
                    ModeFamily::Curves(c) => counts.extend(curves(c, mode.base_character)),
                }
            }
            (
                counts,
                format!("modes/{}", fiber.map_or("identity", |a| a.label())),
            )
        }
    };
    Ok(EquivariantValue::from_character_counts(
        &merge_counts(counts),
        gamma_id,
    ))
}

/// Spectral-flow side of the index identity: `sfl_γ − tr(γ|ker B(T))` for
/// the strict convention, `sfl_γ` for the inclusive one.
#[derive(Debug, Clone, Serialize)]
pub struct FlowSide {
    pub flow: FlowResult,
    pub terminal_kernel: EquivariantValue,
    pub value: EquivariantValue,
}

pub fn flow_side(problem: &ApsProblem, action: Option<&SymmetryAction>) -> Result<FlowSide> {
    let flow = equivariant_flow(&problem.family, action)?;
    let terminal_kernel = terminal_kernel_trace(&problem.family, action)?;
    let value = match problem.convention {
        Convention::Strict => flow.value.clone() - terminal_kernel.clone(),
        Convention::Inclusive => flow.value.clone(),
    };
    Ok(FlowSide {
        flow,
        terminal_kernel,
        value,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacterIndex {
    #[serde(with = "crate::cplx")]
    pub character: C64,
    pub index: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub direct: EquivariantValue,
    #[serde(with = "crate::cplx")]
    pub restricted_sum: C64,
    pub per_character: Vec<CharacterIndex>,
    pub residual: f64,
}

fn restricted_problems(
    problem: &ApsProblem,
    action: Option<&SymmetryAction>,
) -> Result<Vec<(C64, ApsProblem)>> {
    let mut out = Vec::new();
    match &problem.family {
        Family::Sampled(s) => match action {
            None => out.push((ONE, problem.clone())),
            Some(a) => {
                for ch in a.characters() {
                    out.push((
                        ch.eigenvalue,
                        problem.with_family(s.restrict(a, ch.eigenvalue)?),
                    ));
                }
            }
        },
        Family::Curves(c) => {
            for lam in c.characters() {
                out.push((
                    lam,
                    problem.with_family(c.restrict(lam).with_trivial_characters()),
                ));
            }
        }
        Family::Modes(m) => {
            let fiber = match action {
                Some(a) => Some(a),
                None => m.fiber_symmetry()?,
            };
            for mode in m.modes() {
                let single = |f: ModeFamily| {
                    ModeBlockFamily::new(
                        vec![crate::family::ModeBlock {
                            label: mode.label,
                            family: f,
                            base_character: ONE,
                        }],
                        None,
                    )
                };
                match (&mode.family, fiber) {
                    (ModeFamily::Sampled(s), Some(a)) => {
                        for ch in a.characters() {
                            let r = s.restrict(a, ch.eigenvalue)?;
                            out.push((
                                mode.base_character * ch.eigenvalue,
                                problem.with_family(single(ModeFamily::Sampled(r))?),
                            ));
                        }
                    }
                    (ModeFamily::Sampled(s), None) => out.push((
                        mode.base_character,
                        problem.with_family(single(ModeFamily::Sampled(s.clone()))?),
                    )),
                    (ModeFamily::Curves(c), _) => {
                        for lam in c.characters() {
                            out.push((
                                mode.base_character * lam,
                                problem.with_family(c.restrict(lam).with_trivial_characters()),
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Direct index against `Σ_λ λ·ind(restricted problem)`.
pub fn index_decomposition_check(
    problem: &ApsProblem,
    action: Option<&SymmetryAction>,
) -> Result<DecompositionReport> {
    let direct = solve_index(problem, action)?.index;
    let parts = restricted_problems(problem, action)?;
    let indices = par_map(&parts, |(lam, p)| {
        let r = solve_index(p, None)?;
        let n = r.index.exact_integer.ok_or_else(|| {
            SpecError::InternalInconsistency("restricted index is not an integer".into())
        })?;
        Ok((*lam, n))
    });
    let merged = merge_counts(indices.into_iter().collect::<Result<Vec<_>>>()?);
    let restricted_sum: C64 = merged.iter().map(|(l, n)| l * *n as f64).sum();
    let residual = (restricted_sum - direct.value).norm();
    if residual > DECOMPOSITION_TOL {
        return Err(SpecError::InternalInconsistency(format!(
            "direct index {} differs from Σ λ·ind_λ = {restricted_sum}",
            direct.value
        )));
    }
    Ok(DecompositionReport {
        direct,
        restricted_sum,
        per_character: merged
            .into_iter()
            .map(|(character, index)| CharacterIndex { character, index })
            .collect(),
        residual,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DeformationReport {
    pub parameters: Vec<f64>,
    pub indices: Vec<EquivariantValue>,
    pub max_deviation: f64,
}

fn endpoint_blocks(family: &Family) -> Result<Vec<ComplexMatrix>> {
    match family {
        Family::Sampled(s) => Ok(vec![s.at(0.0).matrix().clone(), s.at(1.0).matrix().clone()]),
        Family::Modes(m) => {
            let mut out = Vec::new();
            for mode in m.modes() {
                match &mode.family {
                    ModeFamily::Sampled(s) => {
                        out.push(s.at(0.0).matrix().clone());
                        out.push(s.at(1.0).matrix().clone());
                    }
                    ModeFamily::Curves(_) => {
                        return Err(SpecError::invalid("deformations need sampled blocks"))
                    }
                }
            }
            Ok(out)
        }
        Family::Curves(_) => Err(SpecError::invalid("deformations need sampled blocks")),
    }
}

/// Index along a deformation `s ↦ B_s` with `B_s(0)`, `B_s(T)` fixed.
pub fn deformation_invariance_check(
    path: &[(f64, ApsProblem)],
    action: Option<&SymmetryAction>,
) -> Result<DeformationReport> {
    let Some((_, first)) = path.first() else {
        return Err(SpecError::invalid("empty deformation path"));
    };
    let reference = endpoint_blocks(&first.family)?;
    for (s, p) in path {
        let ends = endpoint_blocks(&p.family)?;
        if ends.len() != reference.len()
            || ends
                .iter()
                .zip(&reference)
                .any(|(a, b)| a.rows() != b.rows() || a.max_abs_diff(b) > crate::flow::CONCAT_TOL)
        {
            return Err(SpecError::invalid(format!(
                "endpoints move at deformation parameter {s}"
            )));
        }
    }
    let results = par_map(path, |(_, p)| solve_index(p, action));
    let indices: Vec<EquivariantValue> = results
        .into_iter()
        .map(|r| r.map(|x| x.index))
        .collect::<Result<_>>()?;
    let max_deviation = indices
        .iter()
        .map(|v| (v.value - indices[0].value).norm())
        .fold(0.0, f64::max);
    if max_deviation > DECOMPOSITION_TOL {
        return Err(SpecError::InternalInconsistency(format!(
            "index moves by {max_deviation:e} along a deformation with fixed endpoints"
        )));
    }
    Ok(DeformationReport {
        parameters: path.iter().map(|(s, _)| *s).collect(),
        indices,
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cplx::cis;

    fn diag(v: &[f64]) -> HermitianBlock {
        HermitianBlock::from_real_diag(v)
    }

    #[test]
    fn constant_invertible_has_zero_index() {
        let f = SampledFamily::constant(diag(&[-1.0, -0.5, 2.0]));
        for variant in [Variant::Lorentzian, Variant::Riemannian] {
            for conv in [Convention::Strict, Convention::Inclusive] {
                let r = solve_index(&ApsProblem::new(f.clone(), variant, conv), None).unwrap();
                assert_eq!(r.index.exact_integer, Some(0));
                assert_eq!((r.kernel_dim, r.cokernel_dim), (0, 0));
            }
        }
    }

    #[test]
    fn scalar_crossing_gives_kernel() {
        let f = SampledFamily::linear(diag(&[-1.0]), diag(&[1.0])).unwrap();
        for variant in [Variant::Lorentzian, Variant::Riemannian] {
            let r = solve_index(
                &ApsProblem::new(f.clone(), variant, Convention::Strict),
                None,
            )
            .unwrap();
            assert_eq!((r.kernel_dim, r.cokernel_dim), (1, 0));
            let back = SampledFamily::linear(diag(&[1.0]), diag(&[-1.0])).unwrap();
            let r = solve_index(&ApsProblem::new(back, variant, Convention::Strict), None).unwrap();
            assert_eq!((r.kernel_dim, r.cokernel_dim), (0, 1));
        }
    }

    #[test]
    fn conventions_differ_by_terminal_kernel() {
        let f = SampledFamily::linear(diag(&[-1.0, 0.5]), diag(&[0.0, 0.5])).unwrap();
        let strict = solve_index(
            &ApsProblem::new(f.clone(), Variant::Lorentzian, Convention::Strict),
            None,
        )
        .unwrap();
        let incl = solve_index(
            &ApsProblem::new(f, Variant::Lorentzian, Convention::Inclusive),
            None,
        )
        .unwrap();
        assert_eq!(strict.index.exact_integer, Some(0));
        assert_eq!(incl.index.exact_integer, Some(1));
    }

    #[test]
    fn rotating_block_equivariant_index() {
        // B(t) = diag(-1 + 2t, 1 - 2t) with γ = diag(1, z)
        let z = cis(1.1);
        let gamma = crate::symmetry::decompose(&ComplexMatrix::from_diag(&[ONE, z])).unwrap();
        let f = SampledFamily::linear(diag(&[-1.0, 1.0]), diag(&[1.0, -1.0])).unwrap();
        let p = ApsProblem::new(f, Variant::Lorentzian, Convention::Strict);
        let r = solve_index(&p, Some(&gamma)).unwrap();
        assert!((r.index.value - (ONE - z)).norm() < 1e-12);
        let rep = index_decomposition_check(&p, Some(&gamma)).unwrap();
        assert!(rep.residual < 1e-12);
        let side = flow_side(&p, Some(&gamma)).unwrap();
        assert!((side.value.value - r.index.value).norm() < 1e-12);
    }

    #[test]
    fn near_zero_endpoint_is_rejected() {
        let f = SampledFamily::linear(diag(&[-1.0]), diag(&[1e-9])).unwrap();
        let p = ApsProblem::new(f, Variant::Lorentzian, Convention::Strict);
        assert!(matches!(
            solve_index(&p, None),
            Err(SpecError::DegenerateEndpoint { .. })
        ));
    }

    #[test]
    fn deformation_requires_fixed_endpoints() {
        let a = SampledFamily::linear(diag(&[-1.0]), diag(&[1.0])).unwrap();
        let b = SampledFamily::linear(diag(&[-1.0]), diag(&[2.0])).unwrap();
        let path = vec![
            (
                0.0,
                ApsProblem::new(a.clone(), Variant::Lorentzian, Convention::Strict),
            ),
            (
                1.0,
                ApsProblem::new(b, Variant::Lorentzian, Convention::Strict),
            ),
        ];
        assert!(deformation_invariance_check(&path, None).is_err());
        let bent = SampledFamily::from_pairs(vec![
            (0.0, diag(&[-1.0])),
            (0.5, diag(&[3.0])),
            (1.0, diag(&[1.0])),
        ])
        .unwrap();
        let path = vec![
            (
                0.0,
                ApsProblem::new(a, Variant::Lorentzian, Convention::Strict),
            ),
            (
                1.0,
                ApsProblem::new(bent, Variant::Lorentzian, Convention::Strict),
            ),
        ];
        let rep = deformation_invariance_check(&path, None).unwrap();
        assert_eq!(rep.max_deviation, 0.0);
    }
}
