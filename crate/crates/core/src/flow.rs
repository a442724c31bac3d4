//! Spectral flow and equivariant spectral flow over certified partitions.
//!
//! `sfl = Σ_k dim E_[0,a_k](A(t_k)) − dim E_[0,a_k](A(t_{k−1}))`; the
//! equivariant version replaces dimensions by `tr(γ|·)`. Every equivariant
//! computation is done twice: directly from traces, and as `Σ_λ λ·sfl(A|E_λ)`
//! over the eigenspaces of γ.

use serde::Serialize;

use crate::cplx::{C64, ONE};
use crate::error::{Result, SpecError};
use crate::family::{
    build_flow_partition, verify_partition, CurveFamily, Family, FlowPartition, ModeBlock,
    ModeBlockFamily, ModeFamily, Sample, SampledFamily, MARGIN_MIN,
};
use crate::linalg::{hermitian_function, ComplexMatrix, HermitianBlock, RANK_TOL};
use crate::parallel::par_map;
use crate::symmetry::{
    equivariant_trace, require_commutes, EquivariantValue, SymmetryAction, CHAR_IDENT_TOL,
};

/// Agreement required between the direct and the restricted computation.
pub const DECOMPOSITION_TOL: f64 = 1e-9;

/// Endpoint blocks of concatenated families must agree to this tolerance.
pub const CONCAT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacterFlow {
    #[serde(with = "crate::cplx")]
    pub character: C64,
    pub sfl: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowResult {
    pub value: EquivariantValue,
    pub partition: FlowPartition,
    pub per_character: Vec<CharacterFlow>,
}

impl FlowResult {
    /// `Σ_λ sfl(A|E_λ)`, the plain spectral flow.
    pub fn total(&self) -> i64 {
        self.per_character.iter().map(|c| c.sfl).sum()
    }

    /// `|value − Σ_λ λ·sfl_λ|`
    pub fn decomposition_residual(&self) -> f64 {
        let sum: C64 = self
            .per_character
            .iter()
            .map(|c| c.character * c.sfl as f64)
            .sum();
        (self.value.value - sum).norm()
    }
}

fn in_window(v: f64, a: f64, ztol: f64) -> bool {
    v >= -ztol && v <= a
}

fn sampled_values(s: &SampledFamily, t: f64, f: &mut impl FnMut(f64, usize)) {
    s.at(t).eigenvalues().iter().for_each(|&v| f(v, 1));
}

fn curve_values(c: &CurveFamily, t: f64, f: &mut impl FnMut(f64, usize)) {
    c.curves()
        .iter()
        .for_each(|cv| f(cv.eval(t), cv.multiplicity()));
}

fn for_each_value(family: &Family, t: f64, mut f: impl FnMut(f64, usize)) {
    match family {
        Family::Sampled(s) => sampled_values(s, t, &mut f),
        Family::Curves(c) => curve_values(c, t, &mut f),
        Family::Modes(m) => {
            for b in m.modes() {
                match &b.family {
                    ModeFamily::Sampled(s) => sampled_values(s, t, &mut f),
                    ModeFamily::Curves(c) => curve_values(c, t, &mut f),
                }
            }
        }
    }
}

fn window_count(family: &Family, t: f64, a: f64, ztol: f64) -> i64 {
    let mut n = 0i64;
    for_each_value(family, t, |v, m| {
        if in_window(v, a, ztol) {
            n += m as i64;
        }
    });
    n
}

/// Counting formula without certification; `ztol` is the zero snap.
fn sfl_count(family: &Family, p: &FlowPartition, ztol: f64) -> i64 {
    (0..p.segments())
        .map(|k| {
            window_count(family, p.times[k + 1], p.radii[k], ztol)
                - window_count(family, p.times[k], p.radii[k], ztol)
        })
        .sum()
}

/// Integer spectral flow over a certified partition.
pub fn sfl(family: &Family, partition: &FlowPartition) -> Result<i64> {
    verify_partition(family, partition, MARGIN_MIN)?;
    Ok(sfl_count(family, partition, family.zero_tol()))
}

/// Spectral flow with an automatically built partition.
pub fn spectral_flow(family: &Family) -> Result<i64> {
    sfl(family, &build_flow_partition(family)?)
}

fn check_sampled_equivariance(s: &SampledFamily, action: &SymmetryAction) -> Result<()> {
    if action.dim() != s.dim() {
        return Err(SpecError::invalid(format!(
            "symmetry acts on dimension {} but the family has dimension {}",
            action.dim(),
            s.dim()
        )));
    }
    s.samples()
        .iter()
        .try_for_each(|x| require_commutes(action, &x.block))
}

/// Resolved symmetry: the action on sampled data (if any) and its label.
fn resolve<'a>(
    family: &'a Family,
    action: Option<&'a SymmetryAction>,
) -> Result<(Option<&'a SymmetryAction>, String)> {
    match family {
        Family::Sampled(s) => {
            if let Some(a) = action {
                check_sampled_equivariance(s, a)?;
            }
            Ok((
                action,
                action.map_or("identity".into(), |a| a.label().to_string()),
            ))
        }
        Family::Curves(_) => {
            if action.is_some() {
                return Err(SpecError::invalid(
                    "curve families carry their own characters",
                ));
            }
            Ok((None, "curve-characters".into()))
        }
        Family::Modes(m) => {
            let fiber = match action {
                Some(a) => Some(a),
                None => m.fiber_symmetry()?,
            };
            if let Some(a) = fiber {
                for mode in m.modes() {
                    if let ModeFamily::Sampled(s) = &mode.family {
                        check_sampled_equivariance(s, a)?;
                    }
                }
            }
            Ok((
                fiber,
                format!("modes/{}", fiber.map_or("identity", |a| a.label())),
            ))
        }
    }
}

/// Restrictions `(λ, A|E_λ)`; characters may repeat across modes.
fn restrictions(family: &Family, fiber: Option<&SymmetryAction>) -> Result<Vec<(C64, Family)>> {
    fn sampled(
        s: &SampledFamily,
        action: Option<&SymmetryAction>,
        base: C64,
        out: &mut Vec<(C64, Family)>,
    ) -> Result<()> {
        match action {
            None => out.push((base, Family::Sampled(s.clone()))),
            Some(a) => {
                for ch in a.characters() {
                    out.push((
                        base * ch.eigenvalue,
                        Family::Sampled(s.restrict(a, ch.eigenvalue)?),
                    ));
                }
            }
        }
        Ok(())
    }
    fn curves(c: &CurveFamily, base: C64, out: &mut Vec<(C64, Family)>) {
        for lam in c.characters() {
            out.push((base * lam, Family::Curves(c.restrict(lam))));
        }
    }
    let mut out = Vec::new();
    match family {
        Family::Sampled(s) => sampled(s, fiber, ONE, &mut out)?,
        Family::Curves(c) => curves(c, ONE, &mut out),
        Family::Modes(m) => {
            for mode in m.modes() {
                match &mode.family {
                    ModeFamily::Sampled(s) => sampled(s, fiber, mode.base_character, &mut out)?,
                    ModeFamily::Curves(c) => curves(c, mode.base_character, &mut out),
                }
            }
        }
    }
    Ok(out)
}

/// Sums integer counts attached to equal characters.
pub(crate) fn merge_counts(items: impl IntoIterator<Item = (C64, i64)>) -> Vec<(C64, i64)> {
    let mut out: Vec<(C64, i64)> = Vec::new();
    for (lam, n) in items {
        match out
            .iter_mut()
            .find(|(l, _)| (*l - lam).norm() <= CHAR_IDENT_TOL)
        {
            Some(e) => e.1 += n,
            None => out.push((lam, n)),
        }
    }
    out.sort_by(|a, b| a.0.arg().total_cmp(&b.0.arg()));
    out
}

fn sampled_window_trace(
    block: &HermitianBlock,
    action: Option<&SymmetryAction>,
    a: f64,
    ztol: f64,
) -> Result<C64> {
    let basis = block.eigen().basis_where(|v| in_window(v, a, ztol));
    match action {
        None => Ok(C64::new(basis.cols() as f64, 0.0)),
        Some(act) => Ok(equivariant_trace(act, &basis)?.value),
    }
}

fn curve_window_trace(c: &CurveFamily, t: f64, a: f64, ztol: f64) -> C64 {
    c.curves()
        .iter()
        .filter(|cv| in_window(cv.eval(t), a, ztol))
        .map(|cv| cv.character_sum())
        .sum()
}

/// `tr(γ|E_[0,a](A(t)))` from eigenvectors of the full operator.
fn window_trace(
    family: &Family,
    fiber: Option<&SymmetryAction>,
    t: f64,
    a: f64,
    ztol: f64,
) -> Result<C64> {
    match family {
        Family::Sampled(s) => sampled_window_trace(&s.at(t), fiber, a, ztol),
        Family::Curves(c) => Ok(curve_window_trace(c, t, a, ztol)),
        Family::Modes(m) => {
            let mut sum = C64::new(0.0, 0.0);
            for mode in m.modes() {
                let tr = match &mode.family {
                    ModeFamily::Sampled(s) => sampled_window_trace(&s.at(t), fiber, a, ztol)?,
                    ModeFamily::Curves(c) => curve_window_trace(c, t, a, ztol),
                };
                sum += mode.base_character * tr;
            }
            Ok(sum)
        }
    }
}

/// Equivariant spectral flow, computed directly and by restriction to the
/// eigenspaces of γ; the two must agree to [`DECOMPOSITION_TOL`].
///
/// `action` is the symmetry on sampled families, an override of the fiber
/// action on mode families, and must be `None` for curve families.
pub fn sfl_equivariant(
    family: &Family,
    action: Option<&SymmetryAction>,
    partition: &FlowPartition,
) -> Result<FlowResult> {
    verify_partition(family, partition, MARGIN_MIN)?;
    let (fiber, gamma_id) = resolve(family, action)?;
    let ztol = family.zero_tol();

    let parts = restrictions(family, fiber)?;
    let counts = par_map(&parts, |(lam, f)| (*lam, sfl_count(f, partition, ztol)));
    let merged = merge_counts(counts);

    let mut direct = C64::new(0.0, 0.0);
    for k in 0..partition.segments() {
        let a = partition.radii[k];
        direct += window_trace(family, fiber, partition.times[k + 1], a, ztol)?
            - window_trace(family, fiber, partition.times[k], a, ztol)?;
    }

    let via = EquivariantValue::from_character_counts(&merged, gamma_id.clone());
    let mismatch = (via.value - direct).norm();
    if mismatch > DECOMPOSITION_TOL {
        return Err(SpecError::InternalInconsistency(format!(
            "direct sfl_γ = {direct} but Σ λ·sfl_λ = {} (|Δ| = {mismatch:e})",
            via.value
        )));
    }
    let plain = sfl_count(family, partition, ztol);
    let total: i64 = merged.iter().map(|(_, n)| n).sum();
    if plain != total {
        return Err(SpecError::InternalInconsistency(format!(
            "plain sfl {plain} differs from the sum {total} over characters"
        )));
    }
    Ok(FlowResult {
        value: EquivariantValue {
            value: direct,
            gamma_id,
            exact_integer: via.exact_integer,
        },
        partition: partition.clone(),
        per_character: merged
            .into_iter()
            .map(|(character, sfl)| CharacterFlow { character, sfl })
            .collect(),
    })
}

/// [`sfl_equivariant`] with the default partition.
pub fn equivariant_flow(family: &Family, action: Option<&SymmetryAction>) -> Result<FlowResult> {
    sfl_equivariant(family, action, &build_flow_partition(family)?)
}

fn negative_count(family: &Family, t: f64, ztol: f64) -> Result<i64> {
    let mut n = 0i64;
    let mut bad = None;
    let exact_zeros_ok = matches!(family, Family::Curves(_));
    for_each_value(family, t, |v, m| {
        if v.abs() < ztol.max(RANK_TOL) && !(exact_zeros_ok && v == 0.0) {
            bad = Some(v);
        }
        if v < 0.0 {
            n += m as i64;
        }
    });
    match bad {
        Some(eigenvalue) => Err(SpecError::DegenerateEndpoint { eigenvalue }),
        None => Ok(n),
    }
}

/// `tr(γ|E_<0(A(0))) − tr(γ|E_<0(A(1)))`, defined for endpoints without
/// near-zero eigenvalues.
pub fn finite_dim_formula(
    family: &Family,
    action: Option<&SymmetryAction>,
) -> Result<EquivariantValue> {
    let (fiber, gamma_id) = resolve(family, action)?;
    let ztol = family.zero_tol();
    let mut counts = Vec::new();
    for (lam, f) in restrictions(family, fiber)? {
        counts.push((
            lam,
            negative_count(&f, 0.0, ztol)? - negative_count(&f, 1.0, ztol)?,
        ));
    }
    Ok(EquivariantValue::from_character_counts(
        &merge_counts(counts),
        gamma_id,
    ))
}

fn concat_sampled(a: &SampledFamily, b: &SampledFamily) -> Result<SampledFamily> {
    if a.dim() != b.dim() {
        return Err(SpecError::invalid(
            "concatenated families differ in dimension",
        ));
    }
    let end = &a.samples().last().expect("non-empty").block;
    let start = &b.samples()[0].block;
    let difference = end.matrix().max_abs_diff(start.matrix());
    if difference > CONCAT_TOL {
        return Err(SpecError::InvalidConcat { difference });
    }
    let mut samples: Vec<Sample> = a
        .samples()
        .iter()
        .map(|s| Sample {
            t: 0.5 * s.t,
            block: s.block.clone(),
        })
        .collect();
    samples.extend(b.samples().iter().skip(1).map(|s| Sample {
        t: 0.5 + 0.5 * s.t,
        block: s.block.clone(),
    }));
    SampledFamily::new(samples, None)
}

fn reverse_sampled(s: &SampledFamily) -> SampledFamily {
    let samples = s
        .samples()
        .iter()
        .rev()
        .map(|x| Sample {
            t: 1.0 - x.t,
            block: x.block.clone(),
        })
        .collect();
    SampledFamily::new(samples, Some(s.lipschitz_bound())).expect("reversal keeps validity")
}

fn same_mode_layout(a: &ModeBlockFamily, b: &ModeBlockFamily) -> Result<()> {
    let same = a.modes().len() == b.modes().len()
        && a.modes().iter().zip(b.modes()).all(|(x, y)| {
            x.label == y.label && (x.base_character - y.base_character).norm() <= CHAR_IDENT_TOL
        });
    if !same {
        return Err(SpecError::invalid(
            "mode families must have the same modes and characters",
        ));
    }
    Ok(())
}

/// `A` followed by `B`, each run at double speed.
pub fn concat(a: &Family, b: &Family) -> Result<Family> {
    match (a, b) {
        (Family::Sampled(x), Family::Sampled(y)) => Ok(Family::Sampled(concat_sampled(x, y)?)),
        (Family::Modes(x), Family::Modes(y)) => {
            same_mode_layout(x, y)?;
            if x.fiber_action() != y.fiber_action() {
                return Err(SpecError::invalid(
                    "mode families must share the fiber action",
                ));
            }
            let modes = x
                .modes()
                .iter()
                .zip(y.modes())
                .map(|(p, q)| match (&p.family, &q.family) {
                    (ModeFamily::Sampled(s1), ModeFamily::Sampled(s2)) => Ok(ModeBlock {
                        family: ModeFamily::Sampled(concat_sampled(s1, s2)?),
                        ..p.clone()
                    }),
                    _ => Err(SpecError::invalid(
                        "concatenation needs sampled mode blocks",
                    )),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Family::Modes(ModeBlockFamily::new(
                modes,
                x.fiber_action().cloned(),
            )?))
        }
        _ => Err(SpecError::invalid(
            "concatenation is defined for two sampled or two mode families",
        )),
    }
}

/// `t ↦ A(1 − t)`
pub fn reverse(family: &Family) -> Family {
    match family {
        Family::Sampled(s) => Family::Sampled(reverse_sampled(s)),
        Family::Curves(c) => Family::Curves(c.reversed()),
        Family::Modes(m) => {
            let modes = m
                .modes()
                .iter()
                .map(|b| ModeBlock {
                    family: match &b.family {
                        ModeFamily::Sampled(s) => ModeFamily::Sampled(reverse_sampled(s)),
                        ModeFamily::Curves(c) => ModeFamily::Curves(c.reversed()),
                    },
                    ..b.clone()
                })
                .collect();
            Family::Modes(
                ModeBlockFamily::new(modes, m.fiber_action().cloned()).expect("same layout"),
            )
        }
    }
}

/// `A ⊕ B`; sampled families are resampled on the union of their grids.
pub fn direct_sum(a: &Family, b: &Family) -> Result<Family> {
    match (a, b) {
        (Family::Sampled(x), Family::Sampled(y)) => {
            let times = crate::family::merge_times(&x.sample_times(), &y.sample_times());
            Ok(Family::Sampled(SampledFamily::from_pairs(
                times
                    .iter()
                    .map(|&t| (t, x.at(t).direct_sum(&y.at(t))))
                    .collect(),
            )?))
        }
        (Family::Curves(x), Family::Curves(y)) => Ok(Family::Curves(x.direct_sum(y))),
        _ => Err(SpecError::invalid(
            "direct sums are defined for two sampled or two curve families",
        )),
    }
}

/// `N(t)^{s/2} A(t) N(t)^{s/2}` on the union of both sample grids, for
/// positive weights with `N(0) = N(1) = I`.
pub fn congruence_homotopy(
    family: &SampledFamily,
    weights: &SampledFamily,
    s: f64,
) -> Result<SampledFamily> {
    if weights.dim() != family.dim() {
        return Err(SpecError::invalid("weights and family differ in dimension"));
    }
    let id = ComplexMatrix::identity(family.dim());
    for t in [0.0, 1.0] {
        if weights.at(t).matrix().max_abs_diff(&id) > CONCAT_TOL {
            return Err(SpecError::invalid(
                "weights must equal the identity at t = 0 and t = 1",
            ));
        }
    }
    let times = crate::family::merge_times(&family.sample_times(), &weights.sample_times());
    let pairs = times
        .iter()
        .map(|&t| {
            let n = weights.at(t);
            let min = n.eigenvalues().first().copied().unwrap_or(1.0);
            if !(min > 0.0) {
                return Err(SpecError::invalid(format!(
                    "weight at t = {t} is not positive"
                )));
            }
            let root = hermitian_function(&n, |l| C64::new(l.powf(0.5 * s), 0.0));
            let m = &(&root * family.at(t).matrix()) * &root;
            Ok((t, HermitianBlock::new(m.hermitian_part())?))
        })
        .collect::<Result<Vec<_>>>()?;
    SampledFamily::from_pairs(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cplx::cis;
    use crate::family::{Curve, CurveExpr};

    fn diag(v: &[f64]) -> HermitianBlock {
        HermitianBlock::from_real_diag(v)
    }

    #[test]
    fn constant_invertible_family_has_no_flow() {
        let f = Family::Sampled(SampledFamily::constant(diag(&[-1.0, 2.0, 0.5])));
        assert_eq!(spectral_flow(&f).unwrap(), 0);
    }

    #[test]
    fn scalar_upward_crossing() {
        let f = Family::Curves(
            CurveFamily::new(vec![Curve::trivial(
                "t-1/2",
                CurveExpr::Polynomial {
                    coeffs: vec![-0.5, 1.0],
                },
                1,
            )])
            .unwrap(),
        );
        assert_eq!(spectral_flow(&f).unwrap(), 1);
        assert_eq!(spectral_flow(&reverse(&f)).unwrap(), -1);
    }

    #[test]
    fn zero_at_final_time_counts_as_nonnegative() {
        // -1 + t reaches 0 exactly at t = 1
        let f = Family::Curves(
            CurveFamily::new(vec![Curve::trivial(
                "c",
                CurveExpr::Polynomial {
                    coeffs: vec![-1.0, 1.0],
                },
                1,
            )])
            .unwrap(),
        );
        assert_eq!(spectral_flow(&f).unwrap(), 1);
    }

    #[test]
    fn sampled_crossing_with_symmetry() {
        let z = cis(0.7);
        let gamma = crate::symmetry::decompose(&ComplexMatrix::from_diag(&[ONE, z])).unwrap();
        let f =
            Family::Sampled(SampledFamily::linear(diag(&[-1.0, 1.0]), diag(&[1.0, -1.0])).unwrap());
        let r = equivariant_flow(&f, Some(&gamma)).unwrap();
        assert!((r.value.value - (ONE - z)).norm() < 1e-12);
        assert_eq!(r.total(), 0);
        assert!(r.decomposition_residual() < 1e-12);
        assert_eq!(r.value.exact_integer, None);
        let plain = equivariant_flow(&f, None).unwrap();
        assert_eq!(plain.value.exact_integer, Some(0));
    }

    #[test]
    fn non_equivariant_action_rejected() {
        let sx = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let f = Family::Sampled(SampledFamily::constant(HermitianBlock::new(sx).unwrap()));
        let gamma = crate::symmetry::decompose(&ComplexMatrix::from_diag(&[ONE, -ONE])).unwrap();
        assert!(matches!(
            equivariant_flow(&f, Some(&gamma)),
            Err(SpecError::NotEquivariant { .. })
        ));
    }

    #[test]
    fn concat_checks_endpoints() {
        let a = Family::Sampled(SampledFamily::linear(diag(&[-1.0]), diag(&[1.0])).unwrap());
        let b = Family::Sampled(SampledFamily::linear(diag(&[1.0]), diag(&[2.0])).unwrap());
        let c = concat(&a, &b).unwrap();
        assert_eq!(spectral_flow(&c).unwrap(), 1);
        assert!(matches!(
            concat(&b, &a),
            Err(SpecError::InvalidConcat { .. })
        ));
        assert_eq!(reverse(&reverse(&a)), a);
    }

    #[test]
    fn finite_dim_formula_rejects_kernel() {
        let f =
            Family::Sampled(SampledFamily::linear(diag(&[-1.0, 0.0]), diag(&[1.0, 1.0])).unwrap());
        assert!(matches!(
            finite_dim_formula(&f, None),
            Err(SpecError::DegenerateEndpoint { .. })
        ));
        let g = Family::Sampled(
            SampledFamily::linear(diag(&[-1.0, -2.0]), diag(&[1.0, -1.0])).unwrap(),
        );
        assert_eq!(finite_dim_formula(&g, None).unwrap().exact_integer, Some(1));
    }

    #[test]
    fn congruence_keeps_endpoints() {
        let f = SampledFamily::linear(diag(&[-1.0, 0.5]), diag(&[1.0, -0.5])).unwrap();
        let w = SampledFamily::from_pairs(vec![
            (0.0, diag(&[1.0, 1.0])),
            (0.5, diag(&[3.0, 0.25])),
            (1.0, diag(&[1.0, 1.0])),
        ])
        .unwrap();
        let g = congruence_homotopy(&f, &w, 1.0).unwrap();
        assert_eq!(&g.at(0.0), &f.at(0.0));
        assert!((g.at(0.5).matrix()[(1, 1)].re - 0.0).abs() < 1e-15);
        let bad = SampledFamily::linear(diag(&[1.0, 1.0]), diag(&[2.0, 1.0])).unwrap();
        assert!(congruence_homotopy(&f, &bad, 1.0).is_err());
    }
}
