//! Unitary symmetries, their eigenspace decomposition, and equivariant
//! traces `tr(γ|X)`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::cplx::{self, C64, ONE};
use crate::error::{Result, SpecError};
use crate::linalg::{eigh, ComplexMatrix, HermitianBlock};

/// Symmetry eigenvalues closer than this on the unit circle are one character.
pub const CHAR_IDENT_TOL: f64 = 1e-10;
/// Distinct characters must be separated by more than this.
pub const CHAR_CLUSTER_TOL: f64 = 1e-8;
/// Relative commutator tolerance for [`check_commutes`].
pub const COMMUTE_TOL: f64 = 1e-10;
/// Absolute invariance tolerance for [`equivariant_trace`].
pub const INV_TOL: f64 = 1e-8;

const UNITARY_TOL: f64 = 1e-10;
// generic mixing weight for the commuting Hermitian pair (U + U*)/2, (U − U*)/2i
const MIX: f64 = 0.577_215_664_901_532_9;

/// One eigenvalue of γ with an orthonormal basis of its eigenspace.
#[derive(Debug, Clone)]
pub struct Character {
    pub eigenvalue: C64,
    pub basis: ComplexMatrix,
}

impl Character {
    pub fn multiplicity(&self) -> usize {
        self.basis.cols()
    }

    pub fn projector(&self) -> ComplexMatrix {
        &self.basis * &self.basis.adjoint()
    }
}

/// A unitary γ together with its characters `(λ, E_λ(γ))`.
#[derive(Debug, Clone)]
pub struct SymmetryAction {
    unitary: ComplexMatrix,
    characters: Vec<Character>,
    label: String,
}

impl SymmetryAction {
    pub fn identity(dim: usize) -> Self {
        SymmetryAction {
            unitary: ComplexMatrix::identity(dim),
            characters: vec![Character {
                eigenvalue: ONE,
                basis: ComplexMatrix::identity(dim),
            }],
            label: "identity".into(),
        }
    }

    /// Scalar action `z·I`.
    pub fn scalar(dim: usize, z: C64) -> Result<Self> {
        decompose(&ComplexMatrix::identity(dim).scale(z))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.unitary.rows()
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn characters(&self) -> &[Character] {
        &self.characters
    }

    pub fn is_identity(&self) -> bool {
        self.characters.len() == 1 && (self.characters[0].eigenvalue - ONE).norm() < CHAR_IDENT_TOL
    }

    /// The character whose eigenvalue matches `lambda`.
    pub fn character(&self, lambda: C64) -> Option<&Character> {
        self.characters
            .iter()
            .find(|c| cplx::circle_distance(c.eigenvalue, lambda) <= CHAR_CLUSTER_TOL)
    }

    /// `γ₁ ⊕ γ₂` on the direct sum of the two spaces.
    pub fn direct_sum(&self, other: &SymmetryAction) -> Result<SymmetryAction> {
        let u = ComplexMatrix::block_diag(&[&self.unitary, &other.unitary]);
        Ok(decompose(&u)?.with_label(format!("{}+{}", self.label, other.label)))
    }
}

/// Eigendecomposition of a unitary into characters.
///
/// The commuting Hermitian pair `H1 = (U + U*)/2`, `H2 = (U − U*)/2i` is
/// diagonalized jointly; eigenvalues are then clustered on the unit circle.
pub fn decompose(unitary: &ComplexMatrix) -> Result<SymmetryAction> {
    if !unitary.is_square() || unitary.rows() == 0 {
        return Err(SpecError::invalid(
            "symmetry must be a non-empty square matrix",
        ));
    }
    let res = unitary.unitarity_residual();
    if res > UNITARY_TOL {
        return Err(SpecError::invalid(format!(
            "matrix is not unitary (residual {res:e})"
        )));
    }
    let n = unitary.rows();
    let adj = unitary.adjoint();
    let h1 = (unitary + &adj).scale_real(0.5);
    let h2 = (unitary - &adj).scale(C64::new(0.0, -0.5));
    let mixed = HermitianBlock::with_tolerance(&h1 + &h2.scale_real(MIX), 1e-9)?;
    let h2 = HermitianBlock::with_tolerance(h2, 1e-9)?;
    let es = eigh(&mixed);

    // split near-degenerate clusters of the mixed operator by H2
    let mut vectors: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && es.values[end] - es.values[end - 1] < 1e-7 {
            end += 1;
        }
        let idx: Vec<usize> = (start..end).collect();
        let w = es.vectors.select_columns(&idx);
        if end - start == 1 {
            vectors.push(w.column(0));
        } else {
            let inner = eigh(&h2.compress(&w)?);
            let rotated = &w * &inner.vectors;
            for j in 0..rotated.cols() {
                vectors.push(rotated.column(j));
            }
        }
        start = end;
    }

    let lambdas: Vec<C64> = vectors
        .iter()
        .map(|v| {
            let uv = crate::linalg::mat_vec(unitary, v);
            let z: C64 = v.iter().zip(&uv).map(|(a, b)| a.conj() * b).sum();
            z / z.norm()
        })
        .collect();

    // union-find clustering on the unit circle
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let d = cplx::circle_distance(lambdas[i], lambdas[j]);
            if d < CHAR_IDENT_TOL {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            } else if d <= CHAR_CLUSTER_TOL {
                return Err(SpecError::ClusterAmbiguity {
                    first: format!("{}", lambdas[i]),
                    second: format!("{}", lambdas[j]),
                });
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, members)) => members.push(i),
            None => groups.push((r, vec![i])),
        }
    }
    let mut characters: Vec<Character> = groups
        .into_iter()
        .map(|(_, members)| {
            let mean: C64 = members.iter().map(|&i| lambdas[i]).sum();
            let cols: Vec<Vec<C64>> = members.iter().map(|&i| vectors[i].clone()).collect();
            Character {
                eigenvalue: mean / mean.norm(),
                basis: ComplexMatrix::from_columns(n, &cols),
            }
        })
        .collect();
    characters.sort_by(|a, b| a.eigenvalue.arg().total_cmp(&b.eigenvalue.arg()));

    let mut recon = ComplexMatrix::zeros(n, n);
    for c in &characters {
        recon = &recon + &c.projector().scale(c.eigenvalue);
    }
    let err = recon.max_abs_diff(unitary);
    if err > 1e-9 {
        return Err(SpecError::InternalInconsistency(format!(
            "character projectors reconstruct the symmetry only to {err:e}"
        )));
    }
    Ok(SymmetryAction {
        unitary: unitary.clone(),
        characters,
        label: "unitary".into(),
    })
}

/// `‖Uγ·M − M·Uγ‖_max`.
pub fn commutator_residual(action: &SymmetryAction, block: &HermitianBlock) -> Result<f64> {
    if action.dim() != block.dim() {
        return Err(SpecError::invalid(format!(
            "symmetry has dimension {} but operator has dimension {}",
            action.dim(),
            block.dim()
        )));
    }
    Ok(action.unitary.commutator(block.matrix()).norm_max())
}

pub fn check_commutes(action: &SymmetryAction, block: &HermitianBlock) -> Result<bool> {
    let r = commutator_residual(action, block)?;
    Ok(r <= COMMUTE_TOL * block.norm())
}

/// Fails with `NotEquivariant` unless the pair commutes.
pub fn require_commutes(action: &SymmetryAction, block: &HermitianBlock) -> Result<()> {
    let r = commutator_residual(action, block)?;
    if r <= COMMUTE_TOL * block.norm() {
        Ok(())
    } else {
        Err(SpecError::NotEquivariant { residual: r })
    }
}

/// Compression `W* M W` of `M` to the eigenspace `E_λ(γ)`.
pub fn restrict(
    action: &SymmetryAction,
    block: &HermitianBlock,
    lambda: C64,
) -> Result<HermitianBlock> {
    require_commutes(action, block)?;
    let ch = action.character(lambda).ok_or_else(|| {
        SpecError::invalid(format!("{lambda} is not a character of the symmetry"))
    })?;
    block.compress(&ch.basis)
}

/// A complex number attached to a group element; exact at the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivariantValue {
    #[serde(with = "crate::cplx")]
    pub value: C64,
    pub gamma_id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact_integer: Option<i64>,
}

impl EquivariantValue {
    pub fn complex(value: C64, gamma_id: impl Into<String>) -> Self {
        EquivariantValue {
            value,
            gamma_id: gamma_id.into(),
            exact_integer: None,
        }
    }

    pub fn integer(n: i64, gamma_id: impl Into<String>) -> Self {
        EquivariantValue {
            value: C64::new(n as f64, 0.0),
            gamma_id: gamma_id.into(),
            exact_integer: Some(n),
        }
    }

    pub fn zero(gamma_id: impl Into<String>) -> Self {
        Self::complex(C64::new(0.0, 0.0), gamma_id)
    }

    /// `Σ λ·n_λ`; exact when every `λ` is 1.
    pub fn from_character_counts(counts: &[(C64, i64)], gamma_id: impl Into<String>) -> Self {
        let value: C64 = counts.iter().map(|(l, n)| l * *n as f64).sum();
        let all_trivial = counts
            .iter()
            .all(|(l, _)| (l - ONE).norm() < CHAR_IDENT_TOL);
        EquivariantValue {
            value,
            gamma_id: gamma_id.into(),
            exact_integer: all_trivial.then(|| counts.iter().map(|(_, n)| n).sum()),
        }
    }

    /// Checks the exact-integer invariant.
    pub fn is_consistent(&self) -> bool {
        self.exact_integer
            .is_none_or(|n| (self.value - C64::new(n as f64, 0.0)).norm() < 1e-9)
    }
}

impl Add for EquivariantValue {
    type Output = EquivariantValue;

    fn add(self, rhs: Self) -> Self {
        EquivariantValue {
            value: self.value + rhs.value,
            exact_integer: self
                .exact_integer
                .zip(rhs.exact_integer)
                .map(|(a, b)| a + b),
            gamma_id: self.gamma_id,
        }
    }
}

impl Sub for EquivariantValue {
    type Output = EquivariantValue;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for EquivariantValue {
    type Output = EquivariantValue;

    fn neg(self) -> Self {
        EquivariantValue {
            value: -self.value,
            exact_integer: self.exact_integer.map(|n| -n),
            gamma_id: self.gamma_id,
        }
    }
}

impl Mul<f64> for EquivariantValue {
    type Output = EquivariantValue;

    fn mul(self, s: f64) -> Self {
        EquivariantValue {
            value: self.value * s,
            exact_integer: None,
            gamma_id: self.gamma_id,
        }
    }
}

fn check_subspace(action: &SymmetryAction, basis: &ComplexMatrix) -> Result<()> {
    if basis.rows() != action.dim() {
        return Err(SpecError::invalid(format!(
            "subspace basis has {} rows, symmetry acts on dimension {}",
            basis.rows(),
            action.dim()
        )));
    }
    let k = basis.cols();
    let gram = &basis.adjoint() * basis;
    let ortho = gram.max_abs_diff(&ComplexMatrix::identity(k));
    if ortho > 1e-8 {
        return Err(SpecError::invalid(format!(
            "subspace basis is not orthonormal ({ortho:e})"
        )));
    }
    let ub = &action.unitary * basis;
    let residual = (&ub - &(basis * &(&basis.adjoint() * &ub))).norm_max();
    if residual > INV_TOL {
        return Err(SpecError::NotInvariant { residual });
    }
    Ok(())
}

/// `dim(E_λ ∩ X)` for every character λ of γ, for a γ-invariant subspace `X`
/// given by orthonormal columns.
pub fn character_counts(action: &SymmetryAction, basis: &ComplexMatrix) -> Result<Vec<(C64, i64)>> {
    check_subspace(action, basis)?;
    let mut counts = Vec::with_capacity(action.characters.len());
    for ch in &action.characters {
        let overlap = &ch.basis.adjoint() * basis;
        let d = overlap.norm_frobenius().powi(2);
        let n = d.round();
        if (d - n).abs() > 1e-6 {
            return Err(SpecError::NotInvariant {
                residual: (d - n).abs(),
            });
        }
        counts.push((ch.eigenvalue, n as i64));
    }
    Ok(counts)
}

/// `tr(γ|X)` for a γ-invariant subspace `X` given by orthonormal columns.
///
/// Computed as `tr(B*UB)` and cross-checked against `Σ λ·dim(E_λ ∩ X)`.
pub fn equivariant_trace(
    action: &SymmetryAction,
    basis: &ComplexMatrix,
) -> Result<EquivariantValue> {
    if basis.cols() == 0 {
        check_subspace(action, basis)?;
        return Ok(if action.is_identity() {
            EquivariantValue::integer(0, action.label())
        } else {
            EquivariantValue::zero(action.label())
        });
    }
    let counts = character_counts(action, basis)?;
    let direct = (&basis.adjoint() * &(&action.unitary * basis)).trace();
    let via_characters = EquivariantValue::from_character_counts(&counts, action.label());
    let mismatch = (via_characters.value - direct).norm();
    if mismatch > 1e-8 {
        return Err(SpecError::InternalInconsistency(format!(
            "trace {direct} disagrees with character sum {} by {mismatch:e}",
            via_characters.value
        )));
    }
    Ok(EquivariantValue {
        value: direct,
        gamma_id: action.label().to_string(),
        exact_integer: via_characters.exact_integer,
    })
}
