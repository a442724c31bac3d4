//! Seeded self-verification harness for the index/spectral-flow identity.
//!
//! For each random equivariant family `B` and symmetry γ, under the strict
//! convention: `ind_γ(∂_t − iB) = ind_γ(∂_t + B) = sfl_γ(B) − tr(γ|ker B(1))`,
//! and both indices decompose as `Σ_λ λ·ind(restricted problem)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::aps::{
    flow_side, index_decomposition_check, solve_index, terminal_kernel_trace, ApsProblem,
    Convention, Variant,
};
use crate::cplx::C64;
use crate::error::Result;
use crate::family::Family;
use crate::parallel::par_map;
use crate::random::{random_equivariant_family, EquivariantInstance, RandomFamilyOptions};

/// Agreement required between the index and its spectral-flow expression.
pub const IDENTITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub instance: usize,
    pub dim: usize,
    pub characters: usize,
    #[serde(with = "crate::cplx")]
    pub lorentzian: C64,
    #[serde(with = "crate::cplx")]
    pub riemannian: C64,
    #[serde(with = "crate::cplx")]
    pub flow_side: C64,
    pub sfl: i64,
    pub terminal_kernel_dim: i64,
    /// `|ind − (sfl_γ − tr(γ|ker B(1)))|` for the Lorentzian operator.
    pub residual_lorentzian: f64,
    pub residual_riemannian: f64,
    pub variant_difference: f64,
    /// Largest `|ind_γ − Σ λ·ind_λ|` over both variants.
    pub index_decomposition_residual: f64,
    pub flow_decomposition_residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentitySuite {
    pub seed: u64,
    pub count: usize,
    pub passed: usize,
    pub tolerance: f64,
    pub max_residual: f64,
    pub instances: Vec<IdentityCheck>,
}

/// Instances in generation order for a seed.
pub fn random_instances(seed: u64, n: usize) -> Vec<EquivariantInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = RandomFamilyOptions::default();
    (0..n)
        .map(|_| {
            let mut inner = ChaCha8Rng::seed_from_u64(rng.random());
            random_equivariant_family(&opts, &mut inner)
        })
        .collect()
}

pub fn check_instance(index: usize, inst: &EquivariantInstance) -> Result<IdentityCheck> {
    let action = inst.action()?;
    let family = Family::Sampled(inst.family.clone());
    let lor = ApsProblem::new(family.clone(), Variant::Lorentzian, Convention::Strict);
    let rie = ApsProblem::new(family, Variant::Riemannian, Convention::Strict);
    let l = solve_index(&lor, Some(&action))?;
    let r = solve_index(&rie, Some(&action))?;
    let side = flow_side(&lor, Some(&action))?;
    let dl = index_decomposition_check(&lor, Some(&action))?;
    let dr = index_decomposition_check(&rie, Some(&action))?;
    let residual_lorentzian = (l.index.value - side.value.value).norm();
    let residual_riemannian = (r.index.value - side.value.value).norm();
    let variant_difference = (l.index.value - r.index.value).norm();
    let index_decomposition_residual = dl.residual.max(dr.residual);
    let flow_decomposition_residual = side.flow.decomposition_residual();
    let passed = residual_lorentzian < IDENTITY_TOL
        && residual_riemannian < IDENTITY_TOL
        && variant_difference < IDENTITY_TOL
        && index_decomposition_residual < 1e-9
        && flow_decomposition_residual < 1e-9;
    Ok(IdentityCheck {
        instance: index,
        dim: inst.layout.dim(),
        characters: inst.layout.characters.len(),
        lorentzian: l.index.value,
        riemannian: r.index.value,
        flow_side: side.value.value,
        sfl: side.flow.total(),
        terminal_kernel_dim: terminal_kernel_trace(&lor.family, None)?
            .exact_integer
            .unwrap_or(0),
        residual_lorentzian,
        residual_riemannian,
        variant_difference,
        index_decomposition_residual,
        flow_decomposition_residual,
        passed,
    })
}

/// Runs [`check_instance`] on `n` seeded instances; numerical failures
/// propagate as errors.
pub fn identity_suite(seed: u64, n: usize) -> Result<IdentitySuite> {
    let instances = random_instances(seed, n);
    let indexed: Vec<(usize, &EquivariantInstance)> = instances.iter().enumerate().collect();
    let checks = par_map(&indexed, |(i, inst)| check_instance(*i, inst));
    let instances = checks.into_iter().collect::<Result<Vec<_>>>()?;
    let max_residual = instances
        .iter()
        .map(|c| {
            c.residual_lorentzian
                .max(c.residual_riemannian)
                .max(c.variant_difference)
        })
        .fold(0.0, f64::max);
    Ok(IdentitySuite {
        seed,
        count: n,
        passed: instances.iter().filter(|c| c.passed).count(),
        tolerance: IDENTITY_TOL,
        max_residual,
        instances,
    })
}
