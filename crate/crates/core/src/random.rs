//! Seeded random instance generators.
//!
//! Haar-random unitaries come from modified Gram–Schmidt on complex
//! Gaussian matrices (the QR factor with positive diagonal). Equivariant
//! families are built block-diagonally per character and conjugated by a
//! Haar unitary.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::cplx::{circle_distance, cis, C64};
use crate::error::Result;
use crate::family::SampledFamily;
use crate::linalg::{hermitian_function, ComplexMatrix, HermitianBlock};
use crate::symmetry::{decompose, SymmetryAction};

fn gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed `n×n` unitary.
pub fn haar_unitary(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<C64> = (0..n).map(|_| gaussian(rng)).collect();
        for q in &cols {
            let dot: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(q) {
                *x -= dot * y;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    ComplexMatrix::from_columns(n, &cols)
}

/// GUE-like Hermitian matrix rescaled to spectral norm `norm`.
pub fn random_hermitian(n: usize, norm: f64, rng: &mut impl Rng) -> HermitianBlock {
    let g = ComplexMatrix::from_fn(n, n, |_, _| gaussian(rng));
    let h = HermitianBlock::new(g.hermitian_part()).expect("Hermitian part");
    let s = h.norm();
    if s == 0.0 {
        return h;
    }
    HermitianBlock::new(h.matrix().scale_real(norm / s)).expect("scaled Hermitian")
}

/// Hermitian matrix `W diag(values) W*` with Haar `W`.
pub fn hermitian_with_spectrum(values: &[f64], rng: &mut impl Rng) -> HermitianBlock {
    let w = haar_unitary(values.len(), rng);
    HermitianBlock::from_real_diag(values)
        .conjugate_by(&w)
        .expect("conjugated Hermitian")
}

/// Characters of a random symmetry and the unitary basis adapted to them.
#[derive(Debug, Clone)]
pub struct CharacterLayout {
    pub basis: ComplexMatrix,
    pub characters: Vec<C64>,
    pub multiplicities: Vec<usize>,
}

impl CharacterLayout {
    /// `1 ≤ count ≤ min(n, 3)` characters at least 0.2 apart on the circle,
    /// multiplicities summing to `n`, Haar basis.
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        assert!(n > 0, "empty layout");
        let count = rng.random_range(1..=n.min(3));
        let mut characters: Vec<C64> = Vec::with_capacity(count);
        if rng.random_bool(0.25) {
            characters.push(C64::new(1.0, 0.0));
        }
        while characters.len() < count {
            let z = cis(rng.random_range(-PI..PI));
            if characters.iter().all(|&c| circle_distance(c, z) >= 0.2) {
                characters.push(z);
            }
        }
        let mut multiplicities = vec![1; count];
        for _ in count..n {
            multiplicities[rng.random_range(0..count)] += 1;
        }
        CharacterLayout {
            basis: haar_unitary(n, rng),
            characters,
            multiplicities,
        }
    }

    pub fn dim(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn unitary(&self) -> ComplexMatrix {
        let diag: Vec<C64> = self
            .characters
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(&c, &m)| std::iter::repeat_n(c, m))
            .collect();
        &(&self.basis * &ComplexMatrix::from_diag(&diag)) * &self.basis.adjoint()
    }

    pub fn action(&self) -> Result<SymmetryAction> {
        Ok(decompose(&self.unitary())?.with_label("random"))
    }

    /// `V (⊕ blocks) V*`
    pub fn assemble(&self, blocks: &[HermitianBlock]) -> HermitianBlock {
        let mats: Vec<&ComplexMatrix> = blocks.iter().map(HermitianBlock::matrix).collect();
        let bd = ComplexMatrix::block_diag(&mats);
        let m = &(&self.basis * &bd) * &self.basis.adjoint();
        HermitianBlock::new(m.hermitian_part()).expect("assembled block is Hermitian")
    }

    /// Equivariant block with each character block of spectral norm ≤ `norm`.
    pub fn random_block(&self, norm: f64, rng: &mut impl Rng) -> HermitianBlock {
        let blocks: Vec<HermitianBlock> = self
            .multiplicities
            .iter()
            .map(|&m| random_hermitian(m, rng.random_range(0.1..=norm), rng))
            .collect();
        self.assemble(&blocks)
    }
}

#[derive(Debug, Clone)]
pub struct RandomFamilyOptions {
    pub dim_max: usize,
    pub norm_max: f64,
    pub interior_knots_max: usize,
    /// Probability of exact zero eigenvalues at `t = 1`.
    pub kernel_probability: f64,
    /// Smallest non-zero endpoint eigenvalue modulus.
    pub endpoint_gap: f64,
}

impl Default for RandomFamilyOptions {
    fn default() -> Self {
        RandomFamilyOptions {
            dim_max: 8,
            norm_max: 5.0,
            interior_knots_max: 4,
            kernel_probability: 0.3,
            endpoint_gap: 0.05,
        }
    }
}

/// A random piecewise-linear family commuting with a random symmetry.
#[derive(Debug, Clone)]
pub struct EquivariantInstance {
    pub layout: CharacterLayout,
    pub family: SampledFamily,
}

impl EquivariantInstance {
    pub fn action(&self) -> Result<SymmetryAction> {
        self.layout.action()
    }
}

fn endpoint_block(
    layout: &CharacterLayout,
    opts: &RandomFamilyOptions,
    with_kernel: bool,
    rng: &mut impl Rng,
) -> HermitianBlock {
    let blocks: Vec<HermitianBlock> = layout
        .multiplicities
        .iter()
        .map(|&m| {
            let zeros = if with_kernel {
                rng.random_range(0..=m.min(2))
            } else {
                0
            };
            let values: Vec<f64> = (0..m)
                .map(|i| {
                    if i < zeros {
                        0.0
                    } else {
                        let v = rng.random_range(opts.endpoint_gap..=opts.norm_max);
                        if rng.random_bool(0.5) {
                            v
                        } else {
                            -v
                        }
                    }
                })
                .collect();
            hermitian_with_spectrum(&values, rng)
        })
        .collect();
    layout.assemble(&blocks)
}

fn interior_times(count: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut t: Vec<f64> = (0..count).map(|_| rng.random_range(0.05..0.95)).collect();
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    t
}

/// Random equivariant family of dimension `≤ dim_max` with `‖B(t)‖ ≤ norm_max`.
pub fn random_equivariant_family(
    opts: &RandomFamilyOptions,
    rng: &mut impl Rng,
) -> EquivariantInstance {
    let n = rng.random_range(1..=opts.dim_max);
    let layout = CharacterLayout::random(n, rng);
    let start = endpoint_block(&layout, opts, false, rng);
    let kernel = rng.random_bool(opts.kernel_probability);
    let end = endpoint_block(&layout, opts, kernel, rng);
    let family = random_path(&layout, start, end, opts, rng);
    EquivariantInstance { layout, family }
}

fn random_path(
    layout: &CharacterLayout,
    start: HermitianBlock,
    end: HermitianBlock,
    opts: &RandomFamilyOptions,
    rng: &mut impl Rng,
) -> SampledFamily {
    let knots = rng.random_range(0..=opts.interior_knots_max);
    let mut pairs = vec![(0.0, start)];
    for t in interior_times(knots, rng) {
        pairs.push((t, layout.random_block(opts.norm_max, rng)));
    }
    pairs.push((1.0, end));
    SampledFamily::from_pairs(pairs).expect("valid random family")
}

/// Same endpoints as `instance`, fresh random interior.
pub fn reroute_interior(
    instance: &EquivariantInstance,
    opts: &RandomFamilyOptions,
    rng: &mut impl Rng,
) -> SampledFamily {
    let s = instance.family.samples();
    random_path(
        &instance.layout,
        s[0].block.clone(),
        s[s.len() - 1].block.clone(),
        opts,
        rng,
    )
}

/// `U(t) D U(t)*` with `U(t) = exp(itH)` equivariant, `|D| ≥ 0.5`, sampled
/// finely enough that the interpolant stays invertible.
pub fn random_invertible_family(layout: &CharacterLayout, rng: &mut impl Rng) -> SampledFamily {
    let d_blocks: Vec<HermitianBlock> = layout
        .multiplicities
        .iter()
        .map(|&m| {
            let v: Vec<f64> = (0..m)
                .map(|_| {
                    let x = rng.random_range(0.5..=5.0);
                    if rng.random_bool(0.5) {
                        x
                    } else {
                        -x
                    }
                })
                .collect();
            HermitianBlock::from_real_diag(&v)
        })
        .collect();
    let h = layout.random_block(1.0, rng);
    let d = layout.assemble(&d_blocks);
    let knots = 64;
    let pairs = (0..=knots)
        .map(|k| {
            let t = k as f64 / knots as f64;
            let u = hermitian_function(&h, |l| cis(t * l));
            (t, d.conjugate_by(&u).expect("conjugated Hermitian"))
        })
        .collect();
    SampledFamily::from_pairs(pairs).expect("valid family")
}

/// Equivariant positive weights with `N(0) = N(1) = I`.
pub fn random_weights(layout: &CharacterLayout, rng: &mut impl Rng) -> SampledFamily {
    let n = layout.dim();
    let mut pairs = vec![(0.0, HermitianBlock::from_real_diag(&vec![1.0; n]))];
    for t in interior_times(rng.random_range(1..=3), rng) {
        let blocks: Vec<HermitianBlock> = layout
            .multiplicities
            .iter()
            .map(|&m| {
                let v: Vec<f64> = (0..m).map(|_| rng.random_range(0.3..=3.0)).collect();
                hermitian_with_spectrum(&v, rng)
            })
            .collect();
        pairs.push((t, layout.assemble(&blocks)));
    }
    pairs.push((1.0, HermitianBlock::from_real_diag(&vec![1.0; n])));
    SampledFamily::from_pairs(pairs).expect("valid weights")
}
