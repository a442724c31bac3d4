//! Seeded checks shared by the property tests and the acceptance run.
//! Each check builds its own instance from `seed` and reports the first
//! violated relation.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specflow::cplx::C64;
use specflow::family::{
    build_flow_partition_with, Family, PartitionOptions, SampledFamily, WindowRule,
};
use specflow::flow::{
    concat, congruence_homotopy, direct_sum, equivariant_flow, finite_dim_formula, sfl_equivariant,
    FlowResult,
};
use specflow::linalg::HermitianBlock;
use specflow::random::{
    random_equivariant_family, random_invertible_family, random_weights, reroute_interior,
    CharacterLayout, RandomFamilyOptions,
};
use specflow::symmetry::SymmetryAction;

pub const AXIOM_TOL: f64 = 1e-9;

pub type Check = fn(u64) -> Result<(), String>;

pub const AXIOMS: [(&str, Check); 6] = [
    ("normalization", normalization),
    ("direct sum", direct_sum_additivity),
    ("homotopy invariance", homotopy_invariance),
    ("finite-dimensional formula", finite_dim),
    ("concatenation", concatenation),
    ("partition independence", partition_independence),
];

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn flow(f: &Family, a: &SymmetryAction) -> Result<FlowResult, String> {
    equivariant_flow(f, Some(a)).map_err(|e| e.to_string())
}

fn close(a: C64, b: C64, what: &str) -> Result<(), String> {
    if (a - b).norm() <= AXIOM_TOL {
        Ok(())
    } else {
        Err(format!("{what}: {a} vs {b}"))
    }
}

fn opts(kernel_probability: f64) -> RandomFamilyOptions {
    RandomFamilyOptions {
        kernel_probability,
        ..RandomFamilyOptions::default()
    }
}

/// Invertible paths have no flow, in any character.
pub fn normalization(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let n = r.random_range(1..=8);
    let layout = CharacterLayout::random(n, &mut r);
    let f = Family::Sampled(random_invertible_family(&layout, &mut r));
    let res = flow(&f, &layout.action().map_err(|e| e.to_string())?)?;
    if res.per_character.iter().any(|c| c.sfl != 0) {
        return Err(format!(
            "non-zero per-character flow {:?}",
            res.per_character
        ));
    }
    close(res.value.value, C64::new(0.0, 0.0), "sfl_γ")
}

pub fn direct_sum_additivity(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let o = RandomFamilyOptions {
        dim_max: 4,
        ..opts(0.3)
    };
    let a = random_equivariant_family(&o, &mut r);
    let b = random_equivariant_family(&o, &mut r);
    let (ga, gb) = (a.action().unwrap(), b.action().unwrap());
    let fa = Family::Sampled(a.family.clone());
    let fb = Family::Sampled(b.family.clone());
    let sum = direct_sum(&fa, &fb).map_err(|e| e.to_string())?;
    let g = ga.direct_sum(&gb).map_err(|e| e.to_string())?;
    let lhs = flow(&sum, &g)?;
    let (x, y) = (flow(&fa, &ga)?, flow(&fb, &gb)?);
    if lhs.total() != x.total() + y.total() {
        return Err(format!(
            "plain flow {} vs {} + {}",
            lhs.total(),
            x.total(),
            y.total()
        ));
    }
    close(lhs.value.value, x.value.value + y.value.value, "sfl_γ(A⊕B)")
}

/// Two paths with equal endpoints, the straight-line homotopy between them
/// at a random parameter, and the congruence homotopy by random weights.
pub fn homotopy_invariance(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let o = opts(0.3);
    let inst = random_equivariant_family(&o, &mut r);
    let g = inst.action().unwrap();
    let other = reroute_interior(&inst, &o, &mut r);
    let base = flow(&Family::Sampled(inst.family.clone()), &g)?;

    let s = r.random_range(0.0..=1.0);
    let times = specflow::family::merge_times(&inst.family.sample_times(), &other.sample_times());
    let pairs = times
        .iter()
        .map(|&t| {
            let m = &inst.family.at(t).matrix().scale_real(1.0 - s)
                + &other.at(t).matrix().scale_real(s);
            (t, HermitianBlock::new(m.hermitian_part()).unwrap())
        })
        .collect();
    let mid = SampledFamily::from_pairs(pairs).map_err(|e| e.to_string())?;

    let weights = random_weights(&inst.layout, &mut r);
    let congruent = congruence_homotopy(&inst.family, &weights, 1.0).map_err(|e| e.to_string())?;

    for (name, f) in [
        ("rerouted", other),
        ("interpolated", mid),
        ("congruent", congruent),
    ] {
        let res = flow(&Family::Sampled(f), &g)?;
        close(res.value.value, base.value.value, name)?;
    }
    Ok(())
}

/// `sfl_γ = tr(γ|E_<0(A(0))) − tr(γ|E_<0(A(1)))` for invertible endpoints.
pub fn finite_dim(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let inst = random_equivariant_family(&opts(0.0), &mut r);
    let g = inst.action().unwrap();
    let f = Family::Sampled(inst.family);
    let res = flow(&f, &g)?;
    let formula = finite_dim_formula(&f, Some(&g)).map_err(|e| e.to_string())?;
    close(res.value.value, formula.value, "finite-dimensional formula")
}

pub fn concatenation(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let o = opts(0.3);
    let a = random_equivariant_family(&o, &mut r);
    let g = a.action().unwrap();
    let start = a.family.samples().last().unwrap().block.clone();
    let mut pairs = vec![(0.0, start)];
    for k in 1..=r.random_range(1..=3) {
        pairs.push((k as f64 / 4.0, a.layout.random_block(5.0, &mut r)));
    }
    pairs.push((1.0, a.layout.random_block(5.0, &mut r)));
    let b = SampledFamily::from_pairs(pairs).map_err(|e| e.to_string())?;
    let (fa, fb) = (Family::Sampled(a.family), Family::Sampled(b));
    let joined = concat(&fa, &fb).map_err(|e| e.to_string())?;
    let lhs = flow(&joined, &g)?;
    let (x, y) = (flow(&fa, &g)?, flow(&fb, &g)?);
    close(lhs.value.value, x.value.value + y.value.value, "sfl_γ(A·B)")
}

/// Two independently built partitions give identical integers per character.
pub fn partition_independence(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let inst = random_equivariant_family(&opts(0.3), &mut r);
    let g = inst.action().unwrap();
    let f = Family::Sampled(inst.family);
    let breaks: Vec<f64> = (0..r.random_range(1..=5))
        .map(|_| r.random_range(0.01..0.99))
        .collect();
    let p1 =
        build_flow_partition_with(&f, &PartitionOptions::default()).map_err(|e| e.to_string())?;
    let p2 = build_flow_partition_with(
        &f,
        &PartitionOptions {
            initial_breaks: breaks,
            window_rule: WindowRule::SmallestRadius,
            ..PartitionOptions::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let x = sfl_equivariant(&f, Some(&g), &p1).map_err(|e| e.to_string())?;
    let y = sfl_equivariant(&f, Some(&g), &p2).map_err(|e| e.to_string())?;
    if x.per_character != y.per_character {
        return Err(format!("{:?} vs {:?}", x.per_character, y.per_character));
    }
    Ok(())
}

use specflow::eta::{
    eta_abel_oracle, eta_closed_form, CharacterSpectrum, FinitePoint, Progression,
};

pub const ETA_AGREEMENT_TOL: f64 = 1e-6;
pub const ETA_SYMMETRIC_TOL: f64 = 1e-8;

fn unit(r: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(
        1.0,
        r.random_range(-std::f64::consts::PI..std::f64::consts::PI),
    )
}

fn weight(r: &mut ChaCha8Rng) -> C64 {
    unit(r) * r.random_range(0.2..3.0)
}

fn finite_part(r: &mut ChaCha8Rng) -> Vec<FinitePoint> {
    (0..r.random_range(0..4))
        .map(|_| {
            let v = r.random_range(0.1..10.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
            FinitePoint::new(v, r.random_range(1..=3), unit(r))
        })
        .collect()
}

/// One or two untwisted progressions with random offsets, scales and
/// weights, over a random finite part.
pub fn random_progression_spectrum(seed: u64) -> CharacterSpectrum {
    let mut r = rng(seed);
    let progressions = (0..r.random_range(1..=2))
        .map(|_| {
            let a = if r.random_bool(0.2) {
                1.0
            } else {
                r.random_range(0.05..1.0)
            };
            Progression::new(a, weight(&mut r), weight(&mut r)).with_scale(r.random_range(0.5..3.0))
        })
        .collect();
    CharacterSpectrum::new(finite_part(&mut r), progressions)
}

/// A spectrum with `χ(−λ) = χ(λ)`: every progression is paired with its
/// mirror image and every finite point with its negative.
pub fn random_symmetric_spectrum(seed: u64) -> CharacterSpectrum {
    let mut r = rng(seed);
    let mut finite = Vec::new();
    for p in finite_part(&mut r) {
        finite.push(FinitePoint::new(-p.value, p.multiplicity, p.character));
        finite.push(p);
    }
    let a = r.random_range(0.05..0.95);
    let c = r.random_range(0.5..3.0);
    let (wp, wm) = (weight(&mut r), weight(&mut r));
    let q = if r.random_bool(0.5) {
        C64::new(1.0, 0.0)
    } else {
        unit(&mut r)
    };
    let progressions = vec![
        Progression::new(a, wp, wm).with_ratio(q).with_scale(c),
        Progression::new(1.0 - a, wm, wp)
            .with_ratio(q.conj())
            .with_scale(c),
    ];
    CharacterSpectrum::new(finite, progressions)
}

pub fn eta_agreement(seed: u64) -> Result<f64, String> {
    let s = random_progression_spectrum(seed);
    let closed = eta_closed_form(&s).map_err(|e| e.to_string())?.value;
    let abel = eta_abel_oracle(&s, None)
        .map_err(|e| e.to_string())?
        .value
        .value;
    let d = (closed - abel).norm();
    if d <= ETA_AGREEMENT_TOL {
        Ok(d)
    } else {
        Err(format!("closed form {closed} vs Abel {abel}"))
    }
}

pub fn eta_symmetric(seed: u64) -> Result<f64, String> {
    let s = random_symmetric_spectrum(seed);
    let v = match eta_closed_form(&s) {
        Ok(v) => v.value,
        Err(_) => {
            eta_abel_oracle(&s, None)
                .map_err(|e| e.to_string())?
                .value
                .value
        }
    };
    if v.norm() <= ETA_SYMMETRIC_TOL {
        Ok(v.norm())
    } else {
        Err(format!("η = {v} on a symmetric spectrum"))
    }
}
