//! Time-ordered propagators for `f' = iB(t) f` and `f' = -B(t) f`.
//!
//! Both use the midpoint exponential: one exact exponential of the
//! generator frozen at the step midpoint per step. The scheme is symmetric,
//! hence second order.

use super::{hermitian_function, ComplexMatrix, HermitianBlock};
use crate::cplx::{cis, C64};
use crate::error::{Result, SpecError};

/// Unitarity tolerance guaranteed by [`propagate_unitary`].
pub const PROP_TOL: f64 = 1e-12;

/// Default step count `max(64, ⌈32·‖B‖_max·|t1 − t0|⌉)`.
pub fn default_steps(norm_max: f64, span: f64) -> usize {
    let s = (32.0 * norm_max * span.abs()).ceil();
    if s.is_finite() {
        (s as usize).max(64)
    } else {
        64
    }
}

/// Newton–Schulz polar iteration `X ← X(3I − X*X)/2`; converges
/// quadratically to the unitary polar factor from a nearly unitary start.
fn polar_correct(x: &mut ComplexMatrix) {
    let n = x.rows();
    let id = ComplexMatrix::identity(n);
    for _ in 0..4 {
        let gram = &x.adjoint() * &*x;
        if gram.max_abs_diff(&id) < 1e-15 {
            break;
        }
        let corr = (&id.scale_real(3.0) - &gram).scale_real(0.5);
        *x = &*x * &corr;
    }
}

/// Fundamental solution of `Φ' = iB(t)Φ`, `Φ(t0) = I`, re-unitarized each step.
pub fn propagate_unitary<F>(family: F, t0: f64, t1: f64, steps: usize) -> Result<ComplexMatrix>
where
    F: Fn(f64) -> HermitianBlock,
{
    if steps == 0 {
        return Err(SpecError::invalid("propagator needs at least one step"));
    }
    let h = (t1 - t0) / steps as f64;
    let mut phi: Option<ComplexMatrix> = None;
    for k in 0..steps {
        let b = family(t0 + (k as f64 + 0.5) * h);
        let step = hermitian_function(&b, |lam| cis(h * lam));
        let mut next = match phi {
            None => step,
            Some(p) => &step * &p,
        };
        polar_correct(&mut next);
        phi = Some(next);
    }
    Ok(phi.expect("at least one step"))
}

/// Which first-order equation a propagator solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// `f' = iB f` (kernel equation of `∂_t − iB`)
    Lorentzian,
    /// `f' = −B f` (kernel equation of `∂_t + B`)
    Riemannian,
}

/// A propagator together with its exact discrete inverse.
#[derive(Debug, Clone)]
pub struct PropagatorPair {
    pub forward: ComplexMatrix,
    pub inverse: ComplexMatrix,
    pub steps: usize,
}

/// Propagator and inverse of the midpoint scheme for the given generator.
/// The Riemannian propagator is not re-unitarized.
pub fn propagate_resolvent_pair<F>(
    family: F,
    t0: f64,
    t1: f64,
    steps: usize,
    generator: Generator,
) -> Result<PropagatorPair>
where
    F: Fn(f64) -> HermitianBlock,
{
    match generator {
        Generator::Lorentzian => {
            let forward = propagate_unitary(family, t0, t1, steps)?;
            let inverse = forward.adjoint();
            Ok(PropagatorPair {
                forward,
                inverse,
                steps,
            })
        }
        Generator::Riemannian => {
            if steps == 0 {
                return Err(SpecError::invalid("propagator needs at least one step"));
            }
            let h = (t1 - t0) / steps as f64;
            let mut forward: Option<ComplexMatrix> = None;
            let mut inverse: Option<ComplexMatrix> = None;
            for k in 0..steps {
                let b = family(t0 + (k as f64 + 0.5) * h);
                let es = b.eigen();
                let lo = es.values.first().copied().unwrap_or(0.0);
                let hi = es.values.last().copied().unwrap_or(0.0);
                // shift keeps the exponentials O(1) inside hermitian_function
                let shift = 0.5 * (lo + hi);
                let e_fwd = hermitian_function(&b, |lam| C64::new((-h * (lam - shift)).exp(), 0.0))
                    .scale_real((-h * shift).exp());
                let e_inv = hermitian_function(&b, |lam| C64::new((h * (lam - shift)).exp(), 0.0))
                    .scale_real((h * shift).exp());
                forward = Some(match forward {
                    None => e_fwd,
                    Some(f) => &e_fwd * &f,
                });
                inverse = Some(match inverse {
                    None => e_inv,
                    Some(i) => &i * &e_inv,
                });
            }
            Ok(PropagatorPair {
                forward: forward.expect("steps > 0"),
                inverse: inverse.expect("steps > 0"),
                steps,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cplx::{I, ONE, ZERO};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> HermitianBlock {
        let g = ComplexMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let h = HermitianBlock::new(g.hermitian_part()).unwrap();
        let s = scale / h.norm();
        HermitianBlock::new(h.matrix().scale_real(s)).unwrap()
    }

    fn pauli() -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
        let sx = ComplexMatrix::new(2, 2, vec![ZERO, ONE, ONE, ZERO]).unwrap();
        let sy = ComplexMatrix::new(2, 2, vec![ZERO, -I, I, ZERO]).unwrap();
        let sz = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
        (sx, sy, sz)
    }

    /// Rotating-field Hamiltonian B(t) = R(t) B0 R(t)*, R(t) = exp(iωtσz/2),
    /// with exact propagator R(t)·exp(it(B0 − ωσz/2)).
    fn rotating(
        omega: f64,
        b0: &HermitianBlock,
    ) -> (
        impl Fn(f64) -> HermitianBlock + '_,
        impl Fn(f64) -> ComplexMatrix + '_,
    ) {
        let (_, _, sz) = pauli();
        let szh = HermitianBlock::new(sz.clone()).unwrap();
        let szh2 = szh.clone();
        let family = move |t: f64| {
            let r = hermitian_function(&szh, |l| cis(omega * t * l / 2.0));
            b0.conjugate_by(&r).unwrap()
        };
        let k = HermitianBlock::new(&b0.matrix().clone() - &sz.scale_real(omega / 2.0)).unwrap();
        let exact = move |t: f64| {
            let r = hermitian_function(&szh2, |l| cis(omega * t * l / 2.0));
            &r * &hermitian_function(&k, |l| cis(t * l))
        };
        (family, exact)
    }

    #[test]
    fn constant_generator_matches_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_hermitian(5, 10.0, &mut rng);
        let phi = propagate_unitary(|_| b.clone(), 0.0, 1.0, 1000).unwrap();
        let exact = hermitian_function(&b, cis);
        assert!(phi.max_abs_diff(&exact) < 1e-8);
    }

    #[test]
    fn scalar_phase_matches_quadrature() {
        let b = |t: f64| (3.0 * t).sin() + t * t;
        let fam = |t: f64| HermitianBlock::from_real_diag(&[b(t)]);
        let phi = propagate_unitary(fam, 0.0, 1.0, 10_000).unwrap();
        // composite Simpson with 2000 panels
        let n = 2000;
        let h = 1.0 / n as f64;
        let mut integral = b(0.0) + b(1.0);
        for k in 1..n {
            integral += if k % 2 == 1 { 4.0 } else { 2.0 } * b(k as f64 * h);
        }
        integral *= h / 3.0;
        assert!((phi[(0, 0)] - cis(integral)).norm() < 1e-8);
    }

    #[test]
    fn stays_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_hermitian(6, 4.0, &mut rng);
        let c = random_hermitian(6, 4.0, &mut rng);
        let phi = propagate_unitary(|t| a.lerp(&c, t), 0.0, 1.0, 300).unwrap();
        assert!(phi.unitarity_residual() < PROP_TOL);
    }

    #[test]
    fn second_order_convergence() {
        let (sx, _, sz) = pauli();
        let b0 = HermitianBlock::new(&sx.scale_real(1.3) + &sz.scale_real(0.4)).unwrap();
        let (family, exact) = rotating(2.5, &b0);
        let target = exact(1.0);
        let err = |steps| {
            propagate_unitary(&family, 0.0, 1.0, steps)
                .unwrap()
                .max_abs_diff(&target)
        };
        let mut prev = err(16);
        for steps in [32, 64, 128] {
            let e = err(steps);
            assert!(prev / e >= 3.0, "ratio {} at {steps}", prev / e);
            prev = e;
        }
    }

    #[test]
    fn riemannian_pair_is_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_hermitian(4, 5.0, &mut rng);
        let c = random_hermitian(4, 5.0, &mut rng);
        let pair =
            propagate_resolvent_pair(|t| a.lerp(&c, t), 0.0, 1.0, 200, Generator::Riemannian)
                .unwrap();
        let prod = &pair.forward * &pair.inverse;
        assert!(prod.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-9);
        // constant generator: exp(-B)
        let pair =
            propagate_resolvent_pair(|_| a.clone(), 0.0, 1.0, 10, Generator::Riemannian).unwrap();
        let exact = hermitian_function(&a, |l| C64::new((-l).exp(), 0.0));
        assert!(pair.forward.max_abs_diff(&exact) < 1e-10 * exact.norm_max());
    }

    #[test]
    fn default_step_rule() {
        assert_eq!(default_steps(0.0, 1.0), 64);
        assert_eq!(default_steps(5.0, 1.0), 160);
        assert_eq!(default_steps(1.0, 2.5), 80);
    }
}
