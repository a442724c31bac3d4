//! One-sided (Hestenes) Jacobi SVD and numerical null spaces.

use serde::Serialize;

use super::eigen::jacobi_rotation;
use super::ComplexMatrix;
use crate::cplx::C64;
use crate::error::{Result, SpecError};

/// Minimum ratio between the singular values straddling a rank threshold.
pub const GAP_RATIO_MIN: f64 = 1e3;

const MAX_SWEEPS: usize = 80;

/// Returns `(singular values, V)` with `A V = U Σ`, column order as in `A`.
fn one_sided_jacobi(a: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let m = a.rows();
    let n = a.cols();
    let mut u = a.clone();
    let mut v = ComplexMatrix::identity(n);
    // Columns this small are rounding noise; rotating them against each
    // other reaches subnormal range, where the rotations stop being unitary.
    let floor = (1e-3 * f64::EPSILON * a.norm_frobenius()).powi(2);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = C64::new(0.0, 0.0);
                for k in 0..m {
                    let up = u[(k, p)];
                    let uq = u[(k, q)];
                    alpha += up.norm_sqr();
                    beta += uq.norm_sqr();
                    gamma += up.conj() * uq;
                }
                if alpha <= floor || beta <= floor || gamma.norm() <= 1e-15 * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let (c, se, _) = jacobi_rotation(alpha, beta, gamma);
                for k in 0..m {
                    let ukp = u[(k, p)];
                    let ukq = u[(k, q)];
                    u[(k, p)] = ukp * c - ukq * se.conj();
                    u[(k, q)] = ukp * se + ukq * c;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * se.conj();
                    v[(k, q)] = vkp * se + vkq * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma = (0..n)
        .map(|j| (0..m).map(|k| u[(k, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    (sigma, v)
}

/// Singular values in descending order.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    let mut s = if a.rows() >= a.cols() {
        one_sided_jacobi(a).0
    } else {
        one_sided_jacobi(&a.adjoint()).0
    };
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Numerical null space together with the evidence for the rank decision.
#[derive(Debug, Clone, Serialize)]
pub struct NullSpace {
    /// Orthonormal columns spanning the null space (`cols() == 0` when
    /// the matrix has full column rank).
    #[serde(skip)]
    pub basis: ComplexMatrix,
    /// All singular values of the input (one per column), descending.
    pub singular_values: Vec<f64>,
    pub threshold: f64,
    /// Ratio between the smallest kept and the largest discarded singular
    /// value (against the threshold itself when one side is empty).
    pub gap_ratio: f64,
}

impl NullSpace {
    pub fn nullity(&self) -> usize {
        self.basis.cols()
    }
}

/// Orthonormal basis of `{x : ‖A x‖ small}` from singular values below
/// `rank_tol · σ_max`.
pub fn kernel_basis(a: &ComplexMatrix, rank_tol: f64) -> NullSpace {
    kernel_basis_scaled(a, rank_tol, 0.0)
}

/// As [`kernel_basis`], with the threshold `rank_tol · max(σ_max, scale)`.
/// Use when `A` is a compression of an operator of norm `scale`, so that
/// a compression that vanishes up to rounding is recognised as zero.
pub fn kernel_basis_scaled(a: &ComplexMatrix, rank_tol: f64, scale: f64) -> NullSpace {
    assert!(rank_tol > 0.0, "rank_tol must be positive");
    let n = a.cols();
    if n == 0 {
        return NullSpace {
            basis: ComplexMatrix::zeros(0, 0),
            singular_values: vec![],
            threshold: 0.0,
            gap_ratio: f64::INFINITY,
        };
    }
    let (sigma, v) = one_sided_jacobi(a);
    let smax = sigma.iter().copied().fold(0.0, f64::max).max(scale);
    let threshold = rank_tol * smax;
    let null_idx: Vec<usize> = if smax == 0.0 {
        (0..n).collect()
    } else {
        (0..n).filter(|&j| sigma[j] < threshold).collect()
    };
    let below = null_idx
        .iter()
        .map(|&j| sigma[j])
        .fold(None, |acc: Option<f64>, s| {
            Some(acc.map_or(s, |a| a.max(s)))
        });
    let above = (0..n)
        .filter(|j| !null_idx.contains(j))
        .map(|j| sigma[j])
        .fold(None, |acc: Option<f64>, s| {
            Some(acc.map_or(s, |a| a.min(s)))
        });
    let gap_ratio = match (below, above) {
        (_, None) => f64::INFINITY,
        (None, Some(hi)) => hi / threshold,
        (Some(lo), Some(hi)) => {
            if lo == 0.0 {
                f64::INFINITY
            } else {
                hi / lo
            }
        }
    };
    let mut singular_values = sigma;
    singular_values.sort_by(|x, y| y.total_cmp(x));
    NullSpace {
        basis: v.select_columns(&null_idx),
        singular_values,
        threshold,
        gap_ratio,
    }
}

/// Rejects rank decisions that are not separated by [`GAP_RATIO_MIN`].
pub fn require_separated(ns: &NullSpace) -> Result<()> {
    if ns.gap_ratio >= GAP_RATIO_MIN {
        Ok(())
    } else {
        Err(SpecError::DegenerateRank {
            gap_ratio: ns.gap_ratio,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RANK_TOL;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
        (0..n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn wide_orthonormal_rows_keep_v_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let u = crate::random::haar_unitary(5, &mut rng);
            let a = ComplexMatrix::from_fn(2, 5, |i, j| u[(i, j)]);
            let ns = kernel_basis_scaled(&a, RANK_TOL, 1.0);
            assert_eq!(ns.nullity(), 3);
            let g = &ns.basis.adjoint() * &ns.basis;
            assert!(g.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
            assert!((&a * &ns.basis).norm_max() < 1e-12);
        }
    }

    #[test]
    fn scaled_threshold_treats_rounding_as_zero() {
        let m = ComplexMatrix::from_real_rows(&[&[1e-16, 0.0], &[0.0, 2e-16]]);
        assert_eq!(kernel_basis(&m, RANK_TOL).nullity(), 0);
        assert_eq!(kernel_basis_scaled(&m, RANK_TOL, 1.0).nullity(), 2);
    }

    #[test]
    fn zero_matrix_has_full_kernel() {
        let ns = kernel_basis(&ComplexMatrix::zeros(3, 3), RANK_TOL);
        assert_eq!(ns.nullity(), 3);
        assert!(ns.basis.unitarity_residual() < 1e-15);
    }

    #[test]
    fn identity_has_trivial_kernel() {
        let ns = kernel_basis(&ComplexMatrix::identity(4), RANK_TOL);
        assert_eq!(ns.nullity(), 0);
        assert!(require_separated(&ns).is_ok());
    }

    #[test]
    fn rank_one_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = rand_vec(4, &mut rng);
        let v = rand_vec(4, &mut rng);
        let m = ComplexMatrix::from_fn(4, 4, |i, j| u[i] * v[j].conj());
        let ns = kernel_basis(&m, RANK_TOL);
        assert_eq!(ns.nullity(), 3);
        assert!(require_separated(&ns).is_ok());
        for j in 0..3 {
            let x = ns.basis.column(j);
            let dot: C64 = v.iter().zip(&x).map(|(a, b)| a.conj() * b).sum();
            assert!(dot.norm() < 1e-12);
        }
        let gram = &ns.basis.adjoint() * &ns.basis;
        assert!(gram.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn wide_matrix_kernel_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = ComplexMatrix::from_fn(2, 5, |_, _| C64::new(rng.random(), rng.random()));
        let ns = kernel_basis(&m, RANK_TOL);
        assert_eq!(ns.nullity(), 3);
        let img = &m * &ns.basis;
        assert!(img.norm_max() < 1e-12);
    }

    #[test]
    fn poorly_separated_rank_is_flagged() {
        let m = ComplexMatrix::from_real_diag(&[1.0, 1e-7]);
        let ns = kernel_basis(&m, RANK_TOL);
        assert_eq!(ns.nullity(), 0);
        assert!(matches!(
            require_separated(&ns),
            Err(SpecError::DegenerateRank { .. })
        ));
    }

    #[test]
    fn singular_values_of_diagonal() {
        let m = ComplexMatrix::from_real_diag(&[-3.0, 0.5, 2.0]);
        let s = singular_values(&m);
        assert!(
            (s[0] - 3.0).abs() < 1e-15 && (s[1] - 2.0).abs() < 1e-15 && (s[2] - 0.5).abs() < 1e-15
        );
    }
}
