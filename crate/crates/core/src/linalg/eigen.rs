use serde::{Deserialize, Serialize};

use super::{ComplexMatrix, HermitianBlock, EIG_TOL};
use crate::cplx::{C64, ZERO};
use crate::error::{Result, SpecError};

/// Orthonormal eigendecomposition, values ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl EigenSystem {
    /// Columns whose eigenvalue satisfies `pred`.
    pub fn basis_where(&self, pred: impl Fn(f64) -> bool) -> ComplexMatrix {
        let idx: Vec<usize> = (0..self.values.len())
            .filter(|&k| pred(self.values[k]))
            .collect();
        self.vectors.select_columns(&idx)
    }
}

/// Closed real interval; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn real_line() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

pub fn eigh(block: &HermitianBlock) -> EigenSystem {
    block.eigen().clone()
}

/// Orthogonal projector onto the eigenvectors with eigenvalue in `interval`.
pub fn spectral_projector(block: &HermitianBlock, interval: Interval) -> Result<ComplexMatrix> {
    let es = block.eigen();
    let tol = EIG_TOL * block.norm();
    for endpoint in [interval.lo, interval.hi] {
        if !endpoint.is_finite() {
            continue;
        }
        let distance = es
            .values
            .iter()
            .map(|v| (v - endpoint).abs())
            .fold(f64::INFINITY, f64::min);
        if distance <= tol {
            return Err(SpecError::SpectralBoundaryCollision { endpoint, distance });
        }
    }
    let w = es.basis_where(|v| interval.contains(v));
    Ok(&w * &w.adjoint())
}

/// `f(M) = V f(Λ) V*` for a Hermitian `M`.
pub fn hermitian_function(block: &HermitianBlock, f: impl Fn(f64) -> C64) -> ComplexMatrix {
    let es = block.eigen();
    let n = block.dim();
    let fv: Vec<C64> = es.values.iter().map(|&v| f(v)).collect();
    let v = &es.vectors;
    ComplexMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| v[(i, k)] * fv[k] * v[(j, k)].conj()).sum()
    })
}

const MAX_SWEEPS: usize = 64;

/// Complex Jacobi rotation zeroing the off-diagonal entry `b` of the 2x2
/// Hermitian block `[[a, b], [conj(b), d]]`.
///
/// Returns `(c, s·e^{iφ})` so that `G = [[c, s·e^{iφ}], [-conj(s·e^{iφ}), c]]`
/// satisfies `G* H G = diag`, together with `t = tan θ`.
pub(super) fn jacobi_rotation(a: f64, d: f64, b: C64) -> (f64, C64, f64) {
    let absb = b.norm();
    let theta = (d - a) / (2.0 * absb);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    (c, (b / absb) * s, t)
}

pub(super) fn jacobi(m: &ComplexMatrix) -> EigenSystem {
    let n = m.rows();
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = m.norm_frobenius();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-17 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a[(p, q)];
                if b == ZERO {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if b.norm() <= 1e-300 {
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                    continue;
                }
                let (c, se, t) = jacobi_rotation(app, aqq, b);
                let absb = b.norm();
                // A <- A G on columns p, q
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * se.conj();
                    a[(k, q)] = akp * se + akq * c;
                }
                // A <- G* A on rows p, q
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * se;
                    a[(q, k)] = apk * se.conj() + aqk * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(app - t * absb, 0.0);
                a[(q, q)] = C64::new(aqq + t * absb, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * se.conj();
                    v[(k, q)] = vkp * se + vkq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    EigenSystem {
        values: order.iter().map(|&i| a[(i, i)].re).collect(),
        vectors: v.select_columns(&order),
    }
}
