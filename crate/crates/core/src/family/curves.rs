//! Analytic eigenvalue curves.

use serde::{Deserialize, Serialize};

use super::SpectralPoint;
use crate::cplx::C64;
use crate::error::{Result, SpecError};
use crate::symmetry::CHAR_IDENT_TOL;

/// Closed-form eigenvalue as a function of the curve's own time `s ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CurveExpr {
    /// `Σ_k c_k s^k`
    Polynomial { coeffs: Vec<f64> },
    /// `λ/2 + n/λ` with `λ = lambda_lo + s·(lambda_hi − lambda_lo)`
    BergerTop {
        n: u32,
        lambda_lo: f64,
        lambda_hi: f64,
    },
    /// `λ/2 ± sqrt(4p(n − p) + ((2p − n)/λ)²)`
    BergerBranch {
        n: u32,
        p: u32,
        sign: i8,
        lambda_lo: f64,
        lambda_hi: f64,
    },
}

impl CurveExpr {
    fn lambda(lo: f64, hi: f64, s: f64) -> f64 {
        lo + s * (hi - lo)
    }

    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            CurveExpr::Polynomial { ref coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
            }
            CurveExpr::BergerTop {
                n,
                lambda_lo,
                lambda_hi,
            } => {
                let l = Self::lambda(lambda_lo, lambda_hi, s);
                l / 2.0 + n as f64 / l
            }
            CurveExpr::BergerBranch {
                n,
                p,
                sign,
                lambda_lo,
                lambda_hi,
            } => {
                let l = Self::lambda(lambda_lo, lambda_hi, s);
                let (n, p) = (n as f64, p as f64);
                let d = (2.0 * p - n) / l;
                let root = (4.0 * p * (n - p) + d * d).sqrt();
                l / 2.0 + sign as f64 * root
            }
        }
    }

    /// Upper bound for `|d/ds|` on `[a, b] ⊂ [0, 1]`.
    pub fn lipschitz_on(&self, a: f64, b: f64) -> f64 {
        match *self {
            CurveExpr::Polynomial { ref coeffs } => {
                let r = a.abs().max(b.abs());
                coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, c)| k as f64 * c.abs() * r.powi(k as i32 - 1))
                    .sum()
            }
            CurveExpr::BergerTop {
                n,
                lambda_lo,
                lambda_hi,
            } => {
                // d/dλ (λ/2 + n/λ) is monotone in λ > 0
                let d = |l: f64| (0.5 - n as f64 / (l * l)).abs();
                let (la, lb) = (
                    Self::lambda(lambda_lo, lambda_hi, a),
                    Self::lambda(lambda_lo, lambda_hi, b),
                );
                d(la).max(d(lb)) * (lambda_hi - lambda_lo).abs()
            }
            CurveExpr::BergerBranch {
                n,
                p,
                lambda_lo,
                lambda_hi,
                ..
            } => {
                // |d/dλ| ≤ 1/2 + d²/(λ² sqrt(cλ² + d²)), decreasing in λ
                let (n, p) = (n as f64, p as f64);
                let c = 4.0 * p * (n - p);
                let d2 = (2.0 * p - n).powi(2);
                let lmin = Self::lambda(lambda_lo, lambda_hi, a)
                    .min(Self::lambda(lambda_lo, lambda_hi, b));
                let g = if d2 == 0.0 {
                    0.0
                } else {
                    d2 / (lmin * lmin * (c * lmin * lmin + d2).sqrt())
                };
                (0.5 + g) * (lambda_hi - lambda_lo).abs()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            CurveExpr::Polynomial { ref coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(SpecError::invalid(
                        "polynomial curve needs finite coefficients",
                    ));
                }
            }
            CurveExpr::BergerTop {
                lambda_lo,
                lambda_hi,
                ..
            } => {
                if !(lambda_lo > 0.0 && lambda_hi > 0.0) {
                    return Err(SpecError::invalid("squashing parameter must be positive"));
                }
            }
            CurveExpr::BergerBranch {
                n,
                p,
                sign,
                lambda_lo,
                lambda_hi,
            } => {
                if !(lambda_lo > 0.0 && lambda_hi > 0.0) {
                    return Err(SpecError::invalid("squashing parameter must be positive"));
                }
                if p == 0 || p >= n {
                    return Err(SpecError::invalid(
                        "branch index must satisfy 1 ≤ p ≤ n − 1",
                    ));
                }
                if sign != 1 && sign != -1 {
                    return Err(SpecError::invalid("branch sign must be ±1"));
                }
            }
        }
        Ok(())
    }
}

/// Unit character carried with a multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterComponent {
    #[serde(with = "crate::cplx")]
    pub character: C64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub label: String,
    pub expr: CurveExpr,
    /// Traverse the curve backwards (`s = 1 − t`).
    #[serde(default)]
    pub reversed: bool,
    pub components: Vec<CharacterComponent>,
}

impl Curve {
    pub fn new(label: impl Into<String>, expr: CurveExpr, components: Vec<(C64, usize)>) -> Self {
        Curve {
            label: label.into(),
            expr,
            reversed: false,
            components: components
                .into_iter()
                .map(|(character, multiplicity)| CharacterComponent {
                    character,
                    multiplicity,
                })
                .collect(),
        }
    }

    /// Multiplicity-`m` curve with trivial character.
    pub fn trivial(label: impl Into<String>, expr: CurveExpr, m: usize) -> Self {
        Self::new(label, expr, vec![(C64::new(1.0, 0.0), m)])
    }

    pub fn multiplicity(&self) -> usize {
        self.components.iter().map(|c| c.multiplicity).sum()
    }

    /// `Σ multiplicity · character`
    pub fn character_sum(&self) -> C64 {
        self.components
            .iter()
            .map(|c| c.character * c.multiplicity as f64)
            .sum()
    }

    fn own_time(&self, t: f64) -> f64 {
        if self.reversed {
            1.0 - t
        } else {
            t
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.expr.eval(self.own_time(t))
    }

    pub fn lipschitz_on(&self, u: f64, v: f64) -> f64 {
        let (a, b) = (self.own_time(u), self.own_time(v));
        self.expr.lipschitz_on(a.min(b), a.max(b))
    }
}

/// Spectrum given directly as curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurvesRepr", into = "CurvesRepr")]
pub struct CurveFamily {
    curves: Vec<Curve>,
}

#[derive(Serialize, Deserialize)]
struct CurvesRepr {
    curves: Vec<Curve>,
}

impl TryFrom<CurvesRepr> for CurveFamily {
    type Error = SpecError;

    fn try_from(r: CurvesRepr) -> Result<Self> {
        CurveFamily::new(r.curves)
    }
}

impl From<CurveFamily> for CurvesRepr {
    fn from(f: CurveFamily) -> Self {
        CurvesRepr { curves: f.curves }
    }
}

impl CurveFamily {
    pub fn new(curves: Vec<Curve>) -> Result<Self> {
        for c in &curves {
            c.expr.validate()?;
            if c.components.is_empty() || c.components.iter().any(|k| k.multiplicity == 0) {
                return Err(SpecError::invalid(format!(
                    "curve {} has no multiplicity",
                    c.label
                )));
            }
            if c.components
                .iter()
                .any(|k| (k.character.norm() - 1.0).abs() > 1e-12)
            {
                return Err(SpecError::invalid(format!(
                    "curve {} carries a non-unit character",
                    c.label
                )));
            }
        }
        Ok(CurveFamily { curves })
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn dim(&self) -> usize {
        self.curves.iter().map(Curve::multiplicity).sum()
    }

    pub(crate) fn points_at(&self, t: f64, base: C64) -> Vec<SpectralPoint> {
        let mut out = Vec::new();
        for c in &self.curves {
            let value = c.eval(t);
            for k in &c.components {
                out.push(SpectralPoint {
                    value,
                    multiplicity: k.multiplicity,
                    character: Some(base * k.character),
                });
            }
        }
        out
    }

    /// Upper estimate of `max_t |λ(t)|` from a grid plus the Lipschitz slack.
    pub fn norm_max(&self) -> f64 {
        let n = 256;
        let mut m: f64 = 0.0;
        for c in &self.curves {
            let lip = c.lipschitz_on(0.0, 1.0);
            for i in 0..=n {
                m = m.max(c.eval(i as f64 / n as f64).abs());
            }
            m = m.max(m + lip / (2.0 * n as f64));
        }
        m
    }

    /// Components whose character equals `lambda`.
    pub fn restrict(&self, lambda: C64) -> CurveFamily {
        let curves = self
            .curves
            .iter()
            .filter_map(|c| {
                let comps: Vec<CharacterComponent> = c
                    .components
                    .iter()
                    .filter(|k| (k.character - lambda).norm() <= CHAR_IDENT_TOL)
                    .cloned()
                    .collect();
                (!comps.is_empty()).then(|| Curve {
                    components: comps,
                    ..c.clone()
                })
            })
            .collect();
        CurveFamily { curves }
    }

    /// Distinct characters present, in order of appearance.
    pub fn characters(&self) -> Vec<C64> {
        let mut out: Vec<C64> = Vec::new();
        for c in &self.curves {
            for k in &c.components {
                if !out
                    .iter()
                    .any(|x| (x - k.character).norm() <= CHAR_IDENT_TOL)
                {
                    out.push(k.character);
                }
            }
        }
        out
    }

    /// Same curves and multiplicities with every character set to 1.
    pub fn with_trivial_characters(&self) -> CurveFamily {
        let curves = self
            .curves
            .iter()
            .map(|c| Curve {
                components: vec![CharacterComponent {
                    character: C64::new(1.0, 0.0),
                    multiplicity: c.multiplicity(),
                }],
                ..c.clone()
            })
            .collect();
        CurveFamily { curves }
    }

    pub fn reversed(&self) -> CurveFamily {
        CurveFamily {
            curves: self
                .curves
                .iter()
                .map(|c| Curve {
                    reversed: !c.reversed,
                    ..c.clone()
                })
                .collect(),
        }
    }

    pub fn direct_sum(&self, other: &CurveFamily) -> CurveFamily {
        CurveFamily {
            curves: self.curves.iter().chain(&other.curves).cloned().collect(),
        }
    }
}

/// A zero of one curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossing {
    pub label: String,
    pub t: f64,
    /// +1 upward, −1 downward, 0 touching.
    pub direction: i8,
    pub multiplicity: usize,
    #[serde(with = "crate::cplx")]
    pub character_sum: C64,
}

const CROSSING_GRID: usize = 4096;

/// Zeros of every curve on `[0, 1]`, isolated to width `1e-12`.
pub fn find_zero_crossings(family: &CurveFamily) -> Vec<Crossing> {
    let mut out = Vec::new();
    for c in &family.curves {
        let grid: Vec<(f64, f64)> = (0..=CROSSING_GRID)
            .map(|i| {
                let t = i as f64 / CROSSING_GRID as f64;
                (t, c.eval(t))
            })
            .collect();
        let mut push = |t: f64, direction: i8| {
            out.push(Crossing {
                label: c.label.clone(),
                t,
                direction,
                multiplicity: c.multiplicity(),
                character_sum: c.character_sum(),
            })
        };
        for i in 0..grid.len() {
            let (t, f) = grid[i];
            if f == 0.0 {
                let before = if i > 0 { grid[i - 1].1 } else { 0.0 };
                let after = if i + 1 < grid.len() {
                    grid[i + 1].1
                } else {
                    0.0
                };
                let dir = match (before < 0.0, after > 0.0, before > 0.0, after < 0.0) {
                    (true, true, _, _) => 1,
                    (_, _, true, true) => -1,
                    _ => 0,
                };
                push(t, dir);
                continue;
            }
            if i + 1 < grid.len() {
                let (t2, f2) = grid[i + 1];
                if f2 != 0.0 && f.signum() != f2.signum() {
                    let (mut a, mut b) = (t, t2);
                    while b - a > 1e-12 {
                        let m = 0.5 * (a + b);
                        let fm = c.eval(m);
                        if fm == 0.0 {
                            a = m;
                            b = m;
                        } else if fm.signum() == f.signum() {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    push(0.5 * (a + b), if f2 > f { 1 } else { -1 });
                }
            }
        }
    }
    out.sort_by(|a, b| a.t.total_cmp(&b.t));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_eval_and_bound() {
        let e = CurveExpr::Polynomial {
            coeffs: vec![-0.5, 1.0],
        };
        assert_eq!(e.eval(0.5), 0.0);
        assert_eq!(e.lipschitz_on(0.0, 1.0), 1.0);
        let q = CurveExpr::Polynomial {
            coeffs: vec![0.0, 0.0, 3.0],
        };
        assert_eq!(q.lipschitz_on(0.0, 0.5), 3.0);
    }

    #[test]
    fn berger_branch_vanishes_at_four() {
        // n = 2, p = 1: λ/2 − sqrt(4) = 0 at λ = 4
        let e = CurveExpr::BergerBranch {
            n: 2,
            p: 1,
            sign: -1,
            lambda_lo: 1.0,
            lambda_hi: 5.0,
        };
        assert!(e.eval(0.75).abs() < 1e-15);
        assert!(e.eval(0.7) < 0.0 && e.eval(0.8) > 0.0);
    }

    #[test]
    fn lipschitz_bounds_dominate_difference_quotients() {
        let exprs = [
            CurveExpr::BergerTop {
                n: 3,
                lambda_lo: 1.0,
                lambda_hi: 5.0,
            },
            CurveExpr::BergerBranch {
                n: 3,
                p: 1,
                sign: 1,
                lambda_lo: 1.0,
                lambda_hi: 5.0,
            },
            CurveExpr::BergerBranch {
                n: 4,
                p: 1,
                sign: -1,
                lambda_lo: 1.0,
                lambda_hi: 5.0,
            },
            CurveExpr::Polynomial {
                coeffs: vec![1.0, -2.0, 0.5, 0.25],
            },
        ];
        for e in &exprs {
            for k in 0..32 {
                let (a, b) = (k as f64 / 32.0, (k + 1) as f64 / 32.0);
                let lip = e.lipschitz_on(a, b);
                for j in 0..16 {
                    let s = a + (b - a) * j as f64 / 16.0;
                    let h = (b - a) / 16.0;
                    let q = (e.eval(s + h) - e.eval(s)).abs() / h;
                    assert!(q <= lip * (1.0 + 1e-9), "{e:?} on [{a},{b}]: {q} > {lip}");
                }
            }
        }
    }

    #[test]
    fn crossing_isolation() {
        let fam = CurveFamily::new(vec![Curve::trivial(
            "line",
            CurveExpr::Polynomial {
                coeffs: vec![-1.0 / 3.0, 1.0],
            },
            2,
        )])
        .unwrap();
        let x = find_zero_crossings(&fam);
        assert_eq!(x.len(), 1);
        assert!((x[0].t - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!((x[0].direction, x[0].multiplicity), (1, 2));
        let rev = find_zero_crossings(&fam.reversed());
        assert!((rev[0].t - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(rev[0].direction, -1);
    }

    #[test]
    fn restriction_by_character() {
        let z = C64::from_polar(1.0, 0.4);
        let fam = CurveFamily::new(vec![Curve::new(
            "c",
            CurveExpr::Polynomial { coeffs: vec![1.0] },
            vec![(z, 1), (z.conj(), 2)],
        )])
        .unwrap();
        assert_eq!(fam.characters().len(), 2);
        assert_eq!(fam.restrict(z.conj()).dim(), 2);
        assert_eq!(fam.restrict(C64::new(1.0, 0.0)).dim(), 0);
        let bad = Curve::new(
            "b",
            CurveExpr::Polynomial { coeffs: vec![1.0] },
            vec![(C64::new(2.0, 0.0), 1)],
        );
        assert!(CurveFamily::new(vec![bad]).is_err());
    }
}
