//! Spectral bases for smooth functions on the circle and on S³ ≅ SU(2).
//!
//! On S³ the basis functions are
//! `a^(m₁) b^(m₂) P_n^(|m₂|,|m₁|)(|a|² − |b|²)`, with `a^(m) = aᵐ` for `m ≥ 0`
//! and `ā^|m|` otherwise, and `P_n^(α,β)` a Jacobi polynomial. They are
//! orthogonal for Haar measure and span the polynomials of total degree
//! `|m₁| + |m₂| + 2n ≤ L` restricted to the sphere. Functions on SO(3) are the
//! even part.

use num_complex::Complex64;

use crate::liegroup::{LieGroup, Su2};

/// Point in the domain of a harmonic basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HarmonicCoords {
    Circle(f64),
    Sphere3 { a: Complex64, b: Complex64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarmonicSpace {
    Circle,
    Sphere3 { even_only: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Term {
    m1: i32,
    m2: i32,
    n: u32,
}

/// Orthogonal basis of polynomial degree ≤ `degree`.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    space: HarmonicSpace,
    degree: usize,
    terms: Vec<Term>,
    inv_norm_sq: Vec<f64>,
}

fn jacobi_into(alpha: f64, beta: f64, z: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    out[1] = (alpha + 1.0) + (alpha + beta + 2.0) * (z - 1.0) / 2.0;
    for n in 2..out.len() {
        let nf = n as f64;
        let s = 2.0 * nf + alpha + beta;
        let a1 = 2.0 * nf * (nf + alpha + beta) * (s - 2.0);
        let a2 = (s - 1.0) * (s * (s - 2.0) * z + alpha * alpha - beta * beta);
        let a3 = 2.0 * (nf + alpha - 1.0) * (nf + beta - 1.0) * s;
        out[n] = (a2 * out[n - 1] - a3 * out[n - 2]) / a1;
    }
}

impl HarmonicBasis {
    pub fn new(space: HarmonicSpace, degree: usize) -> Self {
        let l = degree as i32;
        let mut terms = Vec::new();
        match space {
            HarmonicSpace::Circle => {
                for m in -l..=l {
                    terms.push(Term { m1: m, m2: 0, n: 0 });
                }
            }
            HarmonicSpace::Sphere3 { even_only } => {
                for m1 in -l..=l {
                    for m2 in -l..=l {
                        let s = m1.abs() + m2.abs();
                        if s > l || (even_only && s % 2 == 1) {
                            continue;
                        }
                        for n in 0..=((l - s) / 2) {
                            terms.push(Term { m1, m2, n: n as u32 });
                        }
                    }
                }
            }
        }
        let mut basis = HarmonicBasis {
            space,
            degree,
            terms,
            inv_norm_sq: Vec::new(),
        };
        basis.inv_norm_sq = match space {
            HarmonicSpace::Circle => vec![1.0; basis.terms.len()],
            HarmonicSpace::Sphere3 { .. } => {
                // Degree-2L integrand; the product rule with 2L+1 points is exact.
                let su2 = Su2::new();
                let (nodes, weights) = su2.quadrature_rule((2 * degree + 1).max(2)).expect("resolution >= 2");
                let mut acc = vec![0.0; basis.terms.len()];
                let mut buf = vec![Complex64::new(0.0, 0.0); basis.terms.len()];
                for (g, w) in nodes.iter().zip(&weights) {
                    basis.evaluate_into(&HarmonicCoords::Sphere3 { a: g.a, b: g.b }, &mut buf);
                    for (a, v) in acc.iter_mut().zip(&buf) {
                        *a += w * v.norm_sqr();
                    }
                }
                acc.into_iter().map(|n| 1.0 / n).collect()
            }
        };
        basis
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn space(&self) -> HarmonicSpace {
        self.space
    }

    /// `1 / ‖Bₖ‖²` for Haar probability measure.
    pub fn inv_norm_sq(&self) -> &[f64] {
        &self.inv_norm_sq
    }

    pub fn evaluate(&self, c: &HarmonicCoords) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        self.evaluate_into(c, &mut out);
        out
    }

    pub fn evaluate_into(&self, c: &HarmonicCoords, out: &mut [Complex64]) {
        let l = self.degree;
        match (*c, self.space) {
            (HarmonicCoords::Circle(theta), HarmonicSpace::Circle) => {
                for (o, t) in out.iter_mut().zip(&self.terms) {
                    *o = Complex64::from_polar(1.0, t.m1 as f64 * theta);
                }
            }
            (HarmonicCoords::Sphere3 { a, b }, HarmonicSpace::Sphere3 { .. }) => {
                let mut pa = vec![Complex64::new(1.0, 0.0); l + 1];
                let mut pac = pa.clone();
                let mut pb = pa.clone();
                let mut pbc = pa.clone();
                for k in 1..=l {
                    pa[k] = pa[k - 1] * a;
                    pac[k] = pac[k - 1] * a.conj();
                    pb[k] = pb[k - 1] * b;
                    pbc[k] = pbc[k - 1] * b.conj();
                }
                let z = a.norm_sqr() - b.norm_sqr();
                let nmax = l / 2 + 1;
                let mut table = vec![f64::NAN; (l + 1) * (l + 1) * nmax];
                let idx = |al: usize, be: usize| (al * (l + 1) + be) * nmax;
                for al in 0..=l {
                    for be in 0..=(l - al) {
                        let len = (l - al - be) / 2 + 1;
                        let start = idx(al, be);
                        jacobi_into(al as f64, be as f64, z, &mut table[start..start + len]);
                    }
                }
                for (o, t) in out.iter_mut().zip(&self.terms) {
                    let fa = if t.m1 >= 0 { pa[t.m1 as usize] } else { pac[(-t.m1) as usize] };
                    let fb = if t.m2 >= 0 { pb[t.m2 as usize] } else { pbc[(-t.m2) as usize] };
                    let p = table[idx(t.m2.unsigned_abs() as usize, t.m1.unsigned_abs() as usize) + t.n as usize];
                    *o = fa * fb * p;
                }
            }
            _ => panic!("harmonic coordinates do not match the basis space"),
        }
    }
}
