use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::groupoid::BasePoint;
use crate::liegroup::{AlgebraVector, LieGroup};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Monomial {
    One,
    Linear(usize),
    Quadratic(usize, usize),
}

impl Monomial {
    fn eval(self, x: &[f64], inv_radius: f64) -> f64 {
        match self {
            Monomial::One => 1.0,
            Monomial::Linear(i) => x[i] * inv_radius,
            Monomial::Quadratic(i, j) => x[i] * x[j] * inv_radius * inv_radius,
        }
    }
}

/// A fixed smooth field `η: G × B → 𝔤` with `η(·, x₀) = 0` when `d > 0`.
///
/// Each algebra component is `Σ_m m(x) · Re(α₀ + Σₑ αₑ eₑ(g))`, with `m`
/// ranging over the base monomials `xᵢ/ρ`, `xᵢxⱼ/ρ²`, `eₑ` the embedding
/// coordinates of `g`, and seeded complex normal coefficients `α`. The field
/// is rescaled so its sampled sup-norm is one. For `d = 0` the only monomial
/// is the constant.
/// Embedding entries `eᵢ` and the products `eᵢeⱼ`, `eᵢēⱼ`.
fn features<G: LieGroup>(group: &G, g: &G::Point) -> Vec<Complex64> {
    let e = group.embedding(g);
    let mut out: Vec<Complex64> = e.to_vec();
    for i in 0..e.len() {
        for j in 0..e.len() {
            if j >= i {
                out.push(e[i] * e[j]);
            }
            out.push(e[i] * e[j].conj());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationField {
    algebra_dim: usize,
    inv_radius: f64,
    monomials: Vec<Monomial>,
    /// `coeffs[m][i][f]` for monomial `m`, component `i`, feature `f`.
    coeffs: Vec<Vec<Vec<Complex64>>>,
}

impl PerturbationField {
    pub fn random<G: LieGroup>(group: &G, base_dim: usize, radius: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let monomials = if base_dim == 0 {
            vec![Monomial::One]
        } else {
            let mut m: Vec<Monomial> = (0..base_dim).map(Monomial::Linear).collect();
            for i in 0..base_dim {
                for j in i..base_dim {
                    m.push(Monomial::Quadratic(i, j));
                }
            }
            m
        };
        let features = 1 + features(group, &group.identity()).len();
        let n = group.algebra_dim();
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
        let coeffs = monomials
            .iter()
            .map(|_| {
                (0..n)
                    .map(|_| (0..features).map(|_| Complex64::new(normal(), normal())).collect())
                    .collect()
            })
            .collect();
        let mut field = PerturbationField {
            algebra_dim: n,
            inv_radius: if radius > 0.0 { 1.0 / radius } else { 0.0 },
            monomials,
            coeffs,
        };
        let sup = field.sampled_sup(group, base_dim, radius, seed);
        if sup > 0.0 {
            for m in &mut field.coeffs {
                for comp in m {
                    for c in comp {
                        *c /= sup;
                    }
                }
            }
        }
        field
    }

    fn sampled_sup<G: LieGroup>(&self, group: &G, base_dim: usize, radius: f64, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut sup = 0.0f64;
        for k in 0..512 {
            let g = group.random(&mut rng);
            let x: Vec<f64> = (0..base_dim)
                .map(|_| {
                    if k % 2 == 0 {
                        if rng.random::<bool>() {
                            radius
                        } else {
                            -radius
                        }
                    } else {
                        rng.random_range(-radius..=radius)
                    }
                })
                .collect();
            sup = sup.max(self.eval(group, &g, &BasePoint::from_slice(&x)).norm());
        }
        sup
    }

    pub fn eval<G: LieGroup>(&self, group: &G, g: &G::Point, x: &BasePoint) -> AlgebraVector {
        let e = features(group, g);
        let mut out = AlgebraVector::zeros(self.algebra_dim);
        for (m, coeffs) in self.monomials.iter().zip(&self.coeffs) {
            let mv = m.eval(x.coords(), self.inv_radius);
            if mv == 0.0 {
                continue;
            }
            for (i, c) in coeffs.iter().enumerate() {
                let mut acc = c[0];
                for (cf, ef) in c[1..].iter().zip(&e) {
                    acc += cf * ef;
                }
                out.coords_mut()[i] += mv * acc.re;
            }
        }
        out
    }
}
