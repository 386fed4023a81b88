use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use smallvec::SmallVec;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::quadrature::gauss_legendre;
use super::{AlgebraVector, GroupFamily, GroupSpec, LieGroup};
use crate::error::{Error, Result};
use crate::harmonic::{HarmonicCoords, HarmonicSpace};

/// Element `[[a, −b̄], [b, ā]]` of SU(2), `|a|² + |b|² = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2Point {
    pub a: Complex64,
    pub b: Complex64,
}

impl Su2Point {
    pub const IDENTITY: Su2Point = Su2Point {
        a: Complex64 { re: 1.0, im: 0.0 },
        b: Complex64 { re: 0.0, im: 0.0 },
    };

    /// Unit quaternion `(w, x, y, z)` with `g = w·I + x·e₁ + y·e₂ + z·e₃`, `eₖ = iσₖ`.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        Su2Point {
            a: Complex64::new(w / n, z / n),
            b: Complex64::new(-y / n, x / n),
        }
    }

    pub fn quaternion(&self) -> [f64; 4] {
        [self.a.re, self.b.im, -self.b.re, self.a.im]
    }

    fn norm(&self) -> f64 {
        (self.a.norm_sqr() + self.b.norm_sqr()).sqrt()
    }
}

/// Product of two elements of the form `[[a, −b̄], [b, ā]]`, which also covers
/// the (unnormalized) algebra elements.
#[inline]
pub(crate) fn pair_mul(p: &Su2Point, q: &Su2Point) -> Su2Point {
    Su2Point {
        a: p.a * q.a - p.b.conj() * q.b,
        b: p.b * q.a + p.a.conj() * q.b,
    }
}

#[inline]
fn pair_inv(p: &Su2Point) -> Su2Point {
    Su2Point {
        a: p.a.conj(),
        b: -p.b,
    }
}

/// Physical algebra coordinates `v` ↔ `i(v·σ)`, as a pair `(i v₃, i v₁ − v₂)`.
#[inline]
fn algebra_pair(v: [f64; 3]) -> Su2Point {
    Su2Point {
        a: Complex64::new(0.0, v[2]),
        b: Complex64::new(-v[1], v[0]),
    }
}

#[inline]
fn pair_algebra(p: &Su2Point) -> [f64; 3] {
    [p.b.im, -p.b.re, p.a.im]
}

/// SU(2) with scaled metric: algebra coordinate `c` ↔ `i(v·σ)` with `v = c·π/2`,
/// so `exp` of the scaled unit ball reaches rotation parameter `|v| = π/2`,
/// half the injectivity radius.
#[derive(Debug, Clone)]
pub struct Su2 {
    spec: GroupSpec,
}

impl Default for Su2 {
    fn default() -> Self {
        Self::new()
    }
}

impl Su2 {
    pub fn new() -> Self {
        Su2 {
            spec: GroupSpec {
                family: GroupFamily::SpecialUnitary2,
                matrix_dim: 2,
                metric_scale: std::f64::consts::SQRT_2 / PI,
            },
        }
    }

    /// Rotation matrix of `Ad_g` acting on scaled algebra coordinates.
    pub fn rotation(&self, g: &Su2Point) -> nalgebra::Matrix3<f64> {
        let mut r = nalgebra::Matrix3::zeros();
        for k in 0..3 {
            let mut e = [0.0; 3];
            e[k] = 1.0;
            let col = pair_algebra(&pair_mul(&pair_mul(g, &algebra_pair(e)), &pair_inv(g)));
            for i in 0..3 {
                r[(i, k)] = col[i];
            }
        }
        r
    }

    /// Unnormalized log returning physical `v` and the rotation parameter `|v|`.
    fn log_physical(g: &Su2Point) -> ([f64; 3], f64) {
        let nu = (g.a.im * g.a.im + g.b.norm_sqr()).sqrt();
        let r = nu.atan2(g.a.re);
        let factor = if nu > 1e-300 { r / nu } else { 1.0 };
        ([g.b.im * factor, -g.b.re * factor, g.a.im * factor], r)
    }
}

#[inline]
fn project(p: Su2Point) -> Su2Point {
    let n = p.norm();
    Su2Point {
        a: p.a / n,
        b: p.b / n,
    }
}

impl LieGroup for Su2 {
    type Point = Su2Point;

    fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    fn algebra_dim(&self) -> usize {
        3
    }

    fn identity(&self) -> Su2Point {
        Su2Point::IDENTITY
    }

    #[inline]
    fn multiply(&self, a: &Su2Point, b: &Su2Point) -> Su2Point {
        project(pair_mul(a, b))
    }

    #[inline]
    fn inverse(&self, a: &Su2Point) -> Su2Point {
        pair_inv(a)
    }

    fn exp(&self, v: &AlgebraVector) -> Su2Point {
        let v = [v[0] * FRAC_PI_2, v[1] * FRAC_PI_2, v[2] * FRAC_PI_2];
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let sinc = if r < 1e-8 { 1.0 - r * r / 6.0 } else { r.sin() / r };
        project(Su2Point {
            a: Complex64::new(r.cos(), sinc * v[2]),
            b: Complex64::new(-sinc * v[1], sinc * v[0]),
        })
    }

    fn log(&self, g: &Su2Point) -> Result<AlgebraVector> {
        let (v, r) = Self::log_physical(g);
        let dist = r / FRAC_PI_2;
        if dist >= 1.0 {
            return Err(Error::OutOfChart { distance: dist });
        }
        Ok(AlgebraVector::from_slice(&[
            v[0] / FRAC_PI_2,
            v[1] / FRAC_PI_2,
            v[2] / FRAC_PI_2,
        ]))
    }

    fn adjoint(&self, g: &Su2Point, v: &AlgebraVector) -> AlgebraVector {
        let p = algebra_pair([v[0], v[1], v[2]]);
        let r = pair_algebra(&pair_mul(&pair_mul(g, &p), &pair_inv(g)));
        AlgebraVector::from_slice(&r)
    }

    fn bracket(&self, v: &AlgebraVector, w: &AlgebraVector) -> AlgebraVector {
        let s = FRAC_PI_2;
        let pv = algebra_pair([v[0] * s, v[1] * s, v[2] * s]);
        let pw = algebra_pair([w[0] * s, w[1] * s, w[2] * s]);
        let vw = pair_algebra(&pair_mul(&pv, &pw));
        let wv = pair_algebra(&pair_mul(&pw, &pv));
        AlgebraVector::from_slice(&[
            (vw[0] - wv[0]) / s,
            (vw[1] - wv[1]) / s,
            (vw[2] - wv[2]) / s,
        ])
    }

    fn to_matrix(&self, g: &Su2Point) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[g.a, -g.b.conj(), g.b, g.a.conj()])
    }

    fn algebra_matrix(&self, v: &AlgebraVector) -> DMatrix<Complex64> {
        let p = algebra_pair([v[0] * FRAC_PI_2, v[1] * FRAC_PI_2, v[2] * FRAC_PI_2]);
        self.to_matrix(&p)
    }

    /// Product rule in Hopf coordinates `a = cos η e^{iξ₁}`, `b = sin η e^{iξ₂}`:
    /// trapezoidal in ξ₁, ξ₂ with `resolution` points each and Gauss–Legendre in
    /// `z = cos 2η`, exact for polynomials of degree `resolution − 1` in the
    /// matrix entries.
    fn quadrature_rule(&self, resolution: usize) -> Result<(Vec<Su2Point>, Vec<f64>)> {
        if resolution < 2 {
            return Err(Error::InvalidArgument(format!(
                "quadrature resolution must be >= 2, got {resolution}"
            )));
        }
        let degree = resolution - 1;
        let nz = (degree / 2 + 2) / 2;
        let (zs, wz) = gauss_legendre(nz.max(1));
        let n = resolution as f64;
        let mut nodes = Vec::with_capacity(resolution * resolution * zs.len());
        let mut weights = Vec::with_capacity(nodes.capacity());
        for (z, wzk) in zs.iter().zip(&wz) {
            let c = ((1.0 + z) / 2.0).sqrt();
            let s = ((1.0 - z) / 2.0).sqrt();
            for i in 0..resolution {
                let xi1 = 2.0 * PI * i as f64 / n;
                for j in 0..resolution {
                    let xi2 = 2.0 * PI * j as f64 / n;
                    nodes.push(project(Su2Point {
                        a: Complex64::from_polar(c, xi1),
                        b: Complex64::from_polar(s, xi2),
                    }));
                    weights.push(wzk / 2.0 / (n * n));
                }
            }
        }
        Ok((nodes, weights))
    }

    fn random(&self, rng: &mut dyn RngCore) -> Su2Point {
        let mut q = [0.0f64; 4];
        for x in &mut q {
            *x = StandardNormal.sample(&mut *rng);
        }
        Su2Point::from_quaternion(q[0], q[1], q[2], q[3])
    }

    fn embedding(&self, g: &Su2Point) -> SmallVec<[Complex64; 9]> {
        smallvec::smallvec![g.a, g.b]
    }

    fn from_embedding(&self, e: &[Complex64]) -> Su2Point {
        project(Su2Point { a: e[0], b: e[1] })
    }

    fn harmonic_coords(&self, g: &Su2Point) -> Option<HarmonicCoords> {
        Some(HarmonicCoords::Sphere3 { a: g.a, b: g.b })
    }

    fn harmonic_space(&self) -> Option<HarmonicSpace> {
        Some(HarmonicSpace::Sphere3 { even_only: false })
    }

    fn on_group_residual(&self, g: &Su2Point) -> f64 {
        // gᴴg = (|a|²+|b|²)·I for this parameterization.
        std::f64::consts::SQRT_2 * (g.a.norm_sqr() + g.b.norm_sqr() - 1.0).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Hamilton product on (w, x, y, z).
    fn hamilton(p: [f64; 4], q: [f64; 4]) -> [f64; 4] {
        [
            p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
            p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
            p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
            p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0],
        ]
    }

    #[test]
    fn product_matches_quaternion_algebra_and_matrices() {
        // Conjugating the vector part turns our product into the Hamilton product.
        let group = Su2::new();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let g = group.random(&mut rng);
            let h = group.random(&mut rng);
            let gh = group.multiply(&g, &h);
            let conj = |q: [f64; 4]| [q[0], -q[1], -q[2], -q[3]];
            let expected = conj(hamilton(conj(g.quaternion()), conj(h.quaternion())));
            let got = gh.quaternion();
            for k in 0..4 {
                assert!((expected[k] - got[k]).abs() < 1e-14);
            }
            let m = group.to_matrix(&g) * group.to_matrix(&h);
            let gap = (m - group.to_matrix(&gh)).iter().map(|c| c.norm()).fold(0.0, f64::max);
            assert!(gap < 1e-14);
        }
    }

    #[test]
    fn log_of_diagonal_element() {
        let group = Su2::new();
        let theta = 0.3;
        let g = Su2Point {
            a: Complex64::from_polar(1.0, theta),
            b: Complex64::new(0.0, 0.0),
        };
        let v = group.log(&g).unwrap();
        let m = group.algebra_matrix(&v);
        assert!((m[(0, 0)] - Complex64::new(0.0, theta)).norm() < 1e-14);
        assert!((m[(1, 1)] - Complex64::new(0.0, -theta)).norm() < 1e-14);
        assert!(m[(0, 1)].norm() < 1e-15 && m[(1, 0)].norm() < 1e-15);
    }

    #[test]
    fn algebra_matrix_is_traceless_skew_hermitian() {
        let group = Su2::new();
        let v = AlgebraVector::from_slice(&[0.2, -0.5, 0.7]);
        let m = group.algebra_matrix(&v);
        let s = &m + m.adjoint();
        assert!(s.iter().all(|c| c.norm() < 1e-15));
        assert!((m[(0, 0)] + m[(1, 1)]).norm() < 1e-15);
        // scaled norm = λ‖V‖_F
        let frob = m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert!((group.spec().metric_scale * frob - v.norm()).abs() < 1e-14);
    }
}
