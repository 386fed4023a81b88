use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use smallvec::SmallVec;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::so3::{so3_quadrature, su2_lift};
use super::{AlgebraVector, GroupFamily, GroupSpec, LieGroup};
use crate::error::{Error, Result};
use crate::harmonic::{HarmonicCoords, HarmonicSpace};

/// SO(n), n ≥ 2, as dense real matrices.
///
/// Algebra coordinates are the plane angles `θᵢⱼ` (i < j, lexicographic) of
/// `Σ θᵢⱼ (eᵢeⱼᵀ − eⱼeᵢᵀ)`, scaled by `2/π`.
#[derive(Debug, Clone)]
pub struct SoN {
    spec: GroupSpec,
    n: usize,
}

impl SoN {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("SO(n) needs n >= 2, got {n}")));
        }
        Ok(SoN {
            spec: GroupSpec {
                family: GroupFamily::SpecialOrthogonal(n),
                matrix_dim: n,
                metric_scale: std::f64::consts::SQRT_2 / PI,
            },
            n,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn skew(&self, v: &AlgebraVector) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        let mut k = 0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let t = v[k] * FRAC_PI_2;
                m[(i, j)] = t;
                m[(j, i)] = -t;
                k += 1;
            }
        }
        m
    }

    fn unskew(&self, m: &DMatrix<f64>) -> AlgebraVector {
        let mut out = Vec::with_capacity(self.algebra_dim());
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                out.push(0.5 * (m[(i, j)] - m[(j, i)]) / FRAC_PI_2);
            }
        }
        AlgebraVector::from_slice(&out)
    }

    fn as_matrix3(g: &DMatrix<f64>) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| g[(i, j)])
    }
}

fn polar(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let svd = m.clone().svd(true, true);
    let (mut u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let r = &u * &vt;
    if r.determinant() < 0.0 {
        u.column_mut(n - 1).neg_mut();
        return &u * &vt;
    }
    r
}

fn reorthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    m * (DMatrix::<f64>::identity(n, n) * 3.0 - m.transpose() * m) * 0.5
}

/// Principal square root by the Denman–Beavers iteration.
fn sqrtm(x: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = x.nrows();
    let mut y = x.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    for _ in 0..100 {
        let yi = y.clone().try_inverse()?;
        let zi = z.clone().try_inverse()?;
        let y_next = (&y + zi) * 0.5;
        let z_next = (&z + yi) * 0.5;
        let delta = (&y_next - &y).abs().max();
        y = y_next;
        z = z_next;
        if delta < 1e-15 {
            return Some(y);
        }
    }
    None
}

/// Matrix logarithm of an orthogonal matrix via two square roots followed by
/// the Gregory series `log X = 2 Σ Z^{2k+1}/(2k+1)`, `Z = (X−I)(X+I)⁻¹`.
fn logm_orthogonal(x: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = x.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let mut y = x.clone();
    let squarings = 3;
    for _ in 0..squarings {
        y = sqrtm(&y)?;
    }
    let z = (&y - &id) * (&y + &id).try_inverse()?;
    let z2 = &z * &z;
    let mut term = z.clone();
    let mut acc = z.clone();
    for k in 1..40 {
        term = &term * &z2;
        let add = &term / (2 * k + 1) as f64;
        acc += &add;
        if add.abs().max() < 1e-18 {
            break;
        }
    }
    Some(acc * (2.0 * (1u32 << squarings) as f64))
}

impl LieGroup for SoN {
    type Point = DMatrix<f64>;

    fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    fn algebra_dim(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    fn identity(&self) -> DMatrix<f64> {
        DMatrix::identity(self.n, self.n)
    }

    fn multiply(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        reorthonormalize(&(a * b))
    }

    fn inverse(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        a.transpose()
    }

    fn exp(&self, v: &AlgebraVector) -> DMatrix<f64> {
        polar(&self.skew(v).exp())
    }

    fn log(&self, g: &DMatrix<f64>) -> Result<AlgebraVector> {
        let l = logm_orthogonal(g).ok_or(Error::OutOfChart {
            distance: f64::INFINITY,
        })?;
        let v = self.unskew(&l);
        let d = v.norm();
        if d >= 1.0 {
            return Err(Error::OutOfChart { distance: d });
        }
        Ok(v)
    }

    fn adjoint(&self, g: &DMatrix<f64>, v: &AlgebraVector) -> AlgebraVector {
        self.unskew(&(g * self.skew(v) * g.transpose()))
    }

    fn bracket(&self, v: &AlgebraVector, w: &AlgebraVector) -> AlgebraVector {
        let (a, b) = (self.skew(v), self.skew(w));
        self.unskew(&(&a * &b - &b * &a))
    }

    fn to_matrix(&self, g: &DMatrix<f64>) -> DMatrix<Complex64> {
        g.map(|x| Complex64::new(x, 0.0))
    }

    fn algebra_matrix(&self, v: &AlgebraVector) -> DMatrix<Complex64> {
        self.skew(v).map(|x| Complex64::new(x, 0.0))
    }

    fn quadrature_rule(&self, resolution: usize) -> Result<(Vec<DMatrix<f64>>, Vec<f64>)> {
        if resolution < 2 {
            return Err(Error::InvalidArgument(format!(
                "quadrature resolution must be >= 2, got {resolution}"
            )));
        }
        match self.n {
            2 => {
                let w = 1.0 / resolution as f64;
                let nodes = (0..resolution)
                    .map(|k| {
                        let t = 2.0 * PI * k as f64 / resolution as f64;
                        DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()])
                    })
                    .collect();
                Ok((nodes, vec![w; resolution]))
            }
            3 => {
                let (nodes, weights) = so3_quadrature(resolution)?;
                Ok((
                    nodes.iter().map(|m| DMatrix::from_fn(3, 3, |i, j| m[(i, j)])).collect(),
                    weights,
                ))
            }
            n => Err(Error::Unsupported(format!(
                "Haar quadrature for SO({n}) is only available for n = 2, 3"
            ))),
        }
    }

    fn random(&self, rng: &mut dyn RngCore) -> DMatrix<f64> {
        let a = DMatrix::<f64>::from_fn(self.n, self.n, |_, _| StandardNormal.sample(&mut *rng));
        let qr = a.qr();
        let (mut q, r) = (qr.q(), qr.r());
        for j in 0..self.n {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        if q.determinant() < 0.0 {
            q.column_mut(0).neg_mut();
        }
        q
    }

    fn embedding(&self, g: &DMatrix<f64>) -> SmallVec<[Complex64; 9]> {
        g.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    fn from_embedding(&self, e: &[Complex64]) -> DMatrix<f64> {
        polar(&DMatrix::from_iterator(self.n, self.n, e.iter().map(|c| c.re)))
    }

    fn harmonic_coords(&self, g: &DMatrix<f64>) -> Option<HarmonicCoords> {
        match self.n {
            2 => Some(HarmonicCoords::Circle(g[(1, 0)].atan2(g[(0, 0)]))),
            3 => {
                let u = su2_lift(&Self::as_matrix3(g));
                Some(HarmonicCoords::Sphere3 { a: u.a, b: u.b })
            }
            _ => None,
        }
    }

    fn harmonic_space(&self) -> Option<HarmonicSpace> {
        match self.n {
            2 => Some(HarmonicSpace::Circle),
            3 => Some(HarmonicSpace::Sphere3 { even_only: true }),
            _ => None,
        }
    }

    fn circle_angle(&self, g: &DMatrix<f64>) -> Option<f64> {
        (self.n == 2).then(|| g[(1, 0)].atan2(g[(0, 0)]))
    }
}
