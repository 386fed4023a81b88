use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use smallvec::SmallVec;
use rand::RngCore;

use super::su2::{Su2, Su2Point};
use super::{AlgebraVector, GroupFamily, GroupSpec, LieGroup};
use crate::error::{Error, Result};
use crate::harmonic::{HarmonicCoords, HarmonicSpace};

/// SO(3) as rotation matrices. Algebra coordinate `c` ↔ `hat(ω)` with `ω = c·π/2`;
/// the scaled unit ball is rotation angle ≤ π/2.
#[derive(Debug, Clone)]
pub struct So3 {
    spec: GroupSpec,
}

impl Default for So3 {
    fn default() -> Self {
        Self::new()
    }
}

pub(crate) fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

pub(crate) fn polar3(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (mut u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    if (u * vt).determinant() < 0.0 {
        u.column_mut(2).neg_mut();
    }
    u * vt
}

/// One Björck step `R ← R(3I − RᵀR)/2`, enough for products of rotations.
pub(crate) fn reorthonormalize3(m: &Matrix3<f64>) -> Matrix3<f64> {
    m * (Matrix3::identity() * 3.0 - m.transpose() * m) * 0.5
}

pub(crate) fn rodrigues(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let k = hat(w);
    let (a, b) = if theta < 1e-6 {
        let t2 = theta * theta;
        (1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    };
    Matrix3::identity() + k * a + k * k * b
}

/// Physical rotation vector and angle of a rotation matrix.
pub(crate) fn log_rotation(r: &Matrix3<f64>) -> (Vector3<f64>, f64) {
    let vee = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]) * 0.5;
    let s = vee.norm();
    let c = (r.trace() - 1.0) * 0.5;
    let theta = s.atan2(c);
    let factor = if s > 1e-300 { theta / s } else { 1.0 };
    (vee * factor, theta)
}

/// Unit quaternion of a rotation (Shepperd), lifted to SU(2) so that the
/// adjoint rotation of the lift is `r`.
pub(crate) fn su2_lift(r: &Matrix3<f64>) -> Su2Point {
    let tr = r.trace();
    let (w, x, y, z);
    if tr > r[(0, 0)] && tr > r[(1, 1)] && tr > r[(2, 2)] {
        let s = (1.0 + tr).sqrt() * 2.0;
        w = 0.25 * s;
        x = (r[(2, 1)] - r[(1, 2)]) / s;
        y = (r[(0, 2)] - r[(2, 0)]) / s;
        z = (r[(1, 0)] - r[(0, 1)]) / s;
    } else if r[(0, 0)] > r[(1, 1)] && r[(0, 0)] > r[(2, 2)] {
        let s = (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt() * 2.0;
        w = (r[(2, 1)] - r[(1, 2)]) / s;
        x = 0.25 * s;
        y = (r[(0, 1)] + r[(1, 0)]) / s;
        z = (r[(0, 2)] + r[(2, 0)]) / s;
    } else if r[(1, 1)] > r[(2, 2)] {
        let s = (1.0 + r[(1, 1)] - r[(0, 0)] - r[(2, 2)]).sqrt() * 2.0;
        w = (r[(0, 2)] - r[(2, 0)]) / s;
        x = (r[(0, 1)] + r[(1, 0)]) / s;
        y = 0.25 * s;
        z = (r[(1, 2)] + r[(2, 1)]) / s;
    } else {
        let s = (1.0 + r[(2, 2)] - r[(0, 0)] - r[(1, 1)]).sqrt() * 2.0;
        w = (r[(1, 0)] - r[(0, 1)]) / s;
        x = (r[(0, 2)] + r[(2, 0)]) / s;
        y = (r[(1, 2)] + r[(2, 1)]) / s;
        z = 0.25 * s;
    }
    // The Hamilton quaternion q rotates by R(q); our SU(2) coordinates carry the
    // conjugate convention, hence the sign flip on the vector part.
    Su2Point::from_quaternion(w, -x, -y, -z)
}

/// SU(2) product-rule nodes pushed to SO(3); antipodal duplicates are merged.
pub(crate) fn so3_quadrature(resolution: usize) -> Result<(Vec<Matrix3<f64>>, Vec<f64>)> {
    let su2 = Su2::new();
    let (nodes, weights) = su2.quadrature_rule(resolution)?;
    let mut index: HashMap<[i64; 4], usize> = HashMap::new();
    let mut out_nodes = Vec::new();
    let mut out_weights: Vec<f64> = Vec::new();
    for (g, w) in nodes.iter().zip(&weights) {
        let mut q = g.quaternion();
        let lead = q.iter().copied().find(|c| c.abs() > 1e-9).unwrap_or(1.0);
        if lead < 0.0 {
            for c in &mut q {
                *c = -*c;
            }
        }
        let key = q.map(|c| (c * 1e8).round() as i64);
        match index.get(&key) {
            Some(&i) => out_weights[i] += w,
            None => {
                index.insert(key, out_nodes.len());
                out_nodes.push(su2.rotation(g));
                out_weights.push(*w);
            }
        }
    }
    Ok((out_nodes, out_weights))
}

impl So3 {
    pub fn new() -> Self {
        So3 {
            spec: GroupSpec {
                family: GroupFamily::Rotation3,
                matrix_dim: 3,
                metric_scale: std::f64::consts::SQRT_2 / PI,
            },
        }
    }

    pub fn from_su2(&self, g: &Su2Point) -> Matrix3<f64> {
        Su2::new().rotation(g)
    }
}

fn to_complex(m: &Matrix3<f64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(3, 3, |i, j| Complex64::new(m[(i, j)], 0.0))
}

impl LieGroup for So3 {
    type Point = Matrix3<f64>;

    fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    fn algebra_dim(&self) -> usize {
        3
    }

    fn identity(&self) -> Matrix3<f64> {
        Matrix3::identity()
    }

    fn multiply(&self, a: &Matrix3<f64>, b: &Matrix3<f64>) -> Matrix3<f64> {
        reorthonormalize3(&(a * b))
    }

    fn inverse(&self, a: &Matrix3<f64>) -> Matrix3<f64> {
        a.transpose()
    }

    fn exp(&self, v: &AlgebraVector) -> Matrix3<f64> {
        let w = Vector3::new(v[0], v[1], v[2]) * FRAC_PI_2;
        reorthonormalize3(&rodrigues(&w))
    }

    fn log(&self, g: &Matrix3<f64>) -> Result<AlgebraVector> {
        let (w, theta) = log_rotation(g);
        let dist = theta / FRAC_PI_2;
        if dist >= 1.0 {
            return Err(Error::OutOfChart { distance: dist });
        }
        let c = w / FRAC_PI_2;
        Ok(AlgebraVector::from_slice(&[c.x, c.y, c.z]))
    }

    fn adjoint(&self, g: &Matrix3<f64>, v: &AlgebraVector) -> AlgebraVector {
        let r = g * Vector3::new(v[0], v[1], v[2]);
        AlgebraVector::from_slice(&[r.x, r.y, r.z])
    }

    fn bracket(&self, v: &AlgebraVector, w: &AlgebraVector) -> AlgebraVector {
        let c = Vector3::new(v[0], v[1], v[2]).cross(&Vector3::new(w[0], w[1], w[2])) * FRAC_PI_2;
        AlgebraVector::from_slice(&[c.x, c.y, c.z])
    }

    fn to_matrix(&self, g: &Matrix3<f64>) -> DMatrix<Complex64> {
        to_complex(g)
    }

    fn algebra_matrix(&self, v: &AlgebraVector) -> DMatrix<Complex64> {
        to_complex(&hat(&(Vector3::new(v[0], v[1], v[2]) * FRAC_PI_2)))
    }

    fn quadrature_rule(&self, resolution: usize) -> Result<(Vec<Matrix3<f64>>, Vec<f64>)> {
        so3_quadrature(resolution)
    }

    fn random(&self, rng: &mut dyn RngCore) -> Matrix3<f64> {
        Su2::new().rotation(&Su2::new().random(rng))
    }

    fn embedding(&self, g: &Matrix3<f64>) -> SmallVec<[Complex64; 9]> {
        g.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    fn from_embedding(&self, e: &[Complex64]) -> Matrix3<f64> {
        polar3(&Matrix3::from_iterator(e.iter().map(|c| c.re)))
    }

    fn harmonic_coords(&self, g: &Matrix3<f64>) -> Option<HarmonicCoords> {
        let u = su2_lift(g);
        Some(HarmonicCoords::Sphere3 { a: u.a, b: u.b })
    }

    fn harmonic_space(&self) -> Option<HarmonicSpace> {
        Some(HarmonicSpace::Sphere3 { even_only: true })
    }
}
