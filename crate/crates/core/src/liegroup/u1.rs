use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use smallvec::SmallVec;
use rand::{Rng, RngCore};

use super::{AlgebraVector, GroupFamily, GroupSpec, LieGroup};
use crate::error::{Error, Result};
use crate::harmonic::{HarmonicCoords, HarmonicSpace};

/// The circle group, points stored as unit complex numbers.
///
/// The algebra coordinate `c` corresponds to the angle `θ = c·π/2`, so the
/// scaled unit ball is `|θ| ≤ π/2`.
#[derive(Debug, Clone)]
pub struct U1 {
    spec: GroupSpec,
}

impl Default for U1 {
    fn default() -> Self {
        Self::new()
    }
}

impl U1 {
    pub fn new() -> Self {
        U1 {
            spec: GroupSpec {
                family: GroupFamily::Circle,
                matrix_dim: 1,
                metric_scale: 2.0 / PI,
            },
        }
    }

    pub fn from_angle(&self, theta: f64) -> Complex64 {
        Complex64::from_polar(1.0, theta)
    }

    /// Angle in (−π, π].
    pub fn angle(&self, g: &Complex64) -> f64 {
        g.arg()
    }
}

fn project(z: Complex64) -> Complex64 {
    z / z.norm()
}

impl LieGroup for U1 {
    type Point = Complex64;

    fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    fn algebra_dim(&self) -> usize {
        1
    }

    fn identity(&self) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn multiply(&self, a: &Complex64, b: &Complex64) -> Complex64 {
        project(a * b)
    }

    fn inverse(&self, a: &Complex64) -> Complex64 {
        a.conj()
    }

    fn exp(&self, v: &AlgebraVector) -> Complex64 {
        Complex64::from_polar(1.0, v[0] * FRAC_PI_2)
    }

    fn log(&self, g: &Complex64) -> Result<AlgebraVector> {
        let c = g.arg() / FRAC_PI_2;
        if c.abs() >= 1.0 {
            return Err(Error::OutOfChart { distance: c.abs() });
        }
        Ok(AlgebraVector::from_slice(&[c]))
    }

    fn adjoint(&self, _g: &Complex64, v: &AlgebraVector) -> AlgebraVector {
        v.clone()
    }

    fn bracket(&self, _v: &AlgebraVector, _w: &AlgebraVector) -> AlgebraVector {
        AlgebraVector::zeros(1)
    }

    fn to_matrix(&self, g: &Complex64) -> DMatrix<Complex64> {
        DMatrix::from_element(1, 1, *g)
    }

    fn algebra_matrix(&self, v: &AlgebraVector) -> DMatrix<Complex64> {
        DMatrix::from_element(1, 1, Complex64::new(0.0, v[0] * FRAC_PI_2))
    }

    fn quadrature_rule(&self, resolution: usize) -> Result<(Vec<Complex64>, Vec<f64>)> {
        if resolution < 2 {
            return Err(Error::InvalidArgument(format!(
                "quadrature resolution must be >= 2, got {resolution}"
            )));
        }
        let w = 1.0 / resolution as f64;
        let nodes = (0..resolution)
            .map(|k| self.from_angle(2.0 * PI * k as f64 / resolution as f64))
            .collect();
        Ok((nodes, vec![w; resolution]))
    }

    fn random(&self, rng: &mut dyn RngCore) -> Complex64 {
        let theta = rng.random::<f64>() * 2.0 * PI - PI;
        self.from_angle(theta)
    }

    fn embedding(&self, g: &Complex64) -> SmallVec<[Complex64; 9]> {
        smallvec::smallvec![*g]
    }

    fn from_embedding(&self, e: &[Complex64]) -> Complex64 {
        project(e[0])
    }

    fn harmonic_coords(&self, g: &Complex64) -> Option<HarmonicCoords> {
        Some(HarmonicCoords::Circle(g.arg()))
    }

    fn harmonic_space(&self) -> Option<HarmonicSpace> {
        Some(HarmonicSpace::Circle)
    }

    fn circle_angle(&self, g: &Complex64) -> Option<f64> {
        Some(g.arg())
    }

    fn on_group_residual(&self, g: &Complex64) -> f64 {
        (g.norm_sqr() - 1.0).abs()
    }
}
