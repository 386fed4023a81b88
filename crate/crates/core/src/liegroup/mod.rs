//! Compact matrix Lie groups with a rescaled bi-invariant metric.
//!
//! Every group is rescaled so that the closed unit ball of the Lie algebra
//! maps diffeomorphically onto the unit ball around the identity, with a
//! margin: the scaled unit ball corresponds to half the injectivity radius.
//! Algebra elements are stored as coordinates in a basis that is orthonormal
//! for the scaled metric, so the algebra norm is the Euclidean norm of the
//! coordinates.

mod algebra;
mod quadrature;
mod so3;
mod son;
mod su2;
mod u1;

use std::fmt;

use nalgebra::DMatrix;
use smallvec::SmallVec;
use num_complex::Complex64;
use rand::RngCore;

pub use algebra::AlgebraVector;
pub use quadrature::{gauss_legendre, haar_quadrature, invariance_residual, GroupQuadrature, Side};
pub use so3::So3;
pub use son::SoN;
pub use su2::{Su2, Su2Point};
pub use u1::U1;

use crate::error::{Error, Result};
use crate::harmonic::HarmonicCoords;

/// Group families supported by the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupFamily {
    /// The circle group U(1).
    Circle,
    /// SU(2) as 2×2 complex matrices.
    SpecialUnitary2,
    /// SO(3) as 3×3 rotation matrices.
    Rotation3,
    /// SO(n) for n ≥ 2.
    SpecialOrthogonal(usize),
}

impl fmt::Display for GroupFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupFamily::Circle => write!(f, "U(1)"),
            GroupFamily::SpecialUnitary2 => write!(f, "SU(2)"),
            GroupFamily::Rotation3 => write!(f, "SO(3)"),
            GroupFamily::SpecialOrthogonal(n) => write!(f, "SO({n})"),
        }
    }
}

/// Family, matrix size and metric scale λ of a group.
///
/// The scaled norm of an algebra matrix `V` is `λ · ‖V‖_F`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    pub family: GroupFamily,
    pub matrix_dim: usize,
    pub metric_scale: f64,
}

/// Tolerance for the orthogonality / unitarity residual of group points.
pub const ON_GROUP_TOL: f64 = 1e-12;

/// A compact matrix Lie group with a bi-invariant metric scaled so that the
/// principal logarithm is defined on the scaled unit ball.
///
/// All operations are pure. `multiply` and `exp` re-project their result to
/// the group manifold.
pub trait LieGroup: fmt::Debug + Send + Sync + 'static {
    type Point: Clone + fmt::Debug + PartialEq + Send + Sync + 'static;

    fn spec(&self) -> &GroupSpec;

    /// Dimension of the Lie algebra.
    fn algebra_dim(&self) -> usize;

    fn identity(&self) -> Self::Point;

    fn multiply(&self, a: &Self::Point, b: &Self::Point) -> Self::Point;

    fn inverse(&self, a: &Self::Point) -> Self::Point;

    fn exp(&self, v: &AlgebraVector) -> Self::Point;

    /// Principal logarithm. Fails with [`Error::OutOfChart`] when the scaled
    /// distance to the identity is ≥ 1.
    fn log(&self, g: &Self::Point) -> Result<AlgebraVector>;

    /// `g · v · g⁻¹`.
    fn adjoint(&self, g: &Self::Point, v: &AlgebraVector) -> AlgebraVector;

    /// Lie bracket `[v, w] = vw − wv`, in scaled coordinates.
    fn bracket(&self, v: &AlgebraVector, w: &AlgebraVector) -> AlgebraVector;

    fn to_matrix(&self, g: &Self::Point) -> DMatrix<Complex64>;

    fn algebra_matrix(&self, v: &AlgebraVector) -> DMatrix<Complex64>;

    /// Nodes and weights of the group quadrature at the given resolution.
    fn quadrature_rule(&self, resolution: usize) -> Result<(Vec<Self::Point>, Vec<f64>)>;

    /// Haar-distributed random element.
    fn random(&self, rng: &mut dyn RngCore) -> Self::Point;

    /// Complex coordinates that embed the group real-linearly (matrix entries
    /// or a subset of them determining the point).
    fn embedding(&self, g: &Self::Point) -> SmallVec<[Complex64; 9]>;

    /// Nearest group point to an embedding vector, e.g. after blending.
    fn from_embedding(&self, e: &[Complex64]) -> Self::Point;

    /// Coordinates for the harmonic (spectral) basis, when the family has one.
    fn harmonic_coords(&self, g: &Self::Point) -> Option<HarmonicCoords>;

    /// Harmonic space used for functions on this group (circle, S³, or S³ even part).
    fn harmonic_space(&self) -> Option<crate::harmonic::HarmonicSpace> {
        None
    }

    /// Rotation angle for one-dimensional families.
    fn circle_angle(&self, _g: &Self::Point) -> Option<f64> {
        None
    }

    /// `‖gᴴg − I‖_F`.
    fn on_group_residual(&self, g: &Self::Point) -> f64 {
        let m = self.to_matrix(g);
        let n = m.nrows();
        let r = m.adjoint() * &m - DMatrix::<Complex64>::identity(n, n);
        r.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Bi-invariant distance `‖log(a⁻¹b)‖`.
    fn distance(&self, a: &Self::Point, b: &Self::Point) -> Result<f64> {
        let d = self.multiply(&self.inverse(a), b);
        Ok(self.log(&d)?.norm())
    }

    /// Distance to the identity.
    fn dist_to_identity(&self, g: &Self::Point) -> Result<f64> {
        Ok(self.log(g)?.norm())
    }

    fn conjugate(&self, g: &Self::Point, h: &Self::Point) -> Self::Point {
        self.multiply(&self.multiply(g, h), &self.inverse(g))
    }

    /// Checks that two points share the matrix dimension of this group.
    fn check_same(&self, a: &Self::Point, b: &Self::Point) -> Result<()> {
        let (da, db) = (self.to_matrix(a).nrows(), self.to_matrix(b).nrows());
        let n = self.spec().matrix_dim;
        if da != n {
            return Err(Error::DimensionMismatch { expected: n, found: da });
        }
        if db != n {
            return Err(Error::DimensionMismatch { expected: n, found: db });
        }
        Ok(())
    }

    /// Supremum-norm matrix distance, handy for exact comparisons in tests.
    fn matrix_gap(&self, a: &Self::Point, b: &Self::Point) -> f64 {
        let (ma, mb) = (self.to_matrix(a), self.to_matrix(b));
        (ma - mb).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Checks `‖log(exp f₁ · exp f₂) − f₁ − f₂‖`, the second-order remainder of
/// the Baker–Campbell–Hausdorff series.
pub fn bch_remainder<G: LieGroup>(
    group: &G,
    f1: &AlgebraVector,
    f2: &AlgebraVector,
) -> Result<f64> {
    let prod = group.multiply(&group.exp(f1), &group.exp(f2));
    let z = group.log(&prod)?;
    Ok((&(&z - f1) - f2).norm())
}

/// Uniform sample from the scaled algebra ball of radius `cap`.
pub fn random_algebra_ball(dim: usize, cap: f64, rng: &mut dyn RngCore) -> AlgebraVector {
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rng;
    let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    let r: f64 = cap * rng.random::<f64>().powf(1.0 / dim as f64);
    for x in &mut v {
        *x *= r / n;
    }
    AlgebraVector::from_slice(&v)
}
