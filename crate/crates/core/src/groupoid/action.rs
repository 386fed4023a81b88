use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::BasePoint;
use crate::error::{Error, Result};
use crate::liegroup::{AlgebraVector, LieGroup};

/// A smooth map `G × B → B`. Implementations used as groupoid structure must
/// be actions fixing the origin; the trait itself does not enforce it so that
/// perturbed, non-action maps can be fed to the linearization checks.
pub trait GroupAction<G: LieGroup>: Send + Sync {
    fn base_dim(&self) -> usize;
    fn act(&self, g: &G::Point, x: &BasePoint) -> BasePoint;
    fn describe(&self) -> String;
}

/// `g·x = x`.
#[derive(Debug, Clone)]
pub struct TrivialAction {
    pub dim: usize,
}

impl<G: LieGroup> GroupAction<G> for TrivialAction {
    fn base_dim(&self) -> usize {
        self.dim
    }

    fn act(&self, _g: &G::Point, x: &BasePoint) -> BasePoint {
        x.clone()
    }

    fn describe(&self) -> String {
        format!("trivial action on R^{}", self.dim)
    }
}

/// Rotation of coordinate planes `(x₂ₖ, x₂ₖ₊₁)` by `wₖ·θ` for a one-dimensional
/// group with angle `θ`. An odd trailing coordinate is fixed.
pub struct RotationAction<G: LieGroup> {
    group: Arc<G>,
    dim: usize,
    weights: Vec<i32>,
}

impl<G: LieGroup> RotationAction<G> {
    pub fn new(group: Arc<G>, dim: usize, weights: Vec<i32>) -> Result<Self> {
        if weights.len() != dim / 2 {
            return Err(Error::DimensionMismatch {
                expected: dim / 2,
                found: weights.len(),
            });
        }
        if group.circle_angle(&group.identity()).is_none() {
            return Err(Error::Unsupported(format!(
                "rotation action needs a one-dimensional group, got {}",
                group.spec().family
            )));
        }
        Ok(RotationAction { group, dim, weights })
    }

    /// Weight one on every plane.
    pub fn standard(group: Arc<G>, dim: usize) -> Result<Self> {
        Self::new(group, dim, vec![1; dim / 2])
    }

    pub fn weights(&self) -> &[i32] {
        &self.weights
    }
}

impl<G: LieGroup> GroupAction<G> for RotationAction<G> {
    fn base_dim(&self) -> usize {
        self.dim
    }

    fn act(&self, g: &G::Point, x: &BasePoint) -> BasePoint {
        let theta = self.group.circle_angle(g).unwrap_or(0.0);
        let mut out = x.clone();
        for (k, &w) in self.weights.iter().enumerate() {
            let (s, c) = (w as f64 * theta).sin_cos();
            let (a, b) = (x.0[2 * k], x.0[2 * k + 1]);
            out.0[2 * k] = c * a - s * b;
            out.0[2 * k + 1] = s * a + c * b;
        }
        out
    }

    fn describe(&self) -> String {
        format!("rotation action on R^{} with weights {:?}", self.dim, self.weights)
    }
}

/// `g·x = Ad_g x` on the Lie algebra, in scaled coordinates.
pub struct AdjointAction<G: LieGroup> {
    group: Arc<G>,
}

impl<G: LieGroup> AdjointAction<G> {
    pub fn new(group: Arc<G>) -> Self {
        AdjointAction { group }
    }
}

impl<G: LieGroup> GroupAction<G> for AdjointAction<G> {
    fn base_dim(&self) -> usize {
        self.group.algebra_dim()
    }

    fn act(&self, g: &G::Point, x: &BasePoint) -> BasePoint {
        let v = self.group.adjoint(g, &AlgebraVector::from_slice(x.coords()));
        BasePoint::from_slice(v.coords())
    }

    fn describe(&self) -> String {
        format!("adjoint action of {}", self.group.spec().family)
    }
}

/// `Φ(x) = x + Σᵢ eᵢ · xᵀQᵢx`, a diffeomorphism near the origin with `Φ(0) = 0`
/// and `DΦ(0) = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticMap {
    forms: Vec<DMatrix<f64>>,
}

impl QuadraticMap {
    pub fn new(forms: Vec<DMatrix<f64>>) -> Result<Self> {
        let d = forms.len();
        for q in &forms {
            if q.nrows() != d || q.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: q.nrows(),
                });
            }
        }
        let forms = forms.into_iter().map(|q| (&q + q.transpose()) * 0.5).collect();
        Ok(QuadraticMap { forms })
    }

    pub fn dim(&self) -> usize {
        self.forms.len()
    }

    /// `max ‖Qᵢ‖` in the Frobenius norm (an upper bound for the operator norm).
    pub fn strength(&self) -> f64 {
        self.forms.iter().map(|q| q.norm()).fold(0.0, f64::max)
    }

    fn quad(&self, x: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_column_slice(x);
        self.forms.iter().map(|q| v.dot(&(q * &v))).collect()
    }

    pub fn apply(&self, x: &BasePoint) -> BasePoint {
        let q = self.quad(x.coords());
        BasePoint(x.0.iter().zip(&q).map(|(a, b)| a + b).collect())
    }

    /// Solves `Φ(x) = y` by Newton's method started at `y`.
    pub fn invert(&self, y: &BasePoint) -> BasePoint {
        let d = self.dim();
        let mut x = nalgebra::DVector::from_column_slice(y.coords());
        let target = x.clone();
        for _ in 0..50 {
            let q = nalgebra::DVector::from_vec(self.quad(x.as_slice()));
            let r = &x + q - &target;
            if r.amax() < 1e-16 {
                break;
            }
            let mut jac = DMatrix::<f64>::identity(d, d);
            for (i, qi) in self.forms.iter().enumerate() {
                let row = (qi * &x) * 2.0;
                for j in 0..d {
                    jac[(i, j)] += row[j];
                }
            }
            match jac.lu().solve(&r) {
                Some(step) => x -= step,
                None => break,
            }
        }
        BasePoint::from_slice(x.as_slice())
    }
}

/// `a(g, x) = Φ⁻¹(inner(g, Φ(x)))`, a nonlinear action conjugate to `inner`.
pub struct ConjugatedAction<G: LieGroup> {
    inner: Arc<dyn GroupAction<G>>,
    diffeo: QuadraticMap,
}

impl<G: LieGroup> ConjugatedAction<G> {
    pub fn new(inner: Arc<dyn GroupAction<G>>, diffeo: QuadraticMap) -> Result<Self> {
        if inner.base_dim() != diffeo.dim() {
            return Err(Error::DimensionMismatch {
                expected: inner.base_dim(),
                found: diffeo.dim(),
            });
        }
        Ok(ConjugatedAction { inner, diffeo })
    }

    pub fn diffeo(&self) -> &QuadraticMap {
        &self.diffeo
    }
}

impl<G: LieGroup> GroupAction<G> for ConjugatedAction<G> {
    fn base_dim(&self) -> usize {
        self.inner.base_dim()
    }

    fn act(&self, g: &G::Point, x: &BasePoint) -> BasePoint {
        self.diffeo.invert(&self.inner.act(g, &self.diffeo.apply(x)))
    }

    fn describe(&self) -> String {
        format!("{} conjugated by a quadratic diffeomorphism", self.inner.describe())
    }
}

type ActionFn<G> = dyn Fn(&<G as LieGroup>::Point, &BasePoint) -> BasePoint + Send + Sync;

/// An arbitrary map `G × B → B` given as a closure.
pub struct FnAction<G: LieGroup> {
    dim: usize,
    label: String,
    f: Arc<ActionFn<G>>,
}

impl<G: LieGroup> FnAction<G> {
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        f: impl Fn(&G::Point, &BasePoint) -> BasePoint + Send + Sync + 'static,
    ) -> Self {
        FnAction {
            dim,
            label: label.into(),
            f: Arc::new(f),
        }
    }
}

impl<G: LieGroup> GroupAction<G> for FnAction<G> {
    fn base_dim(&self) -> usize {
        self.dim
    }

    fn act(&self, g: &G::Point, x: &BasePoint) -> BasePoint {
        (self.f)(g, x)
    }

    fn describe(&self) -> String {
        self.label.clone()
    }
}

impl<G: LieGroup> fmt::Debug for FnAction<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnAction({}, dim {})", self.label, self.dim)
    }
}
