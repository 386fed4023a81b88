//! Proper groupoids near a fixed point, in a fixed trivialization `M ≅ G × B`.
//!
//! An arrow is stored as `(group part, base point)` in chart coordinates. All
//! built-in charts place the source in the base slot, so `s(g, x) = x`; the
//! target and product are evaluable structure maps. The fixed point is the
//! origin `x₀ = 0` of the base box `[−ρ, ρ]^d`.

mod action;
mod charts;
mod checks;

use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

pub use action::{AdjointAction, ConjugatedAction, FnAction, GroupAction, QuadraticMap, RotationAction, TrivialAction};
pub use charts::{action_groupoid, degenerate_groupoid, mutated_groupoid, twisted_groupoid, Cocycle};
pub use checks::{check_axioms, fiber_t, orbit, saturate, AxiomReport};

use crate::liegroup::LieGroup;

/// Tolerance on `|s(p) − t(q)|` for composable pairs.
pub const COMPOSABLE_TOL: f64 = 1e-9;

/// Point of the base `B ⊂ ℝ^d`, in chart coordinates centered at `x₀ = 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BasePoint(pub SmallVec<[f64; 4]>);

impl BasePoint {
    pub fn origin(dim: usize) -> Self {
        BasePoint(SmallVec::from_elem(0.0, dim))
    }

    pub fn from_slice(c: &[f64]) -> Self {
        BasePoint(SmallVec::from_slice(c))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Exactly the fixed point (every coordinate is `0.0`).
    pub fn is_origin(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn inf_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn dist_inf(&self, other: &BasePoint) -> f64 {
        self.0.iter().zip(&other.0).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scaled(&self, s: f64) -> BasePoint {
        BasePoint(self.0.iter().map(|c| c * s).collect())
    }
}

impl fmt::Display for BasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c:.6e}")?;
        }
        write!(f, ")")
    }
}

/// A point `p ∈ M` in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrow<P> {
    pub group: P,
    pub base: BasePoint,
}

impl<P> Arrow<P> {
    pub fn new(group: P, base: BasePoint) -> Self {
        Arrow { group, base }
    }
}

/// Structure maps of a groupoid chart.
pub trait ChartMaps<G: LieGroup>: Send + Sync {
    fn source(&self, p: &Arrow<G::Point>) -> BasePoint;
    fn target(&self, p: &Arrow<G::Point>) -> BasePoint;
    /// `p·q`, defined when `s(p) = t(q)`.
    fn product(&self, p: &Arrow<G::Point>, q: &Arrow<G::Point>) -> Arrow<G::Point>;
    fn invert(&self, p: &Arrow<G::Point>) -> Arrow<G::Point>;
    fn unit(&self, x: &BasePoint) -> Arrow<G::Point>;
    /// The arrow of `t⁻¹(y)` with fiber coordinate `h`.
    fn fiber_t(&self, y: &BasePoint, h: &G::Point) -> Arrow<G::Point>;
    /// Inverse of [`ChartMaps::fiber_t`] on the target fiber of `p`.
    fn fiber_t_coordinate(&self, p: &Arrow<G::Point>) -> G::Point;
    /// The arrow of `s⁻¹(x)` with fiber coordinate `g`.
    fn fiber_s(&self, x: &BasePoint, g: &G::Point) -> Arrow<G::Point>;
    /// A homomorphism `M → G` restricting to the identity on `s⁻¹(x₀)`, when
    /// one is known in closed form.
    fn known_homomorphism(&self, p: &Arrow<G::Point>) -> Option<G::Point>;
    fn describe(&self) -> String;
}

/// A proper groupoid near `x₀ = 0` with evaluable structure maps.
pub struct GroupoidChart<G: LieGroup> {
    group: Arc<G>,
    base_dim: usize,
    radius: f64,
    safety_radius: f64,
    maps: Arc<dyn ChartMaps<G>>,
}

impl<G: LieGroup> Clone for GroupoidChart<G> {
    fn clone(&self) -> Self {
        GroupoidChart {
            group: self.group.clone(),
            base_dim: self.base_dim,
            radius: self.radius,
            safety_radius: self.safety_radius,
            maps: self.maps.clone(),
        }
    }
}

impl<G: LieGroup> fmt::Debug for GroupoidChart<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupoidChart")
            .field("group", &self.group.spec().family)
            .field("base_dim", &self.base_dim)
            .field("radius", &self.radius)
            .field("maps", &self.maps.describe())
            .finish()
    }
}

impl<G: LieGroup> GroupoidChart<G> {
    /// Wraps user-supplied structure maps. Properness is not checked; the
    /// caller declares a safety box radius.
    pub fn from_maps(
        group: Arc<G>,
        base_dim: usize,
        radius: f64,
        safety_radius: f64,
        maps: Arc<dyn ChartMaps<G>>,
    ) -> Self {
        GroupoidChart {
            group,
            base_dim,
            radius,
            safety_radius,
            maps,
        }
    }

    pub fn group(&self) -> &G {
        &self.group
    }

    pub fn group_arc(&self) -> &Arc<G> {
        &self.group
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn safety_radius(&self) -> f64 {
        self.safety_radius
    }

    pub fn maps(&self) -> &Arc<dyn ChartMaps<G>> {
        &self.maps
    }

    pub fn origin(&self) -> BasePoint {
        BasePoint::origin(self.base_dim)
    }

    pub fn source(&self, p: &Arrow<G::Point>) -> BasePoint {
        self.maps.source(p)
    }

    pub fn target(&self, p: &Arrow<G::Point>) -> BasePoint {
        self.maps.target(p)
    }

    pub fn product(&self, p: &Arrow<G::Point>, q: &Arrow<G::Point>) -> Arrow<G::Point> {
        self.maps.product(p, q)
    }

    pub fn invert(&self, p: &Arrow<G::Point>) -> Arrow<G::Point> {
        self.maps.invert(p)
    }

    pub fn unit(&self, x: &BasePoint) -> Arrow<G::Point> {
        self.maps.unit(x)
    }

    pub fn fiber_t_arrow(&self, y: &BasePoint, h: &G::Point) -> Arrow<G::Point> {
        self.maps.fiber_t(y, h)
    }

    pub fn fiber_s_arrow(&self, x: &BasePoint, g: &G::Point) -> Arrow<G::Point> {
        self.maps.fiber_s(x, g)
    }

    /// The chart projection `p ↦ group part`.
    pub fn projection(&self, p: &Arrow<G::Point>) -> G::Point {
        p.group.clone()
    }

    pub fn known_homomorphism(&self, p: &Arrow<G::Point>) -> Option<G::Point> {
        self.maps.known_homomorphism(p)
    }

    /// Group-part matrix gap plus base sup-distance.
    pub fn arrow_gap(&self, p: &Arrow<G::Point>, q: &Arrow<G::Point>) -> f64 {
        self.group.matrix_gap(&p.group, &q.group) + p.base.dist_inf(&q.base)
    }

    /// `|s(p) − t(q)|∞`.
    pub fn composability_gap(&self, p: &Arrow<G::Point>, q: &Arrow<G::Point>) -> f64 {
        self.source(p).dist_inf(&self.target(q))
    }
}

/// Composable pair `(p, q)` with `s(p) = t(q)`.
#[derive(Debug, Clone)]
pub struct ComposablePair<P> {
    pub p: Arrow<P>,
    pub q: Arrow<P>,
}

/// Composable triple `(p, q, r)`.
#[derive(Debug, Clone)]
pub struct ComposableTriple<P> {
    pub p: Arrow<P>,
    pub q: Arrow<P>,
    pub r: Arrow<P>,
}
