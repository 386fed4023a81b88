use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::action::{GroupAction, TrivialAction};
use super::{Arrow, BasePoint, ChartMaps, GroupoidChart};
use crate::error::{Error, Result};
use crate::liegroup::{AlgebraVector, LieGroup};

/// Built-in charts must keep targets of box points inside `[−κρ, κρ]^d`.
pub const SAFETY_FACTOR: f64 = 2.0;

const FIXED_POINT_TOL: f64 = 1e-12;

struct ActionMaps<G: LieGroup> {
    group: Arc<G>,
    action: Arc<dyn GroupAction<G>>,
}

impl<G: LieGroup> ChartMaps<G> for ActionMaps<G> {
    fn source(&self, p: &Arrow<G::Point>) -> BasePoint {
        p.base.clone()
    }

    fn target(&self, p: &Arrow<G::Point>) -> BasePoint {
        self.action.act(&p.group, &p.base)
    }

    fn product(&self, p: &Arrow<G::Point>, q: &Arrow<G::Point>) -> Arrow<G::Point> {
        Arrow::new(self.group.multiply(&p.group, &q.group), q.base.clone())
    }

    fn invert(&self, p: &Arrow<G::Point>) -> Arrow<G::Point> {
        Arrow::new(self.group.inverse(&p.group), self.target(p))
    }

    fn unit(&self, x: &BasePoint) -> Arrow<G::Point> {
        Arrow::new(self.group.identity(), x.clone())
    }

    fn fiber_t(&self, y: &BasePoint, h: &G::Point) -> Arrow<G::Point> {
        Arrow::new(h.clone(), self.action.act(&self.group.inverse(h), y))
    }

    fn fiber_t_coordinate(&self, p: &Arrow<G::Point>) -> G::Point {
        p.group.clone()
    }

    fn fiber_s(&self, x: &BasePoint, g: &G::Point) -> Arrow<G::Point> {
        Arrow::new(g.clone(), x.clone())
    }

    fn known_homomorphism(&self, p: &Arrow<G::Point>) -> Option<G::Point> {
        Some(p.group.clone())
    }

    fn describe(&self) -> String {
        format!("action groupoid of {}", self.action.describe())
    }
}

fn box_samples(dim: usize, radius: f64, rng: &mut ChaCha8Rng) -> Vec<BasePoint> {
    let mut out = Vec::new();
    if dim <= 6 {
        for mask in 0..(1usize << dim) {
            let c: Vec<f64> = (0..dim)
                .map(|i| if mask >> i & 1 == 1 { radius } else { -radius })
                .collect();
            out.push(BasePoint::from_slice(&c));
        }
    }
    for _ in 0..64 {
        let c: Vec<f64> = (0..dim).map(|_| rng.random_range(-radius..=radius)).collect();
        out.push(BasePoint::from_slice(&c));
    }
    out
}

/// Action groupoid `G × B ⇉ B` of an action fixing the origin.
///
/// The action is probed on box corners and random box points against the
/// enlarged safety box `[−κρ, κρ]^d`, κ = [`SAFETY_FACTOR`].
pub fn action_groupoid<G: LieGroup>(
    group: Arc<G>,
    action: Arc<dyn GroupAction<G>>,
    radius: f64,
) -> Result<GroupoidChart<G>> {
    let dim = action.base_dim();
    if !radius.is_finite() || radius < 0.0 || (dim > 0 && radius == 0.0) {
        return Err(Error::InvalidArgument(format!("base radius must be positive, got {radius}")));
    }
    let safety = SAFETY_FACTOR * radius;
    let mut rng = ChaCha8Rng::seed_from_u64(0xac710);
    let mut elements = vec![group.identity()];
    elements.extend((0..64).map(|_| group.random(&mut rng)));
    let origin = BasePoint::origin(dim);
    let points = box_samples(dim, radius, &mut rng);
    for g in &elements {
        let moved = action.act(g, &origin).inf_norm();
        if moved > FIXED_POINT_TOL {
            return Err(Error::InvalidArgument(format!(
                "action moves the fixed point by {moved:.3e}"
            )));
        }
        for x in &points {
            let norm = action.act(g, x).inf_norm();
            if !(norm <= safety) {
                return Err(Error::OutsideSafetyBox { norm, limit: safety });
            }
        }
    }
    let maps = Arc::new(ActionMaps {
        group: group.clone(),
        action,
    });
    Ok(GroupoidChart::from_maps(group, dim, radius, safety, maps))
}

/// The chart with `d = 0`: `B = {x₀}`, `M = G`.
pub fn degenerate_groupoid<G: LieGroup>(group: Arc<G>) -> GroupoidChart<G> {
    action_groupoid(group, Arc::new(TrivialAction { dim: 0 }), 0.0).expect("trivial action on a point")
}

/// `c(x) = exp(Σᵢ xᵢAᵢ + Σ xᵢxⱼAᵢⱼ)` with algebra coefficients in scaled
/// coordinates; `c(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cocycle {
    base_dim: usize,
    algebra_dim: usize,
    linear: Vec<AlgebraVector>,
    quadratic: Vec<(usize, usize, AlgebraVector)>,
}

impl Cocycle {
    pub fn new(
        base_dim: usize,
        algebra_dim: usize,
        linear: Vec<AlgebraVector>,
        quadratic: Vec<(usize, usize, AlgebraVector)>,
    ) -> Result<Self> {
        if linear.len() != base_dim {
            return Err(Error::DimensionMismatch {
                expected: base_dim,
                found: linear.len(),
            });
        }
        for v in linear.iter().chain(quadratic.iter().map(|(_, _, v)| v)) {
            if v.dim() != algebra_dim {
                return Err(Error::DimensionMismatch {
                    expected: algebra_dim,
                    found: v.dim(),
                });
            }
        }
        if let Some((i, j, _)) = quadratic.iter().find(|(i, j, _)| *i >= base_dim || *j >= base_dim) {
            return Err(Error::InvalidArgument(format!(
                "quadratic cocycle term ({i}, {j}) out of range for base dimension {base_dim}"
            )));
        }
        Ok(Cocycle {
            base_dim,
            algebra_dim,
            linear,
            quadratic,
        })
    }

    pub fn trivial(base_dim: usize, algebra_dim: usize) -> Self {
        Cocycle {
            base_dim,
            algebra_dim,
            linear: vec![AlgebraVector::zeros(algebra_dim); base_dim],
            quadratic: Vec::new(),
        }
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn exponent(&self, x: &BasePoint) -> AlgebraVector {
        let mut e = AlgebraVector::zeros(self.algebra_dim);
        for (xi, a) in x.coords().iter().zip(&self.linear) {
            e.axpy(*xi, a);
        }
        for (i, j, a) in &self.quadratic {
            e.axpy(x.0[*i] * x.0[*j], a);
        }
        e
    }

    pub fn evaluate<G: LieGroup>(&self, group: &G, x: &BasePoint) -> G::Point {
        group.exp(&self.exponent(x))
    }

    /// `x ↦ c(x)⁻¹`.
    pub fn inverse(&self) -> Cocycle {
        Cocycle {
            base_dim: self.base_dim,
            algebra_dim: self.algebra_dim,
            linear: self.linear.iter().map(|a| -a).collect(),
            quadratic: self.quadratic.iter().map(|(i, j, a)| (*i, *j, -a)).collect(),
        }
    }

    /// Upper bound of `‖exponent‖` over the box `[−r, r]^d`.
    pub fn exponent_bound(&self, radius: f64) -> f64 {
        self.linear.iter().map(|a| radius * a.norm()).sum::<f64>()
            + self.quadratic.iter().map(|(_, _, a)| radius * radius * a.norm()).sum::<f64>()
    }
}

struct TwistedMaps<G: LieGroup> {
    group: Arc<G>,
    base: Arc<dyn ChartMaps<G>>,
    cocycle: Cocycle,
}

impl<G: LieGroup> TwistedMaps<G> {
    fn to_base(&self, p: &Arrow<G::Point>) -> Arrow<G::Point> {
        let c = self.cocycle.evaluate(&*self.group, &p.base);
        Arrow::new(self.group.multiply(&p.group, &c), p.base.clone())
    }

    fn from_base(&self, p: Arrow<G::Point>) -> Arrow<G::Point> {
        let c = self.cocycle.evaluate(&*self.group, &p.base);
        Arrow::new(self.group.multiply(&p.group, &self.group.inverse(&c)), p.base)
    }
}

impl<G: LieGroup> ChartMaps<G> for TwistedMaps<G> {
    fn source(&self, p: &Arrow<G::Point>) -> BasePoint {
        p.base.clone()
    }

    fn target(&self, p: &Arrow<G::Point>) -> BasePoint {
        self.base.target(&self.to_base(p))
    }

    fn product(&self, p: &Arrow<G::Point>, q: &Arrow<G::Point>) -> Arrow<G::Point> {
        self.from_base(self.base.product(&self.to_base(p), &self.to_base(q)))
    }

    fn invert(&self, p: &Arrow<G::Point>) -> Arrow<G::Point> {
        self.from_base(self.base.invert(&self.to_base(p)))
    }

    fn unit(&self, x: &BasePoint) -> Arrow<G::Point> {
        self.from_base(self.base.unit(x))
    }

    fn fiber_t(&self, y: &BasePoint, h: &G::Point) -> Arrow<G::Point> {
        self.from_base(self.base.fiber_t(y, h))
    }

    fn fiber_t_coordinate(&self, p: &Arrow<G::Point>) -> G::Point {
        self.base.fiber_t_coordinate(&self.to_base(p))
    }

    fn fiber_s(&self, x: &BasePoint, g: &G::Point) -> Arrow<G::Point> {
        self.from_base(self.base.fiber_s(x, g))
    }

    fn known_homomorphism(&self, p: &Arrow<G::Point>) -> Option<G::Point> {
        self.base.known_homomorphism(&self.to_base(p))
    }

    fn describe(&self) -> String {
        format!("{} twisted by a cocycle", self.base.describe())
    }
}

/// Re-trivializes `base` through `(g, x) ↦ (g·c(x)⁻¹, x)`.
///
/// The result is isomorphic to `base`, so the axioms hold exactly, but the
/// chart projection is no longer a homomorphism when `c` is not constant.
pub fn twisted_groupoid<G: LieGroup>(base: &GroupoidChart<G>, cocycle: Cocycle) -> Result<GroupoidChart<G>> {
    if cocycle.base_dim() != base.base_dim() {
        return Err(Error::DimensionMismatch {
            expected: base.base_dim(),
            found: cocycle.base_dim(),
        });
    }
    let bound = cocycle.exponent_bound(base.safety_radius());
    if bound >= 1.0 {
        return Err(Error::OutOfChart { distance: bound });
    }
    let maps = Arc::new(TwistedMaps {
        group: base.group_arc().clone(),
        base: base.maps().clone(),
        cocycle,
    });
    Ok(GroupoidChart::from_maps(
        base.group_arc().clone(),
        base.base_dim(),
        base.radius(),
        base.safety_radius(),
        maps,
    ))
}

struct MutatedMaps<G: LieGroup> {
    group: Arc<G>,
    base: Arc<dyn ChartMaps<G>>,
    factor: G::Point,
}

impl<G: LieGroup> ChartMaps<G> for MutatedMaps<G> {
    fn source(&self, p: &Arrow<G::Point>) -> BasePoint {
        self.base.source(p)
    }

    fn target(&self, p: &Arrow<G::Point>) -> BasePoint {
        self.base.target(p)
    }

    fn product(&self, p: &Arrow<G::Point>, q: &Arrow<G::Point>) -> Arrow<G::Point> {
        let mut r = self.base.product(p, q);
        r.group = self.group.multiply(&r.group, &self.factor);
        r
    }

    fn invert(&self, p: &Arrow<G::Point>) -> Arrow<G::Point> {
        self.base.invert(p)
    }

    fn unit(&self, x: &BasePoint) -> Arrow<G::Point> {
        self.base.unit(x)
    }

    fn fiber_t(&self, y: &BasePoint, h: &G::Point) -> Arrow<G::Point> {
        self.base.fiber_t(y, h)
    }

    fn fiber_t_coordinate(&self, p: &Arrow<G::Point>) -> G::Point {
        self.base.fiber_t_coordinate(p)
    }

    fn fiber_s(&self, x: &BasePoint, g: &G::Point) -> Arrow<G::Point> {
        self.base.fiber_s(x, g)
    }

    fn known_homomorphism(&self, _p: &Arrow<G::Point>) -> Option<G::Point> {
        None
    }

    fn describe(&self) -> String {
        format!("{} with a mutated product", self.base.describe())
    }
}

/// Fault-injection fixture: the product picks up a fixed extra factor on the
/// right, which breaks associativity and the unit laws.
pub fn mutated_groupoid<G: LieGroup>(base: &GroupoidChart<G>, factor: G::Point) -> GroupoidChart<G> {
    let maps = Arc::new(MutatedMaps {
        group: base.group_arc().clone(),
        base: base.maps().clone(),
        factor,
    });
    GroupoidChart::from_maps(
        base.group_arc().clone(),
        base.base_dim(),
        base.radius(),
        base.safety_radius(),
        maps,
    )
}
