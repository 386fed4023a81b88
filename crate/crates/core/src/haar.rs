//! Haar systems: translation-invariant probability measures on target fibers
//! `T(y) = t⁻¹(y)`, realized as weighted quadrature nodes.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::groupoid::{fiber_t, Arrow, BasePoint, GroupoidChart};
use crate::liegroup::{AlgebraVector, GroupQuadrature, LieGroup};

/// Smallest group-quadrature resolution accepted by [`lemma_haar_system`].
pub const LEMMA_MIN_RESOLUTION: usize = 4;

/// Finite-difference step for the Jacobian of left translations.
pub const JACOBIAN_STEP: f64 = 1e-5;

type DensityFn<P> = dyn Fn(&Arrow<P>) -> f64 + Send + Sync;

/// Positive density on arrows, relative to Haar measure in the fiber
/// coordinate of the chart.
pub struct FiberDensity<P> {
    label: String,
    f: Arc<DensityFn<P>>,
}

impl<P> Clone for FiberDensity<P> {
    fn clone(&self) -> Self {
        FiberDensity {
            label: self.label.clone(),
            f: self.f.clone(),
        }
    }
}

impl<P> fmt::Debug for FiberDensity<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FiberDensity({})", self.label)
    }
}

impl<P> FiberDensity<P> {
    pub fn new(label: impl Into<String>, f: impl Fn(&Arrow<P>) -> f64 + Send + Sync + 'static) -> Self {
        FiberDensity {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn uniform() -> Self {
        Self::new("uniform", |_| 1.0)
    }

    pub fn eval(&self, p: &Arrow<P>) -> f64 {
        (self.f)(p)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// How the fiber weights of a [`HaarSystem`] were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Push-forward of the group quadrature through the fiber parameterization.
    Direct,
    /// Normalized from arbitrary reference densities.
    Lemma,
    /// Weights multiplied by an arbitrary factor after construction.
    Reweighted,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Direct => "direct",
            Provenance::Lemma => "lemma",
            Provenance::Reweighted => "reweighted",
        })
    }
}

/// Nodes of one target fiber with their weights.
#[derive(Debug, Clone)]
pub struct Fiber<P> {
    pub base: BasePoint,
    pub arrows: Vec<Arrow<P>>,
    pub weights: Vec<f64>,
}

impl<P> Fiber<P> {
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, h: impl Fn(&Arrow<P>) -> f64) -> f64 {
        self.arrows.iter().zip(&self.weights).map(|(r, w)| w * h(r)).sum()
    }
}

enum Kind<G: LieGroup> {
    Direct,
    Lemma {
        mu0: FiberDensity<G::Point>,
        nu0: FiberDensity<G::Point>,
    },
    Reweighted {
        inner: Arc<Kind<G>>,
        factor: FiberDensity<G::Point>,
    },
}

/// A Haar system on the chart, evaluated fiber by fiber on demand.
pub struct HaarSystem<G: LieGroup> {
    chart: GroupoidChart<G>,
    quadrature: Arc<GroupQuadrature<G::Point>>,
    kind: Arc<Kind<G>>,
    tolerance: f64,
}

impl<G: LieGroup> Clone for HaarSystem<G> {
    fn clone(&self) -> Self {
        HaarSystem {
            chart: self.chart.clone(),
            quadrature: self.quadrature.clone(),
            kind: self.kind.clone(),
            tolerance: self.tolerance,
        }
    }
}

impl<G: LieGroup> fmt::Debug for HaarSystem<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HaarSystem")
            .field("provenance", &self.provenance())
            .field("nodes", &self.quadrature.len())
            .field("tolerance", &self.tolerance)
            .finish()
    }
}

/// Haar system whose fiber weights are the group-quadrature weights.
pub fn direct_haar_system<G: LieGroup>(
    chart: &GroupoidChart<G>,
    quadrature: Arc<GroupQuadrature<G::Point>>,
) -> HaarSystem<G> {
    let tolerance = quadrature.tolerance;
    HaarSystem {
        chart: chart.clone(),
        quadrature,
        kind: Arc::new(Kind::Direct),
        tolerance,
    }
}

/// Haar system obtained by normalizing the reference density `μ₀` on target
/// fibers with the help of a reference density `ν₀` on source fibers.
///
/// For a node `r` of `T(y)` the weight is proportional to
/// `f̃(r)·μ₀(r) = Σⱼ wⱼ ν₀(pⱼ) μ₀(pⱼ) J(τ_{pⱼr⁻¹}, r)` over the source fiber
/// nodes `pⱼ` of `s(r)`, then normalized to total mass one.
pub fn lemma_haar_system<G: LieGroup>(
    chart: &GroupoidChart<G>,
    mu0: FiberDensity<G::Point>,
    nu0: FiberDensity<G::Point>,
    quadrature: Arc<GroupQuadrature<G::Point>>,
) -> Result<HaarSystem<G>> {
    if quadrature.resolution < LEMMA_MIN_RESOLUTION {
        return Err(Error::InvalidArgument(format!(
            "lemma construction needs quadrature resolution >= {LEMMA_MIN_RESOLUTION}, got {}",
            quadrature.resolution
        )));
    }
    let tolerance = quadrature.tolerance.max(1e-8);
    Ok(HaarSystem {
        chart: chart.clone(),
        quadrature,
        kind: Arc::new(Kind::Lemma { mu0, nu0 }),
        tolerance,
    })
}

impl<G: LieGroup> HaarSystem<G> {
    pub fn chart(&self) -> &GroupoidChart<G> {
        &self.chart
    }

    pub fn quadrature(&self) -> &GroupQuadrature<G::Point> {
        &self.quadrature
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn provenance(&self) -> Provenance {
        match *self.kind {
            Kind::Direct => Provenance::Direct,
            Kind::Lemma { .. } => Provenance::Lemma,
            Kind::Reweighted { .. } => Provenance::Reweighted,
        }
    }

    /// Multiplies every weight by `factor(r)` without renormalizing.
    pub fn reweighted(&self, factor: FiberDensity<G::Point>) -> HaarSystem<G> {
        HaarSystem {
            chart: self.chart.clone(),
            quadrature: self.quadrature.clone(),
            kind: Arc::new(Kind::Reweighted {
                inner: self.kind.clone(),
                factor,
            }),
            tolerance: self.tolerance,
        }
    }

    /// Nodes and weights of `T(y)`.
    pub fn fiber(&self, y: &BasePoint) -> Result<Fiber<G::Point>> {
        let nodes = fiber_t(&self.chart, y, &self.quadrature)?;
        let (arrows, base_weights): (Vec<_>, Vec<_>) = nodes.into_iter().unzip();
        let weights = self.weights(&self.kind, &arrows, &base_weights)?;
        Ok(Fiber {
            base: y.clone(),
            arrows,
            weights,
        })
    }

    fn weights(&self, kind: &Kind<G>, arrows: &[Arrow<G::Point>], base: &[f64]) -> Result<Vec<f64>> {
        match kind {
            Kind::Direct => Ok(base.to_vec()),
            Kind::Lemma { mu0, nu0 } => {
                let mut raw = Vec::with_capacity(arrows.len());
                for (r, w) in arrows.iter().zip(base) {
                    let value = w * self.lemma_integral(r, mu0, nu0)?;
                    if !(value > 0.0) {
                        return Err(Error::NonPositiveDensity { value });
                    }
                    raw.push(value);
                }
                let total: f64 = raw.iter().sum();
                Ok(raw.into_iter().map(|v| v / total).collect())
            }
            Kind::Reweighted { inner, factor } => {
                let w = self.weights(inner, arrows, base)?;
                Ok(w.iter().zip(arrows).map(|(w, r)| w * factor.eval(r)).collect())
            }
        }
    }

    fn lemma_integral(
        &self,
        r: &Arrow<G::Point>,
        mu0: &FiberDensity<G::Point>,
        nu0: &FiberDensity<G::Point>,
    ) -> Result<f64> {
        let chart = &self.chart;
        let x = chart.source(r);
        let r_inv = chart.invert(r);
        let mut acc = 0.0;
        for (g, w) in self.quadrature.iter() {
            let p = chart.fiber_s_arrow(&x, g);
            let (m, n) = (mu0.eval(&p), nu0.eval(&p));
            if !(m > 0.0) {
                return Err(Error::NonPositiveDensity { value: m });
            }
            if !(n > 0.0) {
                return Err(Error::NonPositiveDensity { value: n });
            }
            let shift = chart.product(&p, &r_inv);
            acc += w * n * m * translation_jacobian(chart, &shift, r)?;
        }
        Ok(acc)
    }
}

/// `|det|` of the differential of `r' ↦ a·r'` from `T(t(r))` to `T(t(a))` at `r`,
/// in left-trivialized fiber coordinates (the Haar density ratio).
pub fn translation_jacobian<G: LieGroup>(
    chart: &GroupoidChart<G>,
    a: &Arrow<G::Point>,
    r: &Arrow<G::Point>,
) -> Result<f64> {
    let group = chart.group();
    let maps = chart.maps();
    let y = chart.target(r);
    let h0 = maps.fiber_t_coordinate(r);
    let image = |h: &G::Point| maps.fiber_t_coordinate(&chart.product(a, &maps.fiber_t(&y, h)));
    let c0_inv = group.inverse(&image(&h0));
    let n = group.algebra_dim();
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let e = AlgebraVector::basis(n, k);
        let plus = group.multiply(&h0, &group.exp(&e.scale(JACOBIAN_STEP)));
        let minus = group.multiply(&h0, &group.exp(&e.scale(-JACOBIAN_STEP)));
        let lp = group.log(&group.multiply(&c0_inv, &image(&plus)))?;
        let lm = group.log(&group.multiply(&c0_inv, &image(&minus)))?;
        for i in 0..n {
            jac[(i, k)] = (lp[i] - lm[i]) / (2.0 * JACOBIAN_STEP);
        }
    }
    let det = jac.determinant().abs();
    if !det.is_finite() || det <= 0.0 {
        return Err(Error::NonPositiveDensity { value: det });
    }
    Ok(det)
}

type TestFn<P> = Box<dyn Fn(&Arrow<P>) -> f64 + Send + Sync>;

/// Constant one, real and imaginary parts of the group-part matrix
/// coefficients, `exp(Re tr g)`, and coefficients times a source coordinate.
pub fn arrow_test_basket<G: LieGroup>(chart: &GroupoidChart<G>) -> Vec<TestFn<G::Point>> {
    let group = chart.group_arc().clone();
    let n = group.spec().matrix_dim;
    let mut out: Vec<TestFn<G::Point>> = vec![Box::new(|_| 1.0)];
    for i in 0..n {
        for j in 0..n {
            let g1 = group.clone();
            out.push(Box::new(move |r| g1.to_matrix(&r.group)[(i, j)].re));
            let g2 = group.clone();
            out.push(Box::new(move |r| g2.to_matrix(&r.group)[(i, j)].im));
        }
    }
    let g3 = group.clone();
    out.push(Box::new(move |r| g3.to_matrix(&r.group).trace().re.exp()));
    if chart.base_dim() > 0 {
        let g4 = group.clone();
        let scale = 1.0 / chart.radius();
        out.push(Box::new(move |r| {
            g4.to_matrix(&r.group)[(0, 0)].re * (1.0 + scale * r.base.coords()[0])
        }));
    }
    out
}

/// `max_h |Σ_{r ∈ T(s(q))} w_r h(q·r) − Σ_{r' ∈ T(t(q))} w_{r'} h(r')|`.
pub fn check_invariance<G: LieGroup>(
    system: &HaarSystem<G>,
    q: &Arrow<G::Point>,
    tests: &[TestFn<G::Point>],
) -> Result<f64> {
    let chart = system.chart();
    let from = system.fiber(&chart.source(q))?;
    let to = system.fiber(&chart.target(q))?;
    let moved: Vec<Arrow<G::Point>> = from.arrows.iter().map(|r| chart.product(q, r)).collect();
    let mut worst = 0.0f64;
    for h in tests {
        let lhs: f64 = moved.iter().zip(&from.weights).map(|(r, w)| w * h(r)).sum();
        let rhs = to.integrate(|r| h(r));
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// `Σ |wᵢ − w'ᵢ|` on the fiber `T(y)`; both systems must share the quadrature.
pub fn total_variation<G: LieGroup>(a: &HaarSystem<G>, b: &HaarSystem<G>, y: &BasePoint) -> Result<f64> {
    let (fa, fb) = (a.fiber(y)?, b.fiber(y)?);
    if fa.weights.len() != fb.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: fa.weights.len(),
            found: fb.weights.len(),
        });
    }
    Ok(fa.weights.iter().zip(&fb.weights).map(|(x, y)| (x - y).abs()).sum())
}
