//! From a homomorphism `φ` to a linear action: invert `(φ, s)`, read off the
//! induced action `g·x = t(θ(g, x))`, and conjugate it to its linear part by
//! Bochner averaging.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::averaging::CandidateMap;
use crate::error::{Error, Result};
use crate::groupoid::{Arrow, BasePoint, GroupAction};
use crate::liegroup::{AlgebraVector, GroupQuadrature, LieGroup};

pub const NEWTON_STEP: f64 = 1e-6;
pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 50;
/// Central-difference step for `D_x a(g, 0)`, relative to the base radius.
pub const DERIVATIVE_STEP: f64 = 1e-5;
pub const MAX_CONDITION: f64 = 1e3;

/// The arrow `p` with `s(p) = x` and `φ(p) = g`, by Newton iteration on the
/// group coordinate of the `s`-fiber starting from `g`.
pub fn invert_trivialization<G: LieGroup>(
    phi: &CandidateMap<G>,
    g: &G::Point,
    x: &BasePoint,
) -> Result<Arrow<G::Point>> {
    let chart = phi.chart();
    let group = chart.group();
    let n = group.algebra_dim();
    let g_inv = group.inverse(g);
    let residual = |k: &G::Point| -> Result<AlgebraVector> {
        group.log(&group.multiply(&g_inv, &phi.eval(&chart.fiber_s_arrow(x, k))?))
    };
    let fail = |iterations, residual| Error::NewtonFailed { iterations, residual };
    let mut k = g.clone();
    let mut r = residual(&k).map_err(|_| fail(0, f64::INFINITY))?;
    let mut best = (k.clone(), r.norm());
    for it in 1..=NEWTON_MAX_ITER {
        if best.1 <= 1e-15 {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let e = AlgebraVector::basis(n, j);
            let plus = residual(&group.multiply(&k, &group.exp(&e.scale(NEWTON_STEP))));
            let minus = residual(&group.multiply(&k, &group.exp(&e.scale(-NEWTON_STEP))));
            let (plus, minus) = match (plus, minus) {
                (Ok(a), Ok(b)) => (a, b),
                _ => return Err(fail(it, best.1)),
            };
            for i in 0..n {
                jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * NEWTON_STEP);
            }
        }
        let rhs = DVector::from_iterator(n, r.coords().iter().map(|v| -v));
        let delta = jac.lu().solve(&rhs).ok_or_else(|| fail(it, best.1))?;
        k = group.multiply(&k, &group.exp(&AlgebraVector::from_slice(delta.as_slice())));
        r = residual(&k).map_err(|_| fail(it, best.1))?;
        let norm = r.norm();
        if norm < best.1 {
            let stalled = norm > 0.5 * best.1;
            best = (k.clone(), norm);
            if stalled && norm <= NEWTON_TOL {
                break;
            }
        } else if best.1 <= NEWTON_TOL {
            break;
        }
    }
    if best.1 > NEWTON_TOL {
        return Err(fail(NEWTON_MAX_ITER, best.1));
    }
    Ok(chart.fiber_s_arrow(x, &best.0))
}

type EvalFn<P> = dyn Fn(&P, &BasePoint) -> Result<BasePoint> + Send + Sync;

/// An evaluable map `a: G × B → B`, either induced by a homomorphism or given
/// directly.
pub struct InducedAction<G: LieGroup> {
    group: Arc<G>,
    dim: usize,
    radius: f64,
    label: String,
    f: Arc<EvalFn<G::Point>>,
}

impl<G: LieGroup> Clone for InducedAction<G> {
    fn clone(&self) -> Self {
        InducedAction {
            group: self.group.clone(),
            dim: self.dim,
            radius: self.radius,
            label: self.label.clone(),
            f: self.f.clone(),
        }
    }
}

impl<G: LieGroup> fmt::Debug for InducedAction<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "InducedAction({})", self.label)
    }
}

/// `a(g, x) = t(θ(g, x))` with `θ` the inverse of `(φ, s)`.
pub fn induced_action<G: LieGroup>(phi: &CandidateMap<G>) -> InducedAction<G> {
    let chart = phi.chart().clone();
    let phi = phi.clone();
    InducedAction {
        group: chart.group_arc().clone(),
        dim: chart.base_dim(),
        radius: chart.radius(),
        label: format!("induced by {}", phi.label()),
        f: Arc::new(move |g, x| Ok(chart.target(&invert_trivialization(&phi, g, x)?))),
    }
}

impl<G: LieGroup> InducedAction<G> {
    pub fn from_action(group: Arc<G>, action: Arc<dyn GroupAction<G>>, radius: f64) -> Self {
        InducedAction {
            group,
            dim: action.base_dim(),
            radius,
            label: action.describe(),
            f: Arc::new(move |g, x| Ok(action.act(g, x))),
        }
    }

    pub fn from_fn(
        group: Arc<G>,
        dim: usize,
        radius: f64,
        label: impl Into<String>,
        f: impl Fn(&G::Point, &BasePoint) -> Result<BasePoint> + Send + Sync + 'static,
    ) -> Self {
        InducedAction {
            group,
            dim,
            radius,
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn group(&self) -> &G {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn act(&self, g: &G::Point, x: &BasePoint) -> Result<BasePoint> {
        (self.f)(g, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionReport {
    pub samples: usize,
    /// `sup |a(g, a(h, x)) − a(g·h, x)|∞`.
    pub composition: f64,
    /// `sup |a(1, x) − x|∞`.
    pub unit: f64,
    /// `sup |a(g, x₀)|∞`.
    pub fixed_point: f64,
}

impl ActionReport {
    pub fn max_residual(&self) -> f64 {
        self.composition.max(self.unit).max(self.fixed_point)
    }
}

fn random_point(dim: usize, radius: f64, rng: &mut ChaCha8Rng) -> BasePoint {
    use rand::Rng;
    BasePoint((0..dim).map(|_| rng.random_range(-radius..=radius)).collect())
}

fn random_direction(dim: usize, r: f64, rng: &mut ChaCha8Rng) -> BasePoint {
    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let n = v.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-300);
    BasePoint(v.iter().map(|c| c * r / n).collect())
}

fn sup_par<T: Sync>(items: &[T], f: impl Fn(&T) -> Result<f64> + Sync + Send) -> Result<f64> {
    Ok(items
        .par_iter()
        .map(f)
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Residuals of the action axioms on `samples` seeded draws of `(g, h, x)`.
pub fn check_action_axioms<G: LieGroup>(a: &InducedAction<G>, samples: usize, seed: u64) -> Result<ActionReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let group = a.group();
    let draws: Vec<_> = (0..samples)
        .map(|_| (group.random(&mut rng), group.random(&mut rng), random_point(a.dim, a.radius, &mut rng)))
        .collect();
    let origin = BasePoint::origin(a.dim);
    let composition = sup_par(&draws, |(g, h, x)| {
        Ok(a.act(g, &a.act(h, x)?)?.dist_inf(&a.act(&group.multiply(g, h), x)?))
    })?;
    let unit = sup_par(&draws, |(_, _, x)| Ok(a.act(&group.identity(), x)?.dist_inf(x)))?;
    let fixed_point = sup_par(&draws, |(g, _, _)| Ok(a.act(g, &origin)?.inf_norm()))?;
    Ok(ActionReport {
        samples,
        composition,
        unit,
        fixed_point,
    })
}

/// `R(g) = D_x a(g, x)|₀` at quadrature nodes, and the Bochner chart
/// `h(x) = Σ w R(g)⁻¹ a(g, x)`. The action axioms are not checked here; run
/// [`check_action_axioms`] first when the input is meant to be an action.
pub struct LinearModel<G: LieGroup> {
    action: InducedAction<G>,
    step: f64,
    nodes: Vec<G::Point>,
    weights: Vec<f64>,
    reps: Vec<DMatrix<f64>>,
    reps_inv: Vec<DMatrix<f64>>,
    max_condition: f64,
}

fn condition(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let s = m.clone().singular_values();
    let (max, min) = s.iter().fold((0.0f64, f64::INFINITY), |(a, b), &v| (a.max(v), b.min(v)));
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

fn to_vector(x: &BasePoint) -> DVector<f64> {
    DVector::from_column_slice(x.coords())
}

fn derivative_at_origin<G: LieGroup>(a: &InducedAction<G>, g: &G::Point, step: f64) -> Result<DMatrix<f64>> {
    let d = a.dim;
    let mut m = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut e = vec![0.0; d];
        e[j] = step;
        let plus = a.act(g, &BasePoint::from_slice(&e))?;
        e[j] = -step;
        let minus = a.act(g, &BasePoint::from_slice(&e))?;
        for i in 0..d {
            m[(i, j)] = (plus.coords()[i] - minus.coords()[i]) / (2.0 * step);
        }
    }
    Ok(m)
}

pub fn bochner_linearize<G: LieGroup>(
    a: &InducedAction<G>,
    quadrature: &GroupQuadrature<G::Point>,
) -> Result<LinearModel<G>> {
    let step = DERIVATIVE_STEP * a.radius;
    let reps = quadrature
        .nodes
        .par_iter()
        .map(|g| derivative_at_origin(a, g, step))
        .collect::<Result<Vec<_>>>()?;
    let max_condition = reps.iter().map(condition).fold(1.0, f64::max);
    if max_condition > MAX_CONDITION {
        return Err(Error::IllConditioned {
            condition: max_condition,
        });
    }
    let reps_inv = reps
        .iter()
        .map(|m| {
            m.clone()
                .try_inverse()
                .ok_or(Error::IllConditioned { condition: f64::INFINITY })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LinearModel {
        action: a.clone(),
        step,
        nodes: quadrature.nodes.clone(),
        weights: quadrature.weights.clone(),
        reps,
        reps_inv,
        max_condition,
    })
}

impl<G: LieGroup> LinearModel<G> {
    pub fn action(&self) -> &InducedAction<G> {
        &self.action
    }

    /// Representation matrices at the quadrature nodes.
    pub fn node_representations(&self) -> impl Iterator<Item = (&G::Point, &DMatrix<f64>)> {
        self.nodes.iter().zip(&self.reps)
    }

    pub fn max_condition(&self) -> f64 {
        self.max_condition
    }

    /// `R(g)` by the same finite differences used at the nodes.
    pub fn representation(&self, g: &G::Point) -> Result<DMatrix<f64>> {
        derivative_at_origin(&self.action, g, self.step)
    }

    /// The Bochner chart `h(x)`.
    pub fn chart_map(&self, x: &BasePoint) -> Result<BasePoint> {
        let mut acc = DVector::zeros(self.action.dim);
        for ((g, w), r_inv) in self.nodes.iter().zip(&self.weights).zip(&self.reps_inv) {
            acc += (r_inv * to_vector(&self.action.act(g, x)?)) * *w;
        }
        Ok(BasePoint::from_slice(acc.as_slice()))
    }
}

/// `sup ‖R(g)R(h) − R(g·h)‖` (Frobenius) over seeded `(g, h)`.
pub fn representation_check<G: LieGroup>(model: &LinearModel<G>, samples: usize, seed: u64) -> Result<f64> {
    let group = model.action.group();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<_> = (0..samples).map(|_| (group.random(&mut rng), group.random(&mut rng))).collect();
    sup_par(&draws, |(g, h)| {
        let lhs = model.representation(g)? * model.representation(h)?;
        Ok((lhs - model.representation(&group.multiply(g, h))?).norm())
    })
}

fn radius_draws<G: LieGroup>(model: &LinearModel<G>, samples: usize, seed: u64) -> Vec<(G::Point, BasePoint)> {
    let group = model.action.group();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| (group.random(&mut rng), random_direction(model.action.dim, 1.0, &mut rng)))
        .collect()
}

/// `sup |h(a(g, x)) − R(g) h(x)|` over seeded `g` and `x` on the sphere of
/// Euclidean radius `r`.
pub fn conjugacy_residual<G: LieGroup>(model: &LinearModel<G>, r: f64, samples: usize, seed: u64) -> Result<f64> {
    let draws = radius_draws(model, samples, seed);
    sup_par(&draws, |(g, u)| {
        let x = u.scaled(r);
        let lhs = to_vector(&model.chart_map(&model.action.act(g, &x)?)?);
        let rhs = model.representation(g)? * to_vector(&model.chart_map(&x)?);
        Ok((lhs - rhs).amax())
    })
}

/// `sup |a(g, x) − R(g) x|` on the sphere of radius `r`.
pub fn nonlinearity_residual<G: LieGroup>(model: &LinearModel<G>, r: f64, samples: usize, seed: u64) -> Result<f64> {
    let draws = radius_draws(model, samples, seed);
    sup_par(&draws, |(g, u)| {
        let x = u.scaled(r);
        let lin = model.representation(g)? * to_vector(&x);
        Ok((to_vector(&model.action.act(g, &x)?) - lin).amax())
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalvingReport {
    pub radius: f64,
    pub residual: f64,
    pub half_residual: f64,
    /// `residual / half_residual`; 4 for a residual of order `|x|²`.
    pub ratio: f64,
}

/// Conjugacy residual at `r` and `r/2` on the same directions and group draws.
pub fn halving_test<G: LieGroup>(model: &LinearModel<G>, r: f64, samples: usize, seed: u64) -> Result<HalvingReport> {
    let residual = conjugacy_residual(model, r, samples, seed)?;
    let half_residual = conjugacy_residual(model, r / 2.0, samples, seed)?;
    Ok(HalvingReport {
        radius: r,
        residual,
        half_residual,
        ratio: residual / half_residual,
    })
}

/// [`nonlinearity_residual`] at `r` and `r/2`: the deviation of the action
/// from its linear part before the Bochner chart is applied.
pub fn nonlinearity_halving<G: LieGroup>(
    model: &LinearModel<G>,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<HalvingReport> {
    let residual = nonlinearity_residual(model, r, samples, seed)?;
    let half_residual = nonlinearity_residual(model, r / 2.0, samples, seed)?;
    Ok(HalvingReport {
        radius: r,
        residual,
        half_residual,
        ratio: residual / half_residual,
    })
}
