use std::sync::Arc;

use rayon::prelude::*;

use super::grid::{BaseGrid, FitPlan, GridSpec, SpectralGrid};
use super::{CandidateMap, Repr};
use crate::error::{Error, Result};
use crate::groupoid::Arrow;
use crate::haar::{Fiber, HaarSystem};
use crate::liegroup::{AlgebraVector, LieGroup};

/// How the averaged map is stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    /// Evaluate the averaging formula over the previous map on demand. Exact,
    /// but the cost multiplies by the fiber size with every step.
    Nested,
    /// Fit the averaged map on a grid.
    Grid(GridSpec),
}

fn step_log<G: LieGroup>(group: &G, g: &G::Point, at: impl FnOnce() -> String) -> Result<AlgebraVector> {
    group.log(g).map_err(|e| match e {
        Error::OutOfChart { distance } => Error::StepOutOfChart { distance, at: at() },
        other => other,
    })
}

/// `exp(Σ_q w_q log(φ(p·q) φ(q)⁻¹ φ(p)⁻¹)) · φ(p)` over the fiber `T(s(p))`,
/// with `φ(q)` precomputed.
pub(crate) fn averaged_value<G: LieGroup>(
    phi: &CandidateMap<G>,
    fiber: &Fiber<G::Point>,
    phi_q: &[G::Point],
    p: &Arrow<G::Point>,
) -> Result<G::Point> {
    let chart = phi.chart();
    let group = chart.group();
    let phi_p = phi.eval(p)?;
    let phi_p_inv = group.inverse(&phi_p);
    let mut acc = AlgebraVector::zeros(group.algebra_dim());
    for ((q, w), fq) in fiber.arrows.iter().zip(&fiber.weights).zip(phi_q) {
        let pq = chart.product(p, q);
        let psi = group.multiply(&group.multiply(&phi.eval(&pq)?, &group.inverse(fq)), &phi_p_inv);
        acc.axpy(*w, &step_log(group, &psi, || format!("p = {p:?}, q = {q:?}"))?);
    }
    Ok(group.multiply(&group.exp(&acc), &phi_p))
}

/// One averaging step `φ ↦ φ̂`.
pub fn average_step<G: LieGroup>(
    phi: &CandidateMap<G>,
    haar: &HaarSystem<G>,
    mode: StepMode,
) -> Result<CandidateMap<G>> {
    let chart = phi.chart();
    match mode {
        StepMode::Nested => Ok(CandidateMap::from_repr(
            chart,
            Repr::Averaged {
                inner: phi.clone(),
                haar: haar.clone(),
            },
        )),
        StepMode::Grid(spec) => {
            spec.validate()?;
            let group = chart.group();
            let (plan, base) = match phi.repr() {
                Repr::Grid(g) if g.spec == spec => (g.plan.clone(), g.base.clone()),
                _ => (
                    Arc::new(FitPlan::new(group, spec.degree)?),
                    Arc::new(BaseGrid::new(chart.base_dim(), chart.radius(), spec.base_points)),
                ),
            };
            let values = base
                .nodes()
                .iter()
                .map(|x| {
                    if phi.pinned && x.is_origin() {
                        return Ok(plan.nodes.clone());
                    }
                    let fiber = haar.fiber(x)?;
                    let phi_q = fiber
                        .arrows
                        .par_iter()
                        .map(|q| phi.eval(q))
                        .collect::<Result<Vec<_>>>()?;
                    plan.nodes
                        .par_iter()
                        .map(|g| averaged_value(phi, &fiber, &phi_q, &Arrow::new(g.clone(), x.clone())))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let grid = SpectralGrid::fit(group, spec, plan, base, &values);
            Ok(CandidateMap::from_repr(chart, Repr::Grid(grid)))
        }
    }
}

/// The three forms of the averaged map at one arrow and their mutual distances.
#[derive(Debug, Clone)]
pub struct Variants<P> {
    /// Average over `q ∈ T(s(p))` of `log(φ(p·q) φ(q)⁻¹ φ(p)⁻¹)`, applied on the left.
    pub source_fiber: P,
    /// Average over `r ∈ T(t(p))` of `log(φ(r) φ(p⁻¹·r)⁻¹ φ(p)⁻¹)`, applied on the left.
    pub target_fiber: P,
    /// Average of `log(φ(p)⁻¹ φ(p·q) φ(q)⁻¹)`, applied on the right.
    pub right: P,
    pub gaps: [f64; 3],
}

impl<P> Variants<P> {
    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(0.0, f64::max)
    }
}

pub fn average_step_variants<G: LieGroup>(
    phi: &CandidateMap<G>,
    haar: &HaarSystem<G>,
    p: &Arrow<G::Point>,
) -> Result<Variants<G::Point>> {
    let chart = phi.chart();
    let group = chart.group();
    let at = || format!("p = {p:?}");
    let phi_p = phi.eval(p)?;
    let phi_p_inv = group.inverse(&phi_p);
    let n = group.algebra_dim();

    let source = haar.fiber(&chart.source(p))?;
    let mut a1 = AlgebraVector::zeros(n);
    let mut a3 = AlgebraVector::zeros(n);
    for (q, w) in source.arrows.iter().zip(&source.weights) {
        let m = group.multiply(&phi.eval(&chart.product(p, q))?, &group.inverse(&phi.eval(q)?));
        a1.axpy(*w, &step_log(group, &group.multiply(&m, &phi_p_inv), at)?);
        a3.axpy(*w, &step_log(group, &group.multiply(&phi_p_inv, &m), at)?);
    }

    let target = haar.fiber(&chart.target(p))?;
    let p_inv = chart.invert(p);
    let mut a2 = AlgebraVector::zeros(n);
    for (r, w) in target.arrows.iter().zip(&target.weights) {
        let m = group.multiply(&phi.eval(r)?, &group.inverse(&phi.eval(&chart.product(&p_inv, r))?));
        a2.axpy(*w, &step_log(group, &group.multiply(&m, &phi_p_inv), at)?);
    }

    let v1 = group.multiply(&group.exp(&a1), &phi_p);
    let v2 = group.multiply(&group.exp(&a2), &phi_p);
    let v3 = group.multiply(&phi_p, &group.exp(&a3));
    let gaps = [
        group.distance(&v1, &v2)?,
        group.distance(&v1, &v3)?,
        group.distance(&v2, &v3)?,
    ];
    Ok(Variants {
        source_fiber: v1,
        target_fiber: v2,
        right: v3,
        gaps,
    })
}
