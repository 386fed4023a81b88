//! Defect functional, the averaging step in its three forms, and the
//! iteration driver.

mod defect;
mod grid;
mod iterate;
mod perturbation;
mod step;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::groupoid::{Arrow, GroupoidChart};
use crate::haar::HaarSystem;
use crate::liegroup::{AlgebraVector, LieGroup};

pub use defect::{defect, defect_values, noise_floor, sample_composable_pairs, DefectStats, PairSpec};
pub use grid::GridSpec;
pub use iterate::{iterate, ConvergenceTrace, IterationOutcome, IterationSettings, Status, TraceRow};
pub use perturbation::PerturbationField;
pub use step::{average_step, average_step_variants, StepMode, Variants};

use grid::SpectralGrid;

type MapFn<P> = dyn Fn(&Arrow<P>) -> Result<P> + Send + Sync;

pub(crate) enum Repr<G: LieGroup> {
    Closed { label: String, f: Arc<MapFn<G::Point>> },
    Averaged { inner: CandidateMap<G>, haar: HaarSystem<G> },
    Grid(SpectralGrid<G>),
}

/// A map `φ: M → G` with `φ|_G = id`.
///
/// Closed-form maps are evaluated directly; `Averaged` maps evaluate the
/// averaging formula over their inner map on demand; grid maps interpolate a
/// fitted representation. Over the fixed point (when the base has positive
/// dimension) every map returns the chart projection exactly.
pub struct CandidateMap<G: LieGroup> {
    chart: GroupoidChart<G>,
    repr: Arc<Repr<G>>,
    pinned: bool,
}

impl<G: LieGroup> Clone for CandidateMap<G> {
    fn clone(&self) -> Self {
        CandidateMap {
            chart: self.chart.clone(),
            repr: self.repr.clone(),
            pinned: self.pinned,
        }
    }
}

impl<G: LieGroup> fmt::Debug for CandidateMap<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CandidateMap({})", self.label())
    }
}

impl<G: LieGroup> CandidateMap<G> {
    /// A map given by an evaluable expression.
    pub fn closed(
        chart: &GroupoidChart<G>,
        label: impl Into<String>,
        f: impl Fn(&Arrow<G::Point>) -> Result<G::Point> + Send + Sync + 'static,
    ) -> Self {
        Self::from_repr(
            chart,
            Repr::Closed {
                label: label.into(),
                f: Arc::new(f),
            },
        )
    }

    pub(crate) fn from_repr(chart: &GroupoidChart<G>, repr: Repr<G>) -> Self {
        CandidateMap {
            chart: chart.clone(),
            repr: Arc::new(repr),
            pinned: chart.base_dim() > 0,
        }
    }

    /// `p ↦ group part of p`.
    pub fn projection(chart: &GroupoidChart<G>) -> Self {
        Self::closed(chart, "projection", |p| Ok(p.group.clone()))
    }

    /// The chart's own homomorphism, when it exposes one.
    pub fn known_homomorphism(chart: &GroupoidChart<G>) -> Result<Self> {
        if chart.known_homomorphism(&chart.unit(&chart.origin())).is_none() {
            return Err(Error::Unsupported(format!(
                "chart {} has no known homomorphism",
                chart.maps().describe()
            )));
        }
        let c = chart.clone();
        Ok(Self::closed(chart, "known homomorphism", move |p| {
            Ok(c.known_homomorphism(p).expect("known homomorphism"))
        }))
    }

    /// `p ↦ proj(p)·exp(ε η(p))`.
    pub fn perturbed(chart: &GroupoidChart<G>, field: PerturbationField, epsilon: f64) -> Self {
        Self::projection(chart).times_exp(field, epsilon)
    }

    /// `p ↦ φ(p)·exp(ε η(p))`.
    pub fn times_exp(&self, field: PerturbationField, epsilon: f64) -> Self {
        let inner = self.clone();
        let group = self.chart.group_arc().clone();
        let label = format!("{} * exp({epsilon:e} eta)", self.label());
        Self::closed(&self.chart, label, move |p| {
            let eta = field.eval(group.as_ref(), &p.group, &p.base).scale(epsilon);
            Ok(group.multiply(&inner.eval(p)?, &group.exp(&eta)))
        })
    }

    pub fn chart(&self) -> &GroupoidChart<G> {
        &self.chart
    }

    pub fn label(&self) -> String {
        match self.repr.as_ref() {
            Repr::Closed { label, .. } => label.clone(),
            Repr::Averaged { inner, .. } => format!("avg({})", inner.label()),
            Repr::Grid(g) => format!("grid(L={}, base={})", g.spec.degree, g.spec.base_points),
        }
    }

    /// Whether evaluation involves no interpolation.
    pub fn is_closed_form(&self) -> bool {
        match self.repr.as_ref() {
            Repr::Closed { .. } => true,
            Repr::Averaged { inner, .. } => inner.is_closed_form(),
            Repr::Grid(_) => false,
        }
    }

    pub fn grid_spec(&self) -> Option<GridSpec> {
        match self.repr.as_ref() {
            Repr::Grid(g) => Some(g.spec),
            _ => None,
        }
    }

    pub(crate) fn repr(&self) -> &Repr<G> {
        &self.repr
    }

    pub fn eval(&self, p: &Arrow<G::Point>) -> Result<G::Point> {
        if self.pinned && p.base.is_origin() {
            return Ok(self.chart.projection(p));
        }
        match self.repr.as_ref() {
            Repr::Closed { f, .. } => f(p),
            Repr::Averaged { inner, haar } => {
                let fiber = haar.fiber(&self.chart.source(p))?;
                let phi_q = fiber.arrows.iter().map(|q| inner.eval(q)).collect::<Result<Vec<_>>>()?;
                step::averaged_value(inner, &fiber, &phi_q, p)
            }
            Repr::Grid(g) => Ok(g.eval(self.chart.group(), &p.group, &p.base)),
        }
    }

    /// `u(p) = log(proj(p)⁻¹·φ(p))`.
    pub fn correction(&self, p: &Arrow<G::Point>) -> Result<AlgebraVector> {
        let group = self.chart.group();
        group.log(&group.multiply(&group.inverse(&self.chart.projection(p)), &self.eval(p)?))
    }
}
