use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Arrow, BasePoint, GroupoidChart};
use crate::error::{Error, Result};
use crate::liegroup::{GroupQuadrature, LieGroup};

/// Maximum residual of each groupoid axiom over sampled arrows.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub samples: usize,
    /// `|s(p·q) − s(q)|` and `|t(p·q) − t(p)|`.
    pub source_target: f64,
    /// Distance between `(p·q)·r` and `p·(q·r)`.
    pub associativity: f64,
    /// `1·p = p = p·1` and `s(1ₓ) = t(1ₓ) = x`.
    pub unit: f64,
    /// `p·p⁻¹ = 1`, `p⁻¹·p = 1`, `(p⁻¹)⁻¹ = p`.
    pub inverse: f64,
    /// `|t(p)|` for arrows with `s(p) = x₀`.
    pub fixed_point: f64,
    /// Matching error `|s(p) − t(q)|` of the sampled triples.
    pub composability: f64,
}

impl AxiomReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.source_target,
            self.associativity,
            self.unit,
            self.inverse,
            self.fixed_point,
            self.composability,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }

    /// `(name, residual)` pairs in a fixed order.
    pub fn entries(&self) -> [(&'static str, f64); 6] {
        [
            ("source_target", self.source_target),
            ("associativity", self.associativity),
            ("unit", self.unit),
            ("inverse", self.inverse),
            ("fixed_point", self.fixed_point),
            ("composability", self.composability),
        ]
    }
}

pub(crate) fn random_base_point(dim: usize, radius: f64, rng: &mut impl Rng) -> BasePoint {
    BasePoint((0..dim).map(|_| rng.random_range(-radius..=radius)).collect())
}

/// Checks the groupoid axioms on `sample_size` random composable triples.
pub fn check_axioms<G: LieGroup>(chart: &GroupoidChart<G>, sample_size: usize, seed: u64) -> Result<AxiomReport> {
    if sample_size == 0 {
        return Err(Error::InvalidArgument("sample_size must be >= 1".into()));
    }
    let group = chart.group();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AxiomReport {
        samples: sample_size,
        source_target: 0.0,
        associativity: 0.0,
        unit: 0.0,
        inverse: 0.0,
        fixed_point: 0.0,
        composability: 0.0,
    };
    let origin = chart.origin();
    for _ in 0..sample_size {
        let x = random_base_point(chart.base_dim(), chart.radius(), &mut rng);
        let r = chart.fiber_s_arrow(&x, &group.random(&mut rng));
        let q = chart.fiber_s_arrow(&chart.target(&r), &group.random(&mut rng));
        let p = chart.fiber_s_arrow(&chart.target(&q), &group.random(&mut rng));
        report.composability = report
            .composability
            .max(chart.composability_gap(&p, &q))
            .max(chart.composability_gap(&q, &r));

        let pq = chart.product(&p, &q);
        report.source_target = report
            .source_target
            .max(chart.source(&pq).dist_inf(&chart.source(&q)))
            .max(chart.target(&pq).dist_inf(&chart.target(&p)));

        let left = chart.product(&pq, &r);
        let right = chart.product(&p, &chart.product(&q, &r));
        report.associativity = report.associativity.max(chart.arrow_gap(&left, &right));

        let (sp, tp) = (chart.source(&p), chart.target(&p));
        let (us, ut) = (chart.unit(&sp), chart.unit(&tp));
        report.unit = report
            .unit
            .max(chart.arrow_gap(&chart.product(&ut, &p), &p))
            .max(chart.arrow_gap(&chart.product(&p, &us), &p))
            .max(chart.source(&us).dist_inf(&sp))
            .max(chart.target(&us).dist_inf(&sp));

        let inv = chart.invert(&p);
        report.inverse = report
            .inverse
            .max(chart.arrow_gap(&chart.product(&p, &inv), &ut))
            .max(chart.arrow_gap(&chart.product(&inv, &p), &us))
            .max(chart.arrow_gap(&chart.invert(&inv), &p));

        let over_origin = chart.fiber_s_arrow(&origin, &group.random(&mut rng));
        report.fixed_point = report.fixed_point.max(chart.target(&over_origin).inf_norm());
    }
    Ok(report)
}

/// Quadrature nodes of the group, or seeded random points when the family has
/// no quadrature rule.
pub(crate) fn group_nodes<G: LieGroup>(group: &G, resolution: usize) -> Vec<G::Point> {
    match group.quadrature_rule(resolution.max(2)) {
        Ok((nodes, _)) => nodes,
        Err(_) => {
            let mut rng = ChaCha8Rng::seed_from_u64(resolution as u64);
            (0..resolution.max(2).pow(2)).map(|_| group.random(&mut rng)).collect()
        }
    }
}

/// `O(x) = t(s⁻¹(x))`, sampled on group nodes of the given resolution.
pub fn orbit<G: LieGroup>(chart: &GroupoidChart<G>, x: &BasePoint, resolution: usize) -> Result<Vec<BasePoint>> {
    if x.dim() != chart.base_dim() {
        return Err(Error::DimensionMismatch {
            expected: chart.base_dim(),
            found: x.dim(),
        });
    }
    Ok(group_nodes(chart.group(), resolution)
        .iter()
        .map(|g| chart.target(&chart.fiber_s_arrow(x, g)))
        .collect())
}

/// Euclidean radius of the sampled saturation `t(s⁻¹(D))` of the ball `D` of
/// radius `δ`.
///
/// Sources are sampled on the boundary sphere (axes, diagonals and random
/// directions) and at random interior points; the result is at least `δ`.
pub fn saturate<G: LieGroup>(chart: &GroupoidChart<G>, delta: f64, resolution: usize) -> Result<f64> {
    let d = chart.base_dim();
    if !(delta >= 0.0) || delta > chart.radius() {
        return Err(Error::InvalidArgument(format!(
            "saturation radius {delta} must lie in [0, {}]",
            chart.radius()
        )));
    }
    if d == 0 {
        return Ok(delta);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5a7);
    let mut sources = Vec::new();
    for i in 0..d {
        for s in [-1.0, 1.0] {
            let mut c = vec![0.0; d];
            c[i] = s * delta;
            sources.push(BasePoint::from_slice(&c));
        }
    }
    let diag = delta / (d as f64).sqrt();
    sources.push(BasePoint::from_slice(&vec![diag; d]));
    for k in 0..128 {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-300);
        let r = if k % 2 == 0 { delta } else { delta * rng.random::<f64>() };
        sources.push(BasePoint(v.iter().map(|c| c * r / n).collect()));
    }
    let nodes = group_nodes(chart.group(), resolution);
    let mut radius = delta;
    for x in &sources {
        for g in &nodes {
            radius = radius.max(chart.target(&chart.fiber_s_arrow(x, g)).norm());
        }
    }
    if radius > chart.radius() {
        return Err(Error::SaturationExceedsBase {
            radius,
            limit: chart.radius(),
        });
    }
    Ok(radius)
}

/// Arrows of `t⁻¹(y)` at the quadrature nodes, with the node weights.
pub fn fiber_t<G: LieGroup>(
    chart: &GroupoidChart<G>,
    y: &BasePoint,
    quadrature: &GroupQuadrature<G::Point>,
) -> Result<Vec<(Arrow<G::Point>, f64)>> {
    if y.dim() != chart.base_dim() {
        return Err(Error::DimensionMismatch {
            expected: chart.base_dim(),
            found: y.dim(),
        });
    }
    let limit = chart.safety_radius();
    quadrature
        .iter()
        .map(|(h, w)| {
            let p = chart.fiber_t_arrow(y, h);
            let norm = chart.source(&p).inf_norm();
            if norm > limit {
                return Err(Error::OutsideSafetyBox { norm, limit });
            }
            Ok((p, w))
        })
        .collect()
}
