use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::grid::BaseGrid;
use super::step::{average_step, StepMode};
use super::CandidateMap;
use crate::error::{Error, Result};
use crate::groupoid::{ComposablePair, GroupoidChart};
use crate::haar::HaarSystem;
use crate::liegroup::LieGroup;

/// Tensor sample of composable pairs: `group_nodes` group elements (the
/// identity first, then seeded random points) and `base_points` uniform points
/// per base axis on `[−ρ, ρ]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairSpec {
    pub group_nodes: usize,
    pub base_points: usize,
    pub seed: u64,
}

/// `q = (h, x)` over base points × group nodes and `p` the arrow with source
/// `t(q)` and group part `g`; `|nodes|² · |base grid|` pairs in a fixed order.
pub fn sample_composable_pairs<G: LieGroup>(
    chart: &GroupoidChart<G>,
    spec: &PairSpec,
) -> Result<Vec<ComposablePair<G::Point>>> {
    if spec.group_nodes == 0 || spec.base_points == 0 {
        return Err(Error::InvalidArgument("pair sample needs at least one group node and one base point".into()));
    }
    let group = chart.group();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut nodes = vec![group.identity()];
    nodes.extend((1..spec.group_nodes).map(|_| group.random(&mut rng)));
    let base = BaseGrid::new(chart.base_dim(), chart.radius(), spec.base_points);
    let mut pairs = Vec::with_capacity(nodes.len() * nodes.len() * base.nodes().len());
    for x in base.nodes() {
        for h in &nodes {
            let q = chart.fiber_s_arrow(x, h);
            let y = chart.target(&q);
            for g in &nodes {
                pairs.push(ComposablePair {
                    p: chart.fiber_s_arrow(&y, g),
                    q: q.clone(),
                });
            }
        }
    }
    Ok(pairs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectStats {
    pub sup: f64,
    /// Nearest-rank 95th percentile.
    pub p95: f64,
    pub count: usize,
}

/// `d(φ(p·q) φ(q)⁻¹ φ(p)⁻¹, 1)` for each pair, in sample order.
pub fn defect_values<G: LieGroup>(phi: &CandidateMap<G>, pairs: &[ComposablePair<G::Point>]) -> Result<Vec<f64>> {
    let chart = phi.chart();
    let group = chart.group();
    pairs
        .par_iter()
        .map(|pair| {
            let pq = chart.product(&pair.p, &pair.q);
            let psi = group.multiply(
                &group.multiply(&phi.eval(&pq)?, &group.inverse(&phi.eval(&pair.q)?)),
                &group.inverse(&phi.eval(&pair.p)?),
            );
            group.dist_to_identity(&psi).map_err(|e| match e {
                Error::OutOfChart { distance } => {
                    Error::DefectTooLarge(format!("d(psi, 1) = {distance:.3e} at p = {:?}, q = {:?}", pair.p, pair.q))
                }
                other => other,
            })
        })
        .collect()
}

pub fn defect<G: LieGroup>(phi: &CandidateMap<G>, pairs: &[ComposablePair<G::Point>]) -> Result<DefectStats> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData("empty pair sample".into()));
    }
    let mut values = defect_values(phi, pairs)?;
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
    Ok(DefectStats {
        sup: values[n - 1],
        p95: values[rank - 1],
        count: n,
    })
}

/// Defect left after one step from an exact homomorphism (the chart's known
/// homomorphism, else the projection) under the same storage mode: the
/// smallest defect the discretization can resolve.
pub fn noise_floor<G: LieGroup>(
    chart: &GroupoidChart<G>,
    haar: &HaarSystem<G>,
    mode: StepMode,
    pairs: &[ComposablePair<G::Point>],
) -> Result<f64> {
    let reference = CandidateMap::known_homomorphism(chart).unwrap_or_else(|_| CandidateMap::projection(chart));
    let stepped = average_step(&reference, haar, mode)?;
    Ok(defect(&stepped, pairs)?.sup)
}
