//! Independent checks: the cocycle identity from the contraction proof, the
//! compact-group special case, BCH calibration, convergence-order fits, a
//! finite-difference C¹ estimate of the defect, and the telescoping product
//! of step corrections.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::averaging::{
    iterate, sample_composable_pairs, CandidateMap, ConvergenceTrace, IterationOutcome, IterationSettings, PairSpec,
    PerturbationField, StepMode,
};
use crate::error::{Error, Result};
use crate::groupoid::{degenerate_groupoid, Arrow, BasePoint, ComposablePair, ComposableTriple, GroupoidChart};
use crate::haar::direct_haar_system;
use crate::liegroup::{bch_remainder, haar_quadrature, random_algebra_ball, AlgebraVector, LieGroup};

/// `ψ(p, q) = φ(p·q) φ(q)⁻¹ φ(p)⁻¹`.
pub fn psi<G: LieGroup>(phi: &CandidateMap<G>, p: &Arrow<G::Point>, q: &Arrow<G::Point>) -> Result<G::Point> {
    let chart = phi.chart();
    let group = chart.group();
    Ok(group.multiply(
        &group.multiply(&phi.eval(&chart.product(p, q))?, &group.inverse(&phi.eval(q)?)),
        &group.inverse(&phi.eval(p)?),
    ))
}

/// Seeded triples `(p, q, r)` with `s(p) = t(q)`, `s(q) = t(r)`, `s(r)` uniform
/// in the base box.
pub fn sample_composable_triples<G: LieGroup>(
    chart: &GroupoidChart<G>,
    samples: usize,
    seed: u64,
) -> Vec<ComposableTriple<G::Point>> {
    use rand::Rng;
    let group = chart.group();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = chart.radius();
    (0..samples)
        .map(|_| {
            let x = BasePoint((0..chart.base_dim()).map(|_| rng.random_range(-rho..=rho)).collect());
            let r = chart.fiber_s_arrow(&x, &group.random(&mut rng));
            let q = chart.fiber_s_arrow(&chart.target(&r), &group.random(&mut rng));
            let p = chart.fiber_s_arrow(&chart.target(&q), &group.random(&mut rng));
            ComposableTriple { p, q, r }
        })
        .collect()
}

/// `sup d(A₁A₂A₃, ψ(p, q)⁻¹)` with `A₁ = ψ(p,q)⁻¹ ψ(p·q, r) ψ(p,q)`,
/// `A₂ = φ(p) ψ(q,r)⁻¹ φ(p)⁻¹` and `A₃ = ψ(p, q·r)⁻¹`.
pub fn verify_cocycle_identity<G: LieGroup>(
    phi: &CandidateMap<G>,
    triples: &[ComposableTriple<G::Point>],
) -> Result<f64> {
    let chart = phi.chart();
    let group = chart.group();
    let values = triples
        .par_iter()
        .map(|t| {
            let (p, q, r) = (&t.p, &t.q, &t.r);
            let psi_pq = psi(phi, p, q)?;
            let psi_pq_inv = group.inverse(&psi_pq);
            let a1 = group.multiply(&group.multiply(&psi_pq_inv, &psi(phi, &chart.product(p, q), r)?), &psi_pq);
            let phi_p = phi.eval(p)?;
            let a2 = group.multiply(
                &group.multiply(&phi_p, &group.inverse(&psi(phi, q, r)?)),
                &group.inverse(&phi_p),
            );
            let a3 = group.inverse(&psi(phi, p, &chart.product(q, r))?);
            group.distance(&group.multiply(&group.multiply(&a1, &a2), &a3), &psi_pq_inv)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// Resolutions for [`gkr_case`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GkrSettings {
    pub quadrature_resolution: usize,
    pub group_nodes: usize,
    pub mode: StepMode,
    pub iteration: IterationSettings,
}

pub struct GkrOutcome<G: LieGroup> {
    pub outcome: IterationOutcome<G>,
    /// `sup d(φ(g), g)` of the final map over the sampled group elements.
    pub identity_distance: f64,
}

/// Averages the near-identity self-map `g ↦ g·exp(ε η(g))` of `G` on the
/// degenerate chart with a one-point base.
pub fn gkr_case<G: LieGroup>(
    group: Arc<G>,
    epsilon: f64,
    seed: u64,
    settings: &GkrSettings,
) -> Result<GkrOutcome<G>> {
    if !(0.0..=0.1).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in [0, 0.1], got {epsilon}")));
    }
    let chart = degenerate_groupoid(group.clone());
    let haar = direct_haar_system(&chart, Arc::new(haar_quadrature(group.as_ref(), settings.quadrature_resolution)?));
    let pairs = sample_composable_pairs(
        &chart,
        &PairSpec {
            group_nodes: settings.group_nodes,
            base_points: 1,
            seed,
        },
    )?;
    let phi0 = CandidateMap::perturbed(&chart, PerturbationField::random(group.as_ref(), 0, 0.0, seed), epsilon);
    let iteration = IterationSettings {
        mode: settings.mode,
        ..settings.iteration
    };
    let outcome = iterate(&phi0, &haar, &pairs, &iteration)?;
    let last = outcome.final_map();
    let identity_distance = pairs
        .par_iter()
        .map(|pair| group.distance(&last.eval(&pair.p)?, &pair.p.group))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(GkrOutcome {
        outcome,
        identity_distance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BchCalibration {
    pub cap: f64,
    /// `max ‖log(exp f₁ exp f₂) − f₁ − f₂‖ / (‖f₁‖‖f₂‖)` at `cap`.
    pub constant: f64,
    /// The same at `cap / 2`.
    pub half_cap_constant: f64,
    pub ratio: f64,
}

fn bch_constant<G: LieGroup>(group: &G, samples: usize, cap: f64, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = group.algebra_dim();
    let draws: Vec<(AlgebraVector, AlgebraVector)> = (0..samples)
        .map(|_| (random_algebra_ball(n, cap, &mut rng), random_algebra_ball(n, cap, &mut rng)))
        .collect();
    let values = draws
        .par_iter()
        .map(|(f1, f2)| {
            let scale = f1.norm() * f2.norm();
            if scale == 0.0 {
                return Ok(0.0);
            }
            Ok(bch_remainder(group, f1, f2)? / scale)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// Calibrates the constant in `‖log(exp f₁ exp f₂) − f₁ − f₂‖ ≤ C ‖f₁‖‖f₂‖`
/// at `cap` and `cap/2`.
pub fn verify_bch_bounds<G: LieGroup>(group: &G, samples: usize, cap: f64, seed: u64) -> Result<BchCalibration> {
    if !(cap > 0.0 && cap <= 0.5) {
        return Err(Error::InvalidArgument(format!("norm cap must lie in (0, 0.5], got {cap}")));
    }
    let constant = bch_constant(group, samples, cap, seed)?;
    let half_cap_constant = bch_constant(group, samples, cap / 2.0, seed)?;
    let ratio = if constant == 0.0 && half_cap_constant == 0.0 {
        1.0
    } else {
        constant.max(half_cap_constant) / constant.min(half_cap_constant)
    };
    Ok(BchCalibration {
        cap,
        constant,
        half_cap_constant,
        ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    pub order: f64,
    /// First and last iteration index used (inclusive).
    pub range: (usize, usize),
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
}

/// Least-squares slope of `log Δ_{n+1}` against `log Δ_n` over the leading
/// run of defects above `3 × floor`.
pub fn fit_order(defects: &[f64], floor: f64) -> Result<OrderFit> {
    let usable = defects.iter().take_while(|&&d| d > 3.0 * floor && d > 0.0).count();
    if usable < 3 {
        return Err(Error::InsufficientData(format!(
            "{usable} iterations above the noise floor, need at least 3"
        )));
    }
    let logs: Vec<f64> = defects[..usable].iter().map(|d| d.ln()).collect();
    let xs = &logs[..usable - 1];
    let ys = &logs[1..];
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("defects do not change".into()));
    }
    let order = sxy / sxx;
    let intercept = my - order * mx;
    let residual = (xs.iter().zip(ys).map(|(x, y)| (y - intercept - order * x).powi(2)).sum::<f64>() / m).sqrt();
    Ok(OrderFit {
        order,
        range: (0, usable - 1),
        residual,
    })
}

pub fn fit_convergence_order(trace: &ConvergenceTrace, floor: f64) -> Result<OrderFit> {
    let defects: Vec<f64> = trace.rows.iter().map(|r| r.defect.sup).collect();
    let first = trace.rows.first().map_or(0, |r| r.iter);
    let fit = fit_order(&defects, floor)?;
    Ok(OrderFit {
        range: (first + fit.range.0, first + fit.range.1),
        ..fit
    })
}

/// Finite-difference sup norms of the first derivatives of `log ψ(p, q)`
/// along the pair parameterization `q = (h, x)`, `p = (g, t(q))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C1Estimate {
    /// Derivatives in the group directions of `g` and `h`.
    pub group: f64,
    /// Derivatives in the base coordinates of `x`.
    pub spatial: f64,
}

impl C1Estimate {
    pub fn max(&self) -> f64 {
        self.group.max(self.spatial)
    }
}

pub fn c1_defect_estimate<G: LieGroup>(
    phi: &CandidateMap<G>,
    pairs: &[ComposablePair<G::Point>],
    fd_step: f64,
) -> Result<C1Estimate> {
    if !(fd_step > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {fd_step}")));
    }
    let chart = phi.chart();
    let group = chart.group();
    let n = group.algebra_dim();
    let d = chart.base_dim();
    let log_psi = |g: &G::Point, h: &G::Point, x: &BasePoint| -> Result<AlgebraVector> {
        let q = chart.fiber_s_arrow(x, h);
        let p = chart.fiber_s_arrow(&chart.target(&q), g);
        group.log(&psi(phi, &p, &q)?)
    };
    let values = pairs
        .par_iter()
        .map(|pair| {
            let (g, h, x) = (&pair.p.group, &pair.q.group, chart.source(&pair.q));
            let diff = |a: AlgebraVector, b: AlgebraVector| (&a - &b).norm() / (2.0 * fd_step);
            let mut grp = 0.0f64;
            for j in 0..n {
                let e = AlgebraVector::basis(n, j);
                let (up, down) = (group.exp(&e.scale(fd_step)), group.exp(&e.scale(-fd_step)));
                grp = grp.max(diff(
                    log_psi(&group.multiply(g, &up), h, &x)?,
                    log_psi(&group.multiply(g, &down), h, &x)?,
                ));
                grp = grp.max(diff(
                    log_psi(g, &group.multiply(h, &up), &x)?,
                    log_psi(g, &group.multiply(h, &down), &x)?,
                ));
            }
            let mut spatial = 0.0f64;
            for k in 0..d {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp.0[k] += fd_step;
                xm.0[k] -= fd_step;
                spatial = spatial.max(diff(log_psi(g, h, &xp)?, log_psi(g, h, &xm)?));
            }
            Ok((grp, spatial))
        })
        .collect::<Result<Vec<_>>>()?;
    let (group_sup, spatial_sup) = values
        .into_iter()
        .fold((0.0f64, 0.0f64), |(a, b), (g, s)| (a.max(g), b.max(s)));
    Ok(C1Estimate {
        group: group_sup,
        spatial: spatial_sup,
    })
}

/// `sup_p d(Ψ_n ⋯ Ψ_1(p), φ_{n+1}(p) φ_1(p)⁻¹)` with `Ψ_k = φ_{k+1} φ_k⁻¹`, for
/// the maps `φ_1, …, φ_{n+1}` of an iteration.
pub fn telescoping_residual<G: LieGroup>(maps: &[CandidateMap<G>], arrows: &[Arrow<G::Point>]) -> Result<f64> {
    if maps.len() < 2 {
        return Ok(0.0);
    }
    let group = maps[0].chart().group();
    let values = arrows
        .par_iter()
        .map(|p| {
            let phis = maps.iter().map(|m| m.eval(p)).collect::<Result<Vec<_>>>()?;
            let mut prod = group.identity();
            for w in phis.windows(2) {
                prod = group.multiply(&group.multiply(&w[1], &group.inverse(&w[0])), &prod);
            }
            let direct = group.multiply(phis.last().expect("nonempty"), &group.inverse(&phis[0]));
            group.distance(&prod, &direct)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}
