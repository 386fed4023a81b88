use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

use super::defect::{defect, noise_floor, DefectStats};
use super::step::{average_step, StepMode};
use super::CandidateMap;
use crate::error::Result;
use crate::groupoid::ComposablePair;
use crate::haar::HaarSystem;
use crate::liegroup::LieGroup;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationSettings {
    pub mode: StepMode,
    pub tol: f64,
    pub max_iter: usize,
    /// Admissibility threshold `C₀` on the initial defect.
    pub admissibility: f64,
    /// Divergence when `Δ_{n+1} > factor · Δ_n`.
    pub divergence_factor: f64,
    /// Stagnation when `Δ_{n+1} ≥ ratio · Δ_n`.
    pub stagnation_ratio: f64,
    /// Noise-floor status when `Δ_n ≤ factor · floor`.
    pub floor_factor: f64,
    /// Measured floor; computed from the chart when absent.
    pub noise_floor: Option<f64>,
}

impl Default for IterationSettings {
    fn default() -> Self {
        IterationSettings {
            mode: StepMode::Nested,
            tol: 1e-9,
            max_iter: 12,
            admissibility: 0.1,
            divergence_factor: 1.5,
            stagnation_ratio: 0.9,
            floor_factor: 3.0,
            noise_floor: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    NoiseFloor,
    MaxIter,
    Diverged,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::NoiseFloor => "noise_floor",
            Status::MaxIter => "max_iter",
            Status::Diverged => "diverged",
        })
    }
}

/// Row `n` describes `φ_n`, the map after `n` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub defect: DefectStats,
    /// `sup_p d(φ_n(p) φ_{n−1}(p)⁻¹, 1)` over the sampled arrows; absent for `n = 0`.
    pub step_norm: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
    pub noise_floor: f64,
}

impl ConvergenceTrace {
    pub fn defects(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.defect.sup).collect()
    }
}

pub struct IterationOutcome<G: LieGroup> {
    /// `φ_0, φ_1, …` in order.
    pub maps: Vec<CandidateMap<G>>,
    pub trace: ConvergenceTrace,
    pub status: Status,
    pub cause: Option<String>,
}

impl<G: LieGroup> IterationOutcome<G> {
    pub fn final_map(&self) -> &CandidateMap<G> {
        self.maps.last().expect("at least the initial map")
    }
}

fn step_norm<G: LieGroup>(
    next: &CandidateMap<G>,
    prev: &CandidateMap<G>,
    pairs: &[ComposablePair<G::Point>],
) -> Result<f64> {
    let group = next.chart().group();
    let values = pairs
        .par_iter()
        .map(|pair| {
            let mut worst = 0.0f64;
            for a in [&pair.p, &pair.q] {
                let d = group.dist_to_identity(&group.multiply(&next.eval(a)?, &group.inverse(&prev.eval(a)?)))?;
                worst = worst.max(d);
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// `φ_{n+1} = φ̂_n` until the defect reaches `tol`, stagnates at the noise
/// floor, grows, or the iteration budget is spent. Step failures end the run
/// as `Diverged` with the error as cause.
pub fn iterate<G: LieGroup>(
    phi0: &CandidateMap<G>,
    haar: &HaarSystem<G>,
    pairs: &[ComposablePair<G::Point>],
    settings: &IterationSettings,
) -> Result<IterationOutcome<G>> {
    let floor = match settings.noise_floor {
        Some(f) => f,
        None => noise_floor(phi0.chart(), haar, settings.mode, pairs)?,
    }
    .max(f64::EPSILON);
    let mut maps = vec![phi0.clone()];
    let mut rows = Vec::new();
    let start = Instant::now();
    let d0 = defect(phi0, pairs)?;
    rows.push(TraceRow {
        iter: 0,
        defect: d0,
        step_norm: None,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    });
    let finish = |maps, rows, status, cause: Option<String>| IterationOutcome {
        maps,
        trace: ConvergenceTrace { rows, noise_floor: floor },
        status,
        cause,
    };
    if d0.sup <= settings.tol {
        return Ok(finish(maps, rows, Status::Converged, None));
    }
    if d0.sup > settings.admissibility {
        let cause = format!(
            "initial defect {:.3e} exceeds admissibility threshold {:.3e}",
            d0.sup, settings.admissibility
        );
        return Ok(finish(maps, rows, Status::Diverged, Some(cause)));
    }
    if d0.sup <= settings.floor_factor * floor {
        return Ok(finish(maps, rows, Status::NoiseFloor, None));
    }
    for n in 1..=settings.max_iter {
        let start = Instant::now();
        let prev = maps.last().expect("nonempty").clone();
        let next = match average_step(&prev, haar, settings.mode) {
            Ok(m) => m,
            Err(e) => return Ok(finish(maps, rows, Status::Diverged, Some(e.to_string()))),
        };
        let measured = defect(&next, pairs).and_then(|d| Ok((d, step_norm(&next, &prev, pairs)?)));
        let (d, norm) = match measured {
            Ok(v) => v,
            Err(e) => return Ok(finish(maps, rows, Status::Diverged, Some(e.to_string()))),
        };
        maps.push(next);
        rows.push(TraceRow {
            iter: n,
            defect: d,
            step_norm: Some(norm),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        let before = rows[n - 1].defect.sup;
        if d.sup <= settings.tol {
            return Ok(finish(maps, rows, Status::Converged, None));
        }
        if d.sup <= settings.floor_factor * floor {
            return Ok(finish(maps, rows, Status::NoiseFloor, None));
        }
        if d.sup > settings.divergence_factor * before {
            let cause = format!("defect grew from {before:.3e} to {:.3e}", d.sup);
            return Ok(finish(maps, rows, Status::Diverged, Some(cause)));
        }
        if d.sup >= settings.stagnation_ratio * before {
            let cause = format!("defect stagnated at {:.3e} (measured floor {floor:.3e})", d.sup);
            return Ok(finish(maps, rows, Status::NoiseFloor, Some(cause)));
        }
    }
    Ok(finish(maps, rows, Status::MaxIter, None))
}
