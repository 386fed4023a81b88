use std::sync::Arc;

use num_complex::Complex64;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::groupoid::BasePoint;
use crate::harmonic::HarmonicBasis;
use crate::liegroup::LieGroup;

/// Resolution of the grid representation of a candidate map: harmonic degree
/// in the group variable and points per axis of the base grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub degree: usize,
    pub base_points: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.base_points == 0 || self.base_points.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "base grid needs an odd number of points per axis (the fixed point must be a node), got {}",
                self.base_points
            )));
        }
        Ok(())
    }
}

/// Uniform tensor grid on `[−ρ, ρ]^d` with Lagrange interpolation.
#[derive(Debug, Clone)]
pub(crate) struct BaseGrid {
    dim: usize,
    axis: Vec<f64>,
    nodes: Vec<BasePoint>,
}

impl BaseGrid {
    pub(crate) fn new(dim: usize, radius: f64, points: usize) -> Self {
        let axis: Vec<f64> = if points == 1 {
            vec![0.0]
        } else {
            let h = 2.0 * radius / (points - 1) as f64;
            let mid = (points - 1) / 2;
            (0..points)
                .map(|i| if i == mid { 0.0 } else { -radius + h * i as f64 })
                .collect()
        };
        let count = axis.len().pow(dim as u32);
        let nodes = (0..count)
            .map(|mut k| {
                let mut c = vec![0.0; dim];
                for slot in c.iter_mut().rev() {
                    *slot = axis[k % axis.len()];
                    k /= axis.len();
                }
                BasePoint::from_slice(&c)
            })
            .collect();
        BaseGrid { dim, axis, nodes }
    }

    pub(crate) fn nodes(&self) -> &[BasePoint] {
        &self.nodes
    }

    fn axis_weights(&self, t: f64) -> SmallVec<[f64; 8]> {
        let n = self.axis.len();
        (0..n)
            .map(|j| {
                let mut w = 1.0;
                for m in 0..n {
                    if m != j {
                        w *= (t - self.axis[m]) / (self.axis[j] - self.axis[m]);
                    }
                }
                w
            })
            .collect()
    }

    /// Nonzero interpolation weights `(node index, weight)` at `x`.
    pub(crate) fn weights(&self, x: &BasePoint) -> SmallVec<[(usize, f64); 16]> {
        let mut out: SmallVec<[(usize, f64); 16]> = SmallVec::new();
        out.push((0, 1.0));
        for i in 0..self.dim {
            let aw = self.axis_weights(x.coords()[i]);
            let mut next = SmallVec::new();
            for &(idx, w) in &out {
                for (j, &a) in aw.iter().enumerate() {
                    if a != 0.0 {
                        next.push((idx * self.axis.len() + j, w * a));
                    }
                }
            }
            out = next;
        }
        out
    }
}

/// Fit nodes and precomputed basis values for projecting onto the harmonic
/// basis of degree `L`; the nodes integrate degree-`2L` products exactly.
pub(crate) struct FitPlan<G: LieGroup> {
    pub(crate) basis: HarmonicBasis,
    pub(crate) nodes: Vec<G::Point>,
    /// `w_i · conj(B_j(g_i)) / ‖B_j‖²`, row-major by node.
    projector: Vec<Complex64>,
}

impl<G: LieGroup> FitPlan<G> {
    pub(crate) fn new(group: &G, degree: usize) -> Result<Self> {
        let space = group.harmonic_space().ok_or_else(|| {
            Error::Unsupported(format!("no harmonic basis for {}", group.spec().family))
        })?;
        let basis = HarmonicBasis::new(space, degree);
        let (nodes, weights) = group.quadrature_rule((2 * degree + 1).max(2))?;
        let t = basis.len();
        let mut projector = Vec::with_capacity(nodes.len() * t);
        for (g, w) in nodes.iter().zip(&weights) {
            let b = basis.evaluate(&group.harmonic_coords(g).expect("harmonic coordinates"));
            for (bj, inv) in b.iter().zip(basis.inv_norm_sq()) {
                projector.push(bj.conj() * (w * inv));
            }
        }
        Ok(FitPlan {
            basis,
            nodes,
            projector,
        })
    }

    /// Coefficients `[entry][term]` of the embedding of `values` (one per node).
    fn project(&self, group: &G, values: &[G::Point]) -> Vec<Complex64> {
        let t = self.basis.len();
        let entries = group.embedding(&values[0]).len();
        let mut c = vec![Complex64::new(0.0, 0.0); entries * t];
        for (i, v) in values.iter().enumerate() {
            let e = group.embedding(v);
            let row = &self.projector[i * t..(i + 1) * t];
            for (k, ek) in e.iter().enumerate() {
                for (cj, pj) in c[k * t..(k + 1) * t].iter_mut().zip(row) {
                    *cj += ek * pj;
                }
            }
        }
        c
    }
}

/// Group-valued map on `G × B` stored as harmonic coefficients of its
/// embedding at each base node, blended across base nodes by Lagrange weights
/// and projected back to the group.
pub(crate) struct SpectralGrid<G: LieGroup> {
    pub(crate) spec: GridSpec,
    pub(crate) plan: Arc<FitPlan<G>>,
    pub(crate) base: Arc<BaseGrid>,
    entries: usize,
    coeffs: Vec<Vec<Complex64>>,
}

impl<G: LieGroup> SpectralGrid<G> {
    /// `values[b][i]` is the map at fit node `i` over base node `b`.
    pub(crate) fn fit(
        group: &G,
        spec: GridSpec,
        plan: Arc<FitPlan<G>>,
        base: Arc<BaseGrid>,
        values: &[Vec<G::Point>],
    ) -> Self {
        let coeffs: Vec<Vec<Complex64>> = values.iter().map(|v| plan.project(group, v)).collect();
        let entries = group.embedding(&group.identity()).len();
        SpectralGrid {
            spec,
            plan,
            base,
            entries,
            coeffs,
        }
    }

    pub(crate) fn eval(&self, group: &G, g: &G::Point, x: &BasePoint) -> G::Point {
        let coords = group.harmonic_coords(g).expect("harmonic coordinates");
        let b = self.plan.basis.evaluate(&coords);
        let t = b.len();
        let mut emb: SmallVec<[Complex64; 9]> = SmallVec::from_elem(Complex64::new(0.0, 0.0), self.entries);
        for (node, w) in self.base.weights(x) {
            let c = &self.coeffs[node];
            for (k, e) in emb.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (cj, bj) in c[k * t..(k + 1) * t].iter().zip(&b) {
                    acc += cj * bj;
                }
                *e += acc * w;
            }
        }
        group.from_embedding(&emb)
    }
}
