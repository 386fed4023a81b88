use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::LieGroup;
use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Nodes with nonnegative weights summing to one, approximating Haar measure.
#[derive(Debug, Clone)]
pub struct GroupQuadrature<P> {
    pub nodes: Vec<P>,
    pub weights: Vec<f64>,
    pub resolution: usize,
    /// Declared left/right invariance tolerance for the built-in test basket.
    pub tolerance: f64,
}

impl<P> GroupQuadrature<P> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&P, f64)> {
        self.nodes.iter().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, f: impl Fn(&P) -> f64) -> f64 {
        self.iter().map(|(p, w)| w * f(p)).sum()
    }
}

/// Which side a fixed element translates from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// `|Σ wᵢ f(t·hᵢ) − Σ wᵢ f(hᵢ)|` (or `f(hᵢ·t)` for [`Side::Right`]).
pub fn invariance_residual<G: LieGroup>(
    group: &G,
    quad: &GroupQuadrature<G::Point>,
    f: &dyn Fn(&G::Point) -> f64,
    t: &G::Point,
    side: Side,
) -> f64 {
    let base = quad.integrate(f);
    let moved = quad.integrate(|h| match side {
        Side::Left => f(&group.multiply(t, h)),
        Side::Right => f(&group.multiply(h, t)),
    });
    (moved - base).abs()
}

/// Matrix-coefficient test functions plus one non-polynomial smooth function.
pub(crate) fn test_basket<G: LieGroup>(group: &G) -> Vec<Box<dyn Fn(&G::Point) -> f64 + '_>> {
    let n = group.spec().matrix_dim;
    let mut out: Vec<Box<dyn Fn(&G::Point) -> f64 + '_>> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            out.push(Box::new(move |g| group.to_matrix(g)[(i, j)].re));
            out.push(Box::new(move |g| group.to_matrix(g)[(i, j)].im));
        }
    }
    out.push(Box::new(move |g| {
        let m = group.to_matrix(g);
        (m[(0, 0)] * m[(n - 1, n - 1)]).re
    }));
    out.push(Box::new(move |g| group.to_matrix(g).trace().re.exp()));
    out
}

/// Haar quadrature with a declared invariance tolerance, measured on the test
/// basket over a fixed set of translations and inflated by a factor of 10.
pub fn haar_quadrature<G: LieGroup>(group: &G, resolution: usize) -> Result<GroupQuadrature<G::Point>> {
    let (nodes, weights) = group.quadrature_rule(resolution)?;
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::InvalidArgument("negative quadrature weight".into()));
    }
    let mut quad = GroupQuadrature {
        nodes,
        weights,
        resolution,
        tolerance: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x005e_ed0f_4aa2);
    let translations: Vec<G::Point> = (0..4).map(|_| group.random(&mut rng)).collect();
    let mut worst = 0.0f64;
    for f in test_basket(group) {
        for t in &translations {
            for side in [Side::Left, Side::Right] {
                worst = worst.max(invariance_residual(group, &quad, f.as_ref(), t, side));
            }
        }
    }
    quad.tolerance = (10.0 * worst).max(1e-14);
    Ok(quad)
}
