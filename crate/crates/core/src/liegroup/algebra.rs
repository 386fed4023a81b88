use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use smallvec::SmallVec;

/// Lie algebra element, as coordinates in a basis that is orthonormal for the
/// scaled bi-invariant inner product.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AlgebraVector(SmallVec<[f64; 4]>);

impl AlgebraVector {
    pub fn zeros(dim: usize) -> Self {
        AlgebraVector(SmallVec::from_elem(0.0, dim))
    }

    pub fn from_slice(c: &[f64]) -> Self {
        AlgebraVector(SmallVec::from_slice(c))
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[k] = 1.0;
        v
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Scaled norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        AlgebraVector(self.0.iter().map(|x| x * s).collect())
    }

    /// `self += s · other`.
    pub fn axpy(&mut self, s: f64, other: &Self) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += s * b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }
}

impl Index<usize> for AlgebraVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &AlgebraVector {
    type Output = AlgebraVector;
    fn add(self, rhs: &AlgebraVector) -> AlgebraVector {
        AlgebraVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &AlgebraVector {
    type Output = AlgebraVector;
    fn sub(self, rhs: &AlgebraVector) -> AlgebraVector {
        AlgebraVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl AddAssign<&AlgebraVector> for AlgebraVector {
    fn add_assign(&mut self, rhs: &AlgebraVector) {
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a += b;
        }
    }
}

impl Mul<f64> for &AlgebraVector {
    type Output = AlgebraVector;
    fn mul(self, s: f64) -> AlgebraVector {
        self.scale(s)
    }
}

impl Neg for &AlgebraVector {
    type Output = AlgebraVector;
    fn neg(self) -> AlgebraVector {
        self.scale(-1.0)
    }
}
