use std::ops::{Deref, DerefMut};

use crate::scalar::Real;

/// Dense real vector. Dereferences to a slice, so every `&[T]` API accepts it.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct DenseVector<T>(Vec<T>);

impl<T: Real> DenseVector<T> {
    pub fn zeros(len: usize) -> Self {
        Self(vec![T::zero(); len])
    }

    pub fn from_slice(values: &[T]) -> Self {
        Self(values.to_vec())
    }

    pub fn from_f64(values: &[f64]) -> Self {
        Self(values.iter().map(|&v| T::lit(v)).collect())
    }

    /// Unit basis vector `e_i` in `len` dimensions.
    pub fn basis(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.0[i] = T::one();
        v
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn norm(&self) -> T {
        norm(&self.0)
    }

    pub fn dot(&self, other: &[T]) -> T {
        dot(&self.0, other)
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: T, x: &[T]) {
        debug_assert_eq!(self.len(), x.len());
        for (yi, &xi) in self.0.iter_mut().zip(x) {
            *yi = *yi + a * xi;
        }
    }

    pub fn scaled(&self, a: T) -> Self {
        Self(self.0.iter().map(|&v| a * v).collect())
    }

    pub fn sub(&self, other: &[T]) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self(self.0.iter().zip(other).map(|(&a, &b)| a - b).collect())
    }

    pub fn add(&self, other: &[T]) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self(self.0.iter().zip(other).map(|(&a, &b)| a + b).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &[T]) -> T {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(other)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    }
}

impl<T> Deref for DenseVector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> DerefMut for DenseVector<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.0
    }
}

impl<T> From<Vec<T>> for DenseVector<T> {
    fn from(v: Vec<T>) -> Self {
        Self(v)
    }
}

impl<T> FromIterator<T> for DenseVector<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Euclidean norm with scaling to avoid overflow on large entries.
pub fn norm<T: Real>(a: &[T]) -> T {
    let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() || !scale.is_finite() {
        return scale;
    }
    let ss = a.iter().map(|&v| (v / scale) * (v / scale)).sum::<T>();
    scale * ss.sqrt()
}
