//! Nodal samples of a function on a [`DiscreteManifold`](crate::DiscreteManifold).

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Values of a scalar function at the nodes of a discretization.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField(Vec<f64>);

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "field value at node {i} is not finite"
            )));
        }
        Ok(ScalarField(values))
    }

    /// Wraps values produced internally; finiteness is the caller's concern.
    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        ScalarField(values)
    }

    pub fn constant(len: usize, value: f64) -> Self {
        ScalarField(vec![value; len])
    }

    pub fn zeros(len: usize) -> Self {
        Self::constant(len, 0.0)
    }

    pub fn from_fn(nodes: &[f64], f: impl Fn(f64) -> f64) -> Self {
        ScalarField(nodes.iter().map(|&x| f(x)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.len(), other.len());
        ScalarField(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `self + c * other`
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index and value of the smallest entry.
    pub fn argmin(&self) -> (usize, f64) {
        self.0
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
            )
    }

    pub fn argmax(&self) -> (usize, f64) {
        self.0
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            )
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |self - other| / max |other|`
    pub fn sup_rel_diff(&self, other: &Self) -> f64 {
        let scale = other.sup_norm();
        let diff = self.zip_map(other, |a, b| a - b).sup_norm();
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }
}

impl Index<usize> for ScalarField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ScalarField {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl From<ScalarField> for Vec<f64> {
    fn from(f: ScalarField) -> Self {
        f.0
    }
}

impl<'a> IntoIterator for &'a ScalarField {
    type Item = &'a f64;
    type IntoIter = std::slice::Iter<'a, f64>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(ScalarField::new(vec![1.0, f64::NAN]).is_err());
        assert!(ScalarField::new(vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn extrema() {
        let f = ScalarField::new(vec![3.0, -1.0, 2.0]).unwrap();
        assert_eq!(f.argmin(), (1, -1.0));
        assert_eq!(f.argmax(), (0, 3.0));
        assert_eq!(f.sup_norm(), 3.0);
    }
}
