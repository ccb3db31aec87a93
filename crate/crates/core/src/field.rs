//! Nodal scalar fields: the representation of solutions, coefficients,
//! transforms and barriers.

use std::ops::{Index, IndexMut};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// One scalar value per mesh node.
#[derive(Clone, Debug)]
pub struct DiscreteField {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl DiscreteField {
    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.len();
        DiscreteField { mesh, values: vec![0.0; n] }
    }

    pub fn constant(mesh: Arc<Mesh>, c: f64) -> Self {
        let n = mesh.len();
        DiscreteField { mesh, values: vec![c; n] }
    }

    /// Samples a closed-form expression nodewise.
    pub fn from_fn(mesh: Arc<Mesh>, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..mesh.len()).map(|i| f(mesh.position(i))).collect();
        DiscreteField { mesh, values }
    }

    pub fn from_values(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::FieldMismatch(format!(
                "{} values for a mesh of {} nodes",
                values.len(),
                mesh.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::FieldMismatch(format!("non-finite value at node {i}")));
        }
        Ok(DiscreteField { mesh, values })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.values.iter()
    }

    /// Checks the two fields live on meshes of identical layout.
    pub fn same_mesh(&self, other: &DiscreteField) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
            || (self.mesh.shape() == other.mesh.shape()
                && self.mesh.lo() == other.mesh.lo()
                && self.mesh.hi() == other.mesh.hi())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Maximum of `self - other` over all nodes.
    pub fn max_diff(&self, other: &DiscreteField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b))
    }

    /// `max |self - other|`.
    pub fn sup_distance(&self, other: &DiscreteField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DiscreteField {
        DiscreteField {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> DiscreteField {
        self.map(|v| c * v)
    }

    pub fn shift(&self, c: f64) -> DiscreteField {
        self.map(|v| v + c)
    }

    /// `self + c * other`, nodewise.
    pub fn add_scaled(&self, c: f64, other: &DiscreteField) -> DiscreteField {
        DiscreteField {
            mesh: self.mesh.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    /// Positive part `max(v, 0)` nodewise.
    pub fn positive_part(&self) -> DiscreteField {
        self.map(|v| v.max(0.0))
    }

    /// Negative part `max(-v, 0)` nodewise (so `v = v+ - v-`).
    pub fn negative_part(&self) -> DiscreteField {
        self.map(|v| (-v).max(0.0))
    }

    /// Zeroes the boundary nodes (Dirichlet tag).
    pub fn zero_boundary(mut self) -> DiscreteField {
        for i in 0..self.values.len() {
            if self.mesh.is_boundary(i) {
                self.values[i] = 0.0;
            }
        }
        self
    }

    /// Largest boundary-node magnitude.
    pub fn boundary_sup(&self) -> f64 {
        (0..self.len())
            .filter(|&i| self.mesh.is_boundary(i))
            .fold(0.0, |m, i| m.max(self.values[i].abs()))
    }

    /// Nodewise clamp into `[lo, hi]`.
    pub fn clamp_between(&self, lo: &DiscreteField, hi: &DiscreteField) -> DiscreteField {
        DiscreteField {
            mesh: self.mesh.clone(),
            values: self
                .values
                .iter()
                .zip(lo.values.iter().zip(&hi.values))
                .map(|(&v, (&l, &h))| v.max(l).min(h))
                .collect(),
        }
    }
}

impl Index<usize> for DiscreteField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl IndexMut<usize> for DiscreteField {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.values[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length_and_nonfinite() {
        let m = Mesh::interval(0.0, 1.0, 5).unwrap();
        assert!(DiscreteField::from_values(m.clone(), vec![0.0; 4]).is_err());
        assert!(DiscreteField::from_values(m.clone(), vec![f64::NAN; 5]).is_err());
    }

    #[test]
    fn norms_and_parts() {
        let m = Mesh::interval(0.0, 1.0, 5).unwrap();
        let f = DiscreteField::from_values(m, vec![-2.0, 1.0, 0.0, 3.0, -0.5]).unwrap();
        assert_eq!(f.sup_norm(), 3.0);
        assert_eq!(f.min(), -2.0);
        assert_eq!(f.positive_part().values(), &[0.0, 1.0, 0.0, 3.0, 0.0]);
        assert_eq!(f.negative_part().values(), &[2.0, 0.0, 0.0, 0.0, 0.5]);
    }
}
