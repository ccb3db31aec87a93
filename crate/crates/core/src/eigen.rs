//! Generalized eigenvalue problem `-lap(phi) = gamma * cbar * phi` on a node
//! subset with Dirichlet data, solved by inverse power iteration on the
//! factored stiffness matrix.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::DiscreteField;
use crate::mesh::Mesh;
use crate::solver::{assemble_reaction, DirichletMap};

/// First eigenpair of `-lap(phi) = gamma * weight * phi` over `nodes`
/// (zero Dirichlet data outside). The weight must be nonnegative with at
/// least one positive node. The eigenfunction is normalized to `sup = 1`
/// and positive on the subset.
pub fn first_eigenpair(
    mesh: &Arc<Mesh>,
    nodes: &[usize],
    weight: &DiscreteField,
) -> Result<(f64, DiscreteField)> {
    if nodes.is_empty() {
        return Err(Error::Hypothesis("empty node set for the eigenproblem".into()));
    }
    if nodes.iter().any(|&i| weight[i] < 0.0) {
        return Err(Error::Hypothesis("eigenproblem weight must be nonnegative".into()));
    }
    if !nodes.iter().any(|&i| weight[i] > 0.0) {
        return Err(Error::Hypothesis("eigenproblem weight vanishes on the node set".into()));
    }
    let map = DirichletMap::new(mesh, nodes.to_vec());
    let lu = assemble_reaction(mesh, &map, |_| 0.0).factor()?;
    let b: Vec<f64> = map.nodes.iter().map(|&i| weight[i]).collect();

    let m = map.len();
    let mut x = vec![1.0; m];
    let mut gamma = 0.0f64;
    let mut converged = false;
    let mut last_residual = f64::INFINITY;
    for _ in 0..500 {
        // y = A^{-1} (B x), converging to the largest eigenvalue of A^{-1} B,
        // i.e. the smallest gamma of the pencil (A, B)
        let bx: Vec<f64> = (0..m).map(|k| b[k] * x[k]).collect();
        let y = lu.solve(&bx);
        let norm = y.iter().fold(0.0f64, |s, &v| s.max(v.abs()));
        if norm == 0.0 {
            return Err(Error::EigenDiverged(f64::INFINITY));
        }
        let y: Vec<f64> = y.iter().map(|&v| v / norm).collect();
        // generalized Rayleigh quotient gamma = (y' A y)/(y' B y);
        // A y is cheapest through the residual of the smoothing step
        let by: Vec<f64> = (0..m).map(|k| b[k] * y[k]).collect();
        let ay_inv = lu.solve(&by); // = A^{-1} B y
        let num: f64 = (0..m).map(|k| y[k] * by[k]).sum();
        let den: f64 = (0..m).map(|k| ay_inv[k] * by[k]).sum();
        let new_gamma = num / den;
        // eigen-residual in the smoothed metric
        let res: f64 = (0..m)
            .map(|k| (ay_inv[k] - y[k] / new_gamma).abs())
            .fold(0.0, f64::max);
        let drift = (new_gamma - gamma).abs() / new_gamma.abs().max(1e-300);
        gamma = new_gamma;
        x = y;
        last_residual = res;
        if drift < 1e-13 && res < 1e-11 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::EigenDiverged(last_residual));
    }

    // orient positive and normalize to sup = 1
    let sum: f64 = x.iter().sum();
    let sign = if sum < 0.0 { -1.0 } else { 1.0 };
    let sup = x.iter().fold(0.0f64, |s, &v| s.max(v.abs()));
    let mut phi = DiscreteField::zeros(mesh.clone());
    for (k, &i) in map.nodes.iter().enumerate() {
        phi[i] = sign * x[k] / sup;
    }
    Ok((gamma, phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Region;

    #[test]
    fn dirichlet_eigenvalue_on_interval() {
        // -phi'' = gamma phi on (0,1): gamma_1 = pi^2, phi = sin(pi x)
        let mesh = Mesh::interval(0.0, 1.0, 129).unwrap();
        let w = DiscreteField::constant(mesh.clone(), 1.0);
        let nodes = mesh.interior_indices();
        let (gamma, phi) = first_eigenpair(&mesh, &nodes, &w).unwrap();
        let exact = std::f64::consts::PI.powi(2);
        assert!((gamma - exact).abs() / exact < 1e-4, "gamma = {gamma}");
        assert!(nodes.iter().all(|&i| phi[i] > 0.0));
    }

    #[test]
    fn eigenvalue_on_ball_matches_half_width_formula() {
        // ball of radius R in 1D with unit weight: gamma_1 = (pi/(2R))^2
        let mesh = Mesh::interval(0.0, 1.0, 257).unwrap();
        let w = DiscreteField::constant(mesh.clone(), 1.0);
        let r = 0.25;
        let nodes = mesh.region_indices(&Region::ball([0.5, 0.0], r));
        let (gamma, _) = first_eigenpair(&mesh, &nodes, &w).unwrap();
        let exact = (std::f64::consts::PI / (2.0 * r)).powi(2);
        assert!(
            (gamma - exact).abs() / exact < 0.01,
            "gamma = {gamma}, exact = {exact}"
        );
    }

    #[test]
    fn rectangle_eigenvalue() {
        // unit square: gamma_1 = 2 pi^2
        let mesh = Mesh::rectangle([0.0, 0.0], [1.0, 1.0], 49, 49).unwrap();
        let w = DiscreteField::constant(mesh.clone(), 1.0);
        let nodes = mesh.interior_indices();
        let (gamma, phi) = first_eigenpair(&mesh, &nodes, &w).unwrap();
        let exact = 2.0 * std::f64::consts::PI.powi(2);
        assert!((gamma - exact).abs() / exact < 1e-3, "gamma = {gamma}");
        assert!(nodes.iter().all(|&i| phi[i] > 0.0));
    }

    #[test]
    fn rejects_bad_weights() {
        let mesh = Mesh::interval(0.0, 1.0, 17).unwrap();
        let nodes = mesh.interior_indices();
        let negative = DiscreteField::constant(mesh.clone(), -1.0);
        assert!(first_eigenpair(&mesh, &nodes, &negative).is_err());
        let zero = DiscreteField::zeros(mesh.clone());
        assert!(first_eigenpair(&mesh, &nodes, &zero).is_err());
    }
}
