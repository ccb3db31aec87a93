//! Uniform tensor-product grids on intervals and rectangles.
//!
//! Nodes are ordered lexicographically (`i = ix + nx * iy`). Boundary nodes
//! carry Dirichlet data; interior nodes are the solver unknowns. Quadrature
//! uses per-node cell volumes with half cells along the boundary, so that
//! integrating a constant over the whole domain is exact.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::DiscreteField;

/// Axis-aligned region used to restrict norms, integrals and stencils.
/// Membership is strict (open sets), matching open balls and open cubes.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    /// Open ball `|x - center| < radius`, expected to lie inside the domain.
    Ball { center: [f64; 2], radius: f64 },
    /// Open cube of side `side` centered at `center` (`|x_i - c_i| < side/2`).
    Cube { center: [f64; 2], side: f64 },
    /// Every node of the mesh.
    WholeDomain,
    /// Open ball centered on the boundary, intersected with the domain closure.
    BoundaryBall { center: [f64; 2], radius: f64 },
}

impl Region {
    pub fn ball(center: [f64; 2], radius: f64) -> Self {
        Region::Ball { center, radius }
    }

    pub fn cube(center: [f64; 2], side: f64) -> Self {
        Region::Cube { center, side }
    }

    pub fn boundary_ball(center: [f64; 2], radius: f64) -> Self {
        Region::BoundaryBall { center, radius }
    }

    fn contains(&self, p: [f64; 2]) -> bool {
        match *self {
            Region::Ball { center, radius } | Region::BoundaryBall { center, radius } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                (dx * dx + dy * dy).sqrt() < radius
            }
            Region::Cube { center, side } => {
                (p[0] - center[0]).abs() < side / 2.0 && (p[1] - center[1]).abs() < side / 2.0
            }
            Region::WholeDomain => true,
        }
    }
}

/// Uniform grid on an interval (1D) or a rectangle (2D).
#[derive(Debug)]
pub struct Mesh {
    dim: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    /// Node counts per axis; `shape[1] == 1` in 1D.
    shape: [usize; 2],
    spacing: [f64; 2],
    boundary: Vec<bool>,
    cell_volume: Vec<f64>,
}

impl Mesh {
    /// Uniform 1D mesh with `n` nodes on `[a, b]`; nodes `0` and `n-1` are boundary.
    pub fn interval(a: f64, b: f64, n: usize) -> Result<Arc<Mesh>> {
        if n < 3 {
            return Err(Error::InvalidMesh(format!("need at least 3 nodes, got {n}")));
        }
        if !(b > a) {
            return Err(Error::InvalidMesh(format!("empty interval [{a}, {b}]")));
        }
        let h = (b - a) / (n - 1) as f64;
        let mut boundary = vec![false; n];
        boundary[0] = true;
        boundary[n - 1] = true;
        let mut cell_volume = vec![h; n];
        cell_volume[0] = h / 2.0;
        cell_volume[n - 1] = h / 2.0;
        Ok(Arc::new(Mesh {
            dim: 1,
            lo: [a, 0.0],
            hi: [b, 0.0],
            shape: [n, 1],
            spacing: [h, 0.0],
            boundary,
            cell_volume,
        }))
    }

    /// Uniform tensor grid on the rectangle `[x0, x1] x [y0, y1]`;
    /// nodes on any edge are boundary.
    pub fn rectangle(corner0: [f64; 2], corner1: [f64; 2], nx: usize, ny: usize) -> Result<Arc<Mesh>> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidMesh(format!(
                "need at least 3 nodes per axis, got {nx} x {ny}"
            )));
        }
        if !(corner1[0] > corner0[0]) || !(corner1[1] > corner0[1]) {
            return Err(Error::InvalidMesh("degenerate rectangle".into()));
        }
        let hx = (corner1[0] - corner0[0]) / (nx - 1) as f64;
        let hy = (corner1[1] - corner0[1]) / (ny - 1) as f64;
        let n = nx * ny;
        let mut boundary = vec![false; n];
        let mut cell_volume = vec![0.0; n];
        for iy in 0..ny {
            for ix in 0..nx {
                let i = ix + nx * iy;
                let edge_x = ix == 0 || ix == nx - 1;
                let edge_y = iy == 0 || iy == ny - 1;
                boundary[i] = edge_x || edge_y;
                let wx = if edge_x { hx / 2.0 } else { hx };
                let wy = if edge_y { hy / 2.0 } else { hy };
                cell_volume[i] = wx * wy;
            }
        }
        Ok(Arc::new(Mesh {
            dim: 2,
            lo: corner0,
            hi: corner1,
            shape: [nx, ny],
            spacing: [hx, hy],
            boundary,
            cell_volume,
        }))
    }

    /// New mesh with spacing halved (node count `n -> 2n - 1` per axis).
    pub fn refine(&self) -> Arc<Mesh> {
        match self.dim {
            1 => Mesh::interval(self.lo[0], self.hi[0], 2 * self.shape[0] - 1)
                .expect("refining a valid mesh"),
            _ => Mesh::rectangle(self.lo, self.hi, 2 * self.shape[0] - 1, 2 * self.shape[1] - 1)
                .expect("refining a valid mesh"),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node counts per axis (`[n, 1]` in 1D).
    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    /// Grid steps per axis (`spacing[1] == 0` in 1D).
    pub fn spacing(&self) -> [f64; 2] {
        self.spacing
    }

    /// Largest grid step.
    pub fn max_spacing(&self) -> f64 {
        if self.dim == 1 {
            self.spacing[0]
        } else {
            self.spacing[0].max(self.spacing[1])
        }
    }

    pub fn lo(&self) -> [f64; 2] {
        self.lo
    }

    pub fn hi(&self) -> [f64; 2] {
        self.hi
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix + self.shape[0] * iy
    }

    #[inline]
    pub fn grid_coords(&self, i: usize) -> (usize, usize) {
        (i % self.shape[0], i / self.shape[0])
    }

    /// Spatial position of node `i` (second component is `0` in 1D).
    #[inline]
    pub fn position(&self, i: usize) -> [f64; 2] {
        let (ix, iy) = self.grid_coords(i);
        [
            self.lo[0] + ix as f64 * self.spacing[0],
            self.lo[1] + iy as f64 * self.spacing[1],
        ]
    }

    #[inline]
    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    #[inline]
    pub fn is_interior(&self, i: usize) -> bool {
        !self.boundary[i]
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_interior(i)).collect()
    }

    pub fn boundary_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_boundary(i)).collect()
    }

    /// Quadrature weight of node `i` (half cells at the boundary).
    #[inline]
    pub fn cell_volume(&self, i: usize) -> f64 {
        self.cell_volume[i]
    }

    /// Exact Euclidean distance to the continuous domain boundary;
    /// zero exactly on boundary nodes.
    pub fn boundary_distance(self: &Arc<Self>) -> DiscreteField {
        let values = (0..self.len())
            .map(|i| {
                let p = self.position(i);
                let dx = (p[0] - self.lo[0]).min(self.hi[0] - p[0]);
                if self.dim == 1 {
                    dx.max(0.0)
                } else {
                    let dy = (p[1] - self.lo[1]).min(self.hi[1] - p[1]);
                    dx.min(dy).max(0.0)
                }
            })
            .collect();
        DiscreteField::from_values(self.clone(), values).expect("sized to mesh")
    }

    /// Distance from point `p` to the continuous domain boundary.
    pub fn distance_to_boundary(&self, p: [f64; 2]) -> f64 {
        let dx = (p[0] - self.lo[0]).min(self.hi[0] - p[0]);
        if self.dim == 1 {
            dx
        } else {
            dx.min((p[1] - self.lo[1]).min(self.hi[1] - p[1]))
        }
    }

    /// True if `p` lies on the continuous domain boundary (within `tol`).
    pub fn on_boundary(&self, p: [f64; 2], tol: f64) -> bool {
        self.distance_to_boundary(p).abs() <= tol
    }

    /// Node indices strictly inside `region`. Empty results are legal.
    pub fn region_indices(&self, region: &Region) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| region.contains(self.position(i)))
            .collect()
    }

    /// Quadrature sum of `field` over the nodes of `region`.
    pub fn integrate(&self, field: &DiscreteField, region: &Region) -> f64 {
        self.region_indices(region)
            .iter()
            .map(|&i| field[i] * self.cell_volume[i])
            .sum()
    }

    /// Quadrature sum of `field` over an explicit node set.
    pub fn integrate_over(&self, field: &DiscreteField, nodes: &[usize]) -> f64 {
        nodes.iter().map(|&i| field[i] * self.cell_volume[i]).sum()
    }

    /// Discrete measure of a node set (sum of cell volumes).
    pub fn measure(&self, nodes: &[usize]) -> f64 {
        nodes.iter().map(|&i| self.cell_volume[i]).sum()
    }

    /// `(integral of field^s over nodes)^(1/s)`.
    pub fn lp_norm_over(&self, field: &DiscreteField, nodes: &[usize], s: f64) -> f64 {
        let sum: f64 = nodes
            .iter()
            .map(|&i| field[i].abs().powf(s) * self.cell_volume[i])
            .sum();
        sum.powf(1.0 / s)
    }

    /// Checks that the ball `B_{radius}(center)` lies inside the open domain.
    pub fn ball_inside(&self, center: [f64; 2], radius: f64) -> bool {
        let d = self.distance_to_boundary(center);
        d >= radius && radius > 0.0
    }
}
