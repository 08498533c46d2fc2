//! Per-edge Lagrange spaces, continuous inside each edge and broken at
//! graph vertices: every edge owns its endpoint dofs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mesh::NetworkMesh;

/// Reference element on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Element {
    /// Piecewise constant, one dof per cell.
    P0,
    /// Linear, dofs at the cell endpoints.
    P1,
    /// Quadratic, dofs at endpoints and midpoint (ordered left, mid, right).
    P2,
}

impl Element {
    pub fn dofs_per_cell(self) -> usize {
        match self {
            Element::P0 => 1,
            Element::P1 => 2,
            Element::P2 => 3,
        }
    }

    pub fn degree(self) -> usize {
        match self {
            Element::P0 => 0,
            Element::P1 => 1,
            Element::P2 => 2,
        }
    }

    /// Basis values at reference coordinate `x`.
    pub fn values(self, x: f64) -> [f64; 3] {
        match self {
            Element::P0 => [1.0, 0.0, 0.0],
            Element::P1 => [1.0 - x, x, 0.0],
            Element::P2 => [
                2.0 * (x - 0.5) * (x - 1.0),
                -4.0 * x * (x - 1.0),
                2.0 * x * (x - 0.5),
            ],
        }
    }

    /// Basis derivatives with respect to the reference coordinate.
    pub fn derivatives(self, x: f64) -> [f64; 3] {
        match self {
            Element::P0 => [0.0; 3],
            Element::P1 => [-1.0, 1.0, 0.0],
            Element::P2 => [4.0 * x - 3.0, 4.0 - 8.0 * x, 4.0 * x - 1.0],
        }
    }

    /// Reference coordinates of the local dofs (P0: the midpoint).
    pub fn nodes(self) -> &'static [f64] {
        match self {
            Element::P0 => &[0.5],
            Element::P1 => &[0.0, 1.0],
            Element::P2 => &[0.0, 0.5, 1.0],
        }
    }
}

/// Scalar finite-element space over a [`NetworkMesh`], broken at vertices.
///
/// Global numbering: edges in index order, and within an edge the dofs
/// run from source to target.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpace {
    pub element: Element,
    cells_per_edge: usize,
    edge_lengths: Vec<f64>,
}

impl EdgeSpace {
    pub fn new(mesh: &NetworkMesh, element: Element) -> Self {
        EdgeSpace {
            element,
            cells_per_edge: mesh.cells_per_edge,
            edge_lengths: (0..mesh.num_edges()).map(|e| mesh.edge_length(e)).collect(),
        }
    }

    /// Flux space of polynomial degree 1 or 2.
    pub fn flux(mesh: &NetworkMesh, degree: usize) -> Result<Self> {
        let element = match degree {
            1 => Element::P1,
            2 => Element::P2,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "flux degree must be 1 or 2, got {degree}"
                )))
            }
        };
        Ok(Self::new(mesh, element))
    }

    pub fn num_edges(&self) -> usize {
        self.edge_lengths.len()
    }

    pub fn cells_per_edge(&self) -> usize {
        self.cells_per_edge
    }

    pub fn num_cells(&self) -> usize {
        self.cells_per_edge * self.num_edges()
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        self.edge_lengths[e]
    }

    pub fn cell_size(&self, e: usize) -> f64 {
        self.edge_lengths[e] / self.cells_per_edge as f64
    }

    pub fn dofs_per_edge(&self) -> usize {
        let n = self.cells_per_edge;
        match self.element {
            Element::P0 => n,
            Element::P1 => n + 1,
            Element::P2 => 2 * n + 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.dofs_per_edge() * self.num_edges()
    }

    /// Global dof of local basis function `i` in local cell `k` of edge `e`.
    pub fn dof(&self, e: usize, k: usize, i: usize) -> usize {
        let base = e * self.dofs_per_edge();
        match self.element {
            Element::P0 => base + k,
            Element::P1 => base + k + i,
            Element::P2 => base + 2 * k + i,
        }
    }

    pub fn cell_dofs(&self, e: usize, k: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for (i, d) in out.iter_mut().enumerate().take(self.element.dofs_per_cell()) {
            *d = self.dof(e, k, i);
        }
        out
    }

    /// Dof sitting at the source end of edge `e`.
    pub fn first_dof(&self, e: usize) -> usize {
        debug_assert!(self.element != Element::P0);
        e * self.dofs_per_edge()
    }

    /// Dof sitting at the target end of edge `e`.
    pub fn last_dof(&self, e: usize) -> usize {
        debug_assert!(self.element != Element::P0);
        (e + 1) * self.dofs_per_edge() - 1
    }

    /// Arclength of every dof on edge `e` (cell midpoints for P0).
    pub fn dof_arclengths(&self, e: usize) -> Vec<f64> {
        let h = self.cell_size(e);
        let mut out = vec![0.0; self.dofs_per_edge()];
        for k in 0..self.cells_per_edge {
            for (i, x) in self.element.nodes().iter().enumerate() {
                out[self.dof(e, k, i) - self.dof(e, 0, 0)] = (k as f64 + x) * h;
            }
        }
        out
    }

    /// Whether the two spaces live on the same mesh.
    pub fn same_mesh(&self, other: &EdgeSpace) -> bool {
        self.cells_per_edge == other.cells_per_edge && self.edge_lengths == other.edge_lengths
    }

    fn locate(&self, e: usize, s: f64) -> Result<(usize, f64)> {
        let len = self.edge_lengths[e];
        let tol = 1e-12 * len;
        if !(s >= -tol && s <= len + tol) {
            return Err(Error::InvalidParameter(format!(
                "arclength {s} outside edge {e} of length {len}"
            )));
        }
        let h = self.cell_size(e);
        let x = (s / h).clamp(0.0, self.cells_per_edge as f64);
        let k = (libm::ceil(x) as usize).saturating_sub(1).min(self.cells_per_edge - 1);
        Ok((k, ((s - k as f64 * h) / h).clamp(0.0, 1.0)))
    }
}

/// Coefficient vector over an [`EdgeSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFunction {
    pub space: EdgeSpace,
    pub coeffs: Vec<f64>,
}

impl DiscreteFunction {
    pub fn new(space: EdgeSpace, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                what: "discrete function",
                expected: space.dim(),
                found: coeffs.len(),
            });
        }
        Ok(DiscreteFunction { space, coeffs })
    }

    pub fn zeros(space: EdgeSpace) -> Self {
        let coeffs = vec![0.0; space.dim()];
        DiscreteFunction { space, coeffs }
    }

    /// Nodal interpolant of `f(edge, s)`; P0 takes the cell-midpoint value.
    pub fn interpolate(space: EdgeSpace, f: impl Fn(usize, f64) -> f64) -> Self {
        let mut coeffs = vec![0.0; space.dim()];
        for e in 0..space.num_edges() {
            let base = space.dof(e, 0, 0);
            for (i, s) in space.dof_arclengths(e).into_iter().enumerate() {
                coeffs[base + i] = f(e, s);
            }
        }
        DiscreteFunction { space, coeffs }
    }

    /// Value at arclength `s` on edge `e` (left cell at cell boundaries).
    pub fn eval(&self, e: usize, s: f64) -> Result<f64> {
        let (k, x) = self.space.locate(e, s)?;
        Ok(self.eval_cell(e, k, x))
    }

    /// Value at reference coordinate `x` of local cell `k` on edge `e`.
    pub fn eval_cell(&self, e: usize, k: usize, x: f64) -> f64 {
        let phi = self.space.element.values(x);
        let dofs = self.space.cell_dofs(e, k);
        (0..self.space.element.dofs_per_cell())
            .map(|i| phi[i] * self.coeffs[dofs[i]])
            .sum()
    }

    /// Derivative along the edge tangent at reference coordinate `x` of
    /// local cell `k` on edge `e`.
    pub fn dds_cell(&self, e: usize, k: usize, x: f64) -> f64 {
        let dphi = self.space.element.derivatives(x);
        let dofs = self.space.cell_dofs(e, k);
        let h = self.space.cell_size(e);
        (0..self.space.element.dofs_per_cell())
            .map(|i| dphi[i] * self.coeffs[dofs[i]])
            .sum::<f64>()
            / h
    }

    /// Derivative along the tangent of edge `e` at arclength `s`. At cell
    /// boundaries the one-sided derivative of the left cell is returned.
    pub fn dds(&self, e: usize, s: f64) -> Result<f64> {
        let (k, x) = self.space.locate(e, s)?;
        Ok(self.dds_cell(e, k, x))
    }

    /// Values at the source and target ends of edge `e`.
    pub fn endpoint_values(&self, e: usize) -> (f64, f64) {
        let n = self.space.cells_per_edge();
        (self.eval_cell(e, 0, 0.0), self.eval_cell(e, n - 1, 1.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
