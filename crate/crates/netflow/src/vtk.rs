//! Legacy ASCII VTK polyline export.
//!
//! Points are the mesh nodes, lines are the cells. Point data carries the
//! scalars `pressure` and `flux` and the vector `flux_tangent = q τ`.
//! Flux is discontinuous at graph vertices; a vertex node reports the value
//! of its lowest-index incident edge.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use netflow_core::fem::DiscreteFunction;
use netflow_core::mesh::tangents;
use netflow_core::models::Solution;
use netflow_core::{Network, NetworkMesh};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NodalFields {
    pub pressure: Vec<f64>,
    pub flux: Vec<f64>,
    pub flux_tangent: Vec<[f64; 3]>,
}

impl NodalFields {
    fn sample(
        net: &Network,
        mesh: &NetworkMesh,
        pressure: impl Fn(usize, f64) -> f64,
        flux: impl Fn(usize, f64) -> f64,
        vertex_pressure: impl Fn(usize) -> f64,
    ) -> Self {
        let n = mesh.nodes.len();
        let tau = tangents(net);
        let mut fields = NodalFields {
            pressure: vec![0.0; n],
            flux: vec![0.0; n],
            flux_tangent: vec![[0.0; 3]; n],
        };
        let mut vertex_done = vec![false; mesh.num_vertices()];
        for e in 0..net.num_edges() {
            let s = mesh.arclengths(e);
            for (k, &node) in mesh.edge_nodes(e).iter().enumerate() {
                let q = flux(e, s[k]);
                if let Some(v) = mesh.node_vertex[node] {
                    if vertex_done[v] {
                        continue;
                    }
                    vertex_done[v] = true;
                    fields.pressure[node] = vertex_pressure(v);
                } else {
                    fields.pressure[node] = pressure(e, s[k]);
                }
                fields.flux[node] = q;
                fields.flux_tangent[node] = [q * tau[e][0], q * tau[e][1], q * tau[e][2]];
            }
        }
        fields
    }

    /// Samples a mixed solution; vertex pressures come from the
    /// multipliers at interior vertices.
    pub fn from_solution(net: &Network, mesh: &NetworkMesh, sol: &Solution) -> Self {
        Self::sample(
            net,
            mesh,
            |e, s| sol.pressure.eval(e, s).unwrap_or(f64::NAN),
            |e, s| sol.flux.eval(e, s).unwrap_or(f64::NAN),
            |v| sol.vertex_pressure(v),
        )
    }

    /// Samples a continuous Poisson field `u` with flux `-∂s u`.
    pub fn from_potential(net: &Network, mesh: &NetworkMesh, u: &DiscreteFunction) -> Self {
        let eval = |e: usize, s: f64| u.eval(e, s).unwrap_or(f64::NAN);
        Self::sample(
            net,
            mesh,
            eval,
            |e, s| -u.dds(e, s).unwrap_or(f64::NAN),
            |v| {
                let e = (0..net.num_edges())
                    .find(|&e| {
                        let (a, b) = net.endpoints(e);
                        a == v || b == v
                    })
                    .expect("vertices are incident to an edge");
                let (a, _) = net.endpoints(e);
                eval(e, if a == v { 0.0 } else { net.length(e) })
            },
        )
    }
}

pub fn vtk_to_string(mesh: &NetworkMesh, fields: &NodalFields, title: &str) -> String {
    let n = mesh.nodes.len();
    let mut out = String::new();
    // the header line is at most 256 characters and may not contain newlines
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str(&title);
    out.push_str("\nASCII\nDATASET POLYDATA\n");
    writeln!(out, "POINTS {n} double").unwrap();
    for p in &mesh.nodes {
        writeln!(out, "{:e} {:e} {:e}", p[0], p[1], p[2]).unwrap();
    }
    let cells = mesh.cells.len();
    writeln!(out, "LINES {cells} {}", 3 * cells).unwrap();
    for c in &mesh.cells {
        writeln!(out, "2 {} {}", c[0], c[1]).unwrap();
    }
    writeln!(out, "POINT_DATA {n}").unwrap();
    for (name, values) in [("pressure", &fields.pressure), ("flux", &fields.flux)] {
        writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
        for v in values {
            writeln!(out, "{v:e}").unwrap();
        }
    }
    out.push_str("VECTORS flux_tangent double\n");
    for v in &fields.flux_tangent {
        writeln!(out, "{:e} {:e} {:e}", v[0], v[1], v[2]).unwrap();
    }
    out
}

pub fn write_vtk(path: &Path, mesh: &NetworkMesh, fields: &NodalFields, title: &str) -> Result<()> {
    fs::write(path, vtk_to_string(mesh, fields, title)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use netflow_core::models::{solve_hydraulic, BoundaryConditions, Coefficients, FlowProblem};
    use netflow_core::generate_y;

    fn y_export(cells: usize) -> (NetworkMesh, NodalFields, Solution) {
        let net = generate_y([1e-3; 3], [5e-5; 3]).unwrap();
        let mesh = NetworkMesh::build(&net, cells).unwrap();
        let coeffs = Coefficients::from_network(&net, &mesh, 7e-4).unwrap();
        let bcs = BoundaryConditions::inlet_outlet(&net, 1.0, 0.0).unwrap();
        let sol = solve_hydraulic(&FlowProblem {
            net: &net,
            mesh: &mesh,
            coeffs: &coeffs,
            bcs: &bcs,
            source: &|_| 0.0,
        })
        .unwrap();
        let fields = NodalFields::from_solution(&net, &mesh, &sol);
        (mesh, fields, sol)
    }

    #[test]
    fn y_network_layout() {
        let (mesh, fields, sol) = y_export(1);
        let text = vtk_to_string(&mesh, &fields, "y");
        assert!(text.contains("POINTS 4 double"));
        assert!(text.contains("LINES 3 9"));
        assert!(text.contains("SCALARS pressure double 1"));
        assert!(text.contains("SCALARS flux double 1"));
        assert!(text.contains("VECTORS flux_tangent double"));
        let junction = mesh.node_vertex.iter().position(|v| *v == Some(1)).unwrap();
        assert_eq!(fields.pressure[junction], sol.multipliers[0]);
    }

    #[test]
    fn tangent_magnitude_matches_flux() {
        let (_, fields, _) = y_export(5);
        for (q, v) in fields.flux.iter().zip(&fields.flux_tangent) {
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            assert!((norm - q.abs()).abs() <= 1e-15 * q.abs().max(1e-300));
        }
    }

    #[test]
    fn output_is_deterministic() {
        let (mesh, fields, _) = y_export(3);
        assert_eq!(vtk_to_string(&mesh, &fields, "a"), vtk_to_string(&mesh, &fields, "a"));
    }
}
