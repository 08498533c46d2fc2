//! Manufactured-solution convergence studies for the mixed models.
//!
//! The domain is a straight path of two unit-half edges, so the vertex
//! coupling is exercised. With `x` the distance from the path start:
//!
//! * hydraulic (`R = 1`): `p = cos πx`, `q = π sin πx`, `f = π² cos πx`;
//! * Stokes (`R = ν = 1`): `p = cos πx`, `q = C sin πx` with
//!   `C = π / (R + ν π²)`, `f = C π cos πx`, and boundary pressures set to
//!   the traction `p − ν ∂s q`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fem::{DiscreteFunction, QuadPoint, QuadratureRule};
use crate::mesh::NetworkMesh;
use crate::models::{
    solve_hydraulic, solve_stokes, BoundaryConditions, Coefficients, FlowProblem,
};
use crate::network::{generate_line, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmsModel {
    Hydraulic,
    Stokes,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsLevel {
    /// Cell size.
    pub h: f64,
    pub cells_per_edge: usize,
    pub flux_error: f64,
    pub pressure_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsStudy {
    pub model: MmsModel,
    pub levels: Vec<MmsLevel>,
}

impl MmsStudy {
    /// Observed orders `log(e_k / e_{k+1}) / log(h_k / h_{k+1})` for flux
    /// and pressure between consecutive levels.
    pub fn rates(&self) -> Vec<(f64, f64)> {
        self.levels
            .windows(2)
            .map(|w| {
                let dh = libm::log(w[0].h / w[1].h);
                (
                    libm::log(w[0].flux_error / w[1].flux_error) / dh,
                    libm::log(w[0].pressure_error / w[1].pressure_error) / dh,
                )
            })
            .collect()
    }

    /// Whether both error sequences decrease strictly.
    pub fn monotone(&self) -> bool {
        self.levels.windows(2).all(|w| {
            w[1].flux_error < w[0].flux_error && w[1].pressure_error < w[0].pressure_error
        })
    }
}

const STOKES_R: f64 = 1.0;
const STOKES_NU: f64 = 1.0;

fn stokes_amplitude() -> f64 {
    PI / (STOKES_R + STOKES_NU * PI * PI)
}

/// Exact `(q, p)` at global coordinate `x`.
pub fn exact(model: MmsModel, x: f64) -> (f64, f64) {
    let p = libm::cos(PI * x);
    match model {
        MmsModel::Hydraulic => (PI * libm::sin(PI * x), p),
        MmsModel::Stokes => (stokes_amplitude() * libm::sin(PI * x), p),
    }
}

fn source(model: MmsModel, x: f64) -> f64 {
    match model {
        MmsModel::Hydraulic => PI * PI * libm::cos(PI * x),
        MmsModel::Stokes => stokes_amplitude() * PI * libm::cos(PI * x),
    }
}

fn boundary_pressure(model: MmsModel, x: f64) -> f64 {
    let (_, p) = exact(model, x);
    match model {
        MmsModel::Hydraulic => p,
        MmsModel::Stokes => p - STOKES_NU * stokes_amplitude() * PI * libm::cos(PI * x),
    }
}

/// Two-edge path of total length one, with edge `e` starting at `x = e/2`.
pub fn domain() -> Result<Network> {
    generate_line(2, 1.0, 0.1)
}

fn global_x(net: &Network, e: usize, s: f64) -> f64 {
    net.position(net.endpoints(e).0)[0] + s
}

/// L² norm of `u_h − u` over the mesh, by a 6-point rule per cell.
pub fn l2_error(
    net: &Network,
    u: &DiscreteFunction,
    exact: impl Fn(f64) -> f64,
) -> Result<f64> {
    let rule = QuadratureRule::gauss_legendre(6)?;
    let mut sum = 0.0;
    for e in 0..u.space.num_edges() {
        let h = u.space.cell_size(e);
        for k in 0..u.space.cells_per_edge() {
            for (x, w) in rule.iter() {
                let s = (k as f64 + x) * h;
                let d = u.eval_cell(e, k, x) - exact(global_x(net, e, s));
                sum += w * h * d * d;
            }
        }
    }
    Ok(libm::sqrt(sum))
}

/// Errors at `levels` meshes with `base_cells · 2^k` cells per edge.
pub fn run_study(model: MmsModel, levels: usize, base_cells: usize) -> Result<MmsStudy> {
    if levels < 2 {
        return Err(Error::InvalidParameter("a convergence study needs at least two levels".into()));
    }
    let net = domain()?;
    let mut mesh = NetworkMesh::build(&net, base_cells)?;
    let mut out = Vec::with_capacity(levels);
    let bcs = BoundaryConditions::new()
        .pressure(0, boundary_pressure(model, 0.0))
        .pressure(2, boundary_pressure(model, 1.0));
    for level in 0..levels {
        if level > 0 {
            mesh = mesh.refine();
        }
        let coeffs = match model {
            MmsModel::Hydraulic => Coefficients::uniform(&mesh, 0.0, 1.0, 1.0),
            MmsModel::Stokes => Coefficients::uniform(&mesh, STOKES_NU, STOKES_R, 1.0),
        };
        let f = |p: &QuadPoint| source(model, global_x(&net, p.edge, p.s));
        let problem = FlowProblem {
            net: &net,
            mesh: &mesh,
            coeffs: &coeffs,
            bcs: &bcs,
            source: &f,
        };
        let sol = match model {
            MmsModel::Hydraulic => solve_hydraulic(&problem)?,
            MmsModel::Stokes => solve_stokes(&problem)?,
        };
        out.push(MmsLevel {
            h: mesh.max_cell_size(),
            cells_per_edge: mesh.cells_per_edge,
            flux_error: l2_error(&net, &sol.flux, |x| exact(model, x).0)?,
            pressure_error: l2_error(&net, &sol.pressure, |x| exact(model, x).1)?,
        });
    }
    Ok(MmsStudy { model, levels: out })
}
