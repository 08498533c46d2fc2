//! Network flow models: Poisson, hydraulic (Darcy-type) and reduced Stokes.
//!
//! The mixed models solve, on every edge,
//!
//! ```text
//! -∂s(ν ∂s q) + R q + ∂s p = 0,    ∂s q = f,
//! ```
//!
//! with `ν = 0` for the hydraulic model, and `[[q]]_b = 0` at every
//! interior vertex. Pressure conditions are natural, flux conditions
//! essential. A boundary vertex without a condition gets `p = 0`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fem::assembly::default_order;
use crate::fem::{
    assemble_divergence, assemble_jump_matrix, assemble_load, assemble_saddle,
    assemble_stiffness, assemble_weighted_mass, solve_matrix, solve_sparse, DiscreteFunction,
    EdgeSpace, Element, QuadPoint, QuadratureRule, Triplets,
};
use crate::mesh::NetworkMesh;
use crate::network::{classify_vertices, BoundaryKind, Network, VertexClassification};

/// CSF-like dynamic viscosity in Pa·s.
pub const DEFAULT_VISCOSITY: f64 = 7.0e-4;

/// Poiseuille resistance per unit length of an annulus `R1 < r < R2`
/// (Pa·s/m⁴): `8μ / (π [R2⁴ − R1⁴ − (R2² − R1²)² / ln(R2/R1)])`.
pub fn annular_resistance(mu: f64, r1: f64, r2: f64) -> Result<f64> {
    if !(r1 > 0.0 && r2 > r1 && r2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "annulus needs 0 < R1 < R2, got R1 = {r1}, R2 = {r2}"
        )));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("viscosity must be positive, got {mu}")));
    }
    let a2 = r2 * r2 - r1 * r1;
    let shape = r2 * r2 * r2 * r2 - r1 * r1 * r1 * r1 - a2 * a2 / libm::log(r2 / r1);
    Ok(8.0 * mu / (core::f64::consts::PI * shape))
}

/// Cross-section area `π (R2² − R1²)` of the annulus.
pub fn annulus_area(r1: f64, r2: f64) -> f64 {
    core::f64::consts::PI * (r2 * r2 - r1 * r1)
}

/// Physical coefficients, sampled per mesh cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    /// Dynamic viscosity (Pa·s).
    pub viscosity: f64,
    /// Flow resistance per unit length (Pa·s/m⁴), one value per cell.
    pub resistance: Vec<f64>,
    /// Cross-section area (m²), one value per cell.
    pub area: Vec<f64>,
}

impl Coefficients {
    /// Per-edge annular Poiseuille resistance (or the edge's override) and
    /// annulus area, constant along each edge.
    pub fn from_network(net: &Network, mesh: &NetworkMesh, viscosity: f64) -> Result<Self> {
        let mut per_edge = Vec::with_capacity(net.num_edges());
        for e in net.edges() {
            let r = match e.resistance {
                Some(r) => r,
                None => annular_resistance(viscosity, e.inner_radius, e.outer_radius)?,
            };
            per_edge.push((r, annulus_area(e.inner_radius, e.outer_radius)));
        }
        let resistance = mesh.cell_edge.iter().map(|&e| per_edge[e].0).collect();
        let area = mesh.cell_edge.iter().map(|&e| per_edge[e].1).collect();
        Ok(Coefficients {
            viscosity,
            resistance,
            area,
        })
    }

    /// The same values on every cell.
    pub fn uniform(mesh: &NetworkMesh, viscosity: f64, resistance: f64, area: f64) -> Self {
        Coefficients {
            viscosity,
            resistance: vec![resistance; mesh.num_cells()],
            area: vec![area; mesh.num_cells()],
        }
    }

    fn validate(&self, mesh: &NetworkMesh) -> Result<()> {
        for (what, v) in [("resistance", &self.resistance), ("area", &self.area)] {
            if v.len() != mesh.num_cells() {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: mesh.num_cells(),
                    found: v.len(),
                });
            }
        }
        if !(self.viscosity >= 0.0 && self.viscosity.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "viscosity must be finite and non-negative, got {}",
                self.viscosity
            )));
        }
        for (c, (&r, &a)) in self.resistance.iter().zip(&self.area).enumerate() {
            if !(r > 0.0 && r.is_finite() && a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidCoefficient {
                    edge: mesh.cell_edge[c],
                    s: mesh.cell_interval(c).0,
                    value: if r > 0.0 { a } else { r },
                });
            }
        }
        Ok(())
    }

    fn cell(&self, mesh: &NetworkMesh, p: &QuadPoint) -> usize {
        mesh.cell(p.edge, p.cell)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    /// Prescribed pressure (Pa).
    Pressure(f64),
    /// Prescribed flux leaving the network through the vertex (m³/s);
    /// negative values mean inflow.
    Outflow(f64),
}

/// Conditions keyed by vertex id. At most one condition per vertex.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryConditions {
    pub conditions: BTreeMap<u64, BoundaryCondition>,
}

impl BoundaryConditions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pressure(mut self, vertex: u64, p: f64) -> Self {
        self.conditions.insert(vertex, BoundaryCondition::Pressure(p));
        self
    }

    pub fn outflow(mut self, vertex: u64, q: f64) -> Self {
        self.conditions.insert(vertex, BoundaryCondition::Outflow(q));
        self
    }

    /// Same pressure at every boundary vertex.
    pub fn uniform_pressure(net: &Network, p: f64) -> Result<Self> {
        let cls = classify_vertices(net)?;
        let mut bcs = Self::new();
        for &(v, _) in &cls.boundary {
            bcs = bcs.pressure(net.vertices()[v].id, p);
        }
        Ok(bcs)
    }

    /// `p_in` at inlets, `p_out` at outlets.
    pub fn inlet_outlet(net: &Network, p_in: f64, p_out: f64) -> Result<Self> {
        let cls = classify_vertices(net)?;
        let mut bcs = Self::new();
        for &(v, kind) in &cls.boundary {
            let p = match kind {
                BoundaryKind::Inlet => p_in,
                BoundaryKind::Outlet => p_out,
            };
            bcs = bcs.pressure(net.vertices()[v].id, p);
        }
        Ok(bcs)
    }

    /// Resolves ids to vertex indices and checks every condition sits on
    /// a boundary vertex with a finite value.
    fn resolve(
        &self,
        net: &Network,
        cls: &VertexClassification,
    ) -> Result<Vec<(usize, BoundaryCondition)>> {
        let mut out = Vec::with_capacity(self.conditions.len());
        for (&id, &bc) in &self.conditions {
            let v = net.vertex_index(id)?;
            if !cls.is_boundary(v) {
                return Err(Error::InvalidParameter(format!(
                    "boundary condition on vertex {id}, which is not a degree-one vertex"
                )));
            }
            let value = match bc {
                BoundaryCondition::Pressure(p) | BoundaryCondition::Outflow(p) => p,
            };
            if !value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite boundary value on vertex {id}"
                )));
            }
            out.push((v, bc));
        }
        Ok(out)
    }
}

/// Flux/pressure element pair of a mixed discretisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementPair {
    pub flux: Element,
    pub pressure: Element,
}

impl ElementPair {
    /// P1 flux with P0 pressure.
    pub const HYDRAULIC: ElementPair = ElementPair {
        flux: Element::P1,
        pressure: Element::P0,
    };
    /// P2 flux with edgewise-continuous P1 pressure.
    pub const STOKES: ElementPair = ElementPair {
        flux: Element::P2,
        pressure: Element::P1,
    };
}

/// Discrete solution of a mixed network model.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Cross-section flux along each edge tangent (m³/s).
    pub flux: DiscreteFunction,
    /// Pressure (Pa).
    pub pressure: DiscreteFunction,
    /// Multiplier per interior vertex, in `classification.bifurcations`
    /// order; it equals the vertex pressure.
    pub multipliers: Vec<f64>,
    pub classification: VertexClassification,
    /// `∫ f ds` over the whole network.
    pub source_integral: f64,
    /// `∫ |f| ds` over the whole network.
    pub source_magnitude: f64,
    /// Flux the boundary pressures could drive through the most conductive
    /// edge: `max |p_bc| / min_e ∫_e R ds`.
    pub drive_scale: f64,
    endpoints: Vec<(usize, usize)>,
    incoming: Vec<Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
    boundary_pressure: BTreeMap<usize, f64>,
}

impl Solution {
    /// Flux leaving the network through boundary vertex `v` (index).
    /// Inlets typically report negative values.
    pub fn outflow(&self, v: usize) -> Result<f64> {
        if !self.classification.is_boundary(v) {
            return Err(Error::InvalidParameter(format!(
                "vertex index {v} is not a boundary vertex"
            )));
        }
        if let Some(&e) = self.incoming[v].first() {
            Ok(self.flux.endpoint_values(e).1)
        } else {
            let e = self.outgoing[v][0];
            Ok(-self.flux.endpoint_values(e).0)
        }
    }

    /// `Σ_in q(v) − Σ_out q(v)` at interior vertex `v` (index).
    pub fn flux_jump(&self, v: usize) -> Result<f64> {
        if self.classification.bifurcation_row(v).is_none() {
            return Err(Error::InvalidParameter(format!(
                "vertex index {v} is not an interior vertex"
            )));
        }
        let inflow: f64 = self.incoming[v].iter().map(|&e| self.flux.endpoint_values(e).1).sum();
        let outflow: f64 = self.outgoing[v].iter().map(|&e| self.flux.endpoint_values(e).0).sum();
        Ok(inflow - outflow)
    }

    /// Largest `|[[q]]_b|` over interior vertices.
    pub fn max_jump(&self) -> f64 {
        self.classification
            .bifurcations
            .iter()
            .map(|&b| self.flux_jump(b).map_or(f64::INFINITY, f64::abs))
            .fold(0.0, f64::max)
    }

    /// Sum of [`Solution::outflow`] over all boundary vertices.
    pub fn net_outflow(&self) -> f64 {
        self.classification
            .boundary
            .iter()
            .map(|&(v, _)| self.outflow(v).unwrap_or(f64::NAN))
            .sum()
    }

    /// Total inflow through inlets and total outflow through outlets,
    /// both as positive volumes per second when flow follows the edges.
    pub fn inlet_outlet_totals(&self) -> (f64, f64) {
        let inflow = self
            .classification
            .inlets()
            .map(|v| -self.outflow(v).unwrap_or(f64::NAN))
            .sum();
        let outflow = self
            .classification
            .outlets()
            .map(|v| self.outflow(v).unwrap_or(f64::NAN))
            .sum();
        (inflow, outflow)
    }

    /// `|Σ outflow − ∫ f|`, the global mass-balance defect.
    pub fn balance_residual(&self) -> f64 {
        (self.net_outflow() - self.source_integral).abs()
    }

    /// Natural scale for balance checks: `max(‖q‖∞, ∫|f|, drive_scale)`.
    pub fn balance_scale(&self) -> f64 {
        self.flux.max_abs().max(self.source_magnitude).max(self.drive_scale)
    }

    /// Pressure at a vertex: the multiplier at interior vertices, the
    /// prescribed or adjacent discrete value at boundary vertices.
    pub fn vertex_pressure(&self, v: usize) -> f64 {
        if let Some(row) = self.classification.bifurcation_row(v) {
            return self.multipliers[row];
        }
        if let Some(p) = self.boundary_pressure.get(&v) {
            return *p;
        }
        if let Some(&e) = self.incoming[v].first() {
            self.pressure.endpoint_values(e).1
        } else {
            self.pressure.endpoint_values(self.outgoing[v][0]).0
        }
    }

    /// Mean flux over edge `e`.
    pub fn mean_flux(&self, e: usize) -> f64 {
        let n = self.flux.space.cells_per_edge();
        let rule = QuadratureRule::gauss_legendre(3).expect("valid order");
        (0..n)
            .map(|k| rule.iter().map(|(x, w)| w * self.flux.eval_cell(e, k, x)).sum::<f64>())
            .sum::<f64>()
            / n as f64
    }

    /// Source and target vertex indices of edge `e`.
    pub fn edge_endpoints(&self, e: usize) -> (usize, usize) {
        self.endpoints[e]
    }
}

/// Everything a mixed solve needs besides the discretisation choice.
#[derive(Clone, Copy)]
pub struct FlowProblem<'a> {
    pub net: &'a Network,
    pub mesh: &'a NetworkMesh,
    pub coeffs: &'a Coefficients,
    pub bcs: &'a BoundaryConditions,
    /// Volume source per unit length (m³/s per m).
    pub source: &'a dyn Fn(&QuadPoint) -> f64,
}

/// Assembles and solves the mixed system for the given element pair.
/// With `viscous` the axial term `(ν ∂s q, ∂s ψ)` with `ν = μ / A` is added.
pub fn solve_mixed(problem: &FlowProblem<'_>, pair: ElementPair, viscous: bool) -> Result<Solution> {
    let FlowProblem {
        net,
        mesh,
        coeffs,
        bcs,
        source,
    } = *problem;
    if mesh.num_edges() != net.num_edges() {
        return Err(Error::DimensionMismatch {
            what: "mesh edges",
            expected: net.num_edges(),
            found: mesh.num_edges(),
        });
    }
    coeffs.validate(mesh)?;
    let cls = classify_vertices(net)?;
    let resolved = bcs.resolve(net, &cls)?;

    let qs = EdgeSpace::new(mesh, pair.flux);
    let ps = EdgeSpace::new(mesh, pair.pressure);
    let order = default_order(&qs);
    let mut a = assemble_weighted_mass(&qs, |p| coeffs.resistance[coeffs.cell(mesh, p)], order)?;
    if viscous && coeffs.viscosity > 0.0 {
        let k = assemble_stiffness(
            &qs,
            |p| {
                let c = coeffs.cell(mesh, p);
                coeffs.viscosity / coeffs.area[c]
            },
            order,
        )?;
        a = a.add(&k);
    }
    let b = assemble_divergence(&qs, &ps)?;
    let j = assemble_jump_matrix(&qs, net, &cls)?;

    let load_order = pair.pressure.degree() + 3;
    let h: Vec<f64> = assemble_load(&ps, source, load_order)?.iter().map(|v| -v).collect();
    let (source_integral, source_magnitude) = integrate_source(mesh, source, load_order)?;

    let mut g = vec![0.0; qs.dim()];
    let mut fixed = Vec::new();
    let mut boundary_pressure = BTreeMap::new();
    for &(v, bc) in &resolved {
        let (e, at_target) = boundary_edge(net, v);
        match bc {
            BoundaryCondition::Pressure(p) => {
                boundary_pressure.insert(v, p);
                if at_target {
                    g[qs.last_dof(e)] -= p;
                } else {
                    g[qs.first_dof(e)] += p;
                }
            }
            BoundaryCondition::Outflow(q) => {
                if at_target {
                    fixed.push((qs.last_dof(e), q));
                } else {
                    fixed.push((qs.first_dof(e), -q));
                }
            }
        }
    }

    let mut sys = assemble_saddle(&a, &b, &j, &g, &h, &vec![0.0; j.nrows])?;
    sys.constrain_many(&fixed);
    let x = solve_sparse(&sys)?;

    let [_, nq, np, _] = sys.offsets;
    let (incoming, outgoing) = net.incidence();
    let min_edge_resistance = (0..mesh.num_edges())
        .map(|e| {
            (0..mesh.cells_per_edge)
                .map(|k| coeffs.resistance[mesh.cell(e, k)] * mesh.cell_size(e))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    let max_bc_pressure = boundary_pressure.values().fold(0.0f64, |m, p| m.max(p.abs()));
    Ok(Solution {
        flux: DiscreteFunction::new(qs, x[..nq].to_vec())?,
        pressure: DiscreteFunction::new(ps, x[nq..np].to_vec())?,
        multipliers: x[np..].to_vec(),
        classification: cls,
        source_integral,
        source_magnitude,
        drive_scale: max_bc_pressure / min_edge_resistance,
        endpoints: (0..net.num_edges()).map(|e| net.endpoints(e)).collect(),
        incoming,
        outgoing,
        boundary_pressure,
    })
}

fn boundary_edge(net: &Network, v: usize) -> (usize, bool) {
    for e in 0..net.num_edges() {
        let (s, t) = net.endpoints(e);
        if t == v {
            return (e, true);
        }
        if s == v {
            return (e, false);
        }
    }
    unreachable!("validated networks have no isolated vertices")
}

fn integrate_source(
    mesh: &NetworkMesh,
    source: &dyn Fn(&QuadPoint) -> f64,
    order: usize,
) -> Result<(f64, f64)> {
    let rule = QuadratureRule::gauss_legendre(order)?;
    let mut total = 0.0;
    let mut magnitude = 0.0;
    for c in 0..mesh.num_cells() {
        let e = mesh.cell_edge[c];
        let k = c - e * mesh.cells_per_edge;
        let (s0, s1) = mesh.cell_interval(c);
        for (x, w) in rule.iter() {
            let v = source(&QuadPoint {
                edge: e,
                cell: k,
                s: s0 + x * (s1 - s0),
            });
            total += w * (s1 - s0) * v;
            magnitude += w * (s1 - s0) * v.abs();
        }
    }
    Ok((total, magnitude))
}

/// Hydraulic network model with P1 flux and P0 pressure.
pub fn solve_hydraulic(problem: &FlowProblem<'_>) -> Result<Solution> {
    solve_mixed(problem, ElementPair::HYDRAULIC, false)
}

/// Reduced Stokes model with P2 flux, P1 pressure and the axial viscous
/// term `-∂s(μ/A ∂s q)`.
pub fn solve_stokes(problem: &FlowProblem<'_>) -> Result<Solution> {
    solve_mixed(problem, ElementPair::STOKES, true)
}

/// Solves `-∂s² u = f` with a globally continuous P1 field, Dirichlet
/// values at the given vertex ids and natural coupling elsewhere. The
/// result is returned on the broken P1 space with matching values at
/// shared vertices.
pub fn solve_poisson(
    net: &Network,
    mesh: &NetworkMesh,
    source: &dyn Fn(&QuadPoint) -> f64,
    dirichlet: &BTreeMap<u64, f64>,
) -> Result<DiscreteFunction> {
    if dirichlet.is_empty() {
        return Err(Error::InvalidParameter(
            "Poisson problem needs at least one Dirichlet vertex".into(),
        ));
    }
    let broken = EdgeSpace::new(mesh, Element::P1);
    let k = assemble_stiffness(&broken, |_| 1.0, 2)?;
    let load = assemble_load(&broken, source, 4)?;
    // broken dof -> mesh node
    let mut node_of = vec![0usize; broken.dim()];
    for e in 0..mesh.num_edges() {
        for (i, &n) in mesh.edge_nodes(e).iter().enumerate() {
            node_of[broken.first_dof(e) + i] = n;
        }
    }
    let nn = mesh.nodes.len();
    let mut fixed = vec![None; nn];
    for (&id, &u) in dirichlet {
        let v = net.vertex_index(id)?;
        if !u.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite Dirichlet value at {id}")));
        }
        fixed[v] = Some(u);
    }
    let mut rhs = vec![0.0; nn];
    for (d, &v) in load.iter().enumerate() {
        rhs[node_of[d]] += v;
    }
    let mut t = Triplets::new(nn, nn);
    for (i, j, v) in k.iter() {
        let (ni, nj) = (node_of[i], node_of[j]);
        match (fixed[ni], fixed[nj]) {
            (None, None) => t.push(ni, nj, v),
            (None, Some(g)) => rhs[ni] -= v * g,
            _ => {}
        }
    }
    for (n, f) in fixed.iter().enumerate() {
        if let Some(g) = f {
            t.push(n, n, 1.0);
            rhs[n] = *g;
        }
    }
    let u = solve_matrix(&t.to_csr(), &rhs)?;
    let coeffs = node_of.iter().map(|&n| u[n]).collect();
    DiscreteFunction::new(broken, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{generate_line, generate_tree, generate_y, TreeParams};

    fn zero(_: &QuadPoint) -> f64 {
        0.0
    }

    #[test]
    fn annular_resistance_values() {
        let r = annular_resistance(1.0, 1.0, 2.0).unwrap();
        // quadrature of the annular Poiseuille profile gives 1.2632944912990216
        assert!((r - 1.263_294_491_299_021_6).abs() < 1e-13);
        assert!(annular_resistance(1.0, 2.0, 2.0).is_err());
        assert!(annular_resistance(1.0, 2.0, 1.0).is_err());
        let mut last = f64::INFINITY;
        for k in 1..50 {
            let r2 = 1.0 + 0.2 * k as f64;
            let r = annular_resistance(1.0, 1.0, r2).unwrap();
            assert!(r < last);
            last = r;
        }
        // R2⁴ dominates for R2 ≫ R1; the log correction decays slowly
        let lead = |r2: f64| 8.0 / (core::f64::consts::PI * r2 * r2 * r2 * r2);
        let far = annular_resistance(1.0, 1.0, 1e3).unwrap();
        assert!(far > lead(1e3) && far < 1.2 * lead(1e3));
        let farther = annular_resistance(1.0, 1.0, 1e6).unwrap();
        assert!(farther > 0.0 && farther / lead(1e6) < far / lead(1e3));
    }

    #[test]
    fn single_edge_darcy() {
        let net = generate_line(1, 1.0, 0.1).unwrap();
        for cells in [1, 3, 8] {
            let mesh = NetworkMesh::build(&net, cells).unwrap();
            let coeffs = Coefficients::uniform(&mesh, DEFAULT_VISCOSITY, 1.0, 1.0);
            let bcs = BoundaryConditions::new().pressure(0, 1.0).pressure(1, 0.0);
            let problem = FlowProblem {
                net: &net,
                mesh: &mesh,
                coeffs: &coeffs,
                bcs: &bcs,
                source: &zero,
            };
            let sol = solve_hydraulic(&problem).unwrap();
            assert!(sol.flux.coeffs.iter().all(|q| (q - 1.0).abs() < 1e-12));
            for k in 0..cells {
                let mid = (k as f64 + 0.5) / cells as f64;
                assert!((sol.pressure.coeffs[k] - (1.0 - mid)).abs() < 1e-12);
            }
            assert!((sol.outflow(1).unwrap() - 1.0).abs() < 1e-12);
            assert!((sol.outflow(0).unwrap() + 1.0).abs() < 1e-12);

            let stokes = solve_stokes(&problem).unwrap();
            assert!(stokes.flux.coeffs.iter().all(|q| (q - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn symmetric_y_splits_flow() {
        let net = generate_y([1.0; 3], [0.1; 3]).unwrap();
        let mesh = NetworkMesh::build(&net, 4).unwrap();
        let coeffs = Coefficients::uniform(&mesh, DEFAULT_VISCOSITY, 1.0, 1.0);
        let bcs = BoundaryConditions::inlet_outlet(&net, 1.0, 0.0).unwrap();
        let sol = solve_hydraulic(&FlowProblem {
            net: &net,
            mesh: &mesh,
            coeffs: &coeffs,
            bcs: &bcs,
            source: &zero,
        })
        .unwrap();
        // series/parallel reduction: total resistance 1 + 1/2
        assert!((sol.mean_flux(0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((sol.mean_flux(1) - 1.0 / 3.0).abs() < 1e-12);
        assert!((sol.mean_flux(2) - 1.0 / 3.0).abs() < 1e-12);
        assert!((sol.multipliers[0] - 1.0 / 3.0).abs() < 1e-12);
        let (q2, q3) = (sol.outflow(2).unwrap(), sol.outflow(3).unwrap());
        assert!((q2 - q3).abs() <= 1e-12 * q2.abs());
        assert!(sol.max_jump() <= 1e-12);
    }

    #[test]
    fn all_flux_conditions_are_singular() {
        let net = generate_y([1.0; 3], [0.1; 3]).unwrap();
        let mesh = NetworkMesh::build(&net, 2).unwrap();
        let coeffs = Coefficients::uniform(&mesh, DEFAULT_VISCOSITY, 1.0, 1.0);
        let bcs = BoundaryConditions::new()
            .outflow(0, -1.0)
            .outflow(2, 0.5)
            .outflow(3, 0.5);
        let err = solve_hydraulic(&FlowProblem {
            net: &net,
            mesh: &mesh,
            coeffs: &coeffs,
            bcs: &bcs,
            source: &zero,
        })
        .unwrap_err();
        assert!(matches!(err, Error::Singular { .. }), "{err:?}");
    }

    #[test]
    fn flux_condition_with_pressure_outlets() {
        let net = generate_y([1.0, 1.0, 2.0], [0.1; 3]).unwrap();
        let mesh = NetworkMesh::build(&net, 3).unwrap();
        let coeffs = Coefficients::uniform(&mesh, DEFAULT_VISCOSITY, 2.0, 1.0);
        let bcs = BoundaryConditions::new()
            .outflow(0, -1.5)
            .pressure(2, 0.0)
            .pressure(3, 0.0);
        let sol = solve_hydraulic(&FlowProblem {
            net: &net,
            mesh: &mesh,
            coeffs: &coeffs,
            bcs: &bcs,
            source: &zero,
        })
        .unwrap();
        assert!((sol.outflow(0).unwrap() + 1.5).abs() < 1e-12);
        // conductances 1/2 and 1/4 share the flow 2:1
        assert!((sol.outflow(2).unwrap() - 1.0).abs() < 1e-12);
        assert!((sol.outflow(3).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn source_balances_outflow() {
        let net = generate_tree(&TreeParams {
            generations: 3,
            ..TreeParams::default()
        })
        .unwrap();
        let mesh = NetworkMesh::build(&net, 5).unwrap();
        let coeffs = Coefficients::from_network(&net, &mesh, DEFAULT_VISCOSITY).unwrap();
        let bcs = BoundaryConditions::uniform_pressure(&net, 0.0).unwrap();
        let f = |p: &QuadPoint| 1e-9 * (1.0 + libm::sin(3000.0 * p.s + p.edge as f64));
        for stokes in [false, true] {
            let problem = FlowProblem {
                net: &net,
                mesh: &mesh,
                coeffs: &coeffs,
                bcs: &bcs,
                source: &f,
            };
            let sol = if stokes {
                solve_stokes(&problem)
            } else {
                solve_hydraulic(&problem)
            }
            .unwrap();
            assert!(sol.source_integral > 0.0);
            assert!(sol.balance_residual() <= 1e-10 * sol.balance_scale());
            assert!(sol.max_jump() <= 1e-10 * sol.flux.max_abs());
        }
    }

    #[test]
    fn zero_viscosity_stokes_is_hydraulic_on_same_spaces() {
        let net = generate_y([1.0, 0.6, 0.8], [0.1; 3]).unwrap();
        let mesh = NetworkMesh::build(&net, 4).unwrap();
        let mut coeffs = Coefficients::from_network(&net, &mesh, 1.0).unwrap();
        let bcs = BoundaryConditions::inlet_outlet(&net, 2.0, 0.5).unwrap();
        let f = |p: &QuadPoint| p.s * 0.1;
        let hyd = solve_mixed(
            &FlowProblem {
                net: &net,
                mesh: &mesh,
                coeffs: &coeffs,
                bcs: &bcs,
                source: &f,
            },
            ElementPair::STOKES,
            false,
        )
        .unwrap();
        coeffs.viscosity = 0.0;
        let stokes = solve_stokes(&FlowProblem {
            net: &net,
            mesh: &mesh,
            coeffs: &coeffs,
            bcs: &bcs,
            source: &f,
        })
        .unwrap();
        let scale = hyd.flux.max_abs();
        for (a, b) in hyd.flux.coeffs.iter().zip(&stokes.flux.coeffs) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn rejects_condition_on_interior_vertex() {
        let net = generate_y([1.0; 3], [0.1; 3]).unwrap();
        let mesh = NetworkMesh::build(&net, 1).unwrap();
        let coeffs = Coefficients::uniform(&mesh, DEFAULT_VISCOSITY, 1.0, 1.0);
        let bcs = BoundaryConditions::new().pressure(1, 1.0);
        assert!(solve_hydraulic(&FlowProblem {
            net: &net,
            mesh: &mesh,
            coeffs: &coeffs,
            bcs: &bcs,
            source: &zero,
        })
        .is_err());
    }

    #[test]
    fn poisson_examples() {
        let net = generate_line(1, 2.0, 0.1).unwrap();
        let mesh = NetworkMesh::build(&net, 5).unwrap();
        let bc: BTreeMap<u64, f64> = [(0, 0.0), (1, 1.0)].into_iter().collect();
        let u = solve_poisson(&net, &mesh, &zero, &bc).unwrap();
        for (i, s) in mesh.arclengths(0).into_iter().enumerate() {
            assert!((u.coeffs[i] - s / 2.0).abs() < 1e-13);
        }

        let y = generate_y([1.0; 3], [0.1; 3]).unwrap();
        let mesh = NetworkMesh::build(&y, 4).unwrap();
        let bc: BTreeMap<u64, f64> = [(2, 3.0), (3, 3.0)].into_iter().collect();
        let f = |_: &QuadPoint| 1.0;
        let u = solve_poisson(&y, &mesh, &f, &bc).unwrap();
        for (a, b) in u.coeffs[5..10].iter().zip(&u.coeffs[10..15]) {
            assert!((a - b).abs() < 1e-12);
        }
        // continuity at the junction
        assert!((u.endpoint_values(0).1 - u.endpoint_values(1).0).abs() < 1e-14);

        let bc: BTreeMap<u64, f64> = [(0, 2.5), (2, 2.5), (3, 2.5)].into_iter().collect();
        let u = solve_poisson(&y, &mesh, &zero, &bc).unwrap();
        assert!(u.coeffs.iter().all(|v| (v - 2.5).abs() < 1e-13));
        assert!(solve_poisson(&y, &mesh, &zero, &BTreeMap::new()).is_err());
    }
}
