//! Directed spatial networks: vertices embedded in 3D joined by straight,
//! attributed edges.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub type Point = [f64; 3];

/// Default ratio between the outer PVS radius and the arterial radius.
pub const DEFAULT_OUTER_RATIO: f64 = 3.0;

/// Largest tree depth accepted by [`generate_tree`].
pub const MAX_GENERATIONS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub id: u64,
    pub position: Point,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub id: u64,
    pub source: u64,
    pub target: u64,
    /// Arterial (inner) radius R1 in meters.
    pub inner_radius: f64,
    /// Outer radius R2 of the perivascular annulus in meters.
    pub outer_radius: f64,
    /// Flow resistance per unit length, used instead of the annular
    /// Poiseuille value when present.
    pub resistance: Option<f64>,
}

impl Edge {
    /// Edge with the default outer radius `3 * inner_radius`.
    pub fn new(id: u64, source: u64, target: u64, inner_radius: f64) -> Self {
        Edge {
            id,
            source,
            target,
            inner_radius,
            outer_radius: DEFAULT_OUTER_RATIO * inner_radius,
            resistance: None,
        }
    }
}

/// A validated, immutable network. Vertices and edges are kept sorted by id;
/// all index-based accessors refer to that order.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    vertex_index: BTreeMap<u64, usize>,
    edge_index: BTreeMap<u64, usize>,
    // (source index, target index) per edge
    endpoints: Vec<(usize, usize)>,
    lengths: Vec<f64>,
}

impl Network {
    pub fn new(mut vertices: Vec<Vertex>, mut edges: Vec<Edge>) -> Result<Self> {
        vertices.sort_by_key(|v| v.id);
        edges.sort_by_key(|e| e.id);
        if vertices.is_empty() {
            return Err(Error::InvalidNetwork("network has no vertices".into()));
        }
        if edges.is_empty() {
            return Err(Error::InvalidNetwork("network has no edges".into()));
        }

        let mut vertex_index = BTreeMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if vertex_index.insert(v.id, i).is_some() {
                return Err(Error::InvalidNetwork(format!("duplicate vertex id {}", v.id)));
            }
            if v.position.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidNetwork(format!(
                    "vertex {} has a non-finite coordinate",
                    v.id
                )));
            }
        }

        let mut edge_index = BTreeMap::new();
        let mut endpoints = Vec::with_capacity(edges.len());
        let mut lengths = Vec::with_capacity(edges.len());
        let mut seen_pairs = BTreeSet::new();
        for (i, e) in edges.iter().enumerate() {
            if edge_index.insert(e.id, i).is_some() {
                return Err(Error::InvalidNetwork(format!("duplicate edge id {}", e.id)));
            }
            let s = *vertex_index.get(&e.source).ok_or_else(|| {
                Error::InvalidNetwork(format!(
                    "edge {} references missing source vertex {}",
                    e.id, e.source
                ))
            })?;
            let t = *vertex_index.get(&e.target).ok_or_else(|| {
                Error::InvalidNetwork(format!(
                    "edge {} references missing target vertex {}",
                    e.id, e.target
                ))
            })?;
            if s == t {
                return Err(Error::InvalidNetwork(format!("edge {} is a self-loop", e.id)));
            }
            if !seen_pairs.insert((s, t)) {
                return Err(Error::InvalidNetwork(format!(
                    "edge {} duplicates the directed edge {} -> {}",
                    e.id, e.source, e.target
                )));
            }
            if !(e.inner_radius.is_finite() && e.inner_radius > 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "edge {} has non-positive inner radius {}",
                    e.id, e.inner_radius
                )));
            }
            if !(e.outer_radius.is_finite() && e.outer_radius > e.inner_radius) {
                return Err(Error::InvalidNetwork(format!(
                    "edge {}: outer radius {} must exceed inner radius {}",
                    e.id, e.outer_radius, e.inner_radius
                )));
            }
            if let Some(r) = e.resistance {
                if !(r.is_finite() && r > 0.0) {
                    return Err(Error::InvalidNetwork(format!(
                        "edge {} has non-positive resistance {r}",
                        e.id
                    )));
                }
            }
            let len = distance(&vertices[s].position, &vertices[t].position);
            if !(len > 0.0) {
                return Err(Error::InvalidNetwork(format!("edge {} has zero length", e.id)));
            }
            endpoints.push((s, t));
            lengths.push(len);
        }

        let net = Network {
            vertices,
            edges,
            vertex_index,
            edge_index,
            endpoints,
            lengths,
        };
        net.check_connectivity()?;
        Ok(net)
    }

    fn check_connectivity(&self) -> Result<()> {
        let adj = self.undirected_adjacency();
        if let Some(i) = adj.iter().position(|a| a.is_empty()) {
            return Err(Error::InvalidNetwork(format!(
                "vertex {} is not incident to any edge",
                self.vertices[i].id
            )));
        }
        let mut seen = vec![false; self.vertices.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(w, _) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidNetwork(format!(
                "network is not connected: vertex {} is unreachable from vertex {}",
                self.vertices[i].id, self.vertices[0].id
            )));
        }
        Ok(())
    }

    /// Neighbours of each vertex index as `(vertex index, edge index)`,
    /// ignoring edge direction.
    pub fn undirected_adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (e, &(s, t)) in self.endpoints.iter().enumerate() {
            adj[s].push((t, e));
            adj[t].push((s, e));
        }
        adj
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_index(&self, id: u64) -> Result<usize> {
        self.vertex_index.get(&id).copied().ok_or(Error::UnknownVertex(id))
    }

    pub fn edge_index(&self, id: u64) -> Result<usize> {
        self.edge_index.get(&id).copied().ok_or(Error::UnknownEdge(id))
    }

    /// Source and target vertex indices of edge `e`.
    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        self.endpoints[e]
    }

    /// Geometric length of edge `e`.
    pub fn length(&self, e: usize) -> f64 {
        self.lengths[e]
    }

    pub fn total_length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    pub fn position(&self, v: usize) -> Point {
        self.vertices[v].position
    }

    /// Edges entering and leaving each vertex, as edge indices.
    pub fn incidence(&self) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
        let mut incoming = vec![Vec::new(); self.vertices.len()];
        let mut outgoing = vec![Vec::new(); self.vertices.len()];
        for (e, &(s, t)) in self.endpoints.iter().enumerate() {
            outgoing[s].push(e);
            incoming[t].push(e);
        }
        (incoming, outgoing)
    }

    /// Same network with every edge resistance replaced by `f(edge)`.
    pub fn with_resistances(&self, mut f: impl FnMut(&Edge) -> f64) -> Result<Network> {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                resistance: Some(f(e)),
                ..*e
            })
            .collect();
        Network::new(self.vertices.clone(), edges)
    }
}

pub(crate) fn distance(a: &Point, b: &Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    libm::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Degree-one vertex whose only edge leaves it.
    Inlet,
    /// Degree-one vertex whose only edge enters it.
    Outlet,
}

/// Partition of the vertex set into interior (junction) vertices and
/// degree-one boundary vertices. Vertex indices, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexClassification {
    pub bifurcations: Vec<usize>,
    pub boundary: Vec<(usize, BoundaryKind)>,
}

impl VertexClassification {
    pub fn inlets(&self) -> impl Iterator<Item = usize> + '_ {
        self.boundary
            .iter()
            .filter(|(_, k)| *k == BoundaryKind::Inlet)
            .map(|(v, _)| *v)
    }

    pub fn outlets(&self) -> impl Iterator<Item = usize> + '_ {
        self.boundary
            .iter()
            .filter(|(_, k)| *k == BoundaryKind::Outlet)
            .map(|(v, _)| *v)
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary.iter().any(|(b, _)| *b == v)
    }

    /// Position of `v` in the bifurcation list (its multiplier row).
    pub fn bifurcation_row(&self, v: usize) -> Option<usize> {
        self.bifurcations.binary_search(&v).ok()
    }
}

/// Splits vertices by degree: degree ≥ 2 vertices are interior (path points
/// included), degree-one vertices are inlets or outlets by edge direction.
pub fn classify_vertices(net: &Network) -> Result<VertexClassification> {
    let (incoming, outgoing) = net.incidence();
    let mut bifurcations = Vec::new();
    let mut boundary = Vec::new();
    for v in 0..net.num_vertices() {
        match (incoming[v].len(), outgoing[v].len()) {
            (0, 0) => {
                return Err(Error::InvalidNetwork(format!(
                    "vertex {} is isolated",
                    net.vertices()[v].id
                )))
            }
            (0, 1) => boundary.push((v, BoundaryKind::Inlet)),
            (1, 0) => boundary.push((v, BoundaryKind::Outlet)),
            _ => bifurcations.push(v),
        }
    }
    Ok(VertexClassification {
        bifurcations,
        boundary,
    })
}

/// Parameters of a symmetric binary tree obeying a generalised Murray's law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub generations: u32,
    pub root_radius: f64,
    pub murray_exponent: f64,
    pub root_length: f64,
    pub length_ratio: f64,
    pub branch_angle: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            generations: 4,
            root_radius: 5e-5,
            murray_exponent: 3.0,
            root_length: 2e-3,
            length_ratio: 0.8,
            branch_angle: 0.5,
        }
    }
}

/// Symmetric binary tree in the z = 0 plane. The root edge runs from the
/// origin along +x; every child turns by ±`branch_angle` from its parent.
///
/// Vertices and edges are numbered breadth first; edge `k` ends at vertex
/// `k + 1`, so vertex 0 is the root inlet.
pub fn generate_tree(p: &TreeParams) -> Result<Network> {
    if p.generations < 1 {
        return Err(Error::InvalidParameter("generations must be at least 1".into()));
    }
    if p.generations > MAX_GENERATIONS {
        return Err(Error::InvalidParameter(format!(
            "generations = {} exceeds the size guard of {MAX_GENERATIONS}",
            p.generations
        )));
    }
    for (name, value) in [
        ("root_radius", p.root_radius),
        ("murray_exponent", p.murray_exponent),
        ("root_length", p.root_length),
        ("length_ratio", p.length_ratio),
        ("branch_angle", p.branch_angle),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {value}")));
        }
    }

    let radius_ratio = libm::pow(2.0, -1.0 / p.murray_exponent);
    let mut vertices = vec![Vertex {
        id: 0,
        position: [0.0; 3],
    }];
    let mut edges = Vec::new();
    // (vertex id, heading angle, radius, length) of edges still to emit
    let mut frontier = vec![(0u64, 0.0f64, p.root_radius, p.root_length)];
    for _ in 0..p.generations {
        let mut next = Vec::with_capacity(2 * frontier.len());
        for (from, heading, radius, length) in frontier {
            let origin = vertices[from as usize].position;
            let id = vertices.len() as u64;
            vertices.push(Vertex {
                id,
                position: [
                    origin[0] + length * libm::cos(heading),
                    origin[1] + length * libm::sin(heading),
                    0.0,
                ],
            });
            edges.push(Edge::new(id - 1, from, id, radius));
            let child_radius = radius * radius_ratio;
            let child_length = length * p.length_ratio;
            next.push((id, heading + p.branch_angle, child_radius, child_length));
            next.push((id, heading - p.branch_angle, child_radius, child_length));
        }
        frontier = next;
    }
    Network::new(vertices, edges)
}

/// One inlet edge feeding two outlet edges at a shared junction.
/// `lengths` and `radii` are ordered (parent, upper child, lower child).
pub fn generate_y(lengths: [f64; 3], radii: [f64; 3]) -> Result<Network> {
    if lengths.iter().chain(radii.iter()).any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::InvalidParameter(
            "Y-network lengths and radii must be positive".into(),
        ));
    }
    let angle = core::f64::consts::FRAC_PI_6;
    let junction = [lengths[0], 0.0, 0.0];
    let vertices = vec![
        Vertex {
            id: 0,
            position: [0.0; 3],
        },
        Vertex {
            id: 1,
            position: junction,
        },
        Vertex {
            id: 2,
            position: [
                junction[0] + lengths[1] * libm::cos(angle),
                lengths[1] * libm::sin(angle),
                0.0,
            ],
        },
        Vertex {
            id: 3,
            position: [
                junction[0] + lengths[2] * libm::cos(angle),
                -lengths[2] * libm::sin(angle),
                0.0,
            ],
        },
    ];
    let edges = vec![
        Edge::new(0, 0, 1, radii[0]),
        Edge::new(1, 1, 2, radii[1]),
        Edge::new(2, 1, 3, radii[2]),
    ];
    Network::new(vertices, edges)
}

/// Straight path of `edges` equal segments along +x with total length
/// `length`; its interior vertices have degree two.
pub fn generate_line(edges: usize, length: f64, radius: f64) -> Result<Network> {
    if edges == 0 {
        return Err(Error::InvalidParameter("a line needs at least one edge".into()));
    }
    if !(length > 0.0 && radius > 0.0 && length.is_finite() && radius.is_finite()) {
        return Err(Error::InvalidParameter(
            "line length and radius must be positive".into(),
        ));
    }
    let vertices = (0..=edges)
        .map(|i| Vertex {
            id: i as u64,
            position: [length * i as f64 / edges as f64, 0.0, 0.0],
        })
        .collect();
    let edge_list = (0..edges)
        .map(|i| Edge::new(i as u64, i as u64, i as u64 + 1, radius))
        .collect();
    Network::new(vertices, edge_list)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_edge() -> Network {
        generate_line(1, 1.0, 0.1).unwrap()
    }

    #[test]
    fn y_network_classification() {
        let net = generate_y([1.0; 3], [1.0; 3]).unwrap();
        let cls = classify_vertices(&net).unwrap();
        assert_eq!(cls.bifurcations, vec![1]);
        assert_eq!(cls.inlets().collect::<Vec<_>>(), vec![0]);
        assert_eq!(cls.outlets().collect::<Vec<_>>(), vec![2, 3]);
        assert!((net.total_length() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn y_keeps_asymmetric_radii() {
        let net = generate_y([1.0, 2.0, 3.0], [0.5, 0.3, 0.2]).unwrap();
        let r: Vec<f64> = net.edges().iter().map(|e| e.inner_radius).collect();
        assert_eq!(r, vec![0.5, 0.3, 0.2]);
        assert!((net.total_length() - 6.0).abs() < 1e-14);
        assert!(net.edges().iter().all(|e| e.outer_radius == 3.0 * e.inner_radius));
    }

    #[test]
    fn single_edge_classification() {
        let cls = classify_vertices(&single_edge()).unwrap();
        assert!(cls.bifurcations.is_empty());
        assert_eq!(cls.inlets().count(), 1);
        assert_eq!(cls.outlets().count(), 1);
    }

    #[test]
    fn four_generation_tree_counts() {
        let net = generate_tree(&TreeParams::default()).unwrap();
        assert_eq!(net.num_edges(), 15);
        assert_eq!(net.num_vertices(), 16);
        let cls = classify_vertices(&net).unwrap();
        assert_eq!(cls.bifurcations.len(), 7);
        assert_eq!(cls.outlets().count(), 8);
        assert_eq!(cls.inlets().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn tree_murray_ratio() {
        let net = generate_tree(&TreeParams::default()).unwrap();
        let (incoming, outgoing) = net.incidence();
        let ratio = net.edges()[1].inner_radius / net.edges()[0].inner_radius;
        assert!((ratio - 0.793_700_525_984_099_7).abs() < 1e-12);
        for v in 0..net.num_vertices() {
            if incoming[v].len() == 1 && outgoing[v].len() == 2 {
                let parent = net.edges()[incoming[v][0]].inner_radius;
                let children: f64 = outgoing[v]
                    .iter()
                    .map(|&e| net.edges()[e].inner_radius * net.edges()[e].inner_radius * net.edges()[e].inner_radius)
                    .sum();
                assert!(((parent * parent * parent) - children).abs() <= 1e-12 * (parent * parent * parent));
            }
        }
    }

    #[test]
    fn one_generation_tree_is_single_edge() {
        let p = TreeParams {
            generations: 1,
            ..TreeParams::default()
        };
        let net = generate_tree(&p).unwrap();
        assert_eq!(net.num_edges(), 1);
        assert!((net.length(0) - p.root_length).abs() < 1e-18);
    }

    #[test]
    fn tree_size_guard() {
        let p = TreeParams {
            generations: 21,
            ..TreeParams::default()
        };
        assert!(matches!(generate_tree(&p), Err(Error::InvalidParameter(_))));
        let p = TreeParams {
            generations: 0,
            ..TreeParams::default()
        };
        assert!(generate_tree(&p).is_err());
    }

    #[test]
    fn rejects_bad_networks() {
        let v = |id, x| Vertex {
            id,
            position: [x, 0.0, 0.0],
        };
        // dangling reference
        let err = Network::new(vec![v(0, 0.0), v(1, 1.0)], vec![Edge::new(0, 0, 7, 1.0)]).unwrap_err();
        assert!(format!("{err}").contains('7'));
        // outer radius not larger than inner
        let mut e = Edge::new(0, 0, 1, 1.0);
        e.outer_radius = 1.0;
        assert!(Network::new(vec![v(0, 0.0), v(1, 1.0)], vec![e]).is_err());
        // isolated vertex
        assert!(Network::new(
            vec![v(0, 0.0), v(1, 1.0), v(2, 2.0)],
            vec![Edge::new(0, 0, 1, 1.0)]
        )
        .is_err());
        // zero length
        assert!(Network::new(vec![v(0, 0.0), v(1, 0.0)], vec![Edge::new(0, 0, 1, 1.0)]).is_err());
        // duplicate directed edge
        assert!(Network::new(
            vec![v(0, 0.0), v(1, 1.0)],
            vec![Edge::new(0, 0, 1, 1.0), Edge::new(1, 0, 1, 1.0)]
        )
        .is_err());
        // disconnected
        assert!(Network::new(
            vec![v(0, 0.0), v(1, 1.0), v(2, 2.0), v(3, 3.0)],
            vec![Edge::new(0, 0, 1, 1.0), Edge::new(1, 2, 3, 1.0)]
        )
        .is_err());
        // non-finite coordinate
        assert!(Network::new(vec![v(0, 0.0), v(1, f64::NAN)], vec![Edge::new(0, 0, 1, 1.0)]).is_err());
    }
}
