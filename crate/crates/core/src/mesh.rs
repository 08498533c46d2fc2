//! Global 1D mesh over a network.
//!
//! Nodes `0..num_vertices` are the graph vertices (in vertex index order);
//! interior nodes follow, edge by edge, ordered from source to target.
//! Cells are stored edge by edge as well, so the cells of edge `e` are the
//! contiguous range `e * cells_per_edge .. (e + 1) * cells_per_edge`.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::network::{Network, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkMesh {
    pub nodes: Vec<Point>,
    pub cells: Vec<[usize; 2]>,
    /// Edge index owning each cell.
    pub cell_edge: Vec<usize>,
    /// Graph vertex index of each node, `None` for edge-interior nodes.
    pub node_vertex: Vec<Option<usize>>,
    pub cells_per_edge: usize,
    edge_nodes: Vec<Vec<usize>>,
    edge_lengths: Vec<f64>,
}

impl NetworkMesh {
    /// Uniform subdivision of every edge into `cells_per_edge` segments.
    pub fn build(net: &Network, cells_per_edge: usize) -> Result<Self> {
        if cells_per_edge < 1 {
            return Err(Error::InvalidParameter("cells_per_edge must be at least 1".into()));
        }
        let n = cells_per_edge;
        let nv = net.num_vertices();
        let mut nodes: Vec<Point> = (0..nv).map(|v| net.position(v)).collect();
        let mut node_vertex: Vec<Option<usize>> = (0..nv).map(Some).collect();
        let mut edge_nodes = Vec::with_capacity(net.num_edges());
        let mut cells = Vec::with_capacity(net.num_edges() * n);
        let mut cell_edge = Vec::with_capacity(net.num_edges() * n);
        let mut edge_lengths = Vec::with_capacity(net.num_edges());

        for e in 0..net.num_edges() {
            let (s, t) = net.endpoints(e);
            let a = net.position(s);
            let b = net.position(t);
            let mut chain = Vec::with_capacity(n + 1);
            chain.push(s);
            for k in 1..n {
                let frac = k as f64 / n as f64;
                chain.push(nodes.len());
                nodes.push([
                    a[0] + frac * (b[0] - a[0]),
                    a[1] + frac * (b[1] - a[1]),
                    a[2] + frac * (b[2] - a[2]),
                ]);
                node_vertex.push(None);
            }
            chain.push(t);
            for w in chain.windows(2) {
                cells.push([w[0], w[1]]);
                cell_edge.push(e);
            }
            edge_nodes.push(chain);
            edge_lengths.push(net.length(e));
        }

        Ok(NetworkMesh {
            nodes,
            cells,
            cell_edge,
            node_vertex,
            cells_per_edge: n,
            edge_nodes,
            edge_lengths,
        })
    }

    /// Bisects every cell. Vertex nodes keep their numbering and every
    /// existing node position is reproduced bit for bit.
    pub fn refine(&self) -> Self {
        let n = 2 * self.cells_per_edge;
        let nv = self.num_vertices();
        let mut nodes: Vec<Point> = self.nodes[..nv].to_vec();
        let mut node_vertex: Vec<Option<usize>> = (0..nv).map(Some).collect();
        let mut edge_nodes = Vec::with_capacity(self.num_edges());
        let mut cells = Vec::with_capacity(self.num_edges() * n);
        let mut cell_edge = Vec::with_capacity(self.num_edges() * n);
        for (e, old) in self.edge_nodes.iter().enumerate() {
            let (s, t) = (old[0], *old.last().unwrap());
            let a = self.nodes[s];
            let b = self.nodes[t];
            let mut chain = Vec::with_capacity(n + 1);
            chain.push(s);
            for k in 1..n {
                // same formula as `build`, so k/n == (k/2)/(n/2) exactly for even k
                let frac = k as f64 / n as f64;
                chain.push(nodes.len());
                nodes.push([
                    a[0] + frac * (b[0] - a[0]),
                    a[1] + frac * (b[1] - a[1]),
                    a[2] + frac * (b[2] - a[2]),
                ]);
                node_vertex.push(None);
            }
            chain.push(t);
            for w in chain.windows(2) {
                cells.push([w[0], w[1]]);
                cell_edge.push(e);
            }
            edge_nodes.push(chain);
        }
        NetworkMesh {
            nodes,
            cells,
            cell_edge,
            node_vertex,
            cells_per_edge: n,
            edge_nodes,
            edge_lengths: self.edge_lengths.clone(),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.node_vertex.iter().take_while(|v| v.is_some()).count()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_nodes.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Node chain of edge `e`, from source vertex to target vertex.
    pub fn edge_nodes(&self, e: usize) -> &[usize] {
        &self.edge_nodes[e]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        self.edge_lengths[e]
    }

    /// Uniform cell size on edge `e`.
    pub fn cell_size(&self, e: usize) -> f64 {
        self.edge_lengths[e] / self.cells_per_edge as f64
    }

    /// Largest cell size in the mesh.
    pub fn max_cell_size(&self) -> f64 {
        (0..self.num_edges()).map(|e| self.cell_size(e)).fold(0.0, f64::max)
    }

    /// Global index of local cell `k` on edge `e`.
    pub fn cell(&self, e: usize, k: usize) -> usize {
        e * self.cells_per_edge + k
    }

    /// Arclength interval `[s0, s1]` of cell `c` on its edge.
    pub fn cell_interval(&self, c: usize) -> (f64, f64) {
        let e = self.cell_edge[c];
        let k = c - e * self.cells_per_edge;
        let h = self.cell_size(e);
        (k as f64 * h, (k + 1) as f64 * h)
    }

    /// Arclength of each node of edge `e`, measured from its source.
    pub fn arclengths(&self, e: usize) -> Vec<f64> {
        let n = self.cells_per_edge;
        let len = self.edge_lengths[e];
        (0..=n).map(|k| len * k as f64 / n as f64).collect()
    }

    /// Local cell containing arclength `s` on edge `e`; points on a cell
    /// boundary belong to the cell on their left.
    pub fn locate(&self, e: usize, s: f64) -> Result<(usize, f64)> {
        let len = self.edge_lengths[e];
        let tol = 1e-12 * len;
        if !(s >= -tol && s <= len + tol) {
            return Err(Error::InvalidParameter(format!(
                "arclength {s} outside edge of length {len}"
            )));
        }
        let h = self.cell_size(e);
        let x = (s / h).clamp(0.0, self.cells_per_edge as f64);
        let mut k = libm::ceil(x) as usize;
        k = k.saturating_sub(1).min(self.cells_per_edge - 1);
        let local = (s - k as f64 * h) / h;
        Ok((k, local.clamp(0.0, 1.0)))
    }

    /// Cell length, computed from node coordinates.
    pub fn geometric_cell_length(&self, c: usize) -> f64 {
        let [a, b] = self.cells[c];
        crate::network::distance(&self.nodes[a], &self.nodes[b])
    }
}

/// Unit tangent of every edge, pointing from source to target.
pub fn tangents(net: &Network) -> Vec<Point> {
    (0..net.num_edges())
        .map(|e| {
            let (s, t) = net.endpoints(e);
            let a = net.position(s);
            let b = net.position(t);
            let len = net.length(e);
            [(b[0] - a[0]) / len, (b[1] - a[1]) / len, (b[2] - a[2]) / len]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

/// Shortest distance along edges from `root` (a vertex index) to every
/// vertex, ignoring edge direction.
pub fn geodesic_distances(net: &Network, root: usize) -> Result<Vec<f64>> {
    if root >= net.num_vertices() {
        return Err(Error::InvalidParameter(format!("root index {root} out of range")));
    }
    let adj = net.undirected_adjacency();
    let mut dist = vec![f64::INFINITY; net.num_vertices()];
    dist[root] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem(0.0, root));
    while let Some(HeapItem(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, e) in &adj[v] {
            let nd = d + net.length(e);
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(HeapItem(nd, w));
            }
        }
    }
    if let Some(v) = dist.iter().position(|d| !d.is_finite()) {
        return Err(Error::InvalidNetwork(format!(
            "vertex {} unreachable from the root",
            net.vertices()[v].id
        )));
    }
    Ok(dist)
}

/// Geodesic distance at arclength `s` on edge `e`, interpolated affinely
/// between the edge's endpoint distances.
pub fn distance_on_edge(net: &Network, vertex_distance: &[f64], e: usize, s: f64) -> f64 {
    let (a, b) = net.endpoints(e);
    let frac = s / net.length(e);
    vertex_distance[a] + frac * (vertex_distance[b] - vertex_distance[a])
}

/// Geodesic distance of every mesh node.
pub fn node_distances(mesh: &NetworkMesh, net: &Network, vertex_distance: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.nodes.len()];
    for e in 0..mesh.num_edges() {
        for (node, s) in mesh.edge_nodes(e).iter().zip(mesh.arclengths(e)) {
            out[*node] = distance_on_edge(net, vertex_distance, e, s);
        }
    }
    out
}
