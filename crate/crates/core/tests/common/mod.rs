#![allow(dead_code)]

use std::collections::BTreeMap;

use netflow_core::models::{BoundaryConditions, Coefficients, FlowProblem, Solution};
use netflow_core::fem::QuadPoint;
use netflow_core::{classify_vertices, Edge, Network, NetworkMesh, Vertex};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Random connected network with random resistances: a random tree,
/// optionally closed into loops by chords between interior vertices.
pub fn random_network(seed: u64, max_edges: usize, loops: bool) -> Network {
    let mut rng = StdRng::seed_from_u64(seed);
    let tree_edges = rng.gen_range(1..=max_edges.min(40));
    let mut vertices = vec![Vertex {
        id: 0,
        position: [0.0; 3],
    }];
    let mut pairs = Vec::new();
    for v in 1..=tree_edges {
        let parent = rng.gen_range(0..v);
        let p = vertices[parent].position;
        let position = [
            p[0] + rng.gen_range(0.2..1.0),
            p[1] + rng.gen_range(-1.0..1.0),
            p[2] + rng.gen_range(-1.0..1.0),
        ];
        vertices.push(Vertex {
            id: v as u64,
            position,
        });
        if rng.gen_bool(0.5) {
            pairs.push((parent, v));
        } else {
            pairs.push((v, parent));
        }
    }
    if loops {
        let mut degree = vec![0usize; vertices.len()];
        for &(a, b) in &pairs {
            degree[a] += 1;
            degree[b] += 1;
        }
        let interior: Vec<usize> = (0..vertices.len()).filter(|&v| degree[v] >= 2).collect();
        let chords = rng.gen_range(0..=3usize);
        for _ in 0..chords {
            if interior.len() < 2 || pairs.len() >= max_edges {
                break;
            }
            let a = interior[rng.gen_range(0..interior.len())];
            let b = interior[rng.gen_range(0..interior.len())];
            if a != b && !pairs.iter().any(|&(s, t)| (s, t) == (a, b) || (s, t) == (b, a)) {
                pairs.push((a, b));
            }
        }
    }
    let edges = pairs
        .iter()
        .enumerate()
        .map(|(i, &(s, t))| {
            let mut e = Edge::new(100 + i as u64, s as u64, t as u64, 0.05);
            e.resistance = Some(rng.gen_range(-3.0f64..3.0).exp());
            e
        })
        .collect();
    Network::new(vertices, edges).expect("random network is valid")
}

/// Pressure 1 at the lowest-id boundary vertex, 0 at the others.
pub fn one_inlet(net: &Network) -> BoundaryConditions {
    let cls = classify_vertices(net).unwrap();
    let mut boundary: Vec<u64> = cls.boundary.iter().map(|&(v, _)| net.vertices()[v].id).collect();
    boundary.sort_unstable();
    let mut bcs = BoundaryConditions::new().pressure(boundary[0], 1.0);
    for &id in &boundary[1..] {
        bcs = bcs.pressure(id, 0.0);
    }
    bcs
}

/// Kirchhoff nodal analysis by dense Gaussian elimination: conductance
/// `1 / (R L)` per edge, `fixed` pressures by vertex index. Returns vertex
/// pressures and edge flows from source to target.
pub fn kirchhoff(net: &Network, fixed: &BTreeMap<usize, f64>) -> (Vec<f64>, Vec<f64>) {
    let n = net.num_vertices();
    let mut a = vec![vec![0.0; n + 1]; n];
    let conductance: Vec<f64> = net
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| 1.0 / (edge.resistance.unwrap() * net.length(e)))
        .collect();
    for (e, &g) in conductance.iter().enumerate() {
        let (s, t) = net.endpoints(e);
        a[s][s] += g;
        a[t][t] += g;
        a[s][t] -= g;
        a[t][s] -= g;
    }
    for (&v, &p) in fixed {
        a[v] = vec![0.0; n + 1];
        a[v][v] = 1.0;
        a[v][n] = p;
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for row in 0..n {
            if row != col {
                let m = a[row][col] / a[col][col];
                if m != 0.0 {
                    for k in col..=n {
                        a[row][k] -= m * a[col][k];
                    }
                }
            }
        }
    }
    let p: Vec<f64> = (0..n).map(|i| a[i][n] / a[i][i]).collect();
    let q = conductance
        .iter()
        .enumerate()
        .map(|(e, &g)| {
            let (s, t) = net.endpoints(e);
            g * (p[s] - p[t])
        })
        .collect();
    (p, q)
}

pub fn solve_steady(
    net: &Network,
    cells_per_edge: usize,
    bcs: &BoundaryConditions,
    source: &dyn Fn(&QuadPoint) -> f64,
    stokes: bool,
) -> Solution {
    let mesh = NetworkMesh::build(net, cells_per_edge).unwrap();
    let coeffs = Coefficients::from_network(net, &mesh, 7e-4).unwrap();
    let problem = FlowProblem {
        net,
        mesh: &mesh,
        coeffs: &coeffs,
        bcs,
        source,
    };
    if stokes {
        netflow_core::models::solve_stokes(&problem).unwrap()
    } else {
        netflow_core::models::solve_hydraulic(&problem).unwrap()
    }
}

/// `max_i |a_i − b_i| / max(‖b‖∞, tiny)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

pub fn jump_bound(sol: &Solution) -> f64 {
    1e-10 * sol.flux.max_abs().max(1.0)
}
