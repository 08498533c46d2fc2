//! JSON network files.
//!
//! ```json
//! {
//!   "vertices": [{"id": 0, "x": 0.0, "y": 0.0, "z": 0.0}, ...],
//!   "edges": [{"id": 0, "source": 0, "target": 1, "radius1": 5e-5,
//!              "radius2": 1.5e-4, "resistance": 1e12}, ...]
//! }
//! ```
//!
//! Lengths are in meters, resistance in Pa·s/m⁴. `radius2` defaults to
//! `3 * radius1`; `resistance` overrides the annular Poiseuille value.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use netflow_core::{Edge, Network, Vertex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexRecord {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub id: u64,
    pub source: u64,
    pub target: u64,
    pub radius1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resistance: Option<f64>,
}

impl NetworkFile {
    pub fn from_network(net: &Network) -> Self {
        NetworkFile {
            vertices: net
                .vertices()
                .iter()
                .map(|v| VertexRecord {
                    id: v.id,
                    x: v.position[0],
                    y: v.position[1],
                    z: v.position[2],
                })
                .collect(),
            edges: net
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    id: e.id,
                    source: e.source,
                    target: e.target,
                    radius1: e.inner_radius,
                    radius2: Some(e.outer_radius),
                    resistance: e.resistance,
                })
                .collect(),
        }
    }

    /// Checks each record, then builds the network. `path` only labels
    /// diagnostics.
    pub fn into_network(self, path: &Path) -> Result<Network> {
        let mut ids = BTreeSet::new();
        for (i, v) in self.vertices.iter().enumerate() {
            let at = format!("vertices[{i}] (id {})", v.id);
            if !ids.insert(v.id) {
                return Err(Error::invalid(path, at, "duplicate vertex id"));
            }
            if ![v.x, v.y, v.z].iter().all(|c| c.is_finite()) {
                return Err(Error::invalid(path, at, "non-finite coordinate"));
            }
        }
        let mut edge_ids = BTreeSet::new();
        for (i, e) in self.edges.iter().enumerate() {
            let at = format!("edges[{i}] (id {})", e.id);
            if !edge_ids.insert(e.id) {
                return Err(Error::invalid(path, at, "duplicate edge id"));
            }
            for (role, v) in [("source", e.source), ("target", e.target)] {
                if !ids.contains(&v) {
                    return Err(Error::invalid(path, at, format!("{role} vertex {v} does not exist")));
                }
            }
            if !(e.radius1.is_finite() && e.radius1 > 0.0) {
                return Err(Error::invalid(path, at, format!("radius1 = {} must be positive", e.radius1)));
            }
            if let Some(r2) = e.radius2 {
                if !(r2.is_finite() && r2 > e.radius1) {
                    return Err(Error::invalid(
                        path,
                        at,
                        format!("radius2 = {r2} must exceed radius1 = {}", e.radius1),
                    ));
                }
            }
            if let Some(r) = e.resistance {
                if !(r.is_finite() && r > 0.0) {
                    return Err(Error::invalid(path, at, format!("resistance = {r} must be positive")));
                }
            }
        }
        let vertices = self
            .vertices
            .iter()
            .map(|v| Vertex {
                id: v.id,
                position: [v.x, v.y, v.z],
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|r| {
                let mut e = Edge::new(r.id, r.source, r.target, r.radius1);
                if let Some(r2) = r.radius2 {
                    e.outer_radius = r2;
                }
                e.resistance = r.resistance;
                e
            })
            .collect();
        Network::new(vertices, edges).map_err(|e| Error::invalid(path, "network", e.to_string()))
    }
}

pub fn parse_network(text: &str, path: &Path) -> Result<Network> {
    let file: NetworkFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.into_network(path)
}

pub fn read_network(path: &Path) -> Result<Network> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_network(&text, path)
}

pub fn network_to_string(net: &Network) -> String {
    let mut s = serde_json::to_string_pretty(&NetworkFile::from_network(net))
        .expect("network records always serialize");
    s.push('\n');
    s
}

pub fn write_network(net: &Network, path: &Path) -> Result<()> {
    fs::write(path, network_to_string(net)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use netflow_core::generate_y;

    fn p() -> &'static Path {
        Path::new("net.json")
    }

    #[test]
    fn round_trip_preserves_attributes() {
        let mut net = generate_y([1e-3, 7e-4, 9e-4], [5e-5, 4e-5, 3.3e-5]).unwrap();
        net = net.with_resistances(|e| 1e12 * e.id as f64 + 0.1).unwrap();
        let text = network_to_string(&net);
        assert_eq!(parse_network(&text, p()).unwrap(), net);
    }

    #[test]
    fn missing_vertex_is_named() {
        let text = r#"{"vertices": [{"id": 0, "x": 0, "y": 0, "z": 0}, {"id": 1, "x": 1, "y": 0, "z": 0}],
            "edges": [{"id": 0, "source": 0, "target": 1, "radius1": 0.1},
                      {"id": 1, "source": 1, "target": 42, "radius1": 0.1}]}"#;
        let err = parse_network(text, p()).unwrap_err().to_string();
        assert!(err.contains("edges[1]"), "{err}");
        assert!(err.contains("42"), "{err}");
    }

    #[test]
    fn outer_radius_must_exceed_inner() {
        let text = r#"{"vertices": [{"id": 0, "x": 0, "y": 0, "z": 0}, {"id": 1, "x": 1, "y": 0, "z": 0}],
            "edges": [{"id": 5, "source": 0, "target": 1, "radius1": 0.1, "radius2": 0.1}]}"#;
        let err = parse_network(text, p()).unwrap_err().to_string();
        assert!(err.contains("edges[0] (id 5)") && err.contains("radius2"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let text = "{\n  \"vertices\": [],\n  \"edges\": [],\n  \"colour\": 1\n}";
        match parse_network(text, p()).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 4);
                assert!(message.contains("colour"));
            }
            other => panic!("unexpected {other}"),
        }
        let text = r#"{"vertices": [{"id": 0, "x": 0, "y": 0, "z": 0, "w": 1}], "edges": []}"#;
        assert!(matches!(parse_network(text, p()), Err(Error::Parse { .. })));
    }

    #[test]
    fn default_outer_radius_is_three_times_inner() {
        let text = r#"{"vertices": [{"id": 0, "x": 0, "y": 0, "z": 0}, {"id": 1, "x": 0, "y": 0, "z": 2e-3}],
            "edges": [{"id": 0, "source": 0, "target": 1, "radius1": 5e-5}]}"#;
        let net = parse_network(text, p()).unwrap();
        assert_eq!(net.edges()[0].outer_radius, 3.0 * 5e-5);
        assert_eq!(net.length(0), 2e-3);
    }

    #[test]
    fn structural_errors_are_reported() {
        let disconnected = r#"{"vertices": [{"id": 0, "x": 0, "y": 0, "z": 0}, {"id": 1, "x": 1, "y": 0, "z": 0},
            {"id": 2, "x": 2, "y": 0, "z": 0}],
            "edges": [{"id": 0, "source": 0, "target": 1, "radius1": 0.1}]}"#;
        let err = parse_network(disconnected, p()).unwrap_err().to_string();
        assert!(err.contains("vertex 2"), "{err}");
        assert!(parse_network("[1, 2", p()).is_err());
    }
}
