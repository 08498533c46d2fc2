//! Pulsatile scenario files (TOML or JSON) and tabulated waveforms.
//!
//! ```toml
//! network = "tree.json"        # relative to the scenario file; or a [tree] table
//! model = "stokes"             # or "hydraulic"
//! boundary_pressure = 0.0      # Pa, on every boundary vertex without a [[bc]]
//! track = [0, 7, 8]
//!
//! [wall]
//! kind = "travelling"          # or "uniform"
//! amplitude = 0.1
//! frequency = 0.1              # Hz
//! wavelength = 8e-3            # m
//! waveform = "shape.csv"       # optional, two columns: phase, displacement
//!
//! [[bc]]
//! vertex = 0
//! pressure = 10.0              # or outflow = ... (m³/s, positive leaving)
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use netflow_core::models::BoundaryConditions;
use netflow_core::pulsatile::{FlowModel, PulsatileScenario, WallKind, WallMotion, Waveform};
use netflow_core::{classify_vertices, generate_tree, Network, TreeParams};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network_io::read_network;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Hydraulic,
    Stokes,
}

impl From<ModelName> for FlowModel {
    fn from(m: ModelName) -> Self {
        match m {
            ModelName::Hydraulic => FlowModel::Hydraulic,
            ModelName::Stokes => FlowModel::Stokes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WallKindName {
    Uniform,
    Travelling,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSpec {
    pub generations: Option<u32>,
    pub root_radius: Option<f64>,
    pub murray_exponent: Option<f64>,
    pub root_length: Option<f64>,
    pub length_ratio: Option<f64>,
    pub branch_angle: Option<f64>,
}

impl TreeSpec {
    pub fn params(&self) -> TreeParams {
        let d = TreeParams::default();
        TreeParams {
            generations: self.generations.unwrap_or(d.generations),
            root_radius: self.root_radius.unwrap_or(d.root_radius),
            murray_exponent: self.murray_exponent.unwrap_or(d.murray_exponent),
            root_length: self.root_length.unwrap_or(d.root_length),
            length_ratio: self.length_ratio.unwrap_or(d.length_ratio),
            branch_angle: self.branch_angle.unwrap_or(d.branch_angle),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallSpec {
    pub kind: WallKindName,
    pub amplitude: f64,
    pub frequency: f64,
    pub wavelength: Option<f64>,
    pub waveform: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcRecord {
    pub vertex: u64,
    pub pressure: Option<f64>,
    pub outflow: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub network: Option<PathBuf>,
    pub tree: Option<TreeSpec>,
    pub model: Option<ModelName>,
    pub viscosity: Option<f64>,
    pub root: Option<u64>,
    pub cells_per_edge: Option<usize>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub track: Option<Vec<u64>>,
    pub snapshot_every: Option<usize>,
    #[serde(default)]
    pub volumes: bool,
    pub boundary_pressure: Option<f64>,
    #[serde(default)]
    pub bc: Vec<BcRecord>,
    pub wall: WallSpec,
}

/// A scenario ready to run, with its output options.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScenario {
    pub scenario: PulsatileScenario,
    pub track: Vec<u64>,
    pub snapshot_every: Option<usize>,
    pub volumes: bool,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

pub fn parse_scenario_file(text: &str, path: &Path) -> Result<ScenarioFile> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    match ext {
        "toml" => toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
            Error::Parse {
                path: path.to_path_buf(),
                line,
                column,
                message: e.message().to_string(),
            }
        }),
        "json" => serde_json::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }),
        _ => Err(Error::Usage(format!(
            "{}: scenario files must end in .toml or .json",
            path.display()
        ))),
    }
}

/// Reads a two-column `phase, displacement` CSV. A non-numeric first row
/// is taken as a header; `#` starts a comment line.
pub fn read_waveform(path: &Path) -> Result<Waveform> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_waveform(&text, path)
}

pub fn parse_waveform(text: &str, path: &Path) -> Result<Waveform> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line() as usize),
            column: 0,
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                column: 0,
                message: format!("expected 2 columns, found {}", record.len()),
            });
        }
        match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
            (Ok(phase), Ok(w)) => samples.push((phase, w)),
            _ if i == 0 => continue,
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    column: 0,
                    message: format!("non-numeric sample {:?}", record.iter().collect::<Vec<_>>()),
                })
            }
        }
    }
    let waveform = Waveform::Tabulated(samples);
    waveform
        .validate()
        .map_err(|e| Error::invalid(path, "waveform", e.to_string()))?;
    Ok(waveform)
}

impl ScenarioFile {
    /// Resolves referenced files relative to `base` and builds the scenario.
    pub fn load(self, path: &Path) -> Result<LoadedScenario> {
        let base = path.parent().unwrap_or(Path::new("."));
        let network: Network = match (&self.network, &self.tree) {
            (Some(file), None) => read_network(&base.join(file))?,
            (None, Some(tree)) => generate_tree(&tree.params())
                .map_err(|e| Error::invalid(path, "tree", e.to_string()))?,
            _ => {
                return Err(Error::invalid(
                    path,
                    "network",
                    "exactly one of `network` and `[tree]` is required",
                ))
            }
        };

        let w = &self.wall;
        let kind = match (w.kind, w.wavelength) {
            (WallKindName::Uniform, None) => WallKind::Uniform,
            (WallKindName::Travelling, Some(wavelength)) => WallKind::Travelling { wavelength },
            (WallKindName::Uniform, Some(_)) => {
                return Err(Error::invalid(path, "wall", "uniform wall motion takes no wavelength"))
            }
            (WallKindName::Travelling, None) => {
                return Err(Error::invalid(path, "wall", "travelling wall motion needs a wavelength"))
            }
        };
        let waveform = match &w.waveform {
            Some(file) => read_waveform(&base.join(file))?,
            None => Waveform::Sine,
        };
        let wall = WallMotion {
            kind,
            amplitude: w.amplitude,
            frequency: w.frequency,
            waveform,
        };
        wall.validate().map_err(|e| Error::invalid(path, "wall", e.to_string()))?;

        let root = self.root.unwrap_or(0);
        let mut scenario = PulsatileScenario::new(network, wall, root)
            .map_err(|e| Error::invalid(path, "scenario", e.to_string()))?;
        let bcs = self.boundary_conditions(&scenario.network, path)?;
        scenario.bcs = bcs;
        if let Some(m) = self.model {
            scenario.model = m.into();
        }
        if let Some(mu) = self.viscosity {
            scenario.viscosity = mu;
        }
        if let Some(dt) = self.dt {
            scenario.dt = dt;
        }
        if let Some(t) = self.t_end {
            scenario.t_end = t;
        }
        if let Some(n) = self.cells_per_edge {
            scenario.cells_per_edge = n;
        }
        let track = match self.track {
            Some(t) => t,
            None => default_track(&scenario.network)?,
        };
        Ok(LoadedScenario {
            scenario,
            track,
            snapshot_every: self.snapshot_every,
            volumes: self.volumes,
        })
    }

    fn boundary_conditions(&self, net: &Network, path: &Path) -> Result<BoundaryConditions> {
        let mut bcs = BoundaryConditions::uniform_pressure(net, self.boundary_pressure.unwrap_or(0.0))?;
        for (i, bc) in self.bc.iter().enumerate() {
            let at = format!("bc[{i}] (vertex {})", bc.vertex);
            net.vertex_index(bc.vertex)
                .map_err(|_| Error::invalid(path, &at, "unknown vertex"))?;
            bcs = match (bc.pressure, bc.outflow) {
                (Some(p), None) => bcs.pressure(bc.vertex, p),
                (None, Some(q)) => bcs.outflow(bc.vertex, q),
                _ => return Err(Error::invalid(path, at, "give exactly one of pressure and outflow")),
            };
        }
        Ok(bcs)
    }
}

/// Boundary vertex ids in ascending order.
pub fn default_track(net: &Network) -> Result<Vec<u64>> {
    let cls = classify_vertices(net)?;
    let mut ids: Vec<u64> = cls.boundary.iter().map(|&(v, _)| net.vertices()[v].id).collect();
    ids.sort_unstable();
    Ok(ids)
}

pub fn read_scenario(path: &Path) -> Result<LoadedScenario> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario_file(&text, path)?.load(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_scenario_with_generated_tree() {
        let text = r#"
model = "hydraulic"
dt = 0.5
t_end = 20.0
[tree]
generations = 2
[wall]
kind = "travelling"
amplitude = 0.1
frequency = 0.1
wavelength = 8e-3
[[bc]]
vertex = 0
pressure = 2.0
"#;
        let path = Path::new("s.toml");
        let loaded = parse_scenario_file(text, path).unwrap().load(path).unwrap();
        assert_eq!(loaded.scenario.network.num_edges(), 3);
        assert_eq!(loaded.scenario.model, FlowModel::Hydraulic);
        assert_eq!(loaded.scenario.dt, 0.5);
        assert_eq!(loaded.track, vec![0, 2, 3]);
        assert_eq!(
            loaded.scenario.wall.kind,
            WallKind::Travelling { wavelength: 8e-3 }
        );
        // defaults
        assert_eq!(loaded.scenario.cells_per_edge, 8);
        assert!(!loaded.volumes);
    }

    #[test]
    fn json_scenario_defaults() {
        let text = r#"{"tree": {}, "wall": {"kind": "uniform", "amplitude": 0.05, "frequency": 2.0}}"#;
        let path = Path::new("s.json");
        let loaded = parse_scenario_file(text, path).unwrap().load(path).unwrap();
        assert_eq!(loaded.scenario.network.num_edges(), 15);
        assert_eq!(loaded.scenario.dt, 0.005);
        assert!((loaded.scenario.t_end - 2.5).abs() < 1e-15);
        assert_eq!(loaded.scenario.model, FlowModel::Stokes);
    }

    #[test]
    fn rejects_bad_scenarios_with_locations() {
        let path = Path::new("s.toml");
        let unknown = "colour = 1\n[tree]\n[wall]\nkind = \"uniform\"\namplitude = 0.1\nfrequency = 1.0\n";
        match parse_scenario_file(unknown, path).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 1);
                assert!(message.contains("colour"), "{message}");
            }
            other => panic!("{other}"),
        }
        let no_wavelength = "[tree]\n[wall]\nkind = \"travelling\"\namplitude = 0.1\nfrequency = 1.0\n";
        let err = parse_scenario_file(no_wavelength, path).unwrap().load(path).unwrap_err();
        assert!(err.to_string().contains("wavelength"));
        let both = "[tree]\n[wall]\nkind = \"uniform\"\namplitude = 0.1\nfrequency = 1.0\n[[bc]]\nvertex = 0\npressure = 1.0\noutflow = 1.0\n";
        let err = parse_scenario_file(both, path).unwrap().load(path).unwrap_err();
        assert!(err.to_string().contains("bc[0]"));
        let big = "[tree]\n[wall]\nkind = \"uniform\"\namplitude = 1.5\nfrequency = 1.0\n";
        assert!(parse_scenario_file(big, path).unwrap().load(path).is_err());
        assert!(parse_scenario_file("", Path::new("s.yaml")).is_err());
    }

    #[test]
    fn waveform_csv() {
        let path = Path::new("w.csv");
        let w = parse_waveform("phase,displacement\n0.0, 0.0\n0.25,1.0\n# peak\n0.5,0\n0.75,-1\n", path).unwrap();
        assert_eq!(w.value(0.125), 0.5);
        assert!(parse_waveform("0,0\n0.5\n", path).is_err());
        assert!(parse_waveform("0,0\n0.5,x\n", path).is_err());
        assert!(parse_waveform("0,0\n1.5,1\n", path).is_err());
        assert!(parse_waveform("0,0\n", path).is_err());
    }
}
