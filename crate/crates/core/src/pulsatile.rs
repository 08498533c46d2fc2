//! Quasi-static perivascular flow driven by arterial wall motion.
//!
//! Each time step is a steady solve whose coefficients follow the moving
//! inner wall: with `R1(s, t)` the arterial radius and the outer radius
//! `R2` frozen at its initial value, the annulus area is
//! `A = π (R2² − R1²)`, the resistance is the annular Poiseuille value at
//! the cell midpoint, and the volume source is `f = −∂t A = 2π R1 ∂t R1`.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fem::{QuadPoint, QuadratureRule};
use crate::mesh::{distance_on_edge, geodesic_distances, NetworkMesh};
use crate::models::{
    annular_resistance, annulus_area, solve_hydraulic, solve_stokes, BoundaryConditions,
    Coefficients, FlowProblem, Solution, DEFAULT_VISCOSITY,
};
use crate::network::{classify_vertices, Network, VertexClassification};

/// Periodic wall displacement profile `w(φ)`, period one in phase.
#[derive(Debug, Clone, PartialEq)]
pub enum Waveform {
    /// `w(φ) = sin 2πφ`.
    Sine,
    /// Samples `(φ, w)` with strictly increasing phases in `[0, 1)`,
    /// interpolated linearly and periodically.
    Tabulated(Vec<(f64, f64)>),
}

/// Phase step of the centered difference used for tabulated waveforms.
const TABLE_DIFF_STEP: f64 = 1e-4;

impl Waveform {
    pub fn validate(&self) -> Result<()> {
        if let Waveform::Tabulated(samples) = self {
            if samples.len() < 2 {
                return Err(Error::InvalidParameter(
                    "tabulated waveform needs at least two samples".into(),
                ));
            }
            for (i, &(phase, w)) in samples.iter().enumerate() {
                if !(phase.is_finite() && w.is_finite() && (0.0..1.0).contains(&phase)) {
                    return Err(Error::InvalidParameter(format!(
                        "waveform sample {i}: phase must lie in [0, 1) and values be finite"
                    )));
                }
                if i > 0 && phase <= samples[i - 1].0 {
                    return Err(Error::InvalidParameter(format!(
                        "waveform sample {i}: phases must increase strictly"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, phase: f64) -> f64 {
        match self {
            Waveform::Sine => libm::sin(2.0 * PI * phase),
            Waveform::Tabulated(samples) => {
                let phi = phase - libm::floor(phase);
                let n = samples.len();
                let k = samples.partition_point(|&(p, _)| p <= phi);
                // bracketing samples, wrapping around the period
                let (p0, w0, p1, w1) = if k == 0 {
                    let (pl, wl) = samples[n - 1];
                    (pl - 1.0, wl, samples[0].0, samples[0].1)
                } else if k == n {
                    let (pl, wl) = samples[n - 1];
                    (pl, wl, samples[0].0 + 1.0, samples[0].1)
                } else {
                    (samples[k - 1].0, samples[k - 1].1, samples[k].0, samples[k].1)
                };
                w0 + (w1 - w0) * (phi - p0) / (p1 - p0)
            }
        }
    }

    /// `dw/dφ`: exact for the sine, a centered difference otherwise.
    pub fn derivative(&self, phase: f64) -> f64 {
        match self {
            Waveform::Sine => 2.0 * PI * libm::cos(2.0 * PI * phase),
            Waveform::Tabulated(_) => {
                (self.value(phase + TABLE_DIFF_STEP) - self.value(phase - TABLE_DIFF_STEP))
                    / (2.0 * TABLE_DIFF_STEP)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WallKind {
    /// Every point of the network moves in phase.
    Uniform,
    /// Wave travelling away from the root: phase `f t − d / λ`, with `d`
    /// the geodesic distance from the root.
    Travelling { wavelength: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WallMotion {
    pub kind: WallKind,
    /// Relative radius amplitude ε, `0 ≤ ε < 1`.
    pub amplitude: f64,
    /// Hz.
    pub frequency: f64,
    pub waveform: Waveform,
}

impl WallMotion {
    pub fn uniform_sine(amplitude: f64, frequency: f64) -> Self {
        WallMotion {
            kind: WallKind::Uniform,
            amplitude,
            frequency,
            waveform: Waveform::Sine,
        }
    }

    pub fn travelling_sine(amplitude: f64, frequency: f64, wavelength: f64) -> Self {
        WallMotion {
            kind: WallKind::Travelling { wavelength },
            amplitude,
            frequency,
            waveform: Waveform::Sine,
        }
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.amplitude) {
            return Err(Error::InvalidParameter(format!(
                "wall amplitude must satisfy 0 <= eps < 1, got {}",
                self.amplitude
            )));
        }
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "frequency must be positive, got {}",
                self.frequency
            )));
        }
        if let WallKind::Travelling { wavelength } = self.kind {
            if !(wavelength > 0.0 && wavelength.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "wavelength must be positive, got {wavelength}"
                )));
            }
        }
        self.waveform.validate()
    }

    fn phase(&self, distance: f64, t: f64) -> f64 {
        match self.kind {
            WallKind::Uniform => self.frequency * t,
            WallKind::Travelling { wavelength } => self.frequency * t - distance / wavelength,
        }
    }

    /// Relative radius `R1 / R1⁰` and its time derivative.
    pub fn relative_radius(&self, distance: f64, t: f64) -> (f64, f64) {
        let phase = self.phase(distance, t);
        let eps = self.amplitude;
        (
            1.0 + eps * self.waveform.value(phase),
            eps * self.frequency * self.waveform.derivative(phase),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowModel {
    Hydraulic,
    Stokes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulsatileScenario {
    pub network: Network,
    pub viscosity: f64,
    pub bcs: BoundaryConditions,
    pub wall: WallMotion,
    pub model: FlowModel,
    /// Vertex id at which the travelling wave has zero phase lag.
    pub root: u64,
    pub t_end: f64,
    pub dt: f64,
    pub cells_per_edge: usize,
}

impl PulsatileScenario {
    /// Demo defaults: zero pressure on every boundary vertex, Stokes model,
    /// 100 steps per period over five periods, 8 cells per edge.
    pub fn new(network: Network, wall: WallMotion, root: u64) -> Result<Self> {
        let bcs = BoundaryConditions::uniform_pressure(&network, 0.0)?;
        let period = wall.period();
        Ok(PulsatileScenario {
            network,
            viscosity: DEFAULT_VISCOSITY,
            bcs,
            wall,
            model: FlowModel::Stokes,
            root,
            t_end: 5.0 * period,
            dt: period / 100.0,
            cells_per_edge: 8,
        })
    }

    fn validate(&self) -> Result<()> {
        self.wall.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_end = {} must be at least dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(())
    }

    /// Number of steps after t = 0: times are `k · dt` for `k = 0..=steps`.
    pub fn num_steps(&self) -> usize {
        libm::round(self.t_end / self.dt) as usize
    }
}

/// Flux of one solve, kept for export.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub solution: Solution,
}

/// Recorded boundary fluxes (outflow positive) and per-step diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    /// Tracked vertex ids, in column order.
    pub vertices: Vec<u64>,
    /// `flux[j][k]`: outflow through `vertices[j]` at `times[k]` (m³/s).
    pub flux: Vec<Vec<f64>>,
    /// Largest `|[[q]]_b|` per step.
    pub max_jump: Vec<f64>,
    /// `‖q‖∞` per step.
    pub max_flux: Vec<f64>,
    /// `|Σ outflow − ∫ f|` per step.
    pub balance_residual: Vec<f64>,
    /// [`Solution::balance_scale`] per step.
    pub balance_scale: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
}

impl TimeSeries {
    pub fn column(&self, vertex: u64) -> Result<&[f64]> {
        self.vertices
            .iter()
            .position(|&v| v == vertex)
            .map(|j| self.flux[j].as_slice())
            .ok_or(Error::UnknownVertex(vertex))
    }

    /// Trapezoidal integral of the outflow at `vertex` over `[0, periods·T]`.
    pub fn net_volume(&self, vertex: u64, periods: usize, period: f64) -> Result<f64> {
        let q = self.column(vertex)?;
        let end = periods as f64 * period;
        let last = self.times.iter().position(|&t| (t - end).abs() <= 1e-9 * period);
        let Some(last) = last else {
            return Err(Error::InsufficientSamples(format!(
                "no sample at t = {end} (series ends at {})",
                self.times.last().copied().unwrap_or(0.0)
            )));
        };
        if last == 0 {
            return Err(Error::InsufficientSamples("need at least two samples".into()));
        }
        Ok(trapezoid(&self.times[..=last], &q[..=last]))
    }

    /// Running trapezoidal volume for `vertex`, one entry per sample.
    pub fn cumulative_volume(&self, vertex: u64) -> Result<Vec<f64>> {
        let q = self.column(vertex)?;
        let mut out = Vec::with_capacity(q.len());
        let mut acc = 0.0;
        for k in 0..q.len() {
            if k > 0 {
                acc += 0.5 * (self.times[k] - self.times[k - 1]) * (q[k] + q[k - 1]);
            }
            out.push(acc);
        }
        Ok(out)
    }
}

/// Composite trapezoidal rule over samples `(t_k, y_k)`.
pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2)
        .zip(y.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
        .sum()
}

/// A scenario with its mesh, geodesic distances and frozen outer radii.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub scenario: PulsatileScenario,
    pub mesh: NetworkMesh,
    pub classification: VertexClassification,
    vertex_distance: Vec<f64>,
}

impl Simulation {
    pub fn new(scenario: PulsatileScenario) -> Result<Self> {
        scenario.validate()?;
        let net = &scenario.network;
        let root = net.vertex_index(scenario.root)?;
        let vertex_distance = geodesic_distances(net, root)?;
        let mesh = NetworkMesh::build(net, scenario.cells_per_edge)?;
        let classification = classify_vertices(net)?;
        let sim = Simulation {
            scenario,
            mesh,
            classification,
            vertex_distance,
        };
        sim.check_radius_bounds()?;
        Ok(sim)
    }

    fn check_radius_bounds(&self) -> Result<()> {
        let peak = 1.0
            + self.scenario.wall.amplitude
                * match &self.scenario.wall.waveform {
                    Waveform::Sine => 1.0,
                    Waveform::Tabulated(s) => s.iter().fold(0.0f64, |m, (_, w)| m.max(w.abs())),
                };
        let trough = 2.0 - peak;
        if trough <= 0.0 {
            return Err(Error::InvalidParameter(
                "wall motion collapses the inner radius".into(),
            ));
        }
        for e in self.scenario.network.edges() {
            if e.inner_radius * peak >= e.outer_radius {
                return Err(Error::InvalidParameter(format!(
                    "wall motion on edge {} reaches the outer radius",
                    e.id
                )));
            }
        }
        Ok(())
    }

    pub fn network(&self) -> &Network {
        &self.scenario.network
    }

    pub fn period(&self) -> f64 {
        self.scenario.wall.period()
    }

    /// Geodesic distance from the root at arclength `s` of edge `e`.
    pub fn distance(&self, e: usize, s: f64) -> f64 {
        distance_on_edge(self.network(), &self.vertex_distance, e, s)
    }

    /// Arterial radius `R1(s, t)` on edge `e` (index).
    pub fn inner_radius(&self, e: usize, s: f64, t: f64) -> f64 {
        let r0 = self.network().edges()[e].inner_radius;
        r0 * self.scenario.wall.relative_radius(self.distance(e, s), t).0
    }

    /// Volume source `f = 2π R1 ∂t R1` (m³/s per m).
    pub fn source_term(&self, e: usize, s: f64, t: f64) -> f64 {
        let r0 = self.network().edges()[e].inner_radius;
        let (rel, drel) = self.scenario.wall.relative_radius(self.distance(e, s), t);
        2.0 * PI * (r0 * rel) * (r0 * drel)
    }

    /// Cellwise coefficients at time `t`, sampled at cell midpoints.
    pub fn coefficients(&self, t: f64) -> Result<Coefficients> {
        let net = self.network();
        let mu = self.scenario.viscosity;
        let n = self.mesh.num_cells();
        let mut resistance = Vec::with_capacity(n);
        let mut area = Vec::with_capacity(n);
        for c in 0..n {
            let e = self.mesh.cell_edge[c];
            let (s0, s1) = self.mesh.cell_interval(c);
            let r1 = self.inner_radius(e, 0.5 * (s0 + s1), t);
            let r2 = net.edges()[e].outer_radius;
            resistance.push(match net.edges()[e].resistance {
                Some(r) => r,
                None => annular_resistance(mu, r1, r2)?,
            });
            area.push(annulus_area(r1, r2));
        }
        Ok(Coefficients {
            viscosity: mu,
            resistance,
            area,
        })
    }

    /// Steady solve at time `t`.
    pub fn solve_at(&self, t: f64) -> Result<Solution> {
        let coeffs = self.coefficients(t)?;
        let f = |p: &QuadPoint| self.source_term(p.edge, p.s, t);
        let problem = FlowProblem {
            net: self.network(),
            mesh: &self.mesh,
            coeffs: &coeffs,
            bcs: &self.scenario.bcs,
            source: &f,
        };
        match self.scenario.model {
            FlowModel::Hydraulic => solve_hydraulic(&problem),
            FlowModel::Stokes => solve_stokes(&problem),
        }
    }

    /// Runs every step `t_k = k · dt`, recording outflow at the `tracked`
    /// boundary vertices (ids). A snapshot is kept every `snapshot_every`
    /// steps when given.
    pub fn run(&self, tracked: &[u64], snapshot_every: Option<usize>) -> Result<TimeSeries> {
        let net = self.network();
        let mut columns = Vec::with_capacity(tracked.len());
        for &id in tracked {
            let v = net.vertex_index(id)?;
            if !self.classification.is_boundary(v) {
                return Err(Error::InvalidParameter(format!(
                    "tracked vertex {id} is not a boundary vertex"
                )));
            }
            columns.push(v);
        }
        let steps = self.scenario.num_steps();
        let mut series = TimeSeries {
            times: Vec::with_capacity(steps + 1),
            vertices: tracked.to_vec(),
            flux: vec![Vec::with_capacity(steps + 1); tracked.len()],
            max_jump: Vec::with_capacity(steps + 1),
            max_flux: Vec::with_capacity(steps + 1),
            balance_residual: Vec::with_capacity(steps + 1),
            balance_scale: Vec::with_capacity(steps + 1),
            snapshots: Vec::new(),
        };
        for k in 0..=steps {
            let t = k as f64 * self.scenario.dt;
            let sol = self.solve_at(t).map_err(|e| Error::StepFailed {
                time: t,
                source: Box::new(e),
            })?;
            series.times.push(t);
            for (j, &v) in columns.iter().enumerate() {
                series.flux[j].push(sol.outflow(v)?);
            }
            series.max_jump.push(sol.max_jump());
            series.max_flux.push(sol.flux.max_abs());
            series.balance_residual.push(sol.balance_residual());
            series.balance_scale.push(sol.balance_scale());
            if snapshot_every.is_some_and(|every| every > 0 && k % every == 0) {
                series.snapshots.push(Snapshot {
                    step: k,
                    time: t,
                    solution: sol,
                });
            }
        }
        Ok(series)
    }

    /// Volume displaced by the wall per period,
    /// `½ ∫_0^T ∫_Λ |f| ds dt`, by a midpoint rule with `samples` steps.
    pub fn stroke_volume(&self, samples: usize) -> Result<f64> {
        let rule = QuadratureRule::gauss_legendre(4)?;
        let period = self.period();
        let dt = period / samples as f64;
        let mut total = 0.0;
        for k in 0..samples {
            let t = (k as f64 + 0.5) * dt;
            for c in 0..self.mesh.num_cells() {
                let e = self.mesh.cell_edge[c];
                let (s0, s1) = self.mesh.cell_interval(c);
                for (x, w) in rule.iter() {
                    let s = s0 + x * (s1 - s0);
                    total += dt * w * (s1 - s0) * self.source_term(e, s, t).abs();
                }
            }
        }
        Ok(0.5 * total)
    }
}
