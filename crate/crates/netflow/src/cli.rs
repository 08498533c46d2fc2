//! Command-line interface.
//!
//! Exit status: 0 on success, 2 for usage and input errors, 3 for
//! numerical failures (singular or inaccurate solves).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use netflow_core::mms::{run_study, MmsModel};
use netflow_core::models::{
    solve_hydraulic, solve_poisson, solve_stokes, BoundaryConditions, Coefficients, FlowProblem,
    Solution, DEFAULT_VISCOSITY,
};
use netflow_core::pulsatile::{FlowModel, Simulation};
use netflow_core::{
    classify_vertices, generate_line, generate_tree, generate_y, BoundaryKind, Network, NetworkMesh,
    TreeParams,
};

use crate::error::{Error, Result, EXIT_USAGE};
use crate::network_io::{read_network, write_network};
use crate::scenario::read_scenario;
use crate::series::write_series_file;
use crate::vtk::{write_vtk, NodalFields};

const MM: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "netflow", version, about = "Flow simulations on vascular networks")]
pub struct Cli {
    /// Reserved for randomised generators; accepted and ignored.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated network file and print its counts.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Solve a steady model and write `solution.vtk` and `summary.txt`.
    Solve(SolveArgs),
    /// Run a pulsatile scenario and write `timeseries.csv` and snapshots.
    Simulate(SimulateArgs),
    /// Manufactured-solution convergence table.
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenerateKind {
    /// Symmetric binary tree with Murray's-law radii.
    Tree(TreeArgs),
    /// One inlet edge feeding two outlet edges.
    #[command(name = "Y", alias = "y")]
    Y(YArgs),
    /// Straight path of equal edges.
    Line(LineArgs),
}

#[derive(Debug, Args)]
pub struct OutputFile {
    /// Network file to write.
    #[arg(long, default_value = "network.json")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TreeArgs {
    #[arg(long, default_value_t = 4)]
    pub generations: u32,
    /// Root radius in m.
    #[arg(long, conflicts_with = "root_radius_mm")]
    pub root_radius: Option<f64>,
    #[arg(long)]
    pub root_radius_mm: Option<f64>,
    /// Root edge length in m.
    #[arg(long, conflicts_with = "root_length_mm")]
    pub root_length: Option<f64>,
    #[arg(long)]
    pub root_length_mm: Option<f64>,
    #[arg(long)]
    pub murray_exponent: Option<f64>,
    #[arg(long)]
    pub length_ratio: Option<f64>,
    /// Branching half-angle in radians.
    #[arg(long)]
    pub branch_angle: Option<f64>,
    #[command(flatten)]
    pub out: OutputFile,
}

#[derive(Debug, Args)]
pub struct YArgs {
    /// Parent and child lengths in m.
    #[arg(long, value_delimiter = ',', num_args = 1..=3, conflicts_with = "lengths_mm")]
    pub lengths: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 1..=3)]
    pub lengths_mm: Option<Vec<f64>>,
    /// Parent and child radii in m.
    #[arg(long, value_delimiter = ',', num_args = 1..=3, conflicts_with = "radii_mm")]
    pub radii: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 1..=3)]
    pub radii_mm: Option<Vec<f64>>,
    #[command(flatten)]
    pub out: OutputFile,
}

#[derive(Debug, Args)]
pub struct LineArgs {
    #[arg(long, default_value_t = 1)]
    pub edges: usize,
    /// Total length in m.
    #[arg(long, conflicts_with = "length_mm")]
    pub length: Option<f64>,
    #[arg(long)]
    pub length_mm: Option<f64>,
    /// Radius in m.
    #[arg(long, conflicts_with = "radius_mm")]
    pub radius: Option<f64>,
    #[arg(long)]
    pub radius_mm: Option<f64>,
    #[command(flatten)]
    pub out: OutputFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SteadyModel {
    Poisson,
    Hydraulic,
    Stokes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TimeModel {
    Hydraulic,
    Stokes,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long, value_enum, default_value_t = SteadyModel::Hydraulic)]
    pub model: SteadyModel,
    #[arg(long, default_value_t = 8)]
    pub cells_per_edge: usize,
    /// Pressure at every inlet in Pa.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub pressure_in: f64,
    /// Pressure at every outlet in Pa.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub pressure_out: f64,
    /// Dynamic viscosity in Pa·s.
    #[arg(long, default_value_t = DEFAULT_VISCOSITY)]
    pub viscosity: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file (.toml or .json).
    pub scenario: PathBuf,
    #[arg(long, default_value = ".")]
    pub output: PathBuf,
    /// Boundary vertex ids to record.
    #[arg(long, num_args = 1..)]
    pub track: Option<Vec<u64>>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub cells_per_edge: Option<usize>,
    #[arg(long, value_enum)]
    pub model: Option<TimeModel>,
    /// Write a VTK snapshot every N steps.
    #[arg(long, value_name = "N")]
    pub snapshot_every: Option<usize>,
    /// Add cumulative volume columns.
    #[arg(long)]
    pub volumes: bool,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long, value_enum, default_value_t = TimeModel::Hydraulic)]
    pub model: TimeModel,
    #[arg(long, default_value_t = 5)]
    pub levels: usize,
    /// Cells per edge on the coarsest level.
    #[arg(long, default_value_t = 2)]
    pub cells_per_edge: usize,
    /// Directory for `convergence_<model>.csv`.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Usage(format!("--{name} must be positive, got {v}")))
    }
}

fn pick(si: Option<f64>, mm: Option<f64>, name: &str) -> Result<Option<f64>> {
    match (si, mm) {
        (Some(v), _) => positive(name, v).map(Some),
        (None, Some(v)) => positive(&format!("{name}-mm"), v).map(|v| Some(v * MM)),
        (None, None) => Ok(None),
    }
}

fn pick3(si: &Option<Vec<f64>>, mm: &Option<Vec<f64>>, name: &str) -> Result<Option<[f64; 3]>> {
    let (v, scale) = match (si, mm) {
        (Some(v), _) => (v, 1.0),
        (None, Some(v)) => (v, MM),
        (None, None) => return Ok(None),
    };
    if v.len() != 3 {
        return Err(Error::Usage(format!("--{name} takes three values")));
    }
    let mut out = [0.0; 3];
    for (o, &x) in out.iter_mut().zip(v) {
        *o = positive(name, x)? * scale;
    }
    Ok(Some(out))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Parses `args` and runs the command; returns the process exit status.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match run(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Generate { kind } => generate(kind, out),
        Command::Solve(args) => solve(args, out),
        Command::Simulate(args) => simulate(args, out),
        Command::Convergence(args) => convergence(args, out),
    }
}

fn say(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io(Path::new("<stdout>"), e))
}

fn generate(kind: &GenerateKind, out: &mut dyn Write) -> Result<()> {
    let (net, path) = match kind {
        GenerateKind::Tree(a) => {
            let d = TreeParams::default();
            let p = TreeParams {
                generations: a.generations,
                root_radius: pick(a.root_radius, a.root_radius_mm, "root-radius")?.unwrap_or(d.root_radius),
                root_length: pick(a.root_length, a.root_length_mm, "root-length")?.unwrap_or(d.root_length),
                murray_exponent: a.murray_exponent.map_or(Ok(d.murray_exponent), |v| positive("murray-exponent", v))?,
                length_ratio: a.length_ratio.map_or(Ok(d.length_ratio), |v| positive("length-ratio", v))?,
                branch_angle: a.branch_angle.map_or(Ok(d.branch_angle), |v| positive("branch-angle", v))?,
            };
            if p.generations == 0 {
                return Err(Error::Usage("--generations must be at least 1".into()));
            }
            (generate_tree(&p)?, &a.out.output)
        }
        GenerateKind::Y(a) => {
            let child = 5e-5 * 2f64.powf(-1.0 / 3.0);
            let lengths = pick3(&a.lengths, &a.lengths_mm, "lengths")?.unwrap_or([2e-3, 1.6e-3, 1.6e-3]);
            let radii = pick3(&a.radii, &a.radii_mm, "radii")?.unwrap_or([5e-5, child, child]);
            (generate_y(lengths, radii)?, &a.out.output)
        }
        GenerateKind::Line(a) => {
            if a.edges == 0 {
                return Err(Error::Usage("--edges must be at least 1".into()));
            }
            let length = pick(a.length, a.length_mm, "length")?.unwrap_or(1e-3);
            let radius = pick(a.radius, a.radius_mm, "radius")?.unwrap_or(5e-5);
            (generate_line(a.edges, length, radius)?, &a.out.output)
        }
    };
    write_network(&net, path)?;
    let cls = classify_vertices(&net)?;
    say(
        out,
        &format!(
            "wrote {}\nvertices: {}\nedges: {}\nbifurcations: {}\nboundary vertices: {}\n",
            path.display(),
            net.num_vertices(),
            net.num_edges(),
            cls.bifurcations.len(),
            cls.boundary.len()
        ),
    )
}

/// Boundary outflows and junction defects common to all steady models.
struct SteadySummary {
    /// (vertex id, kind, outflow)
    boundary: Vec<(u64, BoundaryKind, f64)>,
    max_jump: f64,
    source_integral: f64,
    scale: f64,
}

impl SteadySummary {
    fn from_solution(net: &Network, sol: &Solution) -> Result<Self> {
        let mut boundary = Vec::new();
        for &(v, kind) in &sol.classification.boundary {
            boundary.push((net.vertices()[v].id, kind, sol.outflow(v)?));
        }
        Ok(SteadySummary {
            boundary,
            max_jump: sol.max_jump(),
            source_integral: sol.source_integral,
            scale: sol.balance_scale(),
        })
    }

    fn from_potential(net: &Network, fields_flux: impl Fn(usize, f64) -> f64) -> Result<Self> {
        let cls = classify_vertices(net)?;
        let (incoming, outgoing) = net.incidence();
        let end = |e: usize| fields_flux(e, net.length(e));
        let start = |e: usize| fields_flux(e, 0.0);
        let mut boundary = Vec::new();
        for &(v, kind) in &cls.boundary {
            let q = match incoming[v].first() {
                Some(&e) => end(e),
                None => -start(outgoing[v][0]),
            };
            boundary.push((net.vertices()[v].id, kind, q));
        }
        let mut max_jump = 0.0f64;
        let mut scale = 0.0f64;
        for &b in &cls.bifurcations {
            let inflow: f64 = incoming[b].iter().map(|&e| end(e)).sum();
            let outflow: f64 = outgoing[b].iter().map(|&e| start(e)).sum();
            max_jump = max_jump.max((inflow - outflow).abs());
        }
        for e in 0..net.num_edges() {
            scale = scale.max(end(e).abs()).max(start(e).abs());
        }
        Ok(SteadySummary {
            boundary,
            max_jump,
            source_integral: 0.0,
            scale,
        })
    }

    fn render(&self, header: &str) -> String {
        let inflow: f64 = self
            .boundary
            .iter()
            .filter(|b| b.1 == BoundaryKind::Inlet)
            .map(|b| -b.2)
            .sum();
        let outflow: f64 = self
            .boundary
            .iter()
            .filter(|b| b.1 == BoundaryKind::Outlet)
            .map(|b| b.2)
            .sum();
        let net_out: f64 = self.boundary.iter().map(|b| b.2).sum();
        let mut s = format!("{header}\n");
        s += &format!("total inflow: {inflow:e} m^3/s\n");
        s += &format!("total outflow: {outflow:e} m^3/s\n");
        s += &format!(
            "mass balance: |in - out + source| = {:e} (scale {:e})\n",
            (net_out - self.source_integral).abs(),
            self.scale
        );
        s += &format!("max junction flux jump: {:e} m^3/s\n", self.max_jump);
        let mut rows = self.boundary.clone();
        rows.sort_by_key(|b| b.0);
        for (id, kind, q) in rows {
            let kind = match kind {
                BoundaryKind::Inlet => "inlet",
                BoundaryKind::Outlet => "outlet",
            };
            s += &format!("vertex {id} ({kind}) outflow: {q:e} m^3/s\n");
        }
        s
    }
}

fn solve(a: &SolveArgs, out: &mut dyn Write) -> Result<()> {
    if a.cells_per_edge == 0 {
        return Err(Error::Usage("--cells-per-edge must be at least 1".into()));
    }
    if !(a.pressure_in.is_finite() && a.pressure_out.is_finite()) {
        return Err(Error::Usage("boundary pressures must be finite".into()));
    }
    if !(a.viscosity.is_finite() && a.viscosity >= 0.0) {
        return Err(Error::Usage(format!("--viscosity must be non-negative, got {}", a.viscosity)));
    }
    let net = read_network(&a.network)?;
    let mesh = NetworkMesh::build(&net, a.cells_per_edge)?;
    let cls = classify_vertices(&net)?;
    let model = format!("{:?}", a.model).to_lowercase();
    let header = format!(
        "model: {model}\nvertices: {}\nedges: {}\nbifurcations: {}\ncells per edge: {}",
        net.num_vertices(),
        net.num_edges(),
        cls.bifurcations.len(),
        a.cells_per_edge
    );
    let (fields, summary) = match a.model {
        SteadyModel::Poisson => {
            let mut dirichlet = std::collections::BTreeMap::new();
            for &(v, kind) in &cls.boundary {
                let p = match kind {
                    BoundaryKind::Inlet => a.pressure_in,
                    BoundaryKind::Outlet => a.pressure_out,
                };
                dirichlet.insert(net.vertices()[v].id, p);
            }
            let u = solve_poisson(&net, &mesh, &|_| 0.0, &dirichlet)?;
            let summary = SteadySummary::from_potential(&net, |e, s| -u.dds(e, s).unwrap_or(f64::NAN))?;
            (NodalFields::from_potential(&net, &mesh, &u), summary)
        }
        SteadyModel::Hydraulic | SteadyModel::Stokes => {
            let coeffs = Coefficients::from_network(&net, &mesh, a.viscosity)?;
            let bcs = BoundaryConditions::inlet_outlet(&net, a.pressure_in, a.pressure_out)?;
            let problem = FlowProblem {
                net: &net,
                mesh: &mesh,
                coeffs: &coeffs,
                bcs: &bcs,
                source: &|_| 0.0,
            };
            let sol = if a.model == SteadyModel::Hydraulic {
                solve_hydraulic(&problem)?
            } else {
                solve_stokes(&problem)?
            };
            (NodalFields::from_solution(&net, &mesh, &sol), SteadySummary::from_solution(&net, &sol)?)
        }
    };
    ensure_dir(&a.output)?;
    write_vtk(&a.output.join("solution.vtk"), &mesh, &fields, &format!("netflow {model} solution"))?;
    let text = summary.render(&header);
    let summary_path = a.output.join("summary.txt");
    fs::write(&summary_path, &text).map_err(|e| Error::io(&summary_path, e))?;
    say(out, &text)
}

fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let mut loaded = read_scenario(&a.scenario)?;
    let sc = &mut loaded.scenario;
    if let Some(dt) = a.dt {
        sc.dt = positive("dt", dt)?;
    }
    if let Some(t) = a.t_end {
        sc.t_end = positive("t-end", t)?;
    }
    if let Some(n) = a.cells_per_edge {
        if n == 0 {
            return Err(Error::Usage("--cells-per-edge must be at least 1".into()));
        }
        sc.cells_per_edge = n;
    }
    if let Some(m) = a.model {
        sc.model = match m {
            TimeModel::Hydraulic => FlowModel::Hydraulic,
            TimeModel::Stokes => FlowModel::Stokes,
        };
    }
    if let Some(t) = &a.track {
        loaded.track = t.clone();
    }
    if a.snapshot_every.is_some() {
        loaded.snapshot_every = a.snapshot_every;
    }
    if loaded.snapshot_every == Some(0) {
        return Err(Error::Usage("--snapshot-every must be at least 1".into()));
    }
    loaded.volumes |= a.volumes;

    let sim = Simulation::new(loaded.scenario.clone())?;
    let series = sim.run(&loaded.track, loaded.snapshot_every)?;
    ensure_dir(&a.output)?;
    write_series_file(&a.output.join("timeseries.csv"), &series, loaded.volumes)?;
    for snap in &series.snapshots {
        let fields = NodalFields::from_solution(sim.network(), &sim.mesh, &snap.solution);
        let path = a.output.join(format!("snapshot_{:06}.vtk", snap.step));
        write_vtk(&path, &sim.mesh, &fields, &format!("netflow t = {:e} s", snap.time))?;
    }

    let sc = &sim.scenario;
    let period = sim.period();
    let mut s = format!(
        "model: {}\nedges: {}\nsteps: {}\ndt: {:e} s\nt_end: {:e} s\nperiod: {:e} s\n",
        format!("{:?}", sc.model).to_lowercase(),
        sc.network.num_edges(),
        series.times.len(),
        sc.dt,
        sc.t_end,
        period
    );
    let periods = ((sc.t_end / period) + 1e-9).floor() as usize;
    if periods > 0 {
        let stroke = sim.stroke_volume(200)?;
        s += &format!("stroke volume per period: {stroke:e} m^3\n");
        for &v in &series.vertices {
            match series.net_volume(v, periods, period) {
                Ok(vol) => s += &format!("vertex {v} net outflow volume over {periods} periods: {vol:e} m^3\n"),
                Err(_) => s += &format!("vertex {v}: samples do not align with whole periods\n"),
            }
        }
    }
    s += &format!("wrote {}\n", a.output.join("timeseries.csv").display());
    if !series.snapshots.is_empty() {
        s += &format!("wrote {} snapshots\n", series.snapshots.len());
    }
    say(out, &s)
}

fn convergence(a: &ConvergenceArgs, out: &mut dyn Write) -> Result<()> {
    if a.levels < 3 {
        return Err(Error::Usage(format!("--levels must be at least 3, got {}", a.levels)));
    }
    if a.cells_per_edge == 0 {
        return Err(Error::Usage("--cells-per-edge must be at least 1".into()));
    }
    let model = match a.model {
        TimeModel::Hydraulic => MmsModel::Hydraulic,
        TimeModel::Stokes => MmsModel::Stokes,
    };
    let study = run_study(model, a.levels, a.cells_per_edge)?;
    let rates = study.rates();
    let mut table = String::from("level,cells_per_edge,h,flux_l2_error,pressure_l2_error,flux_rate,pressure_rate\n");
    for (k, l) in study.levels.iter().enumerate() {
        let (rq, rp) = if k == 0 {
            (String::new(), String::new())
        } else {
            (format!("{:.4}", rates[k - 1].0), format!("{:.4}", rates[k - 1].1))
        };
        table += &format!(
            "{k},{},{:e},{:e},{:e},{rq},{rp}\n",
            l.cells_per_edge, l.h, l.flux_error, l.pressure_error
        );
    }
    if let Some(dir) = &a.output {
        ensure_dir(dir)?;
        let name = format!("convergence_{}.csv", format!("{:?}", a.model).to_lowercase());
        let path = dir.join(name);
        fs::write(&path, &table).map_err(|e| Error::io(&path, e))?;
    }
    say(out, &table)
}
