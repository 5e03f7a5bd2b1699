use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector2;
use serde::Serialize;
use serde_json::{json, Value};
use twoscale::cellhomog::{effective_coeffs_report, CellGeometry};
use twoscale::fem::{generate_cell_mesh, generate_macro_mesh, mms_study, read_mesh, write_mesh, SolverOptions};
use twoscale::geometry::{symmetric_eigenvalues, HanzawaTransform, Shape2, ShapeDescriptor};
use twoscale::macrosolver::{run_macro, MacroConfig};
use twoscale::microsim::{compare_micro_macro, load_macro_dir, load_micro_dir, run_micro, MicroConfig};
use twoscale::output::write_json;
use twoscale::params::PhysicalParams;
use twoscale::tables::{build_table, default_grid, homogeneous_table, CoefficientTable, Interpolation, DEFAULT_NODES};
use twoscale::{Error, Result};

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "twoscale", version, about = "Two-scale thermo-elasticity with evolving microstructure")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for sampling (Halton start index).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = "warn")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Geometry queries.
    #[command(subcommand)]
    Geom(GeomCmd),
    /// Mesh generation and checks.
    #[command(subcommand)]
    Mesh(MeshCmd),
    /// Cell problems.
    #[command(subcommand)]
    Cell(CellCmd),
    /// Coefficient tables.
    #[command(subcommand)]
    Table(TableCmd),
    /// Homogenized macroscopic model.
    #[command(subcommand)]
    Macro(MacroCmd),
    /// ε-resolved reference simulation.
    #[command(subcommand)]
    Micro(MicroCmd),
    /// Micro–macro error report.
    Compare {
        #[arg(long = "macro")]
        macro_dir: PathBuf,
        #[arg(long = "micro")]
        micro_dir: PathBuf,
    },
    /// Manufactured-solution convergence study of the P1 heat operator.
    Mms {
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
        levels: Vec<usize>,
    },
}

#[derive(Args)]
struct ShapeArgs {
    /// `circle:R[@X,Y]` or `superellipse:A,B,P`; omit for the cell without inclusion.
    #[arg(long)]
    shape: Option<String>,
    /// Shape descriptor as a JSON file.
    #[arg(long, conflicts_with = "shape")]
    shape_file: Option<PathBuf>,
}

impl ShapeArgs {
    fn descriptor(&self) -> Result<Option<ShapeDescriptor>> {
        match (&self.shape, &self.shape_file) {
            (Some(s), _) => ShapeDescriptor::parse_short(s).map(Some),
            (None, Some(p)) => Ok(Some(serde_json::from_str(&read(p)?)?)),
            (None, None) => Ok(None),
        }
    }

    fn shape(&self) -> Result<Option<Shape2>> {
        self.descriptor()?.as_ref().map(Shape2::from_descriptor).transpose()
    }
}

#[derive(Subcommand)]
enum GeomCmd {
    /// Evaluate d, P, n, L_Γ, κ and the transform at points from a CSV file
    /// (`x,y` per row) or at Halton samples.
    Probe {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        h: f64,
        #[arg(long, conflicts_with = "samples")]
        points: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        samples: usize,
    },
}

#[derive(Subcommand)]
enum MeshCmd {
    /// Cell mesh (default) or uniform macro mesh with `--macro-n`.
    Gen {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, default_value_t = 0.05)]
        size: f64,
        #[arg(long)]
        macro_n: Option<usize>,
    },
    Check {
        #[arg(long)]
        mesh: PathBuf,
        #[command(flatten)]
        shape: ShapeArgs,
    },
}

#[derive(Subcommand)]
enum CellCmd {
    /// Effective coefficients at one height.
    Solve {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        h: f64,
        #[arg(long, default_value_t = 0.05)]
        mesh_size: f64,
        /// Physical parameters as JSON.
        #[arg(long)]
        params: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TableCmd {
    Build {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, default_value_t = DEFAULT_NODES)]
        nodes: usize,
        #[arg(long, default_value_t = 0.05)]
        mesh_size: f64,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "monotone-cubic")]
        interpolation: InterpArg,
    },
    /// Interpolated coefficients at `--h`; defaults to `<out>/table.json`.
    Query {
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        h: f64,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum InterpArg {
    Linear,
    MonotoneCubic,
}

#[derive(Subcommand)]
enum MacroCmd {
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum MicroCmd {
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the level in the config.
        #[arg(long)]
        level: Option<u32>,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn load_params(path: Option<&PathBuf>) -> Result<PhysicalParams> {
    let p: PhysicalParams = match path {
        Some(p) => serde_json::from_str(&read(p)?)?,
        None => PhysicalParams::default(),
    };
    p.validate()?;
    Ok(p)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

fn probe_points(points: Option<&PathBuf>, samples: usize, seed: u64) -> Result<Vec<Vector2<f64>>> {
    let Some(path) = points else {
        return Ok((0..samples as u64)
            .map(|i| Vector2::new(radical_inverse(seed + i + 1, 2), radical_inverse(seed + i + 1, 3)))
            .collect());
    };
    let mut out = Vec::new();
    for (line_no, line) in read(path)?.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Option<Vec<f64>> = line.split(',').map(|t| t.trim().parse::<f64>().ok()).collect();
        match v {
            Some(v) if v.len() == 2 => out.push(Vector2::new(v[0], v[1])),
            // Header row.
            None if out.is_empty() => continue,
            _ => return Err(Error::Parse(format!("{}:{}: expected x,y", path.display(), line_no + 1))),
        }
    }
    Ok(out)
}

fn mat(m: &nalgebra::Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

fn geom_probe(shape: &Shape2, h: f64, points: &[Vector2<f64>]) -> Result<Vec<Value>> {
    let t = HanzawaTransform::new(shape, h)?;
    points
        .iter()
        .map(|x| {
            let proj = shape.project(x)?;
            let on_gamma = if proj.in_band {
                let l = shape.shape_tensor(&proj.point)?;
                Some((shape.normal(&proj.point)?, symmetric_eigenvalues(&l), shape.curvature(h, &proj.point)?))
            } else {
                None
            };
            let s = t.map(x)?;
            let (f, j) = t.jacobian(x)?;
            Ok(json!({
                "x": [x[0], x[1]],
                "d": proj.distance,
                "P": if proj.in_band { json!([proj.point[0], proj.point[1]]) } else { Value::Null },
                "n": on_gamma.as_ref().map(|o| json!([o.0[0], o.0[1]])),
                "L_eigs": on_gamma.as_ref().map(|o| json!(o.1)),
                "kappa": on_gamma.as_ref().map(|o| o.2),
                "s": [s[0], s[1]],
                "F": mat(&f),
                "J": j,
            }))
        })
        .collect()
}

fn config_relative(config: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config.parent().unwrap_or(Path::new(".")).join(p)
    }
}

fn run(cli: &Cli) -> Result<()> {
    let out = &cli.out;
    std::fs::create_dir_all(out)?;
    match &cli.command {
        Command::Geom(GeomCmd::Probe { shape, h, points, samples }) => {
            let shape = shape.shape()?.ok_or_else(|| Error::Invalid("geom probe needs --shape".into()))?;
            let pts = probe_points(points.as_ref(), *samples, cli.seed)?;
            let records = geom_probe(&shape, *h, &pts)?;
            write_json(&out.join("probe.json"), &records)?;
            print_json(&records)
        }
        Command::Mesh(MeshCmd::Gen { shape, size, macro_n }) => {
            let mesh = match macro_n {
                Some(n) => generate_macro_mesh(*n, *n)?,
                None => generate_cell_mesh(shape.shape()?.as_ref(), *size)?,
            };
            write_mesh(&mesh, &out.join("mesh.txt"))?;
            print_json(&mesh.check(shape.shape()?.as_ref()))
        }
        Command::Mesh(MeshCmd::Check { mesh, shape }) => {
            let mesh = read_mesh(mesh)?;
            let report = mesh.check(shape.shape()?.as_ref());
            print_json(&report)?;
            if !report.is_valid() {
                return Err(Error::Invalid("mesh has inverted or degenerate triangles".into()));
            }
            Ok(())
        }
        Command::Cell(CellCmd::Solve { shape, h, mesh_size, params }) => {
            let params = load_params(params.as_ref())?;
            let geom = CellGeometry::generate(shape.shape()?, *mesh_size)?;
            let result = effective_coeffs_report(&geom, &params, *h, &SolverOptions::default())?;
            write_json(&out.join("cell.json"), &result)?;
            print_json(&result)
        }
        Command::Table(TableCmd::Build { shape, nodes, mesh_size, params, interpolation }) => {
            let params = load_params(params.as_ref())?;
            let shape = shape.shape()?;
            let interp = match interpolation {
                InterpArg::Linear => Interpolation::Linear,
                InterpArg::MonotoneCubic => Interpolation::MonotoneCubic,
            };
            let grid = default_grid(shape.as_ref(), *nodes);
            let table = match shape {
                Some(_) => build_table(&CellGeometry::generate(shape, *mesh_size)?, &params, &grid, interp)?,
                None => homogeneous_table(&params, &grid)?,
            };
            let path = out.join("table.json");
            table.save(&path)?;
            log::info!("wrote {}", path.display());
            Ok(())
        }
        Command::Table(TableCmd::Query { table, h }) => {
            let path = table.clone().unwrap_or_else(|| out.join("table.json"));
            let table = CoefficientTable::load(&path)?;
            print_json(&table.interpolate(*h)?)
        }
        Command::Macro(MacroCmd::Run { config }) => {
            let mut cfg: MacroConfig = serde_json::from_str(&read(config)?)?;
            cfg.validate()?;
            if cfg.outputs.dir.is_none() {
                cfg.outputs.dir = Some(out.clone());
            }
            let table = match &cfg.table {
                Some(p) => {
                    let t = CoefficientTable::load(&config_relative(config, p))?;
                    t.check_compatible(t.shape.as_ref(), &cfg.params)?;
                    t
                }
                None => homogeneous_table(&cfg.params, &default_grid(None, DEFAULT_NODES))?,
            };
            run_macro(&cfg, &table).map(|_| ())
        }
        Command::Micro(MicroCmd::Run { config, level }) => {
            let mut cfg: MicroConfig = serde_json::from_str(&read(config)?)?;
            if let Some(n) = level {
                cfg.level = *n;
            }
            if cfg.outputs.dir.is_none() {
                cfg.outputs.dir = Some(out.clone());
            }
            let run = run_micro(&cfg)?;
            log::info!("level {} converged in {} iterations", cfg.level, run.state.iterations());
            Ok(())
        }
        Command::Compare { macro_dir, micro_dir } => {
            let (mesh, states) = load_macro_dir(macro_dir)?;
            let cells = load_micro_dir(micro_dir)?;
            let report = compare_micro_macro(&cells, &mesh, &states)?;
            write_json(&out.join("errors.json"), &report)?;
            print_json(&report)
        }
        Command::Mms { levels } => {
            if levels.len() < 2 || levels.contains(&0) {
                return Err(Error::Invalid("mms needs at least two positive levels".into()));
            }
            let study = mms_study(levels)?;
            write_json(&out.join("mms.json"), &study)?;
            print_json(&study)
        }
    }
}

fn error_json(err: &Error) -> Value {
    let mut v = json!({
        "error": err.kind(),
        "message": err.to_string(),
        "numerical": err.is_numerical(),
    });
    let details = match err {
        Error::HeightBand { node, time, h, lo, hi } => json!({"node": node, "time": time, "h": h, "lo": lo, "hi": hi}),
        Error::CellHeightBand { cell, time, h, lo, hi } => json!({"cell": cell, "time": time, "h": h, "lo": lo, "hi": hi}),
        Error::Admissibility { h, lo, hi } => json!({"h": h, "lo": lo, "hi": hi}),
        Error::PicardFailure { time, increment } => json!({"time": time, "increment": increment}),
        Error::FixedPointFailure { iterations, history } => json!({"iterations": iterations, "history": history}),
        Error::Horizon { t_end, horizon, max_velocity } => {
            json!({"t_end": t_end, "horizon": horizon, "max_velocity": max_velocity})
        }
        Error::SolverFailure { iterations, residual } => json!({"iterations": iterations, "residual": residual}),
        Error::Version { found, expected } => json!({"found": found, "expected": expected}),
        _ => Value::Null,
    };
    if let (Value::Object(map), Value::Object(extra)) = (&mut v, details) {
        map.extend(extra);
    }
    v
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new().filter_level(cli.log_level).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_json(&err));
            ExitCode::from(if err.is_numerical() { EXIT_NUMERICAL } else { EXIT_VALIDATION })
        }
    }
}
