//! Command-line front end.
//!
//! Settings are flat `key = value` pairs. A config file is applied first,
//! then the dedicated flags, then `--set key=value` overrides, so the output
//! of `--dump-config` can be fed back in unchanged.

use std::ffi::OsString;
use std::fmt::{self, Write as _};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::femref::{
    henon_heiles_system, shift_invert_eigs, table1, write_table_csv, EigenOptions, TABLE_MESHES,
};
use crate::network::MultiIndex;
use crate::problems::{constants_table, Problem, ProblemOptions, ProblemRegistry};
use crate::snapshot::Snapshot;
use crate::solver::{solve_levels, EigenSolution, GradientMode, Objective, SolveConfig};
use crate::trial::{ShapeParam, State};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Collocation,
    Variational,
    Fem,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Collocation => "collocation",
            Mode::Variational => "variational",
            Mode::Fem => "fem",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "collocation" => Ok(Mode::Collocation),
            "variational" => Ok(Mode::Variational),
            "fem" => Ok(Mode::Fem),
            other => Err(Error::Parse(format!(
                "unknown mode `{other}` (expected collocation, variational or fem)"
            ))),
        }
    }
}

/// Problems the finite-element reference can solve.
pub const FEM_PROBLEMS: [&str; 1] = ["henon-heiles"];

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub mode: Mode,
    pub levels: usize,
    pub grid: Option<usize>,
    /// Separate energy quadrature nodes per axis.
    pub quadrature: Option<usize>,
    /// Element counts per axis for the reference solver.
    pub meshes: Vec<usize>,
    pub fem: EigenOptions,
    pub out: PathBuf,
    pub solver: SolveConfig,
}

const KEYS: [&str; 23] = [
    "problem",
    "mode",
    "levels",
    "grid",
    "quadrature",
    "mesh",
    "fem_shift",
    "fem_count",
    "out",
    "seed",
    "restarts",
    "hidden_units",
    "optimizer",
    "max_iterations",
    "gradient_mode",
    "error_tolerance",
    "gradient_tolerance",
    "initial_shape",
    "optimize_shape",
    "shape_param",
    "warm_start_iterations",
    "scale_penalty",
    "deterministic",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("bad value `{value}` for `{key}`")))
}

fn last<'a>(settings: &'a [(String, String)], key: &str) -> Option<&'a str> {
    settings
        .iter()
        .rev()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_settings(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("config line {}: expected `key = value`", n + 1))
        })?;
        let k = k.trim();
        if out.iter().any(|(e, _)| e == k) {
            return Err(Error::Parse(format!(
                "config line {}: duplicate key `{k}`",
                n + 1
            )));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    /// Resolves ordered settings (later entries win) on top of the defaults
    /// of the selected problem, and builds that problem.
    pub fn resolve(
        settings: &[(String, String)],
        registry: &ProblemRegistry,
    ) -> Result<(Self, Box<dyn Problem>)> {
        if let Some((k, _)) = settings.iter().find(|(k, _)| !KEYS.contains(&k.as_str())) {
            return Err(Error::Unknown {
                kind: "setting",
                name: k.clone(),
                known: KEYS.join(", "),
            });
        }
        let id = last(settings, "problem").ok_or_else(|| {
            Error::InvalidArgument(format!(
                "no problem selected; pass --problem with one of: {}",
                registry.ids().join(", ")
            ))
        })?;
        let mode: Mode = last(settings, "mode").map_or(Ok(Mode::Collocation), str::parse)?;
        if mode == Mode::Fem && !FEM_PROBLEMS.contains(&id) {
            return Err(Error::InvalidArgument(format!(
                "mode fem is only available for {}, not `{id}`",
                FEM_PROBLEMS.join(", ")
            )));
        }
        let grid = match last(settings, "grid") {
            None | Some("default") => None,
            Some(v) => Some(parse::<usize>("grid", v)?),
        };
        let mut problem = registry.build(id, &ProblemOptions::with_grid(grid))?;
        let quadrature = match last(settings, "quadrature") {
            None | Some("default") if mode == Mode::Variational => {
                problem.defaults().variational_quadrature
            }
            None | Some("default" | "none") => None,
            Some(v) => Some(parse::<usize>("quadrature", v)?),
        };
        if quadrature.is_some() {
            problem = registry.build(id, &ProblemOptions { grid, quadrature })?;
        }
        let mut cfg = Self {
            problem: id.to_string(),
            mode,
            levels: problem.defaults().levels,
            grid,
            quadrature,
            meshes: TABLE_MESHES.to_vec(),
            fem: EigenOptions {
                count: 8,
                ..EigenOptions::default()
            },
            out: PathBuf::from("out"),
            solver: SolveConfig::for_problem(problem.as_ref()),
        };
        for (k, v) in settings {
            cfg.apply(k, v)?;
        }
        cfg.validate()?;
        Ok((cfg, problem))
    }

    fn apply(&mut self, key: &str, v: &str) -> Result<()> {
        let s = &mut self.solver;
        match key {
            "problem" | "mode" | "grid" | "quadrature" => {}
            "levels" => self.levels = parse(key, v)?,
            "mesh" => {
                self.meshes = v
                    .split(',')
                    .map(|t| parse(key, t.trim()))
                    .collect::<Result<Vec<usize>>>()?
            }
            "fem_shift" => self.fem.shift = parse(key, v)?,
            "fem_count" => self.fem.count = parse(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "seed" => s.seed = parse(key, v)?,
            "restarts" => s.restarts = parse(key, v)?,
            "hidden_units" => s.hidden_units = parse(key, v)?,
            "optimizer" => s.optimizer = v.to_string(),
            "max_iterations" => s.max_iterations = parse(key, v)?,
            "gradient_mode" => s.gradient_mode = v.parse::<GradientMode>()?,
            "error_tolerance" => s.error_tolerance = parse(key, v)?,
            "gradient_tolerance" => s.gradient_tolerance = parse(key, v)?,
            "initial_shape" => s.initial_shape = parse(key, v)?,
            "optimize_shape" => s.optimize_shape = parse(key, v)?,
            "shape_param" => s.shape_param = v.parse::<ShapeParam>()?,
            "warm_start_iterations" => s.warm_start_iterations = parse(key, v)?,
            "scale_penalty" => s.scale_penalty = parse(key, v)?,
            "deterministic" => s.deterministic = parse(key, v)?,
            _ => unreachable!("keys are checked before applying"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 1 {
            return Err(Error::InvalidArgument("levels must be at least 1".into()));
        }
        if self.mode == Mode::Fem {
            if self.meshes.is_empty() || self.meshes.contains(&0) {
                return Err(Error::InvalidArgument("mesh sizes must be positive".into()));
            }
            if self.fem.count < 1 {
                return Err(Error::InvalidArgument(
                    "fem_count must be at least 1".into(),
                ));
            }
            return Ok(());
        }
        self.solver.validate()
    }
}

impl fmt::Display for RunConfig {
    /// Every setting, in a form [`parse_settings`] reads back.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.solver;
        let mesh: Vec<String> = self.meshes.iter().map(usize::to_string).collect();
        writeln!(f, "problem = {}", self.problem)?;
        writeln!(f, "mode = {}", self.mode.name())?;
        writeln!(f, "levels = {}", self.levels)?;
        match self.grid {
            Some(g) => writeln!(f, "grid = {g}")?,
            None => writeln!(f, "grid = default")?,
        }
        match self.quadrature {
            Some(q) => writeln!(f, "quadrature = {q}")?,
            None => writeln!(f, "quadrature = none")?,
        }
        writeln!(f, "mesh = {}", mesh.join(","))?;
        writeln!(f, "fem_shift = {}", self.fem.shift)?;
        writeln!(f, "fem_count = {}", self.fem.count)?;
        writeln!(f, "out = {}", self.out.display())?;
        writeln!(f, "seed = {}", s.seed)?;
        writeln!(f, "restarts = {}", s.restarts)?;
        writeln!(f, "hidden_units = {}", s.hidden_units)?;
        writeln!(f, "optimizer = {}", s.optimizer)?;
        writeln!(f, "max_iterations = {}", s.max_iterations)?;
        writeln!(f, "gradient_mode = {}", s.gradient_mode.name())?;
        writeln!(f, "error_tolerance = {:e}", s.error_tolerance)?;
        writeln!(f, "gradient_tolerance = {:e}", s.gradient_tolerance)?;
        writeln!(f, "initial_shape = {}", s.initial_shape)?;
        writeln!(f, "optimize_shape = {}", s.optimize_shape)?;
        writeln!(f, "shape_param = {}", s.shape_param.name())?;
        writeln!(f, "warm_start_iterations = {}", s.warm_start_iterations)?;
        writeln!(f, "scale_penalty = {:e}", s.scale_penalty)?;
        writeln!(f, "deterministic = {}", s.deterministic)
    }
}

/// Summary of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub eigenvalues: Vec<f64>,
    pub errors: Vec<f64>,
    pub converged: bool,
    pub files: Vec<PathBuf>,
    pub wall_time: Duration,
}

fn create(dir: &Path, name: &str, files: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot write {}: {e}", path.display()),
        ))
    })?;
    files.push(path);
    Ok(BufWriter::new(f))
}

/// Creates the output directory and checks that it accepts files.
pub fn prepare_output(dir: &Path) -> Result<()> {
    let wrap = |e: std::io::Error| {
        Error::InvalidArgument(format!(
            "output directory {} is not writable: {e}",
            dir.display()
        ))
    };
    fs::create_dir_all(dir).map_err(wrap)?;
    let probe = dir.join(".nneig-write-check");
    File::create(&probe).map_err(wrap)?;
    fs::remove_file(&probe).map_err(wrap)
}

fn coordinate_names(problem: &dyn Problem) -> Vec<&'static str> {
    if problem.radial() {
        return vec!["r"];
    }
    ["x", "y", "z", "w"]
        .into_iter()
        .take(problem.dim())
        .collect()
}

fn write_coords(w: &mut impl Write, x: &[f64]) -> std::io::Result<()> {
    for (i, v) in x.iter().enumerate() {
        if i > 0 {
            write!(w, ",")?;
        }
        write!(w, "{v:.16e}")?;
    }
    Ok(())
}

/// Normalized state values at the collocation points. Radial problems report
/// `φ(r)/r`, which at `r = 0` is the slope `φ'(0)`.
pub fn wavefunction_rows(
    problem: &dyn Problem,
    snapshot: &Snapshot,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let state = snapshot.state()?;
    let layout = problem.layout();
    let slope = MultiIndex::axis(problem.dim(), 0, 1);
    let mut rows = Vec::new();
    for &i in layout.collocation() {
        let x = layout.site(i).to_vec();
        let mut vals = Vec::new();
        for c in 0..problem.components() {
            let v = if !problem.radial() {
                state.value(&x, c)?
            } else if x[0] == 0.0 {
                state.derivative(&x, c, &slope)?
            } else {
                state.value(&x, c)? / x[0]
            };
            vals.push(v / snapshot.normalization);
        }
        rows.push((x, vals));
    }
    Ok(rows)
}

fn write_level(
    dir: &Path,
    k: usize,
    problem: &dyn Problem,
    sol: &EigenSolution,
    snapshot: &Snapshot,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    let path = dir.join(format!("state_{k}.snapshot"));
    snapshot.save(&path)?;
    files.push(path);

    let coords = coordinate_names(problem);
    let mut w = create(dir, &format!("wavefunction_{k}.csv"), files)?;
    let names: Vec<String> = problem
        .component_names()
        .into_iter()
        .map(|n| {
            if problem.radial() {
                format!("{n}_over_r")
            } else {
                n
            }
        })
        .collect();
    writeln!(w, "{},{}", coords.join(","), names.join(","))?;
    for (x, vals) in wavefunction_rows(problem, snapshot)? {
        write_coords(&mut w, &x)?;
        for v in vals {
            write!(w, ",{v:.16e}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;

    let mut w = create(dir, &format!("residual_{k}.csv"), files)?;
    writeln!(w, "{},residual", coords.join(","))?;
    let layout = problem.layout();
    for (&i, r) in layout.collocation().iter().zip(&sol.residual_map) {
        write_coords(&mut w, layout.site(i))?;
        writeln!(w, ",{r:.16e}")?;
    }
    w.flush()?;

    let mut w = create(dir, &format!("iterations_{k}.csv"), files)?;
    writeln!(
        w,
        "restart,phase,iteration,objective,eigenvalue,gradient_norm"
    )?;
    for row in &sol.log {
        writeln!(
            w,
            "{},{},{},{:.16e},{:.16e},{:.16e}",
            row.restart,
            row.phase.name(),
            row.iteration,
            row.objective,
            row.eps,
            row.gradient_norm
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Neural solve (collocation or variational) with all artifacts written to
/// `config.out`. Levels are numbered from 1 in file names and tables.
pub fn run_neural(
    config: &RunConfig,
    problem: &dyn Problem,
    log: &mut dyn Write,
) -> Result<RunOutcome> {
    let objective = match config.mode {
        Mode::Collocation => Objective::Collocation,
        Mode::Variational => Objective::Variational,
        Mode::Fem => {
            return Err(Error::InvalidArgument(
                "mode fem has no neural solve".into(),
            ))
        }
    };
    prepare_output(&config.out)?;
    let start = Instant::now();
    let (solutions, basis) = solve_levels(problem, &config.solver, config.levels, objective)?;
    let mut files = Vec::new();
    let mut w = create(&config.out, "eigenvalues.csv", &mut files)?;
    writeln!(w, "level,eigenvalue,error,iterations,converged")?;
    for (k, s) in solutions.iter().enumerate() {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{},{}",
            k + 1,
            s.eigenvalue,
            s.error,
            s.iterations,
            s.converged
        )?;
        let snapshot = Snapshot::from_solution(&config.problem, s, &basis.prefix(k))?;
        write_level(&config.out, k + 1, problem, s, &snapshot, &mut files)?;
        let _ = writeln!(
            log,
            "level {}: eigenvalue {:.10} error {:.3e} iterations {} ({}){}",
            k + 1,
            s.eigenvalue,
            s.error,
            s.iterations,
            s.reason.name(),
            if s.converged { "" } else { " NOT CONVERGED" }
        );
    }
    w.flush()?;
    Ok(RunOutcome {
        eigenvalues: solutions.iter().map(|s| s.eigenvalue).collect(),
        errors: solutions.iter().map(|s| s.error).collect(),
        converged: solutions.iter().all(|s| s.converged),
        files,
        wall_time: start.elapsed(),
    })
}

/// Reference finite-element solve over `config.meshes`. Writes the table,
/// the eigenvalues and wavefunctions of the finest mesh, and the assembled
/// matrices when `dump_matrices` is set.
pub fn run_fem(config: &RunConfig, dump_matrices: bool, log: &mut dyn Write) -> Result<RunOutcome> {
    prepare_output(&config.out)?;
    let start = Instant::now();
    let mut files = Vec::new();
    let columns = table1(&config.meshes, &config.fem)?;
    let mut w = create(&config.out, "fem_table.csv", &mut files)?;
    write_table_csv(&columns, &mut w)?;
    w.flush()?;
    for c in &columns {
        let _ = writeln!(
            log,
            "{0}x{0} ({1} unknowns): {2}",
            c.mesh,
            c.unknowns,
            c.eigenvalues
                .iter()
                .map(|v| format!("{v:.6}"))
                .collect::<Vec<_>>()
                .join(" ")
        );
    }

    let finest = *config.meshes.iter().max().expect("validated non-empty");
    let (mesh, system) = henon_heiles_system(finest)?;
    let report = shift_invert_eigs(&system, &config.fem)?;
    let mut w = create(&config.out, "eigenvalues.csv", &mut files)?;
    writeln!(w, "level,eigenvalue,error,iterations,converged")?;
    for (k, p) in report.pairs.iter().enumerate() {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{},true",
            k + 1,
            p.value,
            p.residual,
            report.applications
        )?;
    }
    w.flush()?;
    for (k, p) in report.pairs.iter().enumerate() {
        let mut mv = vec![0.0; p.vector.len()];
        system.mass.mul_vec(&p.vector, &mut mv);
        let scale = 1.0
            / mv.iter()
                .zip(&p.vector)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                .sqrt();
        let mut w = create(
            &config.out,
            &format!("wavefunction_{}.csv", k + 1),
            &mut files,
        )?;
        writeln!(w, "x,y,psi")?;
        for (xy, v) in mesh.coords().iter().zip(&p.vector) {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", xy[0], xy[1], v * scale)?;
        }
        w.flush()?;
    }
    if dump_matrices {
        for &n in &config.meshes {
            let (mesh, sys) = henon_heiles_system(n)?;
            mesh.write_nodes(create(
                &config.out,
                &format!("mesh_{n}_nodes.txt"),
                &mut files,
            )?)?;
            mesh.write_elements(create(
                &config.out,
                &format!("mesh_{n}_elements.txt"),
                &mut files,
            )?)?;
            sys.stiffness.write_coordinate(create(
                &config.out,
                &format!("stiffness_{n}.coo"),
                &mut files,
            )?)?;
            sys.mass.write_coordinate(create(
                &config.out,
                &format!("mass_{n}.coo"),
                &mut files,
            )?)?;
        }
    }
    Ok(RunOutcome {
        eigenvalues: report.values(),
        errors: report.pairs.iter().map(|p| p.residual).collect(),
        converged: true,
        files,
        wall_time: start.elapsed(),
    })
}

/// Collocation against finite elements on the same problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub neural: Vec<f64>,
    pub fem: Vec<f64>,
    pub neural_converged: bool,
    /// Trainable parameters of one neural state.
    pub neural_parameters: usize,
    pub fem_mesh: usize,
    pub fem_unknowns: usize,
    pub neural_time: Duration,
    pub fem_time: Duration,
}

impl Comparison {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "level,neural,fem,difference")?;
        for (k, (a, b)) in self.neural.iter().zip(&self.fem).enumerate() {
            writeln!(w, "{},{a:.16e},{b:.16e},{:.16e}", k + 1, (a - b).abs())?;
        }
        Ok(())
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "level  neural         fem ({0}x{0})     |difference|",
            self.fem_mesh
        )?;
        for (k, (a, b)) in self.neural.iter().zip(&self.fem).enumerate() {
            writeln!(f, "{:>5}  {a:<14.8} {b:<14.8} {:.2e}", k + 1, (a - b).abs())?;
        }
        writeln!(
            f,
            "parameters: neural {} per state, fem {} unknowns",
            self.neural_parameters, self.fem_unknowns
        )?;
        write!(
            f,
            "wall time: neural {:.2} s, fem {:.2} s",
            self.neural_time.as_secs_f64(),
            self.fem_time.as_secs_f64()
        )
    }
}

/// Collocation levels next to the finest-mesh reference levels.
pub fn compare(config: &RunConfig, problem: &dyn Problem) -> Result<Comparison> {
    if !FEM_PROBLEMS.contains(&config.problem.as_str()) {
        return Err(Error::InvalidArgument(format!(
            "compare needs a problem with a finite-element reference ({}), not `{}`",
            FEM_PROBLEMS.join(", "),
            config.problem
        )));
    }
    let start = Instant::now();
    let (solutions, _) = solve_levels(
        problem,
        &config.solver,
        config.levels,
        Objective::Collocation,
    )?;
    let neural_time = start.elapsed();

    let mesh = *config.meshes.iter().max().unwrap_or(&29);
    let start = Instant::now();
    let (m, system) = henon_heiles_system(mesh)?;
    let options = EigenOptions {
        count: config.fem.count.max(config.levels),
        ..config.fem
    };
    let report = shift_invert_eigs(&system, &options)?;
    let fem_time = start.elapsed();

    let mut neural: Vec<f64> = solutions.iter().map(|s| s.eigenvalue).collect();
    neural.sort_by(f64::total_cmp);
    let mut fem = report.values();
    fem.truncate(neural.len());
    Ok(Comparison {
        neural,
        fem,
        neural_converged: solutions.iter().all(|s| s.converged),
        neural_parameters: solutions[0].ansatz.n_params(),
        fem_mesh: mesh,
        fem_unknowns: m.n_nodes(),
        neural_time,
        fem_time,
    })
}

/// `name,value,unit,note` rows for the shared catalog and, when given, the
/// constants one problem uses.
pub fn constants_csv(problem: Option<&dyn Problem>) -> String {
    let mut s = String::from("name,value,unit,note\n");
    let rows = match problem {
        Some(p) => p.constants(),
        None => constants_table(),
    };
    for c in rows {
        let _ = writeln!(s, "{},{:.16e},{},{}", c.name, c.value, c.unit, c.note);
    }
    s
}

#[derive(Debug, Parser)]
#[command(
    name = "nneig",
    version,
    about = "Neural-network collocation eigensolver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a benchmark and write its artifacts.
    Run(RunArgs),
    /// Collocation levels side by side with the finite-element reference.
    Compare(RunArgs),
    /// Print physical constants as CSV.
    Constants {
        #[arg(long)]
        problem: Option<String>,
    },
    /// Reload a state snapshot and recompute its eigenvalue.
    Eval {
        snapshot: PathBuf,
        #[arg(long)]
        grid: Option<usize>,
        /// Gauss–Legendre nodes per axis for the energy integral.
        #[arg(long)]
        quadrature: Option<usize>,
    },
    /// List problem ids.
    Problems,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Flat `key = value` settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// collocation, variational or fem.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    hidden_units: Option<usize>,
    /// Collocation points per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Comma-separated element counts per axis.
    #[arg(long)]
    mesh: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved settings and exit.
    #[arg(long)]
    dump_config: bool,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    deterministic: Option<bool>,
    /// Any other setting, as `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Also write the mesh and assembled matrices (mode fem).
    #[arg(long)]
    dump_matrices: bool,
}

impl RunArgs {
    fn settings(&self) -> Result<Vec<(String, String)>> {
        let mut out = match &self.config {
            Some(p) => parse_settings(&fs::read_to_string(p).map_err(|e| {
                Error::InvalidArgument(format!("cannot read config {}: {e}", p.display()))
            })?)?,
            None => Vec::new(),
        };
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        push("problem", self.problem.clone());
        push("mode", self.mode.clone());
        push("levels", self.levels.map(|v| v.to_string()));
        push("seed", self.seed.map(|v| v.to_string()));
        push("restarts", self.restarts.map(|v| v.to_string()));
        push("hidden_units", self.hidden_units.map(|v| v.to_string()));
        push("grid", self.grid.map(|v| v.to_string()));
        push("mesh", self.mesh.clone());
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        push("deterministic", self.deterministic.map(|v| v.to_string()));
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("--set expects key=value, got `{s}`")))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let registry = ProblemRegistry::standard();
    let invalid = |err: &mut dyn Write, e: Error| {
        let _ = writeln!(err, "error: {e}");
        EXIT_INVALID
    };
    match cli.command {
        Command::Problems => {
            for (id, d) in registry.describe() {
                let _ = writeln!(out, "{id:<20} {d}");
            }
            EXIT_OK
        }
        Command::Constants { problem } => {
            let p = match problem
                .map(|id| registry.build(&id, &ProblemOptions::default()))
                .transpose()
            {
                Ok(p) => p,
                Err(e) => return invalid(err, e),
            };
            let _ = write!(out, "{}", constants_csv(p.as_deref()));
            EXIT_OK
        }
        Command::Eval {
            snapshot,
            grid,
            quadrature,
        } => {
            let result = Snapshot::load(&snapshot).and_then(|s| {
                let p = registry.build(&s.problem, &ProblemOptions { grid, quadrature })?;
                Ok((s.rayleigh_quotient(p.as_ref())?, s))
            });
            match result {
                Ok((eps, s)) => {
                    let _ = writeln!(out, "problem = {}", s.problem);
                    let _ = writeln!(out, "stored eigenvalue = {:.16e}", s.eigenvalue);
                    let _ = writeln!(out, "recomputed eigenvalue = {eps:.16e}");
                    let _ = writeln!(out, "difference = {:.3e}", (eps - s.eigenvalue).abs());
                    EXIT_OK
                }
                Err(e) => invalid(err, e),
            }
        }
        Command::Run(args) | Command::Compare(args) if args.dump_config => {
            match args
                .settings()
                .and_then(|s| RunConfig::resolve(&s, &registry))
            {
                Ok((cfg, _)) => {
                    let _ = write!(out, "{cfg}");
                    EXIT_OK
                }
                Err(e) => invalid(err, e),
            }
        }
        Command::Run(args) => {
            let (cfg, problem) = match args
                .settings()
                .and_then(|s| RunConfig::resolve(&s, &registry))
            {
                Ok(r) => r,
                Err(e) => return invalid(err, e),
            };
            if let Err(e) = prepare_output(&cfg.out) {
                return invalid(err, e);
            }
            let result = match cfg.mode {
                Mode::Fem => run_fem(&cfg, args.dump_matrices, out),
                _ => run_neural(&cfg, problem.as_ref(), out),
            };
            match result {
                Ok(o) => {
                    let _ = writeln!(
                        out,
                        "wrote {} files to {} in {:.2} s",
                        o.files.len(),
                        cfg.out.display(),
                        o.wall_time.as_secs_f64()
                    );
                    if o.converged {
                        EXIT_OK
                    } else {
                        let _ = writeln!(err, "warning: at least one level did not converge");
                        EXIT_NOT_CONVERGED
                    }
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_NOT_CONVERGED
                }
            }
        }
        Command::Compare(args) => {
            let (cfg, problem) = match args
                .settings()
                .and_then(|s| RunConfig::resolve(&s, &registry))
            {
                Ok(r) => r,
                Err(e) => return invalid(err, e),
            };
            if !FEM_PROBLEMS.contains(&cfg.problem.as_str()) {
                return invalid(
                    err,
                    Error::InvalidArgument(format!(
                        "compare is only available for {}",
                        FEM_PROBLEMS.join(", ")
                    )),
                );
            }
            if let Err(e) = prepare_output(&cfg.out) {
                return invalid(err, e);
            }
            match compare(&cfg, problem.as_ref()) {
                Ok(c) => {
                    let _ = writeln!(out, "{c}");
                    let written = File::create(cfg.out.join("compare.csv"))
                        .map_err(Error::from)
                        .and_then(|f| Ok(c.write_csv(BufWriter::new(f))?));
                    if let Err(e) = written {
                        let _ = writeln!(err, "error: {e}");
                        return EXIT_INVALID;
                    }
                    if c.neural_converged {
                        EXIT_OK
                    } else {
                        EXIT_NOT_CONVERGED
                    }
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_NOT_CONVERGED
                }
            }
        }
    }
}
