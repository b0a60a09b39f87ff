//! Command-line driver: convergence studies and adaptive runs for the
//! built-in test problems, writing CSV tables, VTK fields and the resolved
//! configuration.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use hipdg::model::{testcase_a, testcase_b, testcase_c, ProblemSpec};
use hipdg::postprocess::{fill_rates, write_csv, write_fields, ConvergenceRecord};
use hipdg::study::{
    adaptive_study, bundled_annulus, file_mesh, record, solve_problem, square_mesh, StudyMesh,
};
use hipdg::{EllipticScheme, Error, Scheme, Shape, SolverMethod, SolverOptions, StabilizationConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

/// Everything a run needs. Loadable from JSON; command-line flags override.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    test: String,
    /// Diffusion coefficient of test A.
    kappa: f64,
    scheme: String,
    stabilization: String,
    theta_ell: f64,
    theta_hyp: f64,
    alpha0: Option<f64>,
    penalize_interface_outflow: bool,
    degrees: Vec<usize>,
    /// Mesh levels `n` (structured `n x n`, or bundled annulus `1/n`) or mesh file paths.
    levels: Vec<String>,
    /// Element shape of generated square meshes.
    shape: Option<String>,
    adaptive: bool,
    cycles: usize,
    fraction: f64,
    solver: String,
    tol: f64,
    restart: usize,
    max_iterations: usize,
    jobs: usize,
    out: PathBuf,
    vtk: bool,
    /// Record wall times; off writes zeros so reruns are byte-identical.
    timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverOptions::default();
        RunConfig {
            test: "A".into(),
            kappa: 0.5,
            scheme: "sip".into(),
            stabilization: "sg".into(),
            theta_ell: 1.0,
            theta_hyp: 1.0,
            alpha0: None,
            penalize_interface_outflow: false,
            degrees: vec![1],
            levels: Vec::new(),
            shape: None,
            adaptive: false,
            cycles: 6,
            fraction: 0.3,
            solver: "direct".into(),
            tol: solver.tol,
            restart: solver.restart,
            max_iterations: solver.max_iterations,
            jobs: 1,
            out: PathBuf::from("out"),
            vtk: true,
            timing: true,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "hipdg", version, allow_negative_numbers = true, about = "Hybridizable interior-penalty DG runs for the built-in test problems")]
struct Cli {
    /// JSON run configuration; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Test problem: A (boundary layers), B (pure transport), C (partly degenerate annulus).
    #[arg(long)]
    test: Option<String>,
    /// Diffusion coefficient of test A.
    #[arg(long)]
    kappa: Option<f64>,
    /// nip | iip | sip
    #[arg(long)]
    scheme: Option<String>,
    /// Elliptic penalty amplification: add | sg
    #[arg(long)]
    stab: Option<String>,
    /// Upwind amount in both regions.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    theta_ell: Option<f64>,
    #[arg(long)]
    theta_hyp: Option<f64>,
    /// Diffusive penalty scale (default: twice the faces per element).
    #[arg(long)]
    alpha0: Option<f64>,
    /// Keep the upwind penalty on the hyperbolic side of inflow interfaces: on | off
    #[arg(long)]
    interface_penalty: Option<String>,
    /// Polynomial degrees, e.g. `1,2` or `1..3`.
    #[arg(long)]
    k: Option<String>,
    /// Comma-separated mesh levels or mesh file paths.
    #[arg(long)]
    levels: Option<String>,
    /// Shape of generated square meshes: tri | quad
    #[arg(long)]
    shape: Option<String>,
    /// on | off
    #[arg(long)]
    adaptive: Option<String>,
    #[arg(long)]
    cycles: Option<usize>,
    /// Fraction of elements marked per adaptive cycle.
    #[arg(long)]
    fraction: Option<f64>,
    /// direct | gmres
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    restart: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Number of independent solves run in parallel.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write VTK fields: on | off
    #[arg(long)]
    vtk: Option<String>,
    /// Record wall times in the CSV: on | off
    #[arg(long)]
    timing: Option<String>,
}

#[derive(Debug)]
struct ConfigError {
    field: &'static str,
    message: String,
}

impl ConfigError {
    fn new(field: &'static str, message: impl Into<String>) -> Self {
        ConfigError {
            field,
            message: message.into(),
        }
    }
}

fn parse_switch(field: &'static str, s: &str) -> Result<bool, ConfigError> {
    match s.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::new(field, format!("expected on|off, got `{s}`"))),
    }
}

/// `1,2,4` or `1..3` (inclusive) or a mix.
fn parse_degrees(s: &str) -> Result<Vec<usize>, ConfigError> {
    let bad = || ConfigError::new("k", format!("expected degrees like `1,2` or `1..3`, got `{s}`"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

fn load_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut c = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| ConfigError::new("config", e.to_string()))?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = &cli.test {
        c.test = v.clone();
    }
    if let Some(v) = cli.kappa {
        c.kappa = v;
    }
    if let Some(v) = &cli.scheme {
        c.scheme = v.clone();
    }
    if let Some(v) = &cli.stab {
        c.stabilization = v.clone();
    }
    if let Some(v) = cli.theta {
        c.theta_ell = v;
        c.theta_hyp = v;
    }
    if let Some(v) = cli.theta_ell {
        c.theta_ell = v;
    }
    if let Some(v) = cli.theta_hyp {
        c.theta_hyp = v;
    }
    if cli.alpha0.is_some() {
        c.alpha0 = cli.alpha0;
    }
    if let Some(v) = &cli.interface_penalty {
        c.penalize_interface_outflow = parse_switch("interface_penalty", v)?;
    }
    if let Some(v) = &cli.k {
        c.degrees = parse_degrees(v)?;
    }
    if let Some(v) = &cli.levels {
        c.levels = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    }
    if let Some(v) = &cli.shape {
        c.shape = Some(v.clone());
    }
    if let Some(v) = &cli.adaptive {
        c.adaptive = parse_switch("adaptive", v)?;
    }
    if let Some(v) = cli.cycles {
        c.cycles = v;
    }
    if let Some(v) = cli.fraction {
        c.fraction = v;
    }
    if let Some(v) = &cli.solver {
        c.solver = v.clone();
    }
    if let Some(v) = cli.tol {
        c.tol = v;
    }
    if let Some(v) = cli.restart {
        c.restart = v;
    }
    if let Some(v) = cli.max_iterations {
        c.max_iterations = v;
    }
    if let Some(v) = cli.jobs {
        c.jobs = v;
    }
    if let Some(v) = &cli.out {
        c.out = v.clone();
    }
    if let Some(v) = &cli.vtk {
        c.vtk = parse_switch("vtk", v)?;
    }
    if let Some(v) = &cli.timing {
        c.timing = parse_switch("timing", v)?;
    }
    if c.levels.is_empty() {
        c.levels = match c.test.as_str() {
            "B" => vec!["8".into()],
            _ => ["4", "8", "16", "32"].iter().map(|s| s.to_string()).collect(),
        };
    }
    Ok(c)
}

/// Validated, typed form of a [`RunConfig`].
struct Resolved {
    problem: ProblemSpec,
    stab: StabilizationConfig,
    solver: SolverOptions,
    shape: Shape,
}

fn resolve(c: &RunConfig) -> Result<Resolved, ConfigError> {
    let problem = match c.test.as_str() {
        "A" => testcase_a(c.kappa).map_err(|e| ConfigError::new("kappa", e.to_string()))?,
        "B" => testcase_b(),
        "C" => testcase_c(),
        t => return Err(ConfigError::new("test", format!("unknown test `{t}` (expected A, B or C)"))),
    };
    let scheme = match c.scheme.as_str() {
        "nip" => Scheme::Nip,
        "iip" => Scheme::Iip,
        "sip" => Scheme::Sip,
        s => return Err(ConfigError::new("scheme", format!("unknown scheme `{s}` (expected nip, iip or sip)"))),
    };
    let elliptic = match c.stabilization.as_str() {
        "add" => EllipticScheme::Additive,
        "sg" => EllipticScheme::ScharfetterGummel,
        s => return Err(ConfigError::new("stab", format!("unknown stabilization `{s}` (expected add or sg)"))),
    };
    let stab = StabilizationConfig {
        scheme,
        theta_ell: c.theta_ell,
        theta_hyp: c.theta_hyp,
        alpha0: c.alpha0,
        elliptic,
        penalize_interface_outflow: c.penalize_interface_outflow,
    };
    for (field, t) in [("theta_ell", c.theta_ell), ("theta_hyp", c.theta_hyp)] {
        if !(t.is_finite() && t > 0.5) {
            return Err(ConfigError::new(field, format!("must be finite and > 1/2, got {t}")));
        }
    }
    if let Some(a) = c.alpha0 {
        if !(a.is_finite() && a > 0.0) {
            return Err(ConfigError::new("alpha0", format!("must be positive, got {a}")));
        }
    }
    if c.degrees.is_empty() || c.degrees.iter().any(|&k| k == 0 || k > hipdg::fespace::basis::MAX_DEGREE) {
        return Err(ConfigError::new(
            "k",
            format!("degrees must lie in 1..={}", hipdg::fespace::basis::MAX_DEGREE),
        ));
    }
    if c.adaptive && !(c.fraction > 0.0 && c.fraction < 1.0) {
        return Err(ConfigError::new("fraction", format!("must lie in (0, 1), got {}", c.fraction)));
    }
    let method = match c.solver.as_str() {
        "direct" => SolverMethod::Direct,
        "gmres" | "iterative" => SolverMethod::Iterative,
        s => return Err(ConfigError::new("solver", format!("unknown solver `{s}` (expected direct or gmres)"))),
    };
    if !(c.tol.is_finite() && c.tol > 0.0) {
        return Err(ConfigError::new("tol", format!("must be positive, got {}", c.tol)));
    }
    if c.restart == 0 || c.max_iterations == 0 {
        return Err(ConfigError::new("restart", "restart and max_iterations must be positive"));
    }
    if c.jobs == 0 {
        return Err(ConfigError::new("jobs", "must be at least 1"));
    }
    let shape = match c.shape.as_deref() {
        Some("tri") => Shape::Tri,
        Some("quad") => Shape::Quad,
        None if c.test == "A" => Shape::Quad,
        None => Shape::Tri,
        Some(s) => return Err(ConfigError::new("shape", format!("unknown shape `{s}` (expected tri or quad)"))),
    };
    if c.adaptive && shape == Shape::Quad && c.levels.iter().all(|l| l.parse::<usize>().is_ok()) {
        return Err(ConfigError::new("shape", "adaptive refinement needs triangle meshes"));
    }
    Ok(Resolved {
        problem,
        stab,
        solver: SolverOptions {
            method,
            tol: c.tol,
            restart: c.restart,
            max_iterations: c.max_iterations,
        },
        shape,
    })
}

fn load_level(test: &str, level: &str, index: usize, shape: Shape) -> hipdg::Result<StudyMesh> {
    match level.parse::<usize>() {
        Ok(n) if test == "C" => bundled_annulus(n),
        Ok(n) => square_mesh(n, shape),
        Err(_) => file_mesh(Path::new(level), index),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Configuration(_)
        | Error::InvalidArgument(_)
        | Error::Capability(_)
        | Error::Coefficient(_)
        | Error::Regime(_) => {
            EXIT_CONFIG
        }
        Error::Convergence { .. } | Error::Singular(_) | Error::LocalSolvability { .. } => EXIT_SOLVER,
        Error::Assembly { first, .. } => exit_code(first),
        _ => 1,
    }
}

fn vtk_path(out: &Path, test: &str, k: usize, level: usize) -> PathBuf {
    out.join(format!("fields_{test}_{k}_{level}.vtk"))
}

fn run(c: &RunConfig, r: &Resolved) -> hipdg::Result<Vec<ConvergenceRecord>> {
    std::fs::create_dir_all(&c.out).map_err(|e| Error::Io {
        path: c.out.clone(),
        source: e,
    })?;
    let meshes = c
        .levels
        .iter()
        .enumerate()
        .map(|(i, l)| load_level(&c.test, l, i, r.shape))
        .collect::<hipdg::Result<Vec<_>>>()?;

    let mut records = if c.adaptive {
        let start = &meshes[0];
        let per_k = c
            .degrees
            .par_iter()
            .map(|&k| {
                let steps = adaptive_study(&start.mesh, &r.problem, k, &r.stab, &r.solver, c.cycles, c.fraction)?;
                let mut recs = Vec::with_capacity(steps.len());
                for (cycle, s) in steps.iter().enumerate() {
                    let o = &s.outcome;
                    let h = o.mesh.max_diameter();
                    let m = StudyMesh {
                        mesh: o.mesh.clone(),
                        level: cycle,
                        h,
                        h_inv: 1.0 / h,
                    };
                    recs.push(record(&r.problem, &r.stab, k, &m, o));
                    if c.vtk {
                        write_fields(
                            &o.mesh,
                            &o.space,
                            Some(&r.problem),
                            &o.solution.interior,
                            vtk_path(&c.out, &c.test, k, cycle),
                        )?;
                    }
                }
                Ok(recs)
            })
            .collect::<hipdg::Result<Vec<_>>>()?;
        per_k.into_iter().flatten().collect()
    } else {
        let tasks: Vec<(usize, &StudyMesh)> = c
            .degrees
            .iter()
            .flat_map(|&k| meshes.iter().map(move |m| (k, m)))
            .collect();
        tasks
            .par_iter()
            .map(|&(k, m)| {
                let o = solve_problem(&m.mesh, &r.problem, k, &r.stab, &r.solver)?;
                if c.vtk {
                    write_fields(
                        &o.mesh,
                        &o.space,
                        Some(&r.problem),
                        &o.solution.interior,
                        vtk_path(&c.out, &c.test, k, m.level),
                    )?;
                }
                Ok(record(&r.problem, &r.stab, k, m, &o))
            })
            .collect::<hipdg::Result<Vec<_>>>()?
    };
    if !c.timing {
        for rec in &mut records {
            rec.solve_seconds = 0.0;
        }
    }
    fill_rates(&mut records);
    Ok(records)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid `{}`: {}", e.field, e.message);
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let resolved = match resolve(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: invalid `{}`: {}", e.field, e.message);
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(config.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {} worker threads: {e}", config.jobs);
            return ExitCode::FAILURE;
        }
    };
    let result = pool.install(|| run(&config, &resolved)).and_then(|records| {
        write_csv(&records, config.out.join("convergence.csv"))?;
        let json = serde_json::to_string_pretty(&config).expect("config serializes");
        let path = config.out.join("run.json");
        std::fs::write(&path, json + "\n").map_err(|e| Error::Io { path, source: e })?;
        Ok(records)
    });
    match result {
        Ok(records) => {
            for r in &records {
                let ecr = r.ecr.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
                println!(
                    "{} {} {} k={} h=1/{:.4} l2={:.3e} ecr={} dofs={}",
                    r.test, r.scheme, r.stabilization, r.k, r.h_inv, r.l2_error, ecr, r.dofs
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
