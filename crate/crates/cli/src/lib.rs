//! Command-line front end: problem files, the built-in corpus and reports.

pub mod corpus;
pub mod report;
pub mod schema;

use clap::{Parser, Subcommand};
use report::{analyze_point, AnalysisReport, ConvergeReport, Metadata, PerturbReport};
use schema::{Point, Problem, SchemaError};
use std::path::PathBuf;
use varcrit::convergence::{run_batch, BatchConfig};
use varcrit::stability::{calmness_probe, ProbeConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Golden mismatches; carries the rendered report.
    #[error("golden drift: {count} mismatches")]
    Drift { count: usize, report: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("infeasible point: {0}")]
    Infeasible(String),
    #[error("not a multiplier: {0}")]
    Membership(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Drift { .. } => 1,
            CliError::Usage(_) | CliError::Schema(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Membership(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "varcrit",
    version,
    about = "Critical multipliers and stability of variational systems with CPWL outer functions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact analysis of one or all points of a problem.
    Analyze {
        /// Problem file, or the name of a built-in corpus problem.
        file: String,
        #[arg(long)]
        point: Option<String>,
        /// Also analyze every vertex of the multiplier set.
        #[arg(long)]
        all_vertices: bool,
        #[arg(long)]
        json: bool,
    },
    /// Sample canonical perturbations and estimate the calmness modulus.
    Perturb {
        file: String,
        #[arg(long)]
        point: Option<String>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6])]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Follow the witness path of a critical multiplier.
        #[arg(long)]
        path_witness: bool,
        #[arg(long)]
        json: bool,
    },
    /// Newton runs from random starts near a KKT point, with rate histogram.
    Converge {
        file: String,
        #[arg(long)]
        point: Option<String>,
        #[arg(long, default_value_t = 20)]
        starts: usize,
        #[arg(long, default_value_t = 0.1)]
        ball: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 60)]
        max_iter: usize,
        #[arg(long)]
        json: bool,
    },
    /// Run the golden corpus.
    Corpus {
        #[arg(long)]
        list: bool,
        /// Read problem files from this directory instead of the built-in set.
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

pub fn load(file: &str) -> Result<Problem, CliError> {
    let path = std::path::Path::new(file);
    let text = if path.exists() {
        std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {file}: {e}")))?
    } else if let Some(t) = corpus::builtin(file) {
        t.to_string()
    } else {
        return Err(CliError::Usage(format!("no such file or corpus problem: {file}")));
    };
    Ok(Problem::parse(&text)?)
}

fn pick(problem: &Problem, name: Option<&str>) -> Result<Point, CliError> {
    match name {
        Some(n) => Ok(problem.point(n)?),
        None => problem
            .points()
            .into_iter()
            .next()
            .ok_or_else(|| CliError::Usage(format!("{} has no points", problem.file.name))),
    }
}

fn emit<T: serde::Serialize>(json: bool, value: &T, text: impl FnOnce() -> String) -> String {
    if json {
        let mut s = serde_json::to_string_pretty(value).expect("report serializes");
        s.push('\n');
        s
    } else {
        text()
    }
}

pub fn cmd_analyze(file: &str, point: Option<&str>, all_vertices: bool) -> Result<AnalysisReport, CliError> {
    let problem = load(file)?;
    let selected = match point {
        Some(n) => vec![problem.point(n)?],
        None => problem.points(),
    };
    let mut points = Vec::new();
    for p in &selected {
        points.push(analyze_point(&problem, &p.name, &p.x, &p.v)?);
    }
    if all_vertices {
        let mut seen = Vec::new();
        for p in &selected {
            if seen.contains(&p.x) {
                continue;
            }
            seen.push(p.x.clone());
            let lam = problem.system.multiplier_set(&p.x).map_err(|e| report::point_error(&p.name, e))?;
            for (k, v) in lam.vertices.points.iter().enumerate() {
                points.push(analyze_point(&problem, &format!("{}:vertex{k}", p.name), &p.x, v)?);
            }
        }
    }
    Ok(AnalysisReport { metadata: Metadata::new(&problem, vec![]), notes: problem.file.notes.clone(), points })
}

pub fn probe_config(radii: Vec<f64>, samples: usize, seed: u64, path_witness: bool) -> Result<ProbeConfig, CliError> {
    if radii.is_empty() || radii.iter().any(|r| !r.is_finite() || *r <= 0.0) {
        return Err(CliError::Usage("--radii needs at least one positive finite radius".into()));
    }
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    Ok(ProbeConfig { radii, samples_per_radius: samples, rng_seed: seed, path_witness, ..ProbeConfig::default() })
}

pub fn cmd_perturb(file: &str, point: Option<&str>, cfg: &ProbeConfig) -> Result<PerturbReport, CliError> {
    let problem = load(file)?;
    let p = pick(&problem, point)?;
    let r = calmness_probe(&problem.system, &p.x, &p.v, cfg).map_err(|e| match e {
        varcrit::criticality::CriticalityError::Membership(e) => report::point_error(&p.name, e),
    })?;
    Ok(PerturbReport::new(&problem, &p.name, cfg, &r))
}

pub fn batch_config(starts: usize, ball: f64, seed: u64, max_iter: usize) -> Result<BatchConfig, CliError> {
    if starts == 0 {
        return Err(CliError::Usage("--starts must be positive".into()));
    }
    if !ball.is_finite() || ball <= 0.0 {
        return Err(CliError::Usage("--ball must be positive".into()));
    }
    if max_iter == 0 {
        return Err(CliError::Usage("--max-iter must be positive".into()));
    }
    Ok(BatchConfig { starts, ball, rng_seed: seed, max_iter, ..BatchConfig::default() })
}

pub fn cmd_converge(file: &str, point: Option<&str>, cfg: &BatchConfig) -> Result<ConvergeReport, CliError> {
    let problem = load(file)?;
    let p = pick(&problem, point)?;
    let cp = problem.composite.as_ref().ok_or_else(|| {
        CliError::Usage(format!("{} gives f rather than phi0; converge needs a composite problem", problem.file.name))
    })?;
    problem.system.certified_point(&p.x, &p.v).map_err(|e| report::point_error(&p.name, e))?;
    let b = run_batch(cp, &p.x, &p.v, cfg).map_err(|e| report::point_error(&p.name, e))?;
    Ok(ConvergeReport::new(&problem, &p.name, cfg, &b))
}

fn dispatch(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Analyze { file, point, all_vertices, json } => {
            let r = cmd_analyze(&file, point.as_deref(), all_vertices)?;
            Ok(emit(json, &r, || r.render()))
        }
        Command::Perturb { file, point, radii, samples, seed, path_witness, json } => {
            let cfg = probe_config(radii, samples, seed, path_witness)?;
            let r = cmd_perturb(&file, point.as_deref(), &cfg)?;
            Ok(emit(json, &r, || r.render()))
        }
        Command::Converge { file, point, starts, ball, seed, max_iter, json } => {
            let cfg = batch_config(starts, ball, seed, max_iter)?;
            let r = cmd_converge(&file, point.as_deref(), &cfg)?;
            Ok(emit(json, &r, || r.render()))
        }
        Command::Corpus { list, dir, json } => {
            if list {
                let mut out = String::new();
                for (label, text) in corpus::sources(dir.as_deref())? {
                    let p = Problem::parse(&text).map_err(|e| CliError::Usage(format!("{label}: {e}")))?;
                    let desc = p.file.description.clone().unwrap_or_default();
                    out.push_str(&format!("{:<14} {} points  {desc}\n", p.file.name, p.file.points.len()));
                }
                return Ok(out);
            }
            let r = corpus::run_corpus(dir.as_deref())?;
            let out = emit(json, &r, || r.render());
            match r.drift() {
                0 => Ok(out),
                count => Err(CliError::Drift { count, report: out }),
            }
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { stdout: text, stderr: String::new(), code }
            } else {
                Outcome { stdout: String::new(), stderr: text, code }
            };
        }
    };
    match dispatch(cli) {
        Ok(stdout) => Outcome { stdout, stderr: String::new(), code: 0 },
        Err(CliError::Drift { count, report }) => {
            Outcome { stdout: report, stderr: format!("error: golden drift: {count} mismatches\n"), code: 1 }
        }
        Err(e) => Outcome { stdout: String::new(), stderr: format!("error: {e}\n"), code: e.exit_code() },
    }
}
