//! Command-line front end: forward invariant tables, inversion, round trips,
//! identity suites and catalogue dumps.

pub mod suites;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use wavetrace::domain::{genericity_check, parse_spec, write_spec, DomainSpec, GenericityFlag, SymmetryClass};
use wavetrace::feynman::{automorphism_order, enumerate_graphs, FeynmanGraph};
use wavetrace::hessian::bad_set;
use wavetrace::invariants::{build_table, table_class, InvariantTable, Normalization};
use wavetrace::inverse::{recover, RecoveryResult};

#[derive(Debug, Parser)]
#[command(name = "wavetrace", version, about = "Wave-trace invariants at bouncing-ball and dihedral orbits")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Tolerance override for round trips and identity suites.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = 2024)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Top,
    Full,
}

impl From<Mode> for Normalization {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Top => Normalization::TopOnly,
            Mode::Full => Normalization::FullPrincipal,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Invariant table of a domain spec.
    Forward {
        spec: PathBuf,
        #[arg(long, default_value_t = 3)]
        r_max: usize,
        #[arg(long, default_value_t = 4)]
        j_max: usize,
        #[arg(long, value_enum, default_value_t = Mode::Top)]
        mode: Mode,
        /// Exit with code 2 when the spec fails the genericity check.
        #[arg(long)]
        strict: bool,
    },
    /// Recover the Taylor data from an invariant table.
    Invert {
        table: PathBuf,
        /// Override the table's symmetry class.
        #[arg(long)]
        class: Option<SymmetryClass>,
        /// Recovery order J (derivatives through 2J); defaults to the table's.
        #[arg(long)]
        j_max: Option<usize>,
        /// Write the recovery report here as well.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Forward table followed by inversion, compared with the spec.
    Roundtrip {
        spec: PathBuf,
        #[arg(long, default_value_t = 3)]
        r_max: usize,
        #[arg(long, default_value_t = 4)]
        j_max: usize,
        #[arg(long, value_enum, default_value_t = Mode::Top)]
        mode: Mode,
    },
    /// Identity suites; all suites unless one is named.
    Verify {
        #[arg(long, value_enum)]
        suite: Option<suites::Suite>,
        /// Per-check residuals as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Root set and factorization of the bad Floquet parameters.
    Badset,
    /// Graph catalogue of a given order.
    Graphs {
        #[arg(long)]
        chi: usize,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] wavetrace::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("spec is not generic: {0}")]
    NotGeneric(String),
    #[error("recovery obstructed: {0}")]
    Obstructed(String),
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn obstruction(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.obstruction(),
            CliError::Io { .. } => "io",
            CliError::NotGeneric(_) => "not-generic",
            CliError::Obstructed(_) => "obstructed",
            CliError::CheckFailed(_) => "check-failed",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NotGeneric(_) => 2,
            _ => 1,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn check_input(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Io {
            path: path.to_owned(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        })
    }
}

fn check_output(path: Option<&Path>) -> Result<(), CliError> {
    let Some(path) = path else { return Ok(()) };
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(CliError::Io {
            path: path.to_owned(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        }),
        _ => Ok(()),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, format!("{text}\n"))
            .map_err(|source| CliError::Io { path: path.to_owned(), source }),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

/// Genericity flags that matter for the class the table will carry.
pub fn relevant_flags(spec: &DomainSpec) -> Vec<GenericityFlag> {
    let ellipse = table_class(spec) == SymmetryClass::Ellipse;
    genericity_check(spec)
        .flags
        .into_iter()
        .filter(|f| !(ellipse && matches!(f, GenericityFlag::CubicVanishes | GenericityFlag::BadFloquet { .. })))
        .collect()
}

#[derive(Serialize)]
struct RecoveryReport<'a> {
    spec: serde_json::Value,
    recovery: &'a RecoveryResult,
}

fn recovery_report(result: &RecoveryResult, m: Option<usize>) -> Result<String, CliError> {
    let spec: serde_json::Value =
        serde_json::from_str(&write_spec(&result.spec(m)?)).expect("spec JSON is valid");
    Ok(serde_json::to_string_pretty(&RecoveryReport { spec, recovery: result }).expect("report serializes"))
}

fn obstruction_text(result: &RecoveryResult) -> Option<String> {
    if result.obstructions.is_empty() {
        return None;
    }
    Some(
        result
            .obstructions
            .iter()
            .map(|o| format!("{} (order {}): {}", o.name, o.order, o.detail))
            .collect::<Vec<_>>()
            .join("; "),
    )
}

#[derive(Serialize)]
pub struct GraphEntry {
    pub adjacency: Vec<Vec<usize>>,
    pub closed_vertices: usize,
    pub edges: usize,
    pub open_valence: usize,
    pub automorphisms: u64,
    pub template: String,
}

/// Index-contraction template of a graph's amplitude: `a` carries the open
/// vertex, `S` the closed vertices and `h` the propagators.
pub fn graph_template(g: &FeynmanGraph) -> String {
    let n = g.adj.len();
    let mut slots: Vec<Vec<String>> = vec![Vec::new(); n];
    let mut props = Vec::new();
    let mut next = 1;
    for i in 0..n {
        for k in i..n {
            for _ in 0..g.adj[i][k] {
                let (u, v) = (format!("i{next}"), format!("i{}", next + 1));
                next += 2;
                slots[i].push(u.clone());
                slots[k].push(v.clone());
                props.push(format!("h[{u} {v}]"));
            }
        }
    }
    let mut factors = vec![format!("k^({})", g.euler()), format!("1/{}", automorphism_order(g))];
    if !slots[0].is_empty() {
        factors.push(format!("a[{}]", slots[0].join(" ")));
    }
    for s in &slots[1..] {
        factors.push(format!("S[{}]", s.join(" ")));
    }
    factors.extend(props);
    factors.join(" * ")
}

pub fn graph_catalogue(chi: usize) -> Vec<GraphEntry> {
    let mut graphs = enumerate_graphs(chi);
    graphs.sort_by(|a, b| (a.adj.len(), &a.adj).cmp(&(b.adj.len(), &b.adj)));
    graphs
        .iter()
        .map(|g| GraphEntry {
            adjacency: g.adj.clone(),
            closed_vertices: g.closed_count(),
            edges: g.edge_count(),
            open_valence: g.open_valence(),
            automorphisms: automorphism_order(g),
            template: graph_template(g),
        })
        .collect()
}

#[derive(Serialize)]
pub struct RoundtripReport {
    pub class: SymmetryClass,
    pub max_error: f64,
    pub tolerance: f64,
    pub errors: Vec<(usize, f64)>,
    pub obstructions: Vec<String>,
}

/// Largest relative error of the recovered derivatives `2 ≤ k ≤ 2J`,
/// measured against the larger of `|f^{(k)}|` and 10⁻³ of the data scale.
pub fn compare_taylor(spec: &DomainSpec, result: &RecoveryResult, k_max: usize) -> Vec<(usize, f64)> {
    let arc = spec.primary_arc();
    let scale = (2..=k_max).map(|k| arc.derivative(k).abs()).fold(0.0, f64::max);
    (2..=k_max)
        .map(|k| {
            let want = arc.derivative(k);
            let err = match result.derivative(k) {
                Some(got) => (got - want).abs() / want.abs().max(1e-3 * scale),
                None => f64::INFINITY,
            };
            (k, err)
        })
        .collect()
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.out.as_deref();
    check_output(out)?;
    match &cfg.command {
        Command::Forward { spec, r_max, j_max, mode, strict } => {
            check_input(spec)?;
            let spec = parse_spec(&read(spec)?)?;
            let flags = relevant_flags(&spec);
            if !flags.is_empty() {
                let text = flags.iter().map(|f| f.to_string()).collect::<Vec<_>>().join("; ");
                if *strict {
                    return Err(CliError::NotGeneric(text));
                }
                eprintln!("warning: {text}");
            }
            let table = build_table(&spec, *r_max, *j_max, (*mode).into())?;
            emit(out, &table.to_json())
        }
        Command::Invert { table, class, j_max, report } => {
            check_input(table)?;
            check_output(report.as_deref())?;
            let mut table = InvariantTable::from_json(&read(table)?)?;
            if let Some(c) = class {
                table.class = *c;
            }
            let j = j_max.unwrap_or_else(|| table.j_max());
            let result = recover(&table, j)?;
            let text = recovery_report(&result, table.m)?;
            emit(out, &text)?;
            if let Some(path) = report {
                emit(Some(path), &text)?;
            }
            match obstruction_text(&result) {
                Some(o) => Err(CliError::Obstructed(o)),
                None => Ok(()),
            }
        }
        Command::Roundtrip { spec, r_max, j_max, mode } => {
            check_input(spec)?;
            let spec = parse_spec(&read(spec)?)?;
            let table = build_table(&spec, *r_max, *j_max, (*mode).into())?;
            let result = recover(&table, *j_max)?;
            let reference = if spec.primary_arc().derivative(3) < 0.0 { spec.reflected() } else { spec };
            let errors = compare_taylor(&reference, &result, 2 * j_max);
            let tolerance = cfg.tol.unwrap_or(1e-8);
            let obstructions: Vec<String> = result.obstructions.iter().map(|o| o.name.to_string()).collect();
            let undetermined_ok = !obstructions.is_empty();
            let max_error = errors
                .iter()
                .filter(|e| !(undetermined_ok && e.1.is_infinite()))
                .map(|e| e.1)
                .fold(0.0, f64::max);
            let rep = RoundtripReport { class: table.class, max_error, tolerance, errors, obstructions };
            emit(out, &serde_json::to_string_pretty(&rep).expect("report serializes"))?;
            if max_error <= tolerance {
                Ok(())
            } else {
                Err(CliError::CheckFailed(format!("round trip error {max_error:e} exceeds {tolerance:e}")))
            }
        }
        Command::Verify { suite, csv } => {
            check_output(csv.as_deref())?;
            let selected: Vec<suites::Suite> = match suite {
                Some(s) => vec![*s],
                None => suites::Suite::value_variants().to_vec(),
            };
            let mut checks = Vec::new();
            for s in selected {
                checks.extend(suites::run_suite(s, cfg.seed, cfg.tol)?);
            }
            let lines: Vec<String> = checks.iter().map(|c| c.line()).collect();
            emit(out, &lines.join("\n"))?;
            if let Some(path) = csv {
                suites::write_csv(path, &checks)?;
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            if failed == 0 {
                Ok(())
            } else {
                Err(CliError::CheckFailed(format!("{failed} of {} checks failed", checks.len())))
            }
        }
        Command::Badset => emit(out, &serde_json::to_string_pretty(&bad_set()).expect("report serializes")),
        Command::Graphs { chi } => {
            emit(out, &serde_json::to_string_pretty(&graph_catalogue(*chi)).expect("catalogue serializes"))
        }
    }
}
