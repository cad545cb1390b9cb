//! `graphlimit` command-line front end.
//!
//! Exit codes: 0 success, 2 input error, 3 budget exceeded, 4 internal
//! invariant violation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use graphlimit::cuts::{balanced_cut_heuristic, min_balanced_cut_exact};
use graphlimit::experiments::{
    run_components_experiment, run_cut_experiment, run_density_fingerprint_experiment,
    run_sum_convergence_experiment, ExperimentConfig, ExperimentReport, SumConvergenceParams,
};
use graphlimit::graph::{cut_distance_iso, cut_norm_distance};
use graphlimit::limit::{decompose_limit, is_connected_limit, limit_density, limit_fingerprint, realize};
use graphlimit::sampler::sample_graph;
use graphlimit::{Error, Graph, GraphLimit, Seed, StepKernel};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "graphlimit", version, about = "Graph limit algebra and W-random graph experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print t(F, Γ) for a limit file and a graph file.
    Density {
        #[arg(long)]
        limit: PathBuf,
        #[arg(long)]
        graph: PathBuf,
    },
    /// Print the step kernel of a direct sum; terms are `ALPHA:PATH`.
    Sum {
        #[arg(long = "term", required = true, value_name = "ALPHA:PATH")]
        terms: Vec<String>,
    },
    /// Print the component decomposition of a limit.
    Decompose {
        #[arg(long)]
        limit: PathBuf,
    },
    /// Print whether a limit is connected.
    Connected {
        #[arg(long)]
        limit: PathBuf,
    },
    /// Print the homomorphism densities of every connected graph on at most k vertices.
    Fingerprint {
        #[arg(long)]
        limit: PathBuf,
        #[arg(long, default_value_t = 4)]
        k: usize,
    },
    /// Sample G(n, Γ) with block labels.
    Sample {
        #[arg(long)]
        limit: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Print the cut norm distance of two graphs on the same vertex set.
    Cutnorm {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        other: PathBuf,
        /// Minimise over relabelings of the second graph.
        #[arg(long)]
        iso: bool,
    },
    /// Find a small δ-balanced cut.
    Mincut {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        delta: f64,
        /// Seed for the heuristic; not needed with --exact.
        #[arg(long, required_unless_present = "exact")]
        seed: Option<u64>,
        /// Exhaustive search (at most 20 vertices).
        #[arg(long)]
        exact: bool,
    },
    /// Run a Monte Carlo experiment from a JSON config.
    Experiment {
        #[arg(value_enum)]
        kind: ExperimentName,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Replace the configured sample sizes with this single n.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        k: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct Output {
    /// Write to this file and print its path; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentName {
    Components,
    Cut,
    SumConvergence,
    Fingerprint,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_budget() {
            3
        } else if e.is_invariant() {
            4
        } else {
            2
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(message: String) -> Failure {
    Failure { code: 2, message }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

/// A limit file holds a tagged limit or, failing that, a bare step kernel.
fn read_limit(path: &Path) -> CliResult<GraphLimit> {
    let text = read(path)?;
    match serde_json::from_str::<GraphLimit>(&text) {
        Ok(l) => Ok(l),
        Err(limit_err) => match serde_json::from_str::<StepKernel>(&text) {
            Ok(w) => Ok(GraphLimit::Step(w)),
            Err(_) => Err(input_error(format!("{}: {limit_err}", path.display()))),
        },
    }
}

fn read_graph(path: &Path) -> CliResult<Graph> {
    parse_json(path, &read(path)?)
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serialises") + "\n"
}

/// A number with at most 12 significant digits and no trailing zeros.
fn format_number(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn parse_term(term: &str) -> CliResult<(f64, GraphLimit)> {
    let (alpha, path) = term
        .split_once(':')
        .ok_or_else(|| input_error(format!("term {term:?} is not ALPHA:PATH")))?;
    let alpha: f64 = alpha
        .parse()
        .map_err(|_| input_error(format!("term {term:?} has a bad weight")))?;
    Ok((alpha, read_limit(Path::new(path))?))
}

fn emit(output: &Output, json: String, csv: Option<String>) -> CliResult<String> {
    let body = match output.format {
        Format::Json => json,
        Format::Csv => csv.ok_or_else(|| input_error("csv output is only available for experiments".into()))?,
    };
    match &output.out {
        Some(path) => {
            fs::write(path, body).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
            Ok(format!("{}\n", path.display()))
        }
        None => Ok(body),
    }
}

fn load_experiment(
    config: &Path,
    seed: u64,
) -> CliResult<(ExperimentConfig, Option<SumConvergenceParams>)> {
    let mut value: serde_json::Value = parse_json(config, &read(config)?)?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| input_error(format!("{}: config must be a JSON object", config.display())))?;
    obj.insert("seed".into(), seed.into());
    let extra: Vec<(&str, serde_json::Value)> = ["other", "f", "alpha"]
        .into_iter()
        .filter_map(|k| obj.remove(k).map(|v| (k, v)))
        .collect();
    let cfg: ExperimentConfig = serde_json::from_value(value)
        .map_err(|e| input_error(format!("{}: {e}", config.display())))?;
    let params = if extra.is_empty() {
        None
    } else {
        let map: serde_json::Map<String, serde_json::Value> = extra.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        Some(
            serde_json::from_value(serde_json::Value::Object(map))
                .map_err(|e| input_error(format!("{}: {e}", config.display())))?,
        )
    };
    Ok((cfg, params))
}

fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Density { limit, graph } => {
            let t = limit_density(&read_graph(&graph)?, &read_limit(&limit)?)?;
            Ok(format_number(t) + "\n")
        }
        Command::Sum { terms } => {
            let terms = terms.iter().map(|t| parse_term(t)).collect::<CliResult<Vec<_>>>()?;
            Ok(to_json(&realize(&GraphLimit::sum(terms)?)?))
        }
        Command::Decompose { limit } => Ok(to_json(&decompose_limit(&read_limit(&limit)?)?)),
        Command::Connected { limit } => Ok(format!("{}\n", is_connected_limit(&read_limit(&limit)?)?)),
        Command::Fingerprint { limit, k } => Ok(to_json(&limit_fingerprint(&read_limit(&limit)?, k)?)),
        Command::Sample { limit, n, seed, output } => {
            let w = realize(&read_limit(&limit)?)?;
            emit(&output, to_json(&sample_graph(&w, n, Seed(seed))?), None)
        }
        Command::Cutnorm { graph, other, iso } => {
            let (g, h) = (read_graph(&graph)?, read_graph(&other)?);
            let d = if iso { cut_distance_iso(&g, &h)? } else { cut_norm_distance(&g, &h)? };
            Ok(format_number(d) + "\n")
        }
        Command::Mincut { graph, delta, seed, exact } => {
            let g = read_graph(&graph)?;
            let result = match seed {
                Some(s) if !exact => balanced_cut_heuristic(&g, delta, Seed(s))?,
                _ => min_balanced_cut_exact(&g, delta)?,
            };
            Ok(to_json(&result))
        }
        Command::Experiment { kind, config, seed, n, reps, delta, k, output } => {
            let (mut cfg, params) = load_experiment(&config, seed)?;
            if let Some(n) = n {
                cfg.n_values = vec![n];
            }
            if let Some(r) = reps {
                cfg.reps = r;
            }
            if let Some(d) = delta {
                cfg.delta = d;
            }
            if let Some(k) = k {
                cfg.catalog_k = k;
            }
            let report: ExperimentReport = match kind {
                ExperimentName::Components => run_components_experiment(&cfg)?,
                ExperimentName::Cut => run_cut_experiment(&cfg)?,
                ExperimentName::Fingerprint => run_density_fingerprint_experiment(&cfg)?,
                ExperimentName::SumConvergence => {
                    let params = params.ok_or_else(|| {
                        input_error(format!("{}: sum-convergence needs \"other\", \"f\" and \"alpha\"", config.display()))
                    })?;
                    run_sum_convergence_experiment(&cfg, &params)?
                }
            };
            emit(&output, report.to_json(), Some(report.to_csv()?))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
