//! Command line front end: validate data sets, decide non-emptiness,
//! compute dimensions, expand and linearize graphs, sample charts and
//! export meshes.
//!
//! Exit codes: 0 success (or positive verdict), 1 a valid input with a
//! negative verdict, 2 malformed input.  Output is canonical JSON with
//! sorted keys so identical inputs give byte-identical payloads.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use reebcyl::dataset::{validate_data_set, AsymptoticDataSet};
use reebcyl::index::index_report;
use reebcyl::jsonc::canonical;
use reebcyl::linegraph::{decide_nonempty, Verdict};
use reebcyl::moduligraph::{expand_to_moduli_graph, linearize, PositiveGraph};
use reebcyl::par::Exec;
use reebcyl::sampler::{export_csv, export_obj, sample_cylinder, verify_chart, ChartSpec, SampledChart};

#[derive(Parser)]
#[command(name = "reebcyl", version, about = "Asymptotic data sets, line graphs and cylinder charts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a data set against the admissibility rules.
    Validate { path: PathBuf },
    /// Decide whether the moduli space of a data set is non-empty.
    Decide {
        path: PathBuf,
        /// Also write the witness line graph in DOT form.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Dimension and counting formulas.
    Dim {
        path: PathBuf,
        #[arg(long, default_value_t = 0)]
        genus: u32,
        /// Intersection-point count for the critical budgets.
        #[arg(long)]
        kc: Option<i64>,
    },
    /// Expand the witness line graph into a moduli-space graph.
    Expand {
        path: PathBuf,
        /// Offset display scale; must stay below half the smallest
        /// spectrum gap.
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Run the zipper moves on a graph until it is a line graph.
    Linearize {
        /// Graph JSON (as produced by `expand`).
        graph: PathBuf,
        /// The data set the graph belongs to.
        #[arg(long)]
        data: PathBuf,
    },
    /// Sample a cylinder chart onto a grid.
    Sample {
        spec: PathBuf,
        /// Grid resolution, `N` or `NSIGMAxNV`.
        #[arg(long, default_value = "64")]
        res: String,
        /// Write the chart JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export sampled charts as CSV or OBJ.
    Mesh {
        /// Chart JSON files produced by `sample`.
        charts: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = MeshFormat::Csv)]
        format: MeshFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum MeshFormat {
    Csv,
    Obj,
}

/// Classified process outcome.
enum Outcome {
    Ok(serde_json::Value),
    Negative(serde_json::Value),
    InputError(String),
}

fn emit(value: &serde_json::Value) {
    println!("{}", canonical(value));
}

fn read_data(path: &PathBuf) -> Result<AsymptoticDataSet, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    AsymptoticDataSet::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Validate { path } => {
            let data = match read_data(&path) {
                Ok(d) => d,
                Err(e) => return Outcome::InputError(e),
            };
            let report = validate_data_set(&data);
            let failures: Vec<_> = report
                .failures
                .iter()
                .map(|f| json!({"rule": f.rule.as_str(), "detail": f.detail}))
                .collect();
            let value = json!({"pass": report.pass(), "failures": failures});
            if report.pass() {
                Outcome::Ok(value)
            } else {
                Outcome::Negative(value)
            }
        }
        Command::Decide { path, dot } => {
            let data = match read_data(&path) {
                Ok(d) => d,
                Err(e) => return Outcome::InputError(e),
            };
            match decide_nonempty(&data) {
                Verdict::Nonempty { witness } => {
                    if let Some(dot_path) = dot {
                        if let Err(e) = fs::write(&dot_path, witness.to_dot()) {
                            return Outcome::InputError(format!("{}: {e}", dot_path.display()));
                        }
                    }
                    Outcome::Ok(json!({"verdict": "nonempty", "witness": witness.to_json()}))
                }
                Verdict::NonemptyOneAngle { pair } => Outcome::Ok(json!({
                    "verdict": "nonempty",
                    "witness": {"kind": "one_angle_cylinder", "pair": {"p": pair.p, "pp": pair.pp}},
                })),
                Verdict::Empty { reasons } => {
                    let rs: Vec<_> = reasons
                        .iter()
                        .map(|r| json!({"rule": r.rule.as_str(), "detail": r.detail}))
                        .collect();
                    Outcome::Negative(json!({"verdict": "empty", "reasons": rs}))
                }
            }
        }
        Command::Dim { path, genus, kc } => {
            let data = match read_data(&path) {
                Ok(d) => d,
                Err(e) => return Outcome::InputError(e),
            };
            match index_report(&data, genus, kc) {
                Ok(report) => Outcome::Ok(serde_json::to_value(&report).expect("report serializes")),
                Err(e) => Outcome::Negative(json!({"error": e.to_string()})),
            }
        }
        Command::Expand { path, delta, dot } => {
            let data = match read_data(&path) {
                Ok(d) => d,
                Err(e) => return Outcome::InputError(e),
            };
            let witness = match decide_nonempty(&data) {
                Verdict::Nonempty { witness } => witness,
                Verdict::NonemptyOneAngle { .. } => {
                    return Outcome::Negative(json!({
                        "error": "one-angle cylinder family has no moduli-space graph",
                    }))
                }
                Verdict::Empty { reasons } => {
                    let rs: Vec<_> = reasons
                        .iter()
                        .map(|r| json!({"rule": r.rule.as_str(), "detail": r.detail}))
                        .collect();
                    return Outcome::Negative(json!({"verdict": "empty", "reasons": rs}));
                }
            };
            match expand_to_moduli_graph(&witness, &data, delta) {
                Ok(graph) => {
                    if let Some(dot_path) = dot {
                        if let Err(e) = fs::write(&dot_path, graph.graph.to_dot()) {
                            return Outcome::InputError(format!("{}: {e}", dot_path.display()));
                        }
                    }
                    Outcome::Ok(graph.graph.to_json())
                }
                Err(e) => Outcome::Negative(json!({"error": e.to_string()})),
            }
        }
        Command::Linearize { graph, data } => {
            let data = match read_data(&data) {
                Ok(d) => d,
                Err(e) => return Outcome::InputError(e),
            };
            let text = match fs::read_to_string(&graph) {
                Ok(t) => t,
                Err(e) => return Outcome::InputError(format!("{}: {e}", graph.display())),
            };
            let value: serde_json::Value = match serde_json::from_str(&text) {
                Ok(v) => v,
                Err(e) => return Outcome::InputError(format!("{}: {e}", graph.display())),
            };
            let pg = match PositiveGraph::from_json(&value) {
                Ok(g) => g,
                Err(e) => return Outcome::InputError(e.to_string()),
            };
            match linearize(&pg, &data) {
                Ok((line, trace)) => Outcome::Ok(json!({
                    "line_graph": line.to_json(),
                    "moves": trace.len(),
                })),
                Err(e) => Outcome::Negative(json!({"error": e.to_string()})),
            }
        }
        Command::Sample { spec, res, out } => {
            let text = match fs::read_to_string(&spec) {
                Ok(t) => t,
                Err(e) => return Outcome::InputError(format!("{}: {e}", spec.display())),
            };
            let spec: ChartSpec = match ChartSpec::from_json(&text) {
                Ok(s) => s,
                Err(e) => return Outcome::InputError(e.to_string()),
            };
            let (n_sigma, n_v) = match parse_res(&res) {
                Some(r) => r,
                None => return Outcome::InputError(format!("bad --res {res}")),
            };
            let chart = match sample_cylinder(&spec, n_sigma, n_v, Exec::Par) {
                Ok(c) => c,
                Err(e) => return Outcome::Negative(json!({"error": e.to_string()})),
            };
            let diag = match verify_chart(&chart, None, Exec::Par) {
                Ok(d) => d,
                Err(e) => return Outcome::Negative(json!({"error": e.to_string()})),
            };
            let value = chart_json(&chart, diag.min_pullback, diag.max_rel_pullback_err, diag.collisions.len());
            if let Some(path) = out {
                match fs::File::create(&path) {
                    Ok(mut f) => {
                        if let Err(e) = writeln!(f, "{}", canonical(&value)) {
                            return Outcome::InputError(format!("{}: {e}", path.display()));
                        }
                        Outcome::Ok(json!({"written": path.display().to_string()}))
                    }
                    Err(e) => Outcome::InputError(format!("{}: {e}", path.display())),
                }
            } else {
                Outcome::Ok(value)
            }
        }
        Command::Mesh { charts, format, out } => {
            if charts.is_empty() {
                return Outcome::Negative(json!({"error": "nothing to export"}));
            }
            let mut sampled = Vec::new();
            for path in &charts {
                let text = match fs::read_to_string(path) {
                    Ok(t) => t,
                    Err(e) => return Outcome::InputError(format!("{}: {e}", path.display())),
                };
                let value: serde_json::Value = match serde_json::from_str(&text) {
                    Ok(v) => v,
                    Err(e) => return Outcome::InputError(format!("{}: {e}", path.display())),
                };
                match chart_from_json(&value) {
                    Ok(c) => sampled.push(c),
                    Err(e) => return Outcome::InputError(e),
                }
            }
            let mut buf: Vec<u8> = Vec::new();
            let result = match format {
                MeshFormat::Csv => export_csv(&sampled, &mut buf),
                MeshFormat::Obj => export_obj(&sampled, &mut buf),
            };
            if let Err(e) = result {
                return Outcome::Negative(json!({"error": e.to_string()}));
            }
            match out {
                Some(path) => match fs::write(&path, &buf) {
                    Ok(()) => Outcome::Ok(json!({"written": path.display().to_string()})),
                    Err(e) => Outcome::InputError(format!("{}: {e}", path.display())),
                },
                None => {
                    print!("{}", String::from_utf8_lossy(&buf));
                    Outcome::Ok(json!({"rows": sampled.iter().map(|c| c.n_sigma() * c.n_v()).sum::<usize>()}))
                }
            }
        }
    }
}

fn parse_res(res: &str) -> Option<(usize, usize)> {
    if let Some((a, b)) = res.split_once('x') {
        Some((a.parse().ok()?, b.parse().ok()?))
    } else {
        let n: usize = res.parse().ok()?;
        Some((n, n))
    }
}

fn chart_json(
    chart: &SampledChart,
    min_pullback: f64,
    max_rel_err: f64,
    collisions: usize,
) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = (0..chart.n_sigma())
        .flat_map(|i| {
            (0..chart.n_v()).map(move |j| {
                let p = chart.point(i, j);
                json!([chart.sigma[i], chart.v[j], p[0], p[1], p[2], p[3]])
            })
        })
        .collect();
    json!({
        "kind": "sampled_chart",
        "spec": serde_json::to_value(&chart.spec).expect("spec serializes"),
        "spec_hash": format!("{:016x}", chart.spec_hash),
        "n_sigma": chart.n_sigma(),
        "n_v": chart.n_v(),
        "nodes": rows,
        "diagnostics": {
            "min_pullback": min_pullback,
            "max_rel_pullback_err": max_rel_err,
            "collisions": collisions,
        },
    })
}

fn chart_from_json(value: &serde_json::Value) -> Result<SampledChart, String> {
    let spec: ChartSpec = serde_json::from_value(value["spec"].clone())
        .map_err(|e| format!("chart spec: {e}"))?;
    let n_sigma = value["n_sigma"].as_u64().ok_or("missing n_sigma")? as usize;
    let n_v = value["n_v"].as_u64().ok_or("missing n_v")? as usize;
    // Re-sample deterministically from the stored spec; the stored node
    // list is authoritative for external consumers but the chart can be
    // rebuilt exactly from its spec and resolution.
    sample_cylinder(&spec, n_sigma, n_v, Exec::Par).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let level = std::env::var("TOOLKIT_LOG").unwrap_or_else(|_| "quiet".into());
    let filter = match level.as_str() {
        "debug" => "debug",
        "info" => "info",
        _ => "off",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(filter)).init();

    let cli = Cli::parse();
    match run(cli) {
        Outcome::Ok(value) => {
            emit(&value);
            ExitCode::from(0)
        }
        Outcome::Negative(value) => {
            emit(&value);
            ExitCode::from(1)
        }
        Outcome::InputError(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
