use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use ndf_core::engine::{self, Limits, Policy, DEFAULT_STEP_LIMIT};
use ndf_core::frontend::{self, format_bindings, interpret, parse_bindings};
use ndf_core::fusion::{auto_fuse, map_mesh_with, MeshOptions};
use ndf_core::graph::{deserialize, export_dot, serialize, validate, DataflowGraph};
use ndf_core::learn::{self, Mode, TrainConfig};
use ndf_core::lower::{self, LowerOptions};

/// Compiler, runtime and trainer for neuromorphic dataflow graphs.
#[derive(Parser)]
#[command(name = "ndf", version, about)]
struct Cli {
    /// Emit structured JSON instead of key=value lines.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Conv,
    Ndf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Schedule {
    Fifo,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainMode {
    Independent,
    End2end,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a program and print it back, or report the first error.
    Parse { file: PathBuf },
    /// Lower a program into a dataflow graph.
    Lower {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "ndf")]
        model: Model,
        /// One operator per expression node instead of one per assignment.
        #[arg(long)]
        no_fuse_expressions: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Execute a graph on the token engine.
    Run {
        /// Graph file, or `-` for standard input.
        #[arg(default_value = "-")]
        graph: PathBuf,
        #[arg(long, default_value = "")]
        inputs: String,
        #[arg(long, value_enum, default_value = "fifo")]
        schedule: Schedule,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the firing trace before the outputs.
        #[arg(long)]
        trace: bool,
    },
    /// Actor counts of a graph.
    Stats {
        #[arg(default_value = "-")]
        graph: PathBuf,
    },
    /// Greedily fuse adjacent where actors.
    Fuse {
        #[arg(default_value = "-")]
        graph: PathBuf,
        /// Maximum number of ports of a fused actor.
        #[arg(short = 'g', long, default_value_t = 16)]
        granularity: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Place computing actors on a mesh of cores.
    Map {
        #[arg(default_value = "-")]
        graph: PathBuf,
        /// Mesh dimensions as RxC.
        #[arg(long, default_value = "2x2")]
        mesh: String,
        #[arg(long, default_value_t = 4)]
        capacity: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write a clustered DOT rendering of the placement.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Train the gated sin/cos approximator and report test errors as CSV.
    Train {
        /// Hidden widths, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
        hidden: Vec<usize>,
        #[arg(long, value_enum, default_value = "both")]
        mode: TrainMode,
        /// Number of seeds, starting at `--seed`.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5000)]
        epochs: usize,
        #[arg(long, default_value_t = 0.05)]
        lr: f64,
        #[arg(long, default_value_t = 4.0)]
        beta: f64,
        #[arg(long, default_value_t = 256)]
        points: usize,
        /// Append the seed-averaged summary table.
        #[arg(long)]
        summary: bool,
    },
    /// Graphviz rendering of a graph.
    Dot {
        #[arg(default_value = "-")]
        graph: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a program directly on the reference interpreter.
    Oracle {
        file: PathBuf,
        #[arg(long, default_value = "")]
        inputs: String,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Semantic(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Semantic(_) => 2,
        }
    }
}

fn semantic(e: impl std::fmt::Display) -> CliError {
    CliError::Semantic(e.to_string())
}

fn read_text(path: &Path) -> Result<String, CliError> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| CliError::Usage(format!("cannot read standard input: {e}")))?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) if p != Path::new("-") => {
            fs::write(p, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display())))
        }
        _ => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_graph(path: &Path) -> Result<DataflowGraph, CliError> {
    let text = read_text(path)?;
    let g = deserialize(&text).map_err(|e| semantic(format!("{}: {e}", path.display())))?;
    let report = validate(&g);
    if !report.is_valid() {
        return Err(semantic(format!("{}: invalid graph\n{report}", path.display())));
    }
    Ok(g)
}

fn load_program(path: &Path) -> Result<frontend::Ast, CliError> {
    let text = read_text(path)?;
    frontend::parse(&text).map_err(|e| semantic(format!("{}: {e}", path.display())))
}

fn bindings(text: &str) -> Result<frontend::Env, CliError> {
    parse_bindings(text).map_err(|e| CliError::Usage(format!("--inputs: {e}")))
}

fn step_limit() -> Result<u64, CliError> {
    match std::env::var("NDF_STEP_LIMIT") {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("NDF_STEP_LIMIT must be a positive integer, got '{v}'"))),
        Err(_) => Ok(DEFAULT_STEP_LIMIT),
    }
}

fn parse_mesh(text: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("--mesh expects RxC such as 2x2, got '{text}'"));
    let (r, c) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?))
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json values serialize"));
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let json = cli.json;
    match cli.command {
        Command::Parse { file } => {
            let ast = load_program(&file)?;
            if json {
                print_json(&json!({ "statements": ast.program.len(), "program": ast.to_string() }));
            } else {
                print!("{ast}");
            }
        }
        Command::Lower { file, model, no_fuse_expressions, output } => {
            let ast = load_program(&file)?;
            let opts = LowerOptions { fuse_expressions: !no_fuse_expressions };
            let g = match model {
                Model::Conv => lower::lower_conventional_with(&ast, opts),
                Model::Ndf => lower::lower_ndf_with(&ast, opts),
            };
            let mut text = serialize(&g).map_err(semantic)?;
            text.push('\n');
            write_text(output.as_deref(), &text)?;
        }
        Command::Run { graph, inputs, schedule, seed, trace } => {
            let g = load_graph(&graph)?;
            let inputs = bindings(&inputs)?;
            let policy = match schedule {
                Schedule::Fifo => Policy::Fifo,
                Schedule::Random => Policy::Random(seed),
            };
            let limits = Limits { max_steps: step_limit()?, record_trace: trace, ..Limits::default() };
            let out = engine::run(&g, &inputs, policy, &limits).map_err(semantic)?;
            if json {
                let trace: Vec<String> = out.trace.iter().flat_map(|t| t.entries.iter().map(|e| e.to_string())).collect();
                print_json(&json!({ "outputs": out.outputs, "steps": out.steps, "trace": trace }));
            } else {
                if let Some(t) = &out.trace {
                    for e in &t.entries {
                        println!("{e}");
                    }
                }
                println!("{}", format_bindings(&out.outputs));
            }
        }
        Command::Stats { graph } => {
            let g = load_graph(&graph)?;
            let s = lower::stats(&g);
            let wheres = s.count("StaticWhere") + s.count("DynamicWhere");
            if json {
                let mut v = serde_json::to_value(&s).map_err(semantic)?;
                v["WhereCount"] = json!(wheres);
                v["WhenCount"] = json!(s.count("When"));
                print_json(&v);
            } else {
                for (k, n) in &s.counts {
                    println!("{k}={n}");
                }
                println!("WhereCount={wheres}");
                println!("WhenCount={}", s.count("When"));
                println!("gate_plus_merge={}", s.gate_plus_merge);
                println!("total_actors_excluding_copies={}", s.total_actors_excluding_copies);
                println!("total_actors={}", s.total_actors);
            }
        }
        Command::Fuse { graph, granularity, output } => {
            let g = load_graph(&graph)?;
            let fused = auto_fuse(&g, granularity);
            let mut text = serialize(&fused).map_err(semantic)?;
            text.push('\n');
            write_text(output.as_deref(), &text)?;
        }
        Command::Map { graph, mesh, capacity, alpha, seed, dot } => {
            let g = load_graph(&graph)?;
            let (rows, cols) = parse_mesh(&mesh)?;
            let opts = MeshOptions { rows, cols, capacity, alpha, seed, ..MeshOptions::default() };
            let p = map_mesh_with(&g, &opts).map_err(semantic)?;
            if let Some(path) = dot {
                write_text(Some(&path), &p.to_dot(&g))?;
            }
            if json {
                print_json(&serde_json::to_value(&p).map_err(semantic)?);
            } else {
                for (id, (r, c)) in &p.assignment {
                    println!("actor{}=({r},{c})", id.0);
                }
                let m = &p.metrics;
                println!("max_load={}", m.max_load);
                println!("mean_load={}", m.mean_load);
                println!("imbalance={}", m.imbalance);
                println!("wire_cost={}", m.wire_cost);
                println!("objective={}", m.objective);
                println!("initial_objective={}", p.initial_metrics.objective);
            }
        }
        Command::Train { hidden, mode, seeds, seed, epochs, lr, beta, points, summary } => {
            if hidden.contains(&0) {
                return Err(CliError::Usage("--hidden values must be positive".into()));
            }
            let modes = match mode {
                TrainMode::Independent => vec![Mode::Independent],
                TrainMode::End2end => vec![Mode::End2end],
                TrainMode::Both => vec![Mode::Independent, Mode::End2end],
            };
            let base = TrainConfig { beta, lr, epochs, train_points: points, ..TrainConfig::default() };
            let seeds: Vec<u64> = (seed..seed + seeds).collect();
            let results = learn::run_experiment(&base, &hidden, &seeds, &modes).map_err(semantic)?;
            let rows = learn::summarize(&results);
            if json {
                let runs: Vec<_> = results
                    .iter()
                    .map(|r| json!({ "mode": r.mode, "hidden": r.hidden, "seed": r.seed, "mse": r.mse }))
                    .collect();
                print_json(&json!({ "runs": runs, "summary": rows }));
            } else {
                print!("{}", learn::results_csv(&results));
                if summary {
                    println!();
                    print!("{}", learn::summary_table(&rows));
                }
            }
        }
        Command::Dot { graph, output } => {
            let g = load_graph(&graph)?;
            write_text(output.as_deref(), &export_dot(&g))?;
        }
        Command::Oracle { file, inputs } => {
            let ast = load_program(&file)?;
            let inputs = bindings(&inputs)?;
            let out = interpret(&ast, &inputs).map_err(semantic)?;
            if json {
                print_json(&json!({ "outputs": out }));
            } else {
                println!("{}", format_bindings(&out));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
