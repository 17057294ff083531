use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pcoast_core::bench;
use pcoast_core::circuit::Metrics;
use pcoast_core::pipeline::{self, Compiled, PipelineError};
use pcoast_core::sim::MAX_SIM_QUBITS;
use pcoast_core::{Circuit, Gate, GateSet, Outcome, SearchConfig};
use serde::Serialize;

const EXIT_USAGE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_VERIFY: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(name = "pcoast", version, about = "Pauli-graph circuit optimizer")]
struct Cli {
    /// Print each optimization rewrite to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a circuit file.
    Opt(OptArgs),
    /// Run the pipeline on a generated benchmark instance.
    Bench(BenchArgs),
    /// Print metrics of a circuit file.
    Metrics {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Args, Clone)]
struct PipelineArgs {
    #[arg(long, default_value = "hold", value_parser = parse_outcome)]
    outcome: Outcome,
    #[arg(long, default_value = "generic", value_parser = parse_gateset)]
    gateset: GateSet,
    /// Parallelization credit.
    #[arg(long, default_value_t = 1.0)]
    credit: f64,
    #[arg(long)]
    free_node_weighting: bool,
    /// Realize the final qubit relabeling with SWAP gates.
    #[arg(long)]
    emit_swaps: bool,
    /// Check the result with the simulator.
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Write the optimized graph here.
    #[arg(long)]
    dump_graph: Option<PathBuf>,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Args)]
struct OptArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Output circuit; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Qft,
    Grover,
    Hea,
    Qaoa,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(value_enum)]
    family: Family,
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// Gate count for `random`.
    #[arg(long, default_value_t = 30)]
    gates: usize,
    /// Layers for `hea`, rounds for `qaoa`.
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

fn parse_outcome(s: &str) -> Result<Outcome, String> {
    s.parse()
}

fn parse_gateset(s: &str) -> Result<GateSet, String> {
    s.parse()
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    outcome: Outcome,
    #[serde(flatten)]
    search: &'a SearchConfig,
}

#[derive(Serialize)]
struct RunReport<'a> {
    input: Metrics,
    output: Metrics,
    config: ConfigEcho<'a>,
    search_entanglers: usize,
    frame_entanglers: usize,
    mu: Vec<String>,
    permutation: Vec<usize>,
    verified: Option<bool>,
    timings_ms: Timings,
}

#[derive(Serialize)]
struct Timings {
    compile: f64,
    optimize: f64,
    synthesize: f64,
    verify: f64,
}

struct Failure {
    code: u8,
    msg: String,
}

fn fail(code: u8, msg: impl Into<String>) -> Failure {
    Failure {
        code,
        msg: msg.into(),
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Failure {
        fail(EXIT_INTERNAL, e.to_string())
    }
}

fn read_circuit(path: &PathBuf) -> Result<Circuit, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    Circuit::parse(&text).map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn write(path: &PathBuf, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))
}

/// Inserts a rotation before the first measurement, or at the end.
fn corrupt(c: &mut Circuit) {
    let at = c.gates.iter().position(|g| matches!(g, Gate::MeasZ(..)));
    match at {
        Some(k) => {
            let q = c.gates[k].qubits()[0];
            c.gates.insert(k, Gate::RY(q, 0.7));
        }
        None if c.n_qubits > 0 => c.gates.push(Gate::RY(0, 0.7)),
        None => {}
    }
}

struct Run {
    out: Compiled,
    verified: Option<bool>,
    verify_ms: f64,
}

fn execute(
    c: &Circuit,
    args: &PipelineArgs,
    cfg: &SearchConfig,
    verbose: bool,
) -> Result<Run, Failure> {
    if args.verify && c.n_qubits > MAX_SIM_QUBITS {
        return Err(fail(
            EXIT_USAGE,
            format!(
                "--verify supports at most {MAX_SIM_QUBITS} qubits, circuit has {}",
                c.n_qubits
            ),
        ));
    }
    let mut out = pipeline::run(c, args.outcome, cfg)?;
    if verbose {
        for line in &out.log {
            eprintln!("{line}");
        }
    }
    if args.inject_fault {
        corrupt(&mut out.result.circuit);
    }
    if let Some(path) = &args.dump_graph {
        write(path, &out.optimized.dump())?;
    }
    let start = Instant::now();
    let verified = if args.verify {
        Some(pipeline::verify(c, &out, args.outcome, args.seed)?)
    } else {
        None
    };
    Ok(Run {
        out,
        verified,
        verify_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn config(args: &PipelineArgs) -> SearchConfig {
    SearchConfig {
        credit: args.credit,
        free_node_weighting: args.free_node_weighting,
        gateset: args.gateset,
        seed: args.seed,
        emit_swaps: args.emit_swaps,
    }
}

fn report<'a>(c: &Circuit, args: &PipelineArgs, cfg: &'a SearchConfig, run: &Run) -> RunReport<'a> {
    let r = &run.out.result;
    let ms = |d: std::time::Duration| d.as_secs_f64() * 1e3;
    RunReport {
        input: c.metrics(),
        output: r.circuit.metrics(),
        config: ConfigEcho {
            outcome: args.outcome,
            search: cfg,
        },
        search_entanglers: r.search_tqes,
        frame_entanglers: r.frame_tqes,
        mu: r.msf.render(),
        permutation: r.permutation.clone(),
        verified: run.verified,
        timings_ms: Timings {
            compile: ms(run.out.timings.compile),
            optimize: ms(run.out.timings.optimize),
            synthesize: ms(run.out.timings.synthesize),
            verify: run.verify_ms,
        },
    }
}

fn render_output(run: &Run) -> String {
    let r = &run.out.result;
    let mut text = r.circuit.emit();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    for line in r.msf.render() {
        text.push_str(&format!("# {line}\n"));
    }
    if r.permutation.iter().enumerate().any(|(j, &q)| j != q) {
        let perm: Vec<String> = r.permutation.iter().map(|q| q.to_string()).collect();
        text.push_str(&format!("# permutation {}\n", perm.join(" ")));
    }
    text
}

fn finish(run: &Run) -> Result<(), Failure> {
    match run.verified {
        Some(false) => Err(fail(
            EXIT_VERIFY,
            "verification failed: output is not equivalent to the input",
        )),
        _ => Ok(()),
    }
}

fn cmd_opt(a: &OptArgs, verbose: bool) -> Result<(), Failure> {
    let c = read_circuit(&a.input)?;
    let cfg = config(&a.pipeline);
    let run = execute(&c, &a.pipeline, &cfg, verbose)?;
    let json = serde_json::to_string_pretty(&report(&c, &a.pipeline, &cfg, &run))
        .expect("report serializes");
    let text = render_output(&run);
    match &a.out {
        Some(path) => {
            write(path, &text)?;
            println!("{json}");
        }
        None => print!("{text}"),
    }
    if let Some(path) = &a.pipeline.stats {
        write(path, &format!("{json}\n"))?;
    }
    finish(&run)
}

fn cmd_bench(a: &BenchArgs, verbose: bool) -> Result<(), Failure> {
    let p = &a.pipeline;
    let (name, c) = match a.family {
        Family::Qft => ("qft", bench::qft(a.n)),
        Family::Grover => ("grover", bench::grover(a.n)),
        Family::Hea => ("hea", bench::hea(a.n, a.layers, p.seed)),
        Family::Qaoa => ("qaoa", bench::qaoa(a.n, a.layers, p.seed)),
        Family::Random => ("random", bench::random_seeded(a.n, a.gates, p.seed)),
    };
    let cfg = config(p);
    let start = Instant::now();
    let run = execute(&c, p, &cfg, verbose)?;
    let seconds = start.elapsed().as_secs_f64();
    let rep = report(&c, p, &cfg, &run);
    match a.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Row<'a> {
                family: &'a str,
                n: usize,
                seconds: f64,
                #[serde(flatten)]
                report: &'a RunReport<'a>,
            }
            let row = Row {
                family: name,
                n: a.n,
                seconds,
                report: &rep,
            };
            println!("{}", serde_json::to_string(&row).expect("row serializes"));
        }
        Format::Csv => {
            println!("family,n,outcome,gateset,in_gates,in_2q,in_depth,out_gates,out_2q,out_depth,out_meas,seconds,verified");
            let (i, o) = (rep.input, rep.output);
            let verified = run.verified.map_or(String::new(), |v| v.to_string());
            println!(
                "{name},{},{},{},{},{},{},{},{},{},{},{seconds:.6},{verified}",
                a.n,
                p.outcome,
                p.gateset,
                i.total_gates,
                i.two_qubit_gates,
                i.depth,
                o.total_gates,
                o.two_qubit_gates,
                o.depth,
                o.measurements
            );
        }
    }
    if let Some(path) = &p.stats {
        write(
            path,
            &format!(
                "{}\n",
                serde_json::to_string_pretty(&rep).expect("report serializes")
            ),
        )?;
    }
    finish(&run)
}

fn cmd_metrics(input: &PathBuf) -> Result<(), Failure> {
    let c = read_circuit(input)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&c.metrics()).expect("metrics serialize")
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Opt(a) => cmd_opt(a, cli.verbose),
        Command::Bench(a) => cmd_bench(a, cli.verbose),
        Command::Metrics { input } => cmd_metrics(input),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
