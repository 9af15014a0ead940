//! `fdtrace`: run, trace, query, check, compare and visualize finite-domain
//! solver executions.
//!
//! Exit codes: 0 solution (or success), 1 no solution (or no match),
//! 2 usage, parse or I/O error, 3 validation failure.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fdtrace::bench::{bench, BenchMode};
use fdtrace::program::{gen_queens, parse_program, Program, Strategy};
use fdtrace::query::{parse_attr_list, AttrName, EventSource, Filter, QuerySession};
use fdtrace::trace::{
    parse_port_list, parse_trace, render_canonical, Attr, AttrSet, EmissionConfig, ParsedTrace, PortSet, TraceFormat,
    WriterSink,
};
use fdtrace::validate::{align, replay_check, NameMap};
use fdtrace::viz::{sample, write_csv, write_scene};
use fdtrace::{EngineKind, Outcome};

const SOLVED: u8 = 0;
const NONE: u8 = 1;
const INVALID: u8 = 3;

#[derive(Parser)]
#[command(name = "fdtrace", version, about = "Traced finite-domain constraint solving")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file, optionally writing its trace.
    Run(RunArgs),
    /// Search a stored trace, or a live run given after `--`.
    Query(QueryArgs),
    /// Check every event of a canonical trace against the transition rules.
    Check { trace: PathBuf },
    /// Compare a reference-engine trace with a fast-engine trace.
    Diff {
        reference: PathBuf,
        fast: PathBuf,
        /// Constraint kind renamings, one `from = to` per line.
        #[arg(long)]
        name_map: Option<PathBuf>,
    },
    /// Export the variable-update view of a canonical trace.
    Viz {
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        scene: Option<PathBuf>,
    },
    /// Print an n-queens problem file.
    GenQueens {
        n: usize,
        #[arg(long, default_value = "firstFailMin")]
        strategy: Strategy,
    },
    /// Time a problem under several tracing modes.
    Bench {
        file: PathBuf,
        #[arg(long, default_value = "off,null-sink,full-file", value_delimiter = ',')]
        modes: Vec<BenchMode>,
        #[arg(long, default_value_t = 5)]
        repeat: usize,
        #[arg(long, default_value = "fast")]
        engine: EngineKind,
        #[arg(long)]
        strategy: Option<Strategy>,
    },
}

#[derive(Args)]
struct SolveArgs {
    file: PathBuf,
    #[arg(long, default_value = "fast")]
    engine: EngineKind,
    /// Overrides the problem's `label` directive.
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Ports to emit, comma separated (default: all).
    #[arg(long)]
    ports: Option<String>,
    /// Optional attributes to keep, comma separated (default: all).
    #[arg(long)]
    attrs: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    solve: SolveArgs,
    /// Trace destination; `-` is standard output.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value = "canonical")]
    format: TraceFormat,
}

#[derive(Args)]
struct QueryArgs {
    /// Canonical trace file.
    trace: Option<PathBuf>,
    /// Conjunction of conditions, e.g. `port=reduce,chrono>3`.
    #[arg(long, conflicts_with = "count_until")]
    filter: Option<String>,
    /// Attributes to print for each match instead of the whole event.
    #[arg(long, requires = "filter")]
    attrs: Option<String>,
    /// Stop after this many matches.
    #[arg(long)]
    limit: Option<usize>,
    /// `COUNT:STOP` port lists, e.g. `reject:solution`.
    #[arg(long)]
    count_until: Option<String>,
    /// Problem file and solve options of a live run.
    #[arg(last = true)]
    live: Vec<String>,
}

#[derive(Parser)]
#[command(name = "live", no_binary_name = true)]
struct LiveArgs {
    #[command(flatten)]
    solve: SolveArgs,
}

fn load_program(path: &Path) -> Result<Program> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_program(&text).with_context(|| format!("{}", path.display()))
}

fn load_trace(path: &Path) -> Result<ParsedTrace> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_trace(&text).with_context(|| format!("{}", path.display()))
}

fn emission(args: &SolveArgs) -> Result<EmissionConfig> {
    let ports = match &args.ports {
        Some(list) => parse_port_list(list).map_err(anyhow::Error::msg)?,
        None => PortSet::ALL,
    };
    let mut config = EmissionConfig::with_ports(ports);
    if let Some(list) = &args.attrs {
        let attrs = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .try_fold(AttrSet::NONE, |acc, a| Ok::<_, String>(acc.with(a.parse::<Attr>()?)))
            .map_err(anyhow::Error::msg)?;
        config.set_all_attrs(attrs);
    }
    Ok(config)
}

fn summary(outcome: &Outcome) -> (String, u8) {
    match outcome {
        Outcome::Solution(b) => {
            let parts: Vec<String> = b.iter().map(|(v, x)| format!("{v}={x}")).collect();
            (format!("solution {}", parts.join(" ")), SOLVED)
        }
        Outcome::Exhausted => ("exhausted".into(), NONE),
    }
}

fn run(args: RunArgs) -> Result<u8> {
    let program = load_program(&args.solve.file)?;
    let strategy = args.solve.strategy.unwrap_or_else(|| program.strategy_or_default());
    let config = emission(&args.solve)?;
    let engine = args.solve.engine;
    let (result, to_stdout) = match &args.trace {
        None => (engine.solve(&program, strategy, EmissionConfig::off(), &mut fdtrace::trace::NullSink)?, false),
        Some(p) if p.as_os_str() == "-" => {
            let mut sink = WriterSink::new(BufWriter::new(io::stdout().lock()), args.format);
            (engine.solve(&program, strategy, config, &mut sink)?, true)
        }
        Some(p) => {
            let file = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            let mut sink = WriterSink::new(BufWriter::new(file), args.format);
            (engine.solve(&program, strategy, config, &mut sink)?, false)
        }
    };
    let (line, code) = summary(&result.outcome);
    if to_stdout {
        eprintln!("{line}");
    } else {
        println!("{line}");
    }
    Ok(code)
}

fn print_matches<S: EventSource>(
    s: &mut QuerySession<S>,
    filter: &Filter,
    attrs: &[AttrName],
    limit: usize,
) -> Result<u8> {
    let mut out = io::stdout().lock();
    let mut n = 0;
    while n < limit {
        let Some(e) = s.fget(filter)? else { break };
        n += 1;
        if attrs.is_empty() {
            writeln!(out, "{}", render_canonical(e))?;
        } else {
            let values = s.get_attr(attrs)?;
            let parts: Vec<String> = attrs.iter().zip(values).map(|(a, v)| format!("{}={v}", a.name())).collect();
            writeln!(out, "{}", parts.join(" "))?;
        }
    }
    Ok(if n > 0 { SOLVED } else { NONE })
}

fn count_until<S: EventSource>(s: &mut QuerySession<S>, spec: &str) -> Result<u8> {
    let (count, stop) = spec.split_once(':').context("--count-until expects COUNT:STOP")?;
    let count = parse_port_list(count).map_err(anyhow::Error::msg)?;
    let stop = parse_port_list(stop).map_err(anyhow::Error::msg)?;
    if count.intersects(stop) {
        bail!("--count-until: a port cannot both count and stop");
    }
    let (n, end) = s.count_until(count, stop)?;
    println!("count {n}");
    match end {
        Some(e) => {
            println!("{}", render_canonical(&e));
            Ok(SOLVED)
        }
        None => {
            println!("end-of-trace");
            Ok(NONE)
        }
    }
}

fn query_with<S: EventSource>(mut s: QuerySession<S>, args: &QueryArgs) -> Result<u8> {
    if let Some(spec) = &args.count_until {
        return count_until(&mut s, spec);
    }
    let filter: Filter = args.filter.as_deref().unwrap_or("").parse()?;
    let attrs = match &args.attrs {
        Some(list) => parse_attr_list(list)?,
        None => Vec::new(),
    };
    print_matches(&mut s, &filter, &attrs, args.limit.unwrap_or(usize::MAX))
}

fn query(args: QueryArgs) -> Result<u8> {
    match (&args.trace, args.live.is_empty()) {
        (Some(path), true) => {
            let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
            query_with(QuerySession::stored(BufReader::new(file)), &args)
        }
        (None, false) => {
            let live = LiveArgs::try_parse_from(&args.live)?;
            let program = load_program(&live.solve.file)?;
            let strategy = live.solve.strategy.unwrap_or_else(|| program.strategy_or_default());
            let config = emission(&live.solve)?;
            query_with(QuerySession::live(live.solve.engine, program, strategy, config), &args)
        }
        _ => bail!("query needs either a trace file or `-- <problem file> [options]`"),
    }
}

fn check(path: &Path) -> Result<u8> {
    let trace = load_trace(path)?;
    let violations = replay_check(&trace);
    for v in &violations {
        println!("{v}");
    }
    if violations.is_empty() {
        println!("ok: {} events", trace.events.len());
        Ok(SOLVED)
    } else {
        Ok(INVALID)
    }
}

fn diff(reference: &Path, fast: &Path, name_map: Option<&Path>) -> Result<u8> {
    let names = match name_map {
        Some(p) => NameMap::parse(&fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?)
            .map_err(anyhow::Error::msg)
            .with_context(|| format!("{}", p.display()))?,
        None => NameMap::default(),
    };
    let report = align(&load_trace(reference)?, &load_trace(fast)?, &names);
    println!("{}", report.verdict);
    for (r, f) in &report.var_map {
        println!("var {r} = {f}");
    }
    for (r, fs) in &report.con_map {
        let fs: Vec<String> = fs.iter().map(|c| c.to_string()).collect();
        println!("con {r} = {}", fs.join(","));
    }
    for (r, f) in &report.cp_map {
        println!("choice {r} = {f}");
    }
    for c in &report.unmapped_fast {
        println!("unmapped {c}");
    }
    Ok(if report.is_equivalent() { SOLVED } else { INVALID })
}

fn viz(trace: &Path, out: &Path, scene: Option<&Path>) -> Result<u8> {
    let t = load_trace(trace)?;
    let violations = replay_check(&t);
    if let Some(v) = violations.first() {
        eprintln!("{v}");
        eprintln!("{}: trace does not pass the replay check", trace.display());
        return Ok(INVALID);
    }
    let rows = sample(&t.events);
    let create =
        |p: &Path| File::create(p).map(BufWriter::new).with_context(|| format!("cannot create {}", p.display()));
    write_csv(&rows, create(out)?)?;
    if let Some(p) = scene {
        write_scene(&rows, create(p)?)?;
    }
    Ok(SOLVED)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Query(args) => query(args),
        Command::Check { trace } => check(&trace),
        Command::Diff { reference, fast, name_map } => diff(&reference, &fast, name_map.as_deref()),
        Command::Viz { trace, out, scene } => viz(&trace, &out, scene.as_deref()),
        Command::GenQueens { n, strategy } => gen_queens(n, strategy).map_err(anyhow::Error::msg).map(|text| {
            print!("{text}");
            SOLVED
        }),
        Command::Bench { file, modes, repeat, engine, strategy } => load_program(&file).and_then(|p| {
            let strategy = strategy.unwrap_or_else(|| p.strategy_or_default());
            let path = std::env::temp_dir().join(format!("fdtrace-bench-{}.trace", std::process::id()));
            let lines = bench(engine, &p, strategy, &modes, repeat, &path);
            let _ = fs::remove_file(&path);
            for l in lines? {
                println!("{l}");
            }
            Ok(SOLVED)
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
