use std::fs;
use std::io::{self, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use rainbow_core::matching::MatchingJson;
use rainbow_core::multigraph::{parse_rational, InstanceParams};
use rainbow_core::oracle::CapExceeded;
use rainbow_core::reachability::counting_diagnostics;
use rainbow_core::{
    analyse, cyclic_square, generate_random, greedy, latin_to_graph, max_partial_transversal,
    max_rainbow_matching, solve, verify, ColouredMultigraph, LatinSquare, Limits, RandomParams,
    Seed, SolveOptions, SwitchOptions,
};

#[derive(Parser, Debug)]
#[command(name = "rainbow", version, about = "Large rainbow matchings in edge-coloured multigraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a random or Latin-square instance to stdout
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Grow a rainbow matching by switching
    Solve(SolveArgs),
    /// Check a matching against an instance
    Verify(VerifyArgs),
    /// Exact maximum by branch and bound
    Oracle(OracleArgs),
    /// Reachability hierarchy and counting quantities as JSON
    Stats(StatsArgs),
    /// Seed sweep of generate, solve and (small instances) oracle, as CSV
    Bench(BenchArgs),
}

#[derive(Subcommand, Debug)]
enum GenerateKind {
    /// Each colour class a random partial matching of fixed size
    Random {
        #[arg(long)]
        colours: usize,
        /// Edges per colour class [default: ceil(1.5 * colours)]
        #[arg(long)]
        colour_count: Option<usize>,
        /// Largest number of parallel edges between two vertices
        #[arg(long, default_value_t = 1)]
        cap: usize,
        /// [default: 2 * colour-count + 2]
        #[arg(long)]
        vertices: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rows-columns-symbols graph of a Latin square
    Latin {
        /// The cyclic square of this order
        #[arg(long, conflicts_with = "input", required_unless_present = "input")]
        cyclic: Option<usize>,
        /// A Latin square file ("n", then n rows)
        #[arg(long)]
        input: Option<PathBuf>,
        /// Print the square itself instead of its graph
        #[arg(long)]
        square: bool,
    },
}

#[derive(Args, Debug)]
struct ParamArgs {
    #[arg(long, default_value = "1/2", value_parser = rational)]
    epsilon: num_rational::Rational64,
    /// [default: epsilon / 12]
    #[arg(long, value_parser = rational)]
    alpha: Option<num_rational::Rational64>,
}

impl ParamArgs {
    fn params(&self, graph: &ColouredMultigraph) -> InstanceParams {
        let mut params = InstanceParams::for_colours(graph.num_colours(), self.epsilon);
        if let Some(alpha) = self.alpha {
            params = params.with_alpha(alpha);
        }
        if let Some(warning) = params.alpha_warning() {
            log::warn!("{warning}");
        }
        params
    }
}

fn rational(text: &str) -> Result<num_rational::Rational64, String> {
    parse_rational(text)
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 0)]
    target_deficit: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    max_budget: usize,
    #[arg(long, default_value_t = 10_000)]
    max_iterations: usize,
    /// Pick among surviving configurations at random, seeded by this value
    #[arg(long)]
    shuffle: Option<u64>,
    #[arg(long)]
    json: bool,
    /// Add wall-clock time to the output (JSON is then not reproducible)
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    /// Matching JSON, or a solve report containing one
    #[arg(long)]
    matching: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long)]
    input: PathBuf,
    /// Input is a Latin square; search partial transversals
    #[arg(long)]
    latin: bool,
    #[arg(long, default_value_t = 100_000_000)]
    max_nodes: u64,
    /// Seconds
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    /// Matching JSON to analyse [default: greedy matching for --seed]
    #[arg(long)]
    matching: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Inclusive seed range, "0..99" (or "0..=99") for seeds 0 to 99
    #[arg(long, default_value = "0..99", value_parser = seed_range)]
    seeds: Range<u64>,
    #[arg(long, default_value_t = 8)]
    colours: usize,
    /// [default: ceil(1.5 * colours)]
    #[arg(long)]
    colour_count: Option<usize>,
    #[arg(long, default_value_t = 1)]
    cap: usize,
    /// [default: 2 * colour-count + 2]
    #[arg(long)]
    vertices: Option<usize>,
    #[command(flatten)]
    params: ParamArgs,
    /// Run the oracle on instances with at most this many edges
    #[arg(long, default_value_t = 120)]
    oracle_max_edges: usize,
    #[arg(long, default_value_t = 2_000_000)]
    oracle_max_nodes: u64,
    /// Leave the ms column empty so output is reproducible
    #[arg(long)]
    no_timing: bool,
}

fn seed_range(text: &str) -> Result<Range<u64>, String> {
    let parse = |s: &str| u64::from_str(s.trim()).map_err(|e| format!("bad seed {s:?}: {e}"));
    let (first, last) = match text.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let s = parse(text)?;
            (s, s)
        }
    };
    if last < first {
        return Err(format!("empty seed range {text:?}"));
    }
    Ok(first..last.checked_add(1).ok_or("range end too large")?)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_graph(path: &Path) -> Result<ColouredMultigraph> {
    ColouredMultigraph::load_str(&read(path)?).with_context(|| format!("loading {}", path.display()))
}

fn load_matching_json(path: &Path) -> Result<MatchingJson> {
    let value: serde_json::Value =
        serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let inner = match value.get("matching") {
        Some(m) => m.clone(),
        None => value,
    };
    serde_json::from_value(inner).with_context(|| format!("{} is not a matching", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn default_colour_count(colours: usize) -> usize {
    (3 * colours).div_ceil(2)
}

fn random_params(colours: usize, colour_count: Option<usize>, cap: usize, vertices: Option<usize>) -> RandomParams {
    let colour_count = colour_count.unwrap_or_else(|| default_colour_count(colours));
    RandomParams {
        num_colours: colours,
        colour_count,
        multiplicity_cap: cap,
        vertex_budget: vertices.unwrap_or(2 * colour_count + 2),
    }
}

fn generate(kind: GenerateKind) -> Result<u8> {
    let text = match kind {
        GenerateKind::Random {
            colours,
            colour_count,
            cap,
            vertices,
            seed,
        } => {
            let params = random_params(colours, colour_count, cap, vertices);
            generate_random(&params, Seed(seed))?.to_text()
        }
        GenerateKind::Latin {
            cyclic,
            input,
            square,
        } => {
            let sq = match (cyclic, input) {
                (Some(n), _) => cyclic_square(n),
                (None, Some(path)) => LatinSquare::parse(&read(&path)?)?,
                (None, None) => bail!("give --cyclic N or --input FILE"),
            };
            if square {
                sq.to_string()
            } else {
                latin_to_graph(&sq).to_text()
            }
        }
    };
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        writeln!(out)?;
    }
    Ok(0)
}

fn run_solve(args: SolveArgs) -> Result<u8> {
    let graph = load_graph(&args.input)?;
    let params = args.params.params(&graph);
    let options = SolveOptions {
        target_deficit: args.target_deficit,
        seed: Seed(args.seed),
        max_iterations: args.max_iterations,
        switch: SwitchOptions {
            max_budget: args.max_budget,
            shuffle: args.shuffle.map(Seed),
            ..SwitchOptions::default()
        },
    };
    let report = solve(&graph, &params, &options);
    log::info!(
        "{:?}: {} -> {} of {} colours in {} rounds",
        report.status,
        report.initial_size,
        report.size,
        graph.num_colours(),
        report.iterations.len()
    );
    if args.json {
        let mut value = serde_json::to_value(&report)?;
        if args.timing {
            value["wall_ms"] = json!(report.wall_time.as_secs_f64() * 1e3);
        }
        print_json(&value)?;
    } else {
        let mut out = io::stdout().lock();
        let status = serde_json::to_value(report.status)?;
        writeln!(out, "status: {}", status.as_str().unwrap_or("?"))?;
        writeln!(out, "size: {} (target {}, greedy start {})", report.size, report.target, report.initial_size)?;
        writeln!(out, "rounds: {}", report.iterations.len())?;
        writeln!(out, "switches: {}", report.switches)?;
        if let Some(r) = &report.stall_rejections {
            writeln!(out, "stall rejections: {}", serde_json::to_string(r)?)?;
        }
        if args.timing {
            writeln!(out, "time: {:.3} ms", report.wall_time.as_secs_f64() * 1e3)?;
        }
        writeln!(out, "{}", serde_json::to_string(&report.matching)?)?;
    }
    Ok(report.status.exit_code() as u8)
}

fn run_verify(args: VerifyArgs) -> Result<u8> {
    let graph = load_graph(&args.input)?;
    let wire = load_matching_json(&args.matching)?;
    let (matching, mut report) = wire.to_matching(&graph);
    for issue in verify(&graph, &matching).violations {
        report.push(issue);
    }
    let valid = report.is_empty();
    if args.json {
        print_json(&json!({
            "valid": valid,
            "size": matching.len(),
            "violations": report.violations,
        }))?;
    } else if valid {
        println!("valid rainbow matching of size {}", matching.len());
    } else {
        for issue in &report.violations {
            println!("violation: {issue}");
        }
    }
    Ok(if valid { 0 } else { 2 })
}

fn run_oracle(args: OracleArgs) -> Result<u8> {
    if !(args.time_limit >= 0.0 && args.time_limit.is_finite()) {
        bail!("--time-limit must be a non-negative number of seconds");
    }
    let limits = Limits {
        max_nodes: args.max_nodes,
        time_limit: Duration::from_secs_f64(args.time_limit),
    };
    let text = read(&args.input)?;
    let result = if args.latin {
        let square = LatinSquare::parse(&text)?;
        max_partial_transversal(&square, limits)
    } else {
        let graph = ColouredMultigraph::load_str(&text)?;
        max_rainbow_matching(&graph, limits)
    };
    let (optimum, witness, nodes, exact) = match &result {
        Ok(r) => (r.optimum, &r.witness, r.nodes_explored, true),
        Err(CapExceeded {
            best,
            best_witness,
            nodes_explored,
        }) => (*best, best_witness, *nodes_explored, false),
    };
    if args.json {
        print_json(&json!({
            "exact": exact,
            "optimum": exact.then_some(optimum),
            "best": optimum,
            "witness": witness,
            "nodes_explored": nodes,
        }))?;
    } else if exact {
        println!("optimum: {optimum}");
        println!("nodes: {nodes}");
    } else {
        println!("cap exceeded after {nodes} nodes; best found {optimum}");
    }
    Ok(if exact { 0 } else { 3 })
}

fn run_stats(args: StatsArgs) -> Result<u8> {
    let graph = load_graph(&args.input)?;
    let params = args.params.params(&graph);
    let matching = match &args.matching {
        Some(path) => {
            let (m, mut report) = load_matching_json(path)?.to_matching(&graph);
            for issue in verify(&graph, &m).violations {
                report.push(issue);
            }
            if !report.is_empty() {
                bail!("{} is not a rainbow matching: {report}", path.display());
            }
            m
        }
        None => greedy(&graph, Seed(args.seed)),
    };
    let value = match analyse(&graph, &matching, &params) {
        Ok(analysis) => {
            let h = &analysis.hierarchy;
            let levels: Vec<_> = h
                .levels
                .iter()
                .map(|l| {
                    let mut colours = l.colours();
                    colours.sort_unstable();
                    json!({"i": l.index, "size": l.len(), "colours": colours})
                })
                .collect();
            json!({
                "matching_size": matching.len(),
                "levels": levels,
                "m": h.m(),
                "stopped_size": h.stopped_set_size(),
                "F_size": analysis.flex.size(),
                "R_size": h.reach_colours().len(),
                "counting": counting_diagnostics(&graph, &matching, h, &params),
            })
        }
        Err(_) => json!({
            "matching_size": matching.len(),
            "levels": [],
            "m": 0,
            "stopped_size": 0,
            "F_size": 0,
            "R_size": 0,
            "counting": null,
        }),
    };
    print_json(&value)?;
    Ok(0)
}

struct BenchRow {
    seed: u64,
    n: usize,
    found: Option<usize>,
    optimum: Option<usize>,
    iterations: Option<usize>,
    switches: Option<usize>,
    ms: Option<f64>,
}

fn run_bench(args: BenchArgs) -> Result<u8> {
    let random = random_params(args.colours, args.colour_count, args.cap, args.vertices);
    random.check()?;
    let seeds: Vec<u64> = args.seeds.clone().collect();
    let rows: Vec<BenchRow> = seeds
        .par_iter()
        .map(|&seed| {
            let mut row = BenchRow {
                seed,
                n: args.colours,
                found: None,
                optimum: None,
                iterations: None,
                switches: None,
                ms: None,
            };
            let graph = match generate_random(&random, Seed(seed)) {
                Ok(g) => g,
                Err(e) => {
                    log::warn!("seed {seed}: {e}");
                    return row;
                }
            };
            let params = args.params.params(&graph);
            let started = Instant::now();
            let report = solve(
                &graph,
                &params,
                &SolveOptions {
                    seed: Seed(seed),
                    ..SolveOptions::default()
                },
            );
            row.ms = Some(started.elapsed().as_secs_f64() * 1e3);
            row.found = Some(report.size);
            row.iterations = Some(report.iterations.len());
            row.switches = Some(report.switches);
            if graph.num_edges() <= args.oracle_max_edges {
                match max_rainbow_matching(&graph, Limits::nodes(args.oracle_max_nodes)) {
                    Ok(r) => row.optimum = Some(r.optimum),
                    Err(e) => log::info!("seed {seed}: oracle {e}"),
                }
            }
            row
        })
        .collect();
    let mut out = io::stdout().lock();
    writeln!(out, "seed,n,found,optimum,iterations,switches,ms")?;
    let cell = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
    for row in rows {
        let ms = match (args.no_timing, row.ms) {
            (false, Some(ms)) => format!("{ms:.3}"),
            _ => String::new(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.seed,
            row.n,
            cell(row.found),
            cell(row.optimum),
            cell(row.iterations),
            cell(row.switches),
            ms
        )?;
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RAINBOW_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate { kind } => generate(kind),
        Command::Solve(args) => run_solve(args),
        Command::Verify(args) => run_verify(args),
        Command::Oracle(args) => run_oracle(args),
        Command::Stats(args) => run_stats(args),
        Command::Bench(args) => run_bench(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let broken_pipe = e
                .downcast_ref::<io::Error>()
                .is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe);
            if broken_pipe {
                return ExitCode::SUCCESS;
            }
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
