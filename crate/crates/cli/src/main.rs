use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use reslab::config::{self, parse_range, Config, RandomGraph, SEED_VAR};
use reslab::config::{CompareConfig, EnsembleConfig, HermitianConfig, ResonancesConfig, ScanConfig};
use reslab::report::resonance_csv;
use reslab::{commands, format, svg, CliError};
use reslab_core::ensembles::{random_regular_graph, Fixture};
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(version, about = "Scattering resonances of open quantum graphs")]
struct Cli {
    /// Worker threads [default: available parallelism]
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a graph file and print its hypotheses report and strip bound
    Validate {
        graph: PathBuf,
    },
    /// Locate resonances in a rectangle of the lower half plane
    Resonances(ResonancesArgs),
    /// Compare open resonances with the spectrum of the lead-stripped graph
    Compare(CompareArgs),
    /// Count resonances below -delta for a list of deltas
    Scan(ScanArgs),
    /// Open/closed comparison over random regular graphs of growing size
    Ensemble(EnsembleArgs),
    /// Strip counts for damped random Hermitian matrices
    Hermitian(HermitianArgs),
    /// Write a named fixture graph
    Fixture {
        /// e.g. interval(1), neumann_path(3, 1), balanced_path(5, 1), commensurate_cycle(4, 2), triangle_lead
        name: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write a random regular graph, and optionally its manifest
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        degree: usize,
        #[arg(long, default_value = "1:2", value_parser = parse_range)]
        lengths: (f64, f64),
        #[arg(long, default_value_t = 0)]
        leads: usize,
        #[arg(long)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// JSON manifest with the generator parameters
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GraphArgs {
    /// Graph file
    graph: Option<PathBuf>,
    /// Named fixture instead of a file
    #[arg(long, conflicts_with = "graph")]
    fixture: Option<String>,
}

impl GraphArgs {
    fn apply(&self, map: &mut Map<String, Value>) {
        if let Some(path) = &self.graph {
            map.insert("graph".into(), json!({ "file": path }));
        } else if let Some(name) = &self.fixture {
            map.insert("graph".into(), json!({ "fixture": name }));
        }
    }
}

#[derive(Args)]
struct ReportArgs {
    /// JSON configuration; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file [default: stdout]
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct ResonancesArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Real range lo:hi
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    re: Option<(f64, f64)>,
    /// Imaginary range lo:hi
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    im: Option<(f64, f64)>,
    #[arg(long)]
    tol: Option<f64>,
    /// Permit rectangles around z = 0 (the origin is excised)
    #[arg(long)]
    allow_origin: bool,
    /// Quadrature budget per contour segment
    #[arg(long)]
    max_evaluations: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
    /// Also write a scatter plot
    #[arg(long)]
    svg: Option<PathBuf>,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Real window lo:hi
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    window: Option<(f64, f64)>,
    #[arg(long)]
    bin_width: Option<f64>,
    /// Depth kept on the open side [default: 2/L_min]
    #[arg(long)]
    cutoff: Option<f64>,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Real window a1:a2
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    window: Option<(f64, f64)>,
    /// Box depth a3
    #[arg(long)]
    depth: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long, value_parser = parse_range)]
    lengths: Option<(f64, f64)>,
    #[arg(long)]
    leads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    window: Option<(f64, f64)>,
    #[arg(long)]
    bin_width: Option<f64>,
    #[arg(long)]
    cutoff: Option<f64>,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct HermitianArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    damp_counts: Option<Vec<usize>>,
    #[arg(long)]
    damp_scale: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    window: Option<(f64, f64)>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    report: ReportArgs,
}

/// Loads the `--config` document (or an empty one), overlays the flags and
/// deserializes, then applies `RESLAB_SEED` and validates.
fn build<C: Config>(file: &Option<PathBuf>, overlay: impl FnOnce(&mut Map<String, Value>)) -> Result<C, CliError> {
    let mut map = match file {
        Some(path) => match serde_json::from_str::<Value>(&config::read_text(path)?) {
            Ok(Value::Object(map)) => map,
            Ok(_) => return Err(CliError::Input(format!("{}: expected a JSON object", path.display()))),
            Err(e) => return Err(CliError::Input(format!("{}: {e}", path.display()))),
        },
        None => Map::new(),
    };
    overlay(&mut map);
    let parsed = serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Input(format!("configuration: {e}")))?;
    let seed = std::env::var(SEED_VAR).ok();
    config::finish(parsed, seed.as_deref())
}

fn set<T: serde::Serialize>(map: &mut Map<String, Value>, key: &str, value: Option<T>) {
    if let Some(v) = value {
        map.insert(key.into(), json!(v));
    }
}

fn range(r: Option<(f64, f64)>) -> Option<[f64; 2]> {
    r.map(|(a, b)| [a, b])
}

fn write_out(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|source| CliError::Io {
                path: p.display().to_string(),
                source,
            })
            .map_err(anyhow::Error::from),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Io {
                    path: "stdout".into(),
                    source,
                })?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Input(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Validate { graph } => {
            let g = format::parse_graph(&config::read_text(&graph)?).map_err(CliError::from)?;
            write_out(None, &commands::validate_summary(&g))
        }
        Command::Resonances(args) => {
            let config: ResonancesConfig = build(&args.report.config, |m| {
                args.graph.apply(m);
                if let (Some(re), Some(im)) = (args.re, args.im) {
                    m.insert("rect".into(), json!([re.0, re.1, im.0, im.1]));
                }
                set(m, "tol", args.tol);
                set(m, "max_evaluations", args.max_evaluations);
                if args.allow_origin {
                    m.insert("allow_origin".into(), json!(true));
                }
                m.entry("tol").or_insert(json!(1e-10));
            })?;
            let run = commands::resonances(&config)?;
            let text = match args.format {
                OutputFormat::Csv => resonance_csv(&run.rows),
                OutputFormat::Json => run.report.to_json(),
            };
            write_out(args.report.output.as_deref(), &text)?;
            if let Some(path) = &args.svg {
                write_out(Some(path), &svg::scatter(&run.rows, run.strip_bound, config.rect))?;
            }
            Ok(())
        }
        Command::Compare(args) => {
            let config: CompareConfig = build(&args.report.config, |m| {
                args.graph.apply(m);
                set(m, "window", range(args.window));
                set(m, "bin_width", args.bin_width);
                set(m, "cutoff", args.cutoff);
            })?;
            write_out(args.report.output.as_deref(), &commands::compare(&config)?.to_json())
        }
        Command::Scan(args) => {
            let config: ScanConfig = build(&args.report.config, |m| {
                args.graph.apply(m);
                if let (Some((a1, a2)), Some(a3)) = (args.window, args.depth) {
                    m.insert("window".into(), json!([a1, a2, a3]));
                }
                set(m, "deltas", args.deltas);
            })?;
            write_out(args.report.output.as_deref(), &commands::scan(&config)?.to_json())
        }
        Command::Ensemble(args) => {
            let config: EnsembleConfig = build(&args.report.config, |m| {
                set(m, "n_list", args.n_list);
                set(m, "degree", args.degree);
                set(m, "length_range", range(args.lengths));
                set(m, "lead_count", args.leads);
                set(m, "seed", args.seed);
                set(m, "window", range(args.window));
                set(m, "bin_width", args.bin_width);
                set(m, "cutoff", args.cutoff);
            })?;
            write_out(args.report.output.as_deref(), &commands::ensemble(&config)?.to_json())
        }
        Command::Hermitian(args) => {
            let config: HermitianConfig = build(&args.report.config, |m| {
                set(m, "n", args.n);
                set(m, "damp_counts", args.damp_counts);
                set(m, "damp_scale", args.damp_scale);
                set(m, "deltas", args.deltas);
                set(m, "window", range(args.window));
                set(m, "seed", args.seed);
            })?;
            write_out(args.report.output.as_deref(), &commands::hermitian(&config)?.to_json())
        }
        Command::Fixture { name, output } => {
            let graph = name.parse::<Fixture>().map_err(CliError::from)?.build().map_err(CliError::from)?;
            write_out(output.as_deref(), &format::graph_to_json(&graph))
        }
        Command::Generate {
            n,
            degree,
            lengths,
            leads,
            seed,
            output,
            manifest,
        } => {
            let seed = match std::env::var(SEED_VAR) {
                Ok(text) => text
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Input(format!("{SEED_VAR} must be an unsigned integer, got {text:?}")))?,
                Err(_) => seed,
            };
            let spec = RandomGraph {
                n_vertices: n,
                degree,
                length_range: [lengths.0, lengths.1],
                lead_count: leads,
                seed,
            };
            let graph = random_regular_graph(&spec.spec()).map_err(CliError::from)?;
            write_out(output.as_deref(), &format::graph_to_json(&graph))?;
            if let Some(path) = manifest {
                let text = serde_json::to_string_pretty(&json!({ "random": spec }))? + "\n";
                write_out(Some(&path), &text)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.downcast_ref::<CliError>().map_or(2, CliError::exit_code);
            ExitCode::from(code)
        }
    }
}
