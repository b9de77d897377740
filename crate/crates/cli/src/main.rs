use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use jigsaw_core::bench::{
    run_center_comparison, run_grid, run_theta_sweep, BenchConfig, GridMetric,
};
use jigsaw_core::counting::{edge_count, node_count, reassembly_lower_bound, GraphSizeQuery};
use jigsaw_core::fragmenter::{
    fragment_image, load_fragment_pixels, load_image, FragmentationSpec,
};
use jigsaw_core::matrix::load_prediction_matrix_with_report;
use jigsaw_core::metrics::{evaluate, EvalOptions, PixelNorm, DEFAULT_TAU};
use jigsaw_core::synth::{synthesize, synthesize_hypotheses, Confusion, ScorerModel};
use jigsaw_core::{
    build_graph, solve, solve_unknown_center, Assignment, BuildOptions, CutPolicy, Execution,
    PredictionMatrix,
};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "jigsaw",
    version,
    about = "Reassemble eroded 3x3 jigsaw puzzles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print graph sizes and the reassembly lower bound.
    Count(CountArgs),
    /// Solve a prediction matrix, or every center hypothesis in a directory.
    Solve(SolveArgs),
    /// Score a solution against ground truth.
    Eval(EvalArgs),
    /// Cut a puzzle instance out of an image.
    Fragment(FragmentArgs),
    /// Emit a synthetic prediction matrix for a ground truth.
    Synth(SynthArgs),
    /// Run an experiment from a JSON config.
    Bench(BenchArgs),
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    fragments: u32,
    #[arg(long)]
    positions: u32,
    /// Allow outsiders when bounding the number of reassemblies.
    #[arg(long)]
    outsiders: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, required_unless_present = "unknown_center")]
    matrix: Option<PathBuf>,
    /// Directory of matrices, one per center hypothesis.
    #[arg(long, value_name = "DIR")]
    unknown_center: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    theta: f64,
    #[arg(long)]
    no_outsiders: bool,
    #[arg(long)]
    no_reorder: bool,
    /// Weight charged per unfilled slot.
    #[arg(long, default_value_t = 0.0)]
    empty_weight: f64,
    #[arg(long)]
    node_budget: Option<u64>,
    /// Write the edge list as JSON lines.
    #[arg(long, value_name = "FILE")]
    dump_graph: Option<PathBuf>,
    /// Include wall-clock times in the output.
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    sequential: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    MeanAbsolute,
    Rms,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    solution: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Directory holding frag_<id>.png, enabling the almost-perfect test.
    #[arg(long, value_name = "DIR")]
    fragments: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    #[arg(long, value_enum, default_value = "mean-absolute")]
    norm: NormArg,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FragmentArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    missing: usize,
    #[arg(long, default_value_t = 0)]
    outsiders: usize,
    /// Image to draw outsiders from; repeat for several.
    #[arg(long = "outsider-src", value_name = "IMAGE")]
    outsider_src: Vec<PathBuf>,
    /// Allow several outsiders from one source image.
    #[arg(long)]
    multiple_per_source: bool,
    #[arg(long, default_value_t = 96)]
    fragment_size: u32,
    #[arg(long, default_value_t = 48)]
    margin: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConfusionArg {
    Dirichlet,
    Neighbor,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    accuracy: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "dirichlet")]
    confusion: ConfusionArg,
    #[arg(long, default_value_t = 1.0)]
    concentration: f64,
    /// Also write one matrix per center hypothesis into this directory.
    #[arg(long, value_name = "DIR")]
    all_centers: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Grid,
    Theta,
    Center,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(value_enum)]
    experiment: Experiment,
    /// Missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write perfect.csv, almost_perfect.csv and well_placed.csv here (grid only).
    #[arg(long, value_name = "DIR")]
    csv: Option<PathBuf>,
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    sequential: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, format!("{text}\n"))
            .with_context(|| format!("writing {}", path.display())),
        None => match writeln!(io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        },
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_matrix(path: &Path) -> Result<PredictionMatrix> {
    let (matrix, report) = load_prediction_matrix_with_report(&read(path)?)
        .with_context(|| format!("loading {}", path.display()))?;
    if !report.renormalized.is_empty() {
        eprintln!(
            "warning: {}: renormalized rows {:?}",
            path.display(),
            report.renormalized
        );
    }
    Ok(matrix)
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn count(args: CountArgs) -> Result<()> {
    let q = GraphSizeQuery::new(args.fragments, args.positions)?;
    let bound = match reassembly_lower_bound(args.fragments, args.positions, args.outsiders) {
        Ok(b) => json!(b),
        Err(_) => serde_json::Value::Null,
    };
    let report = json!({
        "fragments": args.fragments,
        "positions": args.positions,
        "N": node_count(q)?,
        "E": edge_count(q)?,
        "lower_bound": bound,
    });
    emit(None, &serde_json::to_string_pretty(&report)?)
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "json"));
    files.sort();
    Ok(files)
}

fn solve_cmd(args: SolveArgs) -> Result<()> {
    let mut options = BuildOptions::default().with_outsiders(!args.no_outsiders);
    options.empty_weight = args.empty_weight;
    if let Some(budget) = args.node_budget {
        options.node_budget = budget;
    }
    let policy = CutPolicy::new(args.theta, !args.no_reorder)?;

    let mut matrices = Vec::new();
    if let Some(path) = &args.matrix {
        matrices.push(load_matrix(path)?);
    }
    if let Some(dir) = &args.unknown_center {
        for path in json_files(dir)? {
            matrices.push(load_matrix(&path)?);
        }
    }

    let solution = if args.unknown_center.is_some() {
        if args.dump_graph.is_some() {
            bail!("--dump-graph needs a single matrix");
        }
        solve_unknown_center(&matrices, &options, &policy, execution(args.sequential))?
    } else {
        let graph = build_graph(&matrices[0], &options, &policy)?;
        if let Some(path) = &args.dump_graph {
            let file =
                fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut out = BufWriter::new(file);
            graph.write_edge_dump(&mut out)?;
            out.flush()?;
        }
        solve(&graph)?
    };
    let solution = if args.timings {
        solution
    } else {
        solution.without_timings()
    };
    emit(args.output.as_deref(), &solution.to_json())
}

fn eval(args: EvalArgs) -> Result<()> {
    let predicted =
        Assignment::from_json(&read(&args.solution)?).context("parsing the solution")?;
    let truth = Assignment::from_json(&read(&args.truth)?).context("parsing the truth")?;
    let pixels = match &args.fragments {
        Some(dir) => Some(load_fragment_pixels(dir, truth.fragments())?),
        None => None,
    };
    let options = EvalOptions {
        tau: args.tau,
        norm: match args.norm {
            NormArg::MeanAbsolute => PixelNorm::MeanAbsolute,
            NormArg::Rms => PixelNorm::RootMeanSquare,
        },
    };
    let report = evaluate(&predicted, &truth, pixels.as_ref(), options)?;
    emit(
        args.output.as_deref(),
        &serde_json::to_string_pretty(&report)?,
    )
}

fn fragment(args: FragmentArgs) -> Result<()> {
    let image =
        load_image(&args.image).with_context(|| format!("opening {}", args.image.display()))?;
    let sources = args
        .outsider_src
        .iter()
        .map(|p| load_image(p).with_context(|| format!("opening {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let spec = FragmentationSpec {
        fragment_size: args.fragment_size,
        margin: args.margin,
        seed: args.seed,
        n_missing: args.missing,
        n_outsiders: args.outsiders,
        multiple_per_source: args.multiple_per_source,
    };
    fragment_image(&image, &spec, &sources)?.write(&args.out)?;
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let truth = Assignment::from_json(&read(&args.truth)?).context("parsing the truth")?;
    let confusion = match args.confusion {
        ConfusionArg::Dirichlet => Confusion::Dirichlet {
            concentration: args.concentration,
        },
        ConfusionArg::Neighbor => Confusion::ConfusableNeighbor {
            concentration: args.concentration,
        },
    };
    let model = ScorerModel::new(args.accuracy, confusion, args.seed)?;
    if let Some(dir) = &args.all_centers {
        fs::create_dir_all(dir)?;
        for matrix in synthesize_hypotheses(&truth, &model)? {
            fs::write(
                dir.join(format!("center_{}.json", matrix.center)),
                matrix.to_json(),
            )?;
        }
    }
    emit(
        args.output.as_deref(),
        &synthesize(&truth, &model)?.to_json(),
    )
}

fn bench(args: BenchArgs) -> Result<()> {
    let mut config: BenchConfig = match &args.config {
        Some(path) => serde_json::from_str(&read(path)?)
            .with_context(|| format!("parsing {}", path.display()))?,
        None => BenchConfig::default(),
    };
    config.timings |= args.timings;
    if args.sequential {
        config.execution = Execution::Sequential;
    }
    let text = match args.experiment {
        Experiment::Grid => {
            let report = run_grid(&config)?;
            if let Some(dir) = &args.csv {
                fs::create_dir_all(dir)?;
                for (name, metric) in [
                    ("perfect", GridMetric::Perfect),
                    ("almost_perfect", GridMetric::AlmostPerfect),
                    ("well_placed", GridMetric::WellPlaced),
                ] {
                    fs::write(dir.join(format!("{name}.csv")), report.to_csv(metric))?;
                }
            }
            serde_json::to_string_pretty(&report)?
        }
        Experiment::Theta => serde_json::to_string_pretty(&run_theta_sweep(&config)?)?,
        Experiment::Center => serde_json::to_string_pretty(&run_center_comparison(&config)?)?,
    };
    if args.csv.is_some() && !matches!(args.experiment, Experiment::Grid) {
        eprintln!("warning: --csv only applies to the grid");
    }
    emit(args.output.as_deref(), &text)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Count(a) => count(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Fragment(a) => fragment(a),
        Command::Synth(a) => synth(a),
        Command::Bench(a) => bench(a),
    }
}
