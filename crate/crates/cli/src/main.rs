use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use itspack_cli::{
    corpus_files, format_table, load_instance, parse_targets, parse_time_limit, run_bench, write_csv,
    BenchOptions, ContainerKind, JsonTrace,
};
use itspack_core::driver::{finish_run, solve, Mode, SolverParams};
use itspack_core::finisher::ceil_decimals;
use itspack_core::io::{parse_solution, write_solution, Solution};
use itspack_core::model::{is_feasible, ContainerSpec, FeasibilityTolerance, Instance, Layout};
use itspack_core::svg::{render, SvgOptions};
use itspack_core::trace::{NoTrace, TraceSink};

/// Packs circles into a strip of fixed width (or a disc) while minimizing
/// the open dimension.
#[derive(Parser)]
#[command(name = "itspack", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance (the default).
    Run(RunArgs),
    /// Solve every instance of a directory and tabulate the results.
    Bench(BenchArgs),
    /// Draw a solution file as SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Instance file: `strip W` or `disc`, then one radius per line.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Override the container given in the file.
    #[arg(long)]
    container: Option<ContainerKind>,
    /// Override the strip width.
    #[arg(long)]
    width: Option<f64>,
    /// Open dimension to reach (strip length or disc radius).
    #[arg(long)]
    target_length: Option<f64>,
    /// Search budget, e.g. `90s`, `5m`, `30h`.
    #[arg(long, default_value = "60s", value_parser = parse_time_limit)]
    time_limit: std::time::Duration,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `its` or `multistart-ts`.
    #[arg(long, default_value = "its")]
    mode: Mode,
    /// Write an SVG drawing of the final layout.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Solution file; defaults to the instance path with extension `.sol`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write progress events as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of instance files.
    corpus: PathBuf,
    /// File of `name target` lines; missing targets use the density default.
    #[arg(long)]
    targets: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "its")]
    modes: Vec<Mode>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    #[arg(long, default_value = "60s", value_parser = parse_time_limit)]
    time_limit: std::time::Duration,
    /// Write the results as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Label circles with their rank by radius.
    #[arg(long)]
    labels: bool,
}

/// Input errors exit with 1; a run that ends without a certified feasible
/// layout exits with 2.
enum Outcome {
    Feasible,
    Abortive,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Some(Command::Run(args)) => run(&args),
        None => run(&cli.run),
        Some(Command::Bench(args)) => bench(&args).map(|()| Outcome::Feasible),
        Some(Command::Render(args)) => render_cmd(&args).map(|()| Outcome::Feasible),
    };
    match result {
        Ok(Outcome::Feasible) => ExitCode::SUCCESS,
        Ok(Outcome::Abortive) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dimension_name(inst: &Instance) -> &'static str {
    if inst.container().is_disc() {
        "R"
    } else {
        "L"
    }
}

fn write_artifacts(inst: &Instance, lay: &Layout, feasible: bool, out: &Path, svg: Option<&Path>) -> Result<()> {
    let sol = Solution::from_layout(inst, lay, feasible);
    fs::write(out, write_solution(&sol)).with_context(|| format!("cannot write {}", out.display()))?;
    if let Some(path) = svg {
        let drawing = render(inst, lay, &SvgOptions::default())?;
        fs::write(path, drawing).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn run(args: &RunArgs) -> Result<Outcome> {
    let Some(instance_path) = &args.instance else {
        bail!("--instance is required");
    };
    let inst = load_instance(instance_path, args.container, args.width)?;
    if let Some(t) = args.target_length {
        if !(t.is_finite() && t > 0.0) {
            bail!("--target-length must be positive");
        }
    }
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| instance_path.with_extension("sol"));
    let params = SolverParams {
        target_dimension: args.target_length,
        time_budget: args.time_limit,
        seed: args.seed,
        mode: args.mode,
        ..Default::default()
    };
    let mut file_trace;
    let mut no_trace = NoTrace;
    let sink: &mut dyn TraceSink = match &args.trace {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            file_trace = JsonTrace::new(BufWriter::new(f));
            &mut file_trace
        }
        None => &mut no_trace,
    };

    let name = instance_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let width = match inst.container() {
        ContainerSpec::Strip { width } => format!("W={width}"),
        ContainerSpec::Disc => "disc".to_string(),
    };

    let run = solve(&inst, &params, sink)?;
    match finish_run(&inst, &params, &run, sink) {
        Ok(finished) => {
            write_artifacts(&inst, &finished.layout, true, &out, args.svg.as_deref())?;
            println!(
                "{name} n={} {width} {}={:.4} feasible=1 seed={} mode={} ts_launches={} perturbations={} restarts={} elapsed={:.2}s",
                inst.len(),
                dimension_name(&inst),
                finished.dimension,
                args.seed,
                args.mode.as_str(),
                run.ts_launch_count,
                run.perturbation_count,
                run.restart_count,
                run.elapsed.as_secs_f64(),
            );
            Ok(Outcome::Feasible)
        }
        Err(e) => {
            // fall back to the raw search result, flagged as it validates
            let lay = &run
                .best_layout
                .with_dimension(ceil_decimals(run.best_layout.dimension, 4));
            let feasible = is_feasible(&inst, lay, FeasibilityTolerance::STRICT);
            write_artifacts(&inst, lay, feasible, &out, args.svg.as_deref())?;
            eprintln!("warning: post-processing failed: {e}");
            println!(
                "{name} n={} {width} {}={:.4} feasible={} seed={} mode={} ts_launches={} perturbations={} restarts={} elapsed={:.2}s",
                inst.len(),
                dimension_name(&inst),
                lay.dimension,
                u8::from(feasible),
                args.seed,
                args.mode.as_str(),
                run.ts_launch_count,
                run.perturbation_count,
                run.restart_count,
                run.elapsed.as_secs_f64(),
            );
            Ok(if feasible { Outcome::Feasible } else { Outcome::Abortive })
        }
    }
}

fn bench(args: &BenchArgs) -> Result<()> {
    let targets = match &args.targets {
        Some(p) => parse_targets(&fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?)?,
        None => Vec::new(),
    };
    let mut files = corpus_files(&args.corpus)?;
    if let Some(t) = &args.targets {
        files.retain(|f| f != t);
    }
    let opts = BenchOptions {
        modes: args.modes.clone(),
        seeds: args.seeds.clone(),
        time_budget: args.time_limit,
        targets,
    };
    let rows = run_bench(&files, &opts);
    print!("{}", format_table(&rows));
    if let Some(path) = &args.csv {
        let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        write_csv(&rows, BufWriter::new(f))?;
    }
    Ok(())
}

fn render_cmd(args: &RenderArgs) -> Result<()> {
    let inst = load_instance(&args.instance, None, None)?;
    let text = fs::read_to_string(&args.solution)
        .with_context(|| format!("cannot read {}", args.solution.display()))?;
    let sol = parse_solution(&text).with_context(|| format!("{}", args.solution.display()))?;
    let lay = sol.to_layout(&inst)?;
    let svg = render(
        &inst,
        &lay,
        &SvgOptions {
            labels: args.labels,
            ..Default::default()
        },
    )?;
    fs::write(&args.out, svg).with_context(|| format!("cannot write {}", args.out.display()))?;
    Ok(())
}
