use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coverage_axis::cover::{CoverageMatrix, DilationMode};
use coverage_axis::io::{read_index_list, write_report};
use coverage_axis::pipeline::{self, CandidateMode, InputType, PartitionConfig, RunConfig, DEFAULT_N_EVAL};
use coverage_axis::solve::{Fixings, Solver};
use coverage_axis::{Error, Result};

/// Prints to stdout, ignoring a closed pipe.
macro_rules! say {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Parser, Debug)]
#[command(name = "coverage-axis", version, about = "Skeletons from a minimum cover of dilated inner balls")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full pipeline on a mesh or oriented point cloud.
    Run(RunArgs),
    /// Score a skeleton file against an input surface.
    Eval(EvalArgs),
    /// Solve a stored coverage instance without geometry.
    Solve(SolveArgs),
    /// Add seeded Gaussian noise to a mesh or point cloud.
    Perturb(PerturbArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TypeArg {
    Mesh,
    Cloud,
}

impl From<TypeArg> for InputType {
    fn from(t: TypeArg) -> Self {
        match t {
            TypeArg::Mesh => InputType::Mesh,
            TypeArg::Cloud => InputType::Cloud,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum CandidateArg {
    Voronoi,
    Random,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum DilateArg {
    Offset,
    Scale,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SolverArg {
    Greedy,
    Exact,
}

#[derive(Args, Debug)]
struct SolverFlags {
    #[arg(long, value_enum, default_value = "exact")]
    solver: SolverArg,
    /// Seconds allowed to the exact solver before it returns its incumbent.
    #[arg(long, default_value_t = 120.0, allow_negative_numbers = true)]
    time_limit: f64,
    /// Candidate indices that must be selected, one per line.
    #[arg(long)]
    force_in: Option<PathBuf>,
    /// Candidate indices that must not be selected, one per line.
    #[arg(long)]
    force_out: Option<PathBuf>,
}

impl SolverFlags {
    fn solver(&self) -> Result<Solver> {
        Ok(match self.solver {
            SolverArg::Greedy => Solver::Greedy,
            SolverArg::Exact => Solver::Exact {
                time_limit: pipeline::seconds(self.time_limit)?,
            },
        })
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    input: PathBuf,
    /// Detected from the file extension when omitted.
    #[arg(long = "type", value_enum)]
    input_type: Option<TypeArg>,
    /// Surface samples to cover.
    #[arg(long, default_value_t = 1500)]
    n_cover: usize,
    /// Surface samples for Voronoi candidates and the connection step.
    #[arg(long, default_value_t = 4000)]
    n_gen: usize,
    #[arg(long, value_enum, default_value = "voronoi")]
    candidates: CandidateArg,
    #[arg(long, default_value_t = 10_000)]
    n_random: usize,
    #[arg(long, value_enum, default_value = "offset")]
    dilate: DilateArg,
    #[arg(long, default_value_t = 0.02, allow_negative_numbers = true)]
    delta_r: f64,
    #[arg(long, default_value_t = 1.5, allow_negative_numbers = true)]
    sigma_r: f64,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Samples that need not be covered: indices, or boxes `xmin ymin zmin xmax ymax zmax`.
    #[arg(long)]
    ignore: Option<PathBuf>,
    /// Split the samples into this many k-means parts and solve each separately.
    #[arg(long)]
    partition_k: Option<usize>,
    /// Part label per cover sample, one per line.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Multiplier on the selected radii inside the connection triangulation.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    connect_boost: f64,
    /// Output prefix.
    #[arg(long)]
    out: PathBuf,
    /// Samples per side for the Hausdorff evaluation.
    #[arg(long, default_value_t = DEFAULT_N_EVAL)]
    n_eval: usize,
    /// Also write the coverage instance to `<out>.instance.txt`.
    #[arg(long)]
    dump_instance: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    skeleton: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "type", value_enum)]
    input_type: Option<TypeArg>,
    #[arg(long, default_value_t = DEFAULT_N_EVAL)]
    n_eval: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON result here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// `m n` header, then one line of covered rows per candidate.
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Debug)]
struct PerturbArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "type", value_enum)]
    input_type: Option<TypeArg>,
    /// Noise standard deviation as a fraction of the longest bbox extent.
    #[arg(long, default_value_t = 0.005, allow_negative_numbers = true)]
    amplitude: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn fixings(flags: &SolverFlags) -> Result<Fixings> {
    let read = |p: &Option<PathBuf>| -> Result<Vec<usize>> { p.as_deref().map(read_index_list).transpose().map(Option::unwrap_or_default) };
    Fixings::new(read(&flags.force_in)?, read(&flags.force_out)?)
}

fn run(a: RunArgs) -> Result<()> {
    let dilation = match a.dilate {
        DilateArg::Offset => DilationMode::Offset(a.delta_r),
        DilateArg::Scale => DilationMode::Scaling(a.sigma_r),
    };
    let partition = (a.partition_k.is_some() || a.labels.is_some()).then(|| PartitionConfig {
        k: a.partition_k,
        labels: a.labels.clone(),
    });
    let config = RunConfig {
        input: a.input,
        input_type: a.input_type.map(Into::into),
        n_cover: a.n_cover,
        n_gen: a.n_gen,
        candidates: match a.candidates {
            CandidateArg::Voronoi => CandidateMode::Voronoi,
            CandidateArg::Random => CandidateMode::Random,
        },
        n_random: a.n_random,
        dilation,
        solver: a.solver.solver()?,
        seed: a.seed,
        ignore: a.ignore,
        force_in: a.solver.force_in.clone(),
        force_out: a.solver.force_out.clone(),
        partition,
        connect_boost: a.connect_boost,
        out: a.out,
        n_eval: a.n_eval,
        dump_instance: a.dump_instance,
    };
    let out = pipeline::run(&config)?;
    let r = &out.report;
    say!(
        "selected {} of {} candidates ({} samples), solver {:?} optimal={}",
        r.counts.selected, r.counts.candidates, r.counts.surface_samples, r.solver.name, r.solver.optimal
    );
    say!(
        "eps1 {:.4}% eps2 {:.4}% eps {:.4}%",
        r.errors.errors.eps1, r.errors.errors.eps2, r.errors.errors.eps
    );
    for p in &r.outputs {
        say!("wrote {p}");
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let r = pipeline::run_eval(&a.skeleton, &a.input, a.input_type.map(Into::into), a.n_eval, a.seed)?;
    let e = r.errors.errors;
    say!("eps1 {:.4}% eps2 {:.4}% eps {:.4}%", e.eps1, e.eps2, e.eps);
    say!("{}", serde_json::to_string(&r).expect("report serializes"));
    if let Some(p) = &a.out {
        write_report(p, &r)?;
    }
    Ok(())
}

fn solve(a: SolveArgs) -> Result<()> {
    let m = CoverageMatrix::read_instance(&a.instance)?;
    let sel = a.solver.solver()?.solve(&m, &fixings(&a.solver)?)?;
    say!("objective {}", sel.objective);
    let chosen: Vec<String> = sel.chosen.iter().map(|i| i.to_string()).collect();
    say!("chosen {}", chosen.join(" "));
    say!("optimal {}", sel.optimal);
    Ok(())
}

fn perturb(a: PerturbArgs) -> Result<()> {
    pipeline::perturb(&a.input, a.input_type.map(Into::into), a.amplitude, a.seed, &a.out)?;
    say!("wrote {}", a.out.display());
    Ok(())
}

fn report_error(e: &Error, out: Option<&Path>) {
    let body = serde_json::json!({
        "error": e.category(),
        "message": e.to_string(),
        "report": out.map(|p| p.display().to_string()),
    });
    eprintln!("{body}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            report_error(&Error::InvalidParameter(e.kind().to_string()), None);
            return ExitCode::from(Error::InvalidParameter(String::new()).exit_code() as u8);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    let report = match &cli.command {
        Command::Run(a) => Some(pipeline::output_path(&a.out, ".report.json")),
        _ => None,
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Eval(a) => eval(a),
        Command::Solve(a) => solve(a),
        Command::Perturb(a) => perturb(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::debug!("{e:?}");
            report_error(&e, report.as_deref().filter(|p| p.exists()));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
