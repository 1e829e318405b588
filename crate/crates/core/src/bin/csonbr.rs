use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use csonbr::harness::{self, Algorithm, DatasetSource, ExperimentSpec, PeakExperiment};
use csonbr::peak::{PeakConfig, Sampling};
use csonbr::surrogate::Optimizer;
use csonbr::tabular::{Format, TargetColumn};

#[derive(Parser)]
#[command(name = "csonbr", version, about = "Naive Bayes regression on swarm-evolved surrogate data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment on one or more datasets.
    Run(RunArgs),
    /// Run the 2D peak problem and write contour grids.
    Peak(PeakArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Arff,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplingArg {
    /// Uniform over the disk area.
    Area,
    /// Uniform radius, as in the MLBench peak generator.
    Radius,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Nbr,
    Lr,
    CsoNbr,
    SpsoNbr,
}

#[derive(Args)]
struct RunArgs {
    /// Data files; repeat the flag for several datasets.
    #[arg(long = "data", required = true)]
    data: Vec<PathBuf>,
    /// Inferred from the file extension when omitted.
    #[arg(long)]
    format: Option<FormatArg>,
    /// Target column name or zero-based index (default: last column).
    #[arg(long)]
    target: Option<String>,
    #[arg(long, value_enum, default_value = "cso-nbr")]
    algo: AlgoArg,
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    phi: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "10")]
    n: Vec<usize>,
    #[arg(long)]
    swarm: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.66)]
    split: f64,
    #[arg(long)]
    no_shuffle: bool,
    #[arg(long)]
    fitness_subsample: Option<usize>,
    /// s = 50, t_max = 200, 3 repeats.
    #[arg(long)]
    quick: bool,
    /// SPSO with s = 50, t_max = 1000.
    #[arg(long, conflicts_with = "spso_half_iters")]
    spso_half_swarm: bool,
    /// SPSO with s = 100, t_max = 500.
    #[arg(long)]
    spso_half_iters: bool,
    /// Leave wall-clock timings out of the reports.
    #[arg(long)]
    no_timing: bool,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct PeakArgs {
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 100)]
    test_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "area")]
    sampling: SamplingArg,
    #[arg(long, default_value_t = 100)]
    swarm: usize,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long, default_value_t = 0.1)]
    phi: f64,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long)]
    quick: bool,
    #[arg(long, default_value = "peak")]
    out: PathBuf,
}

fn run(args: RunArgs) -> csonbr::Result<()> {
    let target = match args.target {
        None => TargetColumn::Last,
        Some(t) => TargetColumn::Name(t),
    };
    let datasets = args
        .data
        .iter()
        .map(|path| {
            let format = match args.format {
                Some(FormatArg::Csv) => Format::Csv,
                Some(FormatArg::Arff) => Format::Arff,
                None => Format::from_path(path).ok_or_else(|| {
                    csonbr::Error::Config(format!("cannot infer the format of {}", path.display()))
                })?,
            };
            Ok(DatasetSource {
                path: path.clone(),
                format,
                target: target.clone(),
            })
        })
        .collect::<csonbr::Result<Vec<_>>>()?;
    let mut algorithm = match args.algo {
        AlgoArg::Nbr => Algorithm::Nbr,
        AlgoArg::Lr => Algorithm::Lr,
        AlgoArg::CsoNbr => Algorithm::CsoNbr,
        AlgoArg::SpsoNbr => Algorithm::SpsoNbr,
    };
    let mut spec = ExperimentSpec {
        datasets,
        split: args.split,
        shuffle: !args.no_shuffle,
        seed: args.seed,
        phis: args.phi,
        ns: args.n,
        fitness_subsample: args.fitness_subsample,
        record_timing: !args.no_timing,
        ..Default::default()
    };
    if args.quick {
        spec = spec.quick();
    }
    if args.spso_half_swarm {
        algorithm = Algorithm::SpsoNbr;
        spec.swarm_size = 50;
        spec.iterations = 1000;
    }
    if args.spso_half_iters {
        algorithm = Algorithm::SpsoNbr;
        spec.swarm_size = 100;
        spec.iterations = 500;
    }
    spec.algorithm = algorithm;
    if let Some(s) = args.swarm {
        spec.swarm_size = s;
    }
    if let Some(t) = args.iters {
        spec.iterations = t;
    }
    if let Some(k) = args.repeats {
        spec.repeats = k;
    }
    let outcomes = harness::run_experiment_with_progress(&spec, &mut |m| eprintln!("{m}"))?;
    let files = harness::write_report(&outcomes, &args.out)?;
    for o in &outcomes {
        print!("{}", harness::format_table(&o.reports));
    }
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn peak(args: PeakArgs) -> csonbr::Result<()> {
    let mut exp = PeakExperiment::standard(args.seed);
    exp.peak = PeakConfig {
        samples: args.samples,
        seed: args.seed,
        sampling: match args.sampling {
            SamplingArg::Area => Sampling::AreaUniform,
            SamplingArg::Radius => Sampling::RadiusUniform,
        },
        ..Default::default()
    };
    exp.test_samples = args.test_samples;
    let (swarm, iters, repeats) = if args.quick {
        (50, 200, 3)
    } else {
        (args.swarm, args.iters, args.repeats)
    };
    exp.pipeline.optimizer = Optimizer::cso(swarm, iters, args.phi);
    exp.pipeline.n = args.n;
    exp.pipeline.repeats = repeats;
    let outcome = harness::run_peak(&exp)?;
    let s = &outcome.summary;
    println!("LR      train {:.4}  test {:.4}", s.lr_train_rmse, s.lr_test_rmse);
    println!("NBR     train {:.4}  test {:.4}", s.nbr_train_rmse, s.nbr_test_rmse);
    for r in &s.runs {
        println!(
            "CSO-NBR seed {:<6} train {:.4}  test {:.4}  ({} evaluations, {:.1} s)",
            r.seed, r.train_rmse, r.test_rmse, r.evaluations, r.wall_seconds
        );
    }
    println!(
        "CSO-NBR test {:.4} ± {:.4}, best {:.4}",
        s.mean_test_rmse, s.std_test_rmse, s.best_test_rmse
    );
    for f in harness::write_peak(&outcome, &exp, &args.out)? {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Peak(a) => peak(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
