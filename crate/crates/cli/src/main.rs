use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mallows_topk::estimation::{borda, borda_estimate, eborda_with};
use mallows_topk::experiments::{
    eborda_csv, loglik_csv, run_eborda, run_loglik, run_separation, separation_csv,
    EbordaExperiment, LoglikExperiment, SeparationExperiment,
};
use mallows_topk::io::{
    format_rankings, format_separation_csv, parse_rankings, to_json, AggregationMethod,
    EstimateRecord, SeparationSummary,
};
use mallows_topk::mixture::{approx_mean_distances, mean_distances, separate_with_deltas};
use mallows_topk::{
    borda_sample_complexity, estimate_theta_mle, expected_distance, min_sample_size,
    separation_gap, Error, MallowsModel, Permutation, RandomSource, SplitMethod, TopKRanking,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "mallows", version, about = "Mallows models for top-k rankings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw top-k rankings from a Mallows model.
    Sample(SampleArgs),
    /// Split a sample into experts and non-experts by mean distance.
    Separate(SeparateArgs),
    /// Estimate the consensus ranking of a sample.
    Aggregate(AggregateArgs),
    /// Run one of the simulation studies and write its CSV table.
    Experiment(ExperimentArgs),
    /// Evaluate a sample-size bound.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct SeedArg {
    /// Random seed.
    #[arg(long, env = "MALLOWS_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    theta: f64,
    /// Ranking CSV whose first line is the consensus (default: 1, 2, ..., n).
    #[arg(long)]
    sigma0: Option<PathBuf>,
    #[arg(long)]
    count: usize,
    #[command(flatten)]
    seed: SeedArg,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    #[value(name = "2means")]
    TwoMeans,
    Gap,
}

impl From<MethodArg> for SplitMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::TwoMeans => SplitMethod::TwoMeans,
            MethodArg::Gap => SplitMethod::Gap,
        }
    }
}

#[derive(Args)]
struct SeparateArgs {
    /// Ranking CSV.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "2means")]
    method: MethodArg,
    /// Estimate mean distances from sampled counterparts with this failure probability.
    #[arg(long, requires = "target")]
    epsilon: Option<f64>,
    /// Absolute accuracy of the sampled mean distances.
    #[arg(long, requires = "epsilon")]
    target: Option<f64>,
    #[command(flatten)]
    seed: SeedArg,
    /// Labels CSV; the JSON summary goes next to it with a `.json` extension.
    #[arg(long)]
    out: PathBuf,
    /// Explicit path for the JSON summary.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregateMethodArg {
    Borda,
    Eborda,
}

#[derive(Args)]
struct AggregateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "borda")]
    method: AggregateMethodArg,
    /// Expert detection used by eBorda.
    #[arg(long, value_enum, default_value = "gap")]
    split: MethodArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(subcommand)]
    which: Experiment,
    #[command(flatten)]
    seed: SeedArg,
    /// Number of repetitions.
    #[arg(long, global = true, default_value_t = 10)]
    reps: usize,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Experiment {
    /// Separation error over a grid of expert distances and ratios c.
    Separation {
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 40)]
        m_g: usize,
        #[arg(long, default_value_t = 60)]
        m_b: usize,
        /// Expert expected distances.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "3,8,13,18,23,28,33,38,43,48"
        )]
        gamma_distances: Vec<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "3,6,9,12,15,18,21,24,27,30,33,36,39"
        )]
        c_grid: Vec<f64>,
        #[arg(long, value_enum, default_value = "2means")]
        method: MethodArg,
    },
    /// Borda against expert Borda on a growing sample.
    Eborda {
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 4)]
        m_g: usize,
        #[arg(long, default_value_t = 40)]
        m_b: usize,
        #[arg(long, default_value_t = 10.0)]
        expert_distance: f64,
        #[arg(long, default_value_t = 75.0)]
        nonexpert_distance: f64,
        /// Expert detection used by eBorda.
        #[arg(long, value_enum, default_value = "gap")]
        method: MethodArg,
    },
    /// Single model against mixture log-likelihood as uniform rankings are added.
    Loglik {
        #[arg(long, default_value_t = 1.43)]
        theta: f64,
        /// Consensus of the synthetic data, 1-based items in preference order.
        #[arg(long, value_delimiter = ',', default_value = "5,1,4,3,2")]
        sigma0: Vec<usize>,
        #[arg(long, default_value_t = 98)]
        m: usize,
        /// Number of uniform rankings to add (default: 2m).
        #[arg(long)]
        impostors: Option<usize>,
        /// Ranking CSV used instead of the synthetic sample.
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundKind {
    Borda,
    Separation,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, value_enum)]
    which: BoundKind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    /// Pair index for the Borda bound (items i and i + 1).
    #[arg(long, default_value_t = 1)]
    i: usize,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    /// Expert expected distance; computed from --theta and --k when absent.
    #[arg(long)]
    gamma_distance: Option<f64>,
    #[arg(long)]
    epsilon: f64,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::VacuousBound(_)) {
            3
        } else {
            2
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CmdResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn write(path: Option<&Path>, text: &str) -> CmdResult {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| input_error(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_sample(path: &Path) -> Result<(usize, Vec<TopKRanking>), Failure> {
    parse_rankings(&read(path)?).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn cmd_sample(a: SampleArgs) -> CmdResult {
    let sigma0 = match &a.sigma0 {
        Some(path) => {
            let (n, rankings) = read_sample(path)?;
            let first = rankings
                .first()
                .ok_or_else(|| input_error("consensus file has no ranking"))?;
            if n != a.n {
                return Err(Error::DimensionMismatch {
                    expected: a.n,
                    got: n,
                }
                .into());
            }
            first
                .to_permutation()
                .ok_or_else(|| input_error("consensus must list at least n - 1 items"))?
        }
        None => Permutation::identity(a.n),
    };
    let model = MallowsModel::new(sigma0, a.theta)?;
    let mut rng = RandomSource::new(a.seed.seed);
    let sample = model.sample_topk(a.k, a.count, &mut rng)?;
    write(a.out.as_deref(), &format_rankings(a.n, &sample))
}

fn cmd_separate(a: SeparateArgs) -> CmdResult {
    let (_, sample) = read_sample(&a.input)?;
    let deltas = match (a.epsilon, a.target) {
        (Some(eps), Some(target)) => {
            approx_mean_distances(&sample, target, eps, &RandomSource::new(a.seed.seed))?
        }
        _ => mean_distances(&sample)?,
    };
    let result = separate_with_deltas(&sample, deltas, a.method.into())?;
    let json_path = a
        .json
        .clone()
        .unwrap_or_else(|| a.out.with_extension("json"));
    write(Some(&a.out), &format_separation_csv(&result))?;
    write(
        Some(&json_path),
        &to_json(&SeparationSummary::from_result(&result, a.epsilon)),
    )
}

fn cmd_aggregate(a: AggregateArgs) -> CmdResult {
    let (n, sample) = read_sample(&a.input)?;
    let (estimate, method) = match a.method {
        AggregateMethodArg::Borda => (borda_estimate(&sample)?, AggregationMethod::Borda),
        AggregateMethodArg::Eborda => (
            eborda_with(&sample, a.split.into())?,
            AggregationMethod::EBorda,
        ),
    };
    // Items nobody ranked never affect a voter's distance, so any completion
    // of the estimate yields the same dispersion fit.
    let mut order = estimate.order.clone();
    let rest = borda(&sample)?.order();
    order.extend(rest.into_iter().filter(|i| !estimate.order.contains(i)));
    debug_assert_eq!(order.len(), n);
    let theta = estimate_theta_mle(&sample, &Permutation::from_order(&order)?)?;
    let record = EstimateRecord::new(
        &estimate,
        method,
        sample.len(),
        Some((theta.theta, theta.clamp)),
    );
    write(a.out.as_deref(), &to_json(&record))
}

fn cmd_experiment(a: ExperimentArgs) -> CmdResult {
    let seed = a.seed.seed;
    let csv = match a.which {
        Experiment::Separation {
            n,
            k,
            m_g,
            m_b,
            gamma_distances,
            c_grid,
            method,
        } => separation_csv(&run_separation(&SeparationExperiment {
            n,
            k,
            m_g,
            m_b,
            gamma_distances,
            c_grid,
            reps: a.reps,
            seed,
            method: method.into(),
        })?),
        Experiment::Eborda {
            n,
            k,
            m_g,
            m_b,
            expert_distance,
            nonexpert_distance,
            method,
        } => eborda_csv(&run_eborda(&EbordaExperiment {
            n,
            k,
            m_g,
            m_b,
            expert_distance,
            nonexpert_distance,
            reps: a.reps,
            seed,
            method: method.into(),
        })?),
        Experiment::Loglik {
            theta,
            sigma0,
            m,
            impostors,
            data,
        } => {
            if sigma0.contains(&0) {
                return Err(input_error("--sigma0 uses 1-based item ids"));
            }
            let data = match data {
                Some(path) => Some(read_sample(&path)?.1),
                None => None,
            };
            let base = data.as_ref().map_or(m, Vec::len);
            loglik_csv(&run_loglik(&LoglikExperiment {
                n: sigma0.len(),
                theta,
                sigma0_order: sigma0.iter().map(|i| i - 1).collect(),
                m,
                impostors: impostors.unwrap_or(2 * base),
                reps: a.reps,
                seed,
                data,
            })?)
        }
    };
    write(a.out.as_deref(), &csv)
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T, Failure> {
    value.ok_or_else(|| input_error(format!("--{flag} is required for this bound")))
}

fn cmd_bounds(a: BoundsArgs) -> CmdResult {
    let report = match a.which {
        BoundKind::Borda => {
            let k = require(a.k, "k")?;
            let theta = require(a.theta, "theta")?;
            let b = borda_sample_complexity(a.n, k, theta, a.i, a.epsilon)?;
            json!({
                "bound": "borda",
                "n": a.n,
                "k": k,
                "theta": theta,
                "i": a.i,
                "epsilon": a.epsilon,
                "delta_1k": b.delta_1k,
                "base": b.base,
                "denominator": b.denominator,
                "m": b.m,
            })
        }
        BoundKind::Separation => {
            let c = require(a.c, "c")?;
            let r = require(a.r, "r")?;
            let gamma = match a.gamma_distance {
                Some(g) => g,
                None => expected_distance(
                    a.n,
                    require(a.k, "k (or --gamma-distance)")?,
                    require(a.theta, "theta (or --gamma-distance)")?,
                )?,
            };
            let gap = separation_gap(c, r, gamma)?;
            let m = min_sample_size(a.n, c, r, gamma, a.epsilon)?;
            json!({
                "bound": "separation",
                "n": a.n,
                "c": c,
                "r": r,
                "epsilon": a.epsilon,
                "gamma_distance": gamma,
                "gap": gap,
                "m": m,
            })
        }
    };
    write(None, &to_json(&report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Separate(a) => cmd_separate(a),
        Command::Aggregate(a) => cmd_aggregate(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Bounds(a) => cmd_bounds(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
