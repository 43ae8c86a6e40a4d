use std::path::PathBuf;

use clap::builder::RangedU64ValueParser;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ruleboost::{Learner, Task};

#[derive(Debug, Parser)]
#[command(name = "ruleboost", version, about = "Additive rule ensembles by gradient boosting with optimal rules")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a rule ensemble to a CSV file and save it as JSON.
    Fit(FitArgs),
    /// Score the rows of a CSV file with a saved model.
    Predict(PredictArgs),
    /// Write a noisy parity dataset as CSV.
    Parity(ParityArgs),
    /// Write a Friedman #1 regression dataset as CSV.
    Friedman(FriedmanArgs),
    /// Compare learners over repeated train/test splits.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Classification,
    Regression,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::Classification => Task::Classification,
            TaskArg::Regression => Task::Regression,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LearnerArg {
    Optimal,
    Greedy,
}

impl From<LearnerArg> for Learner {
    fn from(l: LearnerArg) -> Learner {
        match l {
            LearnerArg::Optimal => Learner::Optimal,
            LearnerArg::Greedy => Learner::Greedy,
        }
    }
}

fn at_least(min: u64) -> RangedU64ValueParser<usize> {
    RangedU64ValueParser::new().range(min..)
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number >= 0, got {s:?}")),
    }
}

fn unit_interval(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v <= 1.0 => Ok(v),
        _ => Err(format!("expected a number in (0, 1], got {s:?}")),
    }
}

fn open_unit_interval(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        _ => Err(format!("expected a number in (0, 1), got {s:?}")),
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Target column name.
    #[arg(long, default_value = "y")]
    pub target: String,
    #[arg(long, value_enum, default_value_t = TaskArg::Classification)]
    pub task: TaskArg,
    /// Class label treated as positive [default: the greater label in sort order]
    #[arg(long)]
    pub positive_label: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Training CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub dataset: DataArgs,
    /// Number of boosting rounds.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub rules: u64,
    /// L2 penalty on rule weights.
    #[arg(long, default_value_t = 1.0, value_parser = non_negative)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = LearnerArg::Optimal)]
    pub learner: LearnerArg,
    /// Approximation factor of the optimal search.
    #[arg(long, default_value_t = 1.0, value_parser = unit_interval)]
    pub alpha: f64,
    /// Wall-clock limit per search in seconds; 0 means unlimited.
    #[arg(long, default_value_t = 0.0, value_parser = non_negative)]
    pub time_budget_s: f64,
    /// Thresholds per numeric feature; 0 means every observed value.
    #[arg(long, default_value_t = 32)]
    pub max_thresholds: usize,
    /// Maximum conditions per rule; 0 means unlimited.
    #[arg(long, default_value_t = 0)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path of the JSON model.
    #[arg(long, default_value = "model.json")]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV with a header row naming at least the model's features.
    #[arg(long)]
    pub data: PathBuf,
    /// Output CSV; "-" writes to stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ParityArgs {
    #[arg(long, default_value_t = 3, value_parser = at_least(1))]
    pub d: usize,
    #[arg(long, default_value_t = 800, value_parser = at_least(1))]
    pub n: usize,
    /// Standard deviation of the feature noise.
    #[arg(long, default_value_t = 0.25, value_parser = non_negative)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; "-" writes to stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FriedmanArgs {
    #[arg(long, default_value_t = 10, value_parser = at_least(5))]
    pub d: usize,
    #[arg(long, default_value_t = 1000, value_parser = at_least(1))]
    pub n: usize,
    /// Standard deviation of the target noise.
    #[arg(long, default_value_t = 1.0, value_parser = non_negative)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; "-" writes to stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Benchmark CSV files [default: builtin noisy parity suite, d = 2 and 3]
    #[arg(long)]
    pub data: Vec<PathBuf>,
    #[command(flatten)]
    pub dataset: DataArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [LearnerArg::Optimal, LearnerArg::Greedy])]
    pub learners: Vec<LearnerArg>,
    /// Candidate λ values, chosen per cell on a validation fold.
    #[arg(
        long,
        value_delimiter = ',',
        value_parser = non_negative,
        default_values_t = [0.0001, 0.001, 0.01, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0]
    )]
    pub lambdas: Vec<f64>,
    /// Repetitions (train/test splits) per dataset and learner.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    /// Largest ensemble size; 0 means 2^d for the builtin suite and 10 otherwise.
    #[arg(long, default_value_t = 0)]
    pub max_rules: usize,
    #[arg(long, default_value_t = 0.8, value_parser = open_unit_interval)]
    pub train_frac: f64,
    /// Thresholds per numeric feature; 0 means every observed value.
    #[arg(long, default_value_t = 32)]
    pub max_thresholds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "bench_report.csv")]
    pub out_csv: PathBuf,
    #[arg(long, default_value = "bench_report.json")]
    pub out_json: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
}
