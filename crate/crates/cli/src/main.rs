use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use pmu_bop::synth::ClassCounts;
use pmu_bop::{ClassifierKind, Hyperparams, SaxParams};

mod commands;
mod io;

/// Classify PMU event records with symbolic bag-of-patterns features.
#[derive(Debug, Parser)]
#[command(name = "pmubop", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic labelled dataset (JSON Lines).
    Synth(SynthArgs),
    /// Print the SAX words of one record, one channel per line.
    Encode(EncodeArgs),
    /// Write one feature vector per record (JSON Lines).
    Featurize(FeaturizeArgs),
    /// Train a classifier and save it as JSON.
    Train(TrainArgs),
    /// Predict labels with a saved model (CSV: id,label,predicted).
    Predict(PredictArgs),
    /// Stratified k-fold cross-validation report.
    Evaluate(EvaluateArgs),
    /// Cross-validated accuracy over a grid of SAX parameters (CSV).
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, Args)]
struct SaxArgs {
    /// Alphabet size.
    #[arg(long, default_value_t = 4)]
    alpha: usize,
    /// Word length (PAA segments per window).
    #[arg(long, default_value_t = 4)]
    gamma: usize,
    /// Sliding-window length in samples.
    #[arg(long, default_value_t = 25)]
    window: usize,
}

impl SaxArgs {
    fn params(&self) -> Result<SaxParams, String> {
        SaxParams::new(self.alpha, self.gamma, self.window).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, Args)]
struct TrainingArgs {
    /// Classifier to train.
    #[arg(long, value_enum, default_value_t = ClassifierArg::Svm)]
    classifier: ClassifierArg,
    /// SVM regularization strength.
    #[arg(long, default_value_t = Hyperparams::default().lambda)]
    lambda: f64,
    /// SVM passes over the training set.
    #[arg(long, default_value_t = Hyperparams::default().epochs)]
    epochs: usize,
    /// Seed for shuffling and fold assignment.
    /// Seed for all randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl TrainingArgs {
    fn hyperparams(&self) -> Result<Hyperparams, String> {
        let h = Hyperparams {
            lambda: self.lambda,
            epochs: self.epochs,
        };
        h.validate().map_err(|e| e.to_string())?;
        Ok(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClassifierArg {
    Centroid,
    Svm,
}

impl From<ClassifierArg> for ClassifierKind {
    fn from(c: ClassifierArg) -> Self {
        match c {
            ClassifierArg::Centroid => ClassifierKind::NearestCentroid,
            ClassifierArg::Svm => ClassifierKind::LinearSvmOvr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepClassifier {
    Centroid,
    Svm,
    Both,
}

impl SweepClassifier {
    fn kinds(self) -> Vec<ClassifierKind> {
        match self {
            SweepClassifier::Centroid => vec![ClassifierKind::NearestCentroid],
            SweepClassifier::Svm => vec![ClassifierKind::LinearSvmOvr],
            SweepClassifier::Both => vec![
                ClassifierKind::NearestCentroid,
                ClassifierKind::LinearSvmOvr,
            ],
        }
    }
}

/// SNR in dB, or `none` for a noise-free dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Snr(Option<f64>);

impl FromStr for Snr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("none") {
            return Ok(Snr(None));
        }
        let v: f64 = s
            .parse()
            .map_err(|_| format!("expected a number of dB or 'none', got '{s}'"))?;
        if v.is_nan() || v == f64::NEG_INFINITY {
            return Err(format!("invalid SNR {s}"));
        }
        Ok(Snr(Some(v)))
    }
}

impl fmt::Display for Snr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("none"),
        }
    }
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output dataset file.
    #[arg(long)]
    out: PathBuf,
    /// Records per class as label=n pairs; unlisted classes get none.
    #[arg(long, default_value_t = ClassCounts::default())]
    counts: ClassCounts,
    /// Per-channel white-noise SNR in dB, or `none`.
    #[arg(long = "snr-db", default_value_t = Snr(None))]
    snr_db: Snr,
    /// Seed for all randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    /// Input dataset file.
    #[arg(long)]
    input: PathBuf,
    /// Record id to encode [default: first record]
    #[arg(long)]
    record: Option<String>,
    #[command(flatten)]
    sax: SaxArgs,
}

#[derive(Debug, Args)]
struct FeaturizeArgs {
    /// Input dataset file.
    #[arg(long)]
    input: PathBuf,
    /// Output features file.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    sax: SaxArgs,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Input dataset, or features file with --from-features.
    #[arg(long)]
    input: PathBuf,
    /// Read precomputed features; SAX flags are then taken from the file.
    #[arg(long)]
    from_features: bool,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    sax: SaxArgs,
    #[command(flatten)]
    training: TrainingArgs,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Model file written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Input dataset, or features file with --from-features.
    #[arg(long)]
    input: PathBuf,
    /// Read precomputed features instead of a dataset.
    #[arg(long)]
    from_features: bool,
    /// Output CSV file [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Input dataset file.
    #[arg(long)]
    input: PathBuf,
    /// Number of cross-validation folds (at least 2).
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Also write the report as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    sax: SaxArgs,
    #[command(flatten)]
    training: TrainingArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Input dataset file.
    #[arg(long)]
    input: PathBuf,
    /// Alphabet sizes, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "4")]
    alpha_grid: Vec<usize>,
    /// Word lengths, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "4")]
    gamma_grid: Vec<usize>,
    /// Window lengths, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "25")]
    window_grid: Vec<usize>,
    /// Classifier to evaluate at each grid point.
    #[arg(long, value_enum, default_value_t = SweepClassifier::Svm)]
    classifier: SweepClassifier,
    /// Number of cross-validation folds (at least 2).
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// SVM regularization strength.
    #[arg(long, default_value_t = Hyperparams::default().lambda)]
    lambda: f64,
    /// SVM passes over the training set.
    #[arg(long, default_value_t = Hyperparams::default().epochs)]
    epochs: usize,
    /// Seed for fold assignment and SVM shuffling, shared by every grid point.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV file [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Reports a flag combination that clap cannot check itself; exits with status 2.
fn usage_error(subcommand: &str, msg: impl fmt::Display) -> ! {
    let mut cmd = Cli::command();
    cmd.build();
    let sub = cmd
        .find_subcommand_mut(subcommand)
        .expect("known subcommand");
    sub.error(clap::error::ErrorKind::ValueValidation, msg)
        .exit()
}

fn check_folds(subcommand: &str, k: usize) {
    if k < 2 {
        usage_error(subcommand, format!("--folds must be at least 2, got {k}"));
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Encode(a) => {
            let p = a.sax.params().unwrap_or_else(|e| usage_error("encode", e));
            commands::encode(&a, &p)
        }
        Command::Featurize(a) => {
            let p = a
                .sax
                .params()
                .unwrap_or_else(|e| usage_error("featurize", e));
            commands::featurize(&a, &p)
        }
        Command::Train(a) => {
            let p = a.sax.params().unwrap_or_else(|e| usage_error("train", e));
            let h = a
                .training
                .hyperparams()
                .unwrap_or_else(|e| usage_error("train", e));
            commands::train(&a, &p, &h)
        }
        Command::Predict(a) => commands::predict(&a),
        Command::Evaluate(a) => {
            let p = a
                .sax
                .params()
                .unwrap_or_else(|e| usage_error("evaluate", e));
            let h = a
                .training
                .hyperparams()
                .unwrap_or_else(|e| usage_error("evaluate", e));
            check_folds("evaluate", a.folds);
            commands::evaluate(&a, &p, &h)
        }
        Command::Sweep(a) => {
            let h = Hyperparams {
                lambda: a.lambda,
                epochs: a.epochs,
            };
            h.validate().unwrap_or_else(|e| usage_error("sweep", e));
            check_folds("sweep", a.folds);
            if let Some(&bad) = a
                .alpha_grid
                .iter()
                .find(|&&x| SaxParams::new(x, 1, 2).is_err())
            {
                usage_error("sweep", format!("alphabet size {bad} is outside 2..=26"));
            }
            if a.gamma_grid.contains(&0) {
                usage_error("sweep", "word length must be at least 1");
            }
            if let Some(&bad) = a.window_grid.iter().find(|&&w| w < 2) {
                usage_error(
                    "sweep",
                    format!("window length must be at least 2, got {bad}"),
                );
            }
            commands::sweep(&a, &h)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
