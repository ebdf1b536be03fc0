use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "hrvbench",
    version,
    about = "HRV-based stress detection: features, training, evaluation"
)]
struct Cli {
    /// JSON file with defaults for seed, parallelism, class_weighting,
    /// plausibility_filter, models and hyperparams; flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Master seed. Falls back to the config file, then HRVBENCH_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; defaults to the number of available cores.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    parallelism: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a feature table from a dataset manifest.
    Features(FeaturesArgs),
    /// Run an evaluation protocol.
    Eval {
        #[command(subcommand)]
        protocol: EvalCommand,
    },
    /// Generate synthetic waveforms or feature tables.
    Synth {
        #[command(subcommand)]
        kind: SynthCommand,
    },
    /// Render a saved report as text or CSV.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Built-in label scheme to use instead of the manifest's.
    #[arg(long, conflicts_with = "scheme_file")]
    scheme: Option<String>,
    /// JSON label scheme to use instead of the manifest's.
    #[arg(long, value_name = "FILE")]
    scheme_file: Option<PathBuf>,
    /// Output feature table (CSV).
    #[arg(long)]
    out: PathBuf,
    /// Build report (JSON); defaults to the table path with extension `build.json`.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Drop intervals outside the plausible range before windowing.
    #[arg(long)]
    plausibility_filter: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Comma-separated model kinds (RFC, SVM, MLP); all three by default.
    #[arg(long, value_delimiter = ',')]
    models: Vec<String>,
    /// Train without class weights.
    #[arg(long)]
    no_class_weighting: bool,
    /// Output directory for reports and fold models.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// Leave-one-subject-out within one dataset.
    Loso {
        #[arg(long)]
        table: PathBuf,
        #[command(flatten)]
        common: EvalArgs,
    },
    /// LOSO models from the source table tested on the target table.
    Cross {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[command(flatten)]
        common: EvalArgs,
    },
    /// LOSO over the union of several tables.
    Combined {
        #[arg(long = "table", required = true, num_args = 1..)]
        tables: Vec<PathBuf>,
        #[command(flatten)]
        common: EvalArgs,
    },
}

#[derive(Debug, Args)]
struct WaveArgs {
    #[arg(long, default_value_t = 60.0)]
    bpm: f64,
    /// Seconds.
    #[arg(long, default_value_t = 60.0)]
    duration: f64,
    /// Sampling rate in Hz; 700 for ECG and 64 for BVP by default.
    #[arg(long)]
    rate: Option<f64>,
    /// Interval modulation frequency, Hz.
    #[arg(long, default_value_t = 0.0)]
    mod_freq: f64,
    /// Interval modulation depth, ms.
    #[arg(long, default_value_t = 0.0)]
    mod_depth: f64,
    /// Time of the first sample, seconds.
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    /// `clean` or `standard` (wander, mains, 10 dB white noise).
    #[arg(long, default_value = "clean")]
    noise: String,
    /// Waveform CSV.
    #[arg(long)]
    out: PathBuf,
    /// Beat annotation CSV; defaults to the waveform path with extension `beats.csv`.
    #[arg(long)]
    annotations: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FeatureSynthArgs {
    #[arg(long, default_value_t = 200)]
    n_per_class: usize,
    /// Stress rows, when different from --n-per-class.
    #[arg(long)]
    n_stress: Option<usize>,
    /// Class mean gap per feature, in within-class standard deviations.
    #[arg(long, default_value_t = 1.0)]
    separation: f64,
    #[arg(long, default_value_t = 10)]
    participants: usize,
    #[arg(long, default_value_t = 0.25)]
    jitter: f64,
    /// Added to every feature value.
    #[arg(long, default_value_t = 0.0)]
    offset: f64,
    #[arg(long, default_value = "synthetic")]
    dataset_id: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum SynthCommand {
    Ecg(WaveArgs),
    Bvp(WaveArgs),
    Features(FeatureSynthArgs),
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Report JSON written by `eval`.
    input: PathBuf,
    /// `text` or `csv`.
    #[arg(long, default_value = "text")]
    format: String,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let text = text.strip_prefix("error: ").unwrap_or(&text);
            eprint!("error[E_USAGE]: {text}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.id(), e);
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = config::FileConfig::load(cli.config.as_deref())?;
    let env_seed = std::env::var("HRVBENCH_SEED").ok();
    let settings = config::Settings::resolve(cli.seed, cli.parallelism, &file, env_seed.as_deref())?;
    match cli.command {
        Command::Features(a) => commands::features(&settings, &file, a),
        Command::Eval { protocol } => commands::eval(&settings, &file, protocol),
        Command::Synth { kind } => commands::synth(&settings, kind),
        Command::Report(a) => commands::report(a),
    }
}
