//! `cogload`: synthesize recordings, extract workload features, train and
//! evaluate classifiers, and replay recordings through the streaming loop.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cogload::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "cogload", version, about = "Cognitive workload from EEG, gaze and pupil recordings", arg_required_else_help = true)]
pub struct Cli {
    /// TOML run configuration; flags override it, it overrides the defaults.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Generate synthetic recordings.
    #[command(subcommand, arg_required_else_help = true)]
    Synth(SynthCmd),
    /// Individual alpha band from an eyes-open / eyes-closed pair.
    IafDetect(IafDetectArgs),
    /// Band-power course of an EEG recording.
    Bandpower(BandpowerArgs),
    /// Pursuit instances from trial recordings.
    PursuitFeatures(PursuitFeaturesArgs),
    /// Fit a linear SVM (class targets) or a linear regression (value targets).
    Train(TrainArgs),
    /// Cross-validate a classifier on a feature dataset.
    Evaluate(EvaluateArgs),
    /// Leave-one-person-out univariate regression.
    Regress(RegressArgs),
    /// Replay a recording through the streaming classifier.
    Stream(StreamArgs),
    /// Count blinks on Fp1/Fp2.
    Blinks(BlinksArgs),
    /// Re-execute a command from its manifest and verify the outputs.
    Rerun(RerunArgs),
}

#[derive(Debug, Subcommand)]
pub enum SynthCmd {
    /// Eyes-open and eyes-closed recordings, written as open.csv and closed.csv.
    EegPair(EegPairArgs),
    /// Smooth-pursuit trial recordings, one file per trial.
    Pursuit(PursuitArgs),
    /// A recording described by a TOML generator spec.
    Spec(SpecArgs),
    /// An n-back stimulus schedule as JSON.
    Nback(NbackArgs),
}

#[derive(Debug, Args)]
pub struct EegPairArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10.0)]
    pub alpha_hz: f64,
    #[arg(long, default_value_t = 3.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 60.0)]
    pub duration_s: f64,
    #[arg(long, default_value_t = 250.0)]
    pub rate_hz: f64,
}

#[derive(Debug, Args)]
pub struct PursuitArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub persons: u32,
    #[arg(long, default_value_t = 2)]
    pub repetitions: u32,
    #[arg(long, value_delimiter = ',', default_value = "rectangle,circle,sine")]
    pub shapes: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "slow,fast")]
    pub speeds: Vec<String>,
    /// Gaze noise per class label, px.
    #[arg(long, value_delimiter = ',', default_value = "2,15")]
    pub sigmas: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub lag_ms: f64,
    #[arg(long, default_value_t = 28.0)]
    pub duration_s: f64,
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NbackArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 20)]
    pub length: usize,
    #[arg(long, default_value_t = 0.3)]
    pub match_rate: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IafDetectArgs {
    #[arg(long)]
    pub open: PathBuf,
    #[arg(long)]
    pub closed: PathBuf,
    #[arg(long)]
    pub half_width_hz: Option<f64>,
    /// Band JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BandKind {
    /// Band from `--band`, occipital electrodes.
    Iaf,
    /// Frontal theta with SSD.
    Theta,
}

#[derive(Debug, Args)]
pub struct BandpowerArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = BandKind::Iaf)]
    pub kind: BandKind,
    /// Band JSON from `iaf-detect`; required for `--kind iaf`.
    #[arg(long)]
    pub band: Option<PathBuf>,
    /// Electrodes to use; defaults to those of the band's region present in the recording.
    #[arg(long, value_delimiter = ',')]
    pub electrodes: Vec<String>,
    /// Recording whose mean power normalizes the course.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Course CSV (`time_s,power`).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scope {
    PerTrial,
    PerPerson,
    Global,
}

#[derive(Debug, Args)]
pub struct PursuitFeaturesArgs {
    /// Trial recordings or directories of them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub normalization: Option<Scope>,
    /// Dataset JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Model JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    /// Leave one person out.
    Lopo,
    /// Repetition folds per person and condition.
    Loro,
    /// Train on everyone except `--test-persons`.
    Holdout,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum)]
    pub scheme: SchemeArg,
    #[arg(long, value_delimiter = ',')]
    pub test_persons: Vec<u32>,
    /// JSON list of `[condition, k]` pairs overriding the fold table.
    #[arg(long)]
    pub fold_table: Option<PathBuf>,
    /// Also print per-condition results (lopo).
    #[arg(long)]
    pub by_condition: bool,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregationArg {
    None,
    MeanPerCondition,
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    /// CSV with header `person,condition,x,y`.
    #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
    pub input: Option<PathBuf>,
    /// Dataset JSON with value targets and one attribute.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AggregationArg::None)]
    pub aggregation: AggregationArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PipelineArg {
    PupilWindow,
    PursuitDeviation,
    IafCourse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DifficultyArg {
    Easy,
    Difficult,
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub pipeline: PipelineArg,
    /// Band JSON for `iaf-course`.
    #[arg(long)]
    pub band: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub electrodes: Vec<String>,
    #[arg(long)]
    pub window_s: Option<f64>,
    #[arg(long)]
    pub hop_s: Option<f64>,
    /// Samples per push; 0 pushes the whole recording at once.
    #[arg(long, default_value_t = 25)]
    pub block: usize,
    /// Drive the difficulty controller from the decisions.
    #[arg(long)]
    pub controller: bool,
    #[arg(long, default_value_t = 1)]
    pub high_class: usize,
    #[arg(long, value_enum, default_value_t = DifficultyArg::Easy)]
    pub initial: DifficultyArg,
    #[arg(long, default_value_t = 5.0)]
    pub task_period_s: f64,
    /// Session report JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BlinksArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub threshold_uv: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    pub manifest: PathBuf,
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    match &cli.config {
        Some(p) => Ok(RunConfig::load(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn error_kind(e: &anyhow::Error) -> String {
    if let Some(ce) = e.downcast_ref::<cogload::Error>() {
        let dbg = format!("{ce:?}");
        return dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string();
    }
    if e.downcast_ref::<std::io::Error>().is_some() {
        return "Io".into();
    }
    if e.downcast_ref::<serde_json::Error>().is_some() {
        return "Json".into();
    }
    "Error".into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let result = load_config(&cli).and_then(|config| commands::run(&cli, config, &argv));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({ "error": error_kind(&e), "message": format!("{e:#}") });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
