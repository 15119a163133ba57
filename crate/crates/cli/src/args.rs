use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use spkbwe::audio::ChannelSelect;
use spkbwe::experiments::ReportFormat;
use spkbwe::{Parameterization, Variant};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 0x5eed;

/// Environment variable giving the default corpus for `experiment`.
pub const CORPUS_ROOT_ENV: &str = "SPKBWE_CORPUS_ROOT";

#[derive(Debug, Parser)]
#[command(
    name = "spkbwe",
    version,
    about = "Telephone bandwidth extension and speaker identification experiments"
)]
pub struct Cli {
    /// Raise log verbosity (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Produce one database condition (orig, nb, bwe, isdn, isdn_bwe) from a recording.
    Filter(FilterArgs),
    /// Train or apply the bandwidth extension model.
    Bwe {
        #[command(subcommand)]
        command: BweCommand,
    },
    /// Run an identification-rate sweep over database variants.
    Experiment(ExperimentArgs),
    /// Write a synthetic closed-set corpus (and optionally extension training voices).
    SynthCorpus(SynthCorpusArgs),
}

#[derive(Debug, Subcommand)]
pub enum BweCommand {
    /// Fit the joint narrowband/high-band mixture on 16 kHz wideband speech.
    Train(TrainArgs),
    /// Extend an 8 kHz narrowband recording to 16 kHz.
    Extend(ExtendArgs),
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Input WAV (or raw A-law with extension .al, taken as 8 kHz).
    pub input: PathBuf,
    /// Output WAV (or raw A-law with extension .al).
    pub output: PathBuf,
    #[arg(long)]
    pub variant: Variant,
    /// Extension model, required for bwe and isdn_bwe.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "left")]
    pub channel: ChannelSelect,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory searched recursively for 16 kHz WAV files.
    pub corpus_dir: PathBuf,
    pub model_out: PathBuf,
    #[arg(long, default_value_t = 32, value_parser = positive)]
    pub mixtures: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 100, value_parser = positive)]
    pub max_iter: usize,
    #[arg(long, default_value = "left")]
    pub channel: ChannelSelect,
}

#[derive(Debug, Args)]
pub struct ExtendArgs {
    /// 8 kHz input WAV (or raw A-law with extension .al).
    pub input: PathBuf,
    pub model: PathBuf,
    /// 16 kHz output WAV.
    pub output: PathBuf,
    #[arg(long, default_value = "left")]
    pub channel: ChannelSelect,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Corpus manifest, or a directory holding manifest.toml.
    #[arg(env = CORPUS_ROOT_ENV)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub param: Parameterization,
    /// Feature dimensions, e.g. "4-24" or "4,8,16".
    #[arg(long, value_parser = parse_p_list)]
    pub p_list: PList,
    /// Analysis frame lengths in ms, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_frame_ms, default_value = "30")]
    pub frame_ms: Vec<f64>,
    #[arg(long)]
    pub report_dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "orig,nb,bwe")]
    pub variants: Vec<Variant>,
    /// Extension model for bwe variants; trained on the corpus training files when absent.
    #[arg(long)]
    pub bwe_model: Option<PathBuf>,
    /// Mixture size when the extension model is trained here.
    #[arg(long, default_value_t = 32, value_parser = positive)]
    pub mixtures: usize,
    /// Where variant databases are written; defaults to <report-dir>/variants.
    #[arg(long)]
    pub work_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "csv,table,plot-script")]
    pub format: Vec<ReportFormat>,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, value_parser = positive)]
    pub jobs: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SynthCorpusArgs {
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 10, value_parser = at_least_two)]
    pub speakers: usize,
    #[arg(long, default_value_t = 60.0)]
    pub train_secs: f64,
    #[arg(long, default_value_t = 5, value_parser = positive)]
    pub test_files: usize,
    #[arg(long, default_value_t = 2.0)]
    pub test_secs: f64,
    /// Also write extension training voices (disjoint from the corpus speakers) here.
    #[arg(long)]
    pub bwe_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub bwe_voices: usize,
    #[arg(long, default_value_t = 12.0)]
    pub bwe_secs: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// Parsed `--p-list`.
#[derive(Debug, Clone, PartialEq)]
pub struct PList(pub Vec<usize>);

pub fn parse_p_list(s: &str) -> Result<PList, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim) {
        let num = |t: &str| -> Result<usize, String> {
            let v: usize = t
                .trim()
                .parse()
                .map_err(|_| format!("'{t}' is not a positive integer"))?;
            if v == 0 {
                return Err("P must be at least 1".into());
            }
            Ok(v)
        };
        match item.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty range '{item}'"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(item)?),
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(PList(out))
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(format!("'{s}' is not a positive integer")),
    }
}

fn at_least_two(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 2 => Ok(v),
        _ => Err(format!("'{s}' must be an integer of at least 2")),
    }
}

fn parse_frame_ms(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if !(v.is_finite() && v > 0.0) {
        return Err("frame length must be positive".into());
    }
    Ok(v)
}
