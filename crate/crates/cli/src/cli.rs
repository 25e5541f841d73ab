use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lecseg_core::Modality;

#[derive(Debug, Parser)]
#[command(
    name = "lecseg",
    version,
    about = "Unsupervised topic segmentation of lecture videos"
)]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for per-lecture work (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Log progress.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic corpus (features, manifest, ground truth).
    Synth(SynthArgs),
    /// Group subtitle cues into clips.
    Clipify(ClipifyArgs),
    /// Train the joint embedding, optionally pretraining on another corpus.
    Train(TrainArgs),
    /// Export learned clip and transcript embeddings.
    Embed(EmbedArgs),
    /// Segment every lecture of a corpus.
    Segment(SegmentArgs),
    /// Segment with a reference method (naive, kmeans, cte).
    Baseline(BaselineArgs),
    /// Score segmentations against ground truth.
    Eval(EvalArgs),
    /// Rank clips against a transcript feature query.
    Retrieve(RetrieveArgs),
    /// Print a results table from one or more evaluation files.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n_lectures: Option<usize>,
    #[arg(long)]
    pub clips_per_lecture: Option<usize>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub n_courses: Option<usize>,
    /// Width of every feature modality.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Visual modalities tell apart only half the topic pairs, text the other half.
    #[arg(long)]
    pub complementary: bool,
}

#[derive(Debug, Args)]
pub struct ClipifyArgs {
    /// JSON array of {start_s, end_s, text} cues.
    #[arg(long)]
    pub cues: PathBuf,
    #[arg(long)]
    pub min_len: Option<f64>,
    #[arg(long)]
    pub max_len: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CorpusArg {
    /// Corpus manifest (JSON Lines).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    /// Pretrain on this corpus first, then fine-tune on `--corpus`.
    #[arg(long)]
    pub pretrain_corpus: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// Continue from the checkpoints already in the output directory.
    #[arg(long)]
    pub resume: bool,
    /// Modalities feeding the clip tower.
    #[arg(long, value_delimiter = ',')]
    pub modalities: Option<Vec<Modality>>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub modalities: Option<Vec<Modality>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Twfinch,
    Naive,
    Kmeans,
    Cte,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Twfinch => "twfinch",
            Method::Naive => "naive",
            Method::Kmeans => "kmeans",
            Method::Cte => "cte",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineMethod {
    Naive,
    Kmeans,
    Cte,
}

impl From<BaselineMethod> for Method {
    fn from(m: BaselineMethod) -> Self {
        match m {
            BaselineMethod::Naive => Method::Naive,
            BaselineMethod::Kmeans => Method::Kmeans,
            BaselineMethod::Cte => Method::Cte,
        }
    }
}

/// Where the number of segments comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KSource {
    Gt,
    SecondLast,
    ThirdLast,
    Fixed(usize),
}

impl FromStr for KSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gt" => Ok(KSource::Gt),
            "second_last" => Ok(KSource::SecondLast),
            "third_last" => Ok(KSource::ThirdLast),
            other => other
                .strip_prefix("fixed:")
                .and_then(|k| k.parse().ok())
                .filter(|&k| k > 0)
                .map(KSource::Fixed)
                .ok_or_else(|| {
                    format!("expected gt, second_last, third_last or fixed:K, got {other:?}")
                }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureSource {
    /// Precomputed features of the selected modalities, concatenated.
    Raw,
    /// Learned `[f(c), g(t)]` from a checkpoint.
    Learned,
}

#[derive(Debug, Args)]
pub struct SegmentOptions {
    #[command(flatten)]
    pub corpus: CorpusArg,
    /// gt, second_last, third_last or fixed:K.
    #[arg(long, default_value = "gt")]
    pub k_source: KSource,
    #[arg(long, value_enum, default_value_t = FeatureSource::Raw)]
    pub features: FeatureSource,
    /// Checkpoint for learned features.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Modalities to use; default from the configuration.
    #[arg(long, value_delimiter = ',')]
    pub modalities: Option<Vec<Modality>>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long, value_enum, default_value_t = Method::Twfinch)]
    pub method: Method,
    #[command(flatten)]
    pub options: SegmentOptions,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long, value_enum, default_value_t = BaselineMethod::Naive)]
    pub method: BaselineMethod,
    #[command(flatten)]
    pub options: SegmentOptions,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    /// Directory of per-lecture segmentation JSON files.
    #[arg(long)]
    pub segments: PathBuf,
    /// Boundary tolerances in seconds.
    #[arg(long, value_delimiter = ',')]
    pub k_list: Option<Vec<u32>>,
    /// Also report one row per course.
    #[arg(long)]
    pub by_course: bool,
    /// Row label; defaults to the method recorded in the segmentations.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[command(flatten)]
    pub corpus: CorpusArg,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// JSON array holding one transcript feature vector.
    #[arg(long)]
    pub query: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    #[arg(long, value_delimiter = ',')]
    pub modalities: Option<Vec<Modality>>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Evaluation files written by `eval`.
    #[arg(long, num_args = 1.., required = true)]
    pub eval: Vec<PathBuf>,
    /// Tolerance shown in the BS column.
    #[arg(long, default_value_t = 30)]
    pub bs_k: u32,
}
