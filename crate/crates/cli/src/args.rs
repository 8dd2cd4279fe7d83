use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "sspmi",
    version,
    about = "PMI-family word matrices, SGNS trainers, random graphs and hyperbolic geometry"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Count words and keep those seen at least --min-count times.
    Vocab(VocabArgs),
    /// Count symmetric windowed co-occurrences.
    Cooc(CoocArgs),
    /// Build a PMI-family matrix from co-occurrence counts.
    Matrix(MatrixArgs),
    /// Truncated SVD of a matrix into word and context vectors.
    Svd(SvdArgs),
    /// Train skip-gram with negative sampling.
    TrainSgns(TrainArgs),
    /// Train the sigmoid-free SGNS variant.
    TrainNsgns(TrainArgs),
    /// Word similarity and analogy benchmarks.
    Eval(EvalArgs),
    /// Sample one graph from an edge-probability matrix.
    GraphSample(GraphSampleArgs),
    /// Clustering, degree and power-law statistics over several graphs.
    GraphStats(GraphStatsArgs),
    /// Adjacency eigenvalues and the distance to the semicircle law.
    GraphSpectrum(GraphSpectrumArgs),
    /// Random hyperbolic graph in the native disk model.
    Rhg(RhgArgs),
    /// Density of the distance between two random points of a disk.
    DistancePdf(DistancePdfArgs),
    /// Compare shifted PMI values with the density of R - X.
    Compare(CompareArgs),
    /// Run vocab, cooc, matrix, svd, eval, graph-stats and compare in one go.
    Pipeline(PipelineArgs),
    /// Write a synthetic topic corpus.
    SynthCorpus(SynthArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct VocabArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub min_count: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct CoocArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub window: usize,
    /// Shrink each window to a uniform draw from 1..=window.
    #[arg(long)]
    pub dynamic_window: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct MatrixArgs {
    #[arg(long)]
    pub cooc: PathBuf,
    /// pmi, spmi, sigma-spmi, pspmi or bspmi.
    #[arg(long, default_value = "sigma-spmi")]
    pub kind: String,
    /// Shift: the number of negative samples.
    #[arg(long, default_value_t = 5.0)]
    pub k: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct SvdArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long, default_value_t = 300)]
    pub dim: usize,
    #[arg(long, default_value_t = 10)]
    pub oversample: usize,
    #[arg(long, default_value_t = 4)]
    pub power_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_words: PathBuf,
    #[arg(long)]
    pub out_contexts: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long, default_value_t = 300)]
    pub dim: usize,
    /// Negative samples per positive pair.
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    pub lr: f64,
    #[arg(long)]
    pub no_lr_decay: bool,
    #[arg(long, default_value_t = 2)]
    pub window: usize,
    /// Frequent-word subsampling threshold.
    #[arg(long)]
    pub subsample: Option<f64>,
    #[arg(long, default_value_t = 0.75)]
    pub unigram_power: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub clamp_eps: f64,
    /// Let nonsigmoid steps leave the open unit interval.
    #[arg(long)]
    pub no_keep_feasible: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// More than one worker trades reproducibility for speed.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub out_words: PathBuf,
    #[arg(long)]
    pub out_contexts: Option<PathBuf>,
    /// CSV `epoch,mean_objective`.
    #[arg(long)]
    pub progress: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    /// Word vectors in word2vec text format.
    #[arg(long)]
    pub words: PathBuf,
    #[arg(long)]
    pub contexts: Option<PathBuf>,
    /// Score with W + C instead of W (needs --contexts).
    #[arg(long)]
    pub use_w_plus_c: bool,
    #[arg(long)]
    pub similarity: Vec<PathBuf>,
    #[arg(long)]
    pub analogy: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct GraphSampleArgs {
    /// Edge-probability matrix, normally SigmaSPMI.
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct GraphStatsArgs {
    /// Sample --runs graphs from this probability matrix.
    #[arg(long, conflicts_with = "graph")]
    pub matrix: Option<PathBuf>,
    /// Or summarise existing graph files.
    #[arg(long)]
    pub graph: Vec<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Run r uses seed + r.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Clustering must exceed this multiple of k/n for a complex network.
    #[arg(long, default_value_t = 10.0)]
    pub complex_threshold: f64,
    /// CSV `metric,mean,ci95,count`.
    #[arg(long)]
    pub out: PathBuf,
    /// One CSV row per graph.
    #[arg(long)]
    pub per_run: Option<PathBuf>,
    /// `k,count` CSV of the first graph.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct GraphSpectrumArgs {
    #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
    pub graph: Option<PathBuf>,
    /// Sample the graph from this probability matrix with --seed.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest vertex count accepted; the dense matrix needs n² numbers.
    #[arg(long, default_value_t = 15_000)]
    pub max_n: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct RhgArgs {
    #[arg(long)]
    pub n: usize,
    /// Target mean degree, fixes the disk radius.
    #[arg(long, default_value_t = 10.0, conflicts_with = "radius")]
    pub mean_degree: f64,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Inverse temperature of the connection probability σ(c(R - x)).
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = sspmi::hyperbolic::DEFAULT_MAX_NODES)]
    pub max_nodes: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// CSV `r,theta` of the sampled points.
    #[arg(long)]
    pub points: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct DistancePdfArgs {
    #[arg(long)]
    pub radius: f64,
    #[arg(long, default_value_t = sspmi::hyperbolic::DEFAULT_GRID_POINTS)]
    pub grid: usize,
    #[arg(long, default_value_t = sspmi::hyperbolic::DEFAULT_QUADRATURE_NODES)]
    pub nodes: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct CompareArgs {
    /// Shifted PMI matrix whose stored values are compared.
    #[arg(long)]
    pub matrix: PathBuf,
    /// Disk radius; derived from --graph when absent.
    #[arg(long, required_unless_present = "graph")]
    pub radius: Option<f64>,
    /// Graph whose size and mean degree fix the radius.
    #[arg(long, conflicts_with = "radius")]
    pub graph: Option<PathBuf>,
    #[arg(long, default_value_t = sspmi::hyperbolic::DEFAULT_GRID_POINTS)]
    pub grid: usize,
    #[arg(long, default_value_t = sspmi::hyperbolic::DEFAULT_QUADRATURE_NODES)]
    pub nodes: usize,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct PipelineArgs {
    /// Flat `key = value` file; relative paths are taken from its directory.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Override any config key, e.g. `--set dimension=50`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 100_000)]
    pub tokens: usize,
    #[arg(long, default_value_t = 500)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 10)]
    pub topics: usize,
    #[arg(long, default_value_t = 40)]
    pub doc_len: usize,
    #[arg(long, default_value_t = 0.6)]
    pub topic_weight: f64,
    #[arg(long, default_value_t = 1.0)]
    pub zipf_exponent: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}
