//! Flat `key = value` pipeline configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sspmi::matrix::ScoreKind;
use sspmi::trainers::TrainConfig;

use crate::error::{CliError, Result};

/// Which trainers the pipeline runs next to the matrix route.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainerChoice {
    Sgns,
    Nonsigmoid,
}

impl TrainerChoice {
    pub fn name(self) -> &'static str {
        match self {
            TrainerChoice::Sgns => "sgns",
            TrainerChoice::Nonsigmoid => "nsgns",
        }
    }
}

impl FromStr for TrainerChoice {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgns" => Ok(TrainerChoice::Sgns),
            "nsgns" | "nonsigmoid" => Ok(TrainerChoice::Nonsigmoid),
            _ => Err(CliError::Usage(format!(
                "unknown trainer {s:?}, expected sgns or nsgns"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub corpus_path: PathBuf,
    pub output_dir: PathBuf,
    pub min_count: u64,
    pub window: usize,
    pub shift_k: f64,
    /// Matrix handed to the SVD.
    pub kind: ScoreKind,
    pub dimension: usize,
    pub svd_oversample: usize,
    pub svd_power_iters: usize,
    pub svd_seed: u64,
    pub similarity: Vec<PathBuf>,
    pub analogy: Vec<PathBuf>,
    pub use_w_plus_c: bool,
    pub trainers: Vec<TrainerChoice>,
    pub train: TrainConfig,
    pub graph_runs: usize,
    pub graph_seed: u64,
    pub spectrum_cap: usize,
    pub complex_threshold: f64,
    pub rhg_c: f64,
    pub pdf_grid: usize,
    pub pdf_nodes: usize,
    pub compare_bins: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus_path: PathBuf::from("corpus.txt"),
            output_dir: PathBuf::from("out"),
            min_count: 5,
            window: 2,
            shift_k: 5.0,
            kind: ScoreKind::SigmaSpmi,
            dimension: 300,
            svd_oversample: 10,
            svd_power_iters: 4,
            svd_seed: 0,
            similarity: Vec::new(),
            analogy: Vec::new(),
            use_w_plus_c: false,
            trainers: Vec::new(),
            train: TrainConfig::default(),
            graph_runs: 10,
            graph_seed: 0,
            spectrum_cap: 15_000,
            complex_threshold: 10.0,
            rhg_c: 1.0,
            pdf_grid: sspmi::hyperbolic::DEFAULT_GRID_POINTS,
            pdf_nodes: sspmi::hyperbolic::DEFAULT_QUADRATURE_NODES,
            compare_bins: 100,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Usage(format!(
            "invalid boolean {value:?} for {key}"
        ))),
    }
}

fn parse_list(value: &str) -> Vec<&str> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

fn join_paths(paths: &[PathBuf]) -> String {
    paths
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn kind_flag(kind: ScoreKind) -> &'static str {
    match kind {
        ScoreKind::Pmi => "pmi",
        ScoreKind::Spmi => "spmi",
        ScoreKind::SigmaSpmi => "sigma-spmi",
        ScoreKind::Pspmi => "pspmi",
        ScoreKind::Bspmi => "bspmi",
    }
}

impl PipelineConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.train;
        match key {
            "corpus_path" => self.corpus_path = PathBuf::from(value),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "min_count" => self.min_count = parse_num(key, value)?,
            "window" => self.window = parse_num(key, value)?,
            "shift_k" => self.shift_k = parse_num(key, value)?,
            "kind" => self.kind = value.parse()?,
            "dimension" => self.dimension = parse_num(key, value)?,
            "svd_oversample" => self.svd_oversample = parse_num(key, value)?,
            "svd_power_iters" => self.svd_power_iters = parse_num(key, value)?,
            "svd_seed" => self.svd_seed = parse_num(key, value)?,
            "similarity" => {
                self.similarity = parse_list(value).into_iter().map(PathBuf::from).collect()
            }
            "analogy" => self.analogy = parse_list(value).into_iter().map(PathBuf::from).collect(),
            "use_w_plus_c" => self.use_w_plus_c = parse_bool(key, value)?,
            "trainers" => {
                self.trainers = parse_list(value)
                    .into_iter()
                    .map(str::parse)
                    .collect::<Result<_>>()?;
            }
            "train_epochs" => t.epochs = parse_num(key, value)?,
            "train_learning_rate" => t.learning_rate = parse_num(key, value)?,
            "train_lr_decay" => t.lr_decay = parse_bool(key, value)?,
            "train_window" => t.window = parse_num(key, value)?,
            "train_negatives" => t.k = parse_num(key, value)?,
            "train_dimension" => t.d = parse_num(key, value)?,
            "train_subsample" => {
                t.subsample_t = if value == "none" {
                    None
                } else {
                    Some(parse_num(key, value)?)
                };
            }
            "train_unigram_power" => t.unigram_power = parse_num(key, value)?,
            "train_clamp_eps" => t.clamp_eps = parse_num(key, value)?,
            "train_keep_feasible" => t.keep_feasible = parse_bool(key, value)?,
            "train_seed" => t.seed = parse_num(key, value)?,
            "train_workers" => t.workers = parse_num(key, value)?,
            "graph_runs" => self.graph_runs = parse_num(key, value)?,
            "graph_seed" => self.graph_seed = parse_num(key, value)?,
            "spectrum_cap" => self.spectrum_cap = parse_num(key, value)?,
            "complex_threshold" => self.complex_threshold = parse_num(key, value)?,
            "rhg_c" => self.rhg_c = parse_num(key, value)?,
            "pdf_grid" => self.pdf_grid = parse_num(key, value)?,
            "pdf_nodes" => self.pdf_nodes = parse_num(key, value)?,
            "compare_bins" => self.compare_bins = parse_num(key, value)?,
            _ => return Err(CliError::Usage(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Parses config text on top of the defaults. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected `key = value`", idx + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| CliError::Usage(format!("config line {}: {e}", idx + 1)))?;
        }
        Ok(cfg)
    }

    /// Every key in a fixed order, readable by [`PipelineConfig::parse`].
    pub fn serialize(&self) -> String {
        let t = &self.train;
        let trainers: Vec<&str> = self.trainers.iter().map(|x| x.name()).collect();
        let subsample = t.subsample_t.map_or("none".to_string(), |v| v.to_string());
        let pairs: Vec<(&str, String)> = vec![
            ("corpus_path", self.corpus_path.display().to_string()),
            ("output_dir", self.output_dir.display().to_string()),
            ("min_count", self.min_count.to_string()),
            ("window", self.window.to_string()),
            ("shift_k", self.shift_k.to_string()),
            ("kind", kind_flag(self.kind).to_string()),
            ("dimension", self.dimension.to_string()),
            ("svd_oversample", self.svd_oversample.to_string()),
            ("svd_power_iters", self.svd_power_iters.to_string()),
            ("svd_seed", self.svd_seed.to_string()),
            ("similarity", join_paths(&self.similarity)),
            ("analogy", join_paths(&self.analogy)),
            ("use_w_plus_c", self.use_w_plus_c.to_string()),
            ("trainers", trainers.join(",")),
            ("train_epochs", t.epochs.to_string()),
            ("train_learning_rate", t.learning_rate.to_string()),
            ("train_lr_decay", t.lr_decay.to_string()),
            ("train_window", t.window.to_string()),
            ("train_negatives", t.k.to_string()),
            ("train_dimension", t.d.to_string()),
            ("train_subsample", subsample),
            ("train_unigram_power", t.unigram_power.to_string()),
            ("train_clamp_eps", t.clamp_eps.to_string()),
            ("train_keep_feasible", t.keep_feasible.to_string()),
            ("train_seed", t.seed.to_string()),
            ("train_workers", t.workers.to_string()),
            ("graph_runs", self.graph_runs.to_string()),
            ("graph_seed", self.graph_seed.to_string()),
            ("spectrum_cap", self.spectrum_cap.to_string()),
            ("complex_threshold", self.complex_threshold.to_string()),
            ("rhg_c", self.rhg_c.to_string()),
            ("pdf_grid", self.pdf_grid.to_string()),
            ("pdf_nodes", self.pdf_nodes.to_string()),
            ("compare_bins", self.compare_bins.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Makes relative paths relative to `base` (the config file's directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus_path);
        fix(&mut self.output_dir);
        self.similarity.iter_mut().for_each(fix);
        self.analogy.iter_mut().for_each(fix);
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(CliError::Core(sspmi::Error::Domain(msg.to_string())));
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if !(self.shift_k > 0.0 && self.shift_k.is_finite()) {
            return bad("shift_k must be positive");
        }
        if self.dimension == 0 {
            return bad("dimension must be at least 1");
        }
        if self.graph_runs == 0 {
            return bad("graph_runs must be at least 1");
        }
        if self.compare_bins == 0 || self.pdf_grid < 2 || self.pdf_nodes == 0 {
            return bad(
                "compare_bins, pdf_grid and pdf_nodes must be positive (pdf_grid at least 2)",
            );
        }
        if !self.trainers.is_empty() {
            self.train.validate()?;
        }
        for p in std::iter::once(&self.corpus_path)
            .chain(&self.similarity)
            .chain(&self.analogy)
        {
            if !p.is_file() {
                return Err(CliError::File {
                    path: p.clone(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::parse(&cfg.serialize()).unwrap(), cfg);
    }

    #[test]
    fn edited_config_round_trips() {
        let text = "# smoke\ncorpus_path = c.txt\nmin_count=3\nshift_k = 2.5\nkind = pspmi\n\
                    similarity = a.tsv, b.tsv\ntrainers = sgns,nsgns\ntrain_subsample = 0.001\n\
                    train_learning_rate = 0.0125\n";
        let cfg = PipelineConfig::parse(text).unwrap();
        assert_eq!(cfg.min_count, 3);
        assert_eq!(cfg.kind, ScoreKind::Pspmi);
        assert_eq!(
            cfg.similarity,
            vec![PathBuf::from("a.tsv"), PathBuf::from("b.tsv")]
        );
        assert_eq!(
            cfg.trainers,
            vec![TrainerChoice::Sgns, TrainerChoice::Nonsigmoid]
        );
        assert_eq!(cfg.train.subsample_t, Some(0.001));
        let again = PipelineConfig::parse(&cfg.serialize()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.serialize(), cfg.serialize());
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(PipelineConfig::parse("colour = red").is_err());
        assert!(PipelineConfig::parse("window = two").is_err());
        assert!(PipelineConfig::parse("no equals sign").is_err());
        assert!(PipelineConfig::parse("trainers = glove").is_err());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let mut cfg = PipelineConfig::parse("corpus_path = c.txt\noutput_dir = /tmp/out").unwrap();
        cfg.resolve_paths(Path::new("/data/smoke"));
        assert_eq!(cfg.corpus_path, PathBuf::from("/data/smoke/c.txt"));
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/out"));
    }
}
