use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sspmi::corpus::{
    build_vocab, count_cooccurrences_with, read_tokens, CooccurrenceCounts, CountOptions,
    Vocabulary,
};
use sspmi::eval::{
    evaluate_analogy_3cosadd, evaluate_similarity, write_report, AnalogyDataset, ReportRow,
    SimilarityDataset,
};
use sspmi::factorization::{embeddings_from_svd, truncated_svd, EmbeddingSet, SvdOptions};
use sspmi::graph::{sample_graph, semicircle_ks, spectrum, UndirectedGraph};
use sspmi::hyperbolic::{
    compare_spmi_to_hyperbolic, distance_pdf, generate_rhg, radius_from_graph, DiskModel,
};
use sspmi::matrix::{pmi_matrix, transform, ScoreKind, SparseScoreMatrix};
use sspmi::synthetic::TopicCorpus;
use sspmi::textio::format_sig;
use sspmi::trainers::{train_nonsigmoid_sgns, train_sgns, TrainConfig, Trained};
use sspmi::Real;

use crate::args::*;
use crate::error::{CliError, Result};
use crate::manifest::{manifest_path_for, Recorder};
use crate::reports;

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CliError::File {
            path: path.to_path_buf(),
            source,
        })
}

/// Runs a core reader on a file, tagging errors with the path.
pub fn read_file<T>(path: &Path, f: impl FnOnce(BufReader<File>) -> sspmi::Result<T>) -> Result<T> {
    f(open(path)?).map_err(|source| CliError::InFile {
        path: path.to_path_buf(),
        source,
    })
}

/// Creates `path` (and its directory) and hands a buffered writer to `f`.
pub fn write_file<E>(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::result::Result<(), E>,
) -> Result<()>
where
    E: Into<CliError>,
{
    let wrap = |source| CliError::File {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(wrap)?;
    }
    let mut out = BufWriter::new(File::create(path).map_err(wrap)?);
    f(&mut out).map_err(Into::into)?;
    out.flush().map_err(wrap)
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(sspmi::Error::Io(e))
    }
}

fn settings<A: Serialize>(args: &A) -> serde_json::Value {
    serde_json::to_value(args).expect("arguments serialize")
}

pub fn read_corpus(path: &Path) -> Result<Vec<String>> {
    read_file(path, read_tokens)
}

pub fn vocab(a: &VocabArgs) -> Result<()> {
    let mut rec = Recorder::new("vocab", None, settings(a));
    rec.input(&a.corpus);
    let tokens = read_corpus(&a.corpus)?;
    let v = build_vocab(tokens.iter(), a.min_count)?;
    write_file(&a.out, |w| v.write_to(w))?;
    rec.output(&a.out);
    println!("{} words kept from {} tokens", v.len(), tokens.len());
    rec.write(&manifest_path_for(&a.out))
}

pub fn cooc(a: &CoocArgs) -> Result<()> {
    let mut rec = Recorder::new("cooc", Some(a.seed), settings(a));
    rec.input(&a.corpus);
    rec.input(&a.vocab);
    let v = read_file(&a.vocab, Vocabulary::read_from)?;
    let ids = v.encode(&read_corpus(&a.corpus)?);
    let opts = CountOptions {
        window: a.window,
        dynamic_window: a.dynamic_window,
        seed: a.seed,
    };
    let counts = count_cooccurrences_with(&ids, &v, &opts)?;
    write_file(&a.out, |w| counts.write_to(w))?;
    rec.output(&a.out);
    println!(
        "{} distinct pairs, total {}",
        counts.pairs().len(),
        counts.total()
    );
    rec.write(&manifest_path_for(&a.out))
}

pub fn matrix(a: &MatrixArgs) -> Result<()> {
    let mut rec = Recorder::new("matrix", None, settings(a));
    rec.input(&a.cooc);
    let kind: ScoreKind = a.kind.parse()?;
    let counts = read_file(&a.cooc, CooccurrenceCounts::read_from)?;
    let m = transform(&pmi_matrix::<f64>(&counts)?, kind, a.k)?;
    write_file(&a.out, |w| m.write_to(w))?;
    rec.output(&a.out);
    println!("{} n={} nnz={}", kind, m.n(), m.nnz());
    rec.write(&manifest_path_for(&a.out))
}

pub fn svd(a: &SvdArgs) -> Result<()> {
    let mut rec = Recorder::new("svd", Some(a.seed), settings(a));
    rec.input(&a.matrix);
    rec.input(&a.vocab);
    let m = read_file(&a.matrix, SparseScoreMatrix::<f64>::read_from)?;
    let v = read_file(&a.vocab, Vocabulary::read_from)?;
    let opts = SvdOptions {
        rank: a.dim,
        oversample: a.oversample,
        power_iters: a.power_iters,
        seed: a.seed,
    };
    let emb = factorize(&m, &v, &opts)?;
    write_embeddings(&emb, &a.out_words, a.out_contexts.as_deref(), &mut rec)?;
    println!("{} vectors of dimension {}", emb.len(), emb.dim());
    rec.write(&manifest_path_for(&a.out_words))
}

pub fn factorize(
    m: &SparseScoreMatrix<f64>,
    v: &Vocabulary,
    opts: &SvdOptions,
) -> Result<EmbeddingSet<f64>> {
    if m.n() != v.len() {
        return Err(CliError::Core(sspmi::Error::Domain(format!(
            "matrix has {} rows but the vocabulary has {} words",
            m.n(),
            v.len()
        ))));
    }
    let svd = truncated_svd(m, opts)?;
    Ok(embeddings_from_svd(&svd, v)?)
}

pub fn write_embeddings<T: Real>(
    emb: &EmbeddingSet<T>,
    words: &Path,
    contexts: Option<&Path>,
    rec: &mut Recorder,
) -> Result<()> {
    write_file(words, |w| emb.write_words(w))?;
    rec.output(words);
    if let Some(path) = contexts {
        write_file(path, |w| emb.write_contexts(w))?;
        rec.output(path);
    }
    Ok(())
}

/// Worker count after the `SSPMI_THREADS` cap.
pub fn capped_workers(requested: usize) -> usize {
    match crate::thread_cap() {
        Some(cap) => requested.min(cap).max(1),
        None => requested,
    }
}

pub fn train(a: &TrainArgs, nonsigmoid: bool) -> Result<()> {
    let name = if nonsigmoid {
        "train-nsgns"
    } else {
        "train-sgns"
    };
    let mut rec = Recorder::new(name, Some(a.seed), settings(a));
    rec.input(&a.corpus);
    rec.input(&a.vocab);
    let v = read_file(&a.vocab, Vocabulary::read_from)?;
    let ids = v.encode(&read_corpus(&a.corpus)?);
    let cfg = TrainConfig {
        d: a.dim,
        k: a.negatives,
        epochs: a.epochs,
        learning_rate: a.lr,
        lr_decay: !a.no_lr_decay,
        window: a.window,
        subsample_t: a.subsample,
        unigram_power: a.unigram_power,
        clamp_eps: a.clamp_eps,
        keep_feasible: !a.no_keep_feasible,
        seed: a.seed,
        workers: capped_workers(a.workers),
    };
    let trained = run_trainer(&ids, &v, &cfg, nonsigmoid)?;
    write_embeddings(
        &trained.embeddings,
        &a.out_words,
        a.out_contexts.as_deref(),
        &mut rec,
    )?;
    if let Some(p) = &a.progress {
        write_file(p, |w| trained.write_progress_csv(w))?;
        rec.output(p);
    }
    if let Some(last) = trained.epoch_objectives.last() {
        println!("final mean objective {}", format_sig(*last, 6));
    }
    rec.write(&manifest_path_for(&a.out_words))
}

pub fn run_trainer(
    ids: &[u32],
    v: &Vocabulary,
    cfg: &TrainConfig,
    nonsigmoid: bool,
) -> Result<Trained<f32>> {
    Ok(if nonsigmoid {
        train_nonsigmoid_sgns::<f32>(ids, v, cfg)?
    } else {
        train_sgns::<f32>(ids, v, cfg)?
    })
}

fn dataset_name(path: &Path) -> String {
    path.file_stem().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

pub fn load_benchmarks(
    similarity: &[std::path::PathBuf],
    analogy: &[std::path::PathBuf],
) -> Result<(Vec<SimilarityDataset>, Vec<AnalogyDataset>)> {
    let sims = similarity
        .iter()
        .map(|p| read_file(p, |r| SimilarityDataset::read_from(dataset_name(p), r)))
        .collect::<Result<_>>()?;
    let analogies = analogy
        .iter()
        .map(|p| read_file(p, |r| AnalogyDataset::read_from(dataset_name(p), r)))
        .collect::<Result<_>>()?;
    Ok((sims, analogies))
}

pub fn evaluate<T: Real>(
    emb: &EmbeddingSet<T>,
    sims: &[SimilarityDataset],
    analogies: &[AnalogyDataset],
    use_w_plus_c: bool,
) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for ds in sims {
        let s = evaluate_similarity(emb, ds, use_w_plus_c)?;
        rows.push(ReportRow {
            dataset: ds.name.clone(),
            metric: "spearman".into(),
            value: s.value,
            coverage: s.coverage,
        });
    }
    for ds in analogies {
        let s = evaluate_analogy_3cosadd(emb, ds, use_w_plus_c)?;
        rows.push(ReportRow {
            dataset: ds.name.clone(),
            metric: "3cosadd_accuracy".into(),
            value: s.value,
            coverage: s.coverage,
        });
    }
    Ok(rows)
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let mut rec = Recorder::new("eval", None, settings(a));
    if a.similarity.is_empty() && a.analogy.is_empty() {
        return Err(CliError::Usage(
            "give at least one --similarity or --analogy file".into(),
        ));
    }
    if a.use_w_plus_c && a.contexts.is_none() {
        return Err(CliError::Usage("--use-w-plus-c needs --contexts".into()));
    }
    rec.input(&a.words);
    let emb = match &a.contexts {
        Some(c) => {
            rec.input(c);
            let words = open(&a.words)?;
            read_file(c, |cr| EmbeddingSet::<f64>::read(words, Some(cr)))?
        }
        None => read_file(&a.words, |r| {
            EmbeddingSet::<f64>::read(r, None::<BufReader<File>>)
        })?,
    };
    a.similarity
        .iter()
        .chain(&a.analogy)
        .for_each(|p| rec.input(p));
    let (sims, analogies) = load_benchmarks(&a.similarity, &a.analogy)?;
    let rows = evaluate(&emb, &sims, &analogies, a.use_w_plus_c)?;
    write_file(&a.out, |w| write_report(&rows, w))?;
    rec.output(&a.out);
    for r in &rows {
        println!(
            "{} {} {} (coverage {})",
            r.dataset,
            r.metric,
            format_sig(r.value, 4),
            format_sig(r.coverage, 4)
        );
    }
    rec.write(&manifest_path_for(&a.out))
}

pub fn graph_sample(a: &GraphSampleArgs) -> Result<()> {
    let mut rec = Recorder::new("graph-sample", Some(a.seed), settings(a));
    rec.input(&a.matrix);
    let m = read_file(&a.matrix, SparseScoreMatrix::<f64>::read_from)?;
    let g = sample_graph(&m, a.seed)?;
    write_file(&a.out, |w| g.write_to(w))?;
    rec.output(&a.out);
    println!("n={} m={}", g.n(), g.m());
    rec.write(&manifest_path_for(&a.out))
}

pub fn graph_stats(a: &GraphStatsArgs) -> Result<()> {
    let mut rec = Recorder::new("graph-stats", Some(a.seed), settings(a));
    let mut runs = Vec::new();
    let mut histogram = None;
    let mut push = |g: &UndirectedGraph, seed: Option<u64>| {
        let (s, h) = reports::run_stats(g, seed, a.complex_threshold);
        histogram.get_or_insert(h);
        runs.push(s);
    };
    match &a.matrix {
        Some(path) => {
            if a.runs == 0 {
                return Err(CliError::Usage("--runs must be at least 1".into()));
            }
            rec.input(path);
            let m = read_file(path, SparseScoreMatrix::<f64>::read_from)?;
            for r in 0..a.runs as u64 {
                push(&sample_graph(&m, a.seed + r)?, Some(a.seed + r));
            }
        }
        None => {
            if a.graph.is_empty() {
                return Err(CliError::Usage(
                    "give --matrix or at least one --graph".into(),
                ));
            }
            for path in &a.graph {
                rec.input(path);
                push(&read_file(path, UndirectedGraph::read_from)?, None);
            }
        }
    }
    write_file(&a.out, |w| reports::write_summary(&runs, w))?;
    rec.output(&a.out);
    if let Some(p) = &a.per_run {
        write_file(p, |w| reports::write_runs(&runs, w))?;
        rec.output(p);
    }
    if let (Some(p), Some(h)) = (&a.histogram, &histogram) {
        write_file(p, |w| reports::write_histogram(h, w))?;
        rec.output(p);
    }
    let c: Vec<f64> = runs.iter().map(|r| r.clustering).collect();
    let (mean, ci) = sspmi::graph::mean_ci95(&c);
    println!(
        "C = {} ± {} over {} graph(s)",
        format_sig(mean, 4),
        format_sig(ci, 2),
        runs.len()
    );
    rec.write(&manifest_path_for(&a.out))
}

pub fn graph_spectrum(a: &GraphSpectrumArgs) -> Result<()> {
    let mut rec = Recorder::new("graph-spectrum", Some(a.seed), settings(a));
    let g = match (&a.graph, &a.matrix) {
        (Some(p), _) => {
            rec.input(p);
            read_file(p, UndirectedGraph::read_from)?
        }
        (None, Some(p)) => {
            rec.input(p);
            sample_graph(&read_file(p, SparseScoreMatrix::<f64>::read_from)?, a.seed)?
        }
        (None, None) => return Err(CliError::Usage("give --graph or --matrix".into())),
    };
    let ev: Vec<f64> = spectrum(&g, a.max_n)?;
    write_file(&a.out, |w| reports::write_spectrum(&ev, w))?;
    rec.output(&a.out);
    match semicircle_ks(&ev, g.n(), g.m()) {
        Ok(ks) => println!("n={} semicircle KS {}", g.n(), format_sig(ks, 4)),
        Err(e) => println!("n={} semicircle KS unavailable: {e}", g.n()),
    }
    rec.write(&manifest_path_for(&a.out))
}

pub fn rhg(a: &RhgArgs) -> Result<()> {
    let mut rec = Recorder::new("rhg", Some(a.seed), settings(a));
    let mut model = match a.radius {
        Some(r) => DiskModel::new(a.n, r, a.c, a.seed)?,
        None => DiskModel::for_mean_degree(a.n, a.mean_degree, a.c, a.seed)?,
    };
    model.max_nodes = a.max_nodes;
    let (points, g) = generate_rhg(&model)?;
    write_file(&a.out, |w| g.write_to(w))?;
    rec.output(&a.out);
    if let Some(p) = &a.points {
        write_file(p, |w| -> std::io::Result<()> {
            writeln!(w, "r,theta")?;
            for pt in &points {
                writeln!(w, "{},{}", format_sig(pt.r, 12), format_sig(pt.theta, 12))?;
            }
            Ok(())
        })?;
        rec.output(p);
    }
    let (s, _) = reports::run_stats(&g, Some(a.seed), 10.0);
    println!(
        "R={} n={} m={} mean_degree={} C={} complex={}",
        format_sig(model.radius, 6),
        s.n,
        s.m,
        format_sig(s.mean_degree, 4),
        format_sig(s.clustering, 4),
        s.is_complex
    );
    rec.write(&manifest_path_for(&a.out))
}

pub fn pdf(a: &DistancePdfArgs) -> Result<()> {
    let mut rec = Recorder::new("distance-pdf", None, settings(a));
    let t = distance_pdf(a.radius, a.grid, a.nodes)?;
    write_file(&a.out, |w| t.write_csv(w))?;
    rec.output(&a.out);
    println!(
        "mass {} mean {}",
        format_sig(t.mass(), 8),
        format_sig(t.mean(), 6)
    );
    rec.write(&manifest_path_for(&a.out))
}

/// Radius of a disk model matching a graph's size and mean degree.
pub fn radius_for(g: &UndirectedGraph) -> Result<f64> {
    let mean = 2.0 * g.m() as f64 / g.n().max(1) as f64;
    Ok(radius_from_graph(g.n(), mean)?)
}

pub fn compare(a: &CompareArgs) -> Result<()> {
    let mut rec = Recorder::new("compare", None, settings(a));
    rec.input(&a.matrix);
    let m = read_file(&a.matrix, SparseScoreMatrix::<f64>::read_from)?;
    if m.kind() != ScoreKind::Spmi {
        eprintln!(
            "warning: comparing {} values; the model describes shifted PMI",
            m.kind()
        );
    }
    let radius = match (a.radius, &a.graph) {
        (Some(r), _) => r,
        (None, Some(p)) => {
            rec.input(p);
            radius_for(&read_file(p, UndirectedGraph::read_from)?)?
        }
        (None, None) => return Err(CliError::Usage("give --radius or --graph".into())),
    };
    let t = distance_pdf(radius, a.grid, a.nodes)?;
    let values: Vec<f64> = m.entries().iter().map(|e| e.2).collect();
    let report = compare_spmi_to_hyperbolic(&values, radius, &t, a.bins)?;
    write_file(&a.out, |w| report.write_csv(w))?;
    rec.output(&a.out);
    println!(
        "R={} delta_shift={}",
        format_sig(radius, 6),
        format_sig(report.delta, 6)
    );
    rec.write(&manifest_path_for(&a.out))
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let mut rec = Recorder::new("synth-corpus", Some(a.seed), settings(a));
    let model = TopicCorpus {
        vocab_size: a.vocab_size,
        topics: a.topics,
        tokens: a.tokens,
        doc_len: a.doc_len,
        topic_weight: a.topic_weight,
        zipf_exponent: a.zipf_exponent,
        seed: a.seed,
    };
    let tokens = model.generate()?;
    write_file(&a.out, |w| -> std::io::Result<()> {
        for doc in tokens.chunks(a.doc_len) {
            writeln!(w, "{}", doc.join(" "))?;
        }
        Ok(())
    })?;
    rec.output(&a.out);
    rec.write(&manifest_path_for(&a.out))
}
