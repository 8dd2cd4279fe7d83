//! The end-to-end run: corpus to embeddings, benchmarks, graphs and the
//! hyperbolic comparison, with fixed artifact names under `output_dir`.

use std::io::Write;
use std::path::{Path, PathBuf};

use sspmi::corpus::{build_vocab, count_cooccurrences};
use sspmi::eval::write_report;
use sspmi::factorization::SvdOptions;
use sspmi::graph::{sample_graph, semicircle_ks, spectrum};
use sspmi::hyperbolic::{
    compare_spmi_to_hyperbolic, distance_pdf, generate_rhg, DiskModel, DEFAULT_MAX_NODES,
};
use sspmi::matrix::{pmi_matrix, transform, ScoreKind};
use sspmi::textio::format_sig;
use sspmi::trainers::TrainConfig;

use crate::commands::{
    capped_workers, evaluate, factorize, load_benchmarks, radius_for, read_corpus, run_trainer,
    write_embeddings, write_file,
};
use crate::config::{PipelineConfig, TrainerChoice};
use crate::error::{CliError, Result};
use crate::manifest::Recorder;
use crate::reports;

/// Headline numbers, written as `key = value` lines to `summary.txt`.
#[derive(Default)]
struct Summary(Vec<(String, String)>);

impl Summary {
    fn add(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }
}

pub fn run(cfg: &PipelineConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|source| CliError::File {
        path: dir.clone(),
        source,
    })?;
    let path = |name: &str| dir.join(name);
    let settings = serde_json::Value::Object(
        cfg.serialize()
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), serde_json::Value::String(v.to_string())))
            .collect(),
    );
    let mut rec = Recorder::new("pipeline", Some(cfg.graph_seed), settings);
    let mut summary = Summary::default();

    write_file(&path("config.cfg"), |w| {
        w.write_all(cfg.serialize().as_bytes())
    })?;
    rec.output(&path("config.cfg"));

    rec.input(&cfg.corpus_path);
    let tokens = read_corpus(&cfg.corpus_path)?;
    let vocab = build_vocab(tokens.iter(), cfg.min_count)?;
    write_file(&path("vocab.tsv"), |w| vocab.write_to(w))?;
    rec.output(&path("vocab.tsv"));
    summary.add("tokens", tokens.len());
    summary.add("vocabulary", vocab.len());

    let ids = vocab.encode(&tokens);
    drop(tokens);
    let counts = count_cooccurrences(&ids, &vocab, cfg.window)?;
    write_file(&path("cooc.tsv"), |w| counts.write_to(w))?;
    rec.output(&path("cooc.tsv"));

    let pmi = pmi_matrix::<f64>(&counts)?;
    let mut matrices = vec![(cfg.kind, transform(&pmi, cfg.kind, cfg.shift_k)?)];
    for kind in [ScoreKind::SigmaSpmi, ScoreKind::Spmi] {
        if kind != cfg.kind {
            matrices.push((kind, transform(&pmi, kind, cfg.shift_k)?));
        }
    }
    for (kind, m) in &matrices {
        let p = path(&format!("matrix.{}.tsv", kind.name().to_lowercase()));
        write_file(&p, |w| m.write_to(w))?;
        rec.output(&p);
    }
    let find = |kind: ScoreKind| {
        &matrices
            .iter()
            .find(|(k, _)| *k == kind)
            .expect("matrix built")
            .1
    };

    // Matrix route.
    let opts = SvdOptions {
        rank: cfg.dimension,
        oversample: cfg.svd_oversample,
        power_iters: cfg.svd_power_iters,
        seed: cfg.svd_seed,
    };
    let emb = factorize(find(cfg.kind), &vocab, &opts)?;
    write_embeddings(
        &emb,
        &path("words.svd.txt"),
        Some(&path("contexts.svd.txt")),
        &mut rec,
    )?;

    cfg.similarity
        .iter()
        .chain(&cfg.analogy)
        .for_each(|p| rec.input(p));
    let (sims, analogies) = load_benchmarks(&cfg.similarity, &cfg.analogy)?;
    let benchmarks = !(sims.is_empty() && analogies.is_empty());
    let mut report =
        |name: &str, rows: Vec<sspmi::eval::ReportRow>, rec: &mut Recorder| -> Result<()> {
            let p = path(&format!("report.{name}.csv"));
            for r in &rows {
                summary.add(
                    &format!("{name}.{}.{}", r.dataset, r.metric),
                    format_sig(r.value, 6),
                );
            }
            write_file(&p, |w| write_report(&rows, w))?;
            rec.output(&p);
            Ok(())
        };
    if benchmarks {
        report(
            "svd",
            evaluate(&emb, &sims, &analogies, cfg.use_w_plus_c)?,
            &mut rec,
        )?;
    }

    // Trainer route.
    for &trainer in &cfg.trainers {
        let name = trainer.name();
        let train_cfg = TrainConfig {
            workers: capped_workers(cfg.train.workers),
            ..cfg.train.clone()
        };
        let trained = run_trainer(
            &ids,
            &vocab,
            &train_cfg,
            trainer == TrainerChoice::Nonsigmoid,
        )?;
        let (w, c) = (
            path(&format!("words.{name}.txt")),
            path(&format!("contexts.{name}.txt")),
        );
        write_embeddings(&trained.embeddings, &w, Some(&c), &mut rec)?;
        let progress = path(&format!("progress.{name}.csv"));
        write_file(&progress, |out| trained.write_progress_csv(out))?;
        rec.output(&progress);
        if benchmarks {
            report(
                name,
                evaluate(&trained.embeddings, &sims, &analogies, cfg.use_w_plus_c)?,
                &mut rec,
            )?;
        }
    }

    // Graphs sampled from σSPMI.
    let sigma = find(ScoreKind::SigmaSpmi);
    let mut runs = Vec::new();
    let mut first = None;
    let mut histogram = Vec::new();
    for r in 0..cfg.graph_runs as u64 {
        let g = sample_graph(sigma, cfg.graph_seed + r)?;
        let (s, h) = reports::run_stats(&g, Some(cfg.graph_seed + r), cfg.complex_threshold);
        runs.push(s);
        if first.is_none() {
            histogram = h;
            first = Some(g);
        }
    }
    let graph = first.expect("at least one graph run");
    write_file(&path("graph.tsv"), |w| graph.write_to(w))?;
    write_file(&path("graph_stats.csv"), |w| {
        reports::write_summary(&runs, w)
    })?;
    write_file(&path("graph_runs.csv"), |w| reports::write_runs(&runs, w))?;
    write_file(&path("degree_histogram.csv"), |w| {
        reports::write_histogram(&histogram, w)
    })?;
    for name in [
        "graph.tsv",
        "graph_stats.csv",
        "graph_runs.csv",
        "degree_histogram.csv",
    ] {
        rec.output(&path(name));
    }
    let clustering: Vec<f64> = runs.iter().map(|s| s.clustering).collect();
    let density: Vec<f64> = runs.iter().map(|s| s.density).collect();
    let (c, c_ci) = sspmi::graph::mean_ci95(&clustering);
    let (k, k_ci) = sspmi::graph::mean_ci95(&density);
    summary.add(
        "graph.clustering",
        format!("{} ± {}", format_sig(c, 6), format_sig(c_ci, 3)),
    );
    summary.add(
        "graph.density",
        format!("{} ± {}", format_sig(k, 6), format_sig(k_ci, 3)),
    );
    summary.add("graph.is_complex", runs[0].is_complex);

    if graph.n() <= cfg.spectrum_cap {
        let ev: Vec<f64> = spectrum(&graph, cfg.spectrum_cap)?;
        write_file(&path("spectrum.txt"), |w| reports::write_spectrum(&ev, w))?;
        rec.output(&path("spectrum.txt"));
        if let Ok(ks) = semicircle_ks(&ev, graph.n(), graph.m()) {
            summary.add("graph.semicircle_ks", format_sig(ks, 6));
        }
    } else {
        summary.add("graph.semicircle_ks", "skipped: graph above spectrum_cap");
    }

    // Hyperbolic model at the same size and mean degree.
    let radius = radius_for(&graph)?;
    summary.add("hyperbolic.radius", format_sig(radius, 8));
    if graph.n() <= DEFAULT_MAX_NODES {
        let model = DiskModel::new(graph.n(), radius, cfg.rhg_c, cfg.graph_seed)?;
        let (_, rhg) = generate_rhg(&model)?;
        let (s, _) = reports::run_stats(&rhg, Some(cfg.graph_seed), cfg.complex_threshold);
        write_file(&path("rhg_stats.csv"), |w| reports::write_runs(&[s], w))?;
        rec.output(&path("rhg_stats.csv"));
    }
    let table = distance_pdf(radius, cfg.pdf_grid, cfg.pdf_nodes)?;
    write_file(&path("distance_pdf.csv"), |w| table.write_csv(w))?;
    rec.output(&path("distance_pdf.csv"));
    let values: Vec<f64> = find(ScoreKind::Spmi)
        .entries()
        .iter()
        .map(|e| e.2)
        .collect();
    let cmp = compare_spmi_to_hyperbolic(&values, radius, &table, cfg.compare_bins)?;
    write_file(&path("compare.csv"), |w| cmp.write_csv(w))?;
    rec.output(&path("compare.csv"));
    summary.add("hyperbolic.delta_shift", format_sig(cmp.delta, 6));

    write_file(&path("summary.txt"), |w| -> std::io::Result<()> {
        for (k, v) in &summary.0 {
            writeln!(w, "{k} = {v}")?;
        }
        Ok(())
    })?;
    rec.output(&path("summary.txt"));
    let manifest = path("manifest.json");
    rec.write(&manifest)?;
    for (k, v) in &summary.0 {
        println!("{k} = {v}");
    }
    Ok(manifest)
}

/// Loads the config file, applies flag overrides and resolves paths.
pub fn load(config: Option<&Path>, overrides: &[(String, String)]) -> Result<PipelineConfig> {
    let mut cfg = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::File {
                path: p.to_path_buf(),
                source,
            })?;
            let mut cfg = PipelineConfig::parse(&text)?;
            cfg.resolve_paths(p.parent().unwrap_or(Path::new(".")));
            cfg
        }
        None => PipelineConfig::default(),
    };
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    Ok(cfg)
}
