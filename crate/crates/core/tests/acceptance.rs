//! One test per acceptance criterion, each printing a single
//! `[criterion N] PASS|FAIL ...` line.
//!
//! Criteria that need the text8 corpus and the word benchmarks read them
//! from the directory named by `SSPMI_DATA_DIR` (`text8`, `wordsim353.txt`,
//! `questions-words.txt`). Without those files they fail and say why.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sspmi::corpus::{build_vocab, count_cooccurrences, read_tokens, Vocabulary};
use sspmi::eval::{
    evaluate_analogy_3cosadd, evaluate_similarity, AnalogyDataset, SimilarityDataset,
};
use sspmi::factorization::{
    embeddings_from_svd, truncated_svd, truncated_svd_operator, SvdOptions,
};
use sspmi::graph::*;
use sspmi::hyperbolic::*;
use sspmi::linalg::{CsrMatrix, SparseOperator};
use sspmi::matrix::{pmi_matrix, transform, ScoreKind, SparseScoreMatrix};
use sspmi::trainers::*;

const OPTIMUM_TOL: f64 = 1e-6;
const WORDSIM_SIGMA_SPMI: (f64, f64) = (0.657, 0.05);
const ANALOGY_SIGMA_SPMI: (f64, f64) = (0.294, 0.06);
const SGNS_WORDSIM_MIN: f64 = 0.60;
const NONSIGMOID_WORDSIM_MIN: f64 = 0.58;
const GRAPH_CLUSTERING: (f64, f64) = (0.1341, 0.01);
const GRAPH_DENSITY: (f64, f64) = (0.0014, 0.0005);
const CLUSTERING_RATIO_MIN: f64 = 50.0;
const POWER_LAW_KS: f64 = 0.1;
const ER_POWER_LAW_KS_MIN: f64 = 0.05;
const SEMICIRCLE_KS_ER: f64 = 0.05;
const SEMICIRCLE_KS_SIGMA_SPMI_MIN: f64 = 0.1;
const TRACE_TOL: f64 = 1e-6;
const PDF_MASS_TOL: f64 = 1e-3;
const PDF_KS: f64 = 0.01;
const RSVD_EXCESS: f64 = 0.05;
const GRADIENT_TOL: f64 = 1e-4;

fn report(criterion: u32, ok: bool, detail: &str) {
    println!(
        "[criterion {criterion}] {} {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion}: {detail}");
}

fn data_file(name: &str) -> Result<PathBuf, String> {
    let dir = std::env::var("SSPMI_DATA_DIR")
        .map_err(|_| format!("SSPMI_DATA_DIR is not set, {name} unavailable"))?;
    let path = PathBuf::from(dir).join(name);
    if path.is_file() {
        Ok(path)
    } else {
        Err(format!("{} not found", path.display()))
    }
}

struct Text8 {
    vocab: Vocabulary,
    ids: Vec<u32>,
}

fn load_text8(min_count: u64) -> Result<Text8, String> {
    let path = data_file("text8")?;
    let file = File::open(&path).map_err(|e| e.to_string())?;
    let tokens = read_tokens(BufReader::new(file)).map_err(|e| e.to_string())?;
    let vocab = build_vocab(tokens.iter(), min_count).map_err(|e| e.to_string())?;
    let ids = vocab.encode(&tokens);
    Ok(Text8 { vocab, ids })
}

fn benchmarks() -> Result<(SimilarityDataset, AnalogyDataset), String> {
    let open = |name: &str| -> Result<BufReader<File>, String> {
        Ok(BufReader::new(
            File::open(data_file(name)?).map_err(|e| e.to_string())?,
        ))
    };
    let ws = SimilarityDataset::read_from("wordsim353", open("wordsim353.txt")?)
        .map_err(|e| e.to_string())?;
    let an = AnalogyDataset::read_from("google", open("questions-words.txt")?)
        .map_err(|e| e.to_string())?;
    Ok((ws, an))
}

/// Shifted PMI and σSPMI for text8 with window 2 and k = 5.
fn text8_matrices(t: &Text8) -> Result<(SparseScoreMatrix<f64>, SparseScoreMatrix<f64>), String> {
    let counts = count_cooccurrences(&t.ids, &t.vocab, 2).map_err(|e| e.to_string())?;
    let pmi = pmi_matrix::<f64>(&counts).map_err(|e| e.to_string())?;
    let spmi = transform(&pmi, ScoreKind::Spmi, 5.0).map_err(|e| e.to_string())?;
    let sigma = transform(&pmi, ScoreKind::SigmaSpmi, 5.0).map_err(|e| e.to_string())?;
    Ok((spmi, sigma))
}

/// Argmax of `a log x + b log(1 - x)` by a grid scan refined with bisection.
fn brute_force_argmax(a: f64, b: f64) -> f64 {
    let f = |x: f64| a * x.ln() + b * (1.0 - x).ln();
    let steps = 20_000;
    let best = (1..steps)
        .max_by(|&s, &t| {
            f(s as f64 / steps as f64)
                .partial_cmp(&f(t as f64 / steps as f64))
                .unwrap()
        })
        .unwrap();
    let mut lo = ((best - 1) as f64 / steps as f64).max(f64::MIN_POSITIVE);
    let mut hi = ((best + 1) as f64 / steps as f64).min(1.0 - 1e-16);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if a / mid - b / (1.0 - mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn criterion_1_pointwise_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p_i = rng.gen_range(1e-3..1.0);
        let p_j = rng.gen_range(1e-3..1.0);
        let p_ij = rng.gen_range(1e-4..0.2);
        let k = rng.gen_range(0.5..20.0);
        let got = nsgns_pointwise_optimum(p_ij, p_i, p_j, k).unwrap();
        worst = worst.max((got - brute_force_argmax(p_ij, k * p_i * p_j)).abs());
    }
    report(
        1,
        worst < OPTIMUM_TOL,
        &format!("max |x* - argmax| = {worst:.2e} over 1000 tuples (tol {OPTIMUM_TOL:e})"),
    );
}

fn criterion_2_run() -> Result<String, String> {
    let (ws, an) = benchmarks()?;
    let t = load_text8(5)?;
    let counts = count_cooccurrences(&t.ids, &t.vocab, 2).map_err(|e| e.to_string())?;
    let pmi = pmi_matrix::<f64>(&counts).map_err(|e| e.to_string())?;
    let opts = SvdOptions::new(300);
    let mut wordsim = Vec::new();
    let mut sigma_analogy = 0.0;
    for kind in [
        ScoreKind::SigmaSpmi,
        ScoreKind::Bspmi,
        ScoreKind::Pspmi,
        ScoreKind::Spmi,
    ] {
        let m = transform(&pmi, kind, 5.0).map_err(|e| e.to_string())?;
        let svd = truncated_svd(&m, &opts).map_err(|e| e.to_string())?;
        let emb = embeddings_from_svd(&svd, &t.vocab).map_err(|e| e.to_string())?;
        wordsim.push(
            evaluate_similarity(&emb, &ws, false)
                .map_err(|e| e.to_string())?
                .value,
        );
        if kind == ScoreKind::SigmaSpmi {
            sigma_analogy = evaluate_analogy_3cosadd(&emb, &an, false)
                .map_err(|e| e.to_string())?
                .value;
        }
    }
    let (sigma, binary, positive, shifted) = (wordsim[0], wordsim[1], wordsim[2], wordsim[3]);
    let detail = format!(
        "WordSim σSPMI {sigma:.3} BSPMI {binary:.3} PSPMI {positive:.3} SPMI {shifted:.3}, analogy σSPMI {sigma_analogy:.3}"
    );
    let ok = (sigma - WORDSIM_SIGMA_SPMI.0).abs() <= WORDSIM_SIGMA_SPMI.1
        && (sigma_analogy - ANALOGY_SIGMA_SPMI.0).abs() <= ANALOGY_SIGMA_SPMI.1
        && sigma > binary
        && positive > shifted;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

#[test]
fn criterion_2_matrix_route_benchmarks() {
    match criterion_2_run() {
        Ok(d) => report(2, true, &d),
        Err(d) => report(2, false, &d),
    }
}

fn criterion_3_run() -> Result<String, String> {
    let (ws, _) = benchmarks()?;
    let t = load_text8(5)?;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let cfg = TrainConfig {
        workers,
        ..TrainConfig::default()
    };
    let sgns = train_sgns::<f32>(&t.ids, &t.vocab, &cfg).map_err(|e| e.to_string())?;
    let nsgns = train_nonsigmoid_sgns::<f32>(&t.ids, &t.vocab, &cfg).map_err(|e| e.to_string())?;
    let a = evaluate_similarity(&sgns.embeddings, &ws, false)
        .map_err(|e| e.to_string())?
        .value;
    let b = evaluate_similarity(&nsgns.embeddings, &ws, false)
        .map_err(|e| e.to_string())?
        .value;
    let detail = format!("WordSim SGNS {a:.3} (min {SGNS_WORDSIM_MIN}), nonsigmoid {b:.3} (min {NONSIGMOID_WORDSIM_MIN})");
    if a >= SGNS_WORDSIM_MIN && b >= NONSIGMOID_WORDSIM_MIN {
        Ok(detail)
    } else {
        Err(detail)
    }
}

#[test]
fn criterion_3_trainer_route_benchmarks() {
    match criterion_3_run() {
        Ok(d) => report(3, true, &d),
        Err(d) => report(3, false, &d),
    }
}

fn criterion_4_run() -> Result<String, String> {
    let t = load_text8(5)?;
    let (_, sigma) = text8_matrices(&t)?;
    let mut clustering = Vec::new();
    let mut density = Vec::new();
    for seed in 0..10 {
        let g = sample_graph(&sigma, seed).map_err(|e| e.to_string())?;
        let d = degree_stats(&g);
        clustering.push(clustering_coefficient(&g).average);
        density.push(d.mean_degree / g.n() as f64);
    }
    let (c, c_ci) = mean_ci95(&clustering);
    let (k, k_ci) = mean_ci95(&density);
    let ratio = c / k;
    let detail = format!(
        "C = {c:.4} ± {c_ci:.4}, k/n = {k:.5} ± {k_ci:.5}, ratio {ratio:.1} over 10 graphs"
    );
    let ok = (c - GRAPH_CLUSTERING.0).abs() <= GRAPH_CLUSTERING.1
        && (k - GRAPH_DENSITY.0).abs() <= GRAPH_DENSITY.1
        && ratio > CLUSTERING_RATIO_MIN;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

#[test]
fn criterion_4_sigma_spmi_graph_statistics() {
    match criterion_4_run() {
        Ok(d) => report(4, true, &d),
        Err(d) => report(4, false, &d),
    }
}

/// Whether a degree sequence is rejected as scale-free, with a description.
fn er_rejected(degrees: &[usize]) -> (bool, String) {
    match fit_power_law(degrees) {
        Ok(fit) => (
            fit.ks >= ER_POWER_LAW_KS_MIN,
            format!("ER fit KS {:.3}", fit.ks),
        ),
        Err(e) => (true, format!("ER fit failure ({e})")),
    }
}

fn criterion_5_run() -> Result<String, String> {
    let t = load_text8(5)?;
    let (_, sigma) = text8_matrices(&t)?;
    let g = sample_graph(&sigma, 0).map_err(|e| e.to_string())?;
    let deg = degree_stats(&g);
    let fit = fit_power_law(&deg.degrees).map_err(|e| format!("text8 fit failure: {e}"))?;
    let p = deg.mean_degree / (g.n() - 1) as f64;
    let er = erdos_renyi(g.n(), p, 1).map_err(|e| e.to_string())?;
    let (rejected, matched) = er_rejected(&degree_stats(&er).degrees);
    let detail = format!(
        "text8 γ = {:.2}, k_min {}, KS {:.3}; matched {matched}",
        fit.gamma, fit.k_min, fit.ks
    );
    if fit.ks < POWER_LAW_KS && rejected {
        Ok(detail)
    } else {
        Err(detail)
    }
}

#[test]
fn criterion_5_degree_power_law() {
    // Erdős–Rényi at the reported density of the text8 graph.
    let er = erdos_renyi(10_000, GRAPH_DENSITY.0, 3).unwrap();
    let (rejected, er_detail) = er_rejected(&degree_stats(&er).degrees);
    if !rejected {
        report(
            5,
            false,
            &format!("Erdős–Rényi accepted as scale-free: {er_detail}"),
        );
    }
    match criterion_5_run() {
        Ok(d) => report(5, true, &format!("{d}; {er_detail}")),
        Err(d) => report(5, false, &format!("{d}; {er_detail}")),
    }
}

/// Largest relative violation of the three trace identities.
fn trace_error(g: &UndirectedGraph, eigenvalues: &[f64]) -> f64 {
    let triangles: u64 = clustering_coefficient(g).triangles.iter().sum::<u64>() / 3;
    let scale: f64 = eigenvalues.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
    let first = eigenvalues.iter().sum::<f64>().abs() / scale;
    let two_m = 2.0 * g.m() as f64;
    let second = (eigenvalues.iter().map(|x| x * x).sum::<f64>() - two_m).abs() / two_m.max(1.0);
    let six_t = 6.0 * triangles as f64;
    let third = (eigenvalues.iter().map(|x| x * x * x).sum::<f64>() - six_t).abs() / six_t.max(1.0);
    first.max(second).max(third)
}

fn criterion_6_run() -> Result<String, String> {
    let t = load_text8(100)?;
    let (_, sigma) = text8_matrices(&t)?;
    let g = sample_graph(&sigma, 0).map_err(|e| e.to_string())?;
    let ev: Vec<f64> = spectrum(&g, 15_000).map_err(|e| e.to_string())?;
    let ks = semicircle_ks(&ev, g.n(), g.m()).map_err(|e| e.to_string())?;
    let trace = trace_error(&g, &ev);
    let detail = format!(
        "σSPMI graph n = {} semicircle KS {ks:.3}, trace error {trace:.1e}",
        g.n()
    );
    if ks >= SEMICIRCLE_KS_SIGMA_SPMI_MIN && trace <= TRACE_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

#[test]
fn criterion_6_spectrum_against_semicircle() {
    let er = erdos_renyi(2000, 0.02, 6).unwrap();
    let ev: Vec<f64> = spectrum(&er, 15_000).unwrap();
    let ks = semicircle_ks(&ev, er.n(), er.m()).unwrap();
    let trace = trace_error(&er, &ev);
    let er_detail = format!("ER(2000, 0.02) KS {ks:.4}, trace error {trace:.1e}");
    if ks >= SEMICIRCLE_KS_ER || trace > TRACE_TOL {
        report(6, false, &er_detail);
    }
    match criterion_6_run() {
        Ok(d) => report(6, true, &format!("{d}; {er_detail}")),
        Err(d) => report(6, false, &format!("{d}; {er_detail}")),
    }
}

#[test]
fn criterion_7_distance_pdf() {
    let pairs = 100_000;
    let mut lines = Vec::new();
    let mut ok = true;
    for (idx, radius) in [5.0, 10.0, 15.0].into_iter().enumerate() {
        let table = distance_pdf(radius, DEFAULT_GRID_POINTS, DEFAULT_QUADRATURE_NODES).unwrap();
        let pts = sample_disk(2 * pairs, radius, 700 + idx as u64).unwrap();
        let mut d: Vec<f64> = pts
            .chunks(2)
            .map(|p| hyperbolic_distance(p[0], p[1]))
            .collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ks = ks_against(&d, |x| table.cdf(x));
        ok &= (table.mass() - 1.0).abs() <= PDF_MASS_TOL && ks < PDF_KS;
        lines.push(format!(
            "R = {radius}: mass {:.6}, KS {ks:.4}",
            table.mass()
        ));
    }
    report(7, ok, &lines.join("; "));
}

fn criterion_8_run() -> Result<String, String> {
    let t = load_text8(5)?;
    let (spmi, sigma) = text8_matrices(&t)?;
    let g = sample_graph(&sigma, 0).map_err(|e| e.to_string())?;
    let radius =
        radius_from_graph(g.n(), degree_stats(&g).mean_degree).map_err(|e| e.to_string())?;
    let table = distance_pdf(radius, DEFAULT_GRID_POINTS, DEFAULT_QUADRATURE_NODES)
        .map_err(|e| e.to_string())?;
    let values: Vec<f64> = spmi.entries().iter().map(|e| e.2).collect();
    let rep =
        compare_spmi_to_hyperbolic(&values, radius, &table, 100).map_err(|e| e.to_string())?;
    let detail = format!("text8 R = {radius:.3}, Δ = {:.4}", rep.delta);
    if rep.delta > 0.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

#[test]
fn criterion_8_hyperbolic_model() {
    let model = DiskModel::for_mean_degree(5000, 10.0, 1.0, 8).unwrap();
    let (_, g) = generate_rhg(&model).unwrap();
    let stats = network_stats(&g);
    let verdict = is_complex_network(&stats, 10.0);
    let rhg_detail = format!(
        "RHG n = 5000 k = {:.2} C = {:.3} complex = {}",
        stats.mean_degree, stats.clustering, verdict.is_complex
    );
    if !verdict.is_complex {
        report(8, false, &format!("{rhg_detail}: {}", verdict.reason));
    }
    match criterion_8_run() {
        Ok(d) => report(8, true, &format!("{d}; {rhg_detail}")),
        Err(d) => report(8, false, &format!("{d}; {rhg_detail}")),
    }
}

fn random_square(n: usize, seed: u64) -> (CsrMatrix<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dense = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let triplets = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (i as u32, j as u32, dense[(i, j)]))
        .collect();
    (CsrMatrix::from_triplets(n, n, triplets), dense)
}

/// Central differences of `pair_objective` for every coordinate of every vector.
fn finite_difference(obj: Objective, w: &[f64], c: &[f64], noise: &[Vec<f64>]) -> Vec<f64> {
    let h = 1e-6;
    let eval = |w: &[f64], c: &[f64], noise: &[Vec<f64>]| {
        let refs: Vec<&[f64]> = noise.iter().map(Vec::as_slice).collect();
        pair_objective(obj, w, c, &refs)
    };
    let mut out = Vec::new();
    for which in 0..2 + noise.len() {
        let dim = w.len();
        for q in 0..dim {
            let (mut wp, mut cp, mut np) = (w.to_vec(), c.to_vec(), noise.to_vec());
            let (mut wm, mut cm, mut nm) = (w.to_vec(), c.to_vec(), noise.to_vec());
            match which {
                0 => {
                    wp[q] += h;
                    wm[q] -= h;
                }
                1 => {
                    cp[q] += h;
                    cm[q] -= h;
                }
                r => {
                    np[r - 2][q] += h;
                    nm[r - 2][q] -= h;
                }
            }
            out.push((eval(&wp, &cp, &np) - eval(&wm, &cm, &nm)) / (2.0 * h));
        }
    }
    out
}

#[test]
fn criterion_9_numerical_infrastructure() {
    let mut worst_svd = 0.0f64;
    for seed in 0..20 {
        let (csr, dense) = random_square(200, seed);
        let rank = 10 + 2 * seed as usize;
        let opts = SvdOptions {
            seed,
            ..SvdOptions::new(rank)
        };
        let svd = truncated_svd_operator(&SparseOperator::new(csr), &opts).unwrap();
        let recon = svd.reconstruct();
        let err = DMatrix::from_fn(200, 200, |i, j| dense[(i, j)] - recon[(i, j)]).norm();
        let exact = dense.svd(false, false).singular_values;
        let tail = exact.iter().skip(rank).map(|s| s * s).sum::<f64>().sqrt();
        worst_svd = worst_svd.max(err / tail - 1.0);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_grad = 0.0f64;
    let dim = 8;
    let mut points = 0;
    while points < 100 {
        let (obj, scale) = if points % 2 == 0 {
            (Objective::Sgns, 1.0)
        } else {
            (Objective::Nonsigmoid { clamp_eps: 1e-7 }, 0.5)
        };
        let vec = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..dim)
                .map(|_| {
                    if scale < 1.0 {
                        rng.gen_range(0.0..scale)
                    } else {
                        rng.gen_range(-scale..scale)
                    }
                })
                .collect()
        };
        let w = vec(&mut rng);
        let c = vec(&mut rng);
        let noise: Vec<Vec<f64>> = (0..3).map(|_| vec(&mut rng)).collect();
        // Keep nonsigmoid dot products away from the clamp boundaries.
        let interior = |v: &[f64]| {
            let x: f64 = w.iter().zip(v).map(|(a, b)| a * b).sum();
            (0.05..0.95).contains(&x)
        };
        if matches!(obj, Objective::Nonsigmoid { .. })
            && !(interior(&c) && noise.iter().all(|n| interior(n)))
        {
            continue;
        }
        let refs: Vec<&[f64]> = noise.iter().map(Vec::as_slice).collect();
        let g = pair_gradient(obj, &w, &c, &refs);
        let analytic: Vec<f64> =
            g.w.iter()
                .chain(&g.context)
                .chain(g.noise.iter().flatten())
                .copied()
                .collect();
        let numeric = finite_difference(obj, &w, &c, &noise);
        let diff = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let size = analytic
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
            .max(1e-12);
        worst_grad = worst_grad.max(diff / size);
        points += 1;
    }

    report(
        9,
        worst_svd <= RSVD_EXCESS && worst_grad <= GRADIENT_TOL,
        &format!(
            "rSVD worst excess error {:.3}% over 20 matrices (tol 5%), worst gradient relative error {worst_grad:.1e} at 100 points",
            100.0 * worst_svd
        ),
    );
}
