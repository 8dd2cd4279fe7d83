//! Random graphs induced by connection-probability matrices and the
//! statistics used to decide whether a graph is a complex network.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, DenseMatrix};
use crate::matrix::SparseScoreMatrix;
use crate::scalar::Real;
use crate::textio::{numbered_lines, parse_field};

/// Simple undirected graph with sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    adjacency: Vec<Vec<u32>>,
    m: usize,
}

impl UndirectedGraph {
    pub fn empty(n: usize) -> Self {
        UndirectedGraph {
            adjacency: vec![Vec::new(); n],
            m: 0,
        }
    }

    /// Rejects self-loops, out-of-range endpoints and repeated edges.
    pub fn from_edges<I: IntoIterator<Item = (u32, u32)>>(n: usize, edges: I) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        let mut m = 0;
        for (a, b) in edges {
            if a == b {
                return Err(Error::domain(format!("self-loop at vertex {a}")));
            }
            if a as usize >= n || b as usize >= n {
                return Err(Error::domain(format!(
                    "edge ({a},{b}) outside {n} vertices"
                )));
            }
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
            m += 1;
        }
        for (v, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::domain(format!("repeated edge at vertex {v}")));
            }
        }
        Ok(UndirectedGraph { adjacency, m })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&(b as u32)).is_ok()
    }

    /// Edges `(i, j)` with `i < j` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, list)| {
            list.iter()
                .filter(move |&&j| j as usize > i)
                .map(move |&j| (i as u32, j))
        })
    }

    /// Writes the `n m` header and one `i<TAB>j` line per edge.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.n(), self.m)?;
        for (i, j) in self.edges() {
            writeln!(out, "{i}\t{j}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = numbered_lines(reader);
        let (no, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing header"))??;
        let mut h = header.split_whitespace();
        let n: usize = parse_field(h.next(), no, "n")?;
        let m: usize = parse_field(h.next(), no, "m")?;
        let mut edges = Vec::with_capacity(m);
        for line in lines {
            let (no, line) = line?;
            let mut f = line.split('\t');
            let i: u32 = parse_field(f.next(), no, "i")?;
            let j: u32 = parse_field(f.next(), no, "j")?;
            edges.push((i, j));
        }
        if edges.len() != m {
            return Err(Error::parse(
                1,
                format!("header promises {m} edges, found {}", edges.len()),
            ));
        }
        Self::from_edges(n, edges)
    }
}

/// Counter-based uniform draws: the value for pair `(i, j)` depends only on
/// the seed and the pair, never on the order pairs are visited.
#[derive(Clone, Copy, Debug)]
pub struct PairRandom {
    seed: u64,
}

impl PairRandom {
    pub fn new(seed: u64) -> Self {
        PairRandom { seed }
    }

    /// Uniform in `[0, 1)` for the pair `(i, j)`, `i < j`.
    pub fn uniform(&self, i: u32, j: u32) -> f64 {
        self.row_from(i, j).gen()
    }

    /// Generator positioned at pair `(i, j)`; successive draws belong to
    /// `(i, j+1)`, `(i, j+2)`, …
    pub fn row_from(&self, i: u32, j: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        rng.set_word_pos(2 * j as u128);
        rng
    }
}

/// Includes each stored off-diagonal cell `(i, j)` as an edge with
/// probability equal to its value. Unstored cells have probability zero.
pub fn sample_graph<T: Real>(probs: &SparseScoreMatrix<T>, seed: u64) -> Result<UndirectedGraph> {
    if let Some(&(i, j, p)) = probs
        .entries()
        .iter()
        .find(|&&(_, _, p)| !(p >= T::zero() && p < T::one()))
    {
        return Err(Error::domain(format!(
            "probability {p} at ({i},{j}) is outside [0, 1)"
        )));
    }
    let draw = PairRandom::new(seed);
    let edges: Vec<(u32, u32)> = probs
        .entries()
        .par_iter()
        .filter(|&&(i, j, p)| i != j && draw.uniform(i, j) < p.as_f64())
        .map(|&(i, j, _)| (i, j))
        .collect();
    UndirectedGraph::from_edges(probs.n(), edges)
}

/// Binomial random graph `G(n, p)`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<UndirectedGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!(
            "edge probability {p} outside [0, 1]"
        )));
    }
    let draw = PairRandom::new(seed);
    let rows: Vec<Vec<(u32, u32)>> = (0..n as u32)
        .into_par_iter()
        .map(|i| {
            let mut rng = draw.row_from(i, i + 1);
            (i + 1..n as u32)
                .filter(|_| rng.gen::<f64>() < p)
                .map(|j| (i, j))
                .collect()
        })
        .collect();
    UndirectedGraph::from_edges(n, rows.into_iter().flatten())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegreeStats {
    pub degrees: Vec<usize>,
    pub mean_degree: f64,
    /// `(degree, number of vertices)` for every degree that occurs, ascending.
    pub histogram: Vec<(usize, usize)>,
}

pub fn degree_stats(g: &UndirectedGraph) -> DegreeStats {
    let degrees: Vec<usize> = (0..g.n()).map(|v| g.degree(v)).collect();
    let mean_degree = if g.n() == 0 {
        0.0
    } else {
        2.0 * g.m() as f64 / g.n() as f64
    };
    let mut sorted = degrees.clone();
    sorted.sort_unstable();
    let mut histogram: Vec<(usize, usize)> = Vec::new();
    for d in sorted {
        match histogram.last_mut() {
            Some((k, c)) if *k == d => *c += 1,
            _ => histogram.push((d, 1)),
        }
    }
    DegreeStats {
        degrees,
        mean_degree,
        histogram,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    /// Mean of the local coefficients over all vertices.
    pub average: f64,
    /// `C(i)`; zero for vertices of degree below two.
    pub local: Vec<f64>,
    /// Number of triangles through each vertex.
    pub triangles: Vec<u64>,
}

/// Exact clustering coefficient via per-vertex triangle counts.
///
/// Edges are oriented from lower to higher `(degree, id)` rank and each
/// triangle is found once by intersecting sorted out-lists.
pub fn clustering_coefficient(g: &UndirectedGraph) -> Clustering {
    let n = g.n();
    let rank = |v: usize| (g.degree(v), v);
    let out: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|v| {
            g.neighbors(v)
                .iter()
                .copied()
                .filter(|&u| rank(u as usize) > rank(v))
                .collect()
        })
        .collect();

    let triangles = (0..n)
        .into_par_iter()
        .fold(
            || vec![0u64; n],
            |mut acc, v| {
                for &u in &out[v] {
                    for w in intersect_sorted(&out[v], &out[u as usize]) {
                        acc[v] += 1;
                        acc[u as usize] += 1;
                        acc[w as usize] += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    let local: Vec<f64> = triangles
        .iter()
        .enumerate()
        .map(|(v, &t)| {
            let d = g.degree(v) as f64;
            if d < 2.0 {
                0.0
            } else {
                2.0 * t as f64 / (d * (d - 1.0))
            }
        })
        .collect();
    let average = if n == 0 {
        0.0
    } else {
        local.iter().sum::<f64>() / n as f64
    };
    Clustering {
        average,
        local,
        triangles,
    }
}

fn intersect_sorted<'a>(a: &'a [u32], b: &'a [u32]) -> impl Iterator<Item = u32> + 'a {
    let (mut i, mut j) = (0, 0);
    std::iter::from_fn(move || {
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let x = a[i];
                    i += 1;
                    j += 1;
                    return Some(x);
                }
            }
        }
        None
    })
}

/// Smallest tail (and smallest number of positive degrees) a fit accepts.
pub const MIN_TAIL: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct PowerLawFit {
    /// Estimated exponent `γ` of `p(k) ∝ k^-γ`.
    pub gamma: f64,
    pub k_min: usize,
    /// Kolmogorov–Smirnov distance between the tail and the fitted law.
    pub ks: f64,
    pub n_tail: usize,
}

/// Discrete power-law fit by the continuous-approximation maximum
/// likelihood estimator, choosing `k_min` to minimise the KS distance.
///
/// A `k_min` is eligible when its tail holds at least [`MIN_TAIL`]
/// vertices and spans at least one decade (`max degree ≥ 10·k_min`).
pub fn fit_power_law(degrees: &[usize]) -> Result<PowerLawFit> {
    let mut positive: Vec<usize> = degrees.iter().copied().filter(|&d| d > 0).collect();
    if positive.len() < MIN_TAIL {
        return Err(Error::FitFailure(format!(
            "{} vertices with positive degree, need at least {MIN_TAIL}",
            positive.len()
        )));
    }
    positive.sort_unstable();
    let max = *positive.last().expect("non-empty");
    if positive[0] == max {
        return Err(Error::FitFailure("all degrees are equal".into()));
    }

    let mut best: Option<PowerLawFit> = None;
    let mut start = 0;
    while start < positive.len() {
        let k_min = positive[start];
        let tail = &positive[start..];
        if tail.len() < MIN_TAIL || max < 10 * k_min {
            break;
        }
        if let Some(fit) = fit_tail(tail, k_min) {
            if best.as_ref().is_none_or(|b| fit.ks < b.ks) {
                best = Some(fit);
            }
        }
        start += tail.iter().take_while(|&&d| d == k_min).count();
    }
    best.ok_or_else(|| {
        Error::FitFailure("no k_min leaves a tail of enough vertices spanning a decade".into())
    })
}

fn fit_tail(tail: &[usize], k_min: usize) -> Option<PowerLawFit> {
    let n = tail.len() as f64;
    let shift = k_min as f64 - 0.5;
    let log_sum: f64 = tail.iter().map(|&k| (k as f64 / shift).ln()).sum();
    if log_sum <= 0.0 {
        return None;
    }
    let gamma = 1.0 + n / log_sum;
    let model_ccdf = |k: f64| ((k - 0.5) / shift).powf(1.0 - gamma);

    let mut ks: f64 = 0.0;
    let mut idx = 0;
    while idx < tail.len() {
        let k = tail[idx];
        let run = tail[idx..].iter().take_while(|&&d| d == k).count();
        let at_or_above = (tail.len() - idx) as f64 / n;
        let above = (tail.len() - idx - run) as f64 / n;
        ks = ks
            .max((at_or_above - model_ccdf(k as f64)).abs())
            .max((above - model_ccdf(k as f64 + 1.0)).abs());
        idx += run;
    }
    Some(PowerLawFit {
        gamma,
        k_min,
        ks,
        n_tail: tail.len(),
    })
}

/// All adjacency eigenvalues, ascending. Refuses graphs above `max_n`
/// vertices because the dense matrix needs `n²` scalars.
pub fn spectrum<T: Real>(g: &UndirectedGraph, max_n: usize) -> Result<Vec<T>> {
    let n = g.n();
    if n > max_n {
        return Err(Error::domain(format!(
            "graph has {n} vertices, above the spectrum cap of {max_n}; raise min_count to shrink the vocabulary or raise the cap"
        )));
    }
    let mut a = DenseMatrix::<T>::zeros(n, n);
    for (i, j) in g.edges() {
        // Lower triangle only.
        a[(j as usize, i as usize)] = T::one();
    }
    symmetric_eigenvalues(a)
}

/// Cumulative distribution of the semicircle law on `[-2, 2]`.
pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * std::f64::consts::PI)
            + (x / 2.0).asin() / std::f64::consts::PI
    }
}

/// KS distance between the spectral bulk of a graph and the semicircle law.
///
/// The largest eigenvalue (the Perron outlier of a graph with positive mean
/// degree) is dropped and the rest are scaled by `1/√(n p (1-p))`, where
/// `p` is the edge density.
pub fn semicircle_ks(eigenvalues: &[f64], n: usize, m: usize) -> Result<f64> {
    if n < 3 || eigenvalues.len() != n {
        return Err(Error::domain(
            "need all eigenvalues of a graph with at least 3 vertices",
        ));
    }
    let p = 2.0 * m as f64 / (n as f64 * (n as f64 - 1.0));
    let scale = (n as f64 * p * (1.0 - p)).sqrt();
    if !(scale > 0.0) {
        return Err(Error::domain(
            "edge density must lie strictly between 0 and 1",
        ));
    }
    let mut bulk: Vec<f64> = eigenvalues.iter().map(|&x| x / scale).collect();
    bulk.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    bulk.pop();
    Ok(ks_against(&bulk, semicircle_cdf))
}

/// One-sample KS statistic of sorted `sample` against the CDF `cdf`.
pub fn ks_against(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Sample mean and the half-width `1.96·sd/√runs` of its 95% interval.
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * var.sqrt() / n.sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkStats {
    pub n: usize,
    pub m: usize,
    pub mean_degree: f64,
    /// `k̄ / n`.
    pub density: f64,
    pub clustering: f64,
    pub histogram: Vec<(usize, usize)>,
    /// The fit, or why it failed.
    pub power_law: std::result::Result<PowerLawFit, String>,
}

pub fn network_stats(g: &UndirectedGraph) -> NetworkStats {
    let deg = degree_stats(g);
    let clustering = clustering_coefficient(g).average;
    let power_law = fit_power_law(&deg.degrees).map_err(|e| e.to_string());
    let n = g.n();
    NetworkStats {
        n,
        m: g.m(),
        mean_degree: deg.mean_degree,
        density: if n == 0 {
            0.0
        } else {
            deg.mean_degree / n as f64
        },
        clustering,
        histogram: deg.histogram,
        power_law,
    }
}

/// Maximum KS distance for a degree distribution to count as scale-free.
pub const SCALE_FREE_KS: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityReport {
    pub is_complex: bool,
    /// `C / (k̄/n)`; infinite when the graph has no edges but positive C.
    pub clustering_ratio: f64,
    pub strong_clustering: bool,
    pub scale_free: bool,
    pub reason: String,
}

/// A complex network has `C ≥ threshold · k̄/n` and a power-law degree
/// distribution (successful fit with KS below [`SCALE_FREE_KS`]).
pub fn is_complex_network(stats: &NetworkStats, ratio_threshold: f64) -> ComplexityReport {
    let clustering_ratio = if stats.density > 0.0 {
        stats.clustering / stats.density
    } else if stats.clustering > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let strong_clustering =
        stats.density > 0.0 && stats.clustering >= ratio_threshold * stats.density;
    let (scale_free, fit_note) = match &stats.power_law {
        Ok(fit) => (
            fit.ks < SCALE_FREE_KS,
            format!(
                "gamma={:.3} k_min={} ks={:.4}",
                fit.gamma, fit.k_min, fit.ks
            ),
        ),
        Err(e) => (false, e.clone()),
    };
    let reason = format!(
        "C={:.4} k/n={:.5} ratio={:.1} (need >= {ratio_threshold}); power law: {fit_note}",
        stats.clustering, stats.density, clustering_ratio
    );
    ComplexityReport {
        is_complex: strong_clustering && scale_free,
        clustering_ratio,
        strong_clustering,
        scale_free,
        reason,
    }
}
