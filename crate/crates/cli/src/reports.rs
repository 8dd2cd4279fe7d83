//! CSV reports shared by the graph subcommands and the pipeline.

use std::io::Write;

use sspmi::graph::{is_complex_network, mean_ci95, network_stats, UndirectedGraph};
use sspmi::textio::format_sig;

/// Statistics of one graph.
#[derive(Clone, Debug, PartialEq)]
pub struct RunStats {
    pub seed: Option<u64>,
    pub n: usize,
    pub m: usize,
    pub mean_degree: f64,
    pub density: f64,
    pub clustering: f64,
    pub clustering_ratio: f64,
    pub gamma: Option<f64>,
    pub k_min: Option<usize>,
    pub ks: Option<f64>,
    pub is_complex: bool,
}

pub fn run_stats(
    g: &UndirectedGraph,
    seed: Option<u64>,
    complex_threshold: f64,
) -> (RunStats, Vec<(usize, usize)>) {
    let stats = network_stats(g);
    let verdict = is_complex_network(&stats, complex_threshold);
    let fit = stats.power_law.as_ref().ok();
    let run = RunStats {
        seed,
        n: stats.n,
        m: stats.m,
        mean_degree: stats.mean_degree,
        density: stats.density,
        clustering: stats.clustering,
        clustering_ratio: verdict.clustering_ratio,
        gamma: fit.map(|f| f.gamma),
        k_min: fit.map(|f| f.k_min),
        ks: fit.map(|f| f.ks),
        is_complex: verdict.is_complex,
    };
    (run, stats.histogram)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn num(x: f64) -> String {
    format_sig(x, 10)
}

pub fn write_runs<W: Write>(runs: &[RunStats], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "run,seed,n,m,mean_degree,density,clustering,clustering_ratio,gamma,k_min,ks,is_complex"
    )?;
    for (r, s) in runs.iter().enumerate() {
        writeln!(
            out,
            "{r},{},{},{},{},{},{},{},{},{},{},{}",
            opt(s.seed),
            s.n,
            s.m,
            num(s.mean_degree),
            num(s.density),
            num(s.clustering),
            num(s.clustering_ratio),
            opt(s.gamma.map(num)),
            opt(s.k_min),
            opt(s.ks.map(num)),
            s.is_complex
        )?;
    }
    out.flush()
}

/// `metric,mean,ci95,count`: mean and 95% half-width over the runs where the
/// metric is defined.
pub fn write_summary<W: Write>(runs: &[RunStats], mut out: W) -> std::io::Result<()> {
    type Getter = fn(&RunStats) -> Option<f64>;
    let metrics: [(&str, Getter); 9] = [
        ("n", |s| Some(s.n as f64)),
        ("m", |s| Some(s.m as f64)),
        ("mean_degree", |s| Some(s.mean_degree)),
        ("density", |s| Some(s.density)),
        ("clustering", |s| Some(s.clustering)),
        ("clustering_ratio", |s| {
            Some(s.clustering_ratio).filter(|x| x.is_finite())
        }),
        ("gamma", |s| s.gamma),
        ("ks", |s| s.ks),
        ("complex_fraction", |s| {
            Some(if s.is_complex { 1.0 } else { 0.0 })
        }),
    ];
    writeln!(out, "metric,mean,ci95,count")?;
    for (name, get) in metrics {
        let values: Vec<f64> = runs.iter().filter_map(get).collect();
        if values.is_empty() {
            writeln!(out, "{name},,,0")?;
        } else {
            let (mean, ci) = mean_ci95(&values);
            writeln!(out, "{name},{},{},{}", num(mean), num(ci), values.len())?;
        }
    }
    out.flush()
}

pub fn write_histogram<W: Write>(histogram: &[(usize, usize)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "k,count")?;
    for (k, c) in histogram {
        writeln!(out, "{k},{c}")?;
    }
    out.flush()
}

pub fn write_spectrum<W: Write>(eigenvalues: &[f64], mut out: W) -> std::io::Result<()> {
    for x in eigenvalues {
        writeln!(out, "{}", format_sig(*x, 12))?;
    }
    out.flush()
}
