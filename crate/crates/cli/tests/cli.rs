use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sspmi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sspmi"))
        .args(args)
        .env("SSPMI_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn smoke_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/smoke")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

const ARTIFACTS: [&str; 24] = [
    "config.cfg",
    "vocab.tsv",
    "cooc.tsv",
    "matrix.sigmaspmi.tsv",
    "matrix.spmi.tsv",
    "words.svd.txt",
    "contexts.svd.txt",
    "report.svd.csv",
    "words.sgns.txt",
    "contexts.sgns.txt",
    "progress.sgns.csv",
    "report.sgns.csv",
    "words.nsgns.txt",
    "contexts.nsgns.txt",
    "progress.nsgns.csv",
    "report.nsgns.csv",
    "graph.tsv",
    "graph_stats.csv",
    "graph_runs.csv",
    "degree_histogram.csv",
    "spectrum.txt",
    "distance_pdf.csv",
    "compare.csv",
    "summary.txt",
];

#[test]
fn smoke_pipeline_is_complete_and_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = smoke_dir().join("smoke.cfg");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&sspmi(&[
        "pipeline",
        "--config",
        s(&cfg),
        "--output-dir",
        s(&a),
    ]));
    ok(&sspmi(&[
        "pipeline",
        "--config",
        s(&cfg),
        "--output-dir",
        s(&b),
    ]));
    for name in ARTIFACTS {
        let x = fs::read(a.join(name)).unwrap_or_else(|_| panic!("missing {name}"));
        assert!(!x.is_empty(), "{name} is empty");
        if name != "config.cfg" {
            assert_eq!(
                x,
                fs::read(b.join(name)).unwrap(),
                "{name} differs between runs"
            );
        }
    }
    let summary = fs::read_to_string(a.join("summary.txt")).unwrap();
    assert!(summary.contains("hyperbolic.delta_shift = "));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "pipeline");
    let corpus = manifest["inputs"]
        .as_array()
        .unwrap()
        .iter()
        .find(|i| i["path"].as_str().unwrap().ends_with("corpus.txt"))
        .unwrap();
    assert_eq!(corpus["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(
        corpus["bytes"].as_u64().unwrap(),
        fs::metadata(smoke_dir().join("corpus.txt")).unwrap().len()
    );
}

#[test]
fn written_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    ok(&sspmi(&[
        "pipeline",
        "--config",
        s(&smoke_dir().join("smoke.cfg")),
        "--output-dir",
        s(&a),
        "--set",
        "trainers=",
        "--set",
        "graph_runs=2",
    ]));
    let written = fs::read_to_string(a.join("config.cfg")).unwrap();
    assert!(written.contains("graph_runs = 2\n"));
    // The written config has absolute paths and can be run as is.
    let b = tmp.path().join("b");
    ok(&sspmi(&[
        "pipeline",
        "--config",
        s(&a.join("config.cfg")),
        "--output-dir",
        s(&b),
    ]));
    let again = fs::read_to_string(b.join("config.cfg")).unwrap();
    assert_eq!(written.replace(s(&a), "OUT"), again.replace(s(&b), "OUT"));
    assert_eq!(
        fs::read(a.join("words.svd.txt")).unwrap(),
        fs::read(b.join("words.svd.txt")).unwrap()
    );
}

#[test]
fn step_by_step_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let t = |n: &str| tmp.path().join(n);
    let corpus = smoke_dir().join("corpus.txt");
    ok(&sspmi(&[
        "vocab",
        "--corpus",
        s(&corpus),
        "--min-count",
        "5",
        "--out",
        s(&t("vocab.tsv")),
    ]));
    assert!(t("vocab.tsv.manifest.json").is_file());
    ok(&sspmi(&[
        "cooc",
        "--corpus",
        s(&corpus),
        "--vocab",
        s(&t("vocab.tsv")),
        "--window",
        "2",
        "--out",
        s(&t("cooc.tsv")),
    ]));
    // `n N window`: vocabulary size, total count, window.
    let cooc = fs::read_to_string(t("cooc.tsv")).unwrap();
    let header: Vec<&str> = cooc.lines().next().unwrap().split(' ').collect();
    assert_eq!((header[0], header[2]), ("500", "2"));

    ok(&sspmi(&[
        "matrix",
        "--cooc",
        s(&t("cooc.tsv")),
        "--kind",
        "sigma-spmi",
        "--k",
        "5",
        "--out",
        s(&t("sigma.tsv")),
    ]));
    let header = fs::read_to_string(t("sigma.tsv"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert!(header.starts_with("SigmaSPMI 5 "), "{header}");
    ok(&sspmi(&[
        "matrix",
        "--cooc",
        s(&t("cooc.tsv")),
        "--kind",
        "spmi",
        "--out",
        s(&t("spmi.tsv")),
    ]));

    ok(&sspmi(&[
        "svd",
        "--matrix",
        s(&t("sigma.tsv")),
        "--vocab",
        s(&t("vocab.tsv")),
        "--dim",
        "20",
        "--out-words",
        s(&t("w.txt")),
        "--out-contexts",
        s(&t("c.txt")),
    ]));
    assert!(fs::read_to_string(t("w.txt"))
        .unwrap()
        .starts_with("500 20\n"));
    ok(&sspmi(&[
        "eval",
        "--words",
        s(&t("w.txt")),
        "--contexts",
        s(&t("c.txt")),
        "--use-w-plus-c",
        "--similarity",
        s(&smoke_dir().join("similarity.tsv")),
        "--analogy",
        s(&smoke_dir().join("analogy.txt")),
        "--out",
        s(&t("report.csv")),
    ]));
    let report = fs::read_to_string(t("report.csv")).unwrap();
    assert!(report.starts_with("dataset,metric,value,coverage\n"));
    assert_eq!(report.lines().count(), 3);

    ok(&sspmi(&[
        "train-nsgns",
        "--corpus",
        s(&corpus),
        "--vocab",
        s(&t("vocab.tsv")),
        "--dim",
        "10",
        "--epochs",
        "1",
        "--lr",
        "0.005",
        "--out-words",
        s(&t("nw.txt")),
        "--progress",
        s(&t("progress.csv")),
    ]));
    let progress = fs::read_to_string(t("progress.csv")).unwrap();
    assert!(progress.starts_with("epoch,mean_objective\n"));

    ok(&sspmi(&[
        "graph-stats",
        "--matrix",
        s(&t("sigma.tsv")),
        "--runs",
        "10",
        "--seed",
        "3",
        "--out",
        s(&t("stats.csv")),
        "--per-run",
        s(&t("runs.csv")),
        "--histogram",
        s(&t("hist.csv")),
    ]));
    let stats = fs::read_to_string(t("stats.csv")).unwrap();
    assert!(stats.starts_with("metric,mean,ci95,count\n"));
    assert!(
        stats
            .lines()
            .any(|l| l.starts_with("clustering,") && l.ends_with(",10")),
        "{stats}"
    );
    assert_eq!(
        fs::read_to_string(t("runs.csv")).unwrap().lines().count(),
        11
    );
    assert!(fs::read_to_string(t("hist.csv"))
        .unwrap()
        .starts_with("k,count\n"));

    ok(&sspmi(&[
        "graph-sample",
        "--matrix",
        s(&t("sigma.tsv")),
        "--seed",
        "3",
        "--out",
        s(&t("g.tsv")),
    ]));
    ok(&sspmi(&[
        "graph-stats",
        "--graph",
        s(&t("g.tsv")),
        "--out",
        s(&t("one.csv")),
    ]));
    ok(&sspmi(&[
        "graph-spectrum",
        "--graph",
        s(&t("g.tsv")),
        "--out",
        s(&t("spec.txt")),
    ]));
    assert_eq!(
        fs::read_to_string(t("spec.txt")).unwrap().lines().count(),
        500
    );

    ok(&sspmi(&[
        "distance-pdf",
        "--radius",
        "6",
        "--grid",
        "200",
        "--nodes",
        "48",
        "--out",
        s(&t("pdf.csv")),
    ]));
    assert!(fs::read_to_string(t("pdf.csv"))
        .unwrap()
        .starts_with("x,density\n"));
    ok(&sspmi(&[
        "compare",
        "--matrix",
        s(&t("spmi.tsv")),
        "--graph",
        s(&t("g.tsv")),
        "--grid",
        "300",
        "--nodes",
        "48",
        "--bins",
        "20",
        "--out",
        s(&t("cmp.csv")),
    ]));
    let cmp = fs::read_to_string(t("cmp.csv")).unwrap();
    assert!(cmp.starts_with("y,score_density,r_minus_x_density\n"));
    assert!(cmp
        .trim_end()
        .lines()
        .last()
        .unwrap()
        .starts_with("delta_shift="));

    ok(&sspmi(&[
        "rhg",
        "--n",
        "300",
        "--mean-degree",
        "8",
        "--seed",
        "1",
        "--out",
        s(&t("rhg.tsv")),
        "--points",
        s(&t("pts.csv")),
    ]));
    assert_eq!(
        fs::read_to_string(t("pts.csv")).unwrap().lines().count(),
        301
    );
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sspmi(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let out = sspmi(&["vocab", "--bogus-flag"]);
    assert_eq!(out.status.code(), Some(2));

    let out = sspmi(&[
        "vocab",
        "--corpus",
        "/definitely/missing",
        "--out",
        s(&tmp.path().join("v")),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let corpus = tmp.path().join("c.txt");
    fs::write(&corpus, "a b c").unwrap();
    let out = sspmi(&[
        "vocab",
        "--corpus",
        s(&corpus),
        "--min-count",
        "9",
        "--out",
        s(&tmp.path().join("v")),
    ]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = sspmi(&[
        "distance-pdf",
        "--radius=-1",
        "--out",
        s(&tmp.path().join("p.csv")),
    ]);
    assert_eq!(out.status.code(), Some(1));

    let bad = tmp.path().join("bad.tsv");
    fs::write(&bad, "SigmaSPMI 5 2 1\n0\tx\t0.5\n").unwrap();
    let out = sspmi(&[
        "graph-sample",
        "--matrix",
        s(&bad),
        "--out",
        s(&tmp.path().join("g")),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let cfg = tmp.path().join("x.cfg");
    fs::write(&cfg, "colour = red\n").unwrap();
    let out = sspmi(&["pipeline", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
}
