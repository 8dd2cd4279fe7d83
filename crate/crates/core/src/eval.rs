//! Word-similarity and word-analogy benchmarks.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::factorization::EmbeddingSet;
use crate::linalg::DenseMatrix;
use crate::scalar::Real;
use crate::textio::{format_sig, numbered_lines};

/// Word pairs with human similarity ratings.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityDataset {
    pub name: String,
    pub pairs: Vec<(String, String, f64)>,
}

impl SimilarityDataset {
    pub fn new(name: impl Into<String>, pairs: Vec<(String, String, f64)>) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(Error::domain("a similarity dataset needs at least 2 pairs"));
        }
        if let Some(p) = pairs.iter().find(|p| !p.2.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite score for ({}, {})",
                p.0, p.1
            )));
        }
        Ok(SimilarityDataset {
            name: name.into(),
            pairs,
        })
    }

    /// Lines `word1<TAB>word2<TAB>score`, lower-cased. A first line whose
    /// score does not parse is taken as a header; `#` starts a comment.
    pub fn read_from<R: BufRead>(name: impl Into<String>, reader: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for (idx, line) in numbered_lines(reader).enumerate() {
            let (no, line) = line?;
            if line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = if line.contains('\t') {
                line.split('\t').map(str::trim).collect()
            } else {
                line.split_whitespace().collect()
            };
            if fields.len() < 3 {
                return Err(Error::parse(no, "expected word1, word2 and a score"));
            }
            let score = match fields[2].parse::<f64>() {
                Ok(s) => s,
                Err(_) if idx == 0 => continue,
                Err(_) => return Err(Error::parse(no, format!("invalid score {:?}", fields[2]))),
            };
            pairs.push((fields[0].to_lowercase(), fields[1].to_lowercase(), score));
        }
        Self::new(name, pairs)
    }
}

/// Analogy questions `a : b :: c : d`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalogyDataset {
    pub name: String,
    pub quads: Vec<[String; 4]>,
}

impl AnalogyDataset {
    pub fn new(name: impl Into<String>, quads: Vec<[String; 4]>) -> Result<Self> {
        if quads.is_empty() {
            return Err(Error::domain(
                "an analogy dataset needs at least one question",
            ));
        }
        for q in &quads {
            if q[0] == q[1] || q[0] == q[2] || q[1] == q[2] {
                return Err(Error::domain(format!(
                    "question {q:?} repeats a query word"
                )));
            }
        }
        Ok(AnalogyDataset {
            name: name.into(),
            quads,
        })
    }

    /// Four space-separated words per line, lower-cased; lines starting
    /// with `:` are section headers and are skipped.
    pub fn read_from<R: BufRead>(name: impl Into<String>, reader: R) -> Result<Self> {
        let mut quads = Vec::new();
        for line in numbered_lines(reader) {
            let (no, line) = line?;
            if line.trim_start().starts_with(':') {
                continue;
            }
            let words: Vec<String> = line.split_whitespace().map(str::to_lowercase).collect();
            let quad: [String; 4] = words.try_into().map_err(|w: Vec<String>| {
                Error::parse(no, format!("expected 4 words, found {}", w.len()))
            })?;
            quads.push(quad);
        }
        Self::new(name, quads)
    }
}

/// Spearman rank correlation: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::domain(format!(
            "lengths differ: {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::domain("need at least 2 observations"));
    }
    pearson(&average_ranks(x)?, &average_ranks(y)?)
}

/// 1-based ranks with ties sharing their mean rank.
pub fn average_ranks(x: &[f64]) -> Result<Vec<f64>> {
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::domain("cannot rank NaN"));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("no NaN"));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let mean = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean;
        }
        start = end;
    }
    Ok(ranks)
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::domain(
            "correlation is undefined for a constant vector",
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Unit-normalised word vectors (`W`, or `W + C` when asked) with a word index.
pub struct NormalizedVectors<T> {
    rows: DenseMatrix<T>,
    index: HashMap<String, usize>,
    words: Vec<String>,
}

impl<T: Real> NormalizedVectors<T> {
    pub fn new(emb: &EmbeddingSet<T>, use_w_plus_c: bool) -> Result<Self> {
        if emb.is_empty() {
            return Err(Error::domain("embedding set is empty"));
        }
        let mut rows = if use_w_plus_c {
            emb.word_plus_context().ok_or_else(|| {
                Error::domain("W + C requested but the embeddings carry no context vectors")
            })?
        } else {
            emb.word_vectors().clone()
        };
        for i in 0..rows.rows() {
            let row = rows.row_mut(i);
            let norm = row.iter().map(|&v| v * v).sum::<T>().sqrt();
            if norm > T::zero() {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
        let index = emb
            .words()
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Ok(NormalizedVectors {
            rows,
            index,
            words: emb.words().to_vec(),
        })
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn cosine(&self, a: usize, b: usize) -> T {
        self.rows
            .row(a)
            .iter()
            .zip(self.rows.row(b))
            .map(|(&x, &y)| x * y)
            .sum()
    }

    /// `argmax_{v ∉ {a,b,c}} cos(v, b - a + c)`; `None` when the vocabulary
    /// has no other word.
    pub fn predict_3cosadd(&self, a: usize, b: usize, c: usize) -> Option<usize> {
        let target: Vec<T> = (0..self.rows.cols())
            .map(|q| self.rows[(b, q)] - self.rows[(a, q)] + self.rows[(c, q)])
            .collect();
        // Ranking by the dot product equals ranking by cosine: every row has
        // unit norm (or is zero) and the target norm is shared.
        let mut best: Option<(usize, T)> = None;
        for v in 0..self.rows.rows() {
            if v == a || v == b || v == c {
                continue;
            }
            let score: T = self
                .rows
                .row(v)
                .iter()
                .zip(&target)
                .map(|(&x, &y)| x * y)
                .sum();
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((v, score));
            }
        }
        best.map(|(v, _)| v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Score {
    pub value: f64,
    /// Fraction of dataset items with every word in the vocabulary.
    pub coverage: f64,
    pub used: usize,
}

/// Spearman correlation between cosines and human ratings over the pairs
/// whose words are both known.
pub fn evaluate_similarity<T: Real>(
    emb: &EmbeddingSet<T>,
    ds: &SimilarityDataset,
    use_w_plus_c: bool,
) -> Result<Score> {
    let vectors = NormalizedVectors::new(emb, use_w_plus_c)?;
    let (model, human): (Vec<f64>, Vec<f64>) = ds
        .pairs
        .iter()
        .filter_map(|(a, b, s)| {
            Some((
                vectors.cosine(vectors.get(a)?, vectors.get(b)?).as_f64(),
                *s,
            ))
        })
        .unzip();
    if model.len() < 2 {
        return Err(Error::domain(format!(
            "only {} pair(s) of {} have both words in the vocabulary",
            model.len(),
            ds.name
        )));
    }
    Ok(Score {
        value: spearman(&model, &human)?,
        coverage: model.len() as f64 / ds.pairs.len() as f64,
        used: model.len(),
    })
}

/// Accuracy of 3CosAdd over the questions whose four words are known.
pub fn evaluate_analogy_3cosadd<T: Real>(
    emb: &EmbeddingSet<T>,
    ds: &AnalogyDataset,
    use_w_plus_c: bool,
) -> Result<Score> {
    let vectors = NormalizedVectors::new(emb, use_w_plus_c)?;
    let known: Vec<[usize; 4]> = ds
        .quads
        .iter()
        .filter_map(|q| {
            Some([
                vectors.get(&q[0])?,
                vectors.get(&q[1])?,
                vectors.get(&q[2])?,
                vectors.get(&q[3])?,
            ])
        })
        .collect();
    if known.is_empty() {
        return Err(Error::domain(format!(
            "no question of {} is fully in the vocabulary",
            ds.name
        )));
    }
    let correct = known
        .par_iter()
        .filter(|q| vectors.predict_3cosadd(q[0], q[1], q[2]) == Some(q[3]))
        .count();
    Ok(Score {
        value: correct as f64 / known.len() as f64,
        coverage: known.len() as f64 / ds.quads.len() as f64,
        used: known.len(),
    })
}

/// One line of the evaluation report.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub metric: String,
    pub value: f64,
    pub coverage: f64,
}

/// CSV `dataset,metric,value,coverage`.
pub fn write_report<W: Write>(rows: &[ReportRow], mut out: W) -> Result<()> {
    writeln!(out, "dataset,metric,value,coverage")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.dataset,
            r.metric,
            format_sig(r.value, 6),
            format_sig(r.coverage, 6)
        )?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorization::Provenance;
    use proptest::prelude::*;

    fn emb(words: &[&str], rows: &[&[f64]]) -> EmbeddingSet<f64> {
        let d = rows[0].len();
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        EmbeddingSet::new(
            words.iter().map(|w| w.to_string()).collect(),
            DenseMatrix::from_row_major(rows.len(), d, data).unwrap(),
            None,
            Provenance::External,
        )
        .unwrap()
    }

    fn quad(a: &str, b: &str, c: &str, d: &str) -> [String; 4] {
        [a.into(), b.into(), c.into(), d.into()]
    }

    #[test]
    fn spearman_extremes() {
        let x = [0.1, 0.5, 2.0, 7.0];
        assert!((spearman(&x, &[1.0, 2.0, 3.0, 100.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!(spearman(&x, &[1.0; 4]).is_err());
        assert!(spearman(&[1.0], &[1.0]).is_err());
        assert!(spearman(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn spearman_with_ties_matches_hand_computation() {
        // Ranks: x -> [1, 2.5, 2.5, 4], y -> [1, 3, 2, 4]; both means 2.5.
        // Covariance sum 4.5, variance sums 4.5 and 5.
        let want = 4.5 / (4.5f64 * 5.0).sqrt();
        let got = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((got - want).abs() < 1e-15);
        assert_eq!(
            average_ranks(&[5.0, 1.0, 5.0, 5.0]).unwrap(),
            vec![3.0, 1.0, 3.0, 3.0]
        );
    }

    proptest! {
        #[test]
        fn spearman_symmetric_and_monotone_invariant(
            pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            if let Ok(r) = spearman(&x, &y) {
                prop_assert!((r - spearman(&y, &x).unwrap()).abs() < 1e-12);
                let tx: Vec<f64> = x.iter().map(|v| v.powi(3) + 5.0 * v).collect();
                prop_assert!((r - spearman(&tx, &y).unwrap()).abs() < 1e-12);
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }

        #[test]
        fn scores_are_scale_invariant(
            raw in prop::collection::vec(-1.0f64..1.0, 30),
            factor in 1e-3f64..1e3,
        ) {
            let rows: Vec<&[f64]> = raw.chunks(3).collect();
            let words = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"];
            let e = emb(&words, &rows);
            let sim = SimilarityDataset::new("s", vec![
                ("a".into(), "b".into(), 1.0),
                ("c".into(), "d".into(), 2.0),
                ("e".into(), "f".into(), 3.0),
                ("g".into(), "a".into(), 0.5),
            ]).unwrap();
            let ana = AnalogyDataset::new("q", vec![
                quad("a", "b", "c", "d"),
                quad("e", "f", "g", "h"),
                quad("i", "j", "a", "b"),
            ]).unwrap();
            let big = e.scaled(factor);
            if let Ok(s) = evaluate_similarity(&e, &sim, false) {
                let t = evaluate_similarity(&big, &sim, false).unwrap();
                prop_assert!((s.value - t.value).abs() < 1e-9);
            }
            prop_assert_eq!(
                evaluate_analogy_3cosadd(&e, &ana, false).unwrap().value,
                evaluate_analogy_3cosadd(&big, &ana, false).unwrap().value
            );
        }
    }

    #[test]
    fn similarity_replicating_human_order_scores_one() {
        let e = emb(
            &["x", "y", "z", "u"],
            &[&[1.0, 0.0], &[1.0, 0.1], &[0.0, 1.0], &[1.0, 1.0]],
        );
        let ds = SimilarityDataset::new(
            "toy",
            vec![
                ("x".into(), "y".into(), 9.0),
                ("x".into(), "z".into(), 0.5),
                ("x".into(), "u".into(), 6.0),
                ("x".into(), "missing".into(), 3.0),
            ],
        )
        .unwrap();
        let s = evaluate_similarity(&e, &ds, false).unwrap();
        assert!((s.value - 1.0).abs() < 1e-15);
        assert_eq!(s.used, 3);
        assert!((s.coverage - 0.75).abs() < 1e-15);
    }

    #[test]
    fn all_unknown_words_is_an_error() {
        let e = emb(&["x", "y"], &[&[1.0], &[2.0]]);
        let ds = SimilarityDataset::new(
            "s",
            vec![("p".into(), "q".into(), 1.0), ("r".into(), "s".into(), 2.0)],
        )
        .unwrap();
        assert!(evaluate_similarity(&e, &ds, false).is_err());
        let ana = AnalogyDataset::new("q", vec![quad("p", "q", "r", "s")]).unwrap();
        assert!(evaluate_analogy_3cosadd(&e, &ana, false).is_err());
    }

    #[test]
    fn exact_analogy_in_an_orthonormal_basis() {
        let s = 1.0 / 3f64.sqrt();
        let e = emb(
            &["man", "king", "woman", "queen", "apple", "car"],
            &[
                &[1.0, 0.0, 0.0, 0.0, 0.0],
                &[0.0, 1.0, 0.0, 0.0, 0.0],
                &[0.0, 0.0, 1.0, 0.0, 0.0],
                &[-s, s, s, 0.0, 0.0],
                &[0.0, 0.0, 0.0, 1.0, 0.0],
                &[0.0, 0.0, 0.0, 0.0, 1.0],
            ],
        );
        let ds = AnalogyDataset::new("toy", vec![quad("man", "king", "woman", "queen")]).unwrap();
        let r = evaluate_analogy_3cosadd(&e, &ds, false).unwrap();
        assert_eq!((r.value, r.coverage), (1.0, 1.0));
    }

    #[test]
    fn query_words_are_excluded() {
        // Cosines with b - a + c: b and c tie at 0.839, d 0.727, e 0.280.
        let e = emb(
            &["a", "b", "c", "d", "e"],
            &[
                &[1.0, 0.0, 0.0],
                &[0.0, 1.0, 0.0],
                &[0.0, 0.8, 0.6],
                &[0.0, 0.6, 0.8],
                &[0.0, 0.0, 1.0],
            ],
        );
        let v = NormalizedVectors::new(&e, false).unwrap();
        assert_eq!(v.predict_3cosadd(0, 1, 2), Some(3));
        let ds = AnalogyDataset::new(
            "toy",
            vec![quad("a", "b", "c", "d"), quad("a", "b", "c", "e")],
        )
        .unwrap();
        assert_eq!(evaluate_analogy_3cosadd(&e, &ds, false).unwrap().value, 0.5);
        let tiny = emb(&["a", "b", "c"], &[&[1.0], &[2.0], &[3.0]]);
        assert_eq!(
            NormalizedVectors::new(&tiny, false)
                .unwrap()
                .predict_3cosadd(0, 1, 2),
            None
        );
    }

    #[test]
    fn word_plus_context_needs_contexts() {
        let e = emb(&["x", "y"], &[&[1.0], &[2.0]]);
        assert!(NormalizedVectors::new(&e, true).is_err());
        let with_c = EmbeddingSet::new(
            vec!["x".into(), "y".into()],
            DenseMatrix::from_row_major(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            Some(DenseMatrix::from_row_major(2, 2, vec![0.0, 1.0, 0.0, 1.0]).unwrap()),
            Provenance::Svd,
        )
        .unwrap();
        let v = NormalizedVectors::new(&with_c, true).unwrap();
        assert!((v.cosine(0, 1) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dataset_readers() {
        let text =
            "Word 1\tWord 2\tHuman (mean)\nTiger\tcat\t7.35\n# note\ncomputer\tkeyboard\t7.62\n";
        let ds = SimilarityDataset::read_from("ws", text.as_bytes()).unwrap();
        assert_eq!(ds.pairs[0], ("tiger".into(), "cat".into(), 7.35));
        assert_eq!(ds.pairs.len(), 2);
        assert!(SimilarityDataset::read_from("ws", "a\tb\t1\nc\td\tx\n".as_bytes()).is_err());

        let text = ": capital-common-countries\nAthens Greece Baghdad Iraq\n: family\nboy girl brother sister\n";
        let ds = AnalogyDataset::read_from("g", text.as_bytes()).unwrap();
        assert_eq!(
            ds.quads,
            vec![
                quad("athens", "greece", "baghdad", "iraq"),
                quad("boy", "girl", "brother", "sister")
            ]
        );
        assert!(AnalogyDataset::read_from("g", "a b c\n".as_bytes()).is_err());
        assert!(AnalogyDataset::read_from("g", "a a c d\n".as_bytes()).is_err());
    }

    #[test]
    fn report_format() {
        let rows = [ReportRow {
            dataset: "ws353".into(),
            metric: "spearman".into(),
            value: 0.657,
            coverage: 0.98,
        }];
        let mut buf = Vec::new();
        write_report(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "dataset,metric,value,coverage\nws353,spearman,0.657,0.98\n"
        );
    }
}
