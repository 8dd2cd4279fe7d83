//! Vocabulary construction and windowed co-occurrence counting.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::textio::{numbered_lines, parse_field};

/// Marker for tokens that are not in the vocabulary.
pub const OOV: u32 = u32::MAX;

/// Splits text on whitespace and lower-cases every token.
pub fn read_tokens<R: BufRead>(mut reader: R) -> Result<Vec<String>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    Ok(text.split_whitespace().map(str::to_lowercase).collect())
}

/// Word list with counts. Index `i` is the `i`-th most frequent word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Builds a vocabulary from `(word, count)` pairs already in index order.
    pub fn from_counts(entries: Vec<(String, u64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVocabulary { min_count: 0 });
        }
        if entries.len() >= OOV as usize {
            return Err(Error::domain("vocabulary too large for 32-bit indices"));
        }
        let mut index = HashMap::with_capacity(entries.len());
        let mut words = Vec::with_capacity(entries.len());
        let mut counts = Vec::with_capacity(entries.len());
        for (i, (word, count)) in entries.into_iter().enumerate() {
            if index.insert(word.clone(), i as u32).is_some() {
                return Err(Error::domain(format!("duplicate vocabulary word {word:?}")));
            }
            words.push(word);
            counts.push(count);
        }
        Ok(Vocabulary {
            words,
            counts,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn count(&self, i: usize) -> u64 {
        self.counts[i]
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).map(|&i| i as usize)
    }

    /// Maps tokens to indices, with [`OOV`] for unknown words.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens
            .iter()
            .map(|t| self.index.get(t.as_ref()).copied().unwrap_or(OOV))
            .collect()
    }

    /// Writes `word<TAB>count` lines in index order.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        for (w, c) in self.words.iter().zip(&self.counts) {
            writeln!(out, "{w}\t{c}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries = Vec::new();
        for line in numbered_lines(reader) {
            let (no, line) = line?;
            let mut fields = line.split('\t');
            let word: String = parse_field(fields.next(), no, "word")?;
            let count: u64 = parse_field(fields.next(), no, "count")?;
            entries.push((word, count));
        }
        Self::from_counts(entries)
    }
}

/// Keeps words occurring at least `min_count` times, most frequent first and
/// ties in lexicographic order.
pub fn build_vocab<I, S>(tokens: I, min_count: u64) -> Result<Vocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    if min_count == 0 {
        return Err(Error::domain("min_count must be positive"));
    }
    let mut raw: HashMap<String, u64> = HashMap::new();
    for t in tokens {
        let t = t.as_ref();
        match raw.get_mut(t) {
            Some(c) => *c += 1,
            None => {
                raw.insert(t.to_owned(), 1);
            }
        }
    }
    let mut kept: Vec<(String, u64)> = raw.into_iter().filter(|&(_, c)| c >= min_count).collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary { min_count });
    }
    kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_counts(kept)
}

/// How co-occurring pairs are harvested from the token stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountOptions {
    /// Maximum distance between the two tokens of a pair.
    pub window: usize,
    /// Shrink each position's window to a uniform draw from `1..=window`
    /// (word2vec style). Off by default.
    pub dynamic_window: bool,
    /// Seed for the dynamic window draws.
    pub seed: u64,
}

impl CountOptions {
    pub fn fixed(window: usize) -> Self {
        CountOptions {
            window,
            dynamic_window: false,
            seed: 0,
        }
    }
}

/// Symmetric co-occurrence counts `#(i,j)`.
///
/// Only the upper triangle (`i <= j`) is stored. A stored value is the
/// matrix entry itself, so a diagonal entry counts both orientations of each
/// occurrence and `total` is the sum over the full matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CooccurrenceCounts {
    n: usize,
    window: usize,
    total: u64,
    pairs: Vec<(u32, u32, u64)>,
}

impl CooccurrenceCounts {
    /// Assembles counts from upper-triangle entries, validating every
    /// invariant.
    pub fn from_pairs(n: usize, window: usize, mut pairs: Vec<(u32, u32, u64)>) -> Result<Self> {
        pairs.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut total = 0u64;
        for (idx, &(i, j, c)) in pairs.iter().enumerate() {
            if i > j {
                return Err(Error::domain(format!(
                    "pair ({i},{j}) is not in upper-triangle form"
                )));
            }
            if j as usize >= n {
                return Err(Error::domain(format!("index {j} out of range for n = {n}")));
            }
            if c == 0 {
                return Err(Error::domain(format!("zero count stored for ({i},{j})")));
            }
            if idx > 0 && (pairs[idx - 1].0, pairs[idx - 1].1) == (i, j) {
                return Err(Error::domain(format!("duplicate pair ({i},{j})")));
            }
            total += if i == j { c } else { 2 * c };
        }
        Ok(CooccurrenceCounts {
            n,
            window,
            total,
            pairs,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// `N`, the sum of all matrix entries.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Upper-triangle entries `(i, j, #(i,j))` sorted by `(i, j)`.
    pub fn pairs(&self) -> &[(u32, u32, u64)] {
        &self.pairs
    }

    /// Count for `(i, j)` in either orientation.
    pub fn get(&self, i: usize, j: usize) -> u64 {
        let key = if i <= j {
            (i as u32, j as u32)
        } else {
            (j as u32, i as u32)
        };
        self.pairs
            .binary_search_by_key(&key, |&(a, b, _)| (a, b))
            .map(|pos| self.pairs[pos].2)
            .unwrap_or(0)
    }

    /// Row sums `#(i) = Σ_j #(i,j)`.
    pub fn marginals(&self) -> Vec<u64> {
        let mut m = vec![0u64; self.n];
        for &(i, j, c) in &self.pairs {
            m[i as usize] += c;
            if i != j {
                m[j as usize] += c;
            }
        }
        m
    }

    /// Writes the `n N window` header and `i<TAB>j<TAB>count` lines.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {} {}", self.n, self.total, self.window)?;
        for &(i, j, c) in &self.pairs {
            writeln!(out, "{i}\t{j}\t{c}")?;
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
        let total: u64 = parse_field(h.next(), no, "N")?;
        let window: usize = parse_field(h.next(), no, "window")?;
        let mut pairs = Vec::new();
        for line in lines {
            let (no, line) = line?;
            let mut f = line.split('\t');
            let i: u32 = parse_field(f.next(), no, "i")?;
            let j: u32 = parse_field(f.next(), no, "j")?;
            let c: u64 = parse_field(f.next(), no, "count")?;
            pairs.push((i, j, c));
        }
        let counts = Self::from_pairs(n, window, pairs)?;
        if counts.total != total {
            return Err(Error::parse(
                1,
                format!("header N = {total} but entries sum to {}", counts.total),
            ));
        }
        Ok(counts)
    }
}

/// Counts every in-vocabulary pair within `window` positions.
///
/// Tokens marked [`OOV`] keep their position but produce no pairs.
pub fn count_cooccurrences(
    corpus: &[u32],
    vocab: &Vocabulary,
    window: usize,
) -> Result<CooccurrenceCounts> {
    count_cooccurrences_with(corpus, vocab, &CountOptions::fixed(window))
}

pub fn count_cooccurrences_with(
    corpus: &[u32],
    vocab: &Vocabulary,
    opts: &CountOptions,
) -> Result<CooccurrenceCounts> {
    let window = opts.window;
    if window == 0 {
        return Err(Error::domain("window must be at least 1"));
    }
    let n = vocab.len();
    if let Some(&bad) = corpus.iter().find(|&&t| t != OOV && t as usize >= n) {
        return Err(Error::domain(format!(
            "token index {bad} outside vocabulary of size {n}"
        )));
    }
    let spans: Option<Vec<u8>> = opts.dynamic_window.then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        corpus
            .iter()
            .map(|_| rng.gen_range(1..=window.min(u8::MAX as usize)) as u8)
            .collect()
    });

    let shards = rayon::current_num_threads().max(1);
    let chunk = corpus.len().div_ceil(shards).max(1);
    let merged = (0..corpus.len())
        .step_by(chunk)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|start| {
            let end = (start + chunk).min(corpus.len());
            let mut local: HashMap<u64, u64> = HashMap::new();
            for t in start..end {
                let a = corpus[t];
                if a == OOV {
                    continue;
                }
                let reach = spans.as_ref().map_or(window, |s| s[t] as usize);
                for &b in corpus.iter().skip(t + 1).take(reach) {
                    if b == OOV {
                        continue;
                    }
                    let (i, j) = if a <= b { (a, b) } else { (b, a) };
                    // #(i,j) and #(j,i) each gain one; on the diagonal both
                    // land in the same cell.
                    let inc = if i == j { 2 } else { 1 };
                    *local.entry(((i as u64) << 32) | j as u64).or_insert(0) += inc;
                }
            }
            local
        })
        .reduce(HashMap::new, |mut a, mut b| {
            if a.len() < b.len() {
                std::mem::swap(&mut a, &mut b);
            }
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });

    let pairs = merged
        .into_iter()
        .map(|(k, c)| ((k >> 32) as u32, k as u32, c))
        .collect();
    CooccurrenceCounts::from_pairs(n, window, pairs)
}
