//! Seeded synthetic corpora with topical co-occurrence structure, for smoke
//! runs and tests when no real corpus is at hand.

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::WeightedAliasIndex;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TopicCorpus {
    pub vocab_size: usize,
    pub topics: usize,
    pub tokens: usize,
    /// Tokens per document; each document has one topic.
    pub doc_len: usize,
    /// Probability that a token comes from the document topic rather than
    /// the background distribution.
    pub topic_weight: f64,
    /// Rank-frequency exponent of both distributions.
    pub zipf_exponent: f64,
    pub seed: u64,
}

impl Default for TopicCorpus {
    fn default() -> Self {
        TopicCorpus {
            vocab_size: 500,
            topics: 10,
            tokens: 50_000,
            doc_len: 40,
            topic_weight: 0.6,
            zipf_exponent: 1.0,
            seed: 0,
        }
    }
}

impl TopicCorpus {
    /// Name of word `i`: `w0`, `w1`, …
    pub fn word(i: usize) -> String {
        format!("w{i}")
    }

    /// Topic owning word `i`.
    pub fn topic_of(&self, i: usize) -> usize {
        i % self.topics
    }

    /// Words `i` with `i ≡ t (mod topics)` belong to topic `t`; inside a
    /// topic and in the background, lower indices are more frequent.
    pub fn generate(&self) -> Result<Vec<String>> {
        if self.topics == 0 || self.vocab_size < self.topics || self.doc_len == 0 {
            return Err(Error::domain(
                "need topics >= 1, vocab_size >= topics and doc_len >= 1",
            ));
        }
        if !(0.0..=1.0).contains(&self.topic_weight) {
            return Err(Error::domain("topic_weight must lie in [0, 1]"));
        }
        let zipf = |n: usize| {
            WeightedAliasIndex::new(
                (0..n)
                    .map(|r| 1.0 / ((r + 1) as f64).powf(self.zipf_exponent))
                    .collect(),
            )
            .map_err(|e| Error::domain(e.to_string()))
        };
        let background = zipf(self.vocab_size)?;
        let per_topic: Vec<Vec<usize>> = (0..self.topics)
            .map(|t| (t..self.vocab_size).step_by(self.topics).collect())
            .collect();
        let topic_dists = per_topic
            .iter()
            .map(|w| zipf(w.len()))
            .collect::<Result<Vec<_>>>()?;

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.tokens);
        while out.len() < self.tokens {
            let t = rng.gen_range(0..self.topics);
            for _ in 0..self.doc_len.min(self.tokens - out.len()) {
                let i = if rng.gen::<f64>() < self.topic_weight {
                    per_topic[t][topic_dists[t].sample(&mut rng)]
                } else {
                    background.sample(&mut rng)
                };
                out.push(Self::word(i));
            }
        }
        Ok(out)
    }
}
