//! Stochastic gradient training of skip-gram with negative sampling, with
//! and without the sigmoid on the dot product.

use std::io::Write;

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::WeightedAliasIndex;

use crate::corpus::{Vocabulary, OOV};
use crate::error::{Error, Result};
use crate::factorization::{EmbeddingSet, Provenance};
use crate::linalg::DenseMatrix;
use crate::scalar::{log_sigmoid, sigmoid, Real};
use crate::textio::format_sig;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub d: usize,
    /// Negative samples per positive pair.
    pub k: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Decay the step linearly to `learning_rate · 1e-4` over training.
    pub lr_decay: bool,
    pub window: usize,
    /// Frequent-word subsampling threshold; `None` keeps every token.
    pub subsample_t: Option<f64>,
    /// Noise distribution is `p(i) ∝ count(i)^unigram_power`.
    pub unigram_power: f64,
    /// Dots are clamped to `[clamp_eps, 1 - clamp_eps]` by the nonsigmoid loss.
    pub clamp_eps: f64,
    /// Without the sigmoid, shorten any step predicted to move a dot out of
    /// `(clamp_eps, 1 - clamp_eps)`, where the clamped loss has no gradient
    /// to bring it back.
    pub keep_feasible: bool,
    pub seed: u64,
    /// Worker threads. One worker gives bit-reproducible runs.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            d: 300,
            k: 5,
            epochs: 5,
            learning_rate: 0.025,
            lr_decay: true,
            window: 2,
            subsample_t: None,
            unigram_power: 0.75,
            clamp_eps: 1e-7,
            keep_feasible: true,
            seed: 1,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::domain("dimension d must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::domain("need at least one negative sample"));
        }
        if self.window == 0 {
            return Err(Error::domain("window must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::domain("need at least one worker"));
        }
        if !(self.clamp_eps > 0.0 && self.clamp_eps < 0.5) {
            return Err(Error::domain(format!(
                "clamp_eps must lie in (0, 0.5), got {}",
                self.clamp_eps
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::domain("learning rate must be positive"));
        }
        if !self.unigram_power.is_finite() {
            return Err(Error::domain("unigram power must be finite"));
        }
        if let Some(t) = self.subsample_t {
            if !(t > 0.0) {
                return Err(Error::domain("subsampling threshold must be positive"));
            }
        }
        Ok(())
    }
}

/// Per-pair loss: `f(⟨w,c⟩)` for the observed context and `g(⟨w,c⟩)` for
/// each noise context; training maximises `f + Σ g`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Objective {
    /// `log σ(x)` and `log σ(-x)`.
    Sgns,
    /// `log x` and `log(1 - x)` with `x` clamped to `[eps, 1 - eps]`; the
    /// derivative is zero where the clamp is active.
    Nonsigmoid { clamp_eps: f64 },
}

impl Objective {
    /// Value and derivative of the observed-pair term.
    #[inline]
    pub fn positive<T: Real>(self, x: T) -> (T, T) {
        match self {
            Objective::Sgns => (log_sigmoid(x), sigmoid(-x)),
            Objective::Nonsigmoid { clamp_eps } => {
                let (eps, one) = (T::of(clamp_eps), T::one());
                if x <= eps {
                    (eps.ln(), T::zero())
                } else if x >= one - eps {
                    ((one - eps).ln(), T::zero())
                } else {
                    (x.ln(), x.recip())
                }
            }
        }
    }

    /// Value and derivative of a noise-pair term.
    #[inline]
    pub fn negative<T: Real>(self, x: T) -> (T, T) {
        match self {
            Objective::Sgns => (log_sigmoid(-x), -sigmoid(x)),
            Objective::Nonsigmoid { clamp_eps } => {
                let (eps, one) = (T::of(clamp_eps), T::one());
                if x <= eps {
                    ((one - eps).ln(), T::zero())
                } else if x >= one - eps {
                    (eps.ln(), T::zero())
                } else {
                    ((one - x).ln(), -(one - x).recip())
                }
            }
        }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Loss of one center vector against its observed context and noise contexts.
pub fn pair_objective<T: Real>(obj: Objective, w: &[T], context: &[T], noise: &[&[T]]) -> T {
    let mut value = obj.positive(dot(w, context)).0;
    for c in noise {
        value += obj.negative(dot(w, c)).0;
    }
    value
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairGradient<T> {
    pub w: Vec<T>,
    pub context: Vec<T>,
    pub noise: Vec<Vec<T>>,
}

/// Gradient of [`pair_objective`] with respect to every vector involved.
pub fn pair_gradient<T: Real>(
    obj: Objective,
    w: &[T],
    context: &[T],
    noise: &[&[T]],
) -> PairGradient<T> {
    let d = obj.positive(dot(w, context)).1;
    let mut gw: Vec<T> = context.iter().map(|&c| d * c).collect();
    let gc = w.iter().map(|&x| d * x).collect();
    let gn = noise
        .iter()
        .map(|c| {
            let d = obj.negative(dot(w, c)).1;
            gw.iter_mut()
                .zip(c.iter())
                .for_each(|(g, &ci)| *g += d * ci);
            w.iter().map(|&x| d * x).collect()
        })
        .collect();
    PairGradient {
        w: gw,
        context: gc,
        noise: gn,
    }
}

/// Maximiser of `p_ij log x + k p_i p_j log(1 - x)` over `x ∈ (0, 1)`:
/// `σ(log(p_ij / (p_i p_j)) - log k)`.
pub fn nsgns_pointwise_optimum(p_ij: f64, p_i: f64, p_j: f64, k: f64) -> Result<f64> {
    for (name, p) in [("p_ij", p_ij), ("p_i", p_i), ("p_j", p_j)] {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::domain(format!("{name} must be positive, got {p}")));
        }
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::domain(format!("k must be positive, got {k}")));
    }
    Ok(sigmoid((p_ij / (p_i * p_j)).ln() - k.ln()))
}

/// Draws noise words with probability proportional to `count^power`.
#[derive(Clone, Debug)]
pub struct NoiseSampler {
    alias: WeightedAliasIndex<f64>,
    probabilities: Vec<f64>,
}

impl NoiseSampler {
    pub fn new(counts: &[u64], power: f64) -> Result<Self> {
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(power)).collect();
        let total: f64 = weights.iter().sum();
        if counts.is_empty() || !(total > 0.0 && total.is_finite()) || counts.contains(&0) {
            return Err(Error::domain("noise distribution needs positive counts"));
        }
        let probabilities = weights.iter().map(|w| w / total).collect();
        let alias = WeightedAliasIndex::new(weights).map_err(|e| Error::domain(e.to_string()))?;
        Ok(NoiseSampler {
            alias,
            probabilities,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.alias.sample(rng) as u32
    }
}

/// Embeddings plus the mean per-pair objective of every epoch.
#[derive(Clone, Debug)]
pub struct Trained<T> {
    pub embeddings: EmbeddingSet<T>,
    pub epoch_objectives: Vec<f64>,
}

impl<T> Trained<T> {
    /// CSV `epoch,mean_objective`, epochs numbered from 1.
    pub fn write_progress_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "epoch,mean_objective")?;
        for (e, v) in self.epoch_objectives.iter().enumerate() {
            writeln!(out, "{},{}", e + 1, format_sig(*v, 10))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Read access to the parameters between epochs.
pub struct EpochState<'a, T: Real> {
    pub epoch: usize,
    pub mean_objective: f64,
    params: &'a Params<T>,
}

impl<T: Real> EpochState<'_, T> {
    /// `⟨w_i, c_j⟩` with the current parameters.
    pub fn dot(&self, i: usize, j: usize) -> T {
        let d = self.params.d;
        (0..d)
            .map(|q| T::load(&self.params.w[i * d + q]) * T::load(&self.params.c[j * d + q]))
            .sum()
    }
}

struct Params<T: Real> {
    d: usize,
    w: Vec<T::Cell>,
    c: Vec<T::Cell>,
}

impl<T: Real> Params<T> {
    fn matrix(cells: &[T::Cell], n: usize, d: usize) -> DenseMatrix<T> {
        DenseMatrix::from_fn(n, d, |i, q| T::load(&cells[i * d + q]))
    }

    fn all_finite(&self) -> bool {
        self.w.iter().chain(&self.c).all(|x| T::load(x).is_finite())
    }
}

pub fn train_sgns<T: Real>(
    corpus: &[u32],
    vocab: &Vocabulary,
    cfg: &TrainConfig,
) -> Result<Trained<T>> {
    train_observed(corpus, vocab, cfg, Objective::Sgns, &mut |_| {})
}

pub fn train_nonsigmoid_sgns<T: Real>(
    corpus: &[u32],
    vocab: &Vocabulary,
    cfg: &TrainConfig,
) -> Result<Trained<T>> {
    let obj = Objective::Nonsigmoid {
        clamp_eps: cfg.clamp_eps,
    };
    train_observed(corpus, vocab, cfg, obj, &mut |_| {})
}

/// Trains with the given objective, calling `observer` after every epoch.
///
/// `corpus` holds vocabulary indices with [`OOV`] for unknown tokens; OOV
/// and subsampled tokens keep their positions but produce no pairs. Each
/// ordered pair of in-window tokens is one positive example followed by
/// `k` noise draws for the same center word.
pub fn train_observed<T: Real>(
    corpus: &[u32],
    vocab: &Vocabulary,
    cfg: &TrainConfig,
    obj: Objective,
    observer: &mut dyn FnMut(EpochState<'_, T>),
) -> Result<Trained<T>> {
    cfg.validate()?;
    let n = vocab.len();
    if n == 0 {
        return Err(Error::domain("vocabulary is empty"));
    }
    if let Some(&bad) = corpus.iter().find(|&&t| t != OOV && t as usize >= n) {
        return Err(Error::domain(format!(
            "token index {bad} outside vocabulary of {n}"
        )));
    }
    let noise = NoiseSampler::new(vocab.counts(), cfg.unigram_power)?;
    let params = initial_params::<T>(n, cfg, obj);
    let keep_prob = cfg.subsample_t.map(|t| {
        let total: u64 = vocab.counts().iter().sum();
        vocab
            .counts()
            .iter()
            .map(|&c| {
                let ratio = t * total as f64 / c as f64;
                (ratio.sqrt() + ratio).min(1.0)
            })
            .collect::<Vec<f64>>()
    });

    let mut epoch_objectives = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let keep = keep_prob.as_ref().map(|probs| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(u64::MAX - epoch as u64);
            corpus
                .iter()
                .map(|&t| t != OOV && rng.gen::<f64>() < probs[t as usize])
                .collect::<Vec<bool>>()
        });
        let job = EpochJob {
            corpus,
            keep: keep.as_deref(),
            cfg,
            obj,
            noise: &noise,
            params: &params,
            epoch,
        };
        let chunk = corpus.len().div_ceil(cfg.workers).max(1);
        let results: Vec<(f64, u64)> = if cfg.workers == 1 {
            vec![job.run(0, 0, corpus.len())]
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = (0..cfg.workers)
                    .map(|wk| {
                        let job = &job;
                        let start = (wk * chunk).min(corpus.len());
                        let end = ((wk + 1) * chunk).min(corpus.len());
                        s.spawn(move || job.run(wk, start, end))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .collect()
            })
        };
        let (sum, pairs) = results
            .iter()
            .fold((0.0, 0u64), |(s, p), &(ws, wp)| (s + ws, p + wp));
        if pairs == 0 {
            return Err(Error::domain("corpus yields no training pairs"));
        }
        let mean = sum / pairs as f64;
        if !mean.is_finite() || !params.all_finite() {
            return Err(Error::Diverged {
                epoch: epoch + 1,
                detail: format!("mean objective {mean}; lower the learning rate"),
            });
        }
        epoch_objectives.push(mean);
        observer(EpochState {
            epoch: epoch + 1,
            mean_objective: mean,
            params: &params,
        });
    }

    let provenance = match obj {
        Objective::Sgns => Provenance::Sgns,
        Objective::Nonsigmoid { .. } => Provenance::NonsigmoidSgns,
    };
    let embeddings = EmbeddingSet::new(
        vocab.words().to_vec(),
        Params::<T>::matrix(&params.w, n, cfg.d),
        Some(Params::<T>::matrix(&params.c, n, cfg.d)),
        provenance,
    )?;
    Ok(Trained {
        embeddings,
        epoch_objectives,
    })
}

/// Starting point: for the sigmoid objective `W ~ U(-0.5/d, 0.5/d)` and
/// `C = 0`; without the sigmoid `W, C ~ U(0, 1/√d)` so every dot lies in
/// `(0, 1)`.
fn initial_params<T: Real>(n: usize, cfg: &TrainConfig, obj: Objective) -> Params<T> {
    let d = cfg.d;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (w, c): (Vec<f64>, Vec<f64>) = match obj {
        Objective::Sgns => {
            let w = (0..n * d)
                .map(|_| (rng.gen::<f64>() - 0.5) / d as f64)
                .collect();
            (w, vec![0.0; n * d])
        }
        Objective::Nonsigmoid { .. } => {
            let scale = 1.0 / (d as f64).sqrt();
            let w = (0..n * d).map(|_| rng.gen::<f64>() * scale).collect();
            let c = (0..n * d).map(|_| rng.gen::<f64>() * scale).collect();
            (w, c)
        }
    };
    Params {
        d,
        w: w.into_iter().map(|x| T::of(x).new_cell()).collect(),
        c: c.into_iter().map(|x| T::of(x).new_cell()).collect(),
    }
}

struct EpochJob<'a, T: Real> {
    corpus: &'a [u32],
    keep: Option<&'a [bool]>,
    cfg: &'a TrainConfig,
    obj: Objective,
    noise: &'a NoiseSampler,
    params: &'a Params<T>,
    epoch: usize,
}

impl<T: Real> EpochJob<'_, T> {
    fn active(&self, t: usize) -> bool {
        self.corpus[t] != OOV && self.keep.is_none_or(|k| k[t])
    }

    /// Processes center positions `start..end`; returns the objective sum
    /// and the number of positive pairs.
    fn run(&self, worker: usize, start: usize, end: usize) -> (f64, u64) {
        let cfg = self.cfg;
        let d = cfg.d;
        let len = self.corpus.len();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1 + (self.epoch * cfg.workers + worker) as u64);
        let total_work = (cfg.epochs * len) as f64;
        let lr0 = T::of(cfg.learning_rate);
        let floor = cfg.learning_rate * 1e-4;

        let mut wbuf = vec![T::zero(); d];
        let mut grad = vec![T::zero(); d];
        let mut sum = 0.0;
        let mut pairs = 0u64;
        for t in start..end {
            if !self.active(t) {
                continue;
            }
            let lr = if cfg.lr_decay {
                let done = (self.epoch * len + (t - start) * cfg.workers) as f64 / total_work;
                T::of((cfg.learning_rate * (1.0 - done)).max(floor))
            } else {
                lr0
            };
            let i = self.corpus[t] as usize;
            let lo = t.saturating_sub(cfg.window);
            let hi = (t + cfg.window).min(len - 1);
            for s in lo..=hi {
                if s == t || !self.active(s) {
                    continue;
                }
                let j = self.corpus[s] as usize;
                for (q, x) in wbuf.iter_mut().enumerate() {
                    *x = T::load(&self.params.w[i * d + q]);
                }
                grad.iter_mut().for_each(|g| *g = T::zero());
                let mut value = self.step(j, true, lr, &wbuf, &mut grad);
                for _ in 0..cfg.k {
                    let neg = self.noise.sample(&mut rng) as usize;
                    value += self.step(neg, false, lr, &wbuf, &mut grad);
                }
                for (q, g) in grad.iter().enumerate() {
                    let cell = &self.params.w[i * d + q];
                    T::store(cell, T::load(cell) + *g);
                }
                sum += value.as_f64();
                pairs += 1;
            }
        }
        (sum, pairs)
    }

    /// One gradient step on context `j`; accumulates the center gradient.
    #[inline]
    fn step(&self, j: usize, observed: bool, lr: T, w: &[T], grad: &mut [T]) -> T {
        let d = w.len();
        let c = &self.params.c[j * d..(j + 1) * d];
        let (mut x, mut cc) = (T::zero(), T::zero());
        for (&a, b) in w.iter().zip(c) {
            let b = T::load(b);
            x += a * b;
            cc += b * b;
        }
        let (value, deriv) = if observed {
            self.obj.positive(x)
        } else {
            self.obj.negative(x)
        };
        if deriv == T::zero() {
            return value;
        }
        let mut g = lr * deriv;
        if let (Objective::Nonsigmoid { clamp_eps }, true) = (self.obj, self.cfg.keep_feasible) {
            // To first order the step moves the dot by g (|w|² + |c|²); go at
            // most halfway to the violated bound.
            let speed = cc + w.iter().map(|&a| a * a).sum::<T>();
            let eps = T::of(clamp_eps);
            let (lo, hi) = (eps, T::one() - eps);
            let half = T::of(0.5);
            let moved = x + g * speed;
            if speed > T::zero() && moved > hi {
                g = half * (hi - x) / speed;
            } else if speed > T::zero() && moved < lo {
                g = half * (lo - x) / speed;
            }
        }
        for q in 0..d {
            let cq = T::load(&c[q]);
            grad[q] += g * cq;
            T::store(&c[q], cq + g * w[q]);
        }
        value
    }
}
