//! Randomized truncated SVD and the word/context embeddings derived from it.

use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::linalg::{jacobi_svd, orthonormalize, DenseMatrix, LinearOperator};
use crate::matrix::SparseScoreMatrix;
use crate::scalar::Real;
use crate::textio::{format_sig, numbered_lines, parse_field};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SvdOptions {
    pub rank: usize,
    /// Extra random directions beyond `rank` in the range finder.
    pub oversample: usize,
    /// Subspace (power) iterations applied to the sketch.
    pub power_iters: usize,
    pub seed: u64,
}

impl SvdOptions {
    pub fn new(rank: usize) -> Self {
        SvdOptions {
            rank,
            oversample: 10,
            power_iters: 4,
            seed: 0,
        }
    }
}

/// `A ≈ U diag(S) Vᵀ` with `d` columns in `U` and `V`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdResult<T> {
    pub u: DenseMatrix<T>,
    pub s: Vec<T>,
    pub v: DenseMatrix<T>,
}

impl<T: Real> SvdResult<T> {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Dense `U diag(S) Vᵀ`; intended for small matrices.
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        self.u.scale_columns(&self.s).matmul(&self.v.transpose())
    }
}

/// Rank-`d` truncated SVD of a score matrix using only sparse products.
pub fn truncated_svd<T: Real>(m: &SparseScoreMatrix<T>, opts: &SvdOptions) -> Result<SvdResult<T>> {
    truncated_svd_operator(&m.operator(), opts)
}

/// Randomized range finder with power iterations, followed by an exact SVD
/// of the projected problem.
pub fn truncated_svd_operator<T: Real, A: LinearOperator<T>>(
    a: &A,
    opts: &SvdOptions,
) -> Result<SvdResult<T>> {
    let (m, n) = (a.nrows(), a.ncols());
    let d = opts.rank;
    if d == 0 {
        return Err(Error::domain("rank must be at least 1"));
    }
    if d > m.min(n) {
        return Err(Error::domain(format!(
            "rank {d} exceeds matrix dimension {}",
            m.min(n)
        )));
    }
    let l = (d + opts.oversample).min(m.min(n));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let omega = DenseMatrix::<T>::gaussian(n, l, &mut rng);
    let mut q = orthonormal_basis(&a.apply(&omega), &mut rng)?;
    for _ in 0..opts.power_iters {
        let z = orthonormal_basis(&a.apply_transpose(&q), &mut rng)?;
        q = orthonormal_basis(&a.apply(&z), &mut rng)?;
    }

    // Aᵀ Q = Q₂ R, so A ≈ Q Rᵀ Q₂ᵀ and the SVD of R finishes the job.
    let bt = a.apply_transpose(&q);
    let mut cols = bt.to_columns();
    let r = orthonormalize(&mut cols, &mut rng)?;
    let q2 = DenseMatrix::from_columns(n, &cols);
    let (ur, s, vr) = jacobi_svd(&r)?;

    let u = q.matmul(&vr.truncate_cols(d));
    let v = q2.matmul(&ur.truncate_cols(d));
    Ok(SvdResult {
        u,
        s: s[..d].to_vec(),
        v,
    })
}

fn orthonormal_basis<T: Real>(y: &DenseMatrix<T>, rng: &mut ChaCha8Rng) -> Result<DenseMatrix<T>> {
    let mut cols = y.to_columns();
    orthonormalize(&mut cols, rng)?;
    Ok(DenseMatrix::from_columns(y.rows(), &cols))
}

/// How an embedding set was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Svd,
    Sgns,
    NonsigmoidSgns,
    /// Read back from a file, origin unknown.
    External,
}

/// Word vectors `W` and, when known, context vectors `C`, one row per
/// vocabulary word.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet<T> {
    words: Vec<String>,
    w: DenseMatrix<T>,
    c: Option<DenseMatrix<T>>,
    provenance: Provenance,
}

impl<T: Real> EmbeddingSet<T> {
    pub fn new(
        words: Vec<String>,
        w: DenseMatrix<T>,
        c: Option<DenseMatrix<T>>,
        provenance: Provenance,
    ) -> Result<Self> {
        if w.rows() != words.len() {
            return Err(Error::domain(format!(
                "{} word vectors for {} words",
                w.rows(),
                words.len()
            )));
        }
        if let Some(c) = &c {
            if (c.rows(), c.cols()) != (w.rows(), w.cols()) {
                return Err(Error::domain(
                    "context matrix shape differs from word matrix",
                ));
            }
            if !c.all_finite() {
                return Err(Error::domain("context vectors contain non-finite values"));
            }
        }
        if !w.all_finite() {
            return Err(Error::domain("word vectors contain non-finite values"));
        }
        Ok(EmbeddingSet {
            words,
            w,
            c,
            provenance,
        })
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.w.cols()
    }

    pub fn word_vectors(&self) -> &DenseMatrix<T> {
        &self.w
    }

    pub fn context_vectors(&self) -> Option<&DenseMatrix<T>> {
        self.c.as_ref()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// `W + C`, if context vectors are present.
    pub fn word_plus_context(&self) -> Option<DenseMatrix<T>> {
        let c = self.c.as_ref()?;
        let data = self
            .w
            .as_slice()
            .iter()
            .zip(c.as_slice())
            .map(|(&a, &b)| a + b)
            .collect();
        DenseMatrix::from_row_major(self.w.rows(), self.w.cols(), data).ok()
    }

    /// Multiplies every vector by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        EmbeddingSet {
            words: self.words.clone(),
            w: self.w.map(|x| x * factor),
            c: self.c.as_ref().map(|c| c.map(|x| x * factor)),
            provenance: self.provenance,
        }
    }

    /// Writes the word vectors in word2vec text format.
    pub fn write_words<W: Write>(&self, out: W) -> Result<()> {
        write_word2vec(&self.words, &self.w, out)
    }

    /// Writes the context vectors in word2vec text format.
    pub fn write_contexts<W: Write>(&self, out: W) -> Result<()> {
        let c = self
            .c
            .as_ref()
            .ok_or_else(|| Error::domain("embedding set has no context vectors"))?;
        write_word2vec(&self.words, c, out)
    }

    /// Reads word vectors and optionally a matching context file.
    pub fn read<R: BufRead, C: BufRead>(words: R, contexts: Option<C>) -> Result<Self> {
        let (names, w) = read_word2vec(words)?;
        let c = match contexts {
            Some(r) => {
                let (cnames, c) = read_word2vec(r)?;
                if cnames != names {
                    return Err(Error::domain("context file lists different words"));
                }
                Some(c)
            }
            None => None,
        };
        Self::new(names, w, c, Provenance::External)
    }
}

/// `W = U √S`, `C = V √S`.
pub fn embeddings_from_svd<T: Real>(
    svd: &SvdResult<T>,
    vocab: &Vocabulary,
) -> Result<EmbeddingSet<T>> {
    if svd.rank() == 0 {
        return Err(Error::domain("embedding dimension must be at least 1"));
    }
    if svd.s.iter().any(|&s| s < T::zero()) {
        return Err(Error::domain("negative singular value"));
    }
    let root: Vec<T> = svd.s.iter().map(|s| s.sqrt()).collect();
    EmbeddingSet::new(
        vocab.words().to_vec(),
        svd.u.scale_columns(&root),
        Some(svd.v.scale_columns(&root)),
        Provenance::Svd,
    )
}

/// `n d` header then `word v1 … vd` with six significant digits.
pub fn write_word2vec<T: Real, W: Write>(
    words: &[String],
    m: &DenseMatrix<T>,
    mut out: W,
) -> Result<()> {
    writeln!(out, "{} {}", m.rows(), m.cols())?;
    for (i, word) in words.iter().enumerate() {
        out.write_all(word.as_bytes())?;
        for &x in m.row(i) {
            write!(out, " {}", format_sig(x.as_f64(), 6))?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_word2vec<T: Real, R: BufRead>(reader: R) -> Result<(Vec<String>, DenseMatrix<T>)> {
    let mut lines = numbered_lines(reader);
    let (no, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing header"))??;
    let mut h = header.split_whitespace();
    let n: usize = parse_field(h.next(), no, "n")?;
    let d: usize = parse_field(h.next(), no, "d")?;
    let mut words = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * d);
    for line in lines {
        let (no, line) = line?;
        let mut f = line.split_whitespace();
        let word: String = parse_field(f.next(), no, "word")?;
        let before = data.len();
        for value in f {
            let x: f64 = parse_field(Some(value), no, "component")?;
            data.push(T::of(x));
        }
        if data.len() - before != d {
            return Err(Error::parse(no, format!("expected {d} components")));
        }
        words.push(word);
    }
    if words.len() != n {
        return Err(Error::parse(
            1,
            format!("header promises {n} vectors, found {}", words.len()),
        ));
    }
    Ok((words, DenseMatrix::from_row_major(n, d, data)?))
}
