//! PMI and its shifted, squashed, positive and binarized variants.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::corpus::CooccurrenceCounts;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, SparseOperator};
use crate::scalar::{sigmoid, Real};
use crate::textio::{format_sig, numbered_lines, parse_field};

/// Which member of the PMI family a matrix holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScoreKind {
    /// `log p(i,j) / (p(i) p(j))`
    Pmi,
    /// `PMI − log k`
    Spmi,
    /// `σ(PMI − log k)`
    SigmaSpmi,
    /// `max(PMI − log k, 0)`
    Pspmi,
    /// `H(PMI − log k)` with `H(0) = 0`
    Bspmi,
}

impl ScoreKind {
    pub const ALL: [ScoreKind; 5] = [
        ScoreKind::Pmi,
        ScoreKind::Spmi,
        ScoreKind::SigmaSpmi,
        ScoreKind::Pspmi,
        ScoreKind::Bspmi,
    ];

    /// Name used in matrix file headers.
    pub fn name(self) -> &'static str {
        match self {
            ScoreKind::Pmi => "PMI",
            ScoreKind::Spmi => "SPMI",
            ScoreKind::SigmaSpmi => "SigmaSPMI",
            ScoreKind::Pspmi => "PSPMI",
            ScoreKind::Bspmi => "BSPMI",
        }
    }

    /// Value of a cell for an unobserved pair. PMI and SPMI are `−∞` there.
    pub fn absent_value(self) -> f64 {
        match self {
            ScoreKind::Pmi | ScoreKind::Spmi => f64::NEG_INFINITY,
            _ => 0.0,
        }
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoreKind {
    type Err = Error;

    /// Accepts header names (`SigmaSPMI`) and flag spellings (`sigma-spmi`).
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "pmi" => Ok(ScoreKind::Pmi),
            "spmi" => Ok(ScoreKind::Spmi),
            "sigmaspmi" | "σspmi" => Ok(ScoreKind::SigmaSpmi),
            "pspmi" => Ok(ScoreKind::Pspmi),
            "bspmi" => Ok(ScoreKind::Bspmi),
            _ => Err(Error::domain(format!("unknown matrix kind {s:?}"))),
        }
    }
}

/// Symmetric sparse matrix over the vocabulary, stored as its upper triangle.
///
/// Cells that are not stored take [`ScoreKind::absent_value`]; for the
/// purpose of linear algebra they are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseScoreMatrix<T> {
    kind: ScoreKind,
    shift_k: T,
    n: usize,
    entries: Vec<(u32, u32, T)>,
}

impl<T: Real> SparseScoreMatrix<T> {
    /// Entries may be given in either orientation but each unordered pair at
    /// most once.
    pub fn from_entries(
        kind: ScoreKind,
        shift_k: T,
        n: usize,
        entries: Vec<(u32, u32, T)>,
    ) -> Result<Self> {
        if !(shift_k > T::zero()) {
            return Err(Error::domain(format!(
                "shift k must be positive, got {shift_k}"
            )));
        }
        let mut entries: Vec<(u32, u32, T)> = entries
            .into_iter()
            .map(|(i, j, v)| if i <= j { (i, j, v) } else { (j, i, v) })
            .collect();
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        for (idx, &(i, j, v)) in entries.iter().enumerate() {
            if j as usize >= n {
                return Err(Error::domain(format!("index {j} out of range for n = {n}")));
            }
            if !v.is_finite() {
                return Err(Error::domain(format!("non-finite value at ({i},{j})")));
            }
            if idx > 0 && (entries[idx - 1].0, entries[idx - 1].1) == (i, j) {
                return Err(Error::domain(format!("duplicate cell ({i},{j})")));
            }
        }
        Ok(SparseScoreMatrix {
            kind,
            shift_k,
            n,
            entries,
        })
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn shift_k(&self) -> T {
        self.shift_k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored upper-triangle cells.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(u32, u32, T)] {
        &self.entries
    }

    /// Stored value of `(i, j)` in either orientation.
    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        let key = if i <= j {
            (i as u32, j as u32)
        } else {
            (j as u32, i as u32)
        };
        self.entries
            .binary_search_by_key(&key, |&(a, b, _)| (a, b))
            .ok()
            .map(|pos| self.entries[pos].2)
    }

    /// Every stored cell of the full matrix: off-diagonal values twice.
    pub fn full_values(&self) -> impl Iterator<Item = T> + '_ {
        self.entries.iter().flat_map(|&(i, j, v)| {
            let twice = i != j;
            std::iter::once(v).chain(twice.then_some(v))
        })
    }

    /// Full symmetric CSR form with unstored cells as zero.
    pub fn to_csr(&self) -> CsrMatrix<T> {
        let mut triplets = Vec::with_capacity(2 * self.entries.len());
        for &(i, j, v) in &self.entries {
            triplets.push((i, j, v));
            if i != j {
                triplets.push((j, i, v));
            }
        }
        CsrMatrix::from_triplets(self.n, self.n, triplets)
    }

    pub fn operator(&self) -> SparseOperator<T> {
        SparseOperator::symmetric(self.to_csr())
    }

    /// Writes the `kind k n nnz` header and `i<TAB>j<TAB>value` lines with
    /// nine significant digits.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "{} {} {} {}",
            self.kind,
            format_sig(self.shift_k.as_f64(), 9),
            self.n,
            self.entries.len()
        )?;
        for &(i, j, v) in &self.entries {
            writeln!(out, "{i}\t{j}\t{}", format_sig(v.as_f64(), 9))?;
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
        let kind: String = parse_field(h.next(), no, "kind")?;
        let kind: ScoreKind = kind
            .parse()
            .map_err(|_| Error::parse(no, format!("bad kind {kind:?}")))?;
        let k: f64 = parse_field(h.next(), no, "k")?;
        let n: usize = parse_field(h.next(), no, "n")?;
        let nnz: usize = parse_field(h.next(), no, "nnz")?;
        let mut entries = Vec::with_capacity(nnz);
        for line in lines {
            let (no, line) = line?;
            let mut f = line.split('\t');
            let i: u32 = parse_field(f.next(), no, "i")?;
            let j: u32 = parse_field(f.next(), no, "j")?;
            let v: f64 = parse_field(f.next(), no, "value")?;
            if i > j {
                return Err(Error::parse(no, "entries must satisfy i <= j"));
            }
            entries.push((i, j, T::of(v)));
        }
        if entries.len() != nnz {
            return Err(Error::parse(
                1,
                format!("header promises {nnz} entries, found {}", entries.len()),
            ));
        }
        Self::from_entries(kind, T::of(k), n, entries)
    }
}

/// PMI over observed pairs: `log(#(i,j) N / (#(i) #(j)))`, where `#(i)` is
/// the row sum of the co-occurrence matrix.
pub fn pmi_matrix<T: Real>(counts: &CooccurrenceCounts) -> Result<SparseScoreMatrix<T>> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::domain("co-occurrence counts are empty (N = 0)"));
    }
    let marginals = counts.marginals();
    let log_n = (total as f64).ln();
    let mut entries = Vec::with_capacity(counts.pairs().len());
    for &(i, j, c) in counts.pairs() {
        let (mi, mj) = (marginals[i as usize], marginals[j as usize]);
        if mi == 0 || mj == 0 {
            return Err(Error::Internal(format!(
                "zero marginal for observed pair ({i},{j})"
            )));
        }
        let pmi = (c as f64).ln() + log_n - (mi as f64).ln() - (mj as f64).ln();
        entries.push((i, j, T::of(pmi)));
    }
    SparseScoreMatrix::from_entries(ScoreKind::Pmi, T::one(), counts.n(), entries)
}

/// Applies the shift by `log k` and the cell-wise map of `target`.
/// Cells mapped to exactly zero by PSPMI and BSPMI are not stored.
pub fn transform<T: Real>(
    pmi: &SparseScoreMatrix<T>,
    target: ScoreKind,
    k: T,
) -> Result<SparseScoreMatrix<T>> {
    if pmi.kind() != ScoreKind::Pmi {
        return Err(Error::domain(format!(
            "transform expects a PMI matrix, got {}",
            pmi.kind()
        )));
    }
    if !(k > T::zero()) || !k.is_finite() {
        return Err(Error::domain(format!("shift k must be positive, got {k}")));
    }
    let log_k = k.ln();
    let entries = pmi
        .entries()
        .iter()
        .filter_map(|&(i, j, x)| {
            let shifted = x - log_k;
            let v = match target {
                ScoreKind::Pmi => x,
                ScoreKind::Spmi => shifted,
                ScoreKind::SigmaSpmi => sigmoid(shifted),
                ScoreKind::Pspmi => shifted.max(T::zero()),
                ScoreKind::Bspmi => {
                    if shifted > T::zero() {
                        T::one()
                    } else {
                        T::zero()
                    }
                }
            };
            let drop = matches!(target, ScoreKind::Pspmi | ScoreKind::Bspmi) && v == T::zero();
            (!drop).then_some((i, j, v))
        })
        .collect();
    let shift = if target == ScoreKind::Pmi {
        T::one()
    } else {
        k
    };
    SparseScoreMatrix::from_entries(target, shift, pmi.n(), entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::logit;

    fn counts_ab(cab: u64, caa: u64, cbb: u64) -> CooccurrenceCounts {
        let mut pairs = vec![(0, 1, cab)];
        if caa > 0 {
            pairs.push((0, 0, caa));
        }
        if cbb > 0 {
            pairs.push((1, 1, cbb));
        }
        CooccurrenceCounts::from_pairs(2, 1, pairs).unwrap()
    }

    fn single(x: f64) -> SparseScoreMatrix<f64> {
        SparseScoreMatrix::from_entries(ScoreKind::Pmi, 1.0, 2, vec![(0, 1, x)]).unwrap()
    }

    #[test]
    fn independent_pair_has_zero_pmi() {
        // #(a,b)=1, #(a)=2, #(b)=2, N=4.
        let m = pmi_matrix::<f64>(&counts_ab(1, 1, 1)).unwrap();
        assert!(m.get(0, 1).unwrap().abs() < 1e-15);
    }

    #[test]
    fn pmi_of_exclusive_pair_is_log_two() {
        let m = pmi_matrix::<f64>(&counts_ab(2, 0, 0)).unwrap();
        assert!((m.get(1, 0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(m.get(0, 0), None);
    }

    #[test]
    fn empty_counts_are_rejected() {
        let c = CooccurrenceCounts::from_pairs(3, 2, vec![]).unwrap();
        assert!(matches!(pmi_matrix::<f64>(&c), Err(Error::Domain(_))));
    }

    #[test]
    fn transforms_at_reference_points() {
        let s = transform(&single(0.0), ScoreKind::SigmaSpmi, 1.0).unwrap();
        assert_eq!(s.get(0, 1), Some(0.5));

        let x = 5f64.ln();
        let s = transform(&single(x), ScoreKind::SigmaSpmi, 5.0).unwrap();
        assert!((s.get(0, 1).unwrap() - 0.5).abs() < 1e-15);
        let s = transform(&single(x), ScoreKind::Spmi, 5.0).unwrap();
        assert!(s.get(0, 1).unwrap().abs() < 1e-15);
        let b = transform(&single(x + 1e-12), ScoreKind::Bspmi, 5.0).unwrap();
        assert_eq!(b.get(0, 1), Some(1.0));
        let b = transform(&single(0.0), ScoreKind::Bspmi, 1.0).unwrap();
        assert_eq!(b.nnz(), 0);

        let p = transform(&single(-0.3), ScoreKind::Pspmi, 1.0).unwrap();
        assert_eq!(p.nnz(), 0);
        let s = transform(&single(-0.3), ScoreKind::SigmaSpmi, 1.0).unwrap();
        // 1 / (1 + e^0.3)
        assert!((s.get(0, 1).unwrap() - 0.425_557_483_188_341).abs() < 1e-12);
    }

    #[test]
    fn shift_must_be_positive() {
        assert!(transform(&single(1.0), ScoreKind::Spmi, 0.0).is_err());
        assert!(transform(&single(1.0), ScoreKind::Spmi, -2.0).is_err());
        let s = transform(&single(1.0), ScoreKind::Spmi, 2.0).unwrap();
        assert!(transform(&s, ScoreKind::Spmi, 2.0).is_err());
    }

    #[test]
    fn sigma_round_trips_to_pmi() {
        let c = counts_ab(3, 5, 1);
        let pmi = pmi_matrix::<f64>(&c).unwrap();
        let k = 5.0;
        let s = transform(&pmi, ScoreKind::SigmaSpmi, k).unwrap();
        assert_eq!(s.nnz(), pmi.nnz());
        for (&(i, j, x), &(_, _, y)) in pmi.entries().iter().zip(s.entries()) {
            assert!((logit(y) + k.ln() - x).abs() < 1e-10, "({i},{j})");
        }
    }

    #[test]
    fn kind_names_parse() {
        for kind in ScoreKind::ALL {
            assert_eq!(kind.name().parse::<ScoreKind>().unwrap(), kind);
        }
        assert_eq!(
            "sigma-spmi".parse::<ScoreKind>().unwrap(),
            ScoreKind::SigmaSpmi
        );
        assert!("foo".parse::<ScoreKind>().is_err());
    }

    #[test]
    fn file_header_and_round_trip() {
        let pmi = pmi_matrix::<f64>(&counts_ab(3, 5, 1)).unwrap();
        let s = transform(&pmi, ScoreKind::SigmaSpmi, 5.0).unwrap();
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("SigmaSPMI 5 2 3\n"), "{text}");
        let back = SparseScoreMatrix::<f64>::read_from(&buf[..]).unwrap();
        assert_eq!(back.kind(), ScoreKind::SigmaSpmi);
        for (a, b) in back.entries().iter().zip(s.entries()) {
            assert!((a.2 - b.2).abs() < 1e-8 * b.2.abs());
        }
    }

    #[test]
    fn full_values_double_off_diagonal() {
        let m = SparseScoreMatrix::from_entries(
            ScoreKind::Spmi,
            1.0,
            3,
            vec![(0, 0, 1.0), (2, 1, 2.0)],
        )
        .unwrap();
        assert_eq!(m.full_values().collect::<Vec<_>>(), vec![1.0, 2.0, 2.0]);
        assert_eq!(m.get(1, 2), Some(2.0));
        let dense = m.to_csr().to_dense();
        assert_eq!(dense[(2, 1)], 2.0);
        assert_eq!(dense[(1, 2)], 2.0);
    }
}
