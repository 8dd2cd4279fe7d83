//! Dense and sparse matrix kernels used by the factorization and spectrum
//! code. Everything is generic over [`Real`].

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::domain(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Matrix with i.i.d. standard normal entries.
    pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Self::from_fn(rows, cols, |_, _| {
            T::of(rng.sample::<f64, _>(StandardNormal))
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Leading `cols` columns.
    pub fn truncate_cols(&self, cols: usize) -> Self {
        Self::from_fn(self.rows, cols.min(self.cols), |i, j| self[(i, j)])
    }

    pub fn to_columns(&self) -> Vec<Vec<T>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn from_columns(rows: usize, columns: &[Vec<T>]) -> Self {
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    /// `self * other`, parallel over output rows.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        if other.cols == 0 {
            return out;
        }
        out.data
            .par_chunks_mut(other.cols)
            .enumerate()
            .for_each(|(i, dst)| {
                for (k, &a) in self.row(i).iter().enumerate() {
                    if a != T::zero() {
                        axpy(a, other.row(k), dst);
                    }
                }
            });
        out
    }

    /// Multiplies column `j` by `factors[j]`.
    pub fn scale_columns(&self, factors: &[T]) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * factors[j])
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub(crate) fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds from unsorted `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(u32, u32, T)>) -> Self {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices: Vec<u32> = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(u32, u32)> = None;
        for (i, j, v) in triplets {
            debug_assert!((i as usize) < rows && (j as usize) < cols);
            if last == Some((i, j)) {
                *values.last_mut().expect("previous entry") += v;
                continue;
            }
            last = Some((i, j));
            indptr[i as usize + 1] += 1;
            indices.push(j);
            values.push(v);
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .zip(&self.values[span])
            .map(|(&j, &v)| (j as usize, v))
    }

    pub fn transpose(&self) -> Self {
        let triplets = (0..self.rows)
            .flat_map(|i| {
                self.row_entries(i)
                    .map(move |(j, v)| (j as u32, i as u32, v))
            })
            .collect();
        Self::from_triplets(self.cols, self.rows, triplets)
    }

    /// `self * x` for a dense right-hand side. Each output row is reduced in
    /// a fixed order, so results do not depend on thread scheduling.
    pub fn mul_dense(&self, x: &DenseMatrix<T>) -> DenseMatrix<T> {
        assert_eq!(self.cols, x.rows(), "inner dimensions differ");
        let k = x.cols();
        let mut out = DenseMatrix::zeros(self.rows, k);
        if k == 0 {
            return out;
        }
        out.data.par_chunks_mut(k).enumerate().for_each(|(i, dst)| {
            for (j, v) in self.row_entries(i) {
                axpy(v, x.row(j), dst);
            }
        });
        out
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row_entries(i) {
                m[(i, j)] += v;
            }
        }
        m
    }
}

/// Something that can be multiplied against dense blocks of vectors.
pub trait LinearOperator<T: Real>: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `A X`
    fn apply(&self, x: &DenseMatrix<T>) -> DenseMatrix<T>;
    /// `Aᵀ X`
    fn apply_transpose(&self, x: &DenseMatrix<T>) -> DenseMatrix<T>;
}

impl<T: Real> LinearOperator<T> for DenseMatrix<T> {
    fn nrows(&self) -> usize {
        self.rows
    }
    fn ncols(&self) -> usize {
        self.cols
    }
    fn apply(&self, x: &DenseMatrix<T>) -> DenseMatrix<T> {
        self.matmul(x)
    }
    fn apply_transpose(&self, x: &DenseMatrix<T>) -> DenseMatrix<T> {
        self.transpose().matmul(x)
    }
}

/// A sparse matrix paired with its transpose so both products stay sparse.
pub struct SparseOperator<T> {
    forward: CsrMatrix<T>,
    backward: Option<CsrMatrix<T>>,
}

impl<T: Real> SparseOperator<T> {
    pub fn new(m: CsrMatrix<T>) -> Self {
        let backward = Some(m.transpose());
        SparseOperator {
            forward: m,
            backward,
        }
    }

    /// Skips building the transpose; the caller guarantees symmetry.
    pub fn symmetric(m: CsrMatrix<T>) -> Self {
        SparseOperator {
            forward: m,
            backward: None,
        }
    }
}

impl<T: Real> LinearOperator<T> for SparseOperator<T> {
    fn nrows(&self) -> usize {
        self.forward.rows()
    }
    fn ncols(&self) -> usize {
        self.forward.cols()
    }
    fn apply(&self, x: &DenseMatrix<T>) -> DenseMatrix<T> {
        self.forward.mul_dense(x)
    }
    fn apply_transpose(&self, x: &DenseMatrix<T>) -> DenseMatrix<T> {
        self.backward.as_ref().unwrap_or(&self.forward).mul_dense(x)
    }
}

/// Orthonormalizes `columns` in place by classical Gram-Schmidt with one
/// reorthogonalization pass, returning the upper-triangular `R` with
/// `original = Q R`.
///
/// A column that is numerically dependent on its predecessors is replaced by
/// a random unit vector orthogonal to them; its diagonal entry in `R` is 0.
pub fn orthonormalize<T: Real, R: Rng + ?Sized>(
    columns: &mut [Vec<T>],
    rng: &mut R,
) -> Result<DenseMatrix<T>> {
    let k = columns.len();
    let m = columns.first().map_or(0, Vec::len);
    if k > m {
        return Err(Error::domain(format!(
            "cannot orthonormalize {k} vectors in dimension {m}"
        )));
    }
    let tol = T::epsilon().sqrt();
    let mut r = DenseMatrix::zeros(k, k);
    for j in 0..k {
        let (done, rest) = columns.split_at_mut(j);
        let v = &mut rest[0];
        let initial = norm(v);
        for _ in 0..2 {
            let h: Vec<T> = done.par_iter().map(|q| dot(q, v)).collect();
            for (i, (q, &hi)) in done.iter().zip(&h).enumerate() {
                axpy(-hi, q, v);
                r[(i, j)] += hi;
            }
        }
        let residual = norm(v);
        if initial > T::zero() && residual > tol * initial {
            r[(j, j)] = residual;
            v.iter_mut().for_each(|x| *x /= residual);
            continue;
        }
        // Dependent column: substitute a fresh direction.
        loop {
            v.iter_mut()
                .for_each(|x| *x = T::of(rng.sample::<f64, _>(StandardNormal)));
            for _ in 0..2 {
                for q in done.iter() {
                    let h = dot(q, v);
                    axpy(-h, q, v);
                }
            }
            let nv = norm(v);
            if nv > tol {
                v.iter_mut().for_each(|x| *x /= nv);
                break;
            }
        }
    }
    Ok(r)
}

/// Thin SVD `A = U diag(s) Vᵀ` of a matrix with at least as many rows as
/// columns, by one-sided Jacobi rotations. Singular values are returned in
/// descending order.
pub fn jacobi_svd<T: Real>(a: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, Vec<T>, DenseMatrix<T>)> {
    let (m, k) = (a.rows(), a.cols());
    if k > m {
        return Err(Error::domain("jacobi_svd expects rows >= cols"));
    }
    let mut cols = a.to_columns();
    let mut v = DenseMatrix::<T>::identity(k).to_columns();
    let eps = T::epsilon();
    // Columns at rounding level of the whole matrix carry no signal and can
    // rotate among themselves forever; they are left alone.
    let negligible = eps * eps * cols.iter().fold(T::zero(), |acc, c| acc + dot(c, c));
    let mut converged = false;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == T::zero()
                    || gamma.abs() <= eps * (alpha * beta).sqrt()
                    || alpha.min(beta) <= negligible
                {
                    continue;
                }
                rotated = true;
                let two = T::of(2.0);
                let zeta = (beta - alpha) / (two * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Internal("Jacobi SVD did not converge".into()));
    }

    let mut order: Vec<usize> = (0..k).collect();
    let norms: Vec<T> = cols.iter().map(|c| norm(c)).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).expect("finite norms"));

    let sigma: Vec<T> = order.iter().map(|&i| norms[i]).collect();
    let smax = sigma.first().copied().unwrap_or(T::zero());
    let cutoff = smax * eps * T::of_usize(m.max(1));
    let mut u_cols: Vec<Vec<T>> = Vec::with_capacity(k);
    let mut missing = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        if norms[i] > cutoff && norms[i] > T::zero() {
            u_cols.push(cols[i].iter().map(|&x| x / norms[i]).collect());
        } else {
            u_cols.push(vec![T::zero(); m]);
            missing.push(pos);
        }
    }
    complete_basis(&mut u_cols, &missing);
    let v_sorted: Vec<Vec<T>> = order.iter().map(|&i| v[i].clone()).collect();
    Ok((
        DenseMatrix::from_columns(m, &u_cols),
        sigma,
        DenseMatrix::from_columns(k, &v_sorted),
    ))
}

fn rotate<T: Real>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (head, tail) = cols.split_at_mut(q);
    let (cp, cq) = (&mut head[p], &mut tail[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills the listed zero columns with unit vectors orthogonal to all others.
fn complete_basis<T: Real>(cols: &mut [Vec<T>], missing: &[usize]) {
    let m = cols.first().map_or(0, Vec::len);
    let mut candidate = 0usize;
    for &slot in missing {
        while candidate < m {
            let mut e = vec![T::zero(); m];
            e[candidate] = T::one();
            candidate += 1;
            for _ in 0..2 {
                for (idx, c) in cols.iter().enumerate() {
                    if idx == slot {
                        continue;
                    }
                    let h = dot(c, &e);
                    axpy(-h, c, &mut e);
                }
            }
            let n = norm(&e);
            if n > T::of(0.5) {
                e.iter_mut().for_each(|x| *x /= n);
                cols[slot] = e;
                break;
            }
        }
    }
}

/// All eigenvalues of a real symmetric matrix, ascending.
///
/// Householder reduction to tridiagonal form followed by the implicit QL
/// iteration. Only the lower triangle of `a` is read.
pub fn symmetric_eigenvalues<T: Real>(mut a: DenseMatrix<T>) -> Result<Vec<T>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::domain("eigenvalues need a square matrix"));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let (mut d, mut e) = tridiagonalize(&mut a);
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(d)
}

/// Returns the diagonal and the sub-diagonal (`e[i]` couples `i-1` and `i`,
/// `e[0] = 0`).
fn tridiagonalize<T: Real>(a: &mut DenseMatrix<T>) -> (Vec<T>, Vec<T>) {
    let n = a.rows();
    let mut e = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    for i in (1..n).rev() {
        let l = i - 1;
        if l == 0 {
            e[i] = a[(i, l)];
            continue;
        }
        let scale: T = a.row(i)[..i].iter().map(|x| x.abs()).sum();
        if scale == T::zero() {
            e[i] = a[(i, l)];
            continue;
        }
        let mut h = T::zero();
        for x in &mut a.row_mut(i)[..i] {
            *x /= scale;
            h += *x * *x;
        }
        let f = a[(i, l)];
        let g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
        e[i] = scale * g;
        h -= f * g;
        a[(i, l)] = f - g;
        let u: Vec<T> = a.row(i)[..i].to_vec();

        // p = (A u) / h over the leading i x i block, lower triangle only.
        let cols = a.cols();
        let data = &a.data;
        let lower: Vec<T> = (0..i)
            .into_par_iter()
            .map(|j| dot(&data[j * cols..j * cols + j + 1], &u[..=j]))
            .collect();
        p[..i].copy_from_slice(&lower);
        for j in 0..i {
            let uj = u[j];
            if uj == T::zero() {
                continue;
            }
            axpy(uj, &data[j * cols..j * cols + j], &mut p[..j]);
        }
        let mut f = T::zero();
        for j in 0..i {
            p[j] /= h;
            f += p[j] * u[j];
        }
        let hh = f / (h + h);
        for j in 0..i {
            p[j] -= hh * u[j];
        }
        // A -= u pᵀ + p uᵀ on the lower triangle.
        a.data[..i * cols]
            .par_chunks_mut(cols)
            .enumerate()
            .for_each(|(j, row)| {
                let (fj, gj) = (u[j], p[j]);
                for k in 0..=j {
                    row[k] -= fj * p[k] + gj * u[k];
                }
            });
    }
    let d = (0..n).map(|i| a[(i, i)]).collect();
    (d, e)
}

fn tridiagonal_ql<T: Real>(d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let two = T::of(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Internal(
                    "tridiagonal QL iteration did not converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut i = m as isize - 1;
            let mut underflow = false;
            while i >= l as isize {
                let iu = i as usize;
                let f = s * e[iu];
                let b = c * e[iu];
                r = f.hypot(g);
                e[iu + 1] = r;
                if r == T::zero() {
                    d[iu + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[iu + 1] - p;
                r = (d[iu] - g) * s + two * c * b;
                p = s * r;
                d[iu + 1] = g + p;
                g = c * r - b;
                i -= 1;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}
