//! Compressed sparse row storage and the handful of kernels the solver stack
//! needs: products, transposes, the Galerkin triple product and principal
//! submatrix extraction.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Row-compressed sparse matrix.
///
/// Column indices are strictly increasing within each row and duplicates are
/// rejected at construction. Explicit zeros are kept as structural entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn try_new(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::InvalidStructure(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if row_offsets[0] != 0 {
            return Err(Error::InvalidStructure("row_offsets[0] != 0".into()));
        }
        if col_indices.len() != values.len() || row_offsets[n_rows] != col_indices.len() {
            return Err(Error::InvalidStructure(
                "row_offsets, col_indices and values disagree on nnz".into(),
            ));
        }
        for i in 0..n_rows {
            let (start, end) = (row_offsets[i], row_offsets[i + 1]);
            if start > end {
                return Err(Error::InvalidStructure(format!(
                    "row_offsets decreases at row {i}"
                )));
            }
            let cols = &col_indices[start..end];
            for (k, &c) in cols.iter().enumerate() {
                if c >= n_cols {
                    return Err(Error::IndexOutOfRange {
                        index: c,
                        bound: n_cols,
                    });
                }
                if k > 0 && cols[k - 1] >= c {
                    return Err(Error::InvalidStructure(format!(
                        "columns of row {i} are not strictly increasing"
                    )));
                }
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds from `(row, col, value)` triplets in any order. Duplicate
    /// coordinates are an error; callers pre-sum during assembly.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut sorted = triplets.to_vec();
        for &(i, j, _) in &sorted {
            if i >= n_rows {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    bound: n_rows,
                });
            }
            if j >= n_cols {
                return Err(Error::IndexOutOfRange {
                    index: j,
                    bound: n_cols,
                });
            }
        }
        sorted.sort_by_key(|t| (t.0, t.1));
        if let Some(w) = sorted.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::InvalidStructure(format!(
                "duplicate entry at ({}, {})",
                w[0].0, w[0].1
            )));
        }
        let mut row_offsets = vec![0usize; n_rows + 1];
        for &(i, _, _) in &sorted {
            row_offsets[i + 1] += 1;
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        let col_indices = sorted.iter().map(|t| t.1).collect();
        let values = sorted.iter().map(|t| t.2).collect();
        Self::try_new(n_rows, n_cols, row_offsets, col_indices, values)
    }

    /// Dense rows to sparse, keeping only nonzero entries.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::dims("from_dense", n_cols, row.len()));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n_rows, n_cols, &triplets)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Block-diagonal concatenation; blocks need not be square.
    pub fn block_diagonal(blocks: &[&SparseMatrix]) -> Self {
        let n_rows = blocks.iter().map(|b| b.n_rows).sum();
        let n_cols = blocks.iter().map(|b| b.n_cols).sum();
        let nnz = blocks.iter().map(|b| b.nnz()).sum();
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_offsets.push(0);
        let mut col_shift = 0;
        for b in blocks {
            for i in 0..b.n_rows {
                let (cols, vals) = b.row(i);
                col_indices.extend(cols.iter().map(|c| c + col_shift));
                values.extend_from_slice(vals);
                row_offsets.push(col_indices.len());
            }
            col_shift += b.n_cols;
        }
        Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[s..e], &self.values[s..e])
    }

    /// Stored value at `(i, j)`, `None` when the entry is structurally absent.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|k| vals[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i).unwrap_or(0.0))
            .collect()
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::dims("spmv", self.n_cols, x.len()));
        }
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x`, summing each row in ascending column order.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols, "spmv: x has wrong length");
        assert_eq!(y.len(), self.n_rows, "spmv: y has wrong length");
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            *yi = acc;
        }
    }

    /// `y = Aᵀ x` without forming the transpose.
    pub fn spmv_transpose_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_rows, "spmv_transpose: x has wrong length");
        assert_eq!(y.len(), self.n_cols, "spmv_transpose: y has wrong length");
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v * xi;
            }
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let row_offsets = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let slot = next[c];
                col_indices[slot] = i;
                values[slot] = v;
                next[c] += 1;
            }
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Sparse product `self · other`. Structural entries of the result are the
    /// union of contributing paths, so cancellations leave explicit zeros.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<Self> {
        if self.n_cols != other.n_rows {
            return Err(Error::dims("matmul", self.n_cols, other.n_rows));
        }
        let n_cols = other.n_cols;
        let mut acc = vec![0.0; n_cols];
        let mut marker = vec![usize::MAX; n_cols];
        let mut row_cols: Vec<usize> = Vec::new();
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for i in 0..self.n_rows {
            row_cols.clear();
            let (a_cols, a_vals) = self.row(i);
            for (&k, &a_ik) in a_cols.iter().zip(a_vals) {
                let (b_cols, b_vals) = other.row(k);
                for (&j, &b_kj) in b_cols.iter().zip(b_vals) {
                    if marker[j] != i {
                        marker[j] = i;
                        acc[j] = 0.0;
                        row_cols.push(j);
                    }
                    acc[j] += a_ik * b_kj;
                }
            }
            row_cols.sort_unstable();
            for &j in &row_cols {
                col_indices.push(j);
                values.push(acc[j]);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            n_rows: self.n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Entrywise sum with pattern union.
    pub fn add(&self, other: &SparseMatrix) -> Result<Self> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::dims("add", self.n_rows, other.n_rows));
        }
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        let mut col_indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        row_offsets.push(0);
        for i in 0..self.n_rows {
            let (ac, av) = self.row(i);
            let (bc, bv) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ac.len() || q < bc.len() {
                if q == bc.len() || (p < ac.len() && ac[p] < bc[q]) {
                    col_indices.push(ac[p]);
                    values.push(av[p]);
                    p += 1;
                } else if p == ac.len() || bc[q] < ac[p] {
                    col_indices.push(bc[q]);
                    values.push(bv[q]);
                    q += 1;
                } else {
                    col_indices.push(ac[p]);
                    values.push(av[p] + bv[q]);
                    p += 1;
                    q += 1;
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, row) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        out
    }

    /// Off-diagonal neighbours of each row in the symmetrized pattern
    /// (`A(i,j) ≠ 0` or `A(j,i) ≠ 0`), sorted ascending.
    pub fn symmetric_adjacency(&self) -> Vec<Vec<usize>> {
        assert_eq!(self.n_rows, self.n_cols, "adjacency needs a square matrix");
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.n_rows];
        for i in 0..self.n_rows {
            for &j in self.row(i).0 {
                if i != j {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Storage footprint with 8-byte values, 4-byte column indices and
    /// 8-byte row offsets.
    pub fn storage_bytes(&self) -> usize {
        self.nnz() * (VALUE_BYTES + INDEX_BYTES) + self.row_offsets.len() * OFFSET_BYTES
    }

    /// Writes the coordinate text format: a `n_rows n_cols nnz` header followed
    /// by one 0-based `i j value` line per stored entry.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                writeln!(w, "{i} {c} {v:e}")?;
            }
        }
        Ok(())
    }

    pub fn read_coordinate<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l))
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::config(1, "header", "empty coordinate file"))?;
        let header = header?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::config(hline, "header", "expected `n_rows n_cols nnz`"))?;
        if dims.len() != 3 {
            return Err(Error::config(hline, "header", "expected `n_rows n_cols nnz`"));
        }
        let mut triplets = Vec::with_capacity(dims[2]);
        for (n, line) in lines {
            let line = line?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::config(n, "entry", "expected `i j value`");
            if parts.len() != 3 {
                return Err(bad());
            }
            let i = parts[0].parse().map_err(|_| bad())?;
            let j = parts[1].parse().map_err(|_| bad())?;
            let v = parts[2].parse().map_err(|_| bad())?;
            triplets.push((i, j, v));
        }
        if triplets.len() != dims[2] {
            return Err(Error::config(
                hline,
                "nnz",
                format!("header says {} entries, found {}", dims[2], triplets.len()),
            ));
        }
        Self::from_triplets(dims[0], dims[1], &triplets)
    }
}

pub const VALUE_BYTES: usize = 8;
pub const INDEX_BYTES: usize = 4;
pub const OFFSET_BYTES: usize = 8;

/// Computes `Pᵀ A P`, staged as `(Pᵀ A) P`.
pub fn galerkin_triple_product(p: &SparseMatrix, a: &SparseMatrix) -> Result<SparseMatrix> {
    if a.n_rows != a.n_cols {
        return Err(Error::dims("galerkin_triple_product", a.n_rows, a.n_cols));
    }
    if p.n_rows != a.n_rows {
        return Err(Error::dims("galerkin_triple_product", a.n_rows, p.n_rows));
    }
    p.transpose().matmul(a)?.matmul(p)
}

/// Restriction of square `a` to `rows × rows`, re-indexed locally in the
/// order given. `rows` must be sorted ascending.
pub fn extract_principal_submatrix(a: &SparseMatrix, rows: &[usize]) -> Result<SparseMatrix> {
    if a.n_rows != a.n_cols {
        return Err(Error::dims("extract_principal_submatrix", a.n_rows, a.n_cols));
    }
    if let Some(&bad) = rows.iter().find(|&&r| r >= a.n_rows) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            bound: a.n_rows,
        });
    }
    if rows.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "row set must be strictly ascending".into(),
        ));
    }
    let mut local = vec![usize::MAX; a.n_rows];
    for (k, &r) in rows.iter().enumerate() {
        local[r] = k;
    }
    let mut row_offsets = Vec::with_capacity(rows.len() + 1);
    let mut col_indices = Vec::new();
    let mut values = Vec::new();
    row_offsets.push(0);
    for &r in rows {
        let (cols, vals) = a.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            if local[c] != usize::MAX {
                col_indices.push(local[c]);
                values.push(v);
            }
        }
        row_offsets.push(col_indices.len());
    }
    Ok(SparseMatrix {
        n_rows: rows.len(),
        n_cols: rows.len(),
        row_offsets,
        col_indices,
        values,
    })
}

/// A vector whose entries are all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        match values.iter().position(|v| !v.is_finite()) {
            Some(pos) => Err(Error::NonFinite(pos)),
            None => Ok(Self(values)),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for DenseVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for DenseVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

// Small BLAS-1 helpers shared by the solvers.

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        SparseMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn identity_spmv() {
        let y = SparseMatrix::identity(3).spmv(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(y, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn laplacian_interior_row_annihilates_constants() {
        let y = laplacian(3).spmv(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(y[1], 0.0);
    }

    #[test]
    fn spmv_rejects_wrong_length() {
        let err = laplacian(3).spmv(&[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn duplicates_rejected() {
        let err = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidStructure(_)));
    }

    #[test]
    fn unsorted_columns_rejected() {
        let err = SparseMatrix::try_new(1, 3, vec![0, 2], vec![2, 0], vec![1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidStructure(_)));
    }

    #[test]
    fn explicit_zeros_are_kept() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 0.0), (1, 1, 1.0)]).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 0), Some(0.0));
        assert_eq!(a.get(0, 1), None);
    }

    #[test]
    fn galerkin_identity_returns_a() {
        let a = laplacian(5);
        let c = galerkin_triple_product(&SparseMatrix::identity(5), &a).unwrap();
        assert_eq!(c, a);
    }

    #[test]
    fn galerkin_injection_picks_middle_entry() {
        let a = laplacian(3);
        let p = SparseMatrix::from_triplets(3, 1, &[(1, 0, 1.0)]).unwrap();
        let c = galerkin_triple_product(&p, &a).unwrap();
        assert_eq!(c.to_dense(), vec![vec![2.0]]);
    }

    #[test]
    fn galerkin_dimension_mismatch() {
        let p = SparseMatrix::identity(4);
        assert!(galerkin_triple_product(&p, &laplacian(3)).is_err());
    }

    #[test]
    fn extract_all_rows_is_identity_map() {
        let a = laplacian(6);
        let rows: Vec<usize> = (0..6).collect();
        assert_eq!(extract_principal_submatrix(&a, &rows).unwrap(), a);
    }

    #[test]
    fn extract_rejects_out_of_range() {
        let err = extract_principal_submatrix(&laplacian(3), &[0, 3]).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { index: 3, .. }));
    }

    #[test]
    fn transpose_twice_roundtrips() {
        let a = SparseMatrix::from_triplets(2, 3, &[(0, 2, 1.5), (1, 0, -2.0), (1, 1, 3.0)]).unwrap();
        assert_eq!(a.transpose().transpose(), a);
        assert_eq!(a.transpose().get(2, 0), Some(1.5));
    }

    #[test]
    fn coordinate_roundtrip() {
        let a = laplacian(4);
        let mut buf = Vec::new();
        a.write_coordinate(&mut buf).unwrap();
        let back = SparseMatrix::read_coordinate(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn coordinate_reports_bad_line() {
        let text = "2 2 2\n0 0 1.0\n1 x 2.0\n";
        let err = SparseMatrix::read_coordinate(std::io::Cursor::new(text)).unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }));
    }

    #[test]
    fn storage_bytes_formula() {
        // 100 entries over 10 rows: 100·12 + 11·8
        let t: Vec<_> = (0..10)
            .flat_map(|i| (0..10).map(move |j| (i, j, 1.0)))
            .collect();
        let a = SparseMatrix::from_triplets(10, 10, &t).unwrap();
        assert_eq!(a.storage_bytes(), 100 * 12 + 88);
    }

    #[test]
    fn dense_vector_rejects_nan() {
        assert!(DenseVector::new(vec![1.0, f64::NAN]).is_err());
        assert_eq!(DenseVector::new(vec![1.0]).unwrap().len(), 1);
    }
}
