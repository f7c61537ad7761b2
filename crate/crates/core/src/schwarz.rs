//! Overlapping subdomains, SOR subdomain solves and the one-level restricted
//! additive Schwarz (RAS) preconditioner
//! `e = Σᵢ (R_i^0)ᵀ (M_i^δ)⁻¹ R_i^δ r`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operator::LinearOperator;
use crate::partition::Partition;
use crate::sparse::{extract_principal_submatrix, SparseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct Subdomain {
    pub owned_rows: Vec<usize>,
    pub overlap_rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMap {
    pub subdomains: Vec<Subdomain>,
    pub delta: usize,
}

impl OverlapMap {
    /// Grows every nonempty rank of `partition` by `delta` layers over the
    /// symmetrized pattern of `a`. Empty ranks are dropped.
    pub fn build(a: &SparseMatrix, partition: &Partition, delta: usize) -> Result<Self> {
        if partition.owner().len() != a.n_rows() {
            return Err(Error::dims(
                "OverlapMap::build",
                a.n_rows(),
                partition.owner().len(),
            ));
        }
        let adj = a.symmetric_adjacency();
        let subdomains = partition
            .rank_rows()
            .into_iter()
            .filter(|rows| !rows.is_empty())
            .map(|owned| {
                let overlap = grow_with_adjacency(&adj, &owned, delta);
                Subdomain {
                    owned_rows: owned,
                    overlap_rows: overlap,
                }
            })
            .collect();
        Ok(Self { subdomains, delta })
    }

    pub fn single(n: usize, delta: usize) -> Self {
        let rows: Vec<usize> = (0..n).collect();
        Self {
            subdomains: vec![Subdomain {
                owned_rows: rows.clone(),
                overlap_rows: rows,
            }],
            delta,
        }
    }
}

/// `δ` rounds of `S ← S ∪ {j : A(i,j) ≠ 0 or A(j,i) ≠ 0, i ∈ S}`.
pub fn grow_overlap(a: &SparseMatrix, owned_rows: &[usize], delta: usize) -> Result<Vec<usize>> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::dims("grow_overlap", a.n_rows(), a.n_cols()));
    }
    if let Some(&bad) = owned_rows.iter().find(|&&r| r >= a.n_rows()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            bound: a.n_rows(),
        });
    }
    Ok(grow_with_adjacency(&a.symmetric_adjacency(), owned_rows, delta))
}

fn grow_with_adjacency(adj: &[Vec<usize>], owned_rows: &[usize], delta: usize) -> Vec<usize> {
    let mut inside = vec![false; adj.len()];
    let mut frontier: Vec<usize> = owned_rows.to_vec();
    for &r in owned_rows {
        inside[r] = true;
    }
    for _ in 0..delta {
        let mut next = Vec::new();
        for &i in &frontier {
            for &j in &adj[i] {
                if !inside[j] {
                    inside[j] = true;
                    next.push(j);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    inside
        .iter()
        .enumerate()
        .filter_map(|(i, &f)| f.then_some(i))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SorParams {
    pub sweeps: usize,
    pub omega: f64,
}

impl Default for SorParams {
    fn default() -> Self {
        Self {
            sweeps: 1,
            omega: 1.0,
        }
    }
}

/// Forward SOR from a zero initial guess.
pub fn sor_solve(a: &SparseMatrix, b: &[f64], sweeps: usize, omega: f64) -> Result<Vec<f64>> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::dims("sor_solve", a.n_rows(), a.n_cols()));
    }
    if b.len() != a.n_rows() {
        return Err(Error::dims("sor_solve", a.n_rows(), b.len()));
    }
    let diag = checked_diagonal(a)?;
    let mut x = vec![0.0; b.len()];
    sor_sweeps(a, &diag, b, &mut x, sweeps, omega);
    Ok(x)
}

fn checked_diagonal(a: &SparseMatrix) -> Result<Vec<f64>> {
    let diag = a.diagonal();
    match diag.iter().position(|&d| d == 0.0) {
        Some(row) => Err(Error::SingularDiagonal { row }),
        None => Ok(diag),
    }
}

fn sor_sweeps(a: &SparseMatrix, diag: &[f64], b: &[f64], x: &mut [f64], sweeps: usize, omega: f64) {
    for _ in 0..sweeps {
        for i in 0..x.len() {
            let (cols, vals) = a.row(i);
            let mut s = b[i];
            for (&c, &v) in cols.iter().zip(vals) {
                if c != i {
                    s -= v * x[c];
                }
            }
            x[i] += omega * (s / diag[i] - x[i]);
        }
    }
}

/// One-shot RAS application; extracts the overlapping submatrices on every
/// call. [`RasPreconditioner`] caches them for repeated use.
pub fn ras_apply(
    m: &SparseMatrix,
    overlap: &OverlapMap,
    r: &[f64],
    sweeps: usize,
    omega: f64,
) -> Result<Vec<f64>> {
    let pc = RasPreconditioner::new(m, overlap.clone(), SorParams { sweeps, omega })?;
    if r.len() != pc.n {
        return Err(Error::dims("ras_apply", pc.n, r.len()));
    }
    Ok(pc.apply_vec(r))
}

struct LocalProblem {
    matrix: SparseMatrix,
    diag: Vec<f64>,
    // Positions of the owned rows inside the overlap row list.
    owned_local: Vec<usize>,
}

pub struct RasPreconditioner {
    n: usize,
    overlap: OverlapMap,
    locals: Vec<LocalProblem>,
    sor: SorParams,
}

impl RasPreconditioner {
    pub fn new(m: &SparseMatrix, overlap: OverlapMap, sor: SorParams) -> Result<Self> {
        if m.n_rows() != m.n_cols() {
            return Err(Error::dims("RasPreconditioner", m.n_rows(), m.n_cols()));
        }
        let locals = overlap
            .subdomains
            .iter()
            .map(|sd| {
                let matrix = extract_principal_submatrix(m, &sd.overlap_rows)?;
                let diag = checked_diagonal(&matrix).map_err(|e| match e {
                    Error::SingularDiagonal { row } => Error::SingularDiagonal {
                        row: sd.overlap_rows[row],
                    },
                    other => other,
                })?;
                let owned_local = sd
                    .owned_rows
                    .iter()
                    .map(|r| {
                        sd.overlap_rows
                            .binary_search(r)
                            .map_err(|_| Error::InvalidInput("owned row outside overlap".into()))
                    })
                    .collect::<Result<_>>()?;
                Ok(LocalProblem {
                    matrix,
                    diag,
                    owned_local,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n: m.n_rows(),
            overlap,
            locals,
            sor,
        })
    }

    pub fn overlap(&self) -> &OverlapMap {
        &self.overlap
    }

    pub fn submatrices(&self) -> impl Iterator<Item = &SparseMatrix> {
        self.locals.iter().map(|l| &l.matrix)
    }

    pub fn storage_bytes(&self) -> usize {
        self.locals
            .iter()
            .map(|l| l.matrix.storage_bytes() + l.diag.len() * 8)
            .sum()
    }
}

impl LinearOperator for RasPreconditioner {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, r: &[f64], e: &mut [f64]) {
        let solves: Vec<Vec<f64>> = self
            .overlap
            .subdomains
            .par_iter()
            .zip(self.locals.par_iter())
            .map(|(sd, local)| {
                let rhs: Vec<f64> = sd.overlap_rows.iter().map(|&i| r[i]).collect();
                let mut x = vec![0.0; rhs.len()];
                sor_sweeps(
                    &local.matrix,
                    &local.diag,
                    &rhs,
                    &mut x,
                    self.sor.sweeps,
                    self.sor.omega,
                );
                x
            })
            .collect();
        e.iter_mut().for_each(|v| *v = 0.0);
        for ((sd, local), x) in self.overlap.subdomains.iter().zip(&self.locals).zip(&solves) {
            for (&row, &k) in sd.owned_rows.iter().zip(&local.owned_local) {
                e[row] = x[k];
            }
        }
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
    fn sor_diagonal_is_exact() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 4.0)]).unwrap();
        assert_eq!(sor_solve(&a, &[2.0, 4.0], 1, 1.0).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn gauss_seidel_hand_trace() {
        // x0 = 1/2, x1 = (1 + 1/2)/2, x2 = (1 + 3/4)/2
        let x = sor_solve(&laplacian(3), &[1.0, 1.0, 1.0], 1, 1.0).unwrap();
        assert_eq!(x, vec![0.5, 0.75, 0.875]);
    }

    #[test]
    fn sor_zero_diagonal() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(matches!(
            sor_solve(&a, &[1.0, 1.0], 1, 1.0),
            Err(Error::SingularDiagonal { row: 1 })
        ));
    }

    #[test]
    fn grow_zero_layers_is_identity() {
        assert_eq!(grow_overlap(&laplacian(7), &[4, 5, 6], 0).unwrap(), vec![4, 5, 6]);
    }

    #[test]
    fn grow_follows_transposed_pattern() {
        // lower bidiagonal: row i couples to i-1 only
        let t: Vec<_> = (0..5)
            .flat_map(|i| {
                let mut v = vec![(i, i, 1.0)];
                if i > 0 {
                    v.push((i, i - 1, -1.0));
                }
                v
            })
            .collect();
        let a = SparseMatrix::from_triplets(5, 5, &t).unwrap();
        assert_eq!(grow_overlap(&a, &[2], 1).unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn diagonal_matrix_ras_is_exact_inverse() {
        let a = SparseMatrix::from_triplets(4, 4, &[(0, 0, 2.0), (1, 1, 4.0), (2, 2, 8.0), (3, 3, 0.5)]).unwrap();
        let part = Partition::from_owners(vec![0, 0, 1, 1], 2, 1).unwrap();
        let ov = OverlapMap::build(&a, &part, 1).unwrap();
        let e = ras_apply(&a, &ov, &[2.0, 4.0, 8.0, 1.0], 1, 1.0).unwrap();
        assert_eq!(e, vec![1.0, 1.0, 1.0, 2.0]);
    }

    #[test]
    fn single_subdomain_many_sweeps_inverts() {
        let a = laplacian(6);
        let ov = OverlapMap::single(6, 0);
        let x_true = [1.0, -1.0, 2.0, 0.0, 3.0, 1.0];
        let r = a.spmv(&x_true).unwrap();
        let e = ras_apply(&a, &ov, &r, 2000, 1.5).unwrap();
        for (ei, ti) in e.iter().zip(x_true) {
            assert!((ei - ti).abs() < 1e-10);
        }
    }
}
