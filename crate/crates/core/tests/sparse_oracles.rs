use critkit::sparse::{extract_principal_submatrix, galerkin_triple_product};
use critkit::SparseMatrix;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn to_na(m: &SparseMatrix) -> DMatrix<f64> {
    let d = m.to_dense();
    DMatrix::from_fn(m.n_rows(), m.n_cols(), |i, j| d[i][j])
}

fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    a.shape() == b.shape() && a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

prop_compose! {
    fn sparse(max_rows: usize, max_cols: usize)(rows in 1..=max_rows, cols in 1..=max_cols)
        (cells in prop::collection::vec((any::<bool>(), -5.0f64..5.0), rows * cols), rows in Just(rows), cols in Just(cols))
        -> SparseMatrix
    {
        let t: Vec<_> = cells
            .iter()
            .enumerate()
            .filter(|(_, (keep, _))| *keep)
            .map(|(k, (_, v))| (k / cols, k % cols, *v))
            .collect();
        SparseMatrix::from_triplets(rows, cols, &t).unwrap()
    }
}

fn square(max: usize) -> impl Strategy<Value = SparseMatrix> {
    (1..=max).prop_flat_map(|n| {
        prop::collection::vec((any::<bool>(), -5.0f64..5.0), n * n).prop_map(move |cells| {
            let t: Vec<_> = cells
                .iter()
                .enumerate()
                .filter(|(_, (keep, _))| *keep)
                .map(|(k, (_, v))| (k / n, k % n, *v))
                .collect();
            SparseMatrix::from_triplets(n, n, &t).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn spmv_matches_dense(m in sparse(9, 9), seed in 0u64..1000) {
        let x: Vec<f64> = (0..m.n_cols()).map(|i| ((i as u64 * 31 + seed) % 17) as f64 - 8.0).collect();
        let y = m.spmv(&x).unwrap();
        let oracle = to_na(&m) * nalgebra::DVector::from_vec(x);
        for (a, b) in y.iter().zip(oracle.iter()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn transpose_matches_dense(m in sparse(8, 8)) {
        prop_assert!(close(&to_na(&m.transpose()), &to_na(&m).transpose(), 0.0));
    }

    #[test]
    fn matmul_matches_dense(a in sparse(7, 6), b_cols in 1usize..7, fill in prop::collection::vec(-3.0f64..3.0, 49)) {
        let t: Vec<_> = (0..a.n_cols())
            .flat_map(|i| (0..b_cols).map(move |j| (i, j)))
            .filter(|(i, j)| (i + 2 * j) % 3 != 0)
            .map(|(i, j)| (i, j, fill[(i * 7 + j) % 49]))
            .collect();
        let b = SparseMatrix::from_triplets(a.n_cols(), b_cols, &t).unwrap();
        prop_assert!(close(&to_na(&a.matmul(&b).unwrap()), &(to_na(&a) * to_na(&b)), 1e-12));
    }

    #[test]
    fn galerkin_matches_dense(a in square(8), p_cols in 1usize..5, fill in prop::collection::vec(0.0f64..1.0, 40)) {
        let n = a.n_rows();
        let t: Vec<_> = (0..n).map(|i| (i, i % p_cols, fill[i % 40] + 0.5)).collect();
        let p = SparseMatrix::from_triplets(n, p_cols, &t).unwrap();
        let oracle = to_na(&p).transpose() * to_na(&a) * to_na(&p);
        prop_assert!(close(&to_na(&galerkin_triple_product(&p, &a).unwrap()), &oracle, 1e-12));
    }

    #[test]
    fn submatrix_matches_dense(m in square(9), mask in prop::collection::vec(any::<bool>(), 9)) {
        let n = m.n_rows();
        let sq = m;
        let rows: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
        let sub = extract_principal_submatrix(&sq, &rows).unwrap();
        let d = sq.to_dense();
        let oracle = DMatrix::from_fn(rows.len(), rows.len(), |i, j| d[rows[i]][rows[j]]);
        prop_assert!(close(&to_na(&sub), &oracle, 0.0));
    }

    #[test]
    fn coordinate_round_trip(m in sparse(7, 7)) {
        let mut buf = Vec::new();
        m.write_coordinate(&mut buf).unwrap();
        let back = SparseMatrix::read_coordinate(std::io::Cursor::new(buf)).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn add_matches_dense(a in square(6)) {
        let b = a.transpose();
        prop_assert!(close(&to_na(&a.add(&b).unwrap()), &(to_na(&a) + to_na(&b)), 1e-14));
    }
}

#[test]
fn galerkin_identity_interpolation() {
    let a = SparseMatrix::from_dense(&[vec![4.0, -1.0, 0.0], vec![-1.0, 4.0, -1.0], vec![0.0, -1.0, 4.0]]).unwrap();
    let c = galerkin_triple_product(&SparseMatrix::identity(3), &a).unwrap();
    assert_eq!(c.to_dense(), a.to_dense());
}

#[test]
fn explicit_zeros_survive() {
    let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 0.0), (1, 1, 1.0)]).unwrap();
    assert_eq!(m.nnz(), 2);
    assert_eq!(m.get(0, 0), Some(0.0));
}
