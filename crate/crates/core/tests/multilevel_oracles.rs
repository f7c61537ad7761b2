mod common;

use critkit::coarsen::CoarseningParams;
use critkit::krylov::{gmres, GmresParams};
use critkit::multilevel::{
    extract_component, pc_apply, setup_masm, setup_sgmasm, MultiComponentMatrix, MultilevelParams,
};
use critkit::operator::LinearOperator;
use critkit::report::estimate_memory;
use critkit::schwarz::grow_overlap;
use critkit::SparseMatrix;
use nalgebra::{DMatrix, DVector};

fn to_na(m: &SparseMatrix) -> DMatrix<f64> {
    let d = m.to_dense();
    DMatrix::from_fn(m.n_rows(), m.n_cols(), |i, j| d[i][j])
}

fn replicated(x: &SparseMatrix, n: usize) -> MultiComponentMatrix {
    MultiComponentMatrix::from_components(&vec![x.clone(); n]).unwrap()
}

fn params(min_coarse: usize, np1: usize, delta: usize) -> MultilevelParams {
    MultilevelParams {
        coarsening: CoarseningParams {
            min_coarse,
            ..CoarseningParams::default()
        },
        np1,
        delta,
        ..MultilevelParams::default()
    }
}

fn gs_matrix(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.lower_triangle().try_inverse().unwrap()
}

/// One-sweep Gauss-Seidel RAS over the level's partition as a dense matrix.
fn dense_ras(a: &SparseMatrix, owners: &[usize], delta: usize) -> DMatrix<f64> {
    let n = a.n_rows();
    let dense = to_na(a);
    let ranks = owners.iter().max().unwrap() + 1;
    let mut out = DMatrix::zeros(n, n);
    for r in 0..ranks {
        let owned: Vec<usize> = (0..n).filter(|&i| owners[i] == r).collect();
        if owned.is_empty() {
            continue;
        }
        let rows = grow_overlap(a, &owned, delta).unwrap();
        let ai = DMatrix::from_fn(rows.len(), rows.len(), |p, q| dense[(rows[p], rows[q])]);
        let si = gs_matrix(&ai);
        for (p, &gi) in rows.iter().enumerate() {
            if owned.contains(&gi) {
                for (q, &gj) in rows.iter().enumerate() {
                    out[(gi, gj)] = si[(p, q)];
                }
            }
        }
    }
    out
}

#[test]
fn two_level_cycle_matches_dense_composition() {
    let m = replicated(&common::laplacian(40), 2);
    let h = setup_sgmasm(&m, &params(40, 2, 1)).unwrap();
    assert_eq!(h.n_levels(), 2);
    let a = to_na(m.full());
    let p = to_na(&h.interpolations()[0].to_sparse());
    let ac = p.transpose() * &a * &p;
    let b = dense_ras(m.full(), h.levels()[0].partition.owner(), 1);
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let pre = b.clone();
    let coarse = &pre + &p * ac.try_inverse().unwrap() * p.transpose() * (&id - &a * &pre);
    let full = &coarse + &b * (&id - &a * &coarse);
    let r: Vec<f64> = (0..n).map(|i| ((i * 37) % 23) as f64 / 7.0 - 1.5).collect();
    let got = pc_apply(&h, &r).unwrap();
    let want = full * DVector::from_vec(r);
    for (g, w) in got.iter().zip(want.iter()) {
        assert!((g - w).abs() <= 1e-12 * (1.0 + w.abs()), "{g} vs {w}");
    }
}

#[test]
fn pc_apply_is_linear() {
    let m = replicated(&common::laplacian(129), 3);
    for h in [setup_sgmasm(&m, &params(20, 2, 1)).unwrap(), setup_masm(&m, &params(20, 2, 1)).unwrap()] {
        let n = m.full().n_rows();
        let r1: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let r2: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos()).collect();
        let (a, b) = (2.5, -0.75);
        let mix: Vec<f64> = r1.iter().zip(&r2).map(|(x, y)| a * x + b * y).collect();
        let lhs = pc_apply(&h, &mix).unwrap();
        let (e1, e2) = (pc_apply(&h, &r1).unwrap(), pc_apply(&h, &r2).unwrap());
        for i in 0..n {
            let rhs = a * e1[i] + b * e2[i];
            assert!((lhs[i] - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }
}

#[test]
fn galerkin_identity_on_every_level() {
    let m = replicated(&common::laplacian(100), 2);
    let h = setup_sgmasm(&m, &params(10, 1, 1)).unwrap();
    let ops = h.operators();
    for (l, p) in h.interpolations().iter().enumerate() {
        let pd = to_na(&p.to_sparse());
        let want = pd.transpose() * to_na(ops[l]) * &pd;
        let got = to_na(ops[l + 1]);
        assert!((got - want).abs().max() < 1e-12);
    }
}

#[test]
fn sgmasm_equals_masm_on_identical_components() {
    let m = replicated(&common::laplacian(257), 4);
    let p = params(50, 1, 1);
    let s = setup_sgmasm(&m, &p).unwrap();
    let f = setup_masm(&m, &p).unwrap();
    assert_eq!(s.n_levels(), f.n_levels());
    for (a, b) in s.operators().iter().zip(f.operators()) {
        assert_eq!(a.row_offsets(), b.row_offsets());
        assert_eq!(a.col_indices(), b.col_indices());
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
    for (a, b) in s.interpolations().iter().zip(f.interpolations()) {
        assert_eq!(a.to_sparse(), b.to_sparse());
    }
    let rhs: Vec<f64> = (0..m.full().n_rows()).map(|i| 1.0 + (i % 5) as f64).collect();
    let gp = GmresParams::new(1e-10, 30);
    let (_, rs) = gmres(m.full(), Some(&s), &rhs, None, &gp).unwrap();
    let (_, rf) = gmres(m.full(), Some(&f), &rhs, None, &gp).unwrap();
    assert_eq!(rs.iterations, rf.iterations);
    assert_eq!(rs.residual_history.len(), rf.residual_history.len());
    for (a, b) in rs.residual_history.iter().zip(&rf.residual_history) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300) + 1e-300);
    }
}

#[test]
fn subspace_setup_does_a_quarter_of_the_work() {
    let m = replicated(&common::laplacian(257), 4);
    let p = params(50, 1, 1);
    let s = setup_sgmasm(&m, &p).unwrap();
    let f = setup_masm(&m, &p).unwrap();
    assert_eq!(4 * s.setup_work().rows_split, f.setup_work().rows_split);
    assert!(estimate_memory(&[&s], 0) < estimate_memory(&[&f], 0));
}

#[test]
fn component_extraction_round_trip() {
    let blocks: Vec<SparseMatrix> = (0..3)
        .map(|k| {
            let mut l = common::laplacian(5);
            l.scale(k as f64 + 1.0);
            l
        })
        .collect();
    let m = MultiComponentMatrix::from_components(&blocks).unwrap();
    for (j, b) in blocks.iter().enumerate() {
        assert_eq!(&extract_component(&m, j).unwrap(), b);
    }
}

#[test]
fn multilevel_beats_one_level() {
    use critkit::multilevel::{Preconditioner, PreconditionerKind};
    let m = replicated(&common::laplacian(1025), 1);
    let p = params(50, 4, 1);
    let b: Vec<f64> = vec![1.0; 1025];
    let gp = GmresParams::new(1e-8, 30);
    let ml = Preconditioner::build(PreconditionerKind::Sgmasm, &m, &p).unwrap();
    let one = Preconditioner::build(PreconditionerKind::Ras, &m, &p).unwrap();
    let (x, rm) = gmres(m.full(), Some(&ml), &b, None, &gp).unwrap();
    let (_, ro) = gmres(m.full(), Some(&one), &b, None, &gp).unwrap();
    assert!(rm.converged);
    assert!(rm.iterations <= 25, "{}", rm.iterations);
    assert!(rm.iterations <= ro.iterations);
    let res: Vec<f64> = m.full().apply_vec(&x).iter().zip(&b).map(|(a, c)| a - c).collect();
    assert!(res.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-8 * (1025f64).sqrt());
}
