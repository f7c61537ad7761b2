#![allow(dead_code)]

use critkit::discretization::{AngularQuadrature, Boundary, CrossSections, SlabMesh};
use nalgebra::{DMatrix, DVector};

pub fn one_group_infinite() -> (SlabMesh, Vec<CrossSections>) {
    (
        SlabMesh::uniform(1, 1.0, 0, Boundary::Reflective, Boundary::Reflective).unwrap(),
        vec![CrossSections::new(vec![1.0], vec![0.6], vec![0.5], vec![1.0]).unwrap()],
    )
}

pub fn two_group_xs() -> Vec<CrossSections> {
    vec![CrossSections::new(
        vec![0.65, 1.3],
        vec![0.5, 0.1, 0.0, 1.1],
        vec![0.01, 0.2],
        vec![1.0, 0.0],
    )
    .unwrap()]
}

/// 16 cells of 1 cm, vacuum on both sides.
pub fn two_group_slab() -> (SlabMesh, Vec<CrossSections>, AngularQuadrature) {
    (
        SlabMesh::uniform(16, 1.0, 0, Boundary::Vacuum, Boundary::Vacuum).unwrap(),
        two_group_xs(),
        AngularQuadrature::gauss_legendre(8).unwrap(),
    )
}

/// Dense `(A, B)` of the angular eigenproblem, written row by row from the
/// upwind cell balance.
pub fn dense_transport(mesh: &SlabMesh, xs: &[CrossSections], quad: &AngularQuadrature) -> (DMatrix<f64>, DMatrix<f64>) {
    let g_n = xs[0].groups();
    let nd = quad.n_dirs();
    let nc = mesh.n_cells();
    let idx = |g: usize, n: usize, c: usize| (g * nd + n) * nc + c;
    let size = g_n * nd * nc;
    let mut a = DMatrix::zeros(size, size);
    let mut b = DMatrix::zeros(size, size);
    let mirror = |n: usize| {
        (0..nd)
            .find(|&m| (quad.mu()[m] + quad.mu()[n]).abs() < 1e-14)
            .unwrap()
    };
    for g in 0..g_n {
        for n in 0..nd {
            let mu = quad.mu()[n];
            for c in 0..nc {
                let m = &xs[mesh.material(c)];
                let h = mesh.width(c);
                let row = idx(g, n, c);
                a[(row, row)] += mu.abs() + m.sigma_t(g) * h;
                if mu > 0.0 {
                    if c > 0 {
                        a[(row, idx(g, n, c - 1))] -= mu;
                    } else if mesh.bc_left() == Boundary::Reflective {
                        a[(row, idx(g, mirror(n), 0))] -= mu;
                    }
                } else if c + 1 < nc {
                    a[(row, idx(g, n, c + 1))] += mu;
                } else if mesh.bc_right() == Boundary::Reflective {
                    a[(row, idx(g, mirror(n), nc - 1))] += mu;
                }
                for gp in 0..g_n {
                    for mm in 0..nd {
                        let w = quad.weights()[mm];
                        a[(row, idx(gp, mm, c))] -= 0.5 * h * m.sigma_s(gp, g) * w;
                        b[(row, idx(gp, mm, c))] += 0.5 * h * m.chi(g) * m.nu_sigma_f(gp) * w;
                    }
                }
            }
        }
    }
    (a, b)
}

/// Dominant eigenvalue of `A⁻¹B` by plain power iteration.
pub fn dense_power_k(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> (f64, DVector<f64>) {
    let lu = a.clone().lu();
    let mut x = DVector::from_element(a.nrows(), 1.0);
    let mut k = 0.0;
    for _ in 0..100_000 {
        let y = lu.solve(&(b * &x)).unwrap();
        let k_new = (b * &y).norm() / (b * &x).norm();
        x = &y / y.norm();
        if (k_new - k).abs() <= tol * k_new {
            return (k_new, x);
        }
        k = k_new;
    }
    panic!("dense power iteration did not converge");
}

pub fn laplacian(n: usize) -> critkit::SparseMatrix {
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
    critkit::SparseMatrix::from_triplets(n, n, &t).unwrap()
}
