//! Cell-centered finite-volume multigroup diffusion. Unknown `(g, c)` sits
//! at row `g·n_cells + c`; every row is the cell balance integrated over
//! the cell width.

use super::mesh::{Boundary, SlabMesh};
use super::xs::CrossSections;
use crate::error::Result;
use crate::multilevel::MultiComponentMatrix;
use crate::nda::{ClosureCoefficients, ClosureMode};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionOperators {
    pub a: SparseMatrix,
    pub b: SparseMatrix,
}

/// Face coupling `2 D_L D_R / (h_L D_R + h_R D_L)`; reduces to `D/h` on a
/// uniform single-material mesh.
pub fn face_coefficient(d_l: f64, h_l: f64, d_r: f64, h_r: f64) -> f64 {
    2.0 * d_l * d_r / (h_l * d_r + h_r * d_l)
}

/// Outgoing boundary current per unit flux from the `φ/4 + D ∂φ/∂n = 0`
/// condition with the half-cell gradient eliminated.
pub fn vacuum_coefficient(d: f64, h: f64) -> f64 {
    1.0 / (h / (2.0 * d) + 4.0)
}

/// Same elimination with `1/4` replaced by `1/4 + γ`.
pub fn robin_coefficient(d: f64, h: f64, gamma: f64) -> f64 {
    let a = 0.25 + gamma;
    let t = 2.0 * d / h;
    t * a / (a + t)
}

fn boundary_coefficient(
    mesh: &SlabMesh,
    xs: &[CrossSections],
    closure: Option<&ClosureCoefficients>,
    side: usize,
    g: usize,
) -> f64 {
    let (bc, cell, face) = if side == 0 {
        (mesh.bc_left(), 0, 0)
    } else {
        (mesh.bc_right(), mesh.n_cells() - 1, mesh.n_cells())
    };
    if bc == Boundary::Reflective {
        return 0.0;
    }
    let d = xs[mesh.material(cell)].diffusion(g);
    let h = mesh.width(cell);
    match closure {
        None => vacuum_coefficient(d, h),
        Some(cl) => match cl.mode {
            ClosureMode::Drift => vacuum_coefficient(d, h) + cl.dhat[face][g],
            ClosureMode::SaafFunctional => robin_coefficient(d, h, cl.gamma[side][g]),
        },
    }
}

/// Leakage, removal and closure terms of group `g` in local cell indexing.
fn group_block(
    mesh: &SlabMesh,
    xs: &[CrossSections],
    closure: Option<&ClosureCoefficients>,
    g: usize,
) -> Vec<(usize, usize, f64)> {
    let n = mesh.n_cells();
    let mut diag: Vec<f64> = (0..n)
        .map(|c| xs[mesh.material(c)].removal(g) * mesh.width(c))
        .collect();
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for f in 1..n {
        let (l, r) = (f - 1, f);
        let df = face_coefficient(
            xs[mesh.material(l)].diffusion(g),
            mesh.width(l),
            xs[mesh.material(r)].diffusion(g),
            mesh.width(r),
        );
        let dh = closure.map_or(0.0, |cl| cl.dhat[f][g]);
        diag[l] += df - dh;
        upper[l] = -df - dh;
        diag[r] += df + dh;
        lower[r] = -df + dh;
    }
    diag[0] += boundary_coefficient(mesh, xs, closure, 0, g);
    diag[n - 1] += boundary_coefficient(mesh, xs, closure, 1, g);
    let mut t = Vec::with_capacity(3 * n);
    for c in 0..n {
        if c > 0 {
            t.push((c, c - 1, lower[c]));
        }
        t.push((c, c, diag[c]));
        if c + 1 < n {
            t.push((c, c + 1, upper[c]));
        }
    }
    t
}

fn check(mesh: &SlabMesh, xs: &[CrossSections], closure: Option<&ClosureCoefficients>) -> Result<usize> {
    mesh.check_materials(xs.len())?;
    let groups = xs
        .first()
        .map(CrossSections::groups)
        .ok_or_else(|| crate::Error::InvalidInput("empty cross-section table".into()))?;
    if xs.iter().any(|x| x.groups() != groups) {
        return Err(crate::Error::InvalidInput("materials disagree on group count".into()));
    }
    if let Some(cl) = closure {
        cl.check_shape(mesh.n_cells(), groups)?;
    }
    Ok(groups)
}

pub fn assemble_diffusion_operators(mesh: &SlabMesh, xs: &[CrossSections]) -> Result<DiffusionOperators> {
    assemble(mesh, xs, None)
}

/// `A` with the closure drift terms on every face.
pub fn assemble_closed_diffusion_operators(
    mesh: &SlabMesh,
    xs: &[CrossSections],
    closure: &ClosureCoefficients,
) -> Result<DiffusionOperators> {
    assemble(mesh, xs, Some(closure))
}

fn assemble(mesh: &SlabMesh, xs: &[CrossSections], closure: Option<&ClosureCoefficients>) -> Result<DiffusionOperators> {
    let groups = check(mesh, xs, closure)?;
    let n = mesh.n_cells();
    let size = groups * n;
    let mut at = Vec::new();
    let mut bt = Vec::new();
    for g in 0..groups {
        at.extend(
            group_block(mesh, xs, closure, g)
                .into_iter()
                .map(|(i, j, v)| (g * n + i, g * n + j, v)),
        );
        for gp in 0..groups {
            for c in 0..n {
                let m = &xs[mesh.material(c)];
                let h = mesh.width(c);
                if gp != g && m.sigma_s(gp, g) != 0.0 {
                    at.push((g * n + c, gp * n + c, -m.sigma_s(gp, g) * h));
                }
                let f = m.chi(g) * m.nu_sigma_f(gp) * h;
                if f != 0.0 {
                    bt.push((g * n + c, gp * n + c, f));
                }
            }
        }
    }
    Ok(DiffusionOperators {
        a: SparseMatrix::from_triplets(size, size, &at)?,
        b: SparseMatrix::from_triplets(size, size, &bt)?,
    })
}

/// Energy-decoupled diffusion matrix: the diagonal blocks of `A`.
pub fn assemble_diffusion_preconditioner(
    mesh: &SlabMesh,
    xs: &[CrossSections],
    closure: Option<&ClosureCoefficients>,
) -> Result<MultiComponentMatrix> {
    let groups = check(mesh, xs, closure)?;
    let n = mesh.n_cells();
    let blocks = (0..groups)
        .map(|g| SparseMatrix::from_triplets(n, n, &group_block(mesh, xs, closure, g)))
        .collect::<Result<Vec<_>>>()?;
    MultiComponentMatrix::from_components(&blocks)
}
