//! First-order upwind finite-volume discrete ordinates. Component
//! `j = g·N_d + n` holds direction `n` of group `g`; unknown `(j, c)` sits at
//! row `j·n_cells + c`. Rows are the cell balance integrated over the cell.

use super::mesh::{Boundary, SlabMesh};
use super::quadrature::AngularQuadrature;
use super::xs::CrossSections;
use crate::error::{Error, Result};
use crate::multilevel::MultiComponentMatrix;
use crate::operator::LinearOperator;
use crate::sparse::SparseMatrix;

/// `L + R`: block-diagonal streaming and collision `L` plus the reflective
/// inflow coupling `R` between mirrored directions.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportOperator {
    l: MultiComponentMatrix,
    r: SparseMatrix,
    groups: usize,
    n_dirs: usize,
    n_cells: usize,
}

impl TransportOperator {
    pub fn block_diagonal(&self) -> &MultiComponentMatrix {
        &self.l
    }

    pub fn reflective_coupling(&self) -> &SparseMatrix {
        &self.r
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn n_dirs(&self) -> usize {
        self.n_dirs
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn to_sparse(&self) -> Result<SparseMatrix> {
        self.l.full().add(&self.r)
    }
}

impl LinearOperator for TransportOperator {
    fn dim(&self) -> usize {
        self.l.full().n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.l.full().spmv_into(x, y);
        if self.r.nnz() > 0 {
            let mut extra = vec![0.0; y.len()];
            self.r.spmv_into(x, &mut extra);
            y.iter_mut().zip(extra).for_each(|(a, b)| *a += b);
        }
    }
}

pub(crate) fn group_count(mesh: &SlabMesh, xs: &[CrossSections]) -> Result<usize> {
    mesh.check_materials(xs.len())?;
    let groups = xs
        .first()
        .map(CrossSections::groups)
        .ok_or_else(|| Error::InvalidInput("empty cross-section table".into()))?;
    if xs.iter().any(|x| x.groups() != groups) {
        return Err(Error::InvalidInput("materials disagree on group count".into()));
    }
    Ok(groups)
}

pub fn assemble_transport_operator(
    mesh: &SlabMesh,
    xs: &[CrossSections],
    quad: &AngularQuadrature,
) -> Result<TransportOperator> {
    let groups = group_count(mesh, xs)?;
    let nc = mesh.n_cells();
    let nd = quad.n_dirs();
    let size = groups * nd * nc;
    let mut blocks = Vec::with_capacity(groups * nd);
    let mut rt = Vec::new();
    for g in 0..groups {
        for n in 0..nd {
            let mu = quad.mu()[n];
            let a = mu.abs();
            let j = g * nd + n;
            let mut t = Vec::with_capacity(2 * nc);
            for c in 0..nc {
                let st = xs[mesh.material(c)].sigma_t(g);
                t.push((c, c, a + st * mesh.width(c)));
                if mu > 0.0 && c > 0 {
                    t.push((c, c - 1, -a));
                } else if mu < 0.0 && c + 1 < nc {
                    t.push((c, c + 1, -a));
                }
            }
            blocks.push(SparseMatrix::from_triplets(nc, nc, &t)?);
            let mirror = g * nd + quad.mirror(n);
            if mu > 0.0 && mesh.bc_left() == Boundary::Reflective {
                rt.push((j * nc, mirror * nc, -a));
            }
            if mu < 0.0 && mesh.bc_right() == Boundary::Reflective {
                rt.push((j * nc + nc - 1, mirror * nc + nc - 1, -a));
            }
        }
    }
    Ok(TransportOperator {
        l: MultiComponentMatrix::from_components(&blocks)?,
        r: SparseMatrix::from_triplets(size, size, &rt)?,
        groups,
        n_dirs: nd,
        n_cells: nc,
    })
}

fn check_psi(len: usize, quad: &AngularQuadrature, groups: usize, n_cells: usize) -> Result<()> {
    let want = groups * quad.n_dirs() * n_cells;
    if len != want {
        return Err(Error::dims("angular flux", want, len));
    }
    Ok(())
}

fn moment(psi: &[f64], quad: &AngularQuadrature, groups: usize, n_cells: usize, weight: impl Fn(usize) -> f64) -> Vec<f64> {
    let nd = quad.n_dirs();
    let mut out = vec![0.0; groups * n_cells];
    for g in 0..groups {
        for n in 0..nd {
            let w = weight(n);
            let base = (g * nd + n) * n_cells;
            for c in 0..n_cells {
                out[g * n_cells + c] += w * psi[base + c];
            }
        }
    }
    out
}

/// `Φ_{g,c} = Σ_n w_n Ψ_{g,n,c}`.
pub fn scalar_flux(psi: &[f64], quad: &AngularQuadrature, groups: usize, n_cells: usize) -> Result<Vec<f64>> {
    check_psi(psi.len(), quad, groups, n_cells)?;
    Ok(moment(psi, quad, groups, n_cells, |n| quad.weights()[n]))
}

/// `J_{g,c} = Σ_n w_n μ_n Ψ_{g,n,c}`.
pub fn cell_current(psi: &[f64], quad: &AngularQuadrature, groups: usize, n_cells: usize) -> Result<Vec<f64>> {
    check_psi(psi.len(), quad, groups, n_cells)?;
    Ok(moment(psi, quad, groups, n_cells, |n| quad.weights()[n] * quad.mu()[n]))
}

/// Upwind face value of direction `n` at face `f` (face `f` separates cells
/// `f−1` and `f`), including boundary inflow.
pub(crate) fn face_psi(psi: &[f64], mesh: &SlabMesh, quad: &AngularQuadrature, j_base: usize, n: usize, f: usize) -> f64 {
    let nc = mesh.n_cells();
    let nd = quad.n_dirs();
    let comp = |m: usize| (j_base * nd + m) * nc;
    let mu = quad.mu()[n];
    if mu > 0.0 {
        if f > 0 {
            psi[comp(n) + f - 1]
        } else {
            match mesh.bc_left() {
                Boundary::Vacuum => 0.0,
                Boundary::Reflective => psi[comp(quad.mirror(n))],
            }
        }
    } else if f < nc {
        psi[comp(n) + f]
    } else {
        match mesh.bc_right() {
            Boundary::Vacuum => 0.0,
            Boundary::Reflective => psi[comp(quad.mirror(n)) + nc - 1],
        }
    }
}

/// Net `+x` current on all `n_cells + 1` faces, `[face][g]`, from upwind
/// face values.
pub fn face_currents(
    psi: &[f64],
    mesh: &SlabMesh,
    quad: &AngularQuadrature,
    groups: usize,
) -> Result<Vec<Vec<f64>>> {
    let nc = mesh.n_cells();
    check_psi(psi.len(), quad, groups, nc)?;
    Ok((0..=nc)
        .map(|f| {
            (0..groups)
                .map(|g| {
                    (0..quad.n_dirs())
                        .map(|n| quad.weights()[n] * quad.mu()[n] * face_psi(psi, mesh, quad, g, n, f))
                        .sum()
                })
                .collect()
        })
        .collect())
}

/// Stabilization length `1/(cΣt)` for optically thick cells, `h/ς` otherwise.
pub fn tau(sigma_t: f64, h: f64, c: f64, varsigma: f64) -> Result<f64> {
    if !(sigma_t >= 0.0) || !(h > 0.0) || !(c > 0.0) || !(varsigma > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tau needs sigma_t >= 0 and positive h, c, varsigma (got {sigma_t}, {h}, {c}, {varsigma})"
        )));
    }
    Ok(if c * h * sigma_t >= varsigma {
        1.0 / (c * sigma_t)
    } else {
        h / varsigma
    })
}

/// Isotropic emission density `Σ_{g'} Σs^{g'→g} Φ_{g'} + (χ_g/k) Σ_{g'} νΣf_{g'} Φ_{g'}`
/// per `(g, c)`, with either part switched off by a zero factor.
pub(crate) fn emission(
    phi: &[f64],
    mesh: &SlabMesh,
    xs: &[CrossSections],
    groups: usize,
    scatter: f64,
    fission: f64,
) -> Vec<f64> {
    let nc = mesh.n_cells();
    let mut q = vec![0.0; groups * nc];
    for c in 0..nc {
        let m = &xs[mesh.material(c)];
        let f: f64 = (0..groups).map(|gp| m.nu_sigma_f(gp) * phi[gp * nc + c]).sum();
        for g in 0..groups {
            let s: f64 = (0..groups).map(|gp| m.sigma_s(gp, g) * phi[gp * nc + c]).sum();
            q[g * nc + c] = scatter * s + fission * m.chi(g) * f;
        }
    }
    q
}

/// Spreads an isotropic emission density over all directions, integrated
/// over each cell: `h_c q_{g,c} / Σw`.
pub(crate) fn spread(q: &[f64], mesh: &SlabMesh, quad: &AngularQuadrature, groups: usize) -> Vec<f64> {
    let nc = mesh.n_cells();
    let nd = quad.n_dirs();
    let wsum: f64 = quad.weights().iter().sum();
    let mut out = vec![0.0; groups * nd * nc];
    for g in 0..groups {
        for n in 0..nd {
            let base = (g * nd + n) * nc;
            for c in 0..nc {
                out[base + c] = mesh.width(c) * q[g * nc + c] / wsum;
            }
        }
    }
    out
}

/// Right-hand side of the transport fixed-source problem driven by `(Φ, k)`.
pub fn transport_source(
    phi: &[f64],
    k: f64,
    mesh: &SlabMesh,
    xs: &[CrossSections],
    quad: &AngularQuadrature,
) -> Result<Vec<f64>> {
    let groups = group_count(mesh, xs)?;
    if phi.len() != groups * mesh.n_cells() {
        return Err(Error::dims("transport_source", groups * mesh.n_cells(), phi.len()));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidInput(format!("k = {k} must be positive")));
    }
    let q = emission(phi, mesh, xs, groups, 1.0, 1.0 / k);
    Ok(spread(&q, mesh, quad, groups))
}

/// Angular-flux eigenproblem `(L + R − S) Ψ = (1/k) F Ψ` with scattering
/// `S` and fission `F` acting through the scalar flux.
pub struct TransportEigenProblem {
    op: TransportOperator,
    mesh: SlabMesh,
    xs: Vec<CrossSections>,
    quad: AngularQuadrature,
}

/// `(L + R − S)`.
pub struct TransportLoss<'a>(&'a TransportEigenProblem);

/// `F`.
pub struct TransportFission<'a>(&'a TransportEigenProblem);

impl TransportEigenProblem {
    pub fn new(mesh: &SlabMesh, xs: &[CrossSections], quad: &AngularQuadrature) -> Result<Self> {
        Ok(Self {
            op: assemble_transport_operator(mesh, xs, quad)?,
            mesh: mesh.clone(),
            xs: xs.to_vec(),
            quad: quad.clone(),
        })
    }

    pub fn operator(&self) -> &TransportOperator {
        &self.op
    }

    pub fn loss(&self) -> TransportLoss<'_> {
        TransportLoss(self)
    }

    pub fn fission(&self) -> TransportFission<'_> {
        TransportFission(self)
    }

    fn emission_of(&self, psi: &[f64], scatter: f64, fission: f64) -> Vec<f64> {
        let g = self.op.groups;
        let phi = moment(psi, &self.quad, g, self.op.n_cells, |n| self.quad.weights()[n]);
        let q = emission(&phi, &self.mesh, &self.xs, g, scatter, fission);
        spread(&q, &self.mesh, &self.quad, g)
    }
}

impl LinearOperator for TransportLoss<'_> {
    fn dim(&self) -> usize {
        self.0.op.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.op.apply(x, y);
        let s = self.0.emission_of(x, 1.0, 0.0);
        y.iter_mut().zip(s).for_each(|(a, b)| *a -= b);
    }
}

impl LinearOperator for TransportFission<'_> {
    fn dim(&self) -> usize {
        self.0.op.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.0.emission_of(x, 0.0, 1.0));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_cell_upwind() {
        let xs = vec![CrossSections::new(vec![2.0], vec![0.0], vec![0.0], vec![0.0]).unwrap()];
        let mesh = SlabMesh::uniform(1, 1.0, 0, Boundary::Vacuum, Boundary::Vacuum).unwrap();
        let quad = AngularQuadrature::new(vec![-0.9999999, 0.9999999], vec![1.0, 1.0]).unwrap();
        let t = assemble_transport_operator(&mesh, &xs, &quad).unwrap();
        let d = t.to_sparse().unwrap().to_dense();
        assert!((d[1][1] - 3.0).abs() < 1e-6);
        assert_eq!(t.reflective_coupling().nnz(), 0);
    }

    #[test]
    fn mirrored_components() {
        let xs = vec![CrossSections::new(vec![1.5], vec![0.5], vec![0.0], vec![0.0]).unwrap()];
        let mesh = SlabMesh::uniform(5, 0.4, 0, Boundary::Vacuum, Boundary::Vacuum).unwrap();
        let quad = AngularQuadrature::gauss_legendre(4).unwrap();
        let t = assemble_transport_operator(&mesh, &xs, &quad).unwrap();
        let comp = |j| crate::multilevel::extract_component(t.block_diagonal(), j).unwrap().to_dense();
        for n in 0..4 {
            let (a, b) = (comp(n), comp(quad.mirror(n)));
            for i in 0..5 {
                for j in 0..5 {
                    assert_eq!(a[i][j], b[4 - i][4 - j]);
                }
            }
        }
    }

    #[test]
    fn moments() {
        let quad = AngularQuadrature::gauss_legendre(2).unwrap();
        assert_eq!(scalar_flux(&[1.0; 6], &quad, 1, 3).unwrap(), vec![2.0; 3]);
        let mut psi = vec![0.0; 6];
        psi[3..].fill(1.0);
        let j = cell_current(&psi, &quad, 1, 3).unwrap();
        for v in j {
            assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }
        assert!(cell_current(&[1.0; 6], &quad, 1, 3).unwrap().iter().all(|v| v.abs() < 1e-15));
        assert!(scalar_flux(&[1.0; 5], &quad, 1, 3).is_err());
    }

    #[test]
    fn tau_branches() {
        assert_eq!(tau(1.0, 1.0, 1.0, 0.5).unwrap(), 1.0);
        assert_eq!(tau(0.1, 1.0, 1.0, 0.5).unwrap(), 2.0);
        assert_eq!(tau(0.0, 0.3, 1.0, 0.5).unwrap(), 0.6);
        assert!(tau(1.0, 0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn reflective_faces_carry_no_current() {
        let mesh = SlabMesh::uniform(3, 1.0, 0, Boundary::Reflective, Boundary::Reflective).unwrap();
        let quad = AngularQuadrature::gauss_legendre(4).unwrap();
        let psi: Vec<f64> = (0..12).map(|i| 1.0 + (i as f64 * 0.37).sin()).collect();
        let j = face_currents(&psi, &mesh, &quad, 1).unwrap();
        assert!(j[0][0].abs() < 1e-15 && j[3][0].abs() < 1e-15);
    }
}
