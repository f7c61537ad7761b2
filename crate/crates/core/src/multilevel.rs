//! Multilevel additive Schwarz preconditioners for block-diagonal
//! multi-component matrices.
//!
//! `setup_sgmasm` coarsens a single component and replicates its
//! interpolations across all components; `setup_masm` coarsens the full
//! matrix. Both produce a [`MultilevelHierarchy`] applied as a V-cycle with
//! RAS-preconditioned Richardson smoothing and a dense coarsest solve.

use crate::coarsen::{coarsen_hierarchy, CoarseningParams, CoarseningWork};
use crate::dense::DenseLu;
use crate::error::{Error, Result};
use crate::operator::LinearOperator;
use crate::partition::{hierarchical_partition, Partition};
use crate::schwarz::{OverlapMap, RasPreconditioner, SorParams};
use crate::sparse::{extract_principal_submatrix, galerkin_triple_product, SparseMatrix};

/// Block-diagonal matrix of `n_comp` equally sized components, ordered
/// component by component.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiComponentMatrix {
    n_comp: usize,
    rows_per_comp: usize,
    full: SparseMatrix,
}

impl MultiComponentMatrix {
    pub fn new(full: SparseMatrix, n_comp: usize) -> Result<Self> {
        if full.n_rows() != full.n_cols() {
            return Err(Error::dims("MultiComponentMatrix", full.n_rows(), full.n_cols()));
        }
        if n_comp == 0 || !full.n_rows().is_multiple_of(n_comp) {
            return Err(Error::InvalidInput(format!(
                "{} rows cannot be split into {n_comp} equal components",
                full.n_rows()
            )));
        }
        let rows_per_comp = full.n_rows() / n_comp;
        for i in 0..full.n_rows() {
            let comp = i / rows_per_comp;
            for (&c, &v) in full.row(i).0.iter().zip(full.row(i).1) {
                if c / rows_per_comp != comp && v != 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "entry ({i}, {c}) couples components {comp} and {}",
                        c / rows_per_comp
                    )));
                }
            }
        }
        Ok(Self {
            n_comp,
            rows_per_comp,
            full,
        })
    }

    pub fn from_components(blocks: &[SparseMatrix]) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidInput("no components".into()))?;
        if let Some(b) = blocks
            .iter()
            .find(|b| b.n_rows() != first.n_rows() || b.n_cols() != first.n_rows())
        {
            return Err(Error::dims("from_components", first.n_rows(), b.n_rows()));
        }
        let refs: Vec<&SparseMatrix> = blocks.iter().collect();
        Ok(Self {
            n_comp: blocks.len(),
            rows_per_comp: first.n_rows(),
            full: SparseMatrix::block_diagonal(&refs),
        })
    }

    pub fn n_comp(&self) -> usize {
        self.n_comp
    }

    pub fn rows_per_comp(&self) -> usize {
        self.rows_per_comp
    }

    pub fn full(&self) -> &SparseMatrix {
        &self.full
    }

    pub fn component_of(&self, row: usize) -> usize {
        row / self.rows_per_comp
    }
}

/// Principal submatrix of component `j` in local indexing.
pub fn extract_component(m: &MultiComponentMatrix, j: usize) -> Result<SparseMatrix> {
    if j >= m.n_comp {
        return Err(Error::IndexOutOfRange {
            index: j,
            bound: m.n_comp,
        });
    }
    let rows: Vec<usize> = (j * m.rows_per_comp..(j + 1) * m.rows_per_comp).collect();
    extract_principal_submatrix(&m.full, &rows)
}

/// Interpolation between consecutive levels. The replicated form stores a
/// single component block and acts as `Σⱼ (R_jˡ)ᵀ P R_jˡ⁺¹`.
#[derive(Debug, Clone, PartialEq)]
pub enum Interpolation {
    Full(SparseMatrix),
    Replicated { sub: SparseMatrix, n_comp: usize },
}

impl Interpolation {
    pub fn n_fine(&self) -> usize {
        match self {
            Interpolation::Full(p) => p.n_rows(),
            Interpolation::Replicated { sub, n_comp } => sub.n_rows() * n_comp,
        }
    }

    pub fn n_coarse(&self) -> usize {
        match self {
            Interpolation::Full(p) => p.n_cols(),
            Interpolation::Replicated { sub, n_comp } => sub.n_cols() * n_comp,
        }
    }

    /// `fine = P coarse`.
    pub fn interpolate(&self, coarse: &[f64], fine: &mut [f64]) {
        match self {
            Interpolation::Full(p) => p.spmv_into(coarse, fine),
            Interpolation::Replicated { sub, n_comp } => {
                let (nf, nc) = (sub.n_rows(), sub.n_cols());
                for j in 0..*n_comp {
                    sub.spmv_into(&coarse[j * nc..(j + 1) * nc], &mut fine[j * nf..(j + 1) * nf]);
                }
            }
        }
    }

    /// `coarse = Pᵀ fine`.
    pub fn restrict(&self, fine: &[f64], coarse: &mut [f64]) {
        match self {
            Interpolation::Full(p) => p.spmv_transpose_into(fine, coarse),
            Interpolation::Replicated { sub, n_comp } => {
                let (nf, nc) = (sub.n_rows(), sub.n_cols());
                for j in 0..*n_comp {
                    sub.spmv_transpose_into(&fine[j * nf..(j + 1) * nf], &mut coarse[j * nc..(j + 1) * nc]);
                }
            }
        }
    }

    /// Fully materialized sparse matrix.
    pub fn to_sparse(&self) -> SparseMatrix {
        match self {
            Interpolation::Full(p) => p.clone(),
            Interpolation::Replicated { sub, n_comp } => {
                let blocks = vec![sub; *n_comp];
                SparseMatrix::block_diagonal(&blocks)
            }
        }
    }

    pub fn storage_bytes(&self) -> usize {
        match self {
            Interpolation::Full(p) => p.storage_bytes(),
            // the block count is the only extra state
            Interpolation::Replicated { sub, .. } => sub.storage_bytes() + 8,
        }
    }
}

pub fn expand_interpolation(p_sub: &SparseMatrix, n_comp: usize) -> Result<Interpolation> {
    if n_comp == 0 {
        return Err(Error::InvalidInput("n_comp must be at least 1".into()));
    }
    Ok(Interpolation::Replicated {
        sub: p_sub.clone(),
        n_comp,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultilevelParams {
    pub coarsening: CoarseningParams,
    /// Overlap on the finest level; coarse levels use none.
    pub delta: usize,
    pub sor: SorParams,
    /// Richardson iterations in each pre- and post-solve.
    pub smoother_iterations: usize,
    pub damping: f64,
    pub component_index: usize,
    pub np1: usize,
    pub np2: usize,
}

impl Default for MultilevelParams {
    fn default() -> Self {
        Self {
            coarsening: CoarseningParams::default(),
            delta: 1,
            sor: SorParams::default(),
            smoother_iterations: 1,
            damping: 1.0,
            component_index: 0,
            np1: 1,
            np2: 1,
        }
    }
}

pub struct Level {
    pub operator: SparseMatrix,
    /// One-level RAS on this level; `None` on the coarsest level.
    pub smoother: Option<RasPreconditioner>,
    pub partition: Partition,
}

pub struct MultilevelHierarchy {
    levels: Vec<Level>,
    interpolations: Vec<Interpolation>,
    coarse_solve: DenseLu,
    params: MultilevelParams,
    work: CoarseningWork,
}

impl MultilevelHierarchy {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn operators(&self) -> Vec<&SparseMatrix> {
        self.levels.iter().map(|l| &l.operator).collect()
    }

    pub fn interpolations(&self) -> &[Interpolation] {
        &self.interpolations
    }

    pub fn params(&self) -> &MultilevelParams {
        &self.params
    }

    /// Work spent in coarsening during setup.
    pub fn setup_work(&self) -> CoarseningWork {
        self.work
    }

    pub fn operator_complexity(&self) -> f64 {
        crate::coarsen::operator_complexity(&self.operators()).unwrap_or(1.0)
    }

    /// Bytes held by operators, interpolations, subdomain matrices and the
    /// coarsest factorization.
    pub fn storage_bytes(&self) -> usize {
        let ops: usize = self.levels.iter().map(|l| l.operator.storage_bytes()).sum();
        let smoothers: usize = self
            .levels
            .iter()
            .filter_map(|l| l.smoother.as_ref())
            .map(RasPreconditioner::storage_bytes)
            .sum();
        let interp: usize = self.interpolations.iter().map(Interpolation::storage_bytes).sum();
        ops + smoothers + interp + self.coarse_solve.storage_bytes()
    }

    fn cycle(&self, level: usize, r: &[f64]) -> Vec<f64> {
        if level + 1 == self.levels.len() {
            return self.coarse_solve.apply_vec(r);
        }
        let lvl = &self.levels[level];
        let a = &lvl.operator;
        let smoother = lvl.smoother.as_ref().expect("non-coarsest level has a smoother");
        let mut e = vec![0.0; r.len()];
        self.smooth(a, smoother, r, &mut e);

        let mut residual = a.apply_vec(&e);
        for (ri, bi) in residual.iter_mut().zip(r) {
            *ri = bi - *ri;
        }
        let p = &self.interpolations[level];
        let mut coarse_r = vec![0.0; p.n_coarse()];
        p.restrict(&residual, &mut coarse_r);
        let coarse_e = self.cycle(level + 1, &coarse_r);
        let mut z = vec![0.0; r.len()];
        p.interpolate(&coarse_e, &mut z);
        for (ei, zi) in e.iter_mut().zip(&z) {
            *ei += zi;
        }
        self.smooth(a, smoother, r, &mut e);
        e
    }

    fn smooth(&self, a: &SparseMatrix, smoother: &RasPreconditioner, r: &[f64], e: &mut [f64]) {
        let n = r.len();
        let mut res = vec![0.0; n];
        let mut corr = vec![0.0; n];
        for _ in 0..self.params.smoother_iterations {
            a.apply(e, &mut res);
            for (ri, bi) in res.iter_mut().zip(r) {
                *ri = bi - *ri;
            }
            smoother.apply(&res, &mut corr);
            for (ei, ci) in e.iter_mut().zip(&corr) {
                *ei += self.params.damping * ci;
            }
        }
    }
}

impl LinearOperator for MultilevelHierarchy {
    fn dim(&self) -> usize {
        self.levels[0].operator.n_rows()
    }

    fn apply(&self, r: &[f64], e: &mut [f64]) {
        e.copy_from_slice(&self.cycle(0, r));
    }
}

/// One V-cycle: `e ≈ M⁻¹ r`.
pub fn pc_apply(h: &MultilevelHierarchy, r: &[f64]) -> Result<Vec<f64>> {
    if r.len() != h.dim() {
        return Err(Error::dims("pc_apply", h.dim(), r.len()));
    }
    Ok(h.cycle(0, r))
}

/// Finest-level partition: the spatial graph of one component is split into
/// `np1 × np2` ranks and every component inherits the same owners.
fn finest_partition(m: &MultiComponentMatrix, params: &MultilevelParams) -> Result<Partition> {
    let comp = extract_component(m, params.component_index)?;
    let sub = hierarchical_partition(&comp, params.np1, params.np2)?;
    let owner = (0..m.n_comp)
        .flat_map(|_| sub.owner().iter().copied())
        .collect();
    Partition::from_owners(owner, params.np1, params.np2)
}

fn inherit_partition(fine: &Partition, coarse_to_fine: &[usize]) -> Result<Partition> {
    let owner = coarse_to_fine.iter().map(|&f| fine.owner()[f]).collect();
    Partition::from_owners(owner, fine.np1(), fine.np2())
}

fn assemble(
    operators: Vec<SparseMatrix>,
    interpolations: Vec<Interpolation>,
    coarse_to_fine: Vec<Vec<usize>>,
    finest: Partition,
    params: &MultilevelParams,
    work: CoarseningWork,
) -> Result<MultilevelHierarchy> {
    let n_levels = operators.len();
    let mut partitions = vec![finest];
    for map in &coarse_to_fine {
        let next = inherit_partition(partitions.last().expect("finest"), map)?;
        partitions.push(next);
    }
    let mut levels = Vec::with_capacity(n_levels);
    for (l, (operator, partition)) in operators.into_iter().zip(partitions).enumerate() {
        let smoother = if l + 1 < n_levels {
            let delta = if l == 0 { params.delta } else { 0 };
            let overlap = OverlapMap::build(&operator, &partition, delta)?;
            Some(RasPreconditioner::new(&operator, overlap, params.sor)?)
        } else {
            None
        };
        levels.push(Level {
            operator,
            smoother,
            partition,
        });
    }
    let coarse_solve = DenseLu::factor(&levels.last().expect("at least one level").operator)?;
    Ok(MultilevelHierarchy {
        levels,
        interpolations,
        coarse_solve,
        params: *params,
        work,
    })
}

/// Subspace-based coarsening: only component `params.component_index` is
/// coarsened; its interpolations are replicated over all components and the
/// coarse operators are Galerkin products of the full matrix.
pub fn setup_sgmasm(m: &MultiComponentMatrix, params: &MultilevelParams) -> Result<MultilevelHierarchy> {
    let component = extract_component(m, params.component_index)?;
    let mut sub_params = params.coarsening;
    // stop when the replicated coarse level is no larger than min_coarse
    sub_params.min_coarse = (params.coarsening.min_coarse / m.n_comp).max(1);
    let sub = coarsen_hierarchy(&component, &sub_params)?;

    let mut operators = vec![m.full.clone()];
    let mut interpolations = Vec::with_capacity(sub.interpolations.len());
    let mut coarse_to_fine = Vec::with_capacity(sub.interpolations.len());
    let mut fine_rows = m.rows_per_comp;
    for (p_sub, cpoints) in sub.interpolations.iter().zip(&sub.coarse_points) {
        let p = expand_interpolation(p_sub, m.n_comp)?;
        let coarse = galerkin_triple_product(&p.to_sparse(), operators.last().expect("finest"))?;
        let nc = cpoints.len();
        coarse_to_fine.push(
            (0..m.n_comp)
                .flat_map(|j| cpoints.iter().map(move |&c| j * fine_rows + c))
                .collect::<Vec<_>>(),
        );
        debug_assert_eq!(coarse.n_rows(), nc * m.n_comp);
        fine_rows = nc;
        operators.push(coarse);
        interpolations.push(p);
    }
    let finest = finest_partition(m, params)?;
    assemble(operators, interpolations, coarse_to_fine, finest, params, sub.work)
}

/// Full-space coarsening baseline.
pub fn setup_masm(m: &MultiComponentMatrix, params: &MultilevelParams) -> Result<MultilevelHierarchy> {
    let c = coarsen_hierarchy(&m.full, &params.coarsening)?;
    let interpolations = c.interpolations.into_iter().map(Interpolation::Full).collect();
    let finest = finest_partition(m, params)?;
    assemble(c.operators, interpolations, c.coarse_points, finest, params, c.work)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreconditionerKind {
    Sgmasm,
    Masm,
    Ras,
    None,
}

impl std::str::FromStr for PreconditionerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sgmasm" => Ok(Self::Sgmasm),
            "masm" => Ok(Self::Masm),
            "ras" => Ok(Self::Ras),
            "none" => Ok(Self::None),
            other => Err(format!("unknown preconditioner `{other}` (sgmasm|masm|ras|none)")),
        }
    }
}

/// A built preconditioner of any supported kind.
pub enum Preconditioner {
    Multilevel(MultilevelHierarchy),
    OneLevel(RasPreconditioner),
    Identity(usize),
}

impl Preconditioner {
    pub fn build(kind: PreconditionerKind, m: &MultiComponentMatrix, params: &MultilevelParams) -> Result<Self> {
        Ok(match kind {
            PreconditionerKind::Sgmasm => Self::Multilevel(setup_sgmasm(m, params)?),
            PreconditionerKind::Masm => Self::Multilevel(setup_masm(m, params)?),
            PreconditionerKind::Ras => {
                let part = finest_partition(m, params)?;
                let overlap = OverlapMap::build(&m.full, &part, params.delta)?;
                Self::OneLevel(RasPreconditioner::new(&m.full, overlap, params.sor)?)
            }
            PreconditionerKind::None => Self::Identity(m.full.n_rows()),
        })
    }

    pub fn hierarchy(&self) -> Option<&MultilevelHierarchy> {
        match self {
            Self::Multilevel(h) => Some(h),
            _ => None,
        }
    }

    pub fn storage_bytes(&self) -> usize {
        match self {
            Self::Multilevel(h) => h.storage_bytes(),
            Self::OneLevel(r) => r.storage_bytes(),
            Self::Identity(_) => 0,
        }
    }

    pub fn setup_work(&self) -> CoarseningWork {
        self.hierarchy().map(|h| h.setup_work()).unwrap_or_default()
    }

    pub fn operator_complexity(&self) -> f64 {
        self.hierarchy().map_or(1.0, |h| h.operator_complexity())
    }
}

impl LinearOperator for Preconditioner {
    fn dim(&self) -> usize {
        match self {
            Self::Multilevel(h) => h.dim(),
            Self::OneLevel(r) => r.dim(),
            Self::Identity(n) => *n,
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Self::Multilevel(h) => h.apply(x, y),
            Self::OneLevel(r) => r.apply(x, y),
            Self::Identity(_) => y.copy_from_slice(x),
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
    fn cross_component_coupling_rejected() {
        let a = laplacian(4);
        assert!(MultiComponentMatrix::new(a, 2).is_err());
    }

    #[test]
    fn extract_single_component_is_full() {
        let m = MultiComponentMatrix::new(laplacian(5), 1).unwrap();
        assert_eq!(extract_component(&m, 0).unwrap(), laplacian(5));
        assert!(extract_component(&m, 1).is_err());
    }

    #[test]
    fn extract_second_block() {
        let x = laplacian(3);
        let mut y = laplacian(3);
        y.scale(3.0);
        let m = MultiComponentMatrix::from_components(&[x, y.clone()]).unwrap();
        assert_eq!(extract_component(&m, 1).unwrap(), y);
    }

    #[test]
    fn expand_single_component_is_sub() {
        let p = SparseMatrix::from_triplets(2, 1, &[(0, 0, 1.0), (1, 0, 0.5)]).unwrap();
        assert_eq!(expand_interpolation(&p, 1).unwrap().to_sparse(), p);
    }

    #[test]
    fn expand_two_components() {
        let p = SparseMatrix::from_triplets(2, 1, &[(0, 0, 1.0), (1, 0, 0.5)]).unwrap();
        let full = expand_interpolation(&p, 2).unwrap().to_sparse();
        assert_eq!(
            full.to_dense(),
            vec![vec![1.0, 0.0], vec![0.5, 0.0], vec![0.0, 1.0], vec![0.0, 0.5]]
        );
    }

    #[test]
    fn replicated_storage_smaller_than_materialized() {
        let p = SparseMatrix::from_triplets(2, 1, &[(0, 0, 1.0), (1, 0, 0.5)]).unwrap();
        let e = expand_interpolation(&p, 4).unwrap();
        assert!(e.storage_bytes() < Interpolation::Full(e.to_sparse()).storage_bytes());
    }

    #[test]
    fn diagonal_matrix_stays_single_level() {
        let d = SparseMatrix::from_triplets(60, 60, &(0..60).map(|i| (i, i, 1.0 + i as f64)).collect::<Vec<_>>()).unwrap();
        let m = MultiComponentMatrix::new(d, 1).unwrap();
        let h = setup_masm(&m, &MultilevelParams::default()).unwrap();
        assert_eq!(h.n_levels(), 1);
    }

    #[test]
    fn identity_levels_pass_through() {
        let m = MultiComponentMatrix::new(SparseMatrix::identity(80), 2).unwrap();
        let h = setup_sgmasm(&m, &MultilevelParams::default()).unwrap();
        let r: Vec<f64> = (0..80).map(|i| i as f64 - 3.5).collect();
        assert_eq!(pc_apply(&h, &r).unwrap(), r);
    }

    #[test]
    fn pc_apply_dimension_checked() {
        let m = MultiComponentMatrix::new(laplacian(10), 1).unwrap();
        let h = setup_masm(&m, &MultilevelParams::default()).unwrap();
        assert!(pc_apply(&h, &[1.0; 9]).is_err());
    }

    #[test]
    fn kind_parses() {
        assert_eq!("masm".parse::<PreconditionerKind>().unwrap(), PreconditionerKind::Masm);
        assert!("amg".parse::<PreconditionerKind>().is_err());
    }
}
