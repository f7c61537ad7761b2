//! Classical algebraic coarsening: strength of connection, Ruge-Stüben C/F
//! splitting with an optional distance-two (aggressive) pass, direct
//! interpolation and Galerkin coarse operators.

use std::cmp::Reverse;
use std::collections::BTreeSet;
use std::io::Write;

use crate::error::{Error, Result};
use crate::sparse::{galerkin_triple_product, SparseMatrix};

/// Strong columns per row: `j` is strong for `i` when
/// `−A(i,j) > θ · max_{k≠i} (−A(i,k))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrengthGraph {
    strong: Vec<Vec<usize>>,
}

impl StrengthGraph {
    pub fn from_rows(strong: Vec<Vec<usize>>) -> Self {
        Self { strong }
    }

    pub fn n_rows(&self) -> usize {
        self.strong.len()
    }

    pub fn strong(&self, i: usize) -> &[usize] {
        &self.strong[i]
    }

    pub fn n_edges(&self) -> usize {
        self.strong.iter().map(Vec::len).sum()
    }

    /// `influences[i] = { j : i is strong for j }`.
    fn influences(&self) -> Vec<Vec<usize>> {
        let mut t = vec![Vec::new(); self.strong.len()];
        for (j, row) in self.strong.iter().enumerate() {
            for &i in row {
                t[i].push(j);
            }
        }
        t
    }
}

pub fn build_strength(a: &SparseMatrix, theta: f64) -> Result<StrengthGraph> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::dims("build_strength", a.n_rows(), a.n_cols()));
    }
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::InvalidInput(format!(
            "strength threshold {theta} outside [0, 1)"
        )));
    }
    let strong = (0..a.n_rows())
        .map(|i| {
            let (cols, vals) = a.row(i);
            let max_neg = cols
                .iter()
                .zip(vals)
                .filter(|(&c, _)| c != i)
                .map(|(_, &v)| -v)
                .fold(f64::NEG_INFINITY, f64::max);
            if !(max_neg > 0.0) {
                return Vec::new();
            }
            cols.iter()
                .zip(vals)
                .filter(|(&c, &v)| c != i && -v > theta * max_neg)
                .map(|(&c, _)| c)
                .collect()
        })
        .collect();
    Ok(StrengthGraph { strong })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Point {
    Coarse,
    Fine,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfSplitting {
    labels: Vec<Point>,
}

impl CfSplitting {
    pub fn from_labels(labels: Vec<Point>) -> Self {
        Self { labels }
    }

    pub fn labels(&self) -> &[Point] {
        &self.labels
    }

    pub fn is_coarse(&self, i: usize) -> bool {
        self.labels[i] == Point::Coarse
    }

    pub fn coarse_points(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.is_coarse(i)).collect()
    }

    pub fn n_coarse(&self) -> usize {
        self.labels.iter().filter(|&&p| p == Point::Coarse).count()
    }
}

/// Greedy first pass of Ruge-Stüben: pick the untyped row with the largest
/// measure (lowest index on ties) as C, lower the measures of the undecided
/// rows it depends on, make its strong dependents F and bump the measures of
/// their undecided strong neighbours. A post-pass promotes any F row without
/// a strong C neighbour.
pub fn cf_split(s: &StrengthGraph) -> CfSplitting {
    let mut labels: Vec<Point> = greedy_labels(s)
        .into_iter()
        .map(|p| p.expect("greedy pass labels every row"))
        .collect();
    for i in 0..labels.len() {
        if labels[i] == Point::Fine && !s.strong(i).iter().any(|&j| labels[j] == Point::Coarse) {
            labels[i] = Point::Coarse;
        }
    }
    CfSplitting { labels }
}

fn greedy_labels(s: &StrengthGraph) -> Vec<Option<Point>> {
    let n = s.n_rows();
    let influences = s.influences();
    let mut measure: Vec<usize> = influences.iter().map(Vec::len).collect();
    let mut labels: Vec<Option<Point>> = vec![None; n];
    let mut queue: BTreeSet<(usize, Reverse<usize>)> =
        (0..n).map(|i| (measure[i], Reverse(i))).collect();

    while let Some((_, Reverse(i))) = queue.pop_last() {
        labels[i] = Some(Point::Coarse);
        for &k in s.strong(i) {
            if labels[k].is_none() && measure[k] > 0 {
                queue.remove(&(measure[k], Reverse(k)));
                measure[k] -= 1;
                queue.insert((measure[k], Reverse(k)));
            }
        }
        for &j in &influences[i] {
            if labels[j].is_some() {
                continue;
            }
            labels[j] = Some(Point::Fine);
            queue.remove(&(measure[j], Reverse(j)));
            for &k in s.strong(j) {
                if labels[k].is_none() {
                    queue.remove(&(measure[k], Reverse(k)));
                    measure[k] += 1;
                    queue.insert((measure[k], Reverse(k)));
                }
            }
        }
    }
    labels
}

/// Second coarsening pass over the C-points of `base` using distance-two
/// strength (strong paths of length at most two). Rows left with no C-point
/// within two strong steps are promoted back to C.
pub fn aggressive_split(s: &StrengthGraph, base: &CfSplitting) -> CfSplitting {
    let n = s.n_rows();
    let coarse = base.coarse_points();
    let mut local = vec![usize::MAX; n];
    for (k, &c) in coarse.iter().enumerate() {
        local[c] = k;
    }
    let distance_two: Vec<Vec<usize>> = coarse
        .iter()
        .map(|&i| {
            let mut reach: Vec<usize> = Vec::new();
            for &j in s.strong(i) {
                if local[j] != usize::MAX {
                    reach.push(local[j]);
                }
                for &k in s.strong(j) {
                    if k != i && local[k] != usize::MAX {
                        reach.push(local[k]);
                    }
                }
            }
            reach.sort_unstable();
            reach.dedup();
            reach
        })
        .collect();
    let second = cf_split(&StrengthGraph::from_rows(distance_two));

    let mut labels = vec![Point::Fine; n];
    for (k, &c) in coarse.iter().enumerate() {
        if second.is_coarse(k) {
            labels[c] = Point::Coarse;
        }
    }
    for i in 0..n {
        if labels[i] == Point::Fine && !has_coarse_within_two(s, &labels, i) {
            labels[i] = Point::Coarse;
        }
    }
    CfSplitting { labels }
}

fn has_coarse_within_two(s: &StrengthGraph, labels: &[Point], i: usize) -> bool {
    s.strong(i).iter().any(|&j| {
        labels[j] == Point::Coarse || s.strong(j).iter().any(|&k| labels[k] == Point::Coarse)
    })
}

/// Direct interpolation. C rows are unit rows; an F row `i` with strong
/// C-neighbours `C_i` gets
/// `w_ij = −(Σ_{k∈N_i} a⁻_ik / Σ_{k∈C_i} a⁻_ik) · a_ij / a_ii`.
/// F rows with no strong C-neighbour (possible after an aggressive pass)
/// interpolate through their strong F-neighbours from the first pass using
/// the same weight formula.
pub fn build_interpolation(a: &SparseMatrix, s: &StrengthGraph, split: &CfSplitting) -> Result<SparseMatrix> {
    let n = a.n_rows();
    if s.n_rows() != n || split.labels.len() != n {
        return Err(Error::dims("build_interpolation", n, split.labels.len()));
    }
    let mut coarse_index = vec![usize::MAX; n];
    let mut n_coarse = 0;
    for i in 0..n {
        if split.is_coarse(i) {
            coarse_index[i] = n_coarse;
            n_coarse += 1;
        }
    }

    let mut rows: Vec<Option<Vec<(usize, f64)>>> = vec![None; n];
    let mut deferred = Vec::new();
    for i in 0..n {
        if split.is_coarse(i) {
            rows[i] = Some(vec![(coarse_index[i], 1.0)]);
            continue;
        }
        let targets: Vec<usize> = s.strong(i).iter().copied().filter(|&j| split.is_coarse(j)).collect();
        if targets.is_empty() {
            deferred.push(i);
            continue;
        }
        let weights = direct_weights(a, i, &targets)?;
        rows[i] = Some(targets.iter().map(|&j| coarse_index[j]).zip(weights).collect());
    }

    for &i in &deferred {
        let via: Vec<usize> = s
            .strong(i)
            .iter()
            .copied()
            .filter(|&k| !split.is_coarse(k) && rows[k].is_some())
            .collect();
        if via.is_empty() {
            return Err(Error::InvalidInput(format!(
                "F row {i} has no strong C-point within two steps"
            )));
        }
        let weights = direct_weights(a, i, &via)?;
        let mut acc: Vec<(usize, f64)> = Vec::new();
        for (&k, &w) in via.iter().zip(&weights) {
            for &(c, p) in rows[k].as_ref().expect("first-pass row") {
                acc.push((c, w * p));
            }
        }
        acc.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(acc.len());
        for (c, v) in acc {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        rows[i] = Some(merged);
    }

    let mut triplets = Vec::new();
    for (i, row) in rows.into_iter().enumerate() {
        for (c, w) in row.expect("every row interpolated") {
            triplets.push((i, c, w));
        }
    }
    SparseMatrix::from_triplets(n, n_coarse, &triplets)
}

fn direct_weights(a: &SparseMatrix, i: usize, targets: &[usize]) -> Result<Vec<f64>> {
    let (cols, vals) = a.row(i);
    let mut diag = 0.0;
    let mut neg_all = 0.0;
    for (&c, &v) in cols.iter().zip(vals) {
        if c == i {
            diag = v;
        } else if v < 0.0 {
            neg_all += v;
        }
    }
    if diag == 0.0 {
        return Err(Error::SingularDiagonal { row: i });
    }
    let a_ij = |j: usize| a.get(i, j).unwrap_or(0.0);
    let neg_targets: f64 = targets.iter().map(|&j| a_ij(j).min(0.0)).sum();
    if neg_targets == 0.0 {
        return Err(Error::InvalidInput(format!(
            "row {i} has no negative connection to its interpolation set"
        )));
    }
    let alpha = neg_all / neg_targets;
    Ok(targets.iter().map(|&j| -alpha * a_ij(j) / diag).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseningParams {
    pub theta: f64,
    /// Number of finest levels that receive the aggressive pass.
    pub agg: usize,
    pub max_levels: usize,
    pub min_coarse: usize,
}

impl Default for CoarseningParams {
    fn default() -> Self {
        Self {
            theta: 0.25,
            agg: 0,
            max_levels: 10,
            min_coarse: 50,
        }
    }
}

/// Setup work counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CoarseningWork {
    /// Rows visited by C/F splitting, summed over levels.
    pub rows_split: usize,
    /// Matrix entries scanned by strength and interpolation, summed over levels.
    pub nnz_processed: usize,
}

#[derive(Debug, Clone)]
pub struct Coarsening {
    /// `operators[0]` is the input matrix; `operators[l+1] = Pₗᵀ operators[l] Pₗ`.
    pub operators: Vec<SparseMatrix>,
    pub interpolations: Vec<SparseMatrix>,
    /// Fine-level row of every coarse row, per interpolation.
    pub coarse_points: Vec<Vec<usize>>,
    pub work: CoarseningWork,
}

impl Coarsening {
    pub fn n_levels(&self) -> usize {
        self.operators.len()
    }
}

pub fn coarsen_hierarchy(a: &SparseMatrix, params: &CoarseningParams) -> Result<Coarsening> {
    if params.max_levels == 0 || params.min_coarse == 0 {
        return Err(Error::InvalidInput(
            "max_levels and min_coarse must be at least 1".into(),
        ));
    }
    let mut out = Coarsening {
        operators: vec![a.clone()],
        interpolations: Vec::new(),
        coarse_points: Vec::new(),
        work: CoarseningWork::default(),
    };
    loop {
        let fine = out.operators.last().expect("nonempty");
        let level = out.operators.len() - 1;
        if fine.n_rows() <= params.min_coarse || out.operators.len() >= params.max_levels {
            break;
        }
        let strength = build_strength(fine, params.theta)?;
        out.work.rows_split += fine.n_rows();
        out.work.nnz_processed += fine.nnz();
        let mut split = cf_split(&strength);
        if level < params.agg {
            split = aggressive_split(&strength, &split);
        }
        let n_coarse = split.n_coarse();
        if n_coarse == 0 || n_coarse >= fine.n_rows() {
            break;
        }
        let p = build_interpolation(fine, &strength, &split)?;
        out.work.nnz_processed += fine.nnz();
        let coarse = galerkin_triple_product(&p, fine)?;
        out.coarse_points.push(split.coarse_points());
        out.interpolations.push(p);
        out.operators.push(coarse);
    }
    Ok(out)
}

/// `Σₗ nnz(Mˡ) / nnz(M¹)`.
pub fn operator_complexity(levels: &[&SparseMatrix]) -> Result<f64> {
    let first = levels
        .first()
        .ok_or_else(|| Error::InvalidInput("operator complexity of an empty hierarchy".into()))?;
    if first.nnz() == 0 {
        return Err(Error::InvalidInput("finest operator has no entries".into()));
    }
    let total: usize = levels.iter().map(|m| m.nnz()).sum();
    Ok(total as f64 / first.nnz() as f64)
}

/// `level,rows,nnz` CSV, levels numbered from 1.
pub fn write_hierarchy_csv<W: Write>(levels: &[&SparseMatrix], mut w: W) -> Result<()> {
    writeln!(w, "level,rows,nnz")?;
    for (l, m) in levels.iter().enumerate() {
        writeln!(w, "{},{},{}", l + 1, m.n_rows(), m.nnz())?;
    }
    Ok(())
}
