//! Two-stage hierarchical partitioning of a row graph into `np1 × np2`
//! logical ranks using breadth-first level-structure bisection.

use std::collections::VecDeque;
use std::io::Write;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    owner: Vec<usize>,
    np1: usize,
    np2: usize,
}

impl Partition {
    /// Wraps an explicit owner map (used for inherited coarse-level ownership).
    pub fn from_owners(owner: Vec<usize>, np1: usize, np2: usize) -> Result<Self> {
        let n_ranks = np1 * np2;
        if let Some(&bad) = owner.iter().find(|&&r| r >= n_ranks) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                bound: n_ranks,
            });
        }
        Ok(Self { owner, np1, np2 })
    }

    pub fn owner(&self) -> &[usize] {
        &self.owner
    }

    pub fn np1(&self) -> usize {
        self.np1
    }

    pub fn np2(&self) -> usize {
        self.np2
    }

    pub fn n_ranks(&self) -> usize {
        self.np1 * self.np2
    }

    /// Sorted row sets, one per rank (possibly empty).
    pub fn rank_rows(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.n_ranks()];
        for (row, &r) in self.owner.iter().enumerate() {
            sets[r].push(row);
        }
        sets
    }

    /// `row,rank` CSV dump.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "row,rank")?;
        for (row, rank) in self.owner.iter().enumerate() {
            writeln!(w, "{row},{rank}")?;
        }
        Ok(())
    }
}

pub fn hierarchical_partition(adjacency: &SparseMatrix, np1: usize, np2: usize) -> Result<Partition> {
    if adjacency.n_rows() != adjacency.n_cols() {
        return Err(Error::dims(
            "hierarchical_partition",
            adjacency.n_rows(),
            adjacency.n_cols(),
        ));
    }
    let n = adjacency.n_rows();
    if np1 == 0 || np2 == 0 || np1 * np2 > n {
        return Err(Error::InfeasiblePartition {
            parts: np1 * np2,
            rows: n,
        });
    }
    let adj = adjacency.symmetric_adjacency();
    let all: Vec<usize> = (0..n).collect();
    let mut owner = vec![0; n];
    for (p1, group) in split_into(&adj, &all, np1).into_iter().enumerate() {
        for (p2, part) in split_into(&adj, &group, np2).into_iter().enumerate() {
            for row in part {
                owner[row] = p1 * np2 + p2;
            }
        }
    }
    Ok(Partition { owner, np1, np2 })
}

/// Recursive bisection of `vertices` (sorted) into `parts` pieces whose
/// sizes differ by at most one.
fn split_into(adj: &[Vec<usize>], vertices: &[usize], parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vertices.to_vec()];
    }
    let left_parts = parts / 2;
    let left_size = vertices.len() * left_parts / parts;
    let order = level_order(adj, vertices);
    let mut left = order[..left_size].to_vec();
    let mut right = order[left_size..].to_vec();
    left.sort_unstable();
    right.sort_unstable();
    let mut out = split_into(adj, &left, left_parts);
    out.extend(split_into(adj, &right, parts - left_parts));
    out
}

/// Breadth-first order of the subgraph induced by `vertices`, started from a
/// pseudo-peripheral vertex found from the lowest index. Disconnected pieces
/// are appended in lowest-unvisited-index order.
fn level_order(adj: &[Vec<usize>], vertices: &[usize]) -> Vec<usize> {
    let n = adj.len();
    let mut member = vec![false; n];
    for &v in vertices {
        member[v] = true;
    }
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(vertices.len());
    for &start in vertices {
        if visited[start] {
            continue;
        }
        let seed = peripheral_seed(adj, &member, start);
        let mut queue = VecDeque::from([seed]);
        visited[seed] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &u in &adj[v] {
                if member[u] && !visited[u] {
                    visited[u] = true;
                    queue.push_back(u);
                }
            }
        }
    }
    order
}

/// Returns `(last level, eccentricity)` of a BFS from `root` within `member`.
fn bfs_levels(adj: &[Vec<usize>], member: &[bool], root: usize) -> (Vec<usize>, usize) {
    let mut depth = vec![usize::MAX; adj.len()];
    depth[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut ecc = 0;
    let mut last = vec![root];
    while let Some(v) = queue.pop_front() {
        let d = depth[v];
        if d > ecc {
            ecc = d;
            last.clear();
        }
        if d == ecc && v != root {
            last.push(v);
        }
        for &u in &adj[v] {
            if member[u] && depth[u] == usize::MAX {
                depth[u] = d + 1;
                queue.push_back(u);
            }
        }
    }
    (last, ecc)
}

fn peripheral_seed(adj: &[Vec<usize>], member: &[bool], start: usize) -> usize {
    let degree = |v: usize| adj[v].iter().filter(|&&u| member[u]).count();
    let mut root = start;
    let (mut last, mut ecc) = bfs_levels(adj, member, root);
    loop {
        let candidate = last
            .iter()
            .copied()
            .min_by_key(|&v| (degree(v), v))
            .unwrap_or(root);
        let (c_last, c_ecc) = bfs_levels(adj, member, candidate);
        if c_ecc > ecc {
            root = candidate;
            last = c_last;
            ecc = c_ecc;
        } else {
            return root;
        }
    }
}
