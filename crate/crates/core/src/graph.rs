//! Directed graphs in compressed column form.
//!
//! A graph stores, for every source node `j`, the sorted list of distinct
//! targets `i` with `A[i][j] = 1`. External node ids from edge-list files are
//! remapped to the dense range `[0, N)` in order of first appearance; the
//! table is kept so outputs can be written back with the original ids.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Immutable 0/1 adjacency of a directed network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    ids: Vec<u64>,
}

impl DirectedGraph {
    /// Builds a graph on nodes `0..n` (external id = dense index).
    /// Duplicate edges are collapsed.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::from_edges_with_ids(edges, (0..n as u64).collect())
    }

    /// Builds a graph on `ids.len()` nodes where `ids[k]` is the external id
    /// of dense node `k`.
    pub fn from_edges_with_ids<I>(edges: I, ids: Vec<u64>) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let n = ids.len();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (src, dst) in edges {
            if src >= n || dst >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge {src} -> {dst} outside node range 0..{n}"
                )));
            }
            cols[src].push(dst);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for mut col in cols {
            col.sort_unstable();
            col.dedup();
            targets.extend_from_slice(&col);
            offsets.push(targets.len());
        }
        Ok(Self {
            offsets,
            targets,
            ids,
        })
    }

    /// Parses a whitespace separated `src dst` edge list. Lines starting with
    /// `#` and blank lines are skipped.
    pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<Self> {
        let mut index: HashMap<u64, usize> = HashMap::new();
        let mut ids: Vec<u64> = Vec::new();
        let mut edges = Vec::new();
        let mut intern = |id: u64| -> usize {
            *index.entry(id).or_insert_with(|| {
                ids.push(id);
                ids.len() - 1
            })
        };
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut tokens = trimmed.split_whitespace();
            let mut next_id = |what: &str| -> Result<u64> {
                let tok = tokens.next().ok_or_else(|| Error::Parse {
                    line: lineno + 1,
                    message: format!("missing {what} id"),
                })?;
                tok.parse::<u64>().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    message: format!("malformed {what} id {tok:?}"),
                })
            };
            let src = next_id("source")?;
            let dst = next_id("target")?;
            if let Some(extra) = tokens.next() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("unexpected token {extra:?}"),
                });
            }
            let s = intern(src);
            let d = intern(dst);
            edges.push((s, d));
        }
        Self::from_edges_with_ids(edges, ids)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        Self::parse_edge_list(text.as_bytes())
    }

    /// Writes the edge list with external ids, one `src dst` pair per line,
    /// sources in dense order.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        for (src, dst) in self.edges() {
            writeln!(w, "{} {}", self.ids[src], self.ids[dst])?;
        }
        Ok(())
    }

    /// Number of nodes `N`.
    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    /// Number of links `L`.
    pub fn link_count(&self) -> usize {
        self.targets.len()
    }

    /// Sorted targets of node `j`.
    #[inline]
    pub fn out_neighbors(&self, j: usize) -> &[usize] {
        &self.targets[self.offsets[j]..self.offsets[j + 1]]
    }

    #[inline]
    pub fn out_degree(&self, j: usize) -> usize {
        self.offsets[j + 1] - self.offsets[j]
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.out_neighbors(src).binary_search(&dst).is_ok()
    }

    /// All `(src, dst)` pairs, sources ascending, targets ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |j| self.out_neighbors(j).iter().map(move |&i| (j, i)))
    }

    pub fn external_id(&self, node: usize) -> u64 {
        self.ids[node]
    }

    pub fn external_ids(&self) -> &[u64] {
        &self.ids
    }

    /// The graph with every link reversed. Node ids are unchanged.
    pub fn transpose(&self) -> Self {
        let n = self.node_count();
        let mut counts = vec![0usize; n + 1];
        for &t in &self.targets {
            counts[t + 1] += 1;
        }
        for k in 0..n {
            counts[k + 1] += counts[k];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut targets = vec![0usize; self.targets.len()];
        // sources visited in ascending order, so each reversed column comes out sorted
        for (src, dst) in self.edges() {
            targets[fill[dst]] = src;
            fill[dst] += 1;
        }
        Self {
            offsets,
            targets,
            ids: self.ids.clone(),
        }
    }

    /// Nodes with out-degree zero, ascending.
    pub fn dangling_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&j| self.out_degree(j) == 0)
            .collect()
    }

    /// Relabels nodes: dense node `k` becomes `perm[k]`. External ids travel
    /// with their nodes.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let n = self.node_count();
        if perm.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: perm.len(),
            });
        }
        let mut ids = vec![0u64; n];
        for (k, &p) in perm.iter().enumerate() {
            ids[p] = self.ids[k];
        }
        Self::from_edges_with_ids(self.edges().map(|(s, d)| (perm[s], perm[d])), ids)
    }

    /// CSV row `name,N,L,dangling_count`.
    pub fn summary_row(&self, name: &str) -> String {
        format!(
            "{},{},{},{}",
            name,
            self.node_count(),
            self.link_count(),
            self.dangling_nodes().len()
        )
    }
}

pub const GRAPH_SUMMARY_HEADER: &str = "name,N,L,dangling_count";

/// Small graphs used throughout the tests and documentation.
pub mod fixtures {
    use super::DirectedGraph;

    fn build(n: usize, edges: &[(usize, usize)]) -> DirectedGraph {
        DirectedGraph::from_edges(n, edges.iter().copied()).expect("valid fixture")
    }

    /// One two-cycle subspace `{0,1}` fed by the core `{2,3}`.
    pub fn g4() -> DirectedGraph {
        build(4, &[(0, 1), (1, 0), (2, 0), (2, 3), (3, 2)])
    }

    /// `g4` plus a first-order zero node `4`.
    pub fn g5() -> DirectedGraph {
        build(5, &[(0, 1), (1, 0), (2, 0), (2, 3), (3, 2), (3, 4), (4, 0)])
    }

    /// Two two-cycle subspaces fed by the single core node `4`.
    pub fn g6() -> DirectedGraph {
        build(5, &[(0, 1), (1, 0), (2, 3), (3, 2), (4, 0), (4, 2)])
    }

    /// Subspace `{0,1,4,5}` with zero nodes of first (`5`) and second (`4`) order.
    pub fn g7() -> DirectedGraph {
        build(
            6,
            &[(0, 1), (1, 0), (2, 0), (2, 3), (3, 2), (3, 5), (5, 4), (4, 0)],
        )
    }
}
