//! Matrix-free products with `S`, `G(alpha)` and the core-projected block.
//!
//! `S` is the column-normalized adjacency matrix where a dangling column is
//! replaced by the uniform column `1/N`. That rank-one part is never stored:
//! its contribution to a product is the scalar `sum(v[dangling]) / N`.

use std::io::Write;
use std::ops::Deref;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::decompose::Decomposition;
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

/// How products are evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Parallelism {
    /// Column scatter in ascending node order; bit-reproducible.
    #[default]
    Sequential,
    /// Row gather over the transposed graph on the rayon pool. Each row sum
    /// has a fixed order, so results are reproducible across thread counts,
    /// but may differ in the last bits from the sequential mode.
    Parallel,
}

/// A length-`N` vector of node weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RankVector(Vec<f64>);

impl RankVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    /// `e / N`.
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// Unit vector on `node`.
    pub fn delta(n: usize, node: usize) -> Self {
        let mut v = vec![0.0; n];
        v[node] = 1.0;
        Self(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn l1_norm(&self) -> f64 {
        l1_norm(&self.0)
    }

    /// True when every entry is finite and nonnegative and the 1-norm is 1
    /// within `tol`.
    pub fn is_probability(&self, tol: f64) -> bool {
        self.0.iter().all(|x| x.is_finite() && *x >= 0.0) && (self.l1_norm() - 1.0).abs() <= tol
    }

    /// Rescales to unit 1-norm.
    pub fn normalize(&mut self) -> Result<()> {
        let s = self.l1_norm();
        if s == 0.0 || !s.is_finite() {
            return Err(Error::ZeroVector);
        }
        self.0.iter_mut().for_each(|x| *x /= s);
        Ok(())
    }

    /// Writes `index,value` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "index,value")?;
        for (i, x) in self.0.iter().enumerate() {
            writeln!(w, "{i},{}", format_f64(*x))?;
        }
        Ok(())
    }
}

impl Deref for RankVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for RankVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// 17 significant digits, enough to round-trip an `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Sum of absolute values, ascending index order.
pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// The link matrix `S` of a graph, applied without materializing it.
#[derive(Debug, Clone)]
pub struct StochasticOperator {
    graph: Arc<DirectedGraph>,
    weights: Vec<f64>,
    dangling: Vec<usize>,
    parallelism: Parallelism,
    reversed: OnceLock<DirectedGraph>,
}

impl StochasticOperator {
    pub fn new(graph: impl Into<Arc<DirectedGraph>>) -> Self {
        let graph = graph.into();
        let weights = (0..graph.node_count())
            .map(|j| match graph.out_degree(j) {
                0 => 0.0,
                d => 1.0 / d as f64,
            })
            .collect();
        let dangling = graph.dangling_nodes();
        Self {
            graph,
            weights,
            dangling,
            parallelism: Parallelism::Sequential,
            reversed: OnceLock::new(),
        }
    }

    pub fn with_parallelism(mut self, parallelism: Parallelism) -> Self {
        self.parallelism = parallelism;
        self
    }

    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        self.graph.node_count()
    }

    /// `1 / outdeg(j)`, or `None` for a dangling column.
    pub fn column_weight(&self, j: usize) -> Option<f64> {
        (self.graph.out_degree(j) > 0).then(|| self.weights[j])
    }

    pub fn dangling(&self) -> &[usize] {
        &self.dangling
    }

    /// Entry `S[i][j]`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if self.graph.out_degree(j) == 0 {
            1.0 / self.dim() as f64
        } else if self.graph.has_edge(j, i) {
            self.weights[j]
        } else {
            0.0
        }
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// `S v`.
    pub fn apply_s(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.apply_s_into(v, &mut out)?;
        Ok(out)
    }

    /// `out = S v`; `out` must have length `N`.
    pub fn apply_s_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_len(v)?;
        self.check_len(out)?;
        let n = self.dim();
        let dangling_mass: f64 = self.dangling.iter().map(|&j| v[j]).sum();
        let share = dangling_mass / n as f64;
        match self.parallelism {
            Parallelism::Sequential => {
                out.fill(share);
                for j in 0..n {
                    let w = self.weights[j] * v[j];
                    if w == 0.0 {
                        continue;
                    }
                    for &i in self.graph.out_neighbors(j) {
                        out[i] += w;
                    }
                }
            }
            Parallelism::Parallel => {
                let rev = self.reversed.get_or_init(|| self.graph.transpose());
                let weights = &self.weights;
                out.par_iter_mut().enumerate().for_each(|(i, o)| {
                    let s: f64 = rev
                        .out_neighbors(i)
                        .iter()
                        .map(|&j| weights[j] * v[j])
                        .sum();
                    *o = s + share;
                });
            }
        }
        Ok(())
    }

    /// `G(alpha) v = alpha S v + (1 - alpha) sum(v) / N`.
    pub fn apply_g(&self, alpha: f64, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.apply_g_into(alpha, v, &mut out)?;
        Ok(out)
    }

    pub fn apply_g_into(&self, alpha: f64, v: &[f64], out: &mut [f64]) -> Result<()> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidAlpha(alpha));
        }
        self.apply_s_into(v, out)?;
        let teleport = (1.0 - alpha) * v.iter().sum::<f64>() / self.dim() as f64;
        for o in out.iter_mut() {
            *o = alpha * *o + teleport;
        }
        Ok(())
    }

    /// `S_cc v` over the core nodes of `d`, together with the mass `S v`
    /// places on subspace nodes.
    ///
    /// A dangling core column sends `1/N` to every core row and `N_s/N` of
    /// its mass to the subspaces.
    pub fn apply_core_projected(&self, d: &Decomposition, v_core: &[f64]) -> Result<(Vec<f64>, f64)> {
        let mut out = vec![0.0; d.core_size()];
        let escaped = self.apply_core_projected_into(d, v_core, &mut out)?;
        Ok((out, escaped))
    }

    pub fn apply_core_projected_into(
        &self,
        d: &Decomposition,
        v_core: &[f64],
        out: &mut [f64],
    ) -> Result<f64> {
        let n = self.dim();
        if d.node_count() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: d.node_count(),
            });
        }
        let nc = d.core_size();
        for len in [v_core.len(), out.len()] {
            if len != nc {
                return Err(Error::DimensionMismatch {
                    expected: nc,
                    got: len,
                });
            }
        }
        out.fill(0.0);
        let mut escaped = 0.0;
        let mut dangling_mass = 0.0;
        for (p, &j) in d.core.iter().enumerate() {
            let x = v_core[p];
            if x == 0.0 {
                continue;
            }
            if self.graph.out_degree(j) == 0 {
                dangling_mass += x;
                continue;
            }
            let w = self.weights[j] * x;
            for &i in self.graph.out_neighbors(j) {
                match d.core_position(i) {
                    Some(q) => out[q] += w,
                    None => escaped += w,
                }
            }
        }
        if dangling_mass != 0.0 {
            let share = dangling_mass / n as f64;
            out.iter_mut().for_each(|o| *o += share);
            escaped += dangling_mass * (n - nc) as f64 / n as f64;
        }
        Ok(escaped)
    }
}
