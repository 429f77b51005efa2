//! Core-space gap `1 - lambda_1(S_cc)` measured as the escape probability
//! of the leading core vector.
//!
//! Once `psi` is the 1-normalized nonnegative leading vector of `S_cc`,
//! column normalization of `S` gives `1 - lambda_1 = |S_sc psi|_1`: the mass
//! that one application of `S` moves from the core onto subspace nodes.
//! Summing that mass directly keeps full relative precision even when the
//! gap is far below the resolution of `lambda_1` itself.
//!
//! The vector is obtained by a power iteration started from the node where
//! a preliminary Arnoldi estimate peaks. Starting localized matters: the
//! tails of `psi` can sit many orders of magnitude below its maximum and a
//! delocalized start never resolves them.

use std::collections::VecDeque;
use std::io::Write;

use super::arnoldi::{arnoldi, leading_ritz_pair};
use crate::decompose::Decomposition;
use crate::error::{Error, Result};
use crate::operator::{format_f64, l1_norm, StochasticOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapMethod {
    Arnoldi,
    ProjectedPower,
}

impl GapMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            GapMethod::Arnoldi => "arnoldi",
            GapMethod::ProjectedPower => "projected_power",
        }
    }
}

/// Stopping rule and iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapConfig {
    /// Bound on `|psi - psi_old|_1`.
    pub eps1: f64,
    /// Bound on the largest relative componentwise change.
    pub eps2: f64,
    pub max_iter: usize,
    /// Arnoldi dimension cap of the seeding pass.
    pub seed_dim: usize,
    /// The iteration applies `S_cc + shift * I`. Any positive shift removes
    /// the oscillation of periodic core blocks; `0` is the plain power method.
    pub shift: f64,
}

impl Default for GapConfig {
    fn default() -> Self {
        Self {
            eps1: 1e-13,
            eps2: 1e-6,
            max_iter: 2_000_000,
            seed_dim: 200,
            shift: 1.0,
        }
    }
}

/// Leading core eigenvalue gap and vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GapResult {
    pub gap: f64,
    /// Core-indexed, nonnegative, unit 1-norm.
    pub leading_vector: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub method: GapMethod,
    /// Node the iteration was started from.
    pub seed_node: usize,
    /// A dangling node lies within three links of the seed, so the
    /// localization domain is not isolated.
    pub dangling_near_seed: bool,
}

impl GapResult {
    pub fn lambda(&self) -> f64 {
        1.0 - self.gap
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "gap,iterations,converged,method,seed_node")?;
        writeln!(
            w,
            "{},{},{},{},{}",
            format_f64(self.gap),
            self.iterations,
            self.converged,
            self.method.as_str(),
            self.seed_node
        )?;
        Ok(())
    }

    /// `node,value` over core nodes.
    pub fn write_vector_csv<W: Write>(&self, d: &Decomposition, mut w: W) -> Result<()> {
        writeln!(w, "node,value")?;
        for (p, &node) in d.core.iter().enumerate() {
            writeln!(w, "{node},{}", format_f64(self.leading_vector[p]))?;
        }
        Ok(())
    }
}

/// One iteration as seen by an observer.
#[derive(Debug, Clone, Copy)]
pub struct ProjectedStep {
    pub iteration: usize,
    /// Mass moved onto subspace nodes by `S` from the current unit vector.
    pub escaped: f64,
    /// `|S_cc psi|_1` for the same vector.
    pub retained: f64,
}

/// Preliminary Arnoldi estimate of the leading core vector (core-indexed,
/// real, nonnegative part) together with its Ritz value.
pub fn arnoldi_core_vector(op: &StochasticOperator, d: &Decomposition, n_a: usize) -> Result<(f64, Vec<f64>)> {
    let nc = d.core_size();
    if nc == 0 {
        return Err(Error::EmptyCore);
    }
    let start = vec![1.0 / nc as f64; nc];
    let f = arnoldi(
        |x, y| op.apply_core_projected_into(d, x, y).map(|_| ()),
        &start,
        n_a.min(nc).max(1),
    )?;
    let pair = leading_ritz_pair(&f)?;
    Ok((pair.value.re, pair.vector.iter().map(|c| c.re).collect()))
}

/// Gap estimate `1 - Re(lambda_1)` straight from Arnoldi on `S_cc`.
pub fn gap_via_arnoldi(op: &StochasticOperator, d: &Decomposition, n_a: usize) -> Result<GapResult> {
    let (lambda, vector) = arnoldi_core_vector(op, d, n_a)?;
    let seed_pos = argmax_smallest(&vector);
    let mut leading: Vec<f64> = vector.iter().map(|x| x.max(0.0)).collect();
    let s = l1_norm(&leading);
    if s > 0.0 {
        leading.iter_mut().for_each(|x| *x /= s);
    }
    let seed_node = d.core[seed_pos];
    Ok(GapResult {
        gap: (1.0 - lambda).clamp(0.0, 1.0),
        leading_vector: leading,
        iterations: 0,
        converged: true,
        method: GapMethod::Arnoldi,
        seed_node,
        dangling_near_seed: dangling_within(op, seed_node, 3),
    })
}

/// Position of the maximal entry; near-equal maxima resolve to the lowest position.
fn argmax_smallest(v: &[f64]) -> usize {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = max.abs() * 1e-12;
    v.iter().position(|&x| x >= max - tol).unwrap_or(0)
}

fn dangling_within(op: &StochasticOperator, start: usize, hops: usize) -> bool {
    let g = op.graph();
    let mut depth = vec![usize::MAX; g.node_count()];
    let mut queue = VecDeque::from([start]);
    depth[start] = 0;
    while let Some(l) = queue.pop_front() {
        if g.out_degree(l) == 0 {
            return true;
        }
        if depth[l] == hops {
            continue;
        }
        for &k in g.out_neighbors(l) {
            if depth[k] == usize::MAX {
                depth[k] = depth[l] + 1;
                queue.push_back(k);
            }
        }
    }
    false
}

/// Projected power method for the core-space gap.
pub fn gap_via_projected_power(op: &StochasticOperator, d: &Decomposition, cfg: &GapConfig) -> Result<GapResult> {
    gap_via_projected_power_observed(op, d, cfg, |_| {})
}

/// [`gap_via_projected_power`] reporting every iteration to `observe`.
pub fn gap_via_projected_power_observed<F>(
    op: &StochasticOperator,
    d: &Decomposition,
    cfg: &GapConfig,
    mut observe: F,
) -> Result<GapResult>
where
    F: FnMut(&ProjectedStep),
{
    let nc = d.core_size();
    if nc == 0 {
        return Err(Error::EmptyCore);
    }
    if cfg.shift < 0.0 || !cfg.shift.is_finite() {
        return Err(Error::InvalidParameter("shift must be finite and nonnegative".into()));
    }
    let (_, estimate) = arnoldi_core_vector(op, d, cfg.seed_dim)?;
    let seed_pos = argmax_smallest(&estimate);
    let seed_node = d.core[seed_pos];
    let dangling_near_seed = dangling_within(op, seed_node, 3);

    let mut psi = vec![0.0; nc];
    psi[seed_pos] = 1.0;
    let mut next = vec![0.0; nc];
    let mut gap = 0.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;
        let escaped = op.apply_core_projected_into(d, &psi, &mut next)?;
        let retained = l1_norm(&next);
        gap = escaped;
        observe(&ProjectedStep {
            iteration: iterations,
            escaped,
            retained,
        });
        if cfg.shift > 0.0 {
            for (x, p) in next.iter_mut().zip(&psi) {
                *x += cfg.shift * p;
            }
        }
        let norm = l1_norm(&next);
        if norm == 0.0 {
            // everything escapes in one step
            converged = true;
            break;
        }
        let mut diff = 0.0;
        let mut rel: f64 = 0.0;
        for (x, p) in next.iter_mut().zip(&psi) {
            *x /= norm;
            let delta = (*x - p).abs();
            diff += delta;
            if *x != 0.0 {
                rel = rel.max(delta / x.abs());
            }
        }
        std::mem::swap(&mut psi, &mut next);
        if diff < cfg.eps1 && rel < cfg.eps2 {
            converged = true;
            break;
        }
    }
    if converged {
        // gap of the accepted vector
        gap = op.apply_core_projected_into(d, &psi, &mut next)?;
    }

    Ok(GapResult {
        gap: gap.clamp(0.0, 1.0),
        leading_vector: psi,
        iterations,
        converged,
        method: GapMethod::ProjectedPower,
        seed_node,
        dangling_near_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{decompose, DecomposeConfig};
    use crate::graph::{fixtures, DirectedGraph};

    fn setup(g: DirectedGraph) -> (StochasticOperator, Decomposition) {
        let d = decompose(&g, &DecomposeConfig::default()).unwrap();
        (StochasticOperator::new(g), d)
    }

    #[test]
    fn g4_gap() {
        let (op, d) = setup(fixtures::g4());
        let r = gap_via_projected_power(&op, &d, &GapConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.method, GapMethod::ProjectedPower);
        assert!((r.gap - (1.0 - 0.5_f64.sqrt())).abs() < 1e-12);
        assert!((r.leading_vector[0] - 0.585_786_437_626_904_9).abs() < 1e-12);
        assert!((r.leading_vector[1] - 0.414_213_562_373_095_1).abs() < 1e-12);
        assert_eq!(r.seed_node, 2);
        assert!(!r.dangling_near_seed);
    }

    #[test]
    fn g6_everything_escapes() {
        let (op, d) = setup(fixtures::g6());
        let r = gap_via_projected_power(&op, &d, &GapConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.gap, 1.0);
        assert_eq!(r.leading_vector, vec![1.0]);
    }

    #[test]
    fn plain_power_on_aperiodic_core() {
        // core 2 <-> 3 with a self-loop on 3 is aperiodic
        let g = DirectedGraph::from_edges(4, [(0, 1), (1, 0), (2, 0), (2, 3), (3, 2), (3, 3)]).unwrap();
        let (op, d) = setup(g);
        let cfg = GapConfig {
            shift: 0.0,
            ..GapConfig::default()
        };
        let plain = gap_via_projected_power(&op, &d, &cfg).unwrap();
        let shifted = gap_via_projected_power(&op, &d, &GapConfig::default()).unwrap();
        assert!(plain.converged && shifted.converged);
        assert!((plain.gap - shifted.gap).abs() < 1e-12);
        // S_cc = [[0, 1/2], [1/2, 1/2]]: lambda_1 = (1 + sqrt 5) / 4
        assert!((plain.gap - (1.0 - (1.0 + 5f64.sqrt()) / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn non_convergence_is_flagged() {
        let (op, d) = setup(fixtures::g4());
        let cfg = GapConfig {
            max_iter: 2,
            ..GapConfig::default()
        };
        let r = gap_via_projected_power(&op, &d, &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 2);
    }

    #[test]
    fn empty_core() {
        let (op, d) = setup(DirectedGraph::from_edges(2, [(0, 1), (1, 0)]).unwrap());
        assert!(matches!(
            gap_via_projected_power(&op, &d, &GapConfig::default()),
            Err(Error::EmptyCore)
        ));
    }

    #[test]
    fn arnoldi_gap_g4() {
        let (op, d) = setup(fixtures::g4());
        let r = gap_via_arnoldi(&op, &d, 10).unwrap();
        assert_eq!(r.method, GapMethod::Arnoldi);
        assert!((r.gap - (1.0 - 0.5_f64.sqrt())).abs() < 1e-13);
    }

    #[test]
    fn dangling_detection() {
        let g = DirectedGraph::from_edges(5, [(0, 1), (1, 0), (2, 3), (3, 4), (2, 0)]).unwrap();
        let op = StochasticOperator::new(g);
        assert!(dangling_within(&op, 2, 3));
        assert!(!dangling_within(&op, 2, 1));
    }
}
