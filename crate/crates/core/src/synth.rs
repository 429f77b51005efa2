//! Seeded synthetic networks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

/// Parameters of a synthetic ensemble.
#[derive(Debug, Clone, PartialEq)]
pub enum Ensemble {
    /// Every ordered pair `i != j` is linked with probability `p`.
    Uniform { n: usize, p: f64 },
    /// Disjoint directed cycles (invariant by construction) fed from a
    /// strongly connected core, optionally with one dangling node.
    ///
    /// Cycle nodes come first, then the core nodes, then the dangling node.
    PlantedSubspaces {
        cycles: Vec<usize>,
        core: usize,
        dangling: bool,
    },
    /// Growing network: node `t` links to `out_links` distinct earlier
    /// nodes chosen proportionally to in-degree + 1. Node 0 is dangling.
    PreferentialAttachment { n: usize, out_links: usize },
}

/// Builds one graph of the ensemble. Identical `(ensemble, seed)` pairs give
/// identical graphs.
pub fn generate_synthetic(ensemble: &Ensemble, seed: u64) -> Result<DirectedGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match ensemble {
        Ensemble::Uniform { n, p } => {
            if *n == 0 {
                return Err(Error::InvalidParameter("n must be positive".into()));
            }
            if !(0.0..=1.0).contains(p) {
                return Err(Error::InvalidParameter(format!(
                    "edge probability {p} outside [0, 1]"
                )));
            }
            let mut edges = Vec::new();
            for j in 0..*n {
                for i in 0..*n {
                    if i != j && rng.random::<f64>() < *p {
                        edges.push((j, i));
                    }
                }
            }
            DirectedGraph::from_edges(*n, edges)
        }
        Ensemble::PlantedSubspaces {
            cycles,
            core,
            dangling,
        } => planted(cycles, *core, *dangling, &mut rng),
        Ensemble::PreferentialAttachment { n, out_links } => {
            if *n == 0 || *out_links == 0 {
                return Err(Error::InvalidParameter(
                    "n and out_links must be positive".into(),
                ));
            }
            let mut indeg = vec![0usize; *n];
            let mut edges = Vec::new();
            for t in 1..*n {
                let k = (*out_links).min(t);
                let mut chosen: Vec<usize> = Vec::with_capacity(k);
                while chosen.len() < k {
                    let total: usize = (0..t).map(|s| indeg[s] + 1).sum();
                    let mut r = rng.random_range(0..total);
                    let mut pick = 0;
                    for s in 0..t {
                        let w = indeg[s] + 1;
                        if r < w {
                            pick = s;
                            break;
                        }
                        r -= w;
                    }
                    if !chosen.contains(&pick) {
                        chosen.push(pick);
                    }
                }
                for s in chosen {
                    indeg[s] += 1;
                    edges.push((t, s));
                }
            }
            DirectedGraph::from_edges(*n, edges)
        }
    }
}

fn planted(cycles: &[usize], core: usize, dangling: bool, rng: &mut ChaCha8Rng) -> Result<DirectedGraph> {
    if cycles.contains(&0) {
        return Err(Error::InvalidParameter("cycle sizes must be positive".into()));
    }
    if core == 0 {
        return Err(Error::InvalidParameter("core must have at least one node".into()));
    }
    let sub_nodes: usize = cycles.iter().sum();
    let n = sub_nodes + core + usize::from(dangling);
    let mut edges = Vec::new();
    let mut entries = Vec::with_capacity(cycles.len());
    let mut base = 0;
    for &s in cycles {
        for k in 0..s {
            edges.push((base + k, base + (k + 1) % s));
        }
        entries.push(base);
        base += s;
    }
    let core_node = |k: usize| sub_nodes + k;
    if core == 1 {
        for &e in &entries {
            edges.push((core_node(0), e));
        }
    } else {
        for k in 0..core {
            edges.push((core_node(k), core_node((k + 1) % core)));
            let chord = rng.random_range(0..core);
            edges.push((core_node(k), core_node(chord)));
        }
        for &e in &entries {
            edges.push((core_node(rng.random_range(0..core)), e));
        }
    }
    if dangling {
        edges.push((core_node(rng.random_range(0..core)), n - 1));
    }
    DirectedGraph::from_edges(n, edges)
}

/// Subspace sizes whose rescaled distribution has survival function
/// `F(x) = (1 + x/(b-1))^(-b)` with `x = d / mean`. Sizes are rounded up to
/// the nearest integer (at least 1) and capped at `max_size`.
///
/// Sizes sit at the quantile midpoints `(k + 1/2) / count` of the target
/// law, so their empirical distribution matches it up to the rounding; the
/// seed only fixes the order in which they are returned.
pub fn sample_subspace_sizes(count: usize, b: f64, mean: f64, max_size: usize, seed: u64) -> Result<Vec<usize>> {
    if b <= 1.0 || mean <= 0.0 {
        return Err(Error::InvalidParameter("need b > 1 and mean > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sizes: Vec<usize> = (0..count)
        .map(|k| {
            let u = 1.0 - (k as f64 + 0.5) / count as f64;
            let x = (b - 1.0) * (u.powf(-1.0 / b) - 1.0);
            ((x * mean).round() as usize).clamp(1, max_size.max(1))
        })
        .collect();
    sizes.shuffle(&mut rng);
    Ok(sizes)
}
