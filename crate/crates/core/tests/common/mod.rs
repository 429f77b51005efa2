//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use faer::Mat;
use gmrank::{generate_synthetic, DirectedGraph, Ensemble, StochasticOperator};
use num_complex::Complex64;

/// Full forward closure of every node, with dangling nodes linking to all nodes.
pub fn full_closures(g: &DirectedGraph) -> Vec<BTreeSet<usize>> {
    let n = g.node_count();
    let succ = |k: usize| -> Vec<usize> {
        if g.out_degree(k) == 0 {
            (0..n).collect()
        } else {
            g.out_neighbors(k).to_vec()
        }
    };
    (0..n)
        .map(|s| {
            let mut seen = BTreeSet::from([s]);
            let mut stack = vec![s];
            while let Some(l) = stack.pop() {
                for k in succ(l) {
                    if seen.insert(k) {
                        stack.push(k);
                    }
                }
            }
            seen
        })
        .collect()
}

/// Brute-force classification: subspaces as sorted member lists ordered by
/// smallest member, and the zero-node order of every subspace member.
pub struct Classified {
    pub subspaces: Vec<Vec<usize>>,
    pub core: Vec<usize>,
    pub zero_orders: BTreeMap<usize, usize>,
}

pub fn brute_force_classify(g: &DirectedGraph) -> Classified {
    let n = g.node_count();
    let closures = full_closures(g);
    let mut groups: Vec<BTreeSet<usize>> = Vec::new();
    for c in closures.iter().filter(|c| c.len() < n) {
        let mut merged = c.clone();
        let mut rest = Vec::new();
        for grp in groups.drain(..) {
            if grp.is_disjoint(&merged) {
                rest.push(grp);
            } else {
                merged.extend(grp);
            }
        }
        rest.push(merged);
        groups = rest;
    }
    // without dangling nodes and proper closed sets the whole graph is closed
    if groups.is_empty() && n > 0 && (0..n).all(|k| g.out_degree(k) > 0) {
        groups.push((0..n).collect());
    }
    let mut subspaces: Vec<Vec<usize>> = groups.into_iter().map(|s| s.into_iter().collect()).collect();
    subspaces.sort();
    let in_sub: BTreeSet<usize> = subspaces.iter().flatten().copied().collect();
    let core = (0..n).filter(|k| !in_sub.contains(k)).collect();
    let mut zero_orders = BTreeMap::new();
    for s in &subspaces {
        zero_orders.extend(zero_orders_by_relaxation(g, s));
    }
    Classified {
        subspaces,
        core,
        zero_orders,
    }
}

/// Order 1: no in-edge from a member. Order k: every member predecessor is a
/// zero node, the deepest of order k - 1. Everything else: 0.
pub fn zero_orders_by_relaxation(g: &DirectedGraph, members: &[usize]) -> BTreeMap<usize, usize> {
    let set: BTreeSet<usize> = members.iter().copied().collect();
    let mut preds: BTreeMap<usize, Vec<usize>> = members.iter().map(|&m| (m, Vec::new())).collect();
    for &m in members {
        for &k in g.out_neighbors(m) {
            if set.contains(&k) {
                preds.get_mut(&k).unwrap().push(m);
            }
        }
    }
    let mut order: BTreeMap<usize, usize> = members.iter().map(|&m| (m, 0)).collect();
    loop {
        let mut changed = false;
        for &m in members {
            let p = &preds[&m];
            let value = if p.iter().all(|q| order[q] > 0) {
                1 + p.iter().map(|q| order[q]).max().unwrap_or(0)
            } else {
                0
            };
            if value != order[&m] {
                order.insert(m, value);
                changed = true;
            }
        }
        if !changed {
            return order;
        }
    }
}

/// Dense `S` built straight from the edge list.
pub fn dense_link_matrix(g: &DirectedGraph) -> Mat<f64> {
    let n = g.node_count();
    let mut m = Mat::zeros(n, n);
    for j in 0..n {
        let deg = g.out_degree(j);
        if deg == 0 {
            for i in 0..n {
                m[(i, j)] = 1.0 / n as f64;
            }
        } else {
            for &i in g.out_neighbors(j) {
                m[(i, j)] += 1.0 / deg as f64;
            }
        }
    }
    m
}

pub fn dense_eigenvalues(m: &Mat<f64>) -> Vec<Complex64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    m.eigenvalues().expect("dense eigenvalues")
}

pub fn submatrix(m: &Mat<f64>, idx: &[usize]) -> Mat<f64> {
    Mat::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])])
}

/// Random digraph with mean out-degree `deg` drawn from the uniform ensemble.
pub fn random_graph(n: usize, deg: f64, seed: u64) -> DirectedGraph {
    let p = (deg / n as f64).min(1.0);
    generate_synthetic(&Ensemble::Uniform { n, p }, seed).unwrap()
}

/// `(1 - alpha) (I - alpha S)^{-1} e / N` by plain Gaussian elimination with
/// partial pivoting, renormalized to unit sum.
pub fn pagerank_by_elimination(g: &DirectedGraph, alpha: f64) -> Vec<f64> {
    let n = g.node_count();
    let s = dense_link_matrix(g);
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 1.0 } else { 0.0 } - alpha * s[(i, j)])
                .collect()
        })
        .collect();
    let mut b = vec![(1.0 - alpha) / n as f64; n];
    for c in 0..n {
        let piv = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    let total: f64 = x.iter().sum();
    x.iter().map(|v| v / total).collect()
}

pub fn operator(g: &DirectedGraph) -> StochasticOperator {
    StochasticOperator::new(g.clone())
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Sparse stochastic test matrix with a well separated top of the spectrum:
/// an invariant 3-cycle (eigenvalues `1, w, conj(w)`), a self-looped node
/// leaking into the bulk (`1/2`), and a random bulk of out-degree 8..=15 that
/// also feeds the cycle (Perron root near `0.9`, remaining bulk spectrum
/// well inside `|z| = 0.5`).
pub fn separated_spectrum_graph(n: usize, seed: u64) -> DirectedGraph {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let bulk = 4..n;
    let mut e = vec![(0, 1), (1, 2), (2, 0), (3, 3), (3, rng.random_range(bulk.clone()))];
    for j in bulk.clone() {
        let deg = rng.random_range(8..=15);
        for _ in 0..deg {
            e.push((j, rng.random_range(bulk.clone())));
        }
        e.push((j, rng.random_range(0..3)));
    }
    DirectedGraph::from_edges(n, e).unwrap()
}

/// Quasi-subspace chain `c_0 .. c_{len-1}`: each chain node steps forward
/// with probability `q` and otherwise falls onto `1/q - 1` shared fan nodes
/// that all return to `c_0`. The last chain node steps onto an invariant
/// 2-cycle instead. Returns the graph and the first-order analytic core gap
/// `psi(c_0) q^len`, with `psi(c_0) = 1 / (1 + sum_k q^k)`.
pub fn leaky_chain(len: usize, q: f64) -> (DirectedGraph, f64) {
    let fan_size = (1.0 / q).round() as usize - 1;
    let fan = len..len + fan_size;
    let (s, s2) = (len + fan_size, len + fan_size + 1);
    let mut e = Vec::new();
    for k in 0..len {
        e.push((k, if k + 1 < len { k + 1 } else { s }));
        e.extend(fan.clone().map(|f| (k, f)));
    }
    e.extend(fan.clone().map(|f| (f, 0)));
    e.extend([(s, s2), (s2, s)]);
    let g = DirectedGraph::from_edges(s2 + 1, e).unwrap();
    let q = 1.0 / (fan_size + 1) as f64;
    let sigma: f64 = (0..len).map(|k| q.powi(k as i32)).sum();
    (g, q.powi(len as i32) / (1.0 + sigma))
}
