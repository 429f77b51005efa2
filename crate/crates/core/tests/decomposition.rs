mod common;

use common::{brute_force_classify, dense_link_matrix, random_graph};
use gmrank::graph::fixtures;
use gmrank::{decompose, verify_decomposition, DecomposeConfig, Decomposition, DirectedGraph};

fn exact() -> DecomposeConfig {
    DecomposeConfig {
        budget: 1.0,
        min_cutoff: 1,
    }
}

fn assert_matches_oracle(g: &DirectedGraph, d: &Decomposition) {
    let oracle = brute_force_classify(g);
    let got: Vec<Vec<usize>> = d.subspaces.iter().map(|s| s.members.clone()).collect();
    assert_eq!(got, oracle.subspaces);
    assert_eq!(d.core, oracle.core);
    for s in &d.subspaces {
        assert_eq!(s.root, s.members[0]);
        for &m in &s.members {
            assert_eq!(s.zero_order(m), Some(oracle.zero_orders[&m]), "node {m}");
        }
    }
}

#[test]
fn fixtures_match_brute_force() {
    for g in [fixtures::g4(), fixtures::g5(), fixtures::g6(), fixtures::g7()] {
        let d = decompose(&g, &exact()).unwrap();
        assert_matches_oracle(&g, &d);
        assert!(verify_decomposition(&g, &d).passed());
    }
}

#[test]
fn random_small_graphs_match_brute_force() {
    for seed in 0..100 {
        let n = 1 + (seed as usize % 12);
        let g = random_graph(n, 0.5 + (seed % 7) as f64 * 0.4, seed);
        for cfg in [exact(), DecomposeConfig::default()] {
            let d = decompose(&g, &cfg).unwrap();
            assert_matches_oracle(&g, &d);
        }
    }
}

#[test]
fn reordered_matrix_is_block_triangular() {
    for seed in 200..230 {
        let n = 5 + (seed as usize % 46);
        let g = random_graph(n, 1.2 + (seed % 3) as f64, seed);
        let d = decompose(&g, &exact()).unwrap();
        let s = dense_link_matrix(&g);
        let owner = |k: usize| d.subspaces.iter().position(|sub| sub.members.contains(&k));
        for j in 0..n {
            if let Some(id) = owner(j) {
                for i in 0..n {
                    if owner(i) != Some(id) {
                        assert_eq!(s[(i, j)], 0.0, "seed {seed}: S[{i},{j}]");
                    }
                }
            }
        }
    }
}

#[test]
fn budget_changes_only_large_closures() {
    // a 40-node cycle fed by a dangling-free core: with a tiny budget the
    // cycle closure is over budget, so every node is core
    let mut edges: Vec<(usize, usize)> = (0..40).map(|k| (k, (k + 1) % 40)).collect();
    edges.extend([(40, 0), (40, 41), (41, 40)]);
    let g = DirectedGraph::from_edges(42, edges).unwrap();
    let small = DecomposeConfig {
        budget: 0.1,
        min_cutoff: 1,
    };
    let d = decompose(&g, &small).unwrap();
    assert!(d.subspaces.is_empty());
    assert_eq!(d.core_size(), 42);
    let d = decompose(&g, &exact()).unwrap();
    assert_eq!(d.subspaces.len(), 1);
    assert_eq!(d.subspaces[0].dim(), 40);
}

#[test]
fn csv_round_trip_on_random_graph() {
    let g = random_graph(40, 1.3, 7);
    let d = decompose(&g, &exact()).unwrap();
    let mut buf = Vec::new();
    d.write_csv(&mut buf).unwrap();
    let back = Decomposition::read_csv(&g, buf.as_slice()).unwrap();
    assert_eq!(back.core, d.core);
    assert_eq!(back.subspaces, d.subspaces);
}
