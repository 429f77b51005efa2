//! Splitting a network into core space and invariant subspaces.
//!
//! For every node we grow its forward closure under `S` (where a dangling
//! node links to everything). A closure that reaches a dangling node, a node
//! already known to be core, or more than the node budget marks the start
//! node as core. Otherwise the saturated closure is an invariant set. Limit
//! sets sharing members are merged into maximal subspaces, and inside each
//! subspace the zero nodes are stripped layer by layer.

use std::collections::VecDeque;
use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

/// Outcome of a single closure computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Closure {
    Core,
    /// Saturated forward closure, sorted, including the start node.
    LimitSet(Vec<usize>),
}

/// Grows the forward closure of `start`.
///
/// Returns [`Closure::Core`] once the closure contains a dangling node, a
/// node flagged in `known_core`, all `N` nodes, or more than `cutoff` nodes.
pub fn reachable_closure(
    g: &DirectedGraph,
    start: usize,
    cutoff: usize,
    dangling: &[bool],
    known_core: Option<&[bool]>,
) -> Closure {
    let mut seen = vec![false; g.node_count()];
    let mut scratch = Vec::new();
    closure_into(g, start, cutoff, dangling, known_core, &mut seen, &mut scratch)
}

/// Closure with caller-provided scratch; `seen` is restored to all-false on return.
fn closure_into(
    g: &DirectedGraph,
    start: usize,
    cutoff: usize,
    dangling: &[bool],
    known_core: Option<&[bool]>,
    seen: &mut [bool],
    members: &mut Vec<usize>,
) -> Closure {
    let n = g.node_count();
    let cutoff = cutoff.max(1);
    let is_core = |k: usize| dangling[k] || known_core.is_some_and(|c| c[k]);

    members.clear();
    let mut outcome = None;
    if is_core(start) {
        outcome = Some(Closure::Core);
    } else {
        seen[start] = true;
        members.push(start);
        let mut head = 0;
        'grow: while head < members.len() {
            let l = members[head];
            head += 1;
            for &k in g.out_neighbors(l) {
                if seen[k] {
                    continue;
                }
                if is_core(k) {
                    outcome = Some(Closure::Core);
                    break 'grow;
                }
                seen[k] = true;
                members.push(k);
                if members.len() > cutoff || members.len() == n {
                    outcome = Some(Closure::Core);
                    break 'grow;
                }
            }
        }
        if members.len() == n {
            outcome = Some(Closure::Core);
        }
    }
    for &k in members.iter() {
        seen[k] = false;
    }
    outcome.unwrap_or_else(|| {
        let mut set = members.clone();
        set.sort_unstable();
        Closure::LimitSet(set)
    })
}

/// Tuning of [`decompose`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeConfig {
    /// Closures larger than `budget * N` nodes are classified core.
    pub budget: f64,
    /// Lower bound on the node budget; on small graphs full closures are cheap.
    pub min_cutoff: usize,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self {
            budget: 0.1,
            min_cutoff: 4096,
        }
    }
}

impl DecomposeConfig {
    pub fn with_budget(budget: f64) -> Self {
        Self {
            budget,
            ..Self::default()
        }
    }

    /// Node budget for a graph of `n` nodes.
    pub fn cutoff(&self, n: usize) -> usize {
        let raw = (self.budget * n as f64).ceil() as usize;
        raw.max(self.min_cutoff).clamp(1, n.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    Core,
    /// Index into [`Decomposition::subspaces`].
    Subspace(usize),
}

/// One merged invariant subspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subspace {
    pub root: usize,
    /// Sorted member nodes.
    pub members: Vec<usize>,
    /// `zero_orders[k]` is the zero-node order of `members[k]`; 0 for non-zero nodes.
    pub zero_orders: Vec<usize>,
    /// Members of zero order 0.
    pub reduced_members: Vec<usize>,
}

impl Subspace {
    pub fn dim(&self) -> usize {
        self.members.len()
    }

    pub fn zero_order(&self, node: usize) -> Option<usize> {
        self.members
            .binary_search(&node)
            .ok()
            .map(|k| self.zero_orders[k])
    }

    fn new(g: &DirectedGraph, root: usize, members: Vec<usize>) -> Self {
        let orders = zero_node_orders(g, &members);
        let zero_orders: Vec<usize> = members.iter().map(|m| orders[m]).collect();
        let reduced_members = members
            .iter()
            .zip(&zero_orders)
            .filter(|(_, &o)| o == 0)
            .map(|(&m, _)| m)
            .collect();
        Self {
            root,
            members,
            zero_orders,
            reduced_members,
        }
    }
}

/// Partition of the nodes into core space and invariant subspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Sorted core nodes.
    pub core: Vec<usize>,
    /// Subspaces ordered by root.
    pub subspaces: Vec<Subspace>,
    class: Vec<NodeClass>,
    core_pos: Vec<usize>,
    /// Set when some subspace is large enough that the node budget may have
    /// misclassified a bigger one as core.
    pub budget_warning: bool,
}

const NOT_CORE: usize = usize::MAX;

impl Decomposition {
    /// Assembles a decomposition from explicit member lists without checking
    /// any invariant. Roots are the smallest member of each list.
    pub fn from_parts(g: &DirectedGraph, subspaces: Vec<Vec<usize>>) -> Self {
        let n = g.node_count();
        let mut in_sub = vec![false; n];
        let subs: Vec<Subspace> = subspaces
            .into_iter()
            .map(|mut m| {
                m.sort_unstable();
                m.dedup();
                for &k in &m {
                    in_sub[k] = true;
                }
                let root = m[0];
                Subspace::new(g, root, m)
            })
            .collect();
        let core = (0..n).filter(|&k| !in_sub[k]).collect();
        Self::assemble(n, core, subs, false)
    }

    fn assemble(n: usize, core: Vec<usize>, mut subspaces: Vec<Subspace>, warn: bool) -> Self {
        subspaces.sort_by_key(|s| s.root);
        let mut class = vec![NodeClass::Core; n];
        for (id, s) in subspaces.iter().enumerate() {
            for &m in &s.members {
                class[m] = NodeClass::Subspace(id);
            }
        }
        let mut core_pos = vec![NOT_CORE; n];
        for (p, &c) in core.iter().enumerate() {
            core_pos[c] = p;
        }
        Self {
            core,
            subspaces,
            class,
            core_pos,
            budget_warning: warn,
        }
    }

    pub fn node_count(&self) -> usize {
        self.class.len()
    }

    pub fn core_size(&self) -> usize {
        self.core.len()
    }

    /// Total number of subspace nodes `N_s`.
    pub fn subspace_node_count(&self) -> usize {
        self.subspaces.iter().map(Subspace::dim).sum()
    }

    pub fn class_of(&self, node: usize) -> NodeClass {
        self.class[node]
    }

    pub fn is_core(&self, node: usize) -> bool {
        self.core_pos[node] != NOT_CORE
    }

    /// Position of `node` inside [`Decomposition::core`].
    #[inline]
    pub fn core_position(&self, node: usize) -> Option<usize> {
        let p = self.core_pos[node];
        (p != NOT_CORE).then_some(p)
    }

    /// Mean subspace dimension `<d>`, zero without subspaces.
    pub fn mean_dimension(&self) -> f64 {
        if self.subspaces.is_empty() {
            0.0
        } else {
            self.subspace_node_count() as f64 / self.subspaces.len() as f64
        }
    }

    pub fn max_dimension(&self) -> usize {
        self.subspaces.iter().map(Subspace::dim).max().unwrap_or(0)
    }

    pub fn dimensions(&self) -> Vec<usize> {
        self.subspaces.iter().map(Subspace::dim).collect()
    }

    /// Writes `node,class,subspace_id,zero_order`, one row per node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "node,class,subspace_id,zero_order")?;
        for node in 0..self.node_count() {
            match self.class[node] {
                NodeClass::Core => writeln!(w, "{node},core,,")?,
                NodeClass::Subspace(id) => {
                    let order = self.subspaces[id].zero_order(node).unwrap_or(0);
                    writeln!(w, "{node},subspace,{id},{order}")?
                }
            }
        }
        Ok(())
    }

    /// Reads back the output of [`Decomposition::write_csv`].
    pub fn read_csv<R: std::io::BufRead>(g: &DirectedGraph, reader: R) -> Result<Self> {
        let n = g.node_count();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut rows = 0;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let bad = |message: &str| Error::Parse {
                line: lineno + 1,
                message: message.to_string(),
            };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(bad("expected 4 fields"));
            }
            let node: usize = fields[0].parse().map_err(|_| bad("bad node"))?;
            if node >= n {
                return Err(bad("node out of range"));
            }
            rows += 1;
            if fields[1] == "subspace" {
                let id: usize = fields[2].parse().map_err(|_| bad("bad subspace id"))?;
                if groups.len() <= id {
                    groups.resize(id + 1, Vec::new());
                }
                groups[id].push(node);
            } else if fields[1] != "core" {
                return Err(bad("unknown class"));
            }
        }
        if rows != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rows,
            });
        }
        groups.retain(|m| !m.is_empty());
        Ok(Self::from_parts(g, groups))
    }
}

/// Header of the network-parameter summary.
pub const DECOMPOSITION_SUMMARY_HEADER: &str = "name,N,L,N_s,mean_d";

/// Summary row `name,N,L,N_s,<d>`.
pub fn summary_row(name: &str, g: &DirectedGraph, d: &Decomposition) -> String {
    format!(
        "{},{},{},{},{:.2}",
        name,
        g.node_count(),
        g.link_count(),
        d.subspace_node_count(),
        d.mean_dimension()
    )
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new() -> Self {
        Self { parent: Vec::new() }
    }

    fn push(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.parent.len() - 1
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the older candidate as representative
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Classifies all nodes and merges overlapping limit sets.
pub fn decompose(g: &DirectedGraph, cfg: &DecomposeConfig) -> Result<Decomposition> {
    if !(cfg.budget > 0.0 && cfg.budget <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "budget fraction {} outside (0, 1]",
            cfg.budget
        )));
    }
    let n = g.node_count();
    let cutoff = cfg.cutoff(n);
    let mut dangling = vec![false; n];
    for j in g.dangling_nodes() {
        dangling[j] = true;
    }

    let mut core = vec![false; n];
    // candidate limit set each subspace node was first assigned to
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut candidates: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut uf = UnionFind::new();
    let mut seen = vec![false; n];
    let mut scratch = Vec::new();

    for j in 0..n {
        if core[j] || owner[j].is_some() {
            continue;
        }
        match closure_into(g, j, cutoff, &dangling, Some(&core), &mut seen, &mut scratch) {
            Closure::Core => core[j] = true,
            Closure::LimitSet(set) => {
                let id = uf.push();
                for &k in &set {
                    match owner[k] {
                        Some(other) => uf.union(id, other),
                        None => owner[k] = Some(id),
                    }
                }
                candidates.push((j, set));
            }
        }
    }

    // merge member lists per representative; root = smallest surviving root
    let mut merged: Vec<Option<(usize, Vec<usize>)>> = vec![None; candidates.len()];
    for (id, (root, set)) in candidates.into_iter().enumerate() {
        let rep = uf.find(id);
        match &mut merged[rep] {
            Some((r, members)) => {
                *r = (*r).min(root);
                members.extend(set);
            }
            slot @ None => *slot = Some((root, set)),
        }
    }
    let mut subspaces: Vec<Subspace> = merged
        .into_iter()
        .flatten()
        .map(|(root, mut members)| {
            members.sort_unstable();
            members.dedup();
            Subspace::new(g, root, members)
        })
        .collect();

    let mut core_nodes: Vec<usize> = (0..n).filter(|&k| owner[k].is_none()).collect();

    // A strongly connected graph without dangling nodes is itself invariant.
    if subspaces.is_empty() && !dangling.iter().any(|&d| d) && is_strongly_connected(g) {
        subspaces.push(Subspace::new(g, 0, (0..n).collect()));
        core_nodes.clear();
    }

    let max_dim = subspaces.iter().map(Subspace::dim).max().unwrap_or(0);
    let warn = cutoff < n && max_dim as f64 > 0.5 * cutoff as f64;
    if warn {
        log::warn!(
            "largest subspace has {max_dim} nodes, more than half the node budget {cutoff}; \
             raise the budget fraction"
        );
    }
    Ok(Decomposition::assemble(n, core_nodes, subspaces, warn))
}

fn is_strongly_connected(g: &DirectedGraph) -> bool {
    let reaches_all = |h: &DirectedGraph| {
        let n = h.node_count();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(l) = queue.pop_front() {
            for &k in h.out_neighbors(l) {
                if !seen[k] {
                    seen[k] = true;
                    count += 1;
                    queue.push_back(k);
                }
            }
        }
        count == n
    };
    reaches_all(g) && reaches_all(&g.transpose())
}

/// Zero-node order of every node in the invariant set `members`.
///
/// Members without in-edges from other members have order 1; removing them,
/// the members left without in-member edges have order 2, and so on. Nodes
/// never stripped get order 0.
pub fn zero_node_orders(
    g: &DirectedGraph,
    members: &[usize],
) -> std::collections::BTreeMap<usize, usize> {
    use std::collections::BTreeMap;
    let mut local: BTreeMap<usize, usize> = BTreeMap::new();
    for (p, &m) in members.iter().enumerate() {
        local.insert(m, p);
    }
    let pos = |k: usize| local.get(&k).copied();
    let mut indeg = vec![0usize; members.len()];
    for &m in members {
        for &k in g.out_neighbors(m) {
            if let Some(p) = pos(k) {
                indeg[p] += 1;
            }
        }
    }
    let mut order = vec![0usize; members.len()];
    let mut layer: Vec<usize> = (0..members.len()).filter(|&p| indeg[p] == 0).collect();
    let mut level = 1;
    while !layer.is_empty() {
        let mut next = Vec::new();
        for &p in &layer {
            order[p] = level;
        }
        for &p in &layer {
            for &k in g.out_neighbors(members[p]) {
                if let Some(q) = pos(k) {
                    indeg[q] -= 1;
                    if indeg[q] == 0 {
                        next.push(q);
                    }
                }
            }
        }
        next.sort_unstable();
        layer = next;
        level += 1;
    }
    members.iter().copied().zip(order).collect()
}

/// Result of [`verify_decomposition`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerificationReport {
    /// Nodes claimed by more than one class.
    pub overlapping: Vec<usize>,
    /// Nodes claimed by no class.
    pub uncovered: Vec<usize>,
    /// Edges leaving a subspace.
    pub violating_edges: Vec<(usize, usize)>,
    /// Dangling nodes placed inside a subspace.
    pub dangling_members: Vec<usize>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.overlapping.is_empty()
            && self.uncovered.is_empty()
            && self.violating_edges.is_empty()
            && self.dangling_members.is_empty()
    }
}

/// Checks the block-triangular structure claimed by `d`.
pub fn verify_decomposition(g: &DirectedGraph, d: &Decomposition) -> VerificationReport {
    let n = g.node_count();
    let mut report = VerificationReport::default();
    let mut claims = vec![0usize; n];
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for &c in &d.core {
        claims[c] += 1;
    }
    for (id, s) in d.subspaces.iter().enumerate() {
        for &m in &s.members {
            claims[m] += 1;
            owner[m] = Some(id);
        }
    }
    for k in 0..n {
        match claims[k] {
            0 => report.uncovered.push(k),
            1 => {}
            _ => report.overlapping.push(k),
        }
    }
    for (id, s) in d.subspaces.iter().enumerate() {
        for &m in &s.members {
            if g.out_degree(m) == 0 {
                report.dangling_members.push(m);
            }
            for &k in g.out_neighbors(m) {
                if owner[k] != Some(id) {
                    report.violating_edges.push((m, k));
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures;

    fn exact() -> DecomposeConfig {
        DecomposeConfig {
            budget: 1.0,
            min_cutoff: 1,
        }
    }

    fn flags(g: &DirectedGraph) -> Vec<bool> {
        let mut f = vec![false; g.node_count()];
        for j in g.dangling_nodes() {
            f[j] = true;
        }
        f
    }

    #[test]
    fn closure_on_g4() {
        let g = fixtures::g4();
        let d = flags(&g);
        assert_eq!(reachable_closure(&g, 0, 4, &d, None), Closure::LimitSet(vec![0, 1]));
        assert_eq!(reachable_closure(&g, 2, 4, &d, None), Closure::Core);
    }

    #[test]
    fn closure_dangling_shortcut() {
        let g = DirectedGraph::from_edges(2, [(0, 1)]).unwrap();
        let d = flags(&g);
        assert_eq!(reachable_closure(&g, 0, 100, &d, None), Closure::Core);
    }

    #[test]
    fn closure_cutoff() {
        let g = fixtures::g4();
        let d = flags(&g);
        assert_eq!(reachable_closure(&g, 0, 1, &d, None), Closure::Core);
    }

    #[test]
    fn decompose_fixtures() {
        let d = decompose(&fixtures::g4(), &DecomposeConfig::default()).unwrap();
        assert_eq!(d.core, vec![2, 3]);
        assert_eq!(d.subspaces.len(), 1);
        assert_eq!(d.subspaces[0].members, vec![0, 1]);
        assert_eq!(d.subspaces[0].root, 0);

        let d = decompose(&fixtures::g5(), &DecomposeConfig::default()).unwrap();
        assert_eq!(d.core, vec![2, 3]);
        assert_eq!(d.subspaces[0].members, vec![0, 1, 4]);
        assert_eq!(d.subspaces[0].zero_order(4), Some(1));
        assert_eq!(d.subspaces[0].reduced_members, vec![0, 1]);

        let d = decompose(&fixtures::g6(), &DecomposeConfig::default()).unwrap();
        assert_eq!(d.core, vec![4]);
        let members: Vec<_> = d.subspaces.iter().map(|s| s.members.clone()).collect();
        assert_eq!(members, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn zero_orders() {
        let o = zero_node_orders(&fixtures::g5(), &[0, 1, 4]);
        assert_eq!(o.into_iter().collect::<Vec<_>>(), vec![(0, 0), (1, 0), (4, 1)]);
        let o = zero_node_orders(&fixtures::g7(), &[0, 1, 4, 5]);
        assert_eq!(
            o.into_iter().collect::<Vec<_>>(),
            vec![(0, 0), (1, 0), (4, 2), (5, 1)]
        );
        let cycle = DirectedGraph::from_edges(2, [(0, 1), (1, 0)]).unwrap();
        assert!(zero_node_orders(&cycle, &[0, 1]).values().all(|&o| o == 0));
    }

    #[test]
    fn merges_overlapping_limit_sets() {
        // 0 -> 2, 1 -> 2, 2 <-> 3: both closures hit the same cycle
        let g = DirectedGraph::from_edges(4, [(0, 2), (1, 2), (2, 3), (3, 2)]).unwrap();
        let d = decompose(&g, &exact()).unwrap();
        assert!(d.core.is_empty());
        assert_eq!(d.subspaces.len(), 1);
        assert_eq!(d.subspaces[0].members, vec![0, 1, 2, 3]);
        assert_eq!(d.subspaces[0].root, 0);
    }

    #[test]
    fn strongly_connected_without_dangling_is_one_subspace() {
        let g = DirectedGraph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let d = decompose(&g, &exact()).unwrap();
        assert!(d.core.is_empty());
        assert_eq!(d.subspaces.len(), 1);
        assert_eq!(d.subspaces[0].dim(), 3);
    }

    #[test]
    fn all_core_when_dangling_reaches_everything() {
        let g = DirectedGraph::from_edges(2, [(0, 1)]).unwrap();
        let d = decompose(&g, &exact()).unwrap();
        assert_eq!(d.core, vec![0, 1]);
        assert!(d.subspaces.is_empty());
    }

    #[test]
    fn rejects_bad_budget() {
        let g = fixtures::g4();
        assert!(decompose(&g, &DecomposeConfig::with_budget(0.0)).is_err());
        assert!(decompose(&g, &DecomposeConfig::with_budget(1.5)).is_err());
    }

    #[test]
    fn verify_flags_leaking_subspace() {
        let g = fixtures::g4();
        let d = decompose(&g, &DecomposeConfig::default()).unwrap();
        assert!(verify_decomposition(&g, &d).passed());
        let bad = Decomposition::from_parts(&g, vec![vec![0, 1, 2]]);
        let report = verify_decomposition(&g, &bad);
        assert!(!report.passed());
        assert_eq!(report.violating_edges, vec![(2, 3)]);
    }

    #[test]
    fn csv_round_trip() {
        let g = fixtures::g7();
        let d = decompose(&g, &DecomposeConfig::default()).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("5,subspace,0,1"));
        assert!(text.contains("4,subspace,0,2"));
        assert!(text.contains("2,core,,"));
        let back = Decomposition::read_csv(&g, buf.as_slice()).unwrap();
        assert_eq!(back.core, d.core);
        assert_eq!(back.subspaces[0].members, d.subspaces[0].members);
    }

    #[test]
    fn summary_matches_table_layout() {
        let g = fixtures::g4();
        let d = decompose(&g, &DecomposeConfig::default()).unwrap();
        assert_eq!(summary_row("g4", &g, &d), "g4,4,5,2,2.00");
    }
}
