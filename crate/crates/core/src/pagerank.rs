//! PageRank of `G(alpha)` by power iteration, the hybrid power/Arnoldi
//! solver, and a dense direct solve used as a reference.

use std::io::Write;

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::decompose::Decomposition;
use crate::dense;
use crate::error::{Error, Result};
use crate::operator::{format_f64, l1_distance, l1_norm, RankVector, StochasticOperator};
use crate::spectral::arnoldi::{arnoldi, leading_ritz_pair, KrylovFactorization};

/// Largest `N` accepted by [`solve_pagerank_dense`] by default.
pub const DEFAULT_DENSE_PAGERANK_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Power steps between two Arnoldi steps.
    pub n_i: usize,
    /// Krylov dimension of each Arnoldi step.
    pub n_a: usize,
    /// Target for `|P - G P|_1`.
    pub tol: f64,
    /// Trigger the Arnoldi step early once the residual stagnates.
    pub adaptive: bool,
    /// Use the smallest-singular-vector variant of the Arnoldi step.
    pub refined: bool,
    /// After convergence, correct the vector by iterative refinement of
    /// `(I - alpha S) P = (1 - alpha) e / N` with a compensated residual.
    /// This removes the error `residual / (1 - alpha)` that a small residual
    /// still allows along slowly decaying directions when `alpha` is near 1.
    pub polish: bool,
    pub max_cycles: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_i: 10_000,
            n_a: 100,
            tol: 1e-13,
            adaptive: false,
            refined: false,
            polish: true,
            max_cycles: 1000,
        }
    }
}

impl SolverConfig {
    /// Plain power iteration up to `max_steps` steps.
    pub fn power_only(max_steps: usize) -> Self {
        Self {
            n_i: max_steps,
            max_cycles: 1,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_a == 0 {
            return Err(Error::InvalidParameter("n_A must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverEvent {
    Power,
    Arnoldi,
}

impl SolverEvent {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverEvent::Power => "power",
            SolverEvent::Arnoldi => "arnoldi",
        }
    }
}

/// Residual after each power or Arnoldi step; `step` counts power steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub step: usize,
    pub residual: f64,
    pub event: SolverEvent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRankResult {
    pub vector: RankVector,
    pub alpha: f64,
    /// `|P - G(alpha) P|_1` of `vector`.
    pub residual: f64,
    pub iterations: usize,
    pub arnoldi_steps: usize,
    /// Nodes in rank order: `rank_perm[k]` holds rank `k + 1`.
    pub rank_perm: Vec<usize>,
    pub converged: bool,
    pub log: Vec<LogEntry>,
}

impl PageRankResult {
    /// `node,external_id,value,rank`.
    pub fn write_csv<W: Write>(&self, op: &StochasticOperator, mut w: W) -> Result<()> {
        let ranks = rank_positions(&self.rank_perm);
        writeln!(w, "node,external_id,value,rank")?;
        for (i, x) in self.vector.iter().enumerate() {
            writeln!(w, "{i},{},{},{}", op.graph().external_id(i), format_f64(*x), ranks[i])?;
        }
        Ok(())
    }

    /// `step,residual,event`.
    pub fn write_log_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "step,residual,event")?;
        for e in &self.log {
            writeln!(w, "{},{},{}", e.step, format_f64(e.residual), e.event.as_str())?;
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(())
}

/// Applies `G(alpha)` `steps` times to `p0`; returns the iterate and its residual.
pub fn power_iterate(op: &StochasticOperator, alpha: f64, p0: &RankVector, steps: usize) -> Result<(RankVector, f64)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let mut p = p0.values().to_vec();
    let mut q = vec![0.0; p.len()];
    for _ in 0..steps {
        op.apply_g_into(alpha, &p, &mut q)?;
        std::mem::swap(&mut p, &mut q);
    }
    op.apply_g_into(alpha, &p, &mut q)?;
    let residual = l1_distance(&p, &q);
    Ok((RankVector::new(p), residual))
}

/// Takes the real part, drops negative entries and rescales to unit 1-norm.
/// `None` if nothing positive remains.
fn to_cone(v: impl Iterator<Item = f64>) -> Option<Vec<f64>> {
    let mut x: Vec<f64> = v.map(|x| if x.is_finite() { x.max(0.0) } else { 0.0 }).collect();
    let s = l1_norm(&x);
    if s == 0.0 || !s.is_finite() {
        return None;
    }
    x.iter_mut().for_each(|e| *e /= s);
    Some(x)
}

fn krylov_of_g(op: &StochasticOperator, alpha: f64, p: &[f64], n_a: usize) -> Result<KrylovFactorization> {
    arnoldi(|x, y| op.apply_g_into(alpha, x, y), p, n_a)
}

fn ritz_step(op: &StochasticOperator, alpha: f64, p: &[f64], n_a: usize) -> Result<Option<Vec<f64>>> {
    let f = krylov_of_g(op, alpha, p, n_a)?;
    let pair = leading_ritz_pair(&f)?;
    // rotate so the entries sum to a positive real number
    let sum: num_complex::Complex64 = pair.vector.iter().sum();
    let phase = if sum.norm() > 0.0 {
        sum.conj() / sum.norm()
    } else {
        num_complex::Complex64::new(1.0, 0.0)
    };
    Ok(to_cone(pair.vector.iter().map(|c| (c * phase).re)))
}

fn refined_step(op: &StochasticOperator, alpha: f64, p: &[f64], n_a: usize) -> Result<Option<Vec<f64>>> {
    let f = krylov_of_g(op, alpha, p, n_a)?;
    let m = f.steps();
    let rect = f.rectangular();
    let shifted = Mat::from_fn(m + 1, m, |i, j| rect[(i, j)] - if i == j { 1.0 } else { 0.0 });
    let (_, y) = dense::smallest_right_singular(&shifted)?;
    let x = f.lift(&y);
    let sign = if x.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    Ok(to_cone(x.into_iter().map(|e| sign * e)))
}

/// One refined Arnoldi step from `p`: the Krylov vector minimizing
/// `|(G - I) x|_2`, projected back to a probability vector. Returns `p`
/// unchanged if the projection vanishes.
pub fn refined_arnoldi_step(op: &StochasticOperator, alpha: f64, p: &RankVector, n_a: usize) -> Result<RankVector> {
    check_alpha(alpha)?;
    Ok(RankVector::new(
        refined_step(op, alpha, p, n_a)?.unwrap_or_else(|| p.values().to_vec()),
    ))
}

/// Hybrid solver: cycles of `n_i` power steps followed by one Arnoldi step,
/// until the residual falls below `cfg.tol`.
///
/// Without convergence the result carries the iterate of smallest residual
/// and `converged == false`.
pub fn solve_pagerank_hybrid(
    op: &StochasticOperator,
    alpha: f64,
    cfg: &SolverConfig,
    p0: Option<&RankVector>,
) -> Result<PageRankResult> {
    check_alpha(alpha)?;
    cfg.validate()?;
    let n = op.dim();
    let mut p = match p0 {
        Some(v) => {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: v.len() });
            }
            to_cone(v.iter().copied()).ok_or(Error::ZeroVector)?
        }
        None => vec![1.0 / n as f64; n],
    };
    let mut q = vec![0.0; n];
    let mut log = Vec::new();
    let mut steps = 0;
    let mut arnoldi_steps = 0;
    let mut best: Option<(f64, Vec<f64>)> = None;

    let finish = |vector: Vec<f64>, residual: f64, converged: bool, steps, arnoldi_steps, log| {
        let vector = RankVector::new(vector);
        Ok(PageRankResult {
            rank_perm: rank_order(&vector),
            vector,
            alpha,
            residual,
            iterations: steps,
            arnoldi_steps,
            converged,
            log,
        })
    };

    let mut residual;
    for _cycle in 0..cfg.max_cycles.max(1) {
        let mut history: Vec<f64> = Vec::new();
        for s in 0..=cfg.n_i {
            op.apply_g_into(alpha, &p, &mut q)?;
            residual = l1_distance(&p, &q);
            if best.as_ref().is_none_or(|(r, _)| residual < *r) {
                best = Some((residual, p.clone()));
            }
            if residual < cfg.tol {
                let (p, residual) = polish_if(op, alpha, cfg, p, residual)?;
                return finish(p, residual, true, steps, arnoldi_steps, log);
            }
            if s == cfg.n_i {
                break;
            }
            // accept G p as the next iterate
            std::mem::swap(&mut p, &mut q);
            let norm = l1_norm(&p);
            p.iter_mut().for_each(|x| *x /= norm);
            steps += 1;
            log.push(LogEntry {
                step: steps,
                residual,
                event: SolverEvent::Power,
            });
            if cfg.adaptive {
                history.push(residual);
                let k = history.len();
                if k > 100 && k % 100 == 1 {
                    let old = history[k - 101];
                    if old > 0.0 && ((old - residual) / old).abs() < 1e-4 {
                        break;
                    }
                }
            }
        }
        let next = if cfg.refined {
            refined_step(op, alpha, &p, cfg.n_a)?
        } else {
            ritz_step(op, alpha, &p, cfg.n_a)?
        };
        arnoldi_steps += 1;
        if let Some(v) = next {
            p = v;
            op.apply_g_into(alpha, &p, &mut q)?;
            residual = l1_distance(&p, &q);
            log.push(LogEntry {
                step: steps,
                residual,
                event: SolverEvent::Arnoldi,
            });
            if residual < cfg.tol {
                let (p, residual) = polish_if(op, alpha, cfg, p, residual)?;
                return finish(p, residual, true, steps, arnoldi_steps, log);
            }
            if best.as_ref().is_none_or(|(r, _)| residual < *r) {
                best = Some((residual, p.clone()));
            }
        }
    }
    let (residual, vector) = best.ok_or(Error::ZeroVector)?;
    finish(vector, residual, false, steps, arnoldi_steps, log)
}

fn polish_if(
    op: &StochasticOperator,
    alpha: f64,
    cfg: &SolverConfig,
    p: Vec<f64>,
    residual: f64,
) -> Result<(Vec<f64>, f64)> {
    if !cfg.polish {
        return Ok((p, residual));
    }
    let candidate = refine_linear(op, alpha, p.clone(), cfg.n_a)?;
    let mut q = vec![0.0; p.len()];
    op.apply_g_into(alpha, &candidate, &mut q)?;
    let r = l1_distance(&candidate, &q);
    if r < cfg.tol && candidate.iter().all(|x| *x >= 0.0) {
        Ok((candidate, r))
    } else {
        Ok((p, residual))
    }
}

/// Iterative refinement of `P` for `(I - alpha S) P = (1 - alpha) e / N`,
/// each correction solved by GMRES with Krylov dimension `n_a`.
fn refine_linear(op: &StochasticOperator, alpha: f64, mut p: Vec<f64>, n_a: usize) -> Result<Vec<f64>> {
    let n = p.len();
    let b = vec![(1.0 - alpha) / n as f64; n];
    let mut w = vec![0.0; n];
    for _ in 0..3 {
        let r = accurate_residual(op, alpha, &p, &b);
        if r.iter().all(|x| *x == 0.0) {
            break;
        }
        let delta = gmres(
            |x, y| {
                op.apply_s_into(x, &mut w)?;
                for ((yi, xi), wi) in y.iter_mut().zip(x).zip(&w) {
                    *yi = xi - alpha * wi;
                }
                Ok(())
            },
            &r,
            n_a.min(n),
        )?;
        p.iter_mut().zip(&delta).for_each(|(pi, di)| *pi += di);
    }
    let mut sum = Compensated::default();
    p.iter().for_each(|&v| sum.add(v));
    let s = sum.value();
    p.iter_mut().for_each(|x| *x /= s);
    Ok(p)
}

/// Relative least-squares residual at which a GMRES cycle stops early. Each
/// refinement round then contracts the error by about this factor.
const GMRES_RTOL: f64 = 1e-6;

/// One GMRES cycle from the zero initial guess: minimizes `|r - A x|_2`
/// over Krylov spaces of `r` of dimension up to `m`, stopping once the
/// residual has dropped by `GMRES_RTOL`.
fn gmres<F>(mut apply: F, r: &[f64], m: usize) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let n = r.len();
    let beta = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    if beta == 0.0 || !beta.is_finite() {
        return Ok(vec![0.0; n]);
    }
    let m = m.clamp(1, n);
    let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|x| x / beta).collect()];
    // column k of the rotated Hessenberg matrix is upper triangular
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rotations: Vec<(f64, f64)> = Vec::with_capacity(m);
    let mut g = vec![beta];
    let mut w = vec![0.0; n];
    for k in 0..m {
        apply(&basis[k], &mut w)?;
        let image = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut h = vec![0.0; k + 2];
        for _pass in 0..2 {
            for (j, v) in basis.iter().enumerate() {
                let c: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
                h[j] += c;
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
            }
        }
        let next = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        h[k + 1] = next;
        for (j, &(c, s)) in rotations.iter().enumerate() {
            let (x, y) = (h[j], h[j + 1]);
            h[j] = c * x + s * y;
            h[j + 1] = -s * x + c * y;
        }
        let rho = h[k].hypot(h[k + 1]);
        let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (h[k] / rho, h[k + 1] / rho) };
        h[k] = rho;
        h[k + 1] = 0.0;
        rotations.push((c, s));
        g.push(-s * g[k]);
        g[k] *= c;
        h.truncate(k + 1);
        cols.push(h);
        if g[k + 1].abs() <= GMRES_RTOL * beta || next <= 1e-14 * image {
            break;
        }
        basis.push(w.iter().map(|x| x / next).collect());
    }
    let k = cols.len();
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let acc: f64 = (i + 1..k).map(|c| cols[c][i] * y[c]).sum();
        y[i] = if cols[i][i] != 0.0 { (g[i] - acc) / cols[i][i] } else { 0.0 };
    }
    let mut x = vec![0.0; n];
    for (v, yi) in basis.iter().zip(&y) {
        x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += yi * vi);
    }
    Ok(x)
}

/// `f64` sum with a running compensation term.
#[derive(Default, Clone, Copy)]
struct Compensated {
    hi: f64,
    lo: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let s = self.hi + x;
        let bp = s - self.hi;
        self.lo += (self.hi - (s - bp)) + (x - bp);
        self.hi = s;
    }

    /// Adds the exact product `a * b` up to a second-order remainder.
    fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        self.add(p);
        self.lo += a.mul_add(b, -p);
    }

    fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// `b - (I - alpha S) x` with compensated accumulation.
fn accurate_residual(op: &StochasticOperator, alpha: f64, x: &[f64], b: &[f64]) -> Vec<f64> {
    let n = x.len();
    let g = op.graph();
    let mut acc: Vec<Compensated> = (0..n)
        .map(|i| {
            let mut c = Compensated::default();
            c.add(b[i]);
            c.add(-x[i]);
            c
        })
        .collect();
    let mut dangling = Compensated::default();
    for &j in op.dangling() {
        dangling.add(x[j]);
    }
    for j in 0..n {
        if let Some(w) = op.column_weight(j) {
            // alpha * w * x_j, split as (w * x_j) times alpha
            let t = w * x[j];
            let t_lo = w.mul_add(x[j], -t);
            for &i in g.out_neighbors(j) {
                acc[i].add_product(alpha, t);
                acc[i].add_product(alpha, t_lo);
            }
        }
    }
    let d_hi = dangling.value() / n as f64;
    if d_hi != 0.0 {
        for a in acc.iter_mut() {
            a.add_product(alpha, d_hi);
        }
    }
    acc.iter().map(Compensated::value).collect()
}

/// `P = (1 - alpha) (I - alpha S)^{-1} e / N` by pivoted LU, polished with
/// a few rounds of iterative refinement against a compensated residual.
pub fn solve_pagerank_dense(op: &StochasticOperator, alpha: f64) -> Result<RankVector> {
    solve_pagerank_dense_with_limit(op, alpha, DEFAULT_DENSE_PAGERANK_LIMIT)
}

pub fn solve_pagerank_dense_with_limit(op: &StochasticOperator, alpha: f64, limit: usize) -> Result<RankVector> {
    check_alpha(alpha)?;
    let n = op.dim();
    if n > limit {
        return Err(Error::DenseLimit { n, limit });
    }
    if alpha == 0.0 {
        return Ok(RankVector::uniform(n));
    }
    let s = dense::dense_s(op);
    let a = Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - alpha * s[(i, j)]);
    let lu = a.partial_piv_lu();
    let b = vec![(1.0 - alpha) / n as f64; n];
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let r = Mat::from_fn(n, 1, |i, _| rhs[i]);
        let x = lu.solve(&r);
        (0..n).map(|i| x[(i, 0)]).collect()
    };
    let mut x = solve(&b);
    for _ in 0..3 {
        let r = accurate_residual(op, alpha, &x, &b);
        let dx = solve(&r);
        x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
    }
    // The rounded S is stochastic only to within a few ulps per column, and
    // near alpha = 1 that defect is amplified by 1 / (1 - alpha) in the sum.
    let mut sum = Compensated::default();
    x.iter().for_each(|&v| sum.add(v));
    let s = sum.value();
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::EigenSolver);
    }
    Ok(RankVector::new(x.into_iter().map(|v| v / s).collect()))
}

/// Node indices by decreasing value; equal values keep ascending index order.
pub fn rank_order(p: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    order
}

/// 1-based rank `K(i)` of every node given a rank order.
pub fn rank_positions(order: &[usize]) -> Vec<usize> {
    let mut k = vec![0; order.len()];
    for (pos, &node) in order.iter().enumerate() {
        k[node] = pos + 1;
    }
    k
}

/// Cosine similarity `<p, q> / (|p|_2 |q|_2)`.
pub fn fidelity(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    let (mut pq, mut pp, mut qq) = (0.0, 0.0, 0.0);
    for (a, b) in p.iter().zip(q) {
        pq += a * b;
        pp += a * a;
        qq += b * b;
    }
    if pp == 0.0 || qq == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((pq / (pp * qq).sqrt()).clamp(0.0, 1.0))
}

/// Total weight on core nodes.
pub fn core_residual_weight(p: &[f64], d: &Decomposition) -> f64 {
    d.core.iter().map(|&j| p[j]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{decompose, DecomposeConfig};
    use crate::graph::{fixtures, DirectedGraph};

    fn op(g: DirectedGraph) -> StochasticOperator {
        StochasticOperator::new(g)
    }

    #[test]
    fn teleport_only_is_uniform() {
        let o = op(fixtures::g5());
        let (p, r) = power_iterate(&o, 0.0, &RankVector::delta(5, 3), 1).unwrap();
        assert!(p.iter().all(|&x| (x - 0.2).abs() < 1e-16));
        assert!(r < 1e-16);
    }

    #[test]
    fn power_converges_to_dense_on_g4() {
        let o = op(fixtures::g4());
        let (p, r) = power_iterate(&o, 0.85, &RankVector::uniform(4), 400).unwrap();
        let dense = solve_pagerank_dense(&o, 0.85).unwrap();
        assert!(l1_distance(&p, &dense) < 1e-12);
        assert!(r < 1e-13);
    }

    #[test]
    fn contraction_bound() {
        let o = op(fixtures::g7());
        for k in 0..30 {
            let (_, r) = power_iterate(&o, 0.85, &RankVector::delta(6, 2), k).unwrap();
            assert!(r <= 2.0 * 0.85_f64.powi(k as i32) + 1e-15);
        }
    }

    #[test]
    fn dense_trivial_cases() {
        let o = op(fixtures::g7());
        let p = solve_pagerank_dense(&o, 0.0).unwrap();
        assert!(p.iter().all(|&x| x == 1.0 / 6.0));
        let single = op(DirectedGraph::from_edges(1, []).unwrap());
        for alpha in [0.0, 0.5, 0.99] {
            assert_eq!(solve_pagerank_dense(&single, alpha).unwrap().values(), &[1.0]);
        }
        assert!(matches!(
            solve_pagerank_dense_with_limit(&o, 0.5, 5),
            Err(Error::DenseLimit { n: 6, limit: 5 })
        ));
        assert!(matches!(solve_pagerank_dense(&o, 1.0), Err(Error::InvalidAlpha(_))));
    }

    #[test]
    fn dense_g4_near_one() {
        let p = solve_pagerank_dense(&op(fixtures::g4()), 0.99999).unwrap();
        assert!(p[2] < 1e-4 && p[3] < 1e-4);
        assert!((p[0] - 0.5).abs() < 1e-4 && (p[1] - 0.5).abs() < 1e-4);
    }

    #[test]
    fn hybrid_matches_power_on_fixtures() {
        for g in [fixtures::g4(), fixtures::g5(), fixtures::g6(), fixtures::g7()] {
            let o = op(g);
            let hybrid = SolverConfig {
                n_i: 50,
                n_a: 4,
                ..SolverConfig::default()
            };
            let a = solve_pagerank_hybrid(&o, 0.85, &hybrid, None).unwrap();
            let b = solve_pagerank_hybrid(&o, 0.85, &SolverConfig::power_only(100_000), None).unwrap();
            assert!(a.converged && b.converged);
            assert!(a.residual < 1e-13);
            assert!(l1_distance(&a.vector, &b.vector) < 1e-10);
        }
    }

    #[test]
    fn hybrid_g4_limit() {
        let o = op(fixtures::g4());
        let r = solve_pagerank_hybrid(&o, 1.0 - 1e-8, &SolverConfig::default(), None).unwrap();
        assert!(r.converged);
        assert!((r.vector[0] - 0.5).abs() < 1e-7 && (r.vector[1] - 0.5).abs() < 1e-7);
        assert!(r.vector[2] < 1e-7 && r.vector[3] < 1e-7 && r.vector[2] > 0.0);
        assert_eq!(&r.rank_perm[..2], &[0, 1]);
    }

    #[test]
    fn hybrid_rejects_alpha_one() {
        let o = op(fixtures::g4());
        assert!(matches!(
            solve_pagerank_hybrid(&o, 1.0, &SolverConfig::default(), None),
            Err(Error::InvalidAlpha(_))
        ));
    }

    #[test]
    fn refined_step_reduces_residual() {
        let o = op(fixtures::g4());
        let p0 = RankVector::uniform(4);
        let (_, before) = power_iterate(&o, 0.85, &p0, 0).unwrap();
        let p1 = refined_arnoldi_step(&o, 0.85, &p0, 2).unwrap();
        let (_, after) = power_iterate(&o, 0.85, &p1, 0).unwrap();
        assert!(after < before);
    }

    #[test]
    fn full_krylov_space_is_exact() {
        let o = op(fixtures::g7());
        let dense = solve_pagerank_dense(&o, 0.85).unwrap();
        let p = refined_arnoldi_step(&o, 0.85, &RankVector::uniform(6), 6).unwrap();
        assert!(l1_distance(&p, &dense) < 1e-12);
    }

    #[test]
    fn refined_and_plain_agree() {
        for g in [fixtures::g4(), fixtures::g5(), fixtures::g7()] {
            let o = op(g);
            let plain = SolverConfig {
                n_i: 20,
                n_a: 3,
                ..SolverConfig::default()
            };
            let refined = SolverConfig { refined: true, ..plain };
            let a = solve_pagerank_hybrid(&o, 0.85, &plain, None).unwrap();
            let b = solve_pagerank_hybrid(&o, 0.85, &refined, None).unwrap();
            assert!(a.converged && b.converged);
            assert!(l1_distance(&a.vector, &b.vector) < 1e-10);
        }
    }

    #[test]
    fn non_convergence_returns_best() {
        let o = op(fixtures::g4());
        let cfg = SolverConfig {
            n_i: 3,
            n_a: 1,
            max_cycles: 1,
            ..SolverConfig::default()
        };
        let r = solve_pagerank_hybrid(&o, 0.85, &cfg, None).unwrap();
        assert!(!r.converged);
        assert!(r.log.iter().all(|e| e.residual >= r.residual));
        assert_eq!(r.iterations, 3);
        assert_eq!(r.arnoldi_steps, 1);
    }

    #[test]
    fn rank_order_rules() {
        assert_eq!(rank_order(&[0.2, 0.5, 0.3]), vec![1, 2, 0]);
        assert_eq!(rank_order(&[0.25; 4]), vec![0, 1, 2, 3]);
        assert_eq!(rank_positions(&[1, 2, 0]), vec![3, 1, 2]);
    }

    #[test]
    fn fidelity_values() {
        assert_eq!(fidelity(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 1.0);
        assert_eq!(fidelity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((fidelity(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - 0.5_f64.sqrt()).abs() < 1e-15);
        assert!(matches!(fidelity(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn residual_weight() {
        let g = fixtures::g4();
        let d = decompose(&g, &DecomposeConfig::default()).unwrap();
        assert_eq!(core_residual_weight(&[0.25; 4], &d), 0.5);
        assert_eq!(core_residual_weight(&[0.5, 0.5, 0.0, 0.0], &d), 0.0);
        let o = op(g);
        let w = |e: f64| core_residual_weight(&solve_pagerank_dense(&o, 1.0 - e).unwrap(), &d) / e;
        let (a, b) = (w(1e-6), w(1e-7));
        assert!(((a - b) / b).abs() < 0.01);
    }

    #[test]
    fn csv_output() {
        let o = op(fixtures::g4());
        let r = solve_pagerank_hybrid(&o, 0.85, &SolverConfig::default(), None).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&o, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "node,external_id,value,rank");
        assert_eq!(text.lines().count(), 5);
        let mut log = Vec::new();
        r.write_log_csv(&mut log).unwrap();
        assert!(String::from_utf8(log).unwrap().starts_with("step,residual,event\n"));
    }
}
