//! Distribution fits over decompositions and PageRank vectors: the
//! subspace-size CCDF, the rescaled rank law, and scans in the damping factor.

use std::io::Write;

use crate::decompose::Decomposition;
use crate::error::{Error, Result};
use crate::operator::{format_f64, RankVector, StochasticOperator};
use crate::pagerank::{core_residual_weight, fidelity, solve_pagerank_hybrid, SolverConfig};

/// Logarithmic bins per decade used by both fits.
pub const BINS_PER_DECADE: f64 = 16.0;

/// Reference damping factor of fidelity scans.
pub const REFERENCE_ALPHA: f64 = 0.85;

/// Empirical complementary distribution of rescaled sizes `x = d / <d>`.
#[derive(Debug, Clone, PartialEq)]
pub struct CcdfData {
    pub d_mean: f64,
    /// `(x, F(x))` at every distinct `x`, ascending, with `F(x)` the
    /// fraction of samples strictly larger than `x`.
    pub points: Vec<(f64, f64)>,
}

impl CcdfData {
    /// Builds the CCDF of arbitrary positive samples.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Fit("no samples".into()));
        }
        if samples.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::Fit("samples must be positive and finite".into()));
        }
        let n = samples.len() as f64;
        let d_mean = samples.iter().sum::<f64>() / n;
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut points = Vec::new();
        let mut k = 0;
        while k < sorted.len() {
            let v = sorted[k];
            while k < sorted.len() && sorted[k] == v {
                k += 1;
            }
            points.push((v / d_mean, (sorted.len() - k) as f64 / n));
        }
        Ok(Self { d_mean, points })
    }

    /// `F(x)`: fraction of samples with rescaled size above `x`.
    pub fn survival(&self, x: f64) -> f64 {
        match self.points.iter().position(|&(px, _)| px > x) {
            Some(0) => 1.0,
            Some(k) => self.points[k - 1].1,
            None => 0.0,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,F")?;
        for (x, f) in &self.points {
            writeln!(w, "{},{}", format_f64(*x), format_f64(*f))?;
        }
        Ok(())
    }
}

/// CCDF of subspace dimensions.
pub fn subspace_ccdf(d: &Decomposition) -> Result<CcdfData> {
    if d.subspaces.is_empty() {
        return Err(Error::NoSubspaces);
    }
    let dims: Vec<f64> = d.dimensions().into_iter().map(|x| x as f64).collect();
    CcdfData::from_samples(&dims)
}

/// `F(x) = (1 + s x / (b - 1))^(-b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CcdfFit {
    pub b: f64,
    /// Horizontal scale `s`; 1 when `<d>` is the exact distribution mean.
    pub scale: f64,
    pub d_mean: f64,
    pub points: Vec<(f64, f64)>,
    /// RMS residual in `ln F` over the fitted bins.
    pub fit_error: f64,
}

impl CcdfFit {
    pub fn model(&self, x: f64) -> f64 {
        (1.0 + self.scale * x / (self.b - 1.0)).powf(-self.b)
    }
}

/// Averages `(ln x, ln y)` within logarithmic bins of `x`.
fn log_bins(points: impl Iterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let mut bins: Vec<(i64, f64, f64, usize)> = Vec::new();
    for (x, y) in points {
        if !(x > 0.0 && y > 0.0) {
            continue;
        }
        let (lx, ly) = (x.ln(), y.ln());
        let key = (BINS_PER_DECADE * x.log10()).floor() as i64;
        match bins.last_mut() {
            Some(b) if b.0 == key => {
                b.1 += lx;
                b.2 += ly;
                b.3 += 1;
            }
            _ => bins.push((key, lx, ly, 1)),
        }
    }
    bins.into_iter()
        .map(|(_, sx, sy, c)| (sx / c as f64, sy / c as f64))
        .collect()
}

/// Minimizes a unimodal function on `[lo, hi]` after a coarse scan of
/// `grid` points.
fn minimize(f: impl Fn(f64) -> f64, lo: f64, hi: f64, grid: usize) -> (f64, f64) {
    let step = (hi - lo) / grid as f64;
    let (mut best_t, mut best_v) = (lo, f(lo));
    for k in 1..=grid {
        let t = lo + step * k as f64;
        let v = f(t);
        if v < best_v {
            best_t = t;
            best_v = v;
        }
    }
    let (mut a, mut b) = ((best_t - step).max(lo), (best_t + step).min(hi));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let t = (a + b) / 2.0;
    let v = f(t);
    if v < best_v {
        (t, v)
    } else {
        (best_t, best_v)
    }
}

/// Least-squares fit of `ln F` over log-binned CCDF points.
///
/// Step heights are evaluated midway between the left and right limits of
/// the empirical CCDF. Besides the shape `b` the fit carries a free
/// horizontal scale, which absorbs the finite-sample bias of `<d>` under a
/// heavy tail and makes `b` invariant to rescaling all sizes.
pub fn fit_subspace_ccdf(data: &CcdfData) -> Result<CcdfFit> {
    if data.points.len() < 10 {
        return Err(Error::Fit(format!(
            "need at least 10 distinct sizes, got {}",
            data.points.len()
        )));
    }
    let mut prev = 1.0;
    let mid = data.points.iter().map(|&(x, f)| {
        let m = (prev + f) / 2.0;
        prev = f;
        (x, m)
    });
    let bins = log_bins(mid);
    if bins.len() < 3 {
        return Err(Error::Fit("CCDF support spans too few bins".into()));
    }
    let sse = |b: f64, ln_s: f64| -> f64 {
        let s = ln_s.exp();
        bins.iter()
            .map(|&(lx, lf)| {
                let r = lf + b * (1.0 + s * lx.exp() / (b - 1.0)).ln();
                r * r
            })
            .sum()
    };
    let profile = |t: f64| {
        let b = 1.0 + t.exp();
        minimize(|ls| sse(b, ls), -4.0, 4.0, 40).1
    };
    // b - 1 searched on a log scale over (1e-3, 19]
    let (t, err) = minimize(profile, (1e-3f64).ln(), 19f64.ln(), 60);
    let b = 1.0 + t.exp();
    let (ln_s, _) = minimize(|ls| sse(b, ls), -4.0, 4.0, 40);
    Ok(CcdfFit {
        b,
        scale: ln_s.exp(),
        d_mean: data.d_mean,
        points: data.points.clone(),
        fit_error: (err / bins.len() as f64).sqrt(),
    })
}

/// Power-law fit `P N_s ~ (K / N_s)^(-exponent)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankFit {
    pub exponent: f64,
    /// `1 + 1 / exponent`.
    pub mu: f64,
    pub intercept: f64,
    pub fit_range: (f64, f64),
    pub points: Vec<(f64, f64)>,
}

/// `(K / N_s, P(K) N_s)` for `K = 1..N` in rank order.
pub fn rescaled_rank_curve(p: &RankVector, d: &Decomposition) -> Result<Vec<(f64, f64)>> {
    let ns = d.subspace_node_count();
    if ns == 0 {
        return Err(Error::NoSubspaces);
    }
    let mut values = p.values().to_vec();
    values.sort_by(|a, b| b.total_cmp(a));
    let ns = ns as f64;
    Ok(values
        .into_iter()
        .enumerate()
        .map(|(k, v)| ((k + 1) as f64 / ns, v * ns))
        .collect())
}

/// Default window of `K / N_s` for [`fit_rank_exponent`].
pub const DEFAULT_RANK_WINDOW: (f64, f64) = (0.01, 0.5);

/// Ordinary least-squares slope of log-binned `ln y` against `ln x` for
/// points with `x` inside `window`.
pub fn fit_rank_exponent(points: &[(f64, f64)], window: (f64, f64)) -> Result<RankFit> {
    let inside: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, y)| x >= window.0 && x <= window.1 && y > 0.0)
        .collect();
    if inside.len() < 20 {
        return Err(Error::Fit(format!(
            "need at least 20 points in the window, got {}",
            inside.len()
        )));
    }
    let mut sorted = inside;
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let bins = log_bins(sorted.into_iter());
    if bins.len() < 2 {
        return Err(Error::Fit("window spans a single bin".into()));
    }
    let n = bins.len() as f64;
    let mx = bins.iter().map(|b| b.0).sum::<f64>() / n;
    let my = bins.iter().map(|b| b.1).sum::<f64>() / n;
    let sxy: f64 = bins.iter().map(|b| (b.0 - mx) * (b.1 - my)).sum();
    let sxx: f64 = bins.iter().map(|b| (b.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let exponent = -slope;
    Ok(RankFit {
        exponent,
        mu: 1.0 + 1.0 / exponent,
        intercept: my - slope * mx,
        fit_range: window,
        points: points.to_vec(),
    })
}

/// One damping value of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub one_minus_alpha: f64,
    /// Core residual weight `w`.
    pub residual_weight: f64,
    /// Fidelity with the reference vector.
    pub fidelity: f64,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaScan {
    pub rows: Vec<ScanRow>,
    /// Fidelity at `alpha = 1`, extrapolated linearly from the two smallest
    /// values of `1 - alpha`.
    pub fidelity_limit: Option<f64>,
}

impl AlphaScan {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "one_minus_alpha,residual_weight,fidelity,residual,converged")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                format_f64(r.one_minus_alpha),
                format_f64(r.residual_weight),
                format_f64(r.fidelity),
                format_f64(r.residual),
                r.converged
            )?;
        }
        Ok(())
    }
}

/// Solves PageRank for each `1 - alpha` in `one_minus_alphas` and reports
/// core weight and fidelity against `alpha = 0.85`.
///
/// Values are processed from large to small `1 - alpha`, each solve
/// starting from the previous vector; rows come back in that order.
pub fn alpha_scan(
    op: &StochasticOperator,
    d: &Decomposition,
    one_minus_alphas: &[f64],
    cfg: &SolverConfig,
) -> Result<AlphaScan> {
    if let Some(&bad) = one_minus_alphas.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::InvalidAlpha(1.0 - bad));
    }
    let reference = solve_pagerank_hybrid(op, REFERENCE_ALPHA, cfg, None)?;
    let mut grid = one_minus_alphas.to_vec();
    grid.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::with_capacity(grid.len());
    let mut warm: Option<RankVector> = None;
    for e in grid {
        let r = solve_pagerank_hybrid(op, 1.0 - e, cfg, warm.as_ref())?;
        rows.push(ScanRow {
            one_minus_alpha: e,
            residual_weight: core_residual_weight(&r.vector, d),
            fidelity: fidelity(&r.vector, &reference.vector)?,
            residual: r.residual,
            converged: r.converged,
        });
        warm = Some(r.vector);
    }
    let fidelity_limit = match rows.as_slice() {
        [.., a, b] if a.one_minus_alpha != b.one_minus_alpha => {
            let slope = (a.fidelity - b.fidelity) / (a.one_minus_alpha - b.one_minus_alpha);
            Some(b.fidelity - slope * b.one_minus_alpha)
        }
        _ => None,
    };
    Ok(AlphaScan { rows, fidelity_limit })
}

/// Writes two whitespace-separated columns, for direct use in plotting tools.
pub fn write_two_column<W: Write>(points: &[(f64, f64)], mut w: W) -> Result<()> {
    for (x, y) in points {
        writeln!(w, "{} {}", format_f64(*x), format_f64(*y))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{decompose, DecomposeConfig};
    use crate::graph::fixtures;

    fn lomax_quantiles(n: usize, b: f64) -> Vec<f64> {
        (0..n)
            .map(|k| {
                let u = 1.0 - (k as f64 + 0.5) / n as f64;
                (b - 1.0) * (u.powf(-1.0 / b) - 1.0)
            })
            .collect()
    }

    #[test]
    fn g6_single_step() {
        let d = decompose(&fixtures::g6(), &DecomposeConfig::default()).unwrap();
        let c = subspace_ccdf(&d).unwrap();
        assert_eq!(c.d_mean, 2.0);
        assert_eq!(c.survival(0.5), 1.0);
        assert_eq!(c.survival(0.999), 1.0);
        assert_eq!(c.survival(1.0), 0.0);
        assert_eq!(c.survival(3.0), 0.0);
    }

    #[test]
    fn hand_counted_ccdf() {
        let c = CcdfData::from_samples(&[2.0, 2.0, 4.0]).unwrap();
        assert!((c.d_mean - 8.0 / 3.0).abs() < 1e-15);
        assert!((c.survival(1.2) - 1.0 / 3.0).abs() < 1e-15);
        assert!(c.points.windows(2).all(|w| w[0].1 >= w[1].1));
    }

    #[test]
    fn no_subspaces() {
        let g = crate::graph::DirectedGraph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let d = decompose(&g, &DecomposeConfig::default()).unwrap();
        // strongly connected without dangling nodes forms one subspace
        assert_eq!(d.subspaces.len(), 1);
        let d = Decomposition::from_parts(&g, vec![]);
        assert!(matches!(subspace_ccdf(&d), Err(Error::NoSubspaces)));
    }

    #[test]
    fn recovers_shape_from_quantiles() {
        for b in [1.5, 2.0] {
            let data = CcdfData::from_samples(&lomax_quantiles(5000, b)).unwrap();
            let fit = fit_subspace_ccdf(&data).unwrap();
            assert!((fit.b - b).abs() < 0.02, "b = {}", fit.b);
        }
    }

    #[test]
    fn exact_curve_points() {
        for b in [1.5f64, 2.0] {
            let mut x = 1e-3;
            let mut points = Vec::new();
            while x < 1e3 {
                points.push((x, (1.0 + x / (b - 1.0)).powf(-b)));
                x *= 1.02;
            }
            let fit = fit_subspace_ccdf(&CcdfData { d_mean: 1.0, points }).unwrap();
            assert!((fit.b - b).abs() < 0.02, "b = {}", fit.b);
            assert!((fit.scale - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn degenerate_support() {
        let c = CcdfData::from_samples(&[1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(fit_subspace_ccdf(&c), Err(Error::Fit(_))));
    }

    #[test]
    fn rank_exponent_from_exact_law() {
        for c in [2.0 / 3.0, 0.9] {
            let ns = 10_000;
            let points: Vec<(f64, f64)> = (1..=ns)
                .map(|k| (k as f64 / ns as f64, (k as f64).powf(-c)))
                .collect();
            let fit = fit_rank_exponent(&points, DEFAULT_RANK_WINDOW).unwrap();
            assert!((fit.exponent - c).abs() < 0.005);
            assert!((fit.mu - (1.0 + 1.0 / c)).abs() < 0.02);
        }
    }

    #[test]
    fn rank_window_too_small() {
        let points: Vec<(f64, f64)> = (1..=10).map(|k| (k as f64 / 20.0, 1.0 / k as f64)).collect();
        assert!(matches!(fit_rank_exponent(&points, DEFAULT_RANK_WINDOW), Err(Error::Fit(_))));
    }

    #[test]
    fn rank_curve_g4_limit() {
        let d = decompose(&fixtures::g4(), &DecomposeConfig::default()).unwrap();
        let c = rescaled_rank_curve(&RankVector::new(vec![0.5, 0.5, 0.0, 0.0]), &d).unwrap();
        assert_eq!(c[0], (0.5, 1.0));
        assert_eq!(c[1], (1.0, 1.0));
        assert_eq!(c[2].1, 0.0);
        let flat = rescaled_rank_curve(&RankVector::uniform(4), &d).unwrap();
        assert!(flat.iter().all(|&(_, y)| y == 0.5));
    }

    #[test]
    fn scan_rows() {
        let g = fixtures::g4();
        let d = decompose(&g, &DecomposeConfig::default()).unwrap();
        let op = StochasticOperator::new(g);
        let grid = [0.15, 1e-5, 1e-6, 1e-7, 1e-8];
        let scan = alpha_scan(&op, &d, &grid, &SolverConfig::default()).unwrap();
        assert_eq!(scan.rows[0].fidelity, 1.0);
        let ratios: Vec<f64> = scan.rows[1..]
            .iter()
            .map(|r| r.residual_weight / r.one_minus_alpha)
            .collect();
        for r in &ratios {
            assert!((r / ratios[0] - 1.0).abs() < 0.01);
        }
        assert!(scan.rows.windows(2).all(|w| w[1].fidelity <= w[0].fidelity));
        assert!(scan.fidelity_limit.unwrap() > 0.0);
        assert!(alpha_scan(&op, &d, &[0.0], &SolverConfig::default()).is_err());
    }
}
