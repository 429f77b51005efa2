use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use gmrank::decompose::{summary_row, DECOMPOSITION_SUMMARY_HEADER};
use gmrank::operator::format_f64;
use gmrank::spectral::{gap_via_projected_power, SpectrumReport};
use gmrank::stats::{write_two_column, CcdfData};
use gmrank::synth::sample_subspace_sizes;
use gmrank::{
    core_residual_weight, decompose as run_decompose, gap_via_arnoldi, generate_synthetic, DecomposeConfig,
    Decomposition, DirectedGraph, Ensemble, GapConfig, Parallelism, SolverConfig, StochasticOperator,
};
use log::info;
use serde_json::json;

use crate::error::{CliError, Context};
use crate::output::RunDir;
use crate::{
    DecompArgs, DecomposeCmd, EnsembleArg, GapCmd, GapMethodArg, PagerankCmd, RunOpts, ScanCmd, SolverArgs,
    SpectrumCmd, StatsCmd, SynthCmd,
};

/// Successful command completion; non-convergence still writes outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    NotConverged,
}

impl Outcome {
    fn from_converged(converged: bool) -> Self {
        if converged {
            Outcome::Done
        } else {
            Outcome::NotConverged
        }
    }
}

const DECOMPOSITION_FILE: &str = "decomposition.csv";
const REVERSE_DECOMPOSITION_FILE: &str = "decomposition_reverse.csv";

fn configure_threads(run: &RunOpts) -> Result<Parallelism, CliError> {
    if run.threads > 0 {
        // A second configuration in the same process is harmless to ignore.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(run.threads).build_global();
    }
    Ok(if run.deterministic || run.threads == 1 {
        Parallelism::Sequential
    } else {
        Parallelism::Parallel
    })
}

fn load_graph(path: &Path) -> Result<DirectedGraph, CliError> {
    if !path.is_file() {
        return Err(CliError::MissingInput(path.to_path_buf()));
    }
    let file = File::open(path).map_err(|_| CliError::MissingInput(path.to_path_buf()))?;
    DirectedGraph::parse_edge_list(BufReader::new(file)).context(&format!("parsing {}", path.display()))
}

fn network_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "network".to_string())
}

fn decompose_config(args: &DecompArgs) -> Result<DecomposeConfig, CliError> {
    if !(args.budget_b > 0.0 && args.budget_b <= 1.0) {
        return Err(CliError::Usage(format!("--budget-b must lie in (0, 1], got {}", args.budget_b)));
    }
    Ok(DecomposeConfig {
        budget: args.budget_b,
        min_cutoff: args.min_cutoff,
    })
}

/// Uses an explicit decomposition file, else a cached one in the output
/// directory, else decomposes. Returns the decomposition and whether it was
/// read from disk.
fn obtain_decomposition(
    g: &DirectedGraph,
    args: &DecompArgs,
    out: &Path,
    cache_name: &str,
) -> Result<(Decomposition, Option<PathBuf>), CliError> {
    let cached = match &args.decomposition {
        Some(path) if !path.is_file() => return Err(CliError::MissingInput(path.clone())),
        Some(path) => Some(path.clone()),
        None => Some(out.join(cache_name)).filter(|p| p.is_file()),
    };
    if let Some(path) = cached {
        info!("reusing decomposition {}", path.display());
        let file = File::open(&path).map_err(|e| CliError::io(&path, e))?;
        let d = Decomposition::read_csv(g, BufReader::new(file))
            .context(&format!("reading decomposition {}", path.display()))?;
        return Ok((d, Some(path)));
    }
    let cfg = decompose_config(args)?;
    let d = run_decompose(g, &cfg).context("decomposing")?;
    if d.budget_warning {
        log::warn!("some closures exceeded the budget and were classified core");
    }
    Ok((d, None))
}

fn check_one_minus_alpha(e: f64) -> Result<f64, CliError> {
    if e == 0.0 {
        return Err(CliError::Usage(
            "1 - alpha must be positive; use gap/limit commands for α=1".to_string(),
        ));
    }
    if !(e > 0.0 && e <= 1.0) {
        return Err(CliError::Usage(format!("1 - alpha must lie in (0, 1], got {e}")));
    }
    Ok(1.0 - e)
}

fn solver_config(args: &SolverArgs) -> SolverConfig {
    SolverConfig {
        n_i: args.n_i,
        n_a: args.n_a,
        tol: args.tol,
        adaptive: args.adaptive,
        refined: args.refined,
        polish: !args.no_polish,
        max_cycles: args.max_cycles,
    }
}

fn decomposition_results(d: &Decomposition) -> serde_json::Value {
    json!({
        "core_size": d.core_size(),
        "subspaces": d.subspaces.len(),
        "subspace_nodes": d.subspace_node_count(),
        "mean_dimension": d.mean_dimension(),
        "max_dimension": d.max_dimension(),
        "budget_warning": d.budget_warning,
    })
}

fn add_decomposition(out: &mut RunDir, name: &str, d: &Decomposition, from_cache: bool) -> Result<(), CliError> {
    if !from_cache {
        out.add(name, |w| d.write_csv(w))?;
    }
    Ok(())
}

pub fn decompose(cmd: &DecomposeCmd) -> Result<Outcome, CliError> {
    configure_threads(&cmd.run)?;
    let g = load_graph(&cmd.input)?;
    let cfg = decompose_config(&cmd.decomp)?;
    let d = run_decompose(&g, &cfg).context("decomposing")?;
    let report = gmrank::verify_decomposition(&g, &d);
    if !report.passed() {
        log::error!("decomposition failed verification: {report:?}");
    }
    let row = summary_row(&network_name(&cmd.input), &g, &d);
    let mut out = RunDir::new(&cmd.run.out, "decompose", vec![cmd.input.clone()], cmd)?;
    out.add(DECOMPOSITION_FILE, |w| d.write_csv(w))?;
    out.add("summary.csv", |w| {
        writeln!(w, "{DECOMPOSITION_SUMMARY_HEADER}")?;
        writeln!(w, "{row}")?;
        Ok(())
    })?;
    out.add("subspaces.csv", |w| {
        writeln!(w, "subspace_id,root,dim,reduced_dim")?;
        for (id, s) in d.subspaces.iter().enumerate() {
            writeln!(w, "{id},{},{},{}", s.root, s.dim(), s.reduced_members.len())?;
        }
        Ok(())
    })?;
    let mut results = decomposition_results(&d);
    results["verified"] = json!(report.passed());
    out.commit(results)?;
    println!("{DECOMPOSITION_SUMMARY_HEADER}");
    println!("{row}");
    Ok(Outcome::Done)
}

pub fn spectrum(cmd: &SpectrumCmd) -> Result<Outcome, CliError> {
    let par = configure_threads(&cmd.run)?;
    let g = load_graph(&cmd.input)?;
    let (d, cache) = obtain_decomposition(&g, &cmd.decomp, &cmd.run.out, DECOMPOSITION_FILE)?;
    let op = StochasticOperator::new(g).with_parallelism(par);
    let report = gmrank::spectral::spectrum_report(&op, &d, cmd.n_a, cmd.dense_limit).context("computing spectrum")?;
    let mut out = RunDir::new(&cmd.run.out, "spectrum", vec![cmd.input.clone()], cmd)?;
    add_decomposition(&mut out, DECOMPOSITION_FILE, &d, cache.is_some())?;
    out.add("spectrum.csv", |w| report.write_csv(w))?;
    out.add("fraction.csv", |w| SpectrumReport::write_fraction_csv(&report.fraction_curve, w))?;
    out.add("core_fraction.csv", |w| {
        SpectrumReport::write_fraction_csv(&report.core_fraction_curve, w)
    })?;
    if cmd.run.gnuplot {
        let points: Vec<(f64, f64)> = report
            .subspace_eigs
            .iter()
            .map(|(z, _)| (z.re, z.im))
            .chain(report.core_ritz.iter().map(|r| (r.value.re, r.value.im)))
            .collect();
        out.add("spectrum.dat", |w| write_two_column(&points, w))?;
        out.add("fraction.dat", |w| write_two_column(&report.fraction_curve, w))?;
        out.add("core_fraction.dat", |w| write_two_column(&report.core_fraction_curve, w))?;
    }
    let mut results = decomposition_results(&d);
    results["unit_count"] = json!(report.unit_count);
    results["subspace_eigenvalues"] = json!(report.subspace_eigs.len());
    results["core_ritz_values"] = json!(report.core_ritz.len());
    results["decomposition_cache"] = json!(cache);
    out.commit(results)?;
    println!("unit_count={}", report.unit_count);
    Ok(Outcome::Done)
}

pub fn pagerank(cmd: &PagerankCmd) -> Result<Outcome, CliError> {
    let alpha = check_one_minus_alpha(cmd.solver.one_minus_alpha)?;
    let par = configure_threads(&cmd.run)?;
    let mut g = load_graph(&cmd.input)?;
    if cmd.reverse {
        g = g.transpose();
    }
    let cache_name = if cmd.reverse {
        REVERSE_DECOMPOSITION_FILE
    } else {
        DECOMPOSITION_FILE
    };
    let (d, cache) = obtain_decomposition(&g, &cmd.decomp, &cmd.run.out, cache_name)?;
    let op = StochasticOperator::new(Arc::new(g)).with_parallelism(par);
    let cfg = solver_config(&cmd.solver);
    let result = gmrank::solve_pagerank_hybrid(&op, alpha, &cfg, None).context("solving PageRank")?;
    let w = core_residual_weight(result.vector.values(), &d);

    let mut out = RunDir::new(&cmd.run.out, "pagerank", vec![cmd.input.clone()], cmd)?;
    add_decomposition(&mut out, cache_name, &d, cache.is_some())?;
    out.add("pagerank.csv", |w| result.write_csv(&op, w))?;
    out.add("ranks.csv", |w| {
        writeln!(w, "rank,node,external_id")?;
        for (k, &node) in result.rank_perm.iter().enumerate() {
            writeln!(w, "{},{},{}", k + 1, node, op.graph().external_id(node))?;
        }
        Ok(())
    })?;
    out.add("convergence.csv", |w| result.write_log_csv(w))?;
    if cmd.run.gnuplot {
        let curve: Vec<(f64, f64)> = result
            .rank_perm
            .iter()
            .enumerate()
            .map(|(k, &node)| ((k + 1) as f64, result.vector.values()[node]))
            .collect();
        out.add("pagerank.dat", |w| write_two_column(&curve, w))?;
    }
    let top: Vec<u64> = result
        .rank_perm
        .iter()
        .take(10)
        .map(|&node| op.graph().external_id(node))
        .collect();
    out.commit(json!({
        "alpha": alpha,
        "one_minus_alpha": cmd.solver.one_minus_alpha,
        "reverse": cmd.reverse,
        "converged": result.converged,
        "residual": result.residual,
        "iterations": result.iterations,
        "arnoldi_steps": result.arnoldi_steps,
        "core_residual_weight": w,
        "top_external_ids": top,
        "decomposition_cache": cache,
    }))?;
    println!(
        "converged={} residual={} iterations={} core_weight={}",
        result.converged,
        format_f64(result.residual),
        result.iterations,
        format_f64(w)
    );
    println!(
        "top={}",
        top.iter().map(|id| id.to_string()).collect::<Vec<_>>().join(",")
    );
    Ok(Outcome::from_converged(result.converged))
}

pub fn gap(cmd: &GapCmd) -> Result<Outcome, CliError> {
    let par = configure_threads(&cmd.run)?;
    let g = load_graph(&cmd.input)?;
    let (d, cache) = obtain_decomposition(&g, &cmd.decomp, &cmd.run.out, DECOMPOSITION_FILE)?;
    if d.core_size() == 0 {
        return Err(CliError::Usage("core space is empty; no gap to measure".to_string()));
    }
    let op = StochasticOperator::new(g).with_parallelism(par);
    let result = match cmd.method {
        GapMethodArg::ProjectedPower => {
            let cfg = GapConfig {
                eps1: cmd.eps1,
                eps2: cmd.eps2,
                max_iter: cmd.max_iter,
                seed_dim: cmd.n_a,
                shift: cmd.shift,
            };
            gap_via_projected_power(&op, &d, &cfg).context("measuring gap")?
        }
        GapMethodArg::Arnoldi => gap_via_arnoldi(&op, &d, cmd.n_a).context("measuring gap")?,
    };
    if result.dangling_near_seed {
        log::warn!("a dangling node lies within three links of the seed node");
    }
    let mut out = RunDir::new(&cmd.run.out, "gap", vec![cmd.input.clone()], cmd)?;
    add_decomposition(&mut out, DECOMPOSITION_FILE, &d, cache.is_some())?;
    out.add("gap.csv", |w| result.write_csv(w))?;
    out.add("core_vector.csv", |w| result.write_vector_csv(&d, w))?;
    out.commit(json!({
        "gap": result.gap,
        "lambda": result.lambda(),
        "method": result.method.as_str(),
        "converged": result.converged,
        "iterations": result.iterations,
        "seed_node": result.seed_node,
        "dangling_near_seed": result.dangling_near_seed,
        "core_size": d.core_size(),
        "decomposition_cache": cache,
    }))?;
    println!(
        "gap={} method={} converged={}",
        format_f64(result.gap),
        result.method.as_str(),
        result.converged
    );
    Ok(Outcome::from_converged(result.converged))
}

pub fn scan(cmd: &ScanCmd) -> Result<Outcome, CliError> {
    for &e in &cmd.grid {
        check_one_minus_alpha(e)?;
    }
    let par = configure_threads(&cmd.run)?;
    let g = load_graph(&cmd.input)?;
    let (d, cache) = obtain_decomposition(&g, &cmd.decomp, &cmd.run.out, DECOMPOSITION_FILE)?;
    let op = StochasticOperator::new(g).with_parallelism(par);
    let cfg = SolverConfig {
        n_i: cmd.n_i,
        n_a: cmd.n_a,
        tol: cmd.tol,
        max_cycles: cmd.max_cycles,
        ..SolverConfig::default()
    };
    let scan = gmrank::alpha_scan(&op, &d, &cmd.grid, &cfg).context("scanning alpha")?;
    let converged = scan.rows.iter().all(|r| r.converged);
    let mut out = RunDir::new(&cmd.run.out, "scan", vec![cmd.input.clone()], cmd)?;
    add_decomposition(&mut out, DECOMPOSITION_FILE, &d, cache.is_some())?;
    out.add("scan.csv", |w| scan.write_csv(w))?;
    if cmd.run.gnuplot {
        let weight: Vec<(f64, f64)> = scan.rows.iter().map(|r| (r.one_minus_alpha, r.residual_weight)).collect();
        let fid: Vec<(f64, f64)> = scan.rows.iter().map(|r| (r.one_minus_alpha, r.fidelity)).collect();
        out.add("residual_weight.dat", |w| write_two_column(&weight, w))?;
        out.add("fidelity.dat", |w| write_two_column(&fid, w))?;
    }
    out.commit(json!({
        "fidelity_limit": scan.fidelity_limit,
        "converged": converged,
        "decomposition_cache": cache,
    }))?;
    match scan.fidelity_limit {
        Some(f) => println!("fidelity_limit={}", format_f64(f)),
        None => println!("fidelity_limit="),
    }
    Ok(Outcome::from_converged(converged))
}

pub fn stats(cmd: &StatsCmd) -> Result<Outcome, CliError> {
    let alpha = check_one_minus_alpha(cmd.one_minus_alpha)?;
    let window = (cmd.rank_window[0], cmd.rank_window[1]);
    if !(window.0 > 0.0 && window.0 < window.1) {
        return Err(CliError::Usage(format!("invalid rank window {window:?}")));
    }
    let par = configure_threads(&cmd.run)?;
    let g = load_graph(&cmd.input)?;
    let (d, cache) = obtain_decomposition(&g, &cmd.decomp, &cmd.run.out, DECOMPOSITION_FILE)?;
    let ccdf = gmrank::subspace_ccdf(&d).context("building subspace size distribution")?;
    let fit = gmrank::fit_subspace_ccdf(&ccdf).context("fitting subspace size distribution")?;

    let rank = if cmd.rank {
        let op = StochasticOperator::new(g).with_parallelism(par);
        let cfg = SolverConfig {
            n_i: cmd.n_i,
            n_a: cmd.n_a,
            tol: cmd.tol,
            max_cycles: cmd.max_cycles,
            ..SolverConfig::default()
        };
        let pr = gmrank::solve_pagerank_hybrid(&op, alpha, &cfg, None).context("solving PageRank")?;
        let curve = gmrank::rescaled_rank_curve(&pr.vector, &d).context("building rank curve")?;
        let fit = match gmrank::fit_rank_exponent(&curve, window) {
            Ok(f) => Some(f),
            Err(e) => {
                log::warn!("rank fit skipped: {e}");
                None
            }
        };
        Some((pr.converged, curve, fit))
    } else {
        None
    };
    let rank_fit = rank.as_ref().and_then(|(_, _, f)| f.as_ref());
    let converged = rank.as_ref().is_none_or(|(c, _, _)| *c);

    let mut out = RunDir::new(&cmd.run.out, "stats", vec![cmd.input.clone()], cmd)?;
    add_decomposition(&mut out, DECOMPOSITION_FILE, &d, cache.is_some())?;
    out.add("ccdf.csv", |w| ccdf.write_csv(w))?;
    out.add("ccdf_fit.csv", |w| write_ccdf_fit(&ccdf, &fit, w))?;
    if cmd.run.gnuplot {
        out.add("ccdf.dat", |w| write_two_column(&ccdf.points, w))?;
    }
    if let Some((_, curve, _)) = &rank {
        out.add("rank_curve.csv", |w| {
            writeln!(w, "x,y")?;
            for (x, y) in curve {
                writeln!(w, "{},{}", format_f64(*x), format_f64(*y))?;
            }
            Ok(())
        })?;
        if cmd.run.gnuplot {
            out.add("rank_curve.dat", |w| write_two_column(curve, w))?;
        }
    }
    let opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
    out.add("stats.csv", |w| {
        writeln!(w, "b,scale,d_mean,fit_error,rank_exponent,mu")?;
        writeln!(
            w,
            "{},{},{},{},{},{}",
            format_f64(fit.b),
            format_f64(fit.scale),
            format_f64(fit.d_mean),
            format_f64(fit.fit_error),
            opt(rank_fit.map(|f| f.exponent)),
            opt(rank_fit.map(|f| f.mu)),
        )?;
        Ok(())
    })?;
    out.commit(json!({
        "b": fit.b,
        "scale": fit.scale,
        "d_mean": fit.d_mean,
        "fit_error": fit.fit_error,
        "rank_exponent": rank_fit.map(|f| f.exponent),
        "mu": rank_fit.map(|f| f.mu),
        "pagerank_converged": rank.as_ref().map(|(c, _, _)| *c),
        "subspaces": d.subspaces.len(),
        "decomposition_cache": cache,
    }))?;
    println!(
        "b={} d_mean={} rank_exponent={}",
        format_f64(fit.b),
        format_f64(fit.d_mean),
        opt(rank_fit.map(|f| f.exponent))
    );
    Ok(Outcome::from_converged(converged))
}

fn write_ccdf_fit(data: &CcdfData, fit: &gmrank::stats::CcdfFit, w: &mut Vec<u8>) -> gmrank::Result<()> {
    writeln!(w, "x,F,model")?;
    for &(x, f) in &data.points {
        writeln!(w, "{},{},{}", format_f64(x), format_f64(f), format_f64(fit.model(x)))?;
    }
    Ok(())
}

pub fn synth(cmd: &SynthCmd) -> Result<Outcome, CliError> {
    let ensemble = match cmd.ensemble {
        EnsembleArg::Uniform => Ensemble::Uniform { n: cmd.n, p: cmd.p },
        EnsembleArg::Preferential => Ensemble::PreferentialAttachment {
            n: cmd.n,
            out_links: cmd.out_links,
        },
        EnsembleArg::Planted => {
            let sizes = sample_subspace_sizes(cmd.subspaces, cmd.b, cmd.mean_dim, cmd.max_dim, cmd.seed)
                .context("sampling subspace sizes")?;
            Ensemble::PlantedSubspaces {
                cycles: sizes,
                core: cmd.core,
                dangling: cmd.dangling,
            }
        }
    };
    // The size sampler and the wiring draw from distinct streams.
    let g = generate_synthetic(&ensemble, cmd.seed.wrapping_add(1)).context("generating network")?;
    let mut out = RunDir::new(&cmd.out, "synth", Vec::new(), cmd)?;
    out.add("graph.txt", |w| g.write_edge_list(w))?;
    out.add("summary.csv", |w| {
        writeln!(w, "{}", gmrank::graph::GRAPH_SUMMARY_HEADER)?;
        writeln!(w, "{}", g.summary_row("synthetic"))?;
        Ok(())
    })?;
    out.commit(json!({
        "nodes": g.node_count(),
        "links": g.link_count(),
        "dangling": g.dangling_nodes().len(),
    }))?;
    println!("{}", cmd.out.join("graph.txt").display());
    Ok(Outcome::Done)
}
