//! Parallel parameter sweeps with per-cell summaries.

use std::path::PathBuf;

use anyhow::{Context, Result};
use rayon::prelude::*;

use kcap_core::engine::{run, EdgeMode, RunConfig, StopRule};
use kcap_core::graph::GraphModel;
use kcap_core::trace::RunTrace;

use crate::config::{SweepCell, SweepSpec};

/// Summary of one sweep cell (one seed of one grid point).
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub k: usize,
    pub n: usize,
    pub sigma: f64,
    pub sigma_scale: f64,
    pub seed_index: u64,
    pub steps_run: usize,
    /// Threshold of the very first selection.
    pub c0: u32,
    /// Cluster count of the step-1 active set.
    pub t1_clusters: usize,
    /// First step from which the active set stays a single cluster.
    pub steps_to_single_cluster: Option<u32>,
    pub final_clusters: usize,
    pub final_support_radius: f64,
}

#[derive(Debug)]
pub struct SweepResults {
    pub rows: Vec<SweepRow>,
    /// (cell description, error) for cells that failed; the sweep continues.
    pub failures: Vec<(String, String)>,
}

pub fn summarize_trace(cell: &SweepCell, trace: &RunTrace) -> SweepRow {
    // convergence step: the first index from which every later state is a
    // single cluster
    let mut settle: Option<u32> = None;
    for rec in trace.records.iter().rev() {
        if rec.n_clusters == 1 {
            settle = Some(rec.t);
        } else {
            break;
        }
    }
    let last = trace.final_record().expect("trace non-empty");
    SweepRow {
        k: cell.k,
        n: cell.n,
        sigma: cell.sigma,
        sigma_scale: cell.sigma_scale,
        seed_index: cell.seed_index,
        steps_run: trace.len() - 1,
        c0: trace.thresholds().first().copied().unwrap_or(0),
        t1_clusters: trace.records.get(1).map_or(0, |r| r.n_clusters),
        steps_to_single_cluster: if last.n_clusters == 1 { settle } else { None },
        final_clusters: last.n_clusters,
        final_support_radius: last.support_radius,
    }
}

pub fn run_cell(cell: &SweepCell) -> Result<SweepRow> {
    let graph = GraphModel::new(cell.n, cell.d, cell.sigma, cell.graph_seed)
        .context("building graph")?;
    let cfg = RunConfig {
        k: cell.k,
        init_seed: cell.init_seed,
        process_seed: cell.process_seed,
        max_steps: cell.max_steps,
        mode: EdgeMode::Truncated {
            epsilon: cell.epsilon,
        },
        stop: StopRule::for_sigma(cell.sigma),
        separation: None,
        record_members: true,
    };
    let trace = run(&graph, &cfg).context("running process")?;
    Ok(summarize_trace(cell, &trace))
}

/// Run every cell of the grid, `spec.parallelism` cells at a time. Cell
/// failures are collected, not fatal.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResults> {
    let cells = spec.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallelism)
        .build()
        .context("building sweep thread pool")?;
    let outcomes: Vec<(String, Result<SweepRow>)> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let label = format!(
                    "k={} sigma_scale={} seed={}",
                    cell.k, cell.sigma_scale, cell.seed_index
                );
                (label, run_cell(cell))
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (label, outcome) in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((label, format!("{e:#}"))),
        }
    }
    Ok(SweepResults { rows, failures })
}

pub fn results_csv(results: &SweepResults) -> String {
    let mut rows = vec![
        "k,n,sigma,sigma_scale,seed,steps_run,c0,t1_clusters,steps_to_single_cluster,final_clusters,final_support_radius"
            .to_string(),
    ];
    for r in &results.rows {
        rows.push(format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            r.n,
            r.sigma,
            r.sigma_scale,
            r.seed_index,
            r.steps_run,
            r.c0,
            r.t1_clusters,
            r.steps_to_single_cluster
                .map(|v| v.to_string())
                .unwrap_or_default(),
            r.final_clusters,
            r.final_support_radius,
        ));
    }
    rows.join("\n") + "\n"
}

pub fn write_results(spec: &SweepSpec, results: &SweepResults) -> Result<PathBuf> {
    let dir = match std::env::var_os("KCAP_OUTPUT_ROOT") {
        Some(root) if spec.output_dir.is_relative() => PathBuf::from(root).join(&spec.output_dir),
        _ => spec.output_dir.clone(),
    };
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join("sweep.csv");
    std::fs::write(&path, results_csv(results))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Least-squares slope of `ln(y)` against `ln(x)`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(x, _)| x.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, y)| y.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Median of a sample (average of the middle pair for even sizes).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
