//! Seeded experiment execution and artifact persistence.
//!
//! Every run writes, under its output directory: a `manifest.cfg` (the
//! fully resolved configuration, re-runnable as-is), one trace per
//! replicate, and one metrics CSV per replicate. Nothing time-dependent
//! goes into these files, so re-running the same manifest reproduces them
//! byte for byte.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};

use kcap_core::continuous::{run_continuous, IntervalUnion};
use kcap_core::engine::{run, EdgeMode, RunConfig, StopRule};
use kcap_core::geometry::KernelSpec;
use kcap_core::graph::GraphModel;
use kcap_core::metrics::{containment_fraction, estimate_fire_probability, expected_input_profile};
use kcap_core::rng::SplitMix64;
use kcap_core::trace::RunTrace;

use crate::config::{ContinuousKernel, ExperimentConfig, Mode};
use crate::validation;

/// Paths produced by one experiment.
#[derive(Clone, Debug)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub manifest: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Draw a union of `pieces` disjoint intervals of total measure `alpha`,
/// uniformly seeded: widths from a stick-breaking split of `alpha`, gaps
/// from a stick-breaking split of the slack.
pub fn random_interval_union(seed: u64, pieces: usize, alpha: f64) -> Result<IntervalUnion> {
    if pieces == 0 || !(alpha > 0.0 && alpha < 1.0) {
        bail!("need pieces >= 1 and alpha in (0,1)");
    }
    let mut rng = SplitMix64::new(seed);
    'outer: for _ in 0..1000 {
        let mut cuts: Vec<f64> = (0..pieces - 1).map(|_| rng.next_f64() * alpha).collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut widths = Vec::with_capacity(pieces);
        let mut prev = 0.0;
        for &c in cuts.iter().chain(std::iter::once(&alpha)) {
            widths.push(c - prev);
            prev = c;
        }
        if widths.iter().any(|&w| w < 1e-3) {
            continue 'outer;
        }
        let mut gaps: Vec<f64> = (0..=pieces).map(|_| 0.05 + rng.next_f64()).collect();
        let total: f64 = gaps.iter().sum();
        for g in gaps.iter_mut() {
            *g *= (1.0 - alpha) / total;
        }
        let mut raw = Vec::with_capacity(pieces);
        let mut x = 0.0;
        for i in 0..pieces {
            x += gaps[i];
            raw.push((x, x + widths[i]));
            x += widths[i];
        }
        let union = IntervalUnion::normalize(&raw)?;
        if union.count() == pieces {
            return Ok(union);
        }
    }
    bail!("failed to draw a {pieces}-interval union of measure {alpha}")
}

fn write_file(path: &PathBuf, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Format a float for CSV output (shortest round-trip representation).
fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

/// Per-step metrics CSV for one trace.
pub fn metrics_csv(
    graph: &GraphModel,
    trace: &RunTrace,
    containment_radii: &[f64],
) -> Result<String> {
    let mut header = String::from(
        "t,threshold,certain_count,tie_pool_size,n_clusters,max_radius,min_radius,support_radius,max_past_overlap,max_expected_input",
    );
    for r in containment_radii {
        header.push_str(&format!(",containment_r{r}"));
    }
    let mut rows = vec![header];
    let fractions: Vec<Vec<f64>> = containment_radii
        .iter()
        .map(|&r| containment_fraction(graph, trace, r))
        .collect::<kcap_core::Result<_>>()?;
    for (i, rec) in trace.records.iter().enumerate() {
        let max_e = match &rec.members {
            Some(members) => {
                let pos = graph.positions().subset(members);
                let profile = expected_input_profile(&pos, graph.kernel(), &pos)?;
                profile.expected.iter().copied().fold(0.0, f64::max)
            }
            None => f64::NAN,
        };
        let mut row = format!(
            "{},{},{},{},{},{},{},{},{},{}",
            rec.t,
            rec.threshold.map(|v| v.to_string()).unwrap_or_default(),
            rec.certain_count.map(|v| v.to_string()).unwrap_or_default(),
            rec.tie_pool_size.map(|v| v.to_string()).unwrap_or_default(),
            rec.n_clusters,
            num(rec.max_radius),
            num(rec.min_radius),
            num(rec.support_radius),
            rec.past_overlap.iter().max().copied().unwrap_or(0),
            num(max_e),
        );
        for f in &fractions {
            row.push_str(&format!(",{}", num(f[i])));
        }
        rows.push(row);
    }
    Ok(rows.join("\n") + "\n")
}

/// Run the configured experiment and write its artifacts.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let dir = cfg.resolved_output_dir();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let manifest = dir.join("manifest.cfg");
    write_file(&manifest, cfg.manifest().as_bytes())?;
    let mut files = Vec::new();
    match cfg.mode {
        Mode::Discrete => run_discrete(cfg, &dir, &mut files)?,
        Mode::Continuous => run_continuous_mode(cfg, &dir, &mut files)?,
        Mode::Bounds => {
            let table = validation::bounds_table(100_000, 0xB0);
            let path = dir.join("bounds.csv");
            write_file(&path, validation::table_csv(&table).as_bytes())?;
            files.push(path);
        }
        Mode::FireProb => run_fire_prob(cfg, &dir, &mut files)?,
    }
    Ok(Artifacts {
        dir,
        manifest,
        files,
    })
}

fn edge_mode(cfg: &ExperimentConfig) -> EdgeMode {
    if cfg.exact {
        EdgeMode::Exact
    } else {
        EdgeMode::Truncated {
            epsilon: cfg.epsilon,
        }
    }
}

pub fn run_config_of(cfg: &ExperimentConfig, replicate: u64) -> RunConfig {
    RunConfig {
        k: cfg.k,
        init_seed: cfg.init_seed + replicate,
        process_seed: cfg.process_seed + replicate,
        max_steps: cfg.max_steps,
        mode: edge_mode(cfg),
        stop: StopRule {
            window: cfg.stop_window,
            radius_tol: cfg.stop_tol_factor * cfg.sigma,
        },
        separation: cfg.separation,
        record_members: cfg.record_members,
    }
}

fn run_discrete(cfg: &ExperimentConfig, dir: &PathBuf, files: &mut Vec<PathBuf>) -> Result<()> {
    for r in 0..cfg.replicates {
        let graph = GraphModel::new(cfg.n, cfg.d, cfg.sigma, cfg.graph_seed + r)?;
        let trace = run(&graph, &run_config_of(cfg, r))?;
        let trace_path = dir.join(format!("trace_r{r}.jsonl"));
        let mut buf = Vec::new();
        trace.write_jsonl(&mut buf, cfg.trace_members)?;
        write_file(&trace_path, &buf)?;
        files.push(trace_path);

        let metrics_path = dir.join(format!("metrics_r{r}.csv"));
        let radii = if cfg.record_members {
            cfg.containment_radii.clone()
        } else {
            Vec::new()
        };
        write_file(&metrics_path, metrics_csv(&graph, &trace, &radii)?.as_bytes())?;
        files.push(metrics_path);
    }
    Ok(())
}

pub fn continuous_kernel(cfg: &ExperimentConfig) -> Result<KernelSpec> {
    Ok(match cfg.kernel {
        ContinuousKernel::Gaussian => KernelSpec::gaussian(cfg.continuous_sigma)?,
        ContinuousKernel::InverseSquare => KernelSpec::inverse_square(cfg.inverse_square_c)?,
    })
}

fn run_continuous_mode(
    cfg: &ExperimentConfig,
    dir: &PathBuf,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    let kernel = continuous_kernel(cfg)?;
    for r in 0..cfg.replicates {
        let initial =
            random_interval_union(cfg.continuous_seed + r, cfg.initial_intervals, cfg.alpha)?;
        let trace = run_continuous(&initial, &kernel, cfg.max_steps)?;
        let mut rows = vec!["t,n_intervals,threshold,potential,endpoints".to_string()];
        for s in &trace.steps {
            let endpoints: Vec<String> = s
                .intervals
                .iter()
                .map(|&(a, b)| format!("{a}:{b}"))
                .collect();
            rows.push(format!(
                "{},{},{},{},{}",
                s.t,
                s.n_intervals,
                s.threshold.map(|v| format!("{v}")).unwrap_or_default(),
                num(s.potential),
                endpoints.join(";")
            ));
        }
        let path = dir.join(format!("continuous_r{r}.csv"));
        write_file(&path, (rows.join("\n") + "\n").as_bytes())?;
        files.push(path);
    }
    Ok(())
}

fn run_fire_prob(cfg: &ExperimentConfig, dir: &PathBuf, files: &mut Vec<PathBuf>) -> Result<()> {
    for r in 0..cfg.replicates {
        let graph = GraphModel::new(cfg.n, cfg.d, cfg.sigma, cfg.graph_seed + r)?;
        let mut run_cfg = run_config_of(cfg, r);
        run_cfg.record_members = true;
        run_cfg.max_steps = cfg.profile_step.max(1);
        run_cfg.stop = StopRule::never();
        let (members, csv) = fire_profile_csv(cfg, &graph, &run_cfg)?;
        let _ = members;
        let path = dir.join(format!("profile_r{r}.csv"));
        write_file(&path, csv.as_bytes())?;
        files.push(path);
    }
    Ok(())
}

/// Profile CSV: per-vertex expected input, input variance, and firing
/// frequency at the configured step, for every vertex within the cutoff
/// neighborhood of the active set (all others have expected input below
/// the truncation budget and frequency 0).
pub fn fire_profile_csv(
    cfg: &ExperimentConfig,
    graph: &GraphModel,
    run_cfg: &RunConfig,
) -> Result<(Vec<u32>, String)> {
    let trace = run(graph, run_cfg)?;
    let step = cfg.profile_step.min(trace.len() - 1);
    let members = trace
        .members_at(step)
        .map_err(|_| anyhow!("trace lacks member ids"))?
        .to_vec();
    let active = kcap_core::engine::ActiveSet::from_members(step as u32, members.clone())?;
    let mode = edge_mode(cfg);
    let candidates = kcap_core::engine::synaptic_input(graph, &active, None, mode)?;
    let ids: Vec<u32> = candidates.iter().map(|&(id, _)| id).collect();
    let query = graph.positions().subset(&ids);
    let active_pos = graph.positions().subset(&members);
    let profile = expected_input_profile(&active_pos, graph.kernel(), &query)?;
    let fire = estimate_fire_probability(graph, &active, cfg.k, cfg.trials, cfg.process_seed, mode)?;
    let mut header = String::from("id");
    for axis in 0..graph.dim() {
        header.push_str(&format!(",x{axis}"));
    }
    header.push_str(",expected,variance,frequency");
    let mut rows = vec![header];
    for (i, &id) in ids.iter().enumerate() {
        let mut row = id.to_string();
        for c in query.point(i) {
            row.push_str(&format!(",{}", num(*c)));
        }
        row.push_str(&format!(
            ",{},{},{}",
            num(profile.expected[i]),
            num(profile.variance[i]),
            num(fire.frequency_of(id))
        ));
        rows.push(row);
    }
    Ok((members, rows.join("\n") + "\n"))
}
