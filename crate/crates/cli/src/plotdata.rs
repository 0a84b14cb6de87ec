//! Plot-ready CSV extraction from recorded traces.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

use kcap_core::graph::GraphModel;
use kcap_core::trace::RunTrace;

use crate::config::ExperimentConfig;
use crate::runner::{fire_profile_csv, run_config_of};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    SupportHistogram,
    Profile,
    RadiusCurve,
}

impl FromStr for PlotKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "support-histogram" => Ok(PlotKind::SupportHistogram),
            "profile" => Ok(PlotKind::Profile),
            "radius-curve" => Ok(PlotKind::RadiusCurve),
            other => bail!("unknown plot kind `{other}` (support-histogram|profile|radius-curve)"),
        }
    }
}

impl PlotKind {
    pub fn name(&self) -> &'static str {
        match self {
            PlotKind::SupportHistogram => "support-histogram",
            PlotKind::Profile => "profile",
            PlotKind::RadiusCurve => "radius-curve",
        }
    }
}

fn load_trace(path: &Path) -> Result<RunTrace> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    RunTrace::read_jsonl(std::io::BufReader::new(file))
        .with_context(|| format!("parsing trace {}", path.display()))
}

/// The manifest sitting next to a trace file.
fn sibling_manifest(trace_path: &Path) -> Result<ExperimentConfig> {
    let manifest = trace_path
        .parent()
        .map(|d| d.join("manifest.cfg"))
        .filter(|p| p.exists())
        .ok_or_else(|| anyhow!("no manifest.cfg next to {}", trace_path.display()))?;
    ExperimentConfig::parse_file(&manifest)
}

/// Extract plot data from a trace; writes `<trace stem>_<kind>.csv` next
/// to the trace unless an explicit output path is given. Histogram and
/// profile kinds rebuild the graph from the sibling manifest.
pub fn emit_plot_data(trace_path: &Path, kind: PlotKind, out: Option<PathBuf>) -> Result<PathBuf> {
    let out = out.unwrap_or_else(|| {
        let stem = trace_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "trace".into());
        trace_path.with_file_name(format!("{stem}_{}.csv", kind.name()))
    });
    let csv = match kind {
        PlotKind::RadiusCurve => radius_curve_csv(&load_trace(trace_path)?),
        PlotKind::SupportHistogram => {
            let trace = load_trace(trace_path)?;
            let cfg = sibling_manifest(trace_path)?;
            let graph = GraphModel::new(cfg.n, cfg.d, cfg.sigma, cfg.graph_seed)?;
            support_histogram_csv(&graph, &trace)?
        }
        PlotKind::Profile => {
            let cfg = sibling_manifest(trace_path)?;
            let graph = GraphModel::new(cfg.n, cfg.d, cfg.sigma, cfg.graph_seed)?;
            let mut run_cfg = run_config_of(&cfg, 0);
            run_cfg.record_members = true;
            run_cfg.max_steps = cfg.profile_step.max(1);
            run_cfg.stop = kcap_core::engine::StopRule::never();
            fire_profile_csv(&cfg, &graph, &run_cfg)?.1
        }
    };
    std::fs::write(&out, csv).with_context(|| format!("writing {}", out.display()))?;
    Ok(out)
}

pub fn radius_curve_csv(trace: &RunTrace) -> String {
    let mut rows = vec!["t,n_clusters,max_radius,support_radius".to_string()];
    for r in &trace.records {
        rows.push(format!(
            "{},{},{},{}",
            r.t, r.n_clusters, r.max_radius, r.support_radius
        ));
    }
    rows.join("\n") + "\n"
}

/// Position histogram of the active set per recorded step: 100 bins over
/// the first coordinate.
pub fn support_histogram_csv(graph: &GraphModel, trace: &RunTrace) -> Result<String> {
    const BINS: usize = 100;
    let mut rows = vec!["t,bin,bin_lo,count".to_string()];
    for rec in &trace.records {
        let members = rec
            .members
            .as_ref()
            .ok_or_else(|| anyhow!("trace lacks member ids; re-run with trace_members = true"))?;
        let mut counts = vec![0u32; BINS];
        for &id in members {
            let x = graph.position(id)[0];
            let bin = ((x * BINS as f64) as usize).min(BINS - 1);
            counts[bin] += 1;
        }
        for (bin, &c) in counts.iter().enumerate() {
            if c > 0 {
                rows.push(format!("{},{},{},{}", rec.t, bin, bin as f64 / BINS as f64, c));
            }
        }
    }
    Ok(rows.join("\n") + "\n")
}
