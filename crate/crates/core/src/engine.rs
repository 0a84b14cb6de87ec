//! One step and full runs of the discrete top-k selection process.
//!
//! Per step, every vertex receives the count of realized edges from the
//! currently active set (its synaptic input). The threshold is the
//! smallest integer `C` with at most `k` vertices strictly above it; all
//! vertices above `C` advance, and the remaining slots are filled by a
//! uniform sample without replacement from the vertices exactly at `C`.
//! Tie sampling draws from a per-step substream of the process seed and
//! sorts the tie pool by id first, so trajectories are reproducible and
//! independent of candidate iteration order.

use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sq_dist, GridIndex};
use crate::graph::GraphModel;
use crate::metrics::cluster_active_set;
use crate::rng::{mix3, stream_seed, SplitMix64, TAG_INIT, TAG_TIE};
use crate::trace::{ClusterRow, RunTrace, StepRecord};

/// Largest instance on which exact (untruncated) input evaluation is
/// allowed; beyond this the quadratic edge-query cost is prohibitive.
pub const EXACT_MODE_MAX_N: usize = 10_000;

/// The set of vertices firing at one step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveSet {
    step_index: u32,
    members: Vec<u32>,
}

impl ActiveSet {
    /// Build from member ids; sorts and rejects duplicates.
    pub fn from_members(step_index: u32, mut members: Vec<u32>) -> Result<Self> {
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("members", "duplicate vertex id"));
        }
        Ok(ActiveSet {
            step_index,
            members,
        })
    }

    /// Uniform random k-subset of `0..n` (Floyd's algorithm).
    pub fn uniform(step_index: u32, n: usize, k: usize, init_seed: u64) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::invalid(
                "k",
                format!("need 1 <= k <= n, got k = {k}, n = {n}"),
            ));
        }
        let mut rng = SplitMix64::new(stream_seed(init_seed, TAG_INIT));
        let mut chosen = BTreeSet::new();
        for j in (n - k)..n {
            let t = rng.below(j as u64 + 1) as u32;
            if !chosen.insert(t) {
                chosen.insert(j as u32);
            }
        }
        Ok(ActiveSet {
            step_index,
            members: chosen.into_iter().collect(),
        })
    }

    pub fn step_index(&self) -> u32 {
        self.step_index
    }

    pub fn k(&self) -> usize {
        self.members.len()
    }

    /// Member ids, sorted ascending.
    pub fn members(&self) -> &[u32] {
        &self.members
    }
}

/// How synaptic inputs are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EdgeMode {
    /// Query every (active, vertex) pair. Only sensible for small n.
    Exact,
    /// Skip pairs beyond the cutoff radius chosen so that the expected
    /// number of dropped true edges per step is at most `epsilon`.
    Truncated { epsilon: f64 },
}

impl Default for EdgeMode {
    fn default() -> Self {
        EdgeMode::Truncated { epsilon: 1e-6 }
    }
}

/// Outcome of one threshold selection.
#[derive(Clone, Debug)]
pub struct CapResult {
    pub next: ActiveSet,
    /// Smallest integer with at most k vertices strictly above it.
    pub threshold: u32,
    /// Vertices strictly above the threshold (always selected).
    pub certain_count: u32,
    /// Vertices exactly at the threshold (the tie pool).
    pub tie_pool_size: u64,
}

/// Synaptic input of every requested candidate.
///
/// With explicit `candidates`, returns one `(id, input)` entry per
/// candidate in the given order (zeros included). With `None`: exact mode
/// covers all `n` vertices; truncated mode covers the vertices within the
/// cutoff radius of some active vertex, all others being implicitly zero.
pub fn synaptic_input(
    graph: &GraphModel,
    active: &ActiveSet,
    candidates: Option<&[u32]>,
    mode: EdgeMode,
) -> Result<Vec<(u32, u32)>> {
    for &y in active.members() {
        if y as usize >= graph.n() {
            return Err(Error::VertexOutOfRange { id: y, n: graph.n() });
        }
    }
    let cutoff = match mode {
        EdgeMode::Exact => None,
        EdgeMode::Truncated { epsilon } => {
            if !(epsilon > 0.0) {
                return Err(Error::invalid("epsilon", "must be positive"));
            }
            Some(graph.cutoff_radius(active.k().max(1), epsilon))
        }
    };
    match candidates {
        Some(ids) => ids
            .iter()
            .map(|&id| Ok((id, graph.in_degree_from(id, active, cutoff)?)))
            .collect(),
        None => match cutoff {
            None => (0..graph.n() as u32)
                .map(|id| Ok((id, graph.in_degree_from(id, active, None)?)))
                .collect(),
            Some(r) => {
                let mut entries = inputs_in_cutoff(graph, active, r, graph.edge_stream_seed(), true);
                entries.sort_unstable_by_key(|&(id, _)| id);
                Ok(entries)
            }
        },
    }
}

/// Inputs over the cutoff neighborhood of the active set.
///
/// Visits each grid cell intersecting a cutoff ball around some active
/// vertex exactly once and scores every vertex stored there against the
/// active vertices within the cutoff. With `keep_zeros` the result covers
/// the whole neighborhood; otherwise only vertices with positive input are
/// returned (sufficient for threshold selection, where the zero class is
/// reconstructed from the vertex universe).
fn inputs_in_cutoff(
    graph: &GraphModel,
    active: &ActiveSet,
    cutoff: f64,
    edge_seed: u64,
    keep_zeros: bool,
) -> Vec<(u32, u32)> {
    let positions = graph.positions();
    let members = active.members();
    let active_pos = positions.subset(members);
    // grid over the active vertices for nearest-active lookups
    let active_grid = GridIndex::build(&active_pos, cutoff.max(1e-9)).expect("active grid");

    let mut cells: Vec<Vec<i64>> = Vec::new();
    for p in active_pos.iter() {
        cells.extend(graph.index().cells_intersecting(p, cutoff));
    }
    cells.sort_unstable();
    cells.dedup();

    let r2 = cutoff * cutoff;
    let score_cell = |key: &Vec<i64>| -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        let Some(bucket) = graph.index().bucket(key) else {
            return out;
        };
        for &id in bucket {
            let p = positions.point(id as usize);
            let mut input = 0u32;
            let mut in_range = false;
            for local in active_grid.query(p, cutoff) {
                let apos = active_pos.point(local as usize);
                if sq_dist(apos, p) > r2 {
                    continue;
                }
                in_range = true;
                let y = members[local as usize];
                if graph.edge_present_seeded(edge_seed, y, id) {
                    input += 1;
                }
            }
            if input > 0 || (keep_zeros && in_range) {
                out.push((id, input));
            }
        }
        out
    };

    if cells.len() >= 8 {
        cells.par_iter().map(score_cell).flatten().collect()
    } else {
        cells.iter().flat_map(|c| score_cell(c)).collect()
    }
}

/// Positive synaptic inputs under the given mode; the id order is
/// deterministic but unspecified.
pub(crate) fn positive_inputs(
    graph: &GraphModel,
    active: &ActiveSet,
    mode: EdgeMode,
    edge_seed: u64,
) -> Result<Vec<(u32, u32)>> {
    match mode {
        EdgeMode::Exact => {
            let members = active.members();
            let n = graph.n() as u32;
            let score = |id: u32| -> (u32, u32) {
                let mut input = 0;
                for &y in members {
                    if graph.edge_present_seeded(edge_seed, y, id) {
                        input += 1;
                    }
                }
                (id, input)
            };
            let entries: Vec<(u32, u32)> = if n >= 1024 {
                (0..n).into_par_iter().map(score).filter(|&(_, f)| f > 0).collect()
            } else {
                (0..n).map(score).filter(|&(_, f)| f > 0).collect()
            };
            Ok(entries)
        }
        EdgeMode::Truncated { epsilon } => {
            if !(epsilon > 0.0) {
                return Err(Error::invalid("epsilon", "must be positive"));
            }
            let cutoff = graph.cutoff_radius(active.k().max(1), epsilon);
            Ok(inputs_in_cutoff(graph, active, cutoff, edge_seed, false))
        }
    }
}

/// Apply the threshold rule to a set of inputs.
///
/// `inputs` holds `(id, input)` entries with unique ids; ids absent from
/// the list count as zero, over a universe of `n` vertices. The threshold
/// is the smallest integer `C` with `|{input > C}| <= k`; the result
/// contains all vertices above `C` plus a uniform sample without
/// replacement from the tie pool `{input == C}` (sorted by id before
/// sampling). The all-zero degenerate case follows the same rule: `C = 0`
/// with the tie pool equal to every zero-input vertex.
pub fn select_cap(
    n: usize,
    inputs: &[(u32, u32)],
    k: usize,
    next_step: u32,
    rng: &mut SplitMix64,
) -> Result<CapResult> {
    if k == 0 || k > n {
        return Err(Error::invalid(
            "k",
            format!("need 1 <= k <= n, got k = {k}, n = {n}"),
        ));
    }
    let max_input = inputs.iter().map(|&(_, f)| f).max().unwrap_or(0) as usize;
    let mut hist = vec![0u64; max_input + 1];
    let mut positive = 0u64;
    for &(id, f) in inputs {
        debug_assert!((id as usize) < n);
        hist[f as usize] += 1;
        if f > 0 {
            positive += 1;
        }
    }
    // suffix counts: above[c] = |{input > c}|
    let mut above = vec![0u64; max_input + 2];
    for c in (0..=max_input).rev() {
        above[c] = above[c + 1] + hist[c];
    }
    // above[c] counts inputs >= c, so |{input > c}| = above[c + 1]
    let threshold = if k == n {
        // selecting everyone: every threshold qualifies, so report the one
        // sitting just below the minimum input
        let min_input = if inputs.len() == n {
            inputs.iter().map(|&(_, f)| f).min().unwrap_or(0)
        } else {
            0
        };
        min_input.saturating_sub(1) as usize
    } else {
        let mut c = 0usize;
        while above[c + 1] > k as u64 {
            c += 1;
        }
        c
    };

    let mut members: Vec<u32> = inputs
        .iter()
        .filter(|&&(_, f)| (f as usize) > threshold)
        .map(|&(id, _)| id)
        .collect();
    let certain_count = members.len() as u32;

    let mut pool: Vec<u32>;
    let tie_pool_size: u64;
    if threshold == 0 {
        // zero-input tie pool: every vertex with no positive input
        tie_pool_size = n as u64 - positive;
        let need = k - members.len();
        if need > 0 {
            let mut has_positive = vec![false; n];
            for &(id, f) in inputs {
                if f > 0 {
                    has_positive[id as usize] = true;
                }
            }
            pool = (0..n as u32).filter(|&id| !has_positive[id as usize]).collect();
        } else {
            pool = Vec::new();
        }
    } else {
        pool = inputs
            .iter()
            .filter(|&&(_, f)| f as usize == threshold)
            .map(|&(id, _)| id)
            .collect();
        pool.sort_unstable();
        tie_pool_size = pool.len() as u64;
    }

    let need = k - members.len();
    debug_assert!(need as u64 <= tie_pool_size);
    for i in 0..need {
        let j = i + rng.below((pool.len() - i) as u64) as usize;
        pool.swap(i, j);
    }
    members.extend_from_slice(&pool[..need]);

    Ok(CapResult {
        next: ActiveSet::from_members(next_step, members)?,
        threshold: threshold as u32,
        certain_count,
        tie_pool_size,
    })
}

/// Stop when the maximum cluster radius has changed by less than
/// `radius_tol` for `window` consecutive steps.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StopRule {
    pub window: usize,
    pub radius_tol: f64,
}

impl StopRule {
    /// Default rule for a kernel scale: tolerance `1e-4 * sigma`, five
    /// stable steps.
    pub fn for_sigma(sigma: f64) -> Self {
        StopRule {
            window: 5,
            radius_tol: 1e-4 * sigma,
        }
    }

    pub fn never() -> Self {
        StopRule {
            window: usize::MAX,
            radius_tol: 0.0,
        }
    }

    fn satisfied(&self, records: &[StepRecord]) -> bool {
        if self.window == usize::MAX || records.len() < self.window + 1 {
            return false;
        }
        let tail = &records[records.len() - self.window - 1..];
        tail.windows(2)
            .all(|w| (w[1].max_radius - w[0].max_radius).abs() < self.radius_tol)
    }
}

/// Parameters of one process run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub k: usize,
    pub init_seed: u64,
    pub process_seed: u64,
    pub max_steps: usize,
    pub mode: EdgeMode,
    pub stop: StopRule,
    /// Single-linkage cluster separation; `None` means `2 sigma sqrt(ln n)`.
    pub separation: Option<f64>,
    /// Keep member ids in the trace records (needed for containment and
    /// profile analysis; costs k ints per step).
    pub record_members: bool,
}

impl RunConfig {
    pub fn new(k: usize, init_seed: u64, process_seed: u64, max_steps: usize) -> Self {
        RunConfig {
            k,
            init_seed,
            process_seed,
            max_steps,
            mode: EdgeMode::default(),
            stop: StopRule {
                window: 5,
                radius_tol: f64::NAN, // resolved against sigma at run time
            },
            separation: None,
            record_members: true,
        }
    }
}

/// Default cluster separation threshold, `2 sigma sqrt(ln n)`.
pub fn default_separation(sigma: f64, n: usize) -> f64 {
    2.0 * sigma * (n as f64).ln().max(1.0).sqrt()
}

/// A process run in progress: the graph, the current active set, the
/// tie-break seed, and the accumulated trace.
pub struct ProcessState<'g> {
    graph: &'g GraphModel,
    current: ActiveSet,
    process_seed: u64,
    mode: EdgeMode,
    separation: f64,
    record_members: bool,
    history: Vec<Vec<u32>>,
    trace: RunTrace,
}

impl<'g> ProcessState<'g> {
    pub fn new(graph: &'g GraphModel, cfg: &RunConfig) -> Result<Self> {
        if cfg.max_steps == 0 {
            return Err(Error::invalid("max_steps", "must be at least 1"));
        }
        if matches!(cfg.mode, EdgeMode::Exact) && graph.n() > EXACT_MODE_MAX_N {
            return Err(Error::invalid(
                "mode",
                format!("exact mode is limited to n <= {EXACT_MODE_MAX_N}, got n = {}", graph.n()),
            ));
        }
        let initial = ActiveSet::uniform(0, graph.n(), cfg.k, cfg.init_seed)?;
        Self::with_initial(graph, cfg, initial)
    }

    /// Start from an explicit initial active set (fixtures, replays).
    pub fn with_initial(graph: &'g GraphModel, cfg: &RunConfig, initial: ActiveSet) -> Result<Self> {
        if initial.k() == 0 {
            return Err(Error::invalid("initial", "active set must be non-empty"));
        }
        for &id in initial.members() {
            if id as usize >= graph.n() {
                return Err(Error::VertexOutOfRange { id, n: graph.n() });
            }
        }
        let separation = cfg
            .separation
            .unwrap_or_else(|| default_separation(graph.sigma(), graph.n()));
        let mut state = ProcessState {
            graph,
            current: initial,
            process_seed: cfg.process_seed,
            mode: cfg.mode,
            separation,
            record_members: cfg.record_members,
            history: Vec::new(),
            trace: RunTrace::default(),
        };
        state.record_current(0.0)?;
        Ok(state)
    }

    pub fn current(&self) -> &ActiveSet {
        &self.current
    }

    pub fn trace(&self) -> &RunTrace {
        &self.trace
    }

    pub fn into_trace(self) -> RunTrace {
        self.trace
    }

    fn record_current(&mut self, wall_ms: f64) -> Result<()> {
        let members = self.current.members().to_vec();
        let clusters = cluster_active_set(self.graph.positions(), &members, self.separation)?;
        let rows: Vec<ClusterRow> = clusters
            .iter()
            .map(|c| ClusterRow {
                center: c.ball.center.clone(),
                radius: c.ball.radius,
                count: c.members.len(),
            })
            .collect();
        let support = crate::geometry::enclosing_ball(&self.graph.positions().subset(&members))?;
        let past_overlap: Vec<u32> = self
            .history
            .iter()
            .map(|past| sorted_intersection_count(past, &members))
            .collect();
        let record = StepRecord {
            t: self.current.step_index(),
            threshold: None,
            certain_count: None,
            tie_pool_size: None,
            n_clusters: rows.len(),
            max_radius: rows.iter().map(|r| r.radius).fold(0.0, f64::max),
            min_radius: rows.iter().map(|r| r.radius).fold(f64::INFINITY, f64::min),
            support_radius: support.radius,
            clusters: rows,
            past_overlap,
            members: self.record_members.then(|| members.clone()),
            wall_ms,
        };
        self.history.push(members);
        self.trace.records.push(record);
        Ok(())
    }

    /// Advance one step: score candidates, apply the threshold rule,
    /// record the transition on the current record and append the new
    /// state.
    pub fn step(&mut self) -> Result<()> {
        let started = Instant::now();
        let t = self.current.step_index();
        let inputs = positive_inputs(self.graph, &self.current, self.mode, self.graph.edge_stream_seed())?;
        let mut tie_rng = SplitMix64::new(mix3(
            stream_seed(self.process_seed, TAG_TIE),
            t as u64,
            0,
        ));
        let cap = select_cap(self.graph.n(), &inputs, self.current.k(), t + 1, &mut tie_rng)?;
        {
            let last = self.trace.records.last_mut().expect("trace non-empty");
            last.threshold = Some(cap.threshold);
            last.certain_count = Some(cap.certain_count);
            last.tie_pool_size = Some(cap.tie_pool_size);
        }
        self.current = cap.next;
        self.record_current(started.elapsed().as_secs_f64() * 1e3)?;
        Ok(())
    }
}

fn sorted_intersection_count(a: &[u32], b: &[u32]) -> u32 {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Run the process from a uniform random initial set until the stop rule
/// fires or `max_steps` transitions have been taken.
pub fn run(graph: &GraphModel, cfg: &RunConfig) -> Result<RunTrace> {
    let mut cfg = cfg.clone();
    if cfg.stop.radius_tol.is_nan() {
        cfg.stop = StopRule::for_sigma(graph.sigma());
    }
    let mut state = ProcessState::new(graph, &cfg)?;
    for _ in 0..cfg.max_steps {
        state.step()?;
        if cfg.stop.satisfied(&state.trace().records) {
            break;
        }
    }
    Ok(state.into_trace())
}
