//! Structure of the active set: clustering, enclosing-ball radii,
//! expected-input and firing-probability profiles, containment fractions,
//! and a numerical check of the input-field gradient bound.

use rayon::prelude::*;

use crate::engine::{positive_inputs, select_cap, ActiveSet, EdgeMode};
use crate::error::{Error, Result};
use crate::geometry::{enclosing_ball, sq_dist, Ball, GridIndex, KernelSpec, PointSet};
use crate::graph::GraphModel;
use crate::rng::{mix3, stream_seed, SplitMix64, TAG_FIRE_EDGE, TAG_FIRE_TIE};
use crate::trace::RunTrace;

/// A single-linkage component of the active set.
#[derive(Clone, Debug)]
pub struct ClusterSummary {
    pub ball: Ball,
    /// Ids of the active vertices in this cluster, sorted.
    pub members: Vec<u32>,
}

impl ClusterSummary {
    pub fn member_count(&self) -> usize {
        self.members.len()
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            self.parent[x as usize] = self.parent[self.parent[x as usize] as usize];
            x = self.parent[x as usize];
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // root at the smaller id keeps component labels canonical
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Single-linkage components of the active vertices under links of length
/// strictly less than `separation`, each summarized by its smallest
/// enclosing ball. Clusters come out ordered by their smallest member id;
/// the partition does not depend on the input order of `members`.
pub fn cluster_active_set(
    positions: &PointSet,
    members: &[u32],
    separation: f64,
) -> Result<Vec<ClusterSummary>> {
    if !(separation > 0.0) {
        return Err(Error::invalid(
            "separation",
            format!("must be positive, got {separation}"),
        ));
    }
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    let k = sorted.len();
    let local = positions.subset(&sorted);
    let grid = GridIndex::build(&local, separation)?;
    let mut uf = UnionFind::new(k);
    let sep2 = separation * separation;
    for i in 0..k {
        for j in grid.query(local.point(i), separation) {
            let j = j as usize;
            if j > i && sq_dist(local.point(i), local.point(j)) < sep2 {
                uf.union(i as u32, j as u32);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<u32, Vec<u32>> = std::collections::BTreeMap::new();
    for i in 0..k {
        groups.entry(uf.find(i as u32)).or_default().push(i as u32);
    }
    let mut out = Vec::with_capacity(groups.len());
    for (_, locals) in groups {
        let ids: Vec<u32> = locals.iter().map(|&l| sorted[l as usize]).collect();
        let ball = enclosing_ball(&local.subset(&locals))?;
        out.push(ClusterSummary { ball, members: ids });
    }
    Ok(out)
}

/// Expected input and input variance at a set of query points:
/// `E[x] = sum_z g(x, z)` and `V[x]^2 = sum_z g(x, z)(1 - g(x, z))` over
/// the active positions `z`.
#[derive(Clone, Debug)]
pub struct InputProfile {
    pub expected: Vec<f64>,
    pub variance: Vec<f64>,
}

pub fn expected_input_profile(
    active: &PointSet,
    kernel: &KernelSpec,
    query: &PointSet,
) -> Result<InputProfile> {
    if active.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if active.dim() != query.dim() {
        return Err(Error::DimensionMismatch {
            left: active.dim(),
            right: query.dim(),
        });
    }
    let mut expected = Vec::with_capacity(query.len());
    let mut variance = Vec::with_capacity(query.len());
    for q in query.iter() {
        let mut e = 0.0;
        let mut v = 0.0;
        for z in active.iter() {
            let g = kernel.eval_dist2(sq_dist(q, z));
            e += g;
            v += g * (1.0 - g);
        }
        expected.push(e);
        variance.push(v);
    }
    Ok(InputProfile { expected, variance })
}

fn expected_input_at(active: &PointSet, sigma: f64, x: &[f64]) -> f64 {
    let two_s2 = 2.0 * sigma * sigma;
    active
        .iter()
        .map(|z| (-sq_dist(x, z) / two_s2).exp())
        .sum()
}

/// Maximum observed ratio between the finite-difference directional
/// derivative of the expected input and the analytic ceiling
/// `(k / sigma) sqrt(d / e)`, over the sample points and random unit
/// directions. Values stay at or below 1 up to finite-difference error.
pub fn gradient_bound_check(
    active: &PointSet,
    sigma: f64,
    samples: &PointSet,
    step: Option<f64>,
    directions_per_sample: usize,
    seed: u64,
) -> Result<f64> {
    if active.is_empty() || samples.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if active.dim() != samples.dim() {
        return Err(Error::DimensionMismatch {
            left: active.dim(),
            right: samples.dim(),
        });
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma", "must be positive"));
    }
    let h = step.unwrap_or(sigma * 1e-4);
    if !(h > 0.0) || h >= sigma {
        return Err(Error::invalid("step", "need 0 < h << sigma"));
    }
    let d = active.dim();
    let k = active.len() as f64;
    let ceiling = (k / sigma) * (d as f64 / std::f64::consts::E).sqrt();
    let mut rng = SplitMix64::new(seed);
    let mut max_ratio = 0.0f64;
    let mut dir = vec![0.0; d];
    for x in samples.iter() {
        for trial in 0..directions_per_sample.max(1) {
            if trial < d {
                // include the axis directions, where the 1-D bound is tight
                dir.iter_mut().for_each(|c| *c = 0.0);
                dir[trial] = 1.0;
            } else {
                loop {
                    let mut norm2 = 0.0;
                    for c in dir.iter_mut() {
                        *c = rng.next_gaussian();
                        norm2 += *c * *c;
                    }
                    if norm2 > 1e-12 {
                        let inv = norm2.sqrt().recip();
                        dir.iter_mut().for_each(|c| *c *= inv);
                        break;
                    }
                }
            }
            let mut fwd = x.to_vec();
            let mut bwd = x.to_vec();
            for t in 0..d {
                fwd[t] += h * dir[t];
                bwd[t] -= h * dir[t];
            }
            let deriv = (expected_input_at(active, sigma, &fwd)
                - expected_input_at(active, sigma, &bwd))
                / (2.0 * h);
            max_ratio = max_ratio.max(deriv.abs() / ceiling);
        }
    }
    Ok(max_ratio)
}

/// Per-vertex firing frequency under edge resampling: the active set is
/// held fixed while all of its outgoing edges are redrawn from a fresh
/// stream each trial and the threshold rule is applied. Vertices never
/// selected are omitted (frequency zero).
#[derive(Clone, Debug)]
pub struct FireProbabilityEstimate {
    /// `(vertex id, frequency)` sorted by id; ids not listed have
    /// frequency 0.
    pub frequencies: Vec<(u32, f64)>,
    pub trials: u32,
}

impl FireProbabilityEstimate {
    pub fn frequency_of(&self, id: u32) -> f64 {
        self.frequencies
            .binary_search_by_key(&id, |&(i, _)| i)
            .map(|idx| self.frequencies[idx].1)
            .unwrap_or(0.0)
    }

    /// Total frequency mass; equals the cap size exactly (each trial
    /// selects exactly k vertices).
    pub fn total_mass(&self) -> f64 {
        self.frequencies.iter().map(|&(_, f)| f).sum()
    }
}

pub fn estimate_fire_probability(
    graph: &GraphModel,
    active: &ActiveSet,
    k: usize,
    trials: u32,
    seed: u64,
    mode: EdgeMode,
) -> Result<FireProbabilityEstimate> {
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let edge_root = stream_seed(seed, TAG_FIRE_EDGE);
    let tie_root = stream_seed(seed, TAG_FIRE_TIE);
    let run_trial = |trial: u32| -> Result<Vec<u32>> {
        let edge_seed = mix3(edge_root, trial as u64, 0);
        let inputs = positive_inputs(graph, active, mode, edge_seed)?;
        let mut tie_rng = SplitMix64::new(mix3(tie_root, trial as u64, 0));
        let cap = select_cap(graph.n(), &inputs, k, active.step_index() + 1, &mut tie_rng)?;
        Ok(cap.next.members().to_vec())
    };
    let winners: Vec<Vec<u32>> = (0..trials)
        .into_par_iter()
        .map(run_trial)
        .collect::<Result<_>>()?;
    let mut counts: std::collections::BTreeMap<u32, u32> = std::collections::BTreeMap::new();
    for w in winners {
        for id in w {
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    let frequencies = counts
        .into_iter()
        .map(|(id, c)| (id, c as f64 / trials as f64))
        .collect();
    Ok(FireProbabilityEstimate {
        frequencies,
        trials,
    })
}

/// For each recorded step, the largest fraction of the active set covered
/// by a ball of the given radius centered at one of the active vertices.
pub fn containment_fraction(graph: &GraphModel, trace: &RunTrace, radius: f64) -> Result<Vec<f64>> {
    if trace.is_empty() {
        return Err(Error::invalid("trace", "must be non-empty"));
    }
    if !(radius >= 0.0) {
        return Err(Error::invalid("radius", "must be >= 0"));
    }
    let r2 = radius * radius;
    let mut out = Vec::with_capacity(trace.len());
    for record in &trace.records {
        let members = record.members.as_deref().ok_or(Error::MissingMembers)?;
        let pos = graph.positions().subset(members);
        let k = pos.len();
        let mut best = 0usize;
        for c in 0..k {
            let mut inside = 0;
            for p in 0..k {
                if sq_dist(pos.point(c), pos.point(p)) <= r2 {
                    inside += 1;
                }
            }
            best = best.max(inside);
        }
        out.push(best as f64 / k as f64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::RunConfig;
    use crate::trace::{RunTrace, StepRecord};

    fn pset(dim: usize, coords: &[f64]) -> PointSet {
        PointSet::from_flat(dim, coords.to_vec()).unwrap()
    }

    #[test]
    fn cluster_obvious_gap() {
        let ps = pset(1, &[0.10, 0.11, 0.80]);
        let clusters = cluster_active_set(&ps, &[0, 1, 2], 0.2).unwrap();
        assert_eq!(clusters.len(), 2);
        assert_eq!(clusters[0].members, vec![0, 1]);
        assert_eq!(clusters[1].members, vec![2]);
    }

    #[test]
    fn cluster_single_when_tight() {
        let ps = pset(2, &[0.5, 0.5, 0.52, 0.5, 0.5, 0.52, 0.51, 0.51]);
        let clusters = cluster_active_set(&ps, &[0, 1, 2, 3], 0.2).unwrap();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].member_count(), 4);
    }

    /// Dense O(k^2) union-find over the full distance matrix.
    fn brute_force_partition(ps: &PointSet, members: &[u32], sep: f64) -> Vec<Vec<u32>> {
        let mut sorted = members.to_vec();
        sorted.sort_unstable();
        let k = sorted.len();
        let mut labels: Vec<usize> = (0..k).collect();
        fn find(labels: &mut Vec<usize>, x: usize) -> usize {
            if labels[x] != x {
                let r = find(labels, labels[x]);
                labels[x] = r;
            }
            labels[x]
        }
        for i in 0..k {
            for j in i + 1..k {
                let d2 = sq_dist(
                    ps.point(sorted[i] as usize),
                    ps.point(sorted[j] as usize),
                );
                if d2 < sep * sep {
                    let (ri, rj) = (find(&mut labels, i), find(&mut labels, j));
                    if ri != rj {
                        let (lo, hi) = (ri.min(rj), ri.max(rj));
                        labels[hi] = lo;
                    }
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<u32>> = Default::default();
        for i in 0..k {
            let r = find(&mut labels, i);
            groups.entry(r).or_default().push(sorted[i]);
        }
        groups.into_values().collect()
    }

    #[test]
    fn cluster_matches_dense_union_find() {
        let mut rng = SplitMix64::new(606);
        for trial in 0..25 {
            let n = 500;
            let dim = 1 + (trial % 2);
            let mut data = Vec::with_capacity(n * dim);
            for _ in 0..n * dim {
                data.push(rng.next_f64());
            }
            let ps = PointSet::from_flat(dim, data).unwrap();
            let members: Vec<u32> = (0..n as u32).filter(|_| rng.next_f64() < 0.5).collect();
            if members.is_empty() {
                continue;
            }
            let sep = 0.02 + rng.next_f64() * 0.1;
            let got: Vec<Vec<u32>> = cluster_active_set(&ps, &members, sep)
                .unwrap()
                .into_iter()
                .map(|c| c.members)
                .collect();
            let want = brute_force_partition(&ps, &members, sep);
            assert_eq!(got, want, "trial {trial}");
        }
    }

    #[test]
    fn cluster_partition_invariant_under_input_order() {
        let mut rng = SplitMix64::new(17);
        let mut data = Vec::new();
        for _ in 0..100 {
            data.push(rng.next_f64());
        }
        let ps = PointSet::from_flat(1, data).unwrap();
        let mut members: Vec<u32> = (0..100).collect();
        let a = cluster_active_set(&ps, &members, 0.03).unwrap();
        rng.shuffle(&mut members);
        let b = cluster_active_set(&ps, &members, 0.03).unwrap();
        let pa: Vec<Vec<u32>> = a.into_iter().map(|c| c.members).collect();
        let pb: Vec<Vec<u32>> = b.into_iter().map(|c| c.members).collect();
        assert_eq!(pa, pb);
    }

    #[test]
    fn profile_trivial_cases() {
        let kernel = KernelSpec::gaussian(0.1).unwrap();
        // one active point, query at the same location
        let active = pset(1, &[0.4]);
        let query = pset(1, &[0.4]);
        let p = expected_input_profile(&active, &kernel, &query).unwrap();
        assert_eq!(p.expected, vec![1.0]);
        assert_eq!(p.variance, vec![0.0]);

        // k coincident active points, query at distance sigma
        let active = pset(1, &[0.3; 7]);
        let query = pset(1, &[0.4]);
        let p = expected_input_profile(&active, &kernel, &query).unwrap();
        let g = (-0.5f64).exp();
        assert!((p.expected[0] - 7.0 * g).abs() < 1e-12);
        assert!((p.variance[0] - 7.0 * g * (1.0 - g)).abs() < 1e-12);
    }

    #[test]
    fn profile_matches_naive_double_loop() {
        let mut rng = SplitMix64::new(88);
        let kernel = KernelSpec::gaussian(0.07).unwrap();
        let mut act = Vec::new();
        let mut qry = Vec::new();
        for _ in 0..60 {
            act.extend([rng.next_f64(), rng.next_f64()]);
        }
        for _ in 0..40 {
            qry.extend([rng.next_f64(), rng.next_f64()]);
        }
        let active = PointSet::from_flat(2, act.clone()).unwrap();
        let query = PointSet::from_flat(2, qry.clone()).unwrap();
        let p = expected_input_profile(&active, &kernel, &query).unwrap();
        for qi in 0..40 {
            let q = &qry[qi * 2..qi * 2 + 2];
            let mut e = 0.0;
            let mut v = 0.0;
            for ai in 0..60 {
                let a = &act[ai * 2..ai * 2 + 2];
                let g = kernel.eval_dist2(sq_dist(q, a));
                e += g;
                v += g * (1.0 - g);
            }
            assert!((p.expected[qi] - e).abs() < 1e-12);
            assert!((p.variance[qi] - v).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_ratio_tight_at_sigma_1d() {
        // single active point, sample at distance sigma: the directional
        // derivative is (1/sigma) e^{-1/2}, exactly the d = 1 ceiling
        let sigma = 0.1;
        let active = pset(1, &[0.45]);
        let samples = pset(1, &[0.55]);
        let ratio = gradient_bound_check(&active, sigma, &samples, None, 1, 1).unwrap();
        assert!((ratio - 1.0).abs() < 1e-6, "ratio {ratio}");

        // coincident active set scales both sides equally
        let active = pset(1, &[0.45; 9]);
        let ratio = gradient_bound_check(&active, sigma, &samples, None, 1, 1).unwrap();
        assert!((ratio - 1.0).abs() < 1e-6, "ratio {ratio}");
    }

    #[test]
    fn gradient_bound_holds_on_random_configs() {
        let mut rng = SplitMix64::new(40);
        for dim in [1usize, 2, 3] {
            for _ in 0..20 {
                let k = 1 + rng.below(30) as usize;
                let sigma = 0.03 + rng.next_f64() * 0.2;
                let mut act = Vec::new();
                for _ in 0..k * dim {
                    act.push(rng.next_f64());
                }
                let active = PointSet::from_flat(dim, act).unwrap();
                let mut smp = Vec::new();
                for _ in 0..10 * dim {
                    smp.push(rng.next_f64());
                }
                let samples = PointSet::from_flat(dim, smp).unwrap();
                let ratio =
                    gradient_bound_check(&active, sigma, &samples, None, 4, rng.next_u64())
                        .unwrap();
                assert!(ratio <= 1.0 + 1e-3, "dim {dim}: ratio {ratio}");
            }
        }
    }

    #[test]
    fn fire_probability_single_trial_is_one_cap() {
        let g = GraphModel::new(300, 1, 0.05, 5).unwrap();
        let active = ActiveSet::uniform(0, 300, 12, 3).unwrap();
        let est = estimate_fire_probability(&g, &active, 12, 1, 9, EdgeMode::default()).unwrap();
        assert_eq!(est.frequencies.len(), 12);
        assert!(est.frequencies.iter().all(|&(_, f)| f == 1.0));
    }

    #[test]
    fn fire_probability_mass_equals_k() {
        let g = GraphModel::new(400, 1, 0.05, 6).unwrap();
        let active = ActiveSet::uniform(0, 400, 15, 4).unwrap();
        let est = estimate_fire_probability(&g, &active, 15, 64, 11, EdgeMode::default()).unwrap();
        assert!((est.total_mass() - 15.0).abs() < 1e-9);
    }

    #[test]
    fn fire_probability_near_clique_saturates() {
        // coincident active clique far from everything else: each active
        // vertex should fire in (almost) every redraw
        let mut ps = PointSet::new(1);
        for _ in 0..6 {
            ps.push(&[0.2]);
        }
        for i in 0..50 {
            ps.push(&[0.8 + 0.001 * i as f64]);
        }
        let g = GraphModel::from_positions(ps, KernelSpec::gaussian(0.01).unwrap(), 44).unwrap();
        let active = ActiveSet::from_members(0, (0..6).collect()).unwrap();
        let est = estimate_fire_probability(&g, &active, 6, 200, 21, EdgeMode::Exact).unwrap();
        for id in 0..6u32 {
            assert!(est.frequency_of(id) > 0.999, "id {id}: {}", est.frequency_of(id));
        }
    }

    #[test]
    fn fire_probability_symmetric_configuration() {
        // mirror-symmetric positions about 0.5; the frequency profile must
        // be symmetric within Monte Carlo error
        let mut coords = vec![0.2, 0.8, 0.25, 0.75, 0.3, 0.7, 0.45, 0.55];
        // add symmetric bystanders
        for i in 1..20 {
            let off = 0.01 * i as f64;
            coords.push(0.2 + off);
            coords.push(0.8 - off);
        }
        let ps = PointSet::from_flat(1, coords).unwrap();
        let n = ps.len();
        let g = GraphModel::from_positions(ps, KernelSpec::gaussian(0.1).unwrap(), 7).unwrap();
        let active = ActiveSet::from_members(0, vec![0, 1, 2, 3]).unwrap();
        let trials = 4000;
        let est = estimate_fire_probability(&g, &active, 4, trials, 100, EdgeMode::Exact).unwrap();
        // mirror pairs were pushed adjacently: (2i, 2i+1)
        for pair in 0..n / 2 {
            let (a, b) = (2 * pair as u32, 2 * pair as u32 + 1);
            let (fa, fb) = (est.frequency_of(a), est.frequency_of(b));
            let p = 0.5 * (fa + fb);
            let sd = (p * (1.0 - p) / trials as f64).sqrt().max(1e-4);
            assert!(
                (fa - fb).abs() <= 5.0 * sd * std::f64::consts::SQRT_2,
                "pair ({a}, {b}): {fa} vs {fb}"
            );
        }
    }

    #[test]
    fn profile_expectation_matches_monte_carlo_mean() {
        // ties the analytic E[x] to the engine's edge sampling
        let g = GraphModel::new(200, 1, 0.08, 13).unwrap();
        let active = ActiveSet::uniform(0, 200, 10, 2).unwrap();
        let query_ids: Vec<u32> = vec![0, 50, 100, 150, 199];
        let query = g.positions().subset(&query_ids);
        let act_pos = g.positions().subset(active.members());
        let profile = expected_input_profile(&act_pos, g.kernel(), &query).unwrap();
        let trials = 3000u64;
        for (qi, &qid) in query_ids.iter().enumerate() {
            let mut total = 0u64;
            for trial in 0..trials {
                let seed = mix3(999, trial, 0);
                let mut f = 0u64;
                for &y in active.members() {
                    if g.edge_present_seeded(seed, y, qid) {
                        f += 1;
                    }
                }
                total += f;
            }
            let mc = total as f64 / trials as f64;
            let se = (profile.variance[qi].max(1e-9) / trials as f64).sqrt();
            assert!(
                (mc - profile.expected[qi]).abs() <= 3.0 * se + 1e-9,
                "query {qid}: MC {mc} vs E {}",
                profile.expected[qi]
            );
        }
    }

    #[test]
    fn containment_trivial_and_uniform() {
        // all points coincident: fraction 1 at any radius
        let mut ps = PointSet::new(1);
        for _ in 0..10 {
            ps.push(&[0.5]);
        }
        for i in 0..10 {
            ps.push(&[i as f64 / 10.0]);
        }
        let g = GraphModel::from_positions(ps, KernelSpec::gaussian(0.1).unwrap(), 1).unwrap();
        let record = |members: Vec<u32>| StepRecord {
            t: 0,
            threshold: None,
            certain_count: None,
            tie_pool_size: None,
            n_clusters: 1,
            max_radius: 0.0,
            min_radius: 0.0,
            support_radius: 0.0,
            clusters: vec![],
            past_overlap: vec![],
            members: Some(members),
            wall_ms: 0.0,
        };
        let trace = RunTrace {
            records: vec![record((0..10).collect())],
        };
        let f = containment_fraction(&g, &trace, 0.0).unwrap();
        assert_eq!(f, vec![1.0]);

        // uniform points on [0,1], radius 0.25: best ball covers about half
        let trace = RunTrace {
            records: vec![record((10..20).collect())],
        };
        let f = containment_fraction(&g, &trace, 0.25).unwrap();
        // direct counting oracle: best center among the members
        let mut best = 0;
        for c in 10..20 {
            let cx = (c - 10) as f64 / 10.0;
            let inside = (10..20)
                .filter(|&p| {
                    let px = (p - 10) as f64 / 10.0;
                    (px - cx).abs() <= 0.25
                })
                .count();
            best = best.max(inside);
        }
        assert!((f[0] - best as f64 / 10.0).abs() < 1e-12);
    }

    #[test]
    fn containment_requires_members() {
        let g = GraphModel::new(50, 1, 0.1, 2).unwrap();
        let mut cfg = RunConfig::new(5, 1, 1, 2);
        cfg.record_members = false;
        let trace = crate::engine::run(&g, &cfg).unwrap();
        assert!(matches!(
            containment_fraction(&g, &trace, 0.1),
            Err(Error::MissingMembers)
        ));
    }
}
