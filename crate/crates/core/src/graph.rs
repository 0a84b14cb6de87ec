//! Directed geometric random graphs with lazily realized edges.
//!
//! Vertices are uniform points in `[0,1]^d`; the directed edge `(x, y)` is
//! present with probability `g(x, y)` for a distance kernel `g`. Edges are
//! never stored: the Bernoulli variate for an ordered pair is a pure
//! counter-hash of `(graph_seed, source, target)`, so queries agree no
//! matter how often or in what order they are made, and a graph with 10^14
//! potential edges costs no memory beyond its vertex positions.

use serde::{Deserialize, Serialize};

use crate::engine::ActiveSet;
use crate::error::{Error, Result};
use crate::geometry::{sq_dist, GridIndex, KernelSpec, PointSet};
use crate::rng::{mix3, stream_seed, unit_f64, TAG_EDGE, TAG_POSITION};

/// Sample `n` i.i.d. uniform points in `[0,1]^d`, bit-reproducible from
/// `(n, d, seed)`. Coordinate `j` of vertex `i` is an independent counter
/// hash, so the result does not depend on evaluation order.
pub fn sample_vertices(n: usize, dim: usize, seed: u64) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::invalid("n", "vertex count must be at least 1"));
    }
    if dim == 0 {
        return Err(Error::invalid("d", "dimension must be at least 1"));
    }
    let pos_seed = stream_seed(seed, TAG_POSITION);
    let mut data = Vec::with_capacity(n * dim);
    for i in 0..n {
        for j in 0..dim {
            data.push(unit_f64(mix3(pos_seed, i as u64, j as u64)));
        }
    }
    PointSet::from_flat(dim, data)
}

/// A materialized vertex set plus a deterministic lazy edge oracle.
#[derive(Clone, Debug)]
pub struct GraphModel {
    n: usize,
    dim: usize,
    kernel: KernelSpec,
    graph_seed: u64,
    edge_seed: u64,
    positions: PointSet,
    index: GridIndex,
}

impl GraphModel {
    /// Gaussian-kernel graph with freshly sampled vertices.
    pub fn new(n: usize, dim: usize, sigma: f64, graph_seed: u64) -> Result<Self> {
        let kernel = KernelSpec::gaussian(sigma)?;
        let positions = sample_vertices(n, dim, graph_seed)?;
        Self::from_positions(positions, kernel, graph_seed)
    }

    /// Graph over caller-supplied positions (fixtures, replays, exports).
    pub fn from_positions(positions: PointSet, kernel: KernelSpec, graph_seed: u64) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        let cell = kernel.scale().min(1.0);
        let index = GridIndex::build(&positions, cell)?;
        Ok(GraphModel {
            n: positions.len(),
            dim: positions.dim(),
            kernel,
            graph_seed,
            edge_seed: stream_seed(graph_seed, TAG_EDGE),
            positions,
            index,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Kernel length scale (`sigma` for the Gaussian kernel).
    pub fn sigma(&self) -> f64 {
        self.kernel.scale()
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn graph_seed(&self) -> u64 {
        self.graph_seed
    }

    pub fn positions(&self) -> &PointSet {
        &self.positions
    }

    pub fn index(&self) -> &GridIndex {
        &self.index
    }

    pub fn position(&self, id: u32) -> &[f64] {
        self.positions.point(id as usize)
    }

    fn check_id(&self, id: u32) -> Result<()> {
        if (id as usize) < self.n {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { id, n: self.n })
        }
    }

    /// Whether the directed edge `(source, target)` is present. Pure in
    /// `(graph_seed, source, target)`: repeat queries always agree, and
    /// `(s, t)` is independent of `(t, s)`.
    pub fn edge_present(&self, source: u32, target: u32) -> Result<bool> {
        self.check_id(source)?;
        self.check_id(target)?;
        Ok(self.edge_present_seeded(self.edge_seed, source, target))
    }

    /// Edge draw under an explicit edge-stream seed. Used to redraw all
    /// edges independently of the graph's own stream (firing-probability
    /// estimation); everything else goes through `edge_present`.
    #[inline]
    pub(crate) fn edge_present_seeded(&self, edge_seed: u64, source: u32, target: u32) -> bool {
        let g = self.kernel.eval_dist2(sq_dist(
            self.positions.point(source as usize),
            self.positions.point(target as usize),
        ));
        unit_f64(mix3(edge_seed, source as u64, target as u64)) < g
    }

    #[inline]
    pub(crate) fn edge_stream_seed(&self) -> u64 {
        self.edge_seed
    }

    /// Synaptic input to `target` from the active set: the number of
    /// realized edges `(y, target)` over active `y`. With a cutoff radius,
    /// pairs farther than the cutoff are counted as absent without being
    /// queried.
    pub fn in_degree_from(&self, target: u32, active: &ActiveSet, cutoff: Option<f64>) -> Result<u32> {
        self.check_id(target)?;
        if let Some(r) = cutoff {
            if !(r >= 0.0) {
                return Err(Error::invalid("cutoff", format!("must be >= 0, got {r}")));
            }
        }
        let tp = self.positions.point(target as usize);
        let r2 = cutoff.map(|r| r * r);
        let mut count = 0;
        for &y in active.members() {
            self.check_id(y)?;
            if let Some(r2) = r2 {
                if sq_dist(self.positions.point(y as usize), tp) > r2 {
                    continue;
                }
            }
            if self.edge_present_seeded(self.edge_seed, y, target) {
                count += 1;
            }
        }
        Ok(count)
    }

    /// Truncation radius with per-step expected dropped-edge budget
    /// `epsilon`: the distance beyond which the kernel falls below
    /// `epsilon / (n k)`, so the expected number of dropped true edges per
    /// step is at most `epsilon`.
    pub fn cutoff_radius(&self, k: usize, epsilon: f64) -> f64 {
        let v = (epsilon / (self.n as f64 * k.max(1) as f64)).min(1.0);
        self.kernel.radius_for_value(v)
    }

    pub fn export_positions(&self) -> PositionsFile {
        PositionsFile {
            n: self.n,
            d: self.dim,
            sigma: self.kernel.scale(),
            graph_seed: self.graph_seed,
            kernel: self.kernel,
            coords: self.positions.as_flat().to_vec(),
        }
    }

    pub fn from_export(file: &PositionsFile) -> Result<Self> {
        let positions = PointSet::from_flat(file.d, file.coords.clone())?;
        if positions.len() != file.n {
            return Err(Error::invalid(
                "coords",
                format!("coordinate array holds {} points, header says {}", positions.len(), file.n),
            ));
        }
        Self::from_positions(positions, file.kernel, file.graph_seed)
    }
}

/// On-disk vertex layout for cross-implementation replay: header plus a
/// flat row-major coordinate array.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PositionsFile {
    pub n: usize,
    pub d: usize,
    pub sigma: f64,
    pub graph_seed: u64,
    pub kernel: KernelSpec,
    pub coords: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn sample_vertices_deterministic() {
        let a = sample_vertices(1, 1, 42).unwrap();
        let b = sample_vertices(1, 1, 42).unwrap();
        assert_eq!(a.as_flat(), b.as_flat());
        let big_a = sample_vertices(1000, 3, 7).unwrap();
        let big_b = sample_vertices(1000, 3, 7).unwrap();
        assert_eq!(big_a.as_flat(), big_b.as_flat());
    }

    #[test]
    fn sample_vertices_rejects_zero() {
        assert!(sample_vertices(0, 1, 1).is_err());
        assert!(sample_vertices(1, 0, 1).is_err());
    }

    /// Kolmogorov-Smirnov statistic against the uniform CDF.
    fn ks_uniform(mut xs: Vec<f64>) -> f64 {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        let mut d = 0.0f64;
        for (i, &x) in xs.iter().enumerate() {
            let hi = (i + 1) as f64 / n - x;
            let lo = x - i as f64 / n;
            d = d.max(hi.max(lo));
        }
        d
    }

    #[test]
    fn sample_vertices_uniform_ks() {
        let ps = sample_vertices(100_000, 1, 9).unwrap();
        let d = ks_uniform(ps.as_flat().to_vec());
        assert!(d < 0.01, "KS statistic {d}");

        let ps2 = sample_vertices(100_000, 2, 10).unwrap();
        for axis in 0..2 {
            let coords: Vec<f64> = (0..ps2.len()).map(|i| ps2.point(i)[axis]).collect();
            let d = ks_uniform(coords);
            assert!(d < 0.01, "axis {axis} KS statistic {d}");
        }
    }

    #[test]
    fn edge_queries_replay_in_any_order() {
        let g = GraphModel::new(50, 1, 0.1, 3).unwrap();
        let first = g.edge_present(4, 17).unwrap();
        let mut rng = SplitMix64::new(12);
        let mut pairs: Vec<(u32, u32)> = (0..50u32)
            .flat_map(|s| (0..50u32).map(move |t| (s, t)))
            .collect();
        let mut reference: Vec<bool> = pairs
            .iter()
            .map(|&(s, t)| g.edge_present(s, t).unwrap())
            .collect();
        for _ in 0..3 {
            let mut idx: Vec<usize> = (0..pairs.len()).collect();
            rng.shuffle(&mut idx);
            for &i in &idx {
                let (s, t) = pairs[i];
                assert_eq!(g.edge_present(s, t).unwrap(), reference[i]);
            }
        }
        // and the specific pair many times
        for _ in 0..1000 {
            assert_eq!(g.edge_present(4, 17).unwrap(), first);
        }
        pairs.clear();
        reference.clear();
    }

    #[test]
    fn coincident_vertices_always_connect() {
        let mut ps = PointSet::new(1);
        ps.push(&[0.5]);
        ps.push(&[0.5]);
        let g = GraphModel::from_positions(ps, KernelSpec::gaussian(0.05).unwrap(), 11).unwrap();
        for seed in 0..1000u64 {
            assert!(g.edge_present_seeded(seed, 0, 1));
            assert!(g.edge_present_seeded(seed, 1, 0));
        }
    }

    #[test]
    fn edge_out_of_range() {
        let g = GraphModel::new(10, 1, 0.1, 3).unwrap();
        assert!(matches!(
            g.edge_present(0, 10),
            Err(Error::VertexOutOfRange { .. })
        ));
    }

    #[test]
    fn edge_frequency_at_half_probability() {
        // two vertices at the kernel half-value distance; acceptance
        // fraction over 10^5 fresh edge streams should be 0.5 +- 0.01
        let sigma = 0.1f64;
        let d = sigma * (2.0 * 2f64.ln()).sqrt();
        let mut ps = PointSet::new(1);
        ps.push(&[0.2]);
        ps.push(&[0.2 + d]);
        let g = GraphModel::from_positions(ps, KernelSpec::gaussian(sigma).unwrap(), 0).unwrap();
        let trials = 100_000;
        let mut hits = 0;
        for seed in 0..trials {
            if g.edge_present_seeded(seed, 0, 1) {
                hits += 1;
            }
        }
        let freq = hits as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn edge_frequency_matches_kernel_over_distance_grid() {
        let sigma = 0.05f64;
        let kernel = KernelSpec::gaussian(sigma).unwrap();
        let trials = 40_000u64;
        for mult in [0.5, 1.0, 2.0, 3.0] {
            let d = sigma * mult;
            let mut ps = PointSet::new(1);
            ps.push(&[0.1]);
            ps.push(&[0.1 + d]);
            let g = GraphModel::from_positions(ps.clone(), kernel, 0).unwrap();
            let mut hits = 0;
            for seed in 0..trials {
                if g.edge_present_seeded(seed, 0, 1) {
                    hits += 1;
                }
            }
            let p = kernel.eval_dist(d);
            let freq = hits as f64 / trials as f64;
            let sd = (p * (1.0 - p) / trials as f64).sqrt();
            assert!(
                (freq - p).abs() <= 3.0 * sd + 1e-9,
                "distance {d}: freq {freq} vs kernel {p}"
            );
        }
    }

    #[test]
    fn forward_and_reverse_edges_independent() {
        // over many edge streams, P(both directions) ~= P(fwd) * P(rev)
        let sigma = 0.1f64;
        let mut ps = PointSet::new(1);
        ps.push(&[0.4]);
        ps.push(&[0.4 + sigma]); // g = e^{-1/2} ~ 0.6065
        let g = GraphModel::from_positions(ps, KernelSpec::gaussian(sigma).unwrap(), 0).unwrap();
        let trials = 100_000u64;
        let (mut fwd, mut rev, mut both) = (0u64, 0u64, 0u64);
        for seed in 0..trials {
            let f = g.edge_present_seeded(seed, 0, 1);
            let r = g.edge_present_seeded(seed, 1, 0);
            fwd += f as u64;
            rev += r as u64;
            both += (f && r) as u64;
        }
        let pf = fwd as f64 / trials as f64;
        let pr = rev as f64 / trials as f64;
        let pb = both as f64 / trials as f64;
        let expect = pf * pr;
        let sd = (expect * (1.0 - expect) / trials as f64).sqrt();
        assert!((pb - expect).abs() < 4.0 * sd, "joint {pb} vs product {expect}");
    }

    #[test]
    fn in_degree_empty_and_coincident() {
        let g = GraphModel::new(20, 1, 0.1, 5).unwrap();
        let empty = ActiveSet::from_members(0, vec![]).unwrap();
        assert_eq!(g.in_degree_from(3, &empty, None).unwrap(), 0);
        // target == active member: the self pair has distance 0, g = 1
        let active = ActiveSet::from_members(0, vec![7]).unwrap();
        assert_eq!(g.in_degree_from(7, &active, None).unwrap(), 1);
    }

    #[test]
    fn in_degree_matches_dense_adjacency() {
        let g = GraphModel::new(50, 1, 0.12, 21).unwrap();
        let members: Vec<u32> = vec![1, 4, 9, 13, 22, 28, 31, 40, 44, 49];
        let active = ActiveSet::from_members(0, members.clone()).unwrap();
        // dense oracle: materialize the full adjacency matrix column sums
        let mut adj = vec![vec![false; 50]; 50];
        for s in 0..50u32 {
            for t in 0..50u32 {
                adj[s as usize][t as usize] = g.edge_present(s, t).unwrap();
            }
        }
        for t in 0..50u32 {
            let want: u32 = members.iter().map(|&y| adj[y as usize][t as usize] as u32).sum();
            assert_eq!(g.in_degree_from(t, &active, None).unwrap(), want);
        }
    }

    #[test]
    fn cutoff_radius_solves_kernel_tail() {
        let g = GraphModel::new(1000, 1, 0.05, 1).unwrap();
        let k = 30;
        let eps = 1e-6;
        let r = g.cutoff_radius(k, eps);
        let v = g.kernel().eval_dist(r);
        let target = eps / (1000.0 * 30.0);
        assert!((v - target).abs() <= 1e-12 + 1e-9 * target, "kernel at cutoff {v} vs {target}");
    }

    #[test]
    fn export_positions_roundtrip() {
        let g = GraphModel::new(64, 2, 0.2, 77).unwrap();
        let file = g.export_positions();
        let json = serde_json::to_string(&file).unwrap();
        let back: PositionsFile = serde_json::from_str(&json).unwrap();
        let g2 = GraphModel::from_export(&back).unwrap();
        assert_eq!(g.positions().as_flat(), g2.positions().as_flat());
        // edge oracle replays identically
        for s in 0..64u32 {
            for t in 0..64u32 {
                assert_eq!(g.edge_present(s, t).unwrap(), g2.edge_present(s, t).unwrap());
            }
        }
    }

    #[test]
    fn vertex_density_covers_small_windows() {
        // every window of width sqrt(d/2)*(6 ln n / n)^(1/d) contains a
        // vertex; sweep 10^4 random windows at n = 10^6, d = 1
        let n = 1_000_000usize;
        let ps = sample_vertices(n, 1, 123).unwrap();
        let mut xs: Vec<f64> = ps.as_flat().to_vec();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let width = (0.5f64).sqrt() * 6.0 * (n as f64).ln() / n as f64;
        let mut rng = SplitMix64::new(9);
        for _ in 0..10_000 {
            let lo = rng.next_f64() * (1.0 - width);
            let hi = lo + width;
            let i = xs.partition_point(|&x| x < lo);
            assert!(i < xs.len() && xs[i] <= hi, "empty window [{lo}, {hi}]");
        }
    }
}
