//! Points in the unit hypercube, distance kernels, smallest enclosing
//! balls, and a uniform-grid spatial index.
//!
//! All types are immutable after construction and safe to share across
//! threads. Distances are plain Euclidean; the cube boundary is hard (no
//! wrap-around).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// A position in `[0,1]^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("coords", "dimension must be at least 1"));
        }
        for (i, &c) in coords.iter().enumerate() {
            if !c.is_finite() || !(0.0..=1.0).contains(&c) {
                return Err(Error::invalid(
                    "coords",
                    format!("coordinate {i} = {c} outside [0,1]"),
                ));
            }
        }
        Ok(Point { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// Flat, cache-friendly storage for many d-dimensional points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    dim: usize,
    data: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize) -> Self {
        PointSet {
            dim,
            data: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, n: usize) -> Self {
        PointSet {
            dim,
            data: Vec::with_capacity(dim * n),
        }
    }

    /// Wrap a flat row-major coordinate array.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "dimension must be at least 1"));
        }
        if data.len() % dim != 0 {
            return Err(Error::invalid(
                "data",
                format!("flat length {} not a multiple of dim {dim}", data.len()),
            ));
        }
        Ok(PointSet { dim, data })
    }

    pub fn from_points(points: &[Point]) -> Result<Self> {
        let dim = points.first().map(Point::dim).unwrap_or(1);
        let mut set = PointSet::with_capacity(dim, points.len());
        for p in points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: p.dim(),
                });
            }
            set.push(p.coords());
        }
        Ok(set)
    }

    pub fn push(&mut self, coords: &[f64]) {
        debug_assert_eq!(coords.len(), self.dim);
        self.data.extend_from_slice(coords);
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Copy out the points with the given indices.
    pub fn subset(&self, ids: &[u32]) -> PointSet {
        let mut out = PointSet::with_capacity(self.dim, ids.len());
        for &id in ids {
            out.push(self.point(id as usize));
        }
        out
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

/// Squared Euclidean distance.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

/// Edge-probability / influence kernel, a decreasing function of distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelSpec {
    /// `g(u) = exp(-u^2 / 2 sigma^2)`, values in (0, 1].
    Gaussian { sigma: f64 },
    /// `g(u) = 1 / (c + u^2)`, clamped to at most 1 when used as an edge
    /// probability.
    InverseSquare { c: f64 },
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
        }
        Ok(KernelSpec::Gaussian { sigma })
    }

    pub fn inverse_square(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::invalid("c", format!("must be positive, got {c}")));
        }
        Ok(KernelSpec::InverseSquare { c })
    }

    /// Kernel value at squared distance `d2` (probability semantics: the
    /// inverse-square branch is clamped to 1).
    #[inline]
    pub fn eval_dist2(&self, d2: f64) -> f64 {
        match *self {
            KernelSpec::Gaussian { sigma } => (-d2 / (2.0 * sigma * sigma)).exp(),
            KernelSpec::InverseSquare { c } => (1.0 / (c + d2)).min(1.0),
        }
    }

    #[inline]
    pub fn eval_dist(&self, d: f64) -> f64 {
        self.eval_dist2(d * d)
    }

    /// Characteristic length scale: `sigma`, or `sqrt(c)`.
    pub fn scale(&self) -> f64 {
        match *self {
            KernelSpec::Gaussian { sigma } => sigma,
            KernelSpec::InverseSquare { c } => c.sqrt(),
        }
    }

    /// Distance at which the (unclamped) kernel drops to `v`; used to pick
    /// truncation radii. Returns 0 when `v >= g(0)`.
    pub fn radius_for_value(&self, v: f64) -> f64 {
        match *self {
            KernelSpec::Gaussian { sigma } => {
                if v >= 1.0 {
                    0.0
                } else {
                    sigma * (2.0 * (1.0 / v).ln()).sqrt()
                }
            }
            KernelSpec::InverseSquare { c } => {
                let r2 = 1.0 / v - c;
                if r2 <= 0.0 {
                    0.0
                } else {
                    r2.sqrt()
                }
            }
        }
    }
}

/// Kernel value between two points. Errors on dimension mismatch.
pub fn kernel_eval(kernel: &KernelSpec, x: &Point, y: &Point) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    Ok(kernel.eval_dist2(sq_dist(x.coords(), y.coords())))
}

/// A ball given by center and radius. The radius may extend past the cube
/// boundary; the center of a minimal enclosing ball always lies in the
/// convex hull of its points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        sq_dist(&self.center, p).sqrt() <= self.radius + tol
    }
}

/// Smallest enclosing ball of a non-empty point set.
///
/// Randomized move-to-front recursion over support sets of at most d+1
/// points; the support solve works in any dimension, so the result is the
/// exact minimum (up to floating-point rounding) for all d.
pub fn enclosing_ball(points: &PointSet) -> Result<Ball> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let n = points.len();
    let dim = points.dim();
    let mut order: Vec<usize> = (0..n).collect();
    // fixed-seed shuffle: expected linear time, still fully deterministic
    let mut rng = SplitMix64::new(0x6d65_6200_0000_0000 ^ n as u64);
    rng.shuffle(&mut order);

    let mut support: Vec<usize> = Vec::with_capacity(dim + 1);
    let ball = welzl(points, &order, n, &mut support)
        .unwrap_or_else(|| Ball {
            center: points.point(0).to_vec(),
            radius: 0.0,
        });
    Ok(ball)
}

fn welzl(points: &PointSet, order: &[usize], n: usize, support: &mut Vec<usize>) -> Option<Ball> {
    if n == 0 || support.len() == points.dim() + 1 {
        return ball_of_support(points, support);
    }
    let p = order[n - 1];
    let ball = welzl(points, order, n - 1, support);
    if let Some(ref b) = ball {
        if b.contains(points.point(p), b.radius * 1e-12 + 1e-14) {
            return ball;
        }
    }
    support.push(p);
    let ball = welzl(points, order, n - 1, support);
    support.pop();
    ball
}

/// Ball through all support points (on its boundary). Solves the Gram
/// system for the circumcenter within the affine hull of the support;
/// returns None for empty or degenerate (affinely dependent) supports.
fn ball_of_support(points: &PointSet, support: &[usize]) -> Option<Ball> {
    let m = support.len();
    if m == 0 {
        return None;
    }
    let dim = points.dim();
    let p0 = points.point(support[0]);
    if m == 1 {
        return Some(Ball {
            center: p0.to_vec(),
            radius: 0.0,
        });
    }
    // basis vectors v_i = p_i - p0, unknowns lambda with
    //   2 sum_j lambda_j (v_i . v_j) = |v_i|^2
    let k = m - 1;
    let mut basis = vec![0.0; k * dim];
    for i in 0..k {
        let pi = points.point(support[i + 1]);
        for j in 0..dim {
            basis[i * dim + j] = pi[j] - p0[j];
        }
    }
    let mut a = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            let mut dot = 0.0;
            for t in 0..dim {
                dot += basis[i * dim + t] * basis[j * dim + t];
            }
            a[i * k + j] = 2.0 * dot;
        }
        rhs[i] = {
            let mut s = 0.0;
            for t in 0..dim {
                s += basis[i * dim + t] * basis[i * dim + t];
            }
            s
        };
    }
    let lambda = solve_linear(&mut a, &mut rhs, k)?;
    let mut center = p0.to_vec();
    for i in 0..k {
        for t in 0..dim {
            center[t] += lambda[i] * basis[i * dim + t];
        }
    }
    let radius = sq_dist(&center, p0).sqrt();
    Some(Ball { center, radius })
}

/// Gaussian elimination with partial pivoting; None if near-singular.
fn solve_linear(a: &mut [f64], rhs: &mut [f64], k: usize) -> Option<Vec<f64>> {
    let mut scale = 0.0f64;
    for v in a.iter() {
        scale = scale.max(v.abs());
    }
    if scale == 0.0 {
        return None;
    }
    for col in 0..k {
        let mut pivot = col;
        for row in col + 1..k {
            if a[row * k + col].abs() > a[pivot * k + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * k + col].abs() < 1e-12 * scale {
            return None;
        }
        if pivot != col {
            for t in 0..k {
                a.swap(col * k + t, pivot * k + t);
            }
            rhs.swap(col, pivot);
        }
        let inv = 1.0 / a[col * k + col];
        for row in col + 1..k {
            let f = a[row * k + col] * inv;
            if f == 0.0 {
                continue;
            }
            for t in col..k {
                a[row * k + t] -= f * a[col * k + t];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; k];
    for col in (0..k).rev() {
        let mut s = rhs[col];
        for t in col + 1..k {
            s -= a[col * k + t] * x[t];
        }
        x[col] = s / a[col * k + col];
    }
    Some(x)
}

/// Uniform-grid spatial index over a point set. Each point lives in the
/// bucket `floor(coords / cell_size)` componentwise. Queries over-return
/// (by design); callers filter by exact distance.
#[derive(Clone, Debug)]
pub struct GridIndex {
    cell_size: f64,
    dim: usize,
    buckets: HashMap<Vec<i64>, Vec<u32>>,
}

impl GridIndex {
    pub fn build(points: &PointSet, cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(Error::invalid(
                "cell_size",
                format!("must be positive, got {cell_size}"),
            ));
        }
        let dim = points.dim();
        let mut buckets: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
        let mut key = vec![0i64; dim];
        for (i, p) in points.iter().enumerate() {
            for (t, &c) in p.iter().enumerate() {
                key[t] = (c / cell_size).floor() as i64;
            }
            buckets.entry(key.clone()).or_default().push(i as u32);
        }
        Ok(GridIndex {
            cell_size,
            dim,
            buckets,
        })
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    pub fn indexed_points(&self) -> usize {
        self.buckets.values().map(Vec::len).sum()
    }

    pub fn cell_of(&self, p: &[f64]) -> Vec<i64> {
        p.iter()
            .map(|&c| (c / self.cell_size).floor() as i64)
            .collect()
    }

    /// Squared distance from `center` to the closest point of a cell.
    fn cell_min_sq_dist(&self, cell: &[i64], center: &[f64]) -> f64 {
        let s = self.cell_size;
        let mut d2 = 0.0;
        for t in 0..self.dim {
            let lo = cell[t] as f64 * s;
            let hi = lo + s;
            let d = if center[t] < lo {
                lo - center[t]
            } else if center[t] > hi {
                center[t] - hi
            } else {
                0.0
            };
            d2 += d * d;
        }
        d2
    }

    /// Ids of all indexed points in cells intersecting the ball
    /// `(center, radius)`. A superset of the points within `radius`; no
    /// returned point is farther than `radius + cell_size * sqrt(d)`.
    /// Order is unspecified.
    pub fn query(&self, center: &[f64], radius: f64) -> Vec<u32> {
        let mut out = Vec::new();
        self.for_each_cell_intersecting(center, radius, |key| {
            if let Some(ids) = self.buckets.get(key) {
                out.extend_from_slice(ids);
            }
        });
        out
    }

    /// Enumerate cell keys intersecting the ball (existing buckets only
    /// when the candidate box is larger than the bucket table).
    pub(crate) fn cells_intersecting(&self, center: &[f64], radius: f64) -> Vec<Vec<i64>> {
        let mut keys = Vec::new();
        self.for_each_cell_intersecting(center, radius, |key| {
            if self.buckets.contains_key(key) {
                keys.push(key.to_vec());
            }
        });
        keys
    }

    pub(crate) fn bucket(&self, key: &[i64]) -> Option<&[u32]> {
        self.buckets.get(key).map(Vec::as_slice)
    }

    fn for_each_cell_intersecting(&self, center: &[f64], radius: f64, mut visit: impl FnMut(&[i64])) {
        debug_assert_eq!(center.len(), self.dim);
        let r = radius.max(0.0);
        let r2 = r * r * (1.0 + 1e-12) + 1e-300;
        let s = self.cell_size;
        let lo: Vec<i64> = center.iter().map(|&c| ((c - r) / s).floor() as i64).collect();
        let hi: Vec<i64> = center.iter().map(|&c| ((c + r) / s).floor() as i64).collect();
        let mut box_cells = 1u128;
        for t in 0..self.dim {
            box_cells = box_cells.saturating_mul((hi[t] - lo[t] + 1) as u128);
        }
        if box_cells > self.buckets.len() as u128 {
            // the box covers more cells than exist: scan the bucket table
            for key in self.buckets.keys() {
                let inside = (0..self.dim).all(|t| key[t] >= lo[t] && key[t] <= hi[t]);
                if inside && self.cell_min_sq_dist(key, center) <= r2 {
                    visit(key);
                }
            }
            return;
        }
        // odometer over the bounding box
        let mut key = lo.clone();
        loop {
            if self.cell_min_sq_dist(&key, center) <= r2 {
                visit(&key);
            }
            let mut t = 0;
            loop {
                if t == self.dim {
                    return;
                }
                key[t] += 1;
                if key[t] <= hi[t] {
                    break;
                }
                key[t] = lo[t];
                t += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn pset(dim: usize, coords: &[f64]) -> PointSet {
        PointSet::from_flat(dim, coords.to_vec()).unwrap()
    }

    #[test]
    fn kernel_identity_case() {
        let k = KernelSpec::gaussian(0.1).unwrap();
        assert_eq!(k.eval_dist(0.0), 1.0);
    }

    #[test]
    fn kernel_closed_form_values() {
        let k = KernelSpec::gaussian(0.1).unwrap();
        // distance sigma: exp(-1/2)
        assert!((k.eval_dist(0.1) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((k.eval_dist(0.1) - 0.606531).abs() < 1e-6);
        // half-value distance sigma*sqrt(2 ln 2)
        let d = 0.1 * (2.0 * 2f64.ln()).sqrt();
        assert!((k.eval_dist(d) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kernel_inverse_square_clamped() {
        let k = KernelSpec::inverse_square(0.5).unwrap();
        assert_eq!(k.eval_dist(0.0), 1.0); // 1/0.5 = 2 clamped
        assert!((k.eval_dist(1.0) - 1.0 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn kernel_eval_dimension_mismatch() {
        let k = KernelSpec::gaussian(0.1).unwrap();
        let x = Point::new(vec![0.5]).unwrap();
        let y = Point::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            kernel_eval(&k, &x, &y),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kernel_symmetric_and_decreasing() {
        let kernels = [
            KernelSpec::gaussian(0.07).unwrap(),
            KernelSpec::inverse_square(1.0).unwrap(),
        ];
        let mut rng = SplitMix64::new(11);
        for kernel in kernels {
            for _ in 0..200 {
                let x = Point::new(vec![rng.next_f64(), rng.next_f64()]).unwrap();
                let y = Point::new(vec![rng.next_f64(), rng.next_f64()]).unwrap();
                let g_xy = kernel_eval(&kernel, &x, &y).unwrap();
                let g_yx = kernel_eval(&kernel, &y, &x).unwrap();
                assert_eq!(g_xy, g_yx);
            }
            // strictly decreasing in distance
            let mut prev = kernel.eval_dist(0.0);
            for i in 1..100 {
                let g = kernel.eval_dist(i as f64 * 0.01);
                assert!(g < prev, "kernel not strictly decreasing at {i}");
                prev = g;
            }
        }
    }

    #[test]
    fn radius_for_value_inverts_kernel() {
        for kernel in [
            KernelSpec::gaussian(0.02).unwrap(),
            KernelSpec::inverse_square(0.3).unwrap(),
        ] {
            for v in [0.9, 0.5, 1e-3, 1e-9] {
                let r = kernel.radius_for_value(v);
                if r > 0.0 {
                    assert!((kernel.eval_dist(r) - v).abs() <= 1e-9 * v.max(1e-12));
                }
            }
        }
    }

    #[test]
    fn enclosing_ball_degenerate_and_pairs() {
        let single = pset(2, &[0.3, 0.7]);
        let b = enclosing_ball(&single).unwrap();
        assert_eq!(b.radius, 0.0);
        assert_eq!(b.center, vec![0.3, 0.7]);

        // two points at distance 0.4 -> radius 0.2 at the midpoint
        let two = pset(2, &[0.1, 0.5, 0.5, 0.5]);
        let b = enclosing_ball(&two).unwrap();
        assert!((b.radius - 0.2).abs() < 1e-12);
        assert!((b.center[0] - 0.3).abs() < 1e-12);
        assert!((b.center[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn enclosing_ball_equilateral_triangle() {
        let h = 3f64.sqrt() / 2.0;
        let tri = pset(2, &[0.0, 0.0, 1.0, 0.0, 0.5, h]);
        let b = enclosing_ball(&tri).unwrap();
        assert!((b.radius - 1.0 / 3f64.sqrt()).abs() < 1e-12, "r = {}", b.radius);
    }

    #[test]
    fn enclosing_ball_contains_all_points() {
        let mut rng = SplitMix64::new(2024);
        for dim in [1usize, 2, 3, 5] {
            for trial in 0..40 {
                let n = 1 + (rng.below(40) as usize);
                let mut ps = PointSet::with_capacity(dim, n);
                let mut buf = vec![0.0; dim];
                for _ in 0..n {
                    for c in buf.iter_mut() {
                        *c = rng.next_f64();
                    }
                    ps.push(&buf);
                }
                let b = enclosing_ball(&ps).unwrap();
                for p in ps.iter() {
                    assert!(
                        b.contains(p, 1e-12),
                        "dim {dim} trial {trial}: point outside ball"
                    );
                }
            }
        }
    }

    /// Independent oracle: classic determinant-form circumcircle plus
    /// diameter balls, minimized over all 2- and 3-point subsets (d=2).
    fn circumcircle_2d(a: &[f64], b: &[f64], c: &[f64]) -> Option<Ball> {
        let d = 2.0
            * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
        if d.abs() < 1e-14 {
            return None;
        }
        let na = a[0] * a[0] + a[1] * a[1];
        let nb = b[0] * b[0] + b[1] * b[1];
        let nc = c[0] * c[0] + c[1] * c[1];
        let ux = (na * (b[1] - c[1]) + nb * (c[1] - a[1]) + nc * (a[1] - b[1])) / d;
        let uy = (na * (c[0] - b[0]) + nb * (a[0] - c[0]) + nc * (b[0] - a[0])) / d;
        let center = vec![ux, uy];
        let radius = sq_dist(&center, a).sqrt();
        Some(Ball { center, radius })
    }

    fn brute_force_radius_2d(ps: &PointSet) -> f64 {
        let n = ps.len();
        let contains_all = |b: &Ball| ps.iter().all(|p| b.contains(p, 1e-12));
        let mut best = f64::INFINITY;
        if n == 1 {
            return 0.0;
        }
        for i in 0..n {
            for j in i + 1..n {
                let (pi, pj) = (ps.point(i), ps.point(j));
                let diameter = Ball {
                    center: vec![(pi[0] + pj[0]) / 2.0, (pi[1] + pj[1]) / 2.0],
                    radius: sq_dist(pi, pj).sqrt() / 2.0,
                };
                if contains_all(&diameter) {
                    best = best.min(diameter.radius);
                }
                for k in j + 1..n {
                    if let Some(b) = circumcircle_2d(pi, pj, ps.point(k)) {
                        if contains_all(&b) {
                            best = best.min(b.radius);
                        }
                    }
                }
            }
        }
        best
    }

    #[test]
    fn enclosing_ball_matches_brute_force_2d() {
        let mut rng = SplitMix64::new(77);
        for _ in 0..60 {
            let n = 2 + rng.below(7) as usize; // up to 8 points
            let mut ps = PointSet::with_capacity(2, n);
            for _ in 0..n {
                ps.push(&[rng.next_f64(), rng.next_f64()]);
            }
            let b = enclosing_ball(&ps).unwrap();
            let r = brute_force_radius_2d(&ps);
            assert!(
                (b.radius - r).abs() < 1e-9,
                "welzl {} vs brute force {}",
                b.radius,
                r
            );
        }
    }

    #[test]
    fn grid_build_empty_and_floor_rule() {
        let empty = PointSet::new(1);
        let g = GridIndex::build(&empty, 0.5).unwrap();
        assert_eq!(g.bucket_count(), 0);
        assert!(g.query(&[0.5], 10.0).is_empty());

        let one = pset(1, &[0.55]);
        let g = GridIndex::build(&one, 0.5).unwrap();
        assert_eq!(g.bucket(&[1]), Some(&[0u32][..]));
    }

    #[test]
    fn grid_build_rejects_bad_cell() {
        let one = pset(1, &[0.5]);
        assert!(GridIndex::build(&one, 0.0).is_err());
        assert!(GridIndex::build(&one, -1.0).is_err());
    }

    #[test]
    fn grid_partitions_all_points() {
        let mut rng = SplitMix64::new(5);
        let mut ps = PointSet::with_capacity(1, 1000);
        for _ in 0..1000 {
            ps.push(&[rng.next_f64()]);
        }
        let g = GridIndex::build(&ps, 0.1).unwrap();
        assert_eq!(g.indexed_points(), 1000);
    }

    #[test]
    fn grid_query_basics() {
        let ps = pset(1, &[0.1, 0.5, 0.9]);
        let g = GridIndex::build(&ps, 0.25).unwrap();
        // radius 0 at an indexed point includes that point
        assert!(g.query(&[0.5], 0.0).contains(&1));
        // radius >= sqrt(d) returns everything
        let mut all = g.query(&[0.0], 1.0);
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2]);
        // exact-distance filtering leaves only the point at 0.5
        let hits: Vec<u32> = g
            .query(&[0.5], 0.2)
            .into_iter()
            .filter(|&i| sq_dist(ps.point(i as usize), &[0.5]).sqrt() <= 0.2)
            .collect();
        assert_eq!(hits, vec![1]);
    }

    #[test]
    fn grid_query_superset_and_distance_cap() {
        let mut rng = SplitMix64::new(31);
        for dim in [1usize, 2, 3] {
            let n = 400;
            let mut ps = PointSet::with_capacity(dim, n);
            let mut buf = vec![0.0; dim];
            for _ in 0..n {
                for c in buf.iter_mut() {
                    *c = rng.next_f64();
                }
                ps.push(&buf);
            }
            let cell = 0.13;
            let g = GridIndex::build(&ps, cell).unwrap();
            for _ in 0..50 {
                for c in buf.iter_mut() {
                    *c = rng.next_f64();
                }
                let radius = rng.next_f64() * 0.4;
                let got = g.query(&buf, radius);
                // superset of the linear scan
                let want: Vec<u32> = (0..n as u32)
                    .filter(|&i| sq_dist(ps.point(i as usize), &buf) <= radius * radius)
                    .collect();
                for w in &want {
                    assert!(got.contains(w), "missing id {w}");
                }
                // and nothing farther than radius + cell*sqrt(d)
                let cap = radius + cell * (dim as f64).sqrt();
                for &i in &got {
                    let d = sq_dist(ps.point(i as usize), &buf).sqrt();
                    assert!(d <= cap + 1e-12, "over-returned at distance {d} > {cap}");
                }
            }
        }
    }

    #[test]
    fn grid_query_matches_linear_scan_after_filter() {
        let mut rng = SplitMix64::new(404);
        for _ in 0..30 {
            let n = 200;
            let mut ps = PointSet::with_capacity(2, n);
            for _ in 0..n {
                ps.push(&[rng.next_f64(), rng.next_f64()]);
            }
            let g = GridIndex::build(&ps, 0.09).unwrap();
            let center = [rng.next_f64(), rng.next_f64()];
            let radius = rng.next_f64() * 0.5;
            let mut got: Vec<u32> = g
                .query(&center, radius)
                .into_iter()
                .filter(|&i| sq_dist(ps.point(i as usize), &center) <= radius * radius)
                .collect();
            got.sort_unstable();
            got.dedup();
            let want: Vec<u32> = (0..n as u32)
                .filter(|&i| sq_dist(ps.point(i as usize), &center) <= radius * radius)
                .collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn point_validation() {
        assert!(Point::new(vec![]).is_err());
        assert!(Point::new(vec![1.1]).is_err());
        assert!(Point::new(vec![-0.01]).is_err());
        assert!(Point::new(vec![0.0, 1.0]).is_ok());
    }

    proptest::proptest! {
        /// grid query filtered by exact distance equals a linear scan,
        /// for arbitrary points, cell sizes, and query balls
        #[test]
        fn grid_query_equals_linear_scan(
            coords in proptest::collection::vec(0.0f64..=1.0, 2..120),
            cell in 0.01f64..0.7,
            cx in 0.0f64..=1.0,
            cy in 0.0f64..=1.0,
            radius in 0.0f64..1.5,
        ) {
            let n = coords.len() / 2;
            let ps = PointSet::from_flat(2, coords[..n * 2].to_vec()).unwrap();
            let g = GridIndex::build(&ps, cell).unwrap();
            let center = [cx, cy];
            let mut got: Vec<u32> = g
                .query(&center, radius)
                .into_iter()
                .filter(|&i| sq_dist(ps.point(i as usize), &center) <= radius * radius)
                .collect();
            got.sort_unstable();
            got.dedup();
            let want: Vec<u32> = (0..n as u32)
                .filter(|&i| sq_dist(ps.point(i as usize), &center) <= radius * radius)
                .collect();
            proptest::prop_assert_eq!(got, want);
        }

        /// the kernel is symmetric and strictly decreasing in distance
        #[test]
        fn kernel_symmetry_and_monotonicity(
            x in proptest::collection::vec(0.0f64..=1.0, 3),
            y in proptest::collection::vec(0.0f64..=1.0, 3),
            sigma in 0.01f64..2.0,
            c in 0.01f64..4.0,
        ) {
            for kernel in [KernelSpec::gaussian(sigma).unwrap(), KernelSpec::inverse_square(c).unwrap()] {
                let px = Point::new(x.clone()).unwrap();
                let py = Point::new(y.clone()).unwrap();
                let g_xy = kernel_eval(&kernel, &px, &py).unwrap();
                let g_yx = kernel_eval(&kernel, &py, &px).unwrap();
                proptest::prop_assert_eq!(g_xy, g_yx);
                proptest::prop_assert!((0.0..=1.0).contains(&g_xy));
                let d = sq_dist(&x, &y).sqrt();
                // strict decrease, away from the clamp plateau of the
                // inverse-square kernel and above f64 underflow
                let nearer = kernel.eval_dist(d * 0.5);
                if d > 1e-9 && g_xy > 0.0 && nearer < 1.0 {
                    proptest::prop_assert!(g_xy < nearer);
                }
            }
        }
    }
}
