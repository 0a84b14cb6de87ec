use kcap_core::bounds::max_degree_estimate;
use kcap_core::graph::sample_vertices;

fn main() {
    let n = 100_000usize;
    let r = 1.0 / n as f64; // n r^d = 1
    let kn = max_degree_estimate(n as u64, r, 1).unwrap();
    let mut ratios = Vec::new();
    for seed in 0..20u64 {
        let ps = sample_vertices(n, 1, seed).unwrap();
        let mut xs: Vec<f64> = ps.as_flat().to_vec();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // max degree: neighbors within distance r (two-pointer over sorted)
        let mut max_deg = 0usize;
        let mut lo = 0usize;
        let mut hi = 0usize;
        for i in 0..n {
            while xs[i] - xs[lo] > r {
                lo += 1;
            }
            while hi + 1 < n && xs[hi + 1] - xs[i] <= r {
                hi += 1;
            }
            max_deg = max_deg.max(hi - lo); // excludes self
        }
        ratios.push(max_deg as f64 / kn);
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!("k_n = {kn:.4}; ratios min {:.3} median {:.3} max {:.3}", ratios[0], ratios[10], ratios[19]);
    println!("all: {:?}", ratios.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>());
}
