use kcap_core::engine::{run, RunConfig};
use kcap_core::graph::GraphModel;
use std::time::Instant;

fn main() {
    for k in [50usize, 100, 200] {
        let n = k * k * k;
        let sigma = 1.0 / k as f64;
        for seed in 0..3u64 {
            let t0 = Instant::now();
            let g = GraphModel::new(n, 1, sigma, seed).unwrap();
            let built = t0.elapsed();
            let cfg = RunConfig::new(k, seed + 1000, seed + 2000, 40);
            let trace = run(&g, &cfg).unwrap();
            let last = trace.final_record().unwrap();
            let t1 = &trace.records[1];
            let ratio = last.support_radius / (sigma * ((k as f64).ln() / k as f64).sqrt());
            println!(
                "k {k} n {n} seed {seed}: build {:.1?} run {:.1?} steps {} t1_clusters {} C0 {} final_clusters {} support {:.6} ratio {:.2} wall1 {:.0}ms",
                built, t0.elapsed(), trace.len()-1, t1.n_clusters,
                trace.thresholds()[0], last.n_clusters, last.support_radius, ratio,
                trace.records[1].wall_ms
            );
        }
    }
}
