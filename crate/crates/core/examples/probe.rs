use kcap_core::engine::{run, RunConfig};
use kcap_core::graph::GraphModel;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    for seed in 0..10u64 {
        let g = GraphModel::new(90_000, 1, 1.0 / 40.0, seed).unwrap();
        let cfg = RunConfig::new(40, seed + 100, seed + 200, 25);
        let trace = run(&g, &cfg).unwrap();
        let last = trace.final_record().unwrap();
        let thr = trace.thresholds();
        println!(
            "seed {seed}: steps {} first_single {:?} final_clusters {} support_r {:.5} sigma {:.5} C0 {} C_last {:?}",
            trace.len() - 1,
            trace.first_single_cluster_step(),
            last.n_clusters,
            last.support_radius,
            1.0 / 40.0,
            thr.first().unwrap(),
            thr.last()
        );
    }
    println!("total {:?}", t0.elapsed());
}
