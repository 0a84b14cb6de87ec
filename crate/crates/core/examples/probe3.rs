use kcap_core::engine::{ProcessState, RunConfig};
use kcap_core::graph::GraphModel;

fn main() {
    for (k, seeds) in [(200usize, vec![0u64, 1]), (50, vec![0, 1])] {
        let n = k * k * k;
        let sigma = 1.0 / k as f64;
        for seed in seeds {
            let g = GraphModel::new(n, 1, sigma, seed).unwrap();
            let cfg = RunConfig::new(k, seed + 1000, seed + 2000, 18);
            let mut st = ProcessState::new(&g, &cfg).unwrap();
            let mut line = format!("k {k} seed {seed} radii:");
            for _ in 0..18 {
                st.step().unwrap();
                let r = st.trace().records.last().unwrap();
                line.push_str(&format!(" {:.5}/{}", r.support_radius, r.n_clusters));
            }
            println!("{line}");
        }
    }
}
