use kcap_core::engine::ActiveSet;
use kcap_core::geometry::sq_dist;
use kcap_core::graph::GraphModel;

fn main() {
    let (n, k, sigma, epsilon) = (500usize, 20usize, 0.1f64, 3.0f64);
    let mut observed = 0u64;
    let mut analytic = 0.0f64;
    for trial in 0..400u64 {
        let graph = GraphModel::new(n, 1, sigma, 10_000 + trial).unwrap();
        let cutoff = graph.cutoff_radius(k, epsilon);
        let r2 = cutoff * cutoff;
        let active = ActiveSet::uniform(0, n, k, trial).unwrap();
        for &y in active.members() {
            let yp = graph.positions().point(y as usize);
            for x in 0..n as u32 {
                let d2 = sq_dist(graph.positions().point(x as usize), yp);
                if d2 > r2 {
                    analytic += graph.kernel().eval_dist2(d2);
                    observed += graph.edge_present(y, x).unwrap() as u64;
                }
            }
        }
    }
    println!("400 trials: observed {observed} analytic {analytic:.2} (sd {:.2})", analytic.sqrt());
}
