use kcap_core::engine::{synaptic_input, ActiveSet, EdgeMode};
use kcap_core::geometry::sq_dist;
use kcap_core::graph::GraphModel;

fn main() {
    let (n, k, sigma, epsilon) = (500usize, 20usize, 0.1f64, 3.0f64);
    for trial in 0..40u64 {
        let graph = GraphModel::new(n, 1, sigma, 500 + trial).unwrap();
        let cutoff = graph.cutoff_radius(k, epsilon);
        let active = ActiveSet::uniform(0, n, k, trial).unwrap();
        let exact = synaptic_input(&graph, &active, None, EdgeMode::Exact).unwrap();
        let truncated = synaptic_input(&graph, &active, None, EdgeMode::Truncated { epsilon }).unwrap();
        let tmap: std::collections::HashMap<u32, u32> = truncated.into_iter().collect();
        for (id, f) in exact {
            let tf = tmap.get(&id).copied().unwrap_or(0);
            if tf < f {
                // find which active edges exist and their distances
                for &y in active.members() {
                    if graph.edge_present(y, id).unwrap() {
                        let d = sq_dist(graph.positions().point(y as usize), graph.positions().point(id as usize)).sqrt();
                        if d > cutoff {
                            println!("trial {trial}: drop pair ({y},{id}) d {d:.4} cutoff {cutoff:.4} BEYOND");
                        } else {
                            println!("trial {trial}: drop pair? ({y},{id}) d {d:.4} cutoff {cutoff:.4} WITHIN!! f {f} tf {tf}");
                        }
                    }
                }
            }
        }
    }
}
