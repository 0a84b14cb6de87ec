use kcap_cli::config::SweepSpec;
use kcap_cli::sweep::{median, log_log_slope, run_sweep};
use std::time::Instant;

fn main() {
    let spec = SweepSpec::parse("k = 50,100,200\nseeds = 10\nbeta = 3\nd = 1\nmax_steps = 12\nparallelism = 2\nseed_base = 0\n").unwrap();
    let t0 = Instant::now();
    let results = run_sweep(&spec).unwrap();
    println!("sweep took {:?}, failures {}", t0.elapsed(), results.failures.len());
    for k in [50usize, 100, 200] {
        let t1: Vec<f64> = results.rows.iter().filter(|r| r.k == k).map(|r| r.t1_clusters as f64).collect();
        let ratios: Vec<f64> = results.rows.iter().filter(|r| r.k == k && r.final_clusters == 1)
            .map(|r| {
                let scale = r.sigma * ((k as f64).ln() / k as f64).sqrt();
                r.final_support_radius / scale
            }).collect();
        println!("k={k}: t1_clusters {:?} median {} ratio_range {:?}", t1, median(&t1), ratios);
    }
    let pts: Vec<(f64, f64)> = [50usize, 100, 200].iter().map(|&k| {
        let t1: Vec<f64> = results.rows.iter().filter(|r| r.k == k).map(|r| r.t1_clusters as f64).collect();
        (k as f64, median(&t1))
    }).collect();
    println!("slope = {:.4}", log_log_slope(&pts));
}
