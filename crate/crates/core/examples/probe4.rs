use kcap_core::continuous::{run_continuous, IntervalUnion};
use kcap_core::geometry::KernelSpec;
use kcap_core::rng::SplitMix64;
use std::time::Instant;

fn random_union(rng: &mut SplitMix64, pieces: usize, alpha: f64) -> IntervalUnion {
    // draw interval widths summing to alpha, placed at random without overlap
    loop {
        let mut cuts: Vec<f64> = (0..pieces - 1).map(|_| rng.next_f64() * alpha).collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut widths = Vec::with_capacity(pieces);
        let mut prev = 0.0;
        for &c in &cuts {
            widths.push(c - prev);
            prev = c;
        }
        widths.push(alpha - prev);
        if widths.iter().any(|&w| w < 1e-3) {
            continue;
        }
        // place into the unit interval: distribute the slack 1 - alpha as gaps
        let mut gaps: Vec<f64> = (0..=pieces).map(|_| rng.next_f64()).collect();
        let gsum: f64 = gaps.iter().sum();
        for g in gaps.iter_mut() {
            *g *= (1.0 - alpha) / gsum;
        }
        let mut raw = Vec::with_capacity(pieces);
        let mut x = 0.0;
        for i in 0..pieces {
            x += gaps[i];
            raw.push((x, x + widths[i]));
            x += widths[i];
        }
        if let Ok(u) = IntervalUnion::normalize(&raw) {
            if u.count() == pieces {
                return u;
            }
        }
    }
}

fn main() {
    let kernel = KernelSpec::gaussian(0.1).unwrap();
    let mut rng = SplitMix64::new(0x5eed);
    let t0 = Instant::now();
    let mut worst_steps = 0;
    let mut violations = 0;
    for trial in 0..20 {
        let pieces = 2 + (rng.next_u64() % 7) as usize; // up to 8
        let u = random_union(&mut rng, pieces, 0.1);
        let trace = run_continuous(&u, &kernel, 5000).unwrap();
        let conv = trace.converged_at;
        let final_u = trace.final_union().unwrap();
        let width_err = (final_u.measure() - 0.1).abs();
        let mut strict = true;
        for w in trace.steps.windows(2) {
            if w[0].n_intervals > 1 && !(w[1].potential < w[0].potential) {
                strict = false;
                violations += 1;
                println!("  trial {trial}: potential {} -> {} at t={} (n_int {})",
                         w[0].potential, w[1].potential, w[0].t, w[0].n_intervals);
            }
        }
        worst_steps = worst_steps.max(trace.steps.len());
        println!(
            "trial {trial}: pieces {pieces} converged_at {conv:?} steps {} final_count {} width_err {:.2e} strict {strict}",
            trace.steps.len(), final_u.count(), width_err
        );
    }
    println!("total {:?} worst_steps {worst_steps} violations {violations}", t0.elapsed());
}
