use kcap_core::rng::{mix3, unit_f64};

fn main() {
    // P(u < g) for tiny g over structured counter inputs, as the edge
    // oracle uses them: seed fixed, (s, t) over a grid
    for g in [3e-4f64, 1e-4, 1e-5] {
        for seed in [1u64, 0xDEADBEEF, 500] {
            let mut hits = 0u64;
            let mut total = 0u64;
            for s in 0..3000u64 {
                for t in 0..3000u64 {
                    total += 1;
                    if unit_f64(mix3(seed, s, t)) < g {
                        hits += 1;
                    }
                }
            }
            let freq = hits as f64 / total as f64;
            println!("g {g:e} seed {seed}: freq {freq:e} ratio {:.3}", freq / g);
        }
    }
}
