use kcap_core::engine::{run, RunConfig, StopRule};
use kcap_core::graph::GraphModel;
use kcap_core::metrics::expected_input_profile;

fn main() {
    for seed in 0..3u64 {
        let k = 50usize;
        let n = 125_000;
        let g = GraphModel::new(n, 1, 1.0 / k as f64, seed).unwrap();
        let mut cfg = RunConfig::new(k, seed + 1, seed + 2, 15);
        cfg.stop = StopRule::never();
        let trace = run(&g, &cfg).unwrap();
        let mut line = format!("seed {seed}:");
        for rec in &trace.records {
            let Some(c) = rec.threshold else { continue };
            let members = rec.members.as_ref().unwrap();
            let pos = g.positions().subset(members);
            let prof = expected_input_profile(&pos, g.kernel(), &pos).unwrap();
            let max_e = prof.expected.iter().copied().fold(0.0, f64::max);
            line.push_str(&format!(" t{}:C{}/E{:.1}{}", rec.t, c, max_e, if (c as f64) >= max_e { "+" } else { "-" }));
        }
        println!("{line}");
    }
}
