//! Turning the per-node cache off: hashed placement pays for every repeated
//! remote read, grouped placement reads locally and does not notice.

use affinity_sim::harness::{run_experiment, ExperimentConfig, Strategy};

fn main() -> Result<(), affinity_sim::Error> {
    println!(
        "{:<9} {:<6} {:>11} {:>11} {:>9} {:>15}",
        "strategy", "cache", "median_us", "p99_us", "hit_rate", "remote_bytes"
    );
    for strategy in [Strategy::Affinity, Strategy::Random] {
        let mut medians = Vec::new();
        for cache in [true, false] {
            let mut cfg = ExperimentConfig {
                strategy,
                cache_enabled: cache,
                ..Default::default()
            };
            cfg.workload.frames = 150;
            cfg.workload.warmup_discard = 30;
            let s = run_experiment(&cfg)?.pooled;
            println!(
                "{:<9} {:<6} {:>11} {:>11} {:>9.3} {:>15}",
                strategy,
                if cache { "on" } else { "off" },
                s.median_us,
                s.p99_us,
                s.cache_hit_rate,
                s.total_remote_bytes
            );
            medians.push(s.median_us as f64);
        }
        println!("{strategy}: cache off / on = {:.2}x", medians[1] / medians[0]);
    }
    Ok(())
}
