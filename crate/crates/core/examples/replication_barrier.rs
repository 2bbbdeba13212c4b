//! Replicating every pool three ways on the smallest layout: each trigger now
//! waits for the slowest copy, and one shard per step still has to carry
//! every client.

use affinity_sim::harness::{run_experiment, ExperimentConfig, StepCounts};

fn main() -> Result<(), affinity_sim::Error> {
    for (layout, r) in [([1, 1, 1], 1), ([1, 1, 1], 3), ([3, 5, 5], 1)] {
        let mut cfg = ExperimentConfig {
            layout: StepCounts(layout),
            replication: StepCounts::uniform(r),
            ..Default::default()
        };
        cfg.workload.frames = 150;
        cfg.workload.warmup_discard = 30;
        let report = run_experiment(&cfg)?;

        // trigger delay after a put is issued, averaged over triggering puts
        let (mut delay, mut n) = (0u64, 0u64);
        for run in &report.runs {
            for p in run.sim.puts() {
                if let (Some(task), Some(route)) = (p.triggered, &p.route) {
                    delay += run.sim.tasks()[task].event.fired_at - route.issued_at;
                    n += 1;
                }
            }
        }
        println!(
            "{:<9} median {:>7} us  p99 {:>7} us  mean put->trigger {:>6} us",
            cfg.layout_label(),
            report.pooled.median_us,
            report.pooled.p99_us,
            delay / n.max(1)
        );
    }
    Ok(())
}
