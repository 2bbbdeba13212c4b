//! Exports the actor trace of a config, reads it back, and replays the same
//! trace under both strategies.

use std::sync::Arc;

use affinity_sim::harness::{run_with_trace, ExperimentConfig, Strategy};
use affinity_sim::workload::{generate_trace, FrameTrace};

fn main() -> Result<(), affinity_sim::Error> {
    let mut cfg = ExperimentConfig {
        repetitions: 1,
        ..Default::default()
    };
    cfg.workload.frames = 60;
    cfg.workload.warmup_discard = 10;
    let workload = cfg.workload_for(cfg.seed);

    let csv = generate_trace(&workload)?.to_csv_string();
    println!("trace: {} rows, first lines:", csv.lines().count() - 1);
    for line in csv.lines().take(4) {
        println!("  {line}");
    }
    let trace = Arc::new(FrameTrace::read_csv(
        csv.as_bytes(),
        &workload.clients,
        workload.frames,
    )?);

    for strategy in [Strategy::Affinity, Strategy::Random] {
        cfg.strategy = strategy;
        let run = run_with_trace(&cfg, cfg.seed, trace.clone())?;
        let remote: u64 = run.measurement.records.iter().map(|r| r.remote_bytes).sum();
        println!(
            "{strategy:<9} {} tasks, {} puts, {remote} remote bytes",
            run.sim.tasks().len(),
            run.sim.puts().len()
        );
    }
    Ok(())
}
