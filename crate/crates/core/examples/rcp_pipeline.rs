//! One run of the tracking -> prediction -> collision pipeline on the reduced
//! trace, with the per-step breakdown of a few frames.
//!
//!     cargo run --release --example rcp_pipeline [-- affinity|random [x/y/z]]

use affinity_sim::harness::{percentile, run_once, ExperimentConfig, Strategy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let strategy = match args.next().as_deref() {
        Some("random") => Strategy::Random,
        _ => Strategy::Affinity,
    };
    let layout = args.next().unwrap_or_else(|| "3/5/5".into()).parse()?;
    let mut cfg = ExperimentConfig {
        name: "pipeline".into(),
        layout,
        strategy,
        repetitions: 1,
        ..Default::default()
    };
    cfg.workload.frames = 150;
    cfg.workload.warmup_discard = 30;

    let run = run_once(&cfg, cfg.seed)?;
    println!(
        "{} {} seed {}: {} tasks, {} puts",
        strategy,
        cfg.layout_label(),
        run.seed,
        run.sim.tasks().len(),
        run.sim.puts().len()
    );
    println!(
        "{:<8} {:>5} {:>7} {:>9} {:>9} {:>9} {:>9} {:>10}",
        "client", "frame", "actors", "e2e_us", "mot_us", "pred_us", "cd_us", "remote_B"
    );
    for r in run.measurement.records.iter().filter(|r| r.frame % 30 == 15) {
        let actors = run.trace.client(&r.client).map_or(0, |c| c.actors(r.frame).len());
        println!(
            "{:<8} {:>5} {:>7} {:>9} {:>9} {:>9} {:>9} {:>10}",
            r.client, r.frame, actors, r.e2e_us, r.mot_us, r.pred_us, r.cd_us, r.remote_bytes
        );
    }
    let mut e2e: Vec<u64> = run
        .kept_records(cfg.workload.warmup_discard)
        .map(|r| r.e2e_us)
        .collect();
    e2e.sort_unstable();
    println!(
        "\n{} events up to {} us; e2e median {} us, p99 {} us over {} kept frames",
        run.summary.events,
        run.summary.end_time,
        percentile(&e2e, 50.0),
        percentile(&e2e, 99.0),
        e2e.len()
    );
    Ok(())
}
