//! Grouped vs hashed placement over the same traces at each layout, written
//! as a comparison table and a box plot.
//!
//!     cargo run --release --example compare_strategies [-- out_dir]

use affinity_sim::harness::{compare, ExperimentConfig, StepCounts, Strategy};

fn main() -> Result<(), affinity_sim::Error> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "target/compare_strategies".into());
    let mut configs = Vec::new();
    for layout in [[1, 1, 1], [1, 3, 3], [3, 5, 5]] {
        for strategy in [Strategy::Affinity, Strategy::Random] {
            let mut cfg = ExperimentConfig {
                layout: StepCounts(layout),
                strategy,
                ..Default::default()
            };
            cfg.name = format!(
                "{}-{}",
                strategy.as_str().to_lowercase(),
                cfg.layout_label().replace('/', "-")
            );
            cfg.workload.frames = 150;
            cfg.workload.warmup_discard = 30;
            configs.push(cfg);
        }
    }
    let cmp = compare(&configs)?;
    cmp.write_to(out.as_ref())?;
    print!("{}", cmp.table_csv());
    println!("\nwrote {out}/comparison.csv, boxplot.csv, boxplot.svg");
    Ok(())
}
