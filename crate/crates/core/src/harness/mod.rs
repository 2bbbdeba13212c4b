//! Experiment runner: builds pipeline clusters from configs, replays traces
//! under either placement strategy, and turns the run into per-frame latency
//! records, summaries, comparisons and plots.
//!
//! Latencies are virtual-time microseconds. Only comparisons between
//! configurations are meaningful; absolute values depend on the modeled
//! service times and link.

mod cluster;
mod compare;
mod config;
mod metrics;
mod run;
mod table;

pub use cluster::{pipeline_cluster, PipelineCluster};
pub use compare::{compare, render_svg, BoxStats, Comparison, BOXPLOT_HEADER};
pub use config::{experiment_link, ExperimentConfig, StepCounts, Strategy, DEFAULT_REQUEST_OVERHEAD_US};
pub use metrics::{
    measure, percentile, records_csv, summary_csv, LatencyRecord, RunMeasurement, Summary, RECORDS_HEADER,
    SUMMARY_HEADER,
};
pub use run::{run_experiment, run_id, run_once, run_with_trace, trace_fingerprint, MetricsReport, RunOutput};
pub use table::{read_pool_table, validate_regex, validate_rows, PoolTableRow, RegexReport, RowReport, RowStatus};
