use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::keyspace::fnv1a64;
use crate::netsim::{RunSummary, SimConfig, Simulator};
use crate::store::CacheConfig;
use crate::workload::{generate_trace, install_pipeline, FrameTrace};

use super::metrics::{measure, records_csv, summary_csv, LatencyRecord, RunMeasurement, Summary};
use super::{pipeline_cluster, ExperimentConfig};

/// One repetition: a fresh cluster driven by one trace.
#[derive(Debug)]
pub struct RunOutput {
    pub run_id: String,
    pub seed: u64,
    pub trace: Arc<FrameTrace>,
    pub sim: Simulator,
    pub summary: RunSummary,
    /// Every frame, warmup included.
    pub measurement: RunMeasurement,
}

impl RunOutput {
    /// Records of frames past the warmup.
    pub fn kept_records(&self, warmup: usize) -> impl Iterator<Item = &LatencyRecord> {
        self.measurement.records.iter().filter(move |r| r.frame >= warmup)
    }
}

/// Everything one experiment produced.
#[derive(Debug)]
pub struct MetricsReport {
    pub config: ExperimentConfig,
    pub runs: Vec<RunOutput>,
    /// Post-warmup records of all repetitions, in run order.
    pub records: Vec<LatencyRecord>,
    /// One row per repetition.
    pub per_run: Vec<Summary>,
    /// All repetitions pooled.
    pub pooled: Summary,
}

impl MetricsReport {
    pub fn records_csv(&self) -> String {
        records_csv(&self.records)
    }

    /// Per-repetition rows followed by the pooled row.
    pub fn summary_csv(&self) -> String {
        let mut rows = self.per_run.clone();
        rows.push(self.pooled.clone());
        summary_csv(&rows)
    }

    /// Writes `records.csv`, `summary.csv` and, per repetition,
    /// `dump-<run_id>.csv` and `runlog-<run_id>.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: String, text: String| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
        };
        write("records.csv".into(), self.records_csv())?;
        write("summary.csv".into(), self.summary_csv())?;
        for run in &self.runs {
            write(format!("dump-{}.csv", run.run_id), run.sim.store().dump())?;
            write(format!("runlog-{}.csv", run.run_id), run.sim.run_log())?;
        }
        Ok(())
    }
}

pub fn run_id(config: &ExperimentConfig, seed: u64) -> String {
    format!("{}-s{seed}", config.name)
}

/// Runs one repetition with `seed` driving both the trace and the handlers.
pub fn run_once(config: &ExperimentConfig, seed: u64) -> Result<RunOutput> {
    config.validate()?;
    let workload = config.workload_for(seed);
    let trace = Arc::new(generate_trace(&workload)?);
    run_with_trace(config, seed, trace)
}

/// Runs one repetition over a given trace.
pub fn run_with_trace(config: &ExperimentConfig, seed: u64, trace: Arc<FrameTrace>) -> Result<RunOutput> {
    config.validate()?;
    let workload = config.workload_for(seed);
    let cluster = pipeline_cluster(config)?;
    let mut sim = Simulator::new(
        &cluster.layout,
        SimConfig {
            link: config.link,
            cache: CacheConfig {
                enabled: config.cache_enabled,
                capacity_bytes: config.cache_capacity_bytes,
            },
            seed,
        },
    )?;
    install_pipeline(&mut sim, &workload, trace.clone(), &cluster.client_nodes)?;
    let summary = sim.run_until_idle()?;
    if let Some((task, msg)) = sim.errors().first() {
        return Err(Error::Handler {
            handler: sim.tasks()[*task].registration.handler_name.clone(),
            key: sim.tasks()[*task].event.key.to_string(),
            message: msg.clone(),
        });
    }
    let id = run_id(config, seed);
    let measurement = measure(
        &sim,
        &workload.clients,
        workload.warmup_discard,
        &id,
        config.strategy.as_str(),
        &config.layout_label(),
    );
    Ok(RunOutput {
        run_id: id,
        seed,
        trace,
        sim,
        summary,
        measurement,
    })
}

/// Runs every repetition on a fresh cluster and pools the results.
pub fn run_experiment(config: &ExperimentConfig) -> Result<MetricsReport> {
    config.validate()?;
    let runs = config
        .run_seeds()
        .map(|seed| run_once(config, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(report(config, runs))
}

fn report(config: &ExperimentConfig, runs: Vec<RunOutput>) -> MetricsReport {
    let warmup = config.workload.warmup_discard;
    let clients = config.workload.clients.len();
    let offered = config.workload.offered_fps();
    let strategy = config.strategy.as_str();
    let layout = config.layout_label();
    let per_run: Vec<Summary> = runs
        .iter()
        .map(|r| {
            let kept: Vec<&LatencyRecord> = r.kept_records(warmup).collect();
            Summary::from_records(
                &r.run_id,
                strategy,
                &layout,
                clients,
                &kept,
                r.measurement.processed_frames,
                r.measurement.span_us,
                offered,
            )
        })
        .collect();
    let records: Vec<LatencyRecord> = runs.iter().flat_map(|r| r.kept_records(warmup).cloned()).collect();
    let frames = runs.iter().map(|r| r.measurement.processed_frames).sum();
    let span = runs.iter().map(|r| r.measurement.span_us).sum();
    let all: Vec<&LatencyRecord> = records.iter().collect();
    let pooled = Summary::from_records(
        &format!("{}-all", config.name),
        strategy,
        &layout,
        clients,
        &all,
        frames,
        span,
        offered,
    );
    MetricsReport {
        config: config.clone(),
        runs,
        records,
        per_run,
        pooled,
    }
}

/// Identifies the traces an experiment replays: equal fingerprints mean
/// identical actor traces and frame schedules for every repetition.
pub fn trace_fingerprint(config: &ExperimentConfig) -> Result<u64> {
    let mut text = String::new();
    for seed in config.run_seeds() {
        let workload = config.workload_for(seed);
        text.push_str(&format!(
            "seed={seed};fps={};frames={};bytes={}\n",
            workload.fps, workload.frames, workload.frame_bytes
        ));
        text.push_str(&generate_trace(&workload)?.to_csv_string());
    }
    Ok(fnv1a64(text.as_bytes()))
}
