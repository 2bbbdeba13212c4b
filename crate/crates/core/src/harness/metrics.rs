use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::compute::StepLabel;
use crate::netsim::{Micros, Simulator};
use crate::workload::keys::{self, PipelineKey};

pub const RECORDS_HEADER: &str =
    "run_id,strategy,layout,client,frame,e2e_us,mot_us,pred_us,cd_us,remote_bytes,cache_hits,cache_misses";
pub const SUMMARY_HEADER: &str =
    "run_id,strategy,layout,clients,median_us,p75_us,p99_us,mean_us,fps,total_remote_bytes,cache_hit_rate";

/// Latency and traffic of one frame of one client.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatencyRecord {
    pub run_id: String,
    pub strategy: String,
    pub layout: String,
    pub client: String,
    pub frame: usize,
    /// Frame put to the last put caused by the frame, which is the last
    /// collision result whenever the frame has predictions.
    pub e2e_us: Micros,
    /// MOT trigger to completion of the state put.
    pub mot_us: Micros,
    /// Longest PRED task of the frame, trigger to finish.
    pub pred_us: Micros,
    /// First CD trigger to last CD finish; 0 when the frame has no CD tasks.
    pub cd_us: Micros,
    pub remote_bytes: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
}

impl LatencyRecord {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.run_id,
            self.strategy,
            self.layout,
            self.client,
            self.frame,
            self.e2e_us,
            self.mot_us,
            self.pred_us,
            self.cd_us,
            self.remote_bytes,
            self.cache_hits,
            self.cache_misses
        )
    }
}

pub fn records_csv(records: &[LatencyRecord]) -> String {
    let mut out = String::from(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

#[derive(Debug, Default, Clone)]
struct FrameAcc {
    put_at: Option<Micros>,
    last_done: Micros,
    mot: Option<Micros>,
    pred: Micros,
    cd_first_fired: Option<Micros>,
    cd_last_done: Micros,
    remote_bytes: u64,
    hits: u64,
    misses: u64,
}

/// What one finished simulation measured, before warmup filtering.
#[derive(Debug, Clone)]
pub struct RunMeasurement {
    /// All frames, ordered by client (config order) then frame.
    pub records: Vec<LatencyRecord>,
    /// Frames with index `>= warmup` that completed.
    pub processed_frames: usize,
    /// First post-warmup frame put to the last completion of a post-warmup frame.
    pub span_us: Micros,
}

/// Derives per-frame records from a finished simulation.
pub fn measure(
    sim: &Simulator,
    clients: &[String],
    warmup: usize,
    run_id: &str,
    strategy: &str,
    layout: &str,
) -> RunMeasurement {
    let mut frames: BTreeMap<(usize, usize), FrameAcc> = BTreeMap::new();
    let client_index = |name: &str| clients.iter().position(|c| c == name);
    let frame_of = |key: &str| -> Option<(usize, usize)> {
        let parsed = PipelineKey::parse(key)?;
        let (client, frame) = parsed.frame();
        Some((client_index(client)?, frame))
    };

    for put in sim.puts() {
        let Some(id) = frame_of(put.key.as_str()) else { continue };
        let owner = match put.issuer {
            // a task's outputs belong to the frame of the task
            Some(task) => match frame_of(sim.tasks()[task].event.key.as_str()) {
                Some(f) => f,
                None => continue,
            },
            None => id,
        };
        let acc = frames.entry(owner).or_default();
        if let Some(route) = &put.route {
            acc.remote_bytes += route.remote_bytes;
        }
        match (put.issuer, put.completed_at()) {
            (None, _) => acc.put_at = Some(put.issued_at),
            (Some(task), Some(done)) => {
                acc.last_done = acc.last_done.max(done);
                let t = &sim.tasks()[task];
                if t.registration.step_label == StepLabel::Mot && put.key.as_str().starts_with(keys::STATES) {
                    acc.mot = Some(done - t.event.fired_at);
                }
            }
            (Some(_), None) => {}
        }
    }

    for t in sim.tasks() {
        let Some(id) = frame_of(t.event.key.as_str()) else {
            continue;
        };
        let acc = frames.entry(id).or_default();
        acc.remote_bytes += t.metrics.remote_bytes;
        acc.hits += t.metrics.cache_hits;
        acc.misses += t.metrics.cache_misses;
        let done = t.done_us.unwrap_or(t.event.fired_at);
        acc.last_done = acc.last_done.max(done);
        match t.registration.step_label {
            StepLabel::Pred => acc.pred = acc.pred.max(done - t.event.fired_at),
            StepLabel::Cd => {
                let first = acc.cd_first_fired.get_or_insert(t.event.fired_at);
                *first = (*first).min(t.event.fired_at);
                acc.cd_last_done = acc.cd_last_done.max(done);
            }
            StepLabel::Mot | StepLabel::Other => {}
        }
    }

    let mut records = Vec::with_capacity(frames.len());
    let mut first_put: Option<Micros> = None;
    let mut last_done: Micros = 0;
    let mut processed = 0;
    for ((ci, frame), acc) in frames {
        let Some(put_at) = acc.put_at else { continue };
        let end = acc.last_done.max(put_at);
        if frame >= warmup {
            processed += 1;
            first_put = Some(first_put.map_or(put_at, |f| f.min(put_at)));
            last_done = last_done.max(end);
        }
        records.push(LatencyRecord {
            run_id: run_id.to_string(),
            strategy: strategy.to_string(),
            layout: layout.to_string(),
            client: clients[ci].clone(),
            frame,
            e2e_us: end - put_at,
            mot_us: acc.mot.unwrap_or(0),
            pred_us: acc.pred,
            cd_us: acc.cd_first_fired.map_or(0, |f| acc.cd_last_done - f),
            remote_bytes: acc.remote_bytes,
            cache_hits: acc.hits,
            cache_misses: acc.misses,
        });
    }
    RunMeasurement {
        records,
        processed_frames: processed,
        span_us: first_put.map_or(0, |f| last_done - f),
    }
}

/// Nearest-rank percentile of sorted values; `q` in `(0, 100]`.
pub fn percentile(sorted: &[Micros], q: f64) -> Micros {
    if sorted.is_empty() {
        return 0;
    }
    let rank = ((q / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// One summary row.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub run_id: String,
    pub strategy: String,
    pub layout: String,
    pub clients: usize,
    pub median_us: Micros,
    pub p75_us: Micros,
    pub p99_us: Micros,
    pub mean_us: f64,
    pub fps: f64,
    pub total_remote_bytes: u64,
    pub cache_hit_rate: f64,
    /// Offered load exceeded measured throughput by more than 5%.
    pub saturated: bool,
}

impl Summary {
    /// Summarizes post-warmup `records` measured over `frames` processed frames in `span_us`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_records(
        run_id: &str,
        strategy: &str,
        layout: &str,
        clients: usize,
        records: &[&LatencyRecord],
        frames: usize,
        span_us: Micros,
        offered_fps: f64,
    ) -> Self {
        let mut e2e: Vec<Micros> = records.iter().map(|r| r.e2e_us).collect();
        e2e.sort_unstable();
        let mean_us = if e2e.is_empty() {
            0.0
        } else {
            e2e.iter().map(|&v| v as f64).sum::<f64>() / e2e.len() as f64
        };
        let fps = if span_us == 0 {
            0.0
        } else {
            frames as f64 / (span_us as f64 / 1e6)
        };
        let hits: u64 = records.iter().map(|r| r.cache_hits).sum();
        let misses: u64 = records.iter().map(|r| r.cache_misses).sum();
        Summary {
            run_id: run_id.to_string(),
            strategy: strategy.to_string(),
            layout: layout.to_string(),
            clients,
            median_us: percentile(&e2e, 50.0),
            p75_us: percentile(&e2e, 75.0),
            p99_us: percentile(&e2e, 99.0),
            mean_us,
            fps,
            total_remote_bytes: records.iter().map(|r| r.remote_bytes).sum(),
            cache_hit_rate: if hits + misses == 0 {
                0.0
            } else {
                hits as f64 / (hits + misses) as f64
            },
            saturated: offered_fps > fps * 1.05,
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.1},{:.4},{},{:.4}",
            self.run_id,
            self.strategy,
            self.layout,
            self.clients,
            self.median_us,
            self.p75_us,
            self.p99_us,
            self.mean_us,
            self.fps,
            self.total_remote_bytes,
            self.cache_hit_rate
        )
    }
}

pub fn summary_csv(rows: &[Summary]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(out, "{}", r.csv_line()).unwrap();
    }
    out
}
