//! One PASS/FAIL line per acceptance criterion, on the reduced trace
//! (3 clients x 150 frames, first 30 discarded). Exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::Instant;

use affinity_sim::compute::StepLabel;
use affinity_sim::harness::{
    run_experiment, run_once, validate_regex, ExperimentConfig, MetricsReport, RowStatus, RunOutput, StepCounts,
    Strategy,
};
use affinity_sim::keyspace::AffinityRegex;
use affinity_sim::workload::keys::{self, PipelineKey};
use affinity_sim::{extract_affinity_key, validate_key};

type Verdict = Result<String, String>;

fn reduced(name: &str, layout: [usize; 3], strategy: Strategy, cache: bool, replication: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        name: name.into(),
        layout: StepCounts(layout),
        strategy,
        cache_enabled: cache,
        replication: StepCounts::uniform(replication),
        ..Default::default()
    };
    cfg.workload.frames = 150;
    cfg.workload.warmup_discard = 30;
    cfg
}

fn single(mut cfg: ExperimentConfig, seed: u64) -> ExperimentConfig {
    cfg.repetitions = 1;
    cfg.seed = seed;
    cfg
}

fn fnv(text: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Default-config experiments shared by several criteria.
struct Experiments {
    a133: MetricsReport,
    r133: MetricsReport,
    a355: MetricsReport,
    r355: MetricsReport,
    r355_nocache: MetricsReport,
    a355_nocache: MetricsReport,
    a111: MetricsReport,
    r111: MetricsReport,
    a111_r3: MetricsReport,
}

impl Experiments {
    fn run() -> Self {
        let go = |name, layout, strategy, cache, r| run_experiment(&reduced(name, layout, strategy, cache, r)).unwrap();
        Experiments {
            a133: go("a133", [1, 3, 3], Strategy::Affinity, true, 1),
            r133: go("r133", [1, 3, 3], Strategy::Random, true, 1),
            a355: go("a355", [3, 5, 5], Strategy::Affinity, true, 1),
            r355: go("r355", [3, 5, 5], Strategy::Random, true, 1),
            r355_nocache: go("r355", [3, 5, 5], Strategy::Random, false, 1),
            a355_nocache: go("a355", [3, 5, 5], Strategy::Affinity, false, 1),
            a111: go("l111", [1, 1, 1], Strategy::Affinity, true, 1),
            r111: go("l111", [1, 1, 1], Strategy::Random, true, 1),
            a111_r3: go("a111r3", [1, 1, 1], Strategy::Affinity, true, 3),
        }
    }
}

fn table_regression() -> Verdict {
    let report = validate_regex(concat!(env!("CARGO_MANIFEST_DIR"), "/data/pipeline_pools.csv")).map_err(|e| e.to_string())?;
    let keys: Vec<Option<&str>> = report.rows.iter().map(|r| r.row.affinity_key.as_deref()).collect();
    let statuses: Vec<&RowStatus> = report.rows.iter().map(|r| &r.status).collect();
    let want_keys = [
        Some("/little3_"),
        Some("/little3_"),
        Some("/little3_7_"),
        Some("/little3_42_"),
        None,
    ];
    let want_status = [
        &RowStatus::Match,
        &RowStatus::Match,
        &RowStatus::Match,
        &RowStatus::Match,
        &RowStatus::Ungrouped,
    ];
    if keys == want_keys && statuses == want_status {
        Ok(report.to_string().lines().last().unwrap().to_string())
    } else {
        Err(report.to_string())
    }
}

fn co_residency(runs: &[RunOutput]) -> Verdict {
    let mut violations = 0;
    let mut groups = 0;
    for run in runs {
        let mut homes: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
        for line in run.sim.store().dump().lines() {
            let f: Vec<&str> = line.split(',').collect();
            if !f[4].is_empty() {
                homes.entry((f[0].into(), f[4].into())).or_default().insert(f[1].into());
            }
        }
        groups += homes.len();
        violations += homes.values().filter(|s| s.len() != 1).count();
    }
    let msg = format!("{violations} violations over {groups} groups in {} runs", runs.len());
    if violations == 0 && groups > 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Records CSV without the strategy column.
fn strip_strategy(report: &MetricsReport) -> String {
    report
        .records_csv()
        .lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f.remove(1);
            f.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn latencies(report: &MetricsReport) -> Vec<(String, usize, [u64; 4])> {
    report
        .records
        .iter()
        .map(|r| (r.client.clone(), r.frame, [r.e2e_us, r.mot_us, r.pred_us, r.cd_us]))
        .collect()
}

fn single_shard_equivalence(x: &Experiments) -> Verdict {
    let (a, r) = (strip_strategy(&x.a111), strip_strategy(&x.r111));
    let msg = format!(
        "{} records, medians {} / {}",
        x.a111.records.len(),
        x.a111.pooled.median_us,
        x.r111.pooled.median_us
    );
    if a == r {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn grouped_cache_equivalence(x: &Experiments) -> Verdict {
    let same = latencies(&x.a355) == latencies(&x.a355_nocache);
    let whole = x.a355.records_csv() == x.a355_nocache.records_csv();
    let msg = format!("latencies identical: {same}, whole CSV identical: {whole}");
    if same {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn baseline_cache_degradation(x: &Experiments) -> Verdict {
    let ratio = x.r355_nocache.pooled.median_us as f64 / x.r355.pooled.median_us as f64;
    let msg = format!(
        "median {} / {} = {ratio:.2}x (floor 1.5x)",
        x.r355_nocache.pooled.median_us, x.r355.pooled.median_us
    );
    if ratio >= 1.5 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn grouped_zero_remote(x: &Experiments, runs: &[RunOutput]) -> Verdict {
    let mut bytes = 0;
    let mut tasks = 0;
    let all = x
        .a355
        .runs
        .iter()
        .chain(&x.a355_nocache.runs)
        .chain(&x.a133.runs)
        .chain(runs);
    for run in all {
        for t in run.sim.tasks() {
            if matches!(t.registration.step_label, StepLabel::Pred | StepLabel::Cd) {
                bytes += t.metrics.remote_bytes;
                tasks += 1;
            }
        }
    }
    let msg = format!("{bytes} remote bytes over {tasks} PRED/CD tasks");
    if bytes == 0 && tasks > 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn baseline_remote_fraction(x: &Experiments) -> Verdict {
    let mut sim_counts = (0u64, 0u64);
    let mut oracle = (0u64, 0u64);
    for run in &x.r355_nocache.runs {
        for t in run
            .sim
            .tasks()
            .iter()
            .filter(|t| t.registration.step_label == StepLabel::Pred)
        {
            sim_counts.0 += t.metrics.gets;
            sim_counts.1 += t.metrics.remote_gets;
        }
        // brute-force replay: trigger position's shard vs each history position's shard
        let shards = x.r355_nocache.config.layout.pred() as u64;
        let p = x.r355_nocache.config.workload.p;
        for ct in &run.trace.clients {
            for (k, actors) in ct.frames.iter().enumerate() {
                for a in actors.iter().filter(|a| a.seq >= p as u64) {
                    let node = fnv(keys::position_key(&ct.client, a.actor_id, k).as_str()) % shards;
                    for j in k + 1 - p..k {
                        oracle.0 += 1;
                        oracle.1 +=
                            u64::from(fnv(keys::position_key(&ct.client, a.actor_id, j).as_str()) % shards != node);
                    }
                }
            }
        }
    }
    let frac = sim_counts.1 as f64 / sim_counts.0 as f64;
    let msg = format!(
        "{} of {} gets remote = {frac:.3} (oracle {} of {})",
        sim_counts.1, sim_counts.0, oracle.1, oracle.0
    );
    if sim_counts == oracle && sim_counts.0 >= 1000 && (frac - 0.8).abs() <= 0.05 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn scaling_trend(x: &Experiments) -> Verdict {
    let med = |r: &MetricsReport| r.pooled.median_us;
    let grouped = med(&x.a355) <= med(&x.a133);
    let baseline = med(&x.r355) >= med(&x.r133);
    let msg = format!(
        "AFFINITY 3/5/5 {} vs 1/3/3 {}; RANDOM 3/5/5 {} vs 1/3/3 {}",
        med(&x.a355),
        med(&x.a133),
        med(&x.r355),
        med(&x.r133)
    );
    if grouped && baseline {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn replication_barrier(x: &Experiments) -> Verdict {
    let link = x.a111_r3.config.link;
    let mut checked = 0;
    let mut early = 0;
    for run in &x.a111_r3.runs {
        for p in run.sim.puts() {
            let (Some(task), Some(route)) = (p.triggered, p.route.as_ref()) else {
                continue;
            };
            let slowest = route
                .arrivals
                .iter()
                .map(|(n, _)| link.transfer_time(p.size, *n == p.origin))
                .max()
                .unwrap_or(0);
            checked += 1;
            early += usize::from(run.sim.tasks()[task].event.fired_at < p.issued_at + slowest);
        }
    }
    let (r3, a355) = (x.a111_r3.pooled.median_us, x.a355.pooled.median_us);
    let msg = format!("{early} early triggers of {checked}; median 1/1/1x3 {r3} vs 3/5/5 {a355}");
    if early == 0 && checked > 0 && r3 > a355 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn fifo_violations(run: &RunOutput) -> (usize, usize) {
    let mut groups: BTreeMap<(String, usize, String), Vec<usize>> = BTreeMap::new();
    for t in run.sim.tasks() {
        if let Some(a) = &t.event.affinity_key {
            groups
                .entry((t.event.shard.pool.to_string(), t.event.shard.index, a.to_string()))
                .or_default()
                .push(t.id);
        }
    }
    let mut bad = 0;
    for ids in groups.values() {
        for w in ids.windows(2) {
            let (a, b) = (&run.sim.tasks()[w[0]], &run.sim.tasks()[w[1]]);
            if a.event.fired_at > b.event.fired_at || a.done_us.unwrap() > b.start_us.unwrap() {
                bad += 1;
            }
        }
    }
    (bad, groups.len())
}

fn cd_coverage() -> Result<usize, String> {
    let mut frames = 0;
    for seed in 0..8 {
        for (strategy, layout) in [(Strategy::Affinity, [2, 3, 3]), (Strategy::Random, [2, 3, 3])] {
            let mut cfg = single(reduced("tiny", layout, strategy, true, 1), seed);
            cfg.workload.clients.truncate(2);
            cfg.workload.frames = 20;
            cfg.workload.warmup_discard = 1;
            cfg.workload.max_actors = 5;
            cfg.workload.p = 3;
            cfg.workload.actor_arrival_rate = 0.6;
            cfg.workload.actor_mean_lifetime = 8.0;
            let run = run_once(&cfg, seed).map_err(|e| e.to_string())?;
            let per_pair = cfg.workload.cd_per_pair_us;
            let mut got: BTreeMap<(String, usize), u64> = BTreeMap::new();
            for t in run
                .sim
                .tasks()
                .iter()
                .filter(|t| t.registration.step_label == StepLabel::Cd)
            {
                let key = PipelineKey::parse(t.event.key.as_str()).unwrap();
                let (c, k) = key.frame();
                *got.entry((c.to_string(), k)).or_default() += t.metrics.service_us / per_pair;
            }
            for ct in &run.trace.clients {
                for (k, actors) in ct.frames.iter().enumerate() {
                    let a = actors.iter().filter(|x| x.seq >= cfg.workload.p as u64).count() as u64;
                    let pairs = got.get(&(ct.client.clone(), k)).copied().unwrap_or(0);
                    if pairs != a * a.saturating_sub(1) / 2 {
                        return Err(format!(
                            "{} frame {k} seed {seed}: {pairs} pairs for {a} actors",
                            ct.client
                        ));
                    }
                    frames += usize::from(a >= 2);
                }
            }
        }
    }
    Ok(frames)
}

fn ordering(runs: &[RunOutput]) -> Verdict {
    let (mut bad, mut groups) = (0, 0);
    for run in runs {
        let (b, g) = fifo_violations(run);
        bad += b;
        groups += g;
    }
    let frames = cd_coverage()?;
    let msg =
        format!("{bad} FIFO violations over {groups} keyed queues; CD coverage exact on {frames} multi-actor frames");
    if bad == 0 && frames > 50 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn determinism() -> Verdict {
    let mut checked = 0;
    for cfg in [
        single(reduced("det", [3, 5, 5], Strategy::Random, false, 1), 5),
        single(reduced("det", [1, 1, 1], Strategy::Affinity, true, 3), 5),
    ] {
        let (a, b) = (
            run_experiment(&cfg).map_err(|e| e.to_string())?,
            run_experiment(&cfg).map_err(|e| e.to_string())?,
        );
        if a.records_csv() != b.records_csv() || a.summary_csv() != b.summary_csv() {
            return Err(format!("{} CSVs differ", cfg.layout_label()));
        }
        for (x, y) in a.runs.iter().zip(&b.runs) {
            if x.sim.run_log() != y.sim.run_log() || x.sim.event_log() != y.sim.event_log() {
                return Err(format!("{} logs differ", cfg.layout_label()));
            }
        }
        checked += 1;
    }
    Ok(format!("{checked} configs run twice, CSVs and logs byte-identical"))
}

fn extraction_benchmark() -> Verdict {
    let cases = [
        ("/frames/little3_42", keys::CLIENT_REGEX),
        ("/states/little3_42", keys::CLIENT_REGEX),
        ("/positions/little3_7_42", keys::CLIENT_ID_REGEX),
        ("/predictions/little3_42_7", keys::CLIENT_ID_REGEX),
    ];
    let cases: Vec<_> = cases.iter().map(|(k, re)| (validate_key(k).unwrap(), *re)).collect();
    const ROUNDS: usize = 500;
    let start = Instant::now();
    for _ in 0..ROUNDS {
        for (key, re) in &cases {
            std::hint::black_box(extract_affinity_key(re, key).unwrap());
        }
    }
    let cold = start.elapsed().as_secs_f64() * 1e6 / (ROUNDS * cases.len()) as f64;

    let compiled: Vec<_> = cases
        .iter()
        .map(|(k, re)| (k, AffinityRegex::new(re).unwrap()))
        .collect();
    let start = Instant::now();
    for _ in 0..ROUNDS * 20 {
        for (key, re) in &compiled {
            std::hint::black_box(re.extract(key.as_str()));
        }
    }
    let warm = start.elapsed().as_secs_f64() * 1e6 / (ROUNDS * 20 * compiled.len()) as f64;
    let msg = format!("{cold:.2} us per call compiling the regex, {warm:.3} us precompiled (limit 300)");
    if cold < 300.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let experiments = Experiments::run();
    let seeded: Vec<RunOutput> = (0..10)
        .map(|s| run_once(&single(reduced("seeded", [3, 5, 5], Strategy::Affinity, true, 1), s), s).unwrap())
        .collect();

    let results: Vec<(&str, Verdict)> = vec![
        ("table regression", table_regression()),
        ("co-residency", co_residency(&seeded)),
        ("1/1/1 equivalence", single_shard_equivalence(&experiments)),
        ("grouped cache-off equivalence", grouped_cache_equivalence(&experiments)),
        (
            "baseline cache-off degradation",
            baseline_cache_degradation(&experiments),
        ),
        ("grouped zero remote bytes", grouped_zero_remote(&experiments, &seeded)),
        ("baseline remote fraction", baseline_remote_fraction(&experiments)),
        ("scaling trend", scaling_trend(&experiments)),
        ("replication barrier", replication_barrier(&experiments)),
        ("ordering", ordering(&seeded)),
        ("determinism", determinism()),
        ("extraction benchmark", extraction_benchmark()),
    ];

    let mut failed = 0;
    for (i, (name, verdict)) in results.iter().enumerate() {
        match verdict {
            Ok(msg) => println!("PASS {:>2} {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg}", i + 1)
            }
        }
    }
    println!(
        "{} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
