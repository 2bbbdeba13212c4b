use std::path::Path;
use std::process::Command;

use affinity_sim::harness::{
    compare, run_experiment, validate_regex, ExperimentConfig, StepCounts, Strategy, BOXPLOT_HEADER, RECORDS_HEADER,
    SUMMARY_HEADER,
};
use affinity_sim::Error;

fn small(name: &str, strategy: Strategy) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        name: name.into(),
        layout: StepCounts([1, 2, 2]),
        strategy,
        repetitions: 2,
        seed: 11,
        ..Default::default()
    };
    cfg.workload.frames = 40;
    cfg.workload.warmup_discard = 5;
    cfg
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn headers_are_fixed() {
    assert_eq!(
        RECORDS_HEADER,
        "run_id,strategy,layout,client,frame,e2e_us,mot_us,pred_us,cd_us,remote_bytes,cache_hits,cache_misses"
    );
    assert_eq!(
        SUMMARY_HEADER,
        "run_id,strategy,layout,clients,median_us,p75_us,p99_us,mean_us,fps,total_remote_bytes,cache_hit_rate"
    );
}

#[test]
fn written_outputs_are_reproducible() {
    let cfg = small("repro", Strategy::Random);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&cfg).unwrap().write_to(a.path()).unwrap();
    run_experiment(&cfg).unwrap().write_to(b.path()).unwrap();

    let mut names: Vec<String> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "dump-repro-s11.csv",
            "dump-repro-s12.csv",
            "records.csv",
            "runlog-repro-s11.csv",
            "runlog-repro-s12.csv",
            "summary.csv",
        ]
    );
    for n in &names {
        assert_eq!(read(&a.path().join(n)), read(&b.path().join(n)), "{n}");
    }

    let records = read(&a.path().join("records.csv"));
    assert_eq!(records.lines().next(), Some(RECORDS_HEADER));
    // 3 clients, 35 kept frames each, two repetitions
    assert_eq!(records.lines().count(), 1 + 3 * 35 * 2);

    let summary = read(&a.path().join("summary.csv"));
    let ids: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids, ["repro-s11", "repro-s12", "repro-all"]);
    assert_eq!(summary.lines().next(), Some(SUMMARY_HEADER));
}

#[test]
fn compare_refuses_different_traces() {
    let a = small("a", Strategy::Affinity);
    let mut b = small("b", Strategy::Random);
    b.workload.frames = 41;
    assert!(matches!(compare(&[a.clone(), b]), Err(Error::TraceMismatch(_))));

    let mut c = small("c", Strategy::Random);
    c.seed = 12;
    assert!(matches!(compare(&[a.clone(), c]), Err(Error::TraceMismatch(_))));

    assert!(matches!(compare(&[a.clone(), a]), Err(Error::BadConfig(_))));
    assert!(matches!(compare(&[]), Err(Error::BadConfig(_))));
}

#[test]
fn compare_writes_table_and_plot() {
    let cfgs = [small("grouped", Strategy::Affinity), small("hashed", Strategy::Random)];
    let cmp = compare(&cfgs).unwrap();
    let dir = tempfile::tempdir().unwrap();
    cmp.write_to(dir.path()).unwrap();

    let table = read(&dir.path().join("comparison.csv"));
    let ids: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids, ["grouped-all", "hashed-all"]);

    let boxes = read(&dir.path().join("boxplot.csv"));
    assert_eq!(boxes.lines().next(), Some(BOXPLOT_HEADER));
    for line in boxes.lines().skip(1) {
        let v: Vec<u64> = line.split(',').skip(3).map(|x| x.parse().unwrap()).collect();
        assert!(v[1] <= v[2] && v[2] <= v[3] && v[3] <= v[4] && v[4] <= v[5], "{line}");
    }
    let svg = read(&dir.path().join("boxplot.svg"));
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(dir.path().join("grouped/records.csv").exists());
    assert!(dir.path().join("hashed/summary.csv").exists());
}

#[test]
fn pool_table_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let report = validate_regex(&empty).unwrap();
    assert!(report.rows.is_empty());
    assert_eq!(report.to_string(), "0 match, 0 mismatch, 0 n/a");

    assert!(matches!(
        validate_regex(dir.path().join("absent.csv")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn shipped_configs_load() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&path).unwrap();
            cfg.validate().unwrap();
            assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
            n += 1;
        }
    }
    assert!(n >= 10);
}

#[test]
fn cli_smoke() {
    let bin = env!("CARGO_BIN_EXE_affinity-sim");
    let table = concat!(env!("CARGO_MANIFEST_DIR"), "/data/pipeline_pools.csv");
    let out = Command::new(bin)
        .args(["validate-regex", "--table", table])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).ends_with("4 match, 0 mismatch, 1 n/a\n"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(
        &bad,
        "pool,example_key,step,regex,affinity_key\n/frames,/frames/little3_42,MOT,/[0-9]+_,/little3_\n",
    )
    .unwrap();
    let out = Command::new(bin)
        .args(["validate-regex", "--table"])
        .arg(&bad)
        .output()
        .unwrap();
    assert!(!out.status.success());

    let cfg_path = dir.path().join("cfg.toml");
    let mut cfg = small("cli", Strategy::Affinity);
    cfg.repetitions = 1;
    std::fs::write(&cfg_path, cfg.to_toml()).unwrap();
    let run_dir = dir.path().join("run");
    let out = Command::new(bin)
        .args(["run", "--seed", "3", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&run_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(run_dir.join("runlog-cli-s3.csv").exists());
    assert_eq!(String::from_utf8_lossy(&out.stdout), read(&run_dir.join("summary.csv")));

    let trace = dir.path().join("trace.csv");
    let out = Command::new(bin)
        .args(["trace", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&trace)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(read(&trace).starts_with("client,frame,actor_id,seq\n"));
}
