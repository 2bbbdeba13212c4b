use std::collections::BTreeMap;

use affinity_sim::harness::{run_once, ExperimentConfig, StepCounts, Strategy};
use affinity_sim::netsim::LinkModel;
use affinity_sim::store::{CacheConfig, DataObject, PutMode, Store, TransferKind};
use affinity_sim::workload::keys;
use affinity_sim::NodeId;
use proptest::prelude::*;

fn small_run(strategy: Strategy, cache: bool, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        name: "acct".into(),
        layout: StepCounts([2, 3, 3]),
        strategy,
        cache_enabled: cache,
        repetitions: 1,
        seed,
        ..Default::default()
    };
    cfg.workload.frames = 60;
    cfg.workload.warmup_discard = 10;
    cfg
}

#[test]
fn remote_bytes_conserved_across_views() {
    for strategy in [Strategy::Random, Strategy::Affinity] {
        for cache in [true, false] {
            let run = run_once(&small_run(strategy, cache, 3), 3).unwrap();
            let sim = &run.sim;
            let store = sim.store();
            let from_transfers: u64 = store.transfers().iter().map(|t| t.bytes).sum();
            let from_tasks: u64 = sim.tasks().iter().map(|t| t.metrics.remote_bytes).sum();
            let from_puts: u64 = sim
                .puts()
                .iter()
                .filter_map(|p| p.route.as_ref())
                .map(|r| r.remote_bytes)
                .sum();
            assert_eq!(from_transfers, store.stats().remote_bytes);
            assert_eq!(from_transfers, from_tasks + from_puts, "{strategy} cache={cache}");
            // per-frame records carry every byte moved on behalf of a frame
            let from_records: u64 = run.measurement.records.iter().map(|r| r.remote_bytes).sum();
            assert_eq!(from_records, from_transfers);
            // transfers never stay on one node
            assert!(store.transfers().iter().all(|t| t.from != t.to));
        }
    }
}

#[test]
fn put_transfers_match_replication() {
    let mut cfg = small_run(Strategy::Affinity, true, 5);
    cfg.replication = StepCounts([2, 2, 2]);
    let run = run_once(&cfg, 5).unwrap();
    let sim = &run.sim;
    for p in sim.puts() {
        let route = p.route.as_ref().unwrap();
        let remote_members = route.arrivals.iter().filter(|(n, _)| *n != p.origin).count() as u64;
        assert_eq!(route.remote_bytes, remote_members * p.size);
    }
    let put_bytes: u64 = sim
        .store()
        .transfers()
        .iter()
        .filter(|t| t.kind == TransferKind::Put)
        .map(|t| t.bytes)
        .sum();
    assert_eq!(
        put_bytes,
        sim.puts()
            .iter()
            .map(|p| p.route.as_ref().unwrap().remote_bytes)
            .sum::<u64>()
    );
}

fn two_pool_store(shards: usize) -> Store {
    let mut s = Store::new(
        shards + 1,
        LinkModel::default(),
        CacheConfig {
            enabled: false,
            capacity_bytes: None,
        },
    );
    s.create_pool(keys::PREDICTIONS, shards, 1, Some(keys::CLIENT_ID_REGEX))
        .unwrap();
    s
}

proptest! {
    #[test]
    fn listing_matches_brute_force(
        entries in proptest::collection::vec((0usize..3, 0usize..6, 0u64..8, 1u64..5000), 0..60),
        shards in 1usize..6,
        client in 0usize..3,
        frame in 0usize..6,
        grouped in any::<bool>(),
    ) {
        let names = ["little3", "hyang5", "gates3"];
        let mut store = Store::new(shards + 1, LinkModel::default(), CacheConfig { enabled: false, capacity_bytes: None });
        let regex = grouped.then_some(keys::CLIENT_ID_REGEX);
        store.create_pool(keys::PREDICTIONS, shards, 1, regex).unwrap();
        let mut all = BTreeMap::new();
        for &(c, k, a, size) in &entries {
            let key = keys::prediction_key(names[c], k, a);
            store.put(DataObject::synthetic(key.clone(), size), PutMode::Volatile, NodeId(shards), 0).unwrap();
            all.insert(key.to_string(), size);
        }
        let prefix = keys::prediction_prefix(names[client], frame);
        let requester = NodeId(shards);
        let out = store.list_prefix(&prefix, requester, 100).unwrap();

        let want: Vec<(String, u64)> = all
            .iter()
            .filter(|(k, _)| k.starts_with(&prefix))
            .map(|(k, s)| (k.clone(), *s))
            .collect();
        let got: Vec<(String, u64)> = out.objects.iter().map(|o| (o.key.to_string(), o.payload_size())).collect();
        prop_assert_eq!(&got, &want);

        let expected_shards = if grouped { 1 } else { shards };
        prop_assert_eq!(out.shards_consulted.len(), expected_shards);

        // requester is off every shard: each consulted shard is a parallel remote fetch
        let link = LinkModel::default();
        let per_shard_max = out
            .shards_consulted
            .iter()
            .map(|id| {
                let bytes: u64 = want
                    .iter()
                    .filter(|(k, _)| store.home_of(&affinity_sim::validate_key(k).unwrap()).unwrap() == *id)
                    .map(|(_, s)| s)
                    .sum();
                link.fetch_time(bytes, false)
            })
            .max()
            .unwrap();
        prop_assert_eq!(out.cost, per_shard_max);
        prop_assert_eq!(out.remote_bytes, want.iter().map(|(_, s)| s).sum::<u64>());
    }

    #[test]
    fn transfer_cost_is_monotone(a in 0u64..(1 << 34), b in 0u64..(1 << 34), lat in 0u64..1000, bw in 1u64..100_000, ovh in 0u64..50_000) {
        let link = LinkModel { latency_us: lat, bandwidth_bytes_per_us: bw, request_overhead_us: ovh };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(link.transfer_time(lo, false) <= link.transfer_time(hi, false));
        prop_assert!(link.fetch_time(lo, false) <= link.fetch_time(hi, false));
        prop_assert_eq!(link.transfer_time(hi, true), 0);
        prop_assert_eq!(link.fetch_time(hi, true), 0);
        prop_assert!(link.transfer_time(hi, false) <= link.fetch_time(hi, false));
        // exact closed form
        prop_assert_eq!(link.transfer_time(hi, false), lat + hi.div_ceil(bw));
    }

    #[test]
    fn local_reads_are_free(size in 1u64..(1 << 24), shards in 1usize..5) {
        let mut store = two_pool_store(shards);
        let key = keys::prediction_key("little3", 1, 2);
        let route = store.put(DataObject::synthetic(key.clone(), size), PutMode::Volatile, NodeId(shards), 0).unwrap();
        let home = route.arrivals[0].0;
        let out = store.get(&key, home, 10).unwrap();
        prop_assert_eq!(out.cost, 0);
        prop_assert_eq!(out.remote_bytes, 0);
        let far = store.get(&key, NodeId(shards), 10).unwrap();
        prop_assert_eq!(far.cost, LinkModel::default().fetch_time(size, false));
    }
}
