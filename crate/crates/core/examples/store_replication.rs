//! The object store on its own: a replicated pool, put arrivals, and the cost
//! of reading from a member, from a non-member, and again from the cache.
//! A member read is free but still counts as a cache miss.

use affinity_sim::netsim::LinkModel;
use affinity_sim::store::{CacheConfig, DataObject, PutMode, Store};
use affinity_sim::{validate_key, NodeId};

fn main() -> Result<(), affinity_sim::Error> {
    let link = LinkModel {
        request_overhead_us: 1_000,
        ..LinkModel::default()
    };
    // nodes 0..6 host 2 shards x 3 replicas, node 6 is an outside client
    let mut store = Store::new(
        7,
        link,
        CacheConfig {
            enabled: true,
            capacity_bytes: Some(64 << 20),
        },
    );
    store.create_pool("/states", 2, 3, Some("/[a-zA-Z0-9]+_"))?;

    let key = validate_key("/states/little3_42")?;
    let route = store.put(
        DataObject::synthetic(key.clone(), 2 << 20),
        PutMode::Volatile,
        NodeId(6),
        0,
    )?;
    println!(
        "put {} -> shard {} (affinity {:?})",
        key,
        route.shard,
        route.affinity.map(|a| a.to_string())
    );
    for (node, at) in &route.arrivals {
        println!("  copy on node {node} at {at} us");
    }
    println!(
        "  complete at {} us, {} bytes on the wire",
        route.completed_at, route.remote_bytes
    );

    // the writer caches what it put, so read from a node of the other shard
    let member = route.arrivals[0].0;
    let outsider = NodeId(4);
    for (who, node) in [("member", member), ("outsider", outsider), ("outsider again", outsider)] {
        let got = store.get(&key, node, route.completed_at)?;
        println!(
            "get from {who:<15} source {:?}, cost {} us, {} remote bytes",
            got.source, got.cost, got.remote_bytes
        );
    }
    let stats = store.stats();
    println!(
        "cache hits {}, misses {}, remote bytes {}",
        stats.cache_hits, stats.cache_misses, stats.remote_bytes
    );
    Ok(())
}
