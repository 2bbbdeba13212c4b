//! Affinity-key placement of data and triggered computation on a simulated
//! sharded key/value cluster.
//!
//! * [`keyspace`]: keys, object pools, regex affinity keys, shard hashing.
//! * [`store`]: replicated volatile object store with per-node caches.
//! * [`compute`]: handlers fired by key prefix, FIFO per affinity key.
//! * [`netsim`]: virtual-time engine, cluster layouts, link cost model.
//! * [`workload`]: synthetic three-stage tracking/prediction/collision pipeline.
//! * [`harness`]: experiment runner, metrics, CSV output and comparisons.

pub mod compute;
pub mod error;
pub mod harness;
pub mod keyspace;
pub mod netsim;
pub mod store;
pub mod workload;

pub use error::{Error, Result};
pub use keyspace::{
    extract_affinity_key, fnv1a64, resolve_pool, shard_for, validate_key, AffinityKey, NodeId, ObjectKey, PoolPath,
    PoolRegistry, PoolSpec, ShardId,
};
