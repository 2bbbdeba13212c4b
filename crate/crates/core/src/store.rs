//! Sharded volatile object store with per-node caches.
//!
//! The store owns pool definitions, shard membership, replicated objects and
//! node caches, and prices every access with the [`LinkModel`]. It has no
//! notion of time passing: callers pass `now` and receive the cost of each
//! operation. The simulator splits a put into [`Store::route_put`] (at issue
//! time) and [`Store::commit_put`] (at completion), so objects only become
//! visible once the slowest replica has them.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::keyspace::{fnv1a64, AffinityKey, NodeId, ObjectKey, PoolRegistry, PoolSpec, ShardId};
use crate::netsim::{ClusterLayout, LinkModel, Micros, PoolPlacement};

/// Object body. Only the size matters to the cost model, so synthetic payloads
/// carry a length instead of a zero-filled buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Synthetic(u64),
    Bytes(Arc<[u8]>),
}

impl Payload {
    pub fn len(&self) -> u64 {
        match self {
            Payload::Synthetic(n) => *n,
            Payload::Bytes(b) => b.len() as u64,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Materializes the body; synthetic payloads read as zeros.
    pub fn to_vec(&self) -> Vec<u8> {
        match self {
            Payload::Synthetic(n) => vec![0; *n as usize],
            Payload::Bytes(b) => b.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataObject {
    pub key: ObjectKey,
    pub payload: Payload,
    /// Small application value carried with the object (the RCP workload keeps
    /// an actor's sequence number here).
    pub tag: Option<u64>,
    /// Starts at 1, bumped on every overwrite of the key.
    pub version: u64,
    pub created_at: Micros,
    /// Global commit order across the whole store.
    pub commit_seq: u64,
}

impl DataObject {
    pub fn new(key: ObjectKey, payload: Payload) -> Self {
        DataObject {
            key,
            payload,
            tag: None,
            version: 0,
            created_at: 0,
            commit_seq: 0,
        }
    }

    pub fn synthetic(key: ObjectKey, size: u64) -> Self {
        Self::new(key, Payload::Synthetic(size))
    }

    pub fn with_tag(mut self, tag: u64) -> Self {
        self.tag = Some(tag);
        self
    }

    pub fn payload_size(&self) -> u64 {
        self.payload.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PutMode {
    /// Fires the matching handler and is then dropped.
    Trigger,
    /// Stored and replicated on every member of the home shard.
    Volatile,
}

#[derive(Debug, Clone)]
pub struct ShardState {
    pub members: Vec<NodeId>,
    /// Identical on every member once a put has completed, so kept once.
    pub objects: BTreeMap<ObjectKey, Arc<DataObject>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CacheConfig {
    pub enabled: bool,
    /// LRU byte budget per node; `None` keeps everything.
    pub capacity_bytes: Option<u64>,
}

#[derive(Debug, Default, Clone)]
pub struct CacheState {
    entries: HashMap<ObjectKey, (Arc<DataObject>, u64)>,
    lru: BTreeMap<u64, ObjectKey>,
    bytes: u64,
    tick: u64,
}

impl CacheState {
    fn lookup(&mut self, key: &ObjectKey) -> Option<Arc<DataObject>> {
        self.tick += 1;
        let tick = self.tick;
        let (obj, stamp) = self.entries.get_mut(key)?;
        self.lru.remove(stamp);
        *stamp = tick;
        self.lru.insert(tick, key.clone());
        Some(obj.clone())
    }

    fn insert(&mut self, obj: Arc<DataObject>, capacity: Option<u64>) {
        let size = obj.payload_size();
        if capacity.is_some_and(|cap| size > cap) {
            return;
        }
        self.tick += 1;
        if let Some((old, stamp)) = self.entries.remove(&obj.key) {
            self.lru.remove(&stamp);
            self.bytes -= old.payload_size();
        }
        if let Some(cap) = capacity {
            while self.bytes + size > cap {
                let Some((_, victim)) = self.lru.pop_first() else { break };
                if let Some((old, _)) = self.entries.remove(&victim) {
                    self.bytes -= old.payload_size();
                }
            }
        }
        self.bytes += size;
        self.lru.insert(self.tick, obj.key.clone());
        self.entries.insert(obj.key.clone(), (obj, self.tick));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn bytes(&self) -> u64 {
        self.bytes
    }

    pub fn contains(&self, key: &ObjectKey) -> bool {
        self.entries.contains_key(key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferKind {
    /// Origin to a home-shard member during a put.
    Put,
    Get,
    List,
}

/// One remote byte movement, for accounting replay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transfer {
    pub kind: TransferKind,
    pub key: String,
    pub from: NodeId,
    pub to: NodeId,
    pub bytes: u64,
    pub at: Micros,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StoreStats {
    pub remote_bytes: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub local_reads: u64,
    pub remote_reads: u64,
    /// Keys in grouped pools whose regex did not match.
    pub affinity_fallbacks: u64,
}

/// Where a put goes and what it costs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PutRoute {
    pub key: ObjectKey,
    pub mode: PutMode,
    pub origin: NodeId,
    pub shard: ShardId,
    pub affinity: Option<AffinityKey>,
    /// Member that runs a triggered handler.
    pub designated: NodeId,
    /// Per receiving member, arrival time of its copy.
    pub arrivals: Vec<(NodeId, Micros)>,
    pub issued_at: Micros,
    pub completed_at: Micros,
    pub remote_bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadSource {
    Cache,
    LocalReplica,
    Remote(NodeId),
}

#[derive(Debug, Clone)]
pub struct GetOutcome {
    pub object: Arc<DataObject>,
    pub source: ReadSource,
    pub cost: Micros,
    pub remote_bytes: u64,
}

#[derive(Debug, Clone)]
pub struct ListOutcome {
    pub objects: Vec<Arc<DataObject>>,
    pub shards_consulted: Vec<ShardId>,
    pub cost: Micros,
    pub remote_bytes: u64,
}

#[derive(Debug, Clone)]
pub struct Store {
    registry: PoolRegistry,
    shards: BTreeMap<ShardId, ShardState>,
    caches: Vec<CacheState>,
    cache: CacheConfig,
    link: LinkModel,
    node_count: usize,
    stats: StoreStats,
    transfers: Vec<Transfer>,
    next_commit: u64,
}

impl Store {
    pub fn new(node_count: usize, link: LinkModel, cache: CacheConfig) -> Self {
        Store {
            registry: PoolRegistry::new(),
            shards: BTreeMap::new(),
            caches: vec![CacheState::default(); node_count],
            cache,
            link,
            node_count,
            stats: StoreStats::default(),
            transfers: Vec::new(),
            next_commit: 1,
        }
    }

    /// A store with every pool of `layout` registered.
    pub fn from_layout(layout: &ClusterLayout, link: LinkModel, cache: CacheConfig) -> Result<Self> {
        layout.validate()?;
        let mut store = Store::new(layout.node_count(), link, cache);
        for PoolPlacement { spec, nodes } in &layout.pools {
            store.create_object_pool(spec.clone(), nodes)?;
        }
        Ok(store)
    }

    pub fn link(&self) -> &LinkModel {
        &self.link
    }

    pub fn cache_config(&self) -> CacheConfig {
        self.cache
    }

    pub fn registry(&self) -> &PoolRegistry {
        &self.registry
    }

    pub fn stats(&self) -> StoreStats {
        self.stats
    }

    pub fn transfers(&self) -> &[Transfer] {
        &self.transfers
    }

    pub fn cache(&self, node: NodeId) -> &CacheState {
        &self.caches[node.0]
    }

    pub fn shard(&self, id: &ShardId) -> Option<&ShardState> {
        self.shards.get(id)
    }

    pub fn shards(&self) -> impl Iterator<Item = (&ShardId, &ShardState)> {
        self.shards.iter()
    }

    /// Registers `spec`; shard `i` is served by `nodes[i*r..(i+1)*r]`.
    pub fn create_object_pool(&mut self, spec: PoolSpec, nodes: &[NodeId]) -> Result<PoolSpec> {
        if self.registry.get(spec.path.as_str()).is_some() {
            return Err(Error::DuplicatePool(spec.path.to_string()));
        }
        let r = spec.replication_factor;
        let needed = spec.shard_count * r;
        let usable = nodes.iter().filter(|n| n.0 < self.node_count).count();
        if usable < needed || nodes.len() < needed {
            return Err(Error::InsufficientNodes {
                pool: spec.path.to_string(),
                needed,
                available: usable.min(nodes.len()),
            });
        }
        self.registry.insert(spec.clone())?;
        for index in 0..spec.shard_count {
            self.shards.insert(
                ShardId {
                    pool: spec.path.clone(),
                    index,
                },
                ShardState {
                    members: nodes[index * r..(index + 1) * r].to_vec(),
                    objects: BTreeMap::new(),
                },
            );
        }
        Ok(spec)
    }

    /// Convenience: hosts the pool on nodes `0..shard_count * r`.
    pub fn create_pool(
        &mut self,
        path: &str,
        shard_count: usize,
        replication_factor: usize,
        affinity_regex: Option<&str>,
    ) -> Result<PoolSpec> {
        let spec = PoolSpec::new(path, shard_count, replication_factor, affinity_regex)?;
        let nodes: Vec<NodeId> = (0..self.node_count).map(NodeId).collect();
        self.create_object_pool(spec, &nodes)
    }

    fn members(&self, shard: &ShardId) -> &[NodeId] {
        &self.shards[shard].members
    }

    /// Works out the home shard, the receiving members and their arrival times.
    /// Nothing is stored.
    pub fn route_put(
        &mut self,
        key: &ObjectKey,
        size: u64,
        mode: PutMode,
        origin: NodeId,
        now: Micros,
    ) -> Result<PutRoute> {
        let pool = self.registry.resolve(key)?;
        let placement = pool.place(key);
        if placement.fallback {
            self.stats.affinity_fallbacks += 1;
        }
        let members = self.members(&placement.shard).to_vec();
        let designated = members[(fnv1a64(key.as_str().as_bytes()) % members.len() as u64) as usize];
        let receivers: Vec<NodeId> = match mode {
            PutMode::Volatile => members.clone(),
            PutMode::Trigger => vec![designated],
        };
        let mut arrivals = Vec::with_capacity(receivers.len());
        let mut remote_bytes = 0;
        for to in receivers {
            let local = to == origin;
            if !local {
                remote_bytes += size;
                self.record(TransferKind::Put, key.as_str(), origin, to, size, now);
            }
            arrivals.push((to, now + self.link.transfer_time(size, local)));
        }
        let completed_at = arrivals.iter().map(|&(_, t)| t).max().unwrap_or(now);
        Ok(PutRoute {
            key: key.clone(),
            mode,
            origin,
            shard: placement.shard,
            affinity: placement.affinity,
            designated,
            arrivals,
            issued_at: now,
            completed_at,
            remote_bytes,
        })
    }

    /// Applies a routed put at its completion time. Returns the stored object
    /// (volatile) or the delivered one (trigger).
    pub fn commit_put(&mut self, route: &PutRoute, mut object: DataObject) -> Arc<DataObject> {
        object.key = route.key.clone();
        object.created_at = route.completed_at;
        object.commit_seq = self.next_commit;
        self.next_commit += 1;
        match route.mode {
            PutMode::Trigger => {
                object.version = 0;
                Arc::new(object)
            }
            PutMode::Volatile => {
                let shard = self.shards.get_mut(&route.shard).expect("routed shard exists");
                object.version = shard.objects.get(&route.key).map_or(1, |o| o.version + 1);
                let object = Arc::new(object);
                shard.objects.insert(route.key.clone(), object.clone());
                if self.cache.enabled {
                    self.caches[route.origin.0].insert(object.clone(), self.cache.capacity_bytes);
                }
                object
            }
        }
    }

    /// Routes and commits in one step; returns the route (completion time included).
    pub fn put(&mut self, object: DataObject, mode: PutMode, origin: NodeId, now: Micros) -> Result<PutRoute> {
        let route = self.route_put(&object.key.clone(), object.payload_size(), mode, origin, now)?;
        self.commit_put(&route, object);
        Ok(route)
    }

    /// Home shard of a key without side effects.
    pub fn home_of(&self, key: &ObjectKey) -> Result<ShardId> {
        Ok(self.registry.resolve(key)?.place(key).shard)
    }

    /// Non-blocking read: requester cache, then a local replica, then `members[0]` of the home shard.
    pub fn get(&mut self, key: &ObjectKey, requester: NodeId, now: Micros) -> Result<GetOutcome> {
        let shard_id = self.home_of(key)?;
        if self.cache.enabled {
            if let Some(object) = self.caches[requester.0].lookup(key) {
                self.stats.cache_hits += 1;
                return Ok(GetOutcome {
                    object,
                    source: ReadSource::Cache,
                    cost: 0,
                    remote_bytes: 0,
                });
            }
        }
        let shard = &self.shards[&shard_id];
        let Some(object) = shard.objects.get(key).cloned() else {
            return Err(Error::ObjectMissing(key.to_string()));
        };
        self.stats.cache_misses += 1;
        let (source, cost, remote_bytes) = if shard.members.contains(&requester) {
            self.stats.local_reads += 1;
            (ReadSource::LocalReplica, 0, 0)
        } else {
            let from = shard.members[0];
            let size = object.payload_size();
            self.stats.remote_reads += 1;
            self.record(TransferKind::Get, key.as_str(), from, requester, size, now);
            (ReadSource::Remote(from), self.link.fetch_time(size, false), size)
        };
        if self.cache.enabled {
            self.caches[requester.0].insert(object.clone(), self.cache.capacity_bytes);
        }
        Ok(GetOutcome {
            object,
            source,
            cost,
            remote_bytes,
        })
    }

    /// True if the key is stored (ignores caches).
    pub fn contains(&self, key: &ObjectKey) -> bool {
        self.home_of(key)
            .ok()
            .and_then(|s| self.shards.get(&s))
            .is_some_and(|s| s.objects.contains_key(key))
    }

    /// All stored objects whose key starts with `prefix`, in key order.
    ///
    /// In a grouped pool a prefix whose text already yields an affinity key is
    /// answered by that key's shard alone. This assumes the regex match is
    /// fixed by the prefix, which holds for delimiter-terminated patterns.
    pub fn list_prefix(&mut self, prefix: &str, requester: NodeId, now: Micros) -> Result<ListOutcome> {
        let pool = self.registry.resolve_text(prefix)?.clone();
        let single = pool
            .affinity_regex
            .as_ref()
            .and_then(|re| re.extract(prefix))
            .map(|label| {
                let index = (fnv1a64(label.as_str().as_bytes()) % pool.shard_count as u64) as usize;
                ShardId {
                    pool: pool.path.clone(),
                    index,
                }
            });
        let consulted: Vec<ShardId> = match single {
            Some(id) => vec![id],
            None => (0..pool.shard_count)
                .map(|index| ShardId {
                    pool: pool.path.clone(),
                    index,
                })
                .collect(),
        };

        let mut objects = Vec::new();
        let mut cost = 0;
        let mut remote_bytes = 0;
        let mut remote = Vec::new();
        for id in &consulted {
            let shard = &self.shards[id];
            let found: Vec<Arc<DataObject>> = shard
                .objects
                .range(prefix_start(prefix)..)
                .take_while(|(k, _)| k.as_str().starts_with(prefix))
                .map(|(_, o)| o.clone())
                .collect();
            if !shard.members.contains(&requester) {
                let bytes: u64 = found.iter().map(|o| o.payload_size()).sum();
                cost = cost.max(self.link.fetch_time(bytes, false));
                remote_bytes += bytes;
                remote.push((shard.members[0], bytes));
            }
            objects.extend(found);
        }
        for (from, bytes) in remote {
            if bytes > 0 {
                self.record(TransferKind::List, prefix, from, requester, bytes, now);
            }
        }
        objects.sort_by(|a, b| a.key.cmp(&b.key));
        Ok(ListOutcome {
            objects,
            shards_consulted: consulted,
            cost,
            remote_bytes,
        })
    }

    fn record(&mut self, kind: TransferKind, key: &str, from: NodeId, to: NodeId, bytes: u64, at: Micros) {
        self.stats.remote_bytes += bytes;
        self.transfers.push(Transfer {
            kind,
            key: key.to_string(),
            from,
            to,
            bytes,
            at,
        });
    }

    /// One line per object per member: `pool,shard,node,key,affinity_key,bytes,version`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (id, shard) in &self.shards {
            let pool = self.registry.get(id.pool.as_str()).expect("registered pool");
            for &node in &shard.members {
                for (key, obj) in &shard.objects {
                    let affinity = pool
                        .affinity_regex
                        .as_ref()
                        .and_then(|re| re.extract(key.as_str()))
                        .map(|a| a.to_string())
                        .unwrap_or_default();
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        id.pool,
                        id.index,
                        node,
                        key,
                        affinity,
                        obj.payload_size(),
                        obj.version
                    )
                    .unwrap();
                }
            }
        }
        out
    }
}

fn prefix_start(prefix: &str) -> ObjectKey {
    // range bound only
    ObjectKey::from_raw(prefix)
}
