//! Key space, object pools and the affinity function.
//!
//! An [`ObjectKey`] is a slash-separated path. Every key belongs to exactly one
//! object pool, found by segment-aligned prefix match. A pool may carry an
//! affinity regex: the leftmost match of that regex against the full key text
//! is the key's [`AffinityKey`], and the shard is chosen by hashing the
//! affinity key instead of the key itself. Keys that share an affinity key
//! therefore always land on the same shard, on every node that evaluates them.

use std::fmt;

use regex::Regex;

use crate::error::{Error, Result};

/// Hierarchical object key, e.g. `/positions/little3_7_42`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectKey(String);

impl ObjectKey {
    /// Skips validation. Used for ordering bounds, not stored keys.
    pub(crate) fn from_raw(text: &str) -> Self {
        ObjectKey(text.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Segments after the leading slash.
    pub fn segments(&self) -> impl Iterator<Item = &str> {
        self.0[1..].split('/')
    }

    /// True when `prefix` names this key or one of its ancestors.
    pub fn has_segment_prefix(&self, prefix: &str) -> bool {
        segment_prefix_of(prefix, &self.0)
    }
}

impl fmt::Display for ObjectKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for ObjectKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        validate_key(s)
    }
}

impl AsRef<str> for ObjectKey {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Checks the key invariants: non-empty, leading `/`, no empty segment, no whitespace.
pub fn validate_key(text: &str) -> Result<ObjectKey> {
    let bad = |reason| {
        Err(Error::MalformedKey {
            key: text.to_string(),
            reason,
        })
    };
    if text.is_empty() {
        return bad("empty");
    }
    if !text.starts_with('/') {
        return bad("missing leading '/'");
    }
    if text.chars().any(char::is_whitespace) {
        return bad("contains whitespace");
    }
    if text[1..].split('/').any(str::is_empty) {
        return bad("empty segment");
    }
    Ok(ObjectKey(text.to_string()))
}

/// `prefix` matches `text` at a segment boundary.
pub(crate) fn segment_prefix_of(prefix: &str, text: &str) -> bool {
    match text.strip_prefix(prefix) {
        Some(rest) => rest.is_empty() || rest.starts_with('/') || prefix.ends_with('/'),
        None => false,
    }
}

/// Path prefix identifying an object pool, e.g. `/frames`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PoolPath(String);

impl PoolPath {
    pub fn new(prefix: &str) -> Result<Self> {
        let key = validate_key(prefix)?;
        Ok(PoolPath(key.0))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The pool owns `text` (a key or a key prefix).
    pub fn covers(&self, text: &str) -> bool {
        segment_prefix_of(&self.0, text)
    }
}

impl fmt::Display for PoolPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Label extracted from a key; objects and tasks sharing it are collocated.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AffinityKey(String);

impl AffinityKey {
    pub fn new(label: impl Into<String>) -> Option<Self> {
        let label = label.into();
        (!label.is_empty()).then_some(AffinityKey(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AffinityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    PutVolatile,
    PutTrigger,
    Get,
    List,
}

/// Metadata about a request on a data object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Descriptor {
    pub key: ObjectKey,
    pub op_kind: OpKind,
}

/// Compiled affinity regex that remembers its source text.
#[derive(Clone)]
pub struct AffinityRegex {
    text: String,
    compiled: Regex,
}

impl AffinityRegex {
    pub fn new(text: &str) -> Result<Self> {
        let compiled = Regex::new(text).map_err(|e| Error::BadRegex {
            regex: text.to_string(),
            message: e.to_string(),
        })?;
        Ok(AffinityRegex {
            text: text.to_string(),
            compiled,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// Leftmost match against the full key text. Empty matches count as no match.
    pub fn extract(&self, key: &str) -> Option<AffinityKey> {
        self.compiled.find(key).and_then(|m| AffinityKey::new(m.as_str()))
    }
}

impl fmt::Debug for AffinityRegex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("AffinityRegex").field(&self.text).finish()
    }
}

impl PartialEq for AffinityRegex {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl Eq for AffinityRegex {}

/// Extracts the affinity key of `key` under `regex`, compiling the regex first.
pub fn extract_affinity_key(regex: &str, key: &ObjectKey) -> Result<Option<AffinityKey>> {
    Ok(AffinityRegex::new(regex)?.extract(key.as_str()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolSpec {
    pub path: PoolPath,
    pub shard_count: usize,
    pub replication_factor: usize,
    pub affinity_regex: Option<AffinityRegex>,
}

impl PoolSpec {
    pub fn new(
        path: &str,
        shard_count: usize,
        replication_factor: usize,
        affinity_regex: Option<&str>,
    ) -> Result<Self> {
        let path = PoolPath::new(path)?;
        if shard_count == 0 {
            return Err(Error::BadConfig(format!("pool {path}: shard_count must be >= 1")));
        }
        if replication_factor == 0 {
            return Err(Error::BadConfig(format!(
                "pool {path}: replication_factor must be >= 1"
            )));
        }
        let affinity_regex = affinity_regex.map(AffinityRegex::new).transpose()?;
        Ok(PoolSpec {
            path,
            shard_count,
            replication_factor,
            affinity_regex,
        })
    }

    pub fn is_grouped(&self) -> bool {
        self.affinity_regex.is_some()
    }

    /// Shard placement of `key`, together with the label that produced it.
    pub fn place(&self, key: &ObjectKey) -> Placement {
        let affinity = self.affinity_regex.as_ref().and_then(|re| re.extract(key.as_str()));
        let hashed = match &affinity {
            Some(label) => label.as_str(),
            None => key.as_str(),
        };
        Placement {
            shard: ShardId {
                pool: self.path.clone(),
                index: (fnv1a64(hashed.as_bytes()) % self.shard_count as u64) as usize,
            },
            fallback: self.is_grouped() && affinity.is_none(),
            affinity,
        }
    }
}

/// Outcome of placing one key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub shard: ShardId,
    pub affinity: Option<AffinityKey>,
    /// The pool is grouped but its regex did not match this key.
    pub fallback: bool,
}

/// Home shard of `key` within `pool`.
pub fn shard_for(pool: &PoolSpec, key: &ObjectKey) -> ShardId {
    pool.place(key).shard
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ShardId {
    pub pool: PoolPath,
    pub index: usize,
}

impl fmt::Display for ShardId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.pool, self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a, 64 bit.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |hash, &b| (hash ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Registered pools, resolved by segment-aligned prefix.
#[derive(Debug, Clone, Default)]
pub struct PoolRegistry {
    pools: Vec<PoolSpec>,
}

impl PoolRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, spec: PoolSpec) -> Result<()> {
        for existing in &self.pools {
            if existing.path == spec.path {
                return Err(Error::DuplicatePool(spec.path.to_string()));
            }
            if existing.path.covers(spec.path.as_str()) || spec.path.covers(existing.path.as_str()) {
                return Err(Error::OverlappingPool {
                    new: spec.path.to_string(),
                    existing: existing.path.to_string(),
                });
            }
        }
        self.pools.push(spec);
        Ok(())
    }

    pub fn resolve(&self, key: &ObjectKey) -> Result<&PoolSpec> {
        self.resolve_text(key.as_str())
    }

    /// Resolves a key or key prefix (list prefixes need not be valid keys).
    pub fn resolve_text(&self, text: &str) -> Result<&PoolSpec> {
        self.pools
            .iter()
            .find(|p| p.path.covers(text))
            .ok_or_else(|| Error::NoSuchPool(text.to_string()))
    }

    pub fn get(&self, path: &str) -> Option<&PoolSpec> {
        self.pools.iter().find(|p| p.path.as_str() == path)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PoolSpec> {
        self.pools.iter()
    }

    pub fn len(&self) -> usize {
        self.pools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pools.is_empty()
    }
}

/// Resolves `key` against a set of pool specs.
pub fn resolve_pool<'a>(key: &ObjectKey, registry: &'a PoolRegistry) -> Result<&'a PoolSpec> {
    registry.resolve(key)
}
