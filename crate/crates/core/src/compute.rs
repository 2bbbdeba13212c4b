//! Trigger framework: handlers registered under key prefixes and fired by puts.
//!
//! A handler is described as a two-phase plan. [`Handler::inputs`] names the
//! objects the task reads; the simulator fetches them in order (suspending on
//! missing keys for blocking gets) and then calls [`Handler::execute`] with
//! the results, which returns the compute time to charge and the puts to issue.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::keyspace::{segment_prefix_of, validate_key, AffinityKey, NodeId, ObjectKey, ShardId};
use crate::netsim::Micros;
use crate::store::{DataObject, PutMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StepLabel {
    Mot,
    Pred,
    Cd,
    Other,
}

impl StepLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            StepLabel::Mot => "MOT",
            StepLabel::Pred => "PRED",
            StepLabel::Cd => "CD",
            StepLabel::Other => "OTHER",
        }
    }
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HandlerId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UdlRegistration {
    pub prefix: String,
    pub handler_id: HandlerId,
    pub handler_name: String,
    pub step_label: StepLabel,
}

/// Prefix table, identical on every node.
#[derive(Debug, Clone, Default)]
pub struct UdlRegistry {
    entries: Vec<UdlRegistration>,
}

impl UdlRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_udl(
        &mut self,
        prefix: &str,
        handler_id: HandlerId,
        handler_name: &str,
        step_label: StepLabel,
    ) -> Result<&UdlRegistration> {
        validate_key(prefix)?;
        if self.entries.iter().any(|e| e.prefix == prefix) {
            return Err(Error::DuplicatePrefix(prefix.to_string()));
        }
        self.entries.push(UdlRegistration {
            prefix: prefix.to_string(),
            handler_id,
            handler_name: handler_name.to_string(),
            step_label,
        });
        Ok(self.entries.last().unwrap())
    }

    /// Longest registered prefix matching `key` at a segment boundary.
    pub fn lookup(&self, key: &ObjectKey) -> Option<&UdlRegistration> {
        self.entries
            .iter()
            .filter(|e| segment_prefix_of(&e.prefix, key.as_str()))
            .max_by_key(|e| e.prefix.len())
    }

    pub fn iter(&self) -> impl Iterator<Item = &UdlRegistration> {
        self.entries.iter()
    }
}

#[derive(Debug, Clone)]
pub struct TriggerEvent {
    pub key: ObjectKey,
    pub affinity_key: Option<AffinityKey>,
    pub node: NodeId,
    pub fired_at: Micros,
    /// Home shard the triggering put landed on.
    pub shard: ShardId,
    /// The delivered object (stored or not).
    pub object: Arc<DataObject>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskState {
    Queued,
    Running,
    Suspended,
    Done,
    Failed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TaskMetrics {
    pub fetch_us: Micros,
    pub service_us: Micros,
    pub remote_bytes: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub gets: u64,
    pub remote_gets: u64,
}

#[derive(Debug, Clone)]
pub struct TaskInstance {
    pub id: usize,
    pub event: TriggerEvent,
    pub registration: UdlRegistration,
    pub state: TaskState,
    pub start_us: Option<Micros>,
    pub done_us: Option<Micros>,
    pub metrics: TaskMetrics,
}

impl TaskInstance {
    pub fn service_time(&self) -> Micros {
        self.metrics.service_us
    }
}

/// One read a handler wants before it computes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fetch {
    Get { key: ObjectKey, blocking: bool },
    List { prefix: String },
}

#[derive(Debug, Clone)]
pub enum Fetched {
    Object(Arc<DataObject>),
    /// Non-blocking get of an absent key.
    Missing(ObjectKey),
    Listing(Vec<Arc<DataObject>>),
}

impl Fetched {
    pub fn object(&self) -> Option<&Arc<DataObject>> {
        match self {
            Fetched::Object(o) => Some(o),
            _ => None,
        }
    }

    pub fn listing(&self) -> &[Arc<DataObject>] {
        match self {
            Fetched::Listing(v) => v,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone)]
pub struct PutRequest {
    pub object: DataObject,
    pub mode: PutMode,
}

impl PutRequest {
    pub fn volatile(object: DataObject) -> Self {
        PutRequest {
            object,
            mode: PutMode::Volatile,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct HandlerOutput {
    pub service_us: Micros,
    pub puts: Vec<PutRequest>,
}

/// What a running task can see.
#[derive(Debug, Clone, Copy)]
pub struct TaskContext<'a> {
    pub task_id: usize,
    pub event: &'a TriggerEvent,
    /// Per-task seed derived from the run seed and the trigger key.
    pub seed: u64,
}

pub trait Handler {
    fn name(&self) -> &str;

    fn inputs(&self, ctx: &TaskContext<'_>) -> Result<Vec<Fetch>, String>;

    fn execute(&self, ctx: &TaskContext<'_>, fetched: &[Fetched]) -> Result<HandlerOutput, String>;
}
