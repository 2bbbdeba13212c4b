//! Deterministic discrete-event engine, cluster layouts and the network cost model.

mod engine;
mod event;
mod layout;
mod link;

pub use engine::{build_cluster, EventRecord, PutRecord, RunSummary, SimConfig, Simulator, RUN_LOG_HEADER};
pub use event::{Event, EventQueue, VirtualClock};
pub use layout::{ClusterLayout, NodeSpec, PoolPlacement};
pub use link::{LinkModel, Micros};

/// Transfer time under the default link.
pub fn transfer_time(bytes: u64, local: bool) -> Micros {
    LinkModel::default().transfer_time(bytes, local)
}
