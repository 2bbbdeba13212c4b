//! Synthetic three-stage pipeline: multi-object tracking (MOT), trajectory
//! prediction (PRED) and collision detection (CD), driven by a generated actor
//! trace. Only the data-access pattern and object sizes are modeled.

mod config;
mod handlers;
pub mod keys;
mod trace;

use std::sync::Arc;

pub use config::WorkloadConfig;
pub use handlers::{CdHandler, MotHandler, PredHandler};
pub use trace::{generate_trace, seeded_rng, splitmix64, ActorTrack, ClientTrace, FrameTrace, LiveActor};

use crate::compute::{PutRequest, StepLabel};
use crate::error::{Error, Result};
use crate::keyspace::NodeId;
use crate::netsim::{Micros, Simulator};
use crate::store::{DataObject, PutMode};

/// A frame put a client will issue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourcePut {
    pub at: Micros,
    pub client: String,
    pub frame: usize,
    pub request_key: String,
    pub bytes: u64,
    pub mode: PutMode,
}

/// Frame `k` of `client` is put at `k * 1e6 / fps` microseconds.
pub fn client_source(client: &str, config: &WorkloadConfig) -> Vec<SourcePut> {
    let period = config.frame_period_us();
    let mode = if config.trigger_frames {
        PutMode::Trigger
    } else {
        PutMode::Volatile
    };
    (0..config.frames)
        .map(|k| SourcePut {
            at: k as Micros * period,
            client: client.to_string(),
            frame: k,
            request_key: keys::frame_key(client, k).to_string(),
            bytes: config.frame_bytes,
            mode,
        })
        .collect()
}

/// Registers the three handlers and schedules every client's frames.
/// `client_nodes[i]` issues the puts of `config.clients[i]`.
pub fn install_pipeline(
    sim: &mut Simulator,
    config: &WorkloadConfig,
    trace: Arc<FrameTrace>,
    client_nodes: &[NodeId],
) -> Result<()> {
    config.validate()?;
    if client_nodes.len() != config.clients.len() {
        return Err(Error::BadConfig(format!(
            "{} clients but {} client nodes",
            config.clients.len(),
            client_nodes.len()
        )));
    }
    for c in &config.clients {
        if trace.client(c).is_none() {
            return Err(Error::BadConfig(format!("client {c} missing from trace")));
        }
    }
    let shared = Arc::new(config.clone());
    sim.register_udl(
        keys::FRAMES,
        Box::new(MotHandler::new(shared.clone(), trace)),
        StepLabel::Mot,
    )?;
    sim.register_udl(
        keys::POSITIONS,
        Box::new(PredHandler::new(shared.clone())),
        StepLabel::Pred,
    )?;
    sim.register_udl(keys::PREDICTIONS, Box::new(CdHandler::new(shared)), StepLabel::Cd)?;

    // frames interleave across clients in time order
    let mut sources: Vec<(SourcePut, NodeId)> = config
        .clients
        .iter()
        .zip(client_nodes)
        .flat_map(|(c, &node)| client_source(c, config).into_iter().map(move |s| (s, node)))
        .collect();
    sources.sort_by_key(|(s, node)| (s.at, node.0));
    for (s, node) in sources {
        let object = DataObject::synthetic(keys::frame_key(&s.client, s.frame), s.bytes);
        sim.schedule_put(s.at, node, PutRequest { object, mode: s.mode })?;
    }
    Ok(())
}
