use std::sync::Arc;

use rand::Rng;

use super::keys::{self, PipelineKey};
use super::trace::seeded_rng;
use super::{FrameTrace, WorkloadConfig};
use crate::compute::{Fetch, Fetched, Handler, HandlerOutput, PutRequest, TaskContext};
use crate::keyspace::fnv1a64;
use crate::store::DataObject;

fn parse(ctx: &TaskContext<'_>) -> Result<PipelineKey, String> {
    PipelineKey::parse(ctx.event.key.as_str()).ok_or_else(|| format!("unexpected key {}", ctx.event.key))
}

/// Tracking: reads the previous frame's state, emits the new state and one
/// position object per live actor.
#[derive(Debug, Clone)]
pub struct MotHandler {
    config: Arc<WorkloadConfig>,
    trace: Arc<FrameTrace>,
}

impl MotHandler {
    pub fn new(config: Arc<WorkloadConfig>, trace: Arc<FrameTrace>) -> Self {
        MotHandler { config, trace }
    }
}

impl Handler for MotHandler {
    fn name(&self) -> &str {
        "mot"
    }

    fn inputs(&self, ctx: &TaskContext<'_>) -> Result<Vec<Fetch>, String> {
        let PipelineKey::Frame { client, frame } = parse(ctx)? else {
            return Err("MOT fired by a non-frame key".into());
        };
        Ok(match frame {
            0 => Vec::new(),
            k => vec![Fetch::Get {
                key: keys::state_key(&client, k - 1),
                blocking: true,
            }],
        })
    }

    fn execute(&self, ctx: &TaskContext<'_>, _fetched: &[Fetched]) -> Result<HandlerOutput, String> {
        let PipelineKey::Frame { client, frame } = parse(ctx)? else {
            unreachable!("checked in inputs");
        };
        let actors = self
            .trace
            .client(&client)
            .ok_or_else(|| format!("client {client} not in trace"))?
            .actors(frame);
        let cfg = &self.config;
        let mut puts = Vec::with_capacity(actors.len() + 1);
        puts.push(PutRequest::volatile(DataObject::synthetic(
            keys::state_key(&client, frame),
            cfg.state_bytes(actors.len()),
        )));
        for a in actors {
            puts.push(PutRequest::volatile(
                DataObject::synthetic(keys::position_key(&client, a.actor_id, frame), cfg.position_bytes)
                    .with_tag(a.seq),
            ));
        }
        Ok(HandlerOutput {
            service_us: cfg.mot_base_us + actors.len() as u64 * cfg.mot_per_actor_us,
            puts,
        })
    }
}

/// Trajectory prediction: needs `p` consecutive positions; reads the `p - 1`
/// earlier ones and emits one prediction.
#[derive(Debug, Clone)]
pub struct PredHandler {
    config: Arc<WorkloadConfig>,
}

impl PredHandler {
    pub fn new(config: Arc<WorkloadConfig>) -> Self {
        PredHandler { config }
    }

    fn seq(ctx: &TaskContext<'_>) -> Result<u64, String> {
        ctx.event
            .object
            .tag
            .ok_or_else(|| format!("position {} carries no sequence number", ctx.event.key))
    }
}

impl Handler for PredHandler {
    fn name(&self) -> &str {
        "pred"
    }

    fn inputs(&self, ctx: &TaskContext<'_>) -> Result<Vec<Fetch>, String> {
        let PipelineKey::Position { client, actor, frame } = parse(ctx)? else {
            return Err("PRED fired by a non-position key".into());
        };
        let p = self.config.p;
        if Self::seq(ctx)? < p as u64 {
            return Ok(Vec::new());
        }
        Ok((frame + 1 - p..frame)
            .map(|j| Fetch::Get {
                key: keys::position_key(&client, actor, j),
                blocking: true,
            })
            .collect())
    }

    fn execute(&self, ctx: &TaskContext<'_>, _fetched: &[Fetched]) -> Result<HandlerOutput, String> {
        let PipelineKey::Position { client, actor, frame } = parse(ctx)? else {
            unreachable!("checked in inputs");
        };
        if Self::seq(ctx)? < self.config.p as u64 {
            return Ok(HandlerOutput::default());
        }
        Ok(HandlerOutput {
            service_us: self.config.pred_us,
            puts: vec![PutRequest::volatile(DataObject::synthetic(
                keys::prediction_key(&client, frame, actor),
                self.config.prediction_bytes(),
            ))],
        })
    }
}

/// Collision detection: lists the frame's predictions and matches its own
/// trajectory against every prediction committed before it, so each pair of
/// a frame is evaluated exactly once.
#[derive(Debug, Clone)]
pub struct CdHandler {
    config: Arc<WorkloadConfig>,
}

impl CdHandler {
    pub fn new(config: Arc<WorkloadConfig>) -> Self {
        CdHandler { config }
    }

    /// Partners this task evaluates given the listing it saw: everything
    /// committed before its own prediction.
    pub fn partners<'a>(own: &'a DataObject, listing: &'a [Arc<DataObject>]) -> impl Iterator<Item = &'a DataObject> {
        listing
            .iter()
            .map(|o| o.as_ref())
            .filter(move |o| o.key != own.key && o.commit_seq < own.commit_seq)
    }

    pub fn pairs(own: &DataObject, listing: &[Arc<DataObject>]) -> u64 {
        Self::partners(own, listing).count() as u64
    }

    /// Whether two actors of a frame collide. Keyed on the unordered pair so
    /// the outcome does not depend on which of the two tasks evaluates it.
    pub fn collides(&self, client: &str, frame: usize, a: u64, b: u64) -> bool {
        let p = self.config.collision_probability;
        if p <= 0.0 {
            return false;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let h = fnv1a64(format!("{client}_{frame}_{lo}_{hi}").as_bytes());
        seeded_rng(self.config.rng_seed ^ h, 7).random_bool(p.min(1.0))
    }
}

impl Handler for CdHandler {
    fn name(&self) -> &str {
        "cd"
    }

    fn inputs(&self, ctx: &TaskContext<'_>) -> Result<Vec<Fetch>, String> {
        let PipelineKey::Prediction { client, frame, .. } = parse(ctx)? else {
            return Err("CD fired by a non-prediction key".into());
        };
        Ok(vec![Fetch::List {
            prefix: keys::prediction_prefix(&client, frame),
        }])
    }

    fn execute(&self, ctx: &TaskContext<'_>, fetched: &[Fetched]) -> Result<HandlerOutput, String> {
        let PipelineKey::Prediction { client, frame, actor } = parse(ctx)? else {
            unreachable!("checked in inputs");
        };
        let listing = fetched.first().map(Fetched::listing).unwrap_or(&[]);
        let mut pairs = 0;
        let mut collisions = 0;
        for other in Self::partners(&ctx.event.object, listing) {
            let Some(PipelineKey::Prediction { actor: b, .. }) = PipelineKey::parse(other.key.as_str()) else {
                return Err(format!("foreign key {} in listing", other.key));
            };
            pairs += 1;
            collisions += u64::from(self.collides(&client, frame, actor, b));
        }
        Ok(HandlerOutput {
            service_us: pairs * self.config.cd_per_pair_us,
            puts: vec![PutRequest::volatile(DataObject::synthetic(
                keys::cd_key(&client, frame, actor, collisions),
                self.config.cd_result_bytes,
            ))],
        })
    }
}
