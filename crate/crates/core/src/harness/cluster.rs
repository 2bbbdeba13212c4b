use crate::error::Result;
use crate::keyspace::{NodeId, PoolSpec};
use crate::netsim::{ClusterLayout, NodeSpec};
use crate::workload::keys;

use super::{ExperimentConfig, Strategy};

/// Which step's nodes host a pool.
const POOLS: [(&str, usize, &str); 5] = [
    (keys::FRAMES, 0, keys::CLIENT_REGEX),
    (keys::STATES, 0, keys::CLIENT_REGEX),
    (keys::POSITIONS, 1, keys::CLIENT_ID_REGEX),
    (keys::PREDICTIONS, 2, keys::CLIENT_ID_REGEX),
    (keys::CD, 2, ""),
];

/// A cluster for the tracking pipeline plus the node of each client.
#[derive(Debug, Clone)]
pub struct PipelineCluster {
    pub layout: ClusterLayout,
    pub client_nodes: Vec<NodeId>,
}

/// Builds the cluster for `config`.
///
/// Nodes are numbered step by step: the MOT step gets `x * r` nodes hosting
/// `/frames` and `/states`, then PRED gets `y * r` for `/positions`, then CD
/// gets `z * r` for `/predictions` and `/cd`. Client nodes come last and run
/// no tasks. Under [`Strategy::Affinity`] pools carry the grouping regexes;
/// under [`Strategy::Random`] none do, so every key hashes as a whole.
pub fn pipeline_cluster(config: &ExperimentConfig) -> Result<PipelineCluster> {
    let shards = config.layout.0;
    let repl = config.replication.0;
    let mut offsets = [0usize; 3];
    let mut total = 0;
    for step in 0..3 {
        offsets[step] = total;
        total += shards[step] * repl[step];
    }
    let clients = config.workload.clients.len();
    let mut nodes = vec![
        NodeSpec {
            workers: config.workers_per_node
        };
        total
    ];
    nodes.extend(std::iter::repeat_n(NodeSpec { workers: 0 }, clients));

    let mut layout = ClusterLayout::new(nodes);
    for (path, step, regex) in POOLS {
        let regex = match config.strategy {
            Strategy::Affinity if !regex.is_empty() => Some(regex),
            _ => None,
        };
        let spec = PoolSpec::new(path, shards[step], repl[step], regex)?;
        let hosts = (offsets[step]..offsets[step] + shards[step] * repl[step])
            .map(NodeId)
            .collect();
        layout.add_pool(spec, hosts)?;
    }
    layout.validate()?;
    Ok(PipelineCluster {
        layout,
        client_nodes: (total..total + clients).map(NodeId).collect(),
    })
}
