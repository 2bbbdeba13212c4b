use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::keyspace::{NodeId, PoolSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeSpec {
    /// Concurrent tasks the node can run. Zero for pure client nodes.
    pub workers: usize,
}

/// A pool and the nodes that host it. Shard `i` is served by
/// `nodes[i * r .. (i + 1) * r]` where `r` is the replication factor.
#[derive(Debug, Clone)]
pub struct PoolPlacement {
    pub spec: PoolSpec,
    pub nodes: Vec<NodeId>,
}

impl PoolPlacement {
    pub fn members(&self, shard: usize) -> &[NodeId] {
        let r = self.spec.replication_factor;
        &self.nodes[shard * r..(shard + 1) * r]
    }
}

#[derive(Debug, Clone, Default)]
pub struct ClusterLayout {
    pub nodes: Vec<NodeSpec>,
    pub pools: Vec<PoolPlacement>,
}

impl ClusterLayout {
    pub fn new(nodes: Vec<NodeSpec>) -> Self {
        ClusterLayout {
            nodes,
            pools: Vec::new(),
        }
    }

    /// Adds a pool hosted by `nodes`, which must supply `shard_count * replication_factor` distinct-per-shard nodes.
    pub fn add_pool(&mut self, spec: PoolSpec, nodes: Vec<NodeId>) -> Result<&mut Self> {
        let needed = spec.shard_count * spec.replication_factor;
        if nodes.len() < needed {
            return Err(Error::InsufficientNodes {
                pool: spec.path.to_string(),
                needed,
                available: nodes.len(),
            });
        }
        let mut nodes = nodes;
        nodes.truncate(needed);
        self.pools.push(PoolPlacement { spec, nodes });
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn validate(&self) -> Result<()> {
        let mut paths = BTreeSet::new();
        for pool in &self.pools {
            if !paths.insert(pool.spec.path.clone()) {
                return Err(Error::DuplicatePool(pool.spec.path.to_string()));
            }
            for shard in 0..pool.spec.shard_count {
                let members = pool.members(shard);
                let distinct: BTreeSet<_> = members.iter().collect();
                if distinct.len() != members.len() {
                    return Err(Error::BadConfig(format!(
                        "pool {} shard {shard} repeats a node",
                        pool.spec.path
                    )));
                }
                for node in members {
                    let Some(spec) = self.nodes.get(node.0) else {
                        return Err(Error::InsufficientNodes {
                            pool: pool.spec.path.to_string(),
                            needed: node.0 + 1,
                            available: self.nodes.len(),
                        });
                    };
                    if spec.workers == 0 {
                        return Err(Error::BadConfig(format!(
                            "node {node} serves pool {} but has no workers",
                            pool.spec.path
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
