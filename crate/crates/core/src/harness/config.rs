use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netsim::LinkModel;
use crate::workload::WorkloadConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Shards chosen by hashing the full request key.
    Random,
    /// Shards chosen by hashing the regex-extracted affinity key.
    Affinity,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Random => "RANDOM",
            Strategy::Affinity => "AFFINITY",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Three per-step counts written `x/y/z` (MOT, PRED, CD). A single number
/// means the same count for every step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StepCounts(pub [usize; 3]);

impl StepCounts {
    pub fn uniform(n: usize) -> Self {
        StepCounts([n; 3])
    }

    pub fn mot(self) -> usize {
        self.0[0]
    }

    pub fn pred(self) -> usize {
        self.0[1]
    }

    pub fn cd(self) -> usize {
        self.0[2]
    }

    pub fn total(self) -> usize {
        self.0.iter().sum()
    }
}

impl FromStr for StepCounts {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadConfig(format!("expected x/y/z of positive integers, got {s:?}"));
        let parts: Vec<usize> = s
            .split('/')
            .map(|p| p.trim().parse::<usize>().ok().filter(|&v| v > 0))
            .collect::<Option<_>>()
            .ok_or_else(bad)?;
        match *parts.as_slice() {
            [n] => Ok(StepCounts::uniform(n)),
            [x, y, z] => Ok(StepCounts([x, y, z])),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for StepCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.0[0], self.0[1], self.0[2])
    }
}

impl Serialize for StepCounts {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StepCounts {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(0) => Err(serde::de::Error::custom("count must be >= 1")),
            Raw::Int(n) => Ok(StepCounts::uniform(n)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Shards for the MOT, PRED and CD pools.
    pub layout: StepCounts,
    /// Nodes per shard, per step.
    pub replication: StepCounts,
    pub strategy: Strategy,
    pub cache_enabled: bool,
    pub cache_capacity_bytes: Option<u64>,
    pub workers_per_node: usize,
    pub repetitions: usize,
    /// Run `i` uses `seed + i` for both the trace and handler randomness.
    pub seed: u64,
    pub link: LinkModel,
    pub workload: WorkloadConfig,
    pub out_dir: Option<PathBuf>,
}

/// Link used by experiments unless a config overrides it: the default wire
/// model plus a per-request overhead on remote reads, so that the cost of
/// pulling small objects across nodes is visible next to millisecond-scale
/// compute.
pub fn experiment_link() -> LinkModel {
    LinkModel {
        request_overhead_us: DEFAULT_REQUEST_OVERHEAD_US,
        ..LinkModel::default()
    }
}

pub const DEFAULT_REQUEST_OVERHEAD_US: u64 = 30_000;

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "experiment".into(),
            layout: StepCounts([3, 5, 5]),
            replication: StepCounts::uniform(1),
            strategy: Strategy::Affinity,
            cache_enabled: true,
            cache_capacity_bytes: None,
            workers_per_node: 1,
            repetitions: 3,
            seed: 1,
            link: experiment_link(),
            workload: WorkloadConfig::default(),
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::BadConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers_per_node == 0 {
            return Err(Error::BadConfig("workers_per_node must be >= 1".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::BadConfig("repetitions must be >= 1".into()));
        }
        self.link.validate().map_err(Error::BadConfig)?;
        self.workload.validate()
    }

    /// Layout label used in CSVs: `x/y/z`, with `xr` appended when any shard is replicated.
    pub fn layout_label(&self) -> String {
        if self.replication == StepCounts::uniform(1) {
            self.layout.to_string()
        } else if self.replication.0.iter().all(|&r| r == self.replication.0[0]) {
            format!("{}x{}", self.layout, self.replication.0[0])
        } else {
            format!("{}x{}", self.layout, self.replication)
        }
    }

    /// Seeds of the repetitions.
    pub fn run_seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.repetitions as u64).map(|i| self.seed.wrapping_add(i))
    }

    /// Workload with the trace seed of one repetition filled in.
    pub fn workload_for(&self, seed: u64) -> WorkloadConfig {
        WorkloadConfig {
            rng_seed: seed,
            ..self.workload.clone()
        }
    }
}
