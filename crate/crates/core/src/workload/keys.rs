//! Key scheme of the tracking pipeline.
//!
//! | pool           | key                                   | grouping regex              |
//! |----------------|---------------------------------------|-----------------------------|
//! | `/frames`      | `/frames/{client}_{frame}`            | `/[a-zA-Z0-9]+_`            |
//! | `/states`      | `/states/{client}_{frame}`            | `/[a-zA-Z0-9]+_`            |
//! | `/positions`   | `/positions/{client}_{actor}_{frame}` | `/[a-zA-Z0-9]+_[0-9]+_`     |
//! | `/predictions` | `/predictions/{client}_{frame}_{actor}` | `/[a-zA-Z0-9]+_[0-9]+_`   |
//! | `/cd`          | `/cd/{client}_{frame}_{actor}_{hits}` | none                        |

use crate::keyspace::{validate_key, ObjectKey};

pub const FRAMES: &str = "/frames";
pub const STATES: &str = "/states";
pub const POSITIONS: &str = "/positions";
pub const PREDICTIONS: &str = "/predictions";
pub const CD: &str = "/cd";

/// Groups frames and states by client.
pub const CLIENT_REGEX: &str = "/[a-zA-Z0-9]+_";
/// Groups positions by (client, actor) and predictions by (client, frame).
pub const CLIENT_ID_REGEX: &str = "/[a-zA-Z0-9]+_[0-9]+_";

fn key(text: String) -> ObjectKey {
    validate_key(&text).expect("pipeline keys are well formed")
}

pub fn frame_key(client: &str, frame: usize) -> ObjectKey {
    key(format!("{FRAMES}/{client}_{frame}"))
}

pub fn state_key(client: &str, frame: usize) -> ObjectKey {
    key(format!("{STATES}/{client}_{frame}"))
}

pub fn position_key(client: &str, actor: u64, frame: usize) -> ObjectKey {
    key(format!("{POSITIONS}/{client}_{actor}_{frame}"))
}

pub fn prediction_key(client: &str, frame: usize, actor: u64) -> ObjectKey {
    key(format!("{PREDICTIONS}/{client}_{frame}_{actor}"))
}

pub fn prediction_prefix(client: &str, frame: usize) -> String {
    format!("{PREDICTIONS}/{client}_{frame}_")
}

pub fn cd_key(client: &str, frame: usize, actor: u64, collisions: u64) -> ObjectKey {
    key(format!("{CD}/{client}_{frame}_{actor}_{collisions}"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PipelineKey {
    Frame {
        client: String,
        frame: usize,
    },
    State {
        client: String,
        frame: usize,
    },
    Position {
        client: String,
        actor: u64,
        frame: usize,
    },
    Prediction {
        client: String,
        frame: usize,
        actor: u64,
    },
    Cd {
        client: String,
        frame: usize,
        actor: u64,
        collisions: u64,
    },
}

impl PipelineKey {
    pub fn parse(key: &str) -> Option<Self> {
        let (pool, rest) = key[1..].split_once('/')?;
        let mut parts = rest.split('_');
        let client = parts.next()?.to_string();
        let nums: Vec<u64> = parts.map(|p| p.parse().ok()).collect::<Option<_>>()?;
        let parsed = match (pool, nums.as_slice()) {
            ("frames", &[k]) => PipelineKey::Frame {
                client,
                frame: k as usize,
            },
            ("states", &[k]) => PipelineKey::State {
                client,
                frame: k as usize,
            },
            ("positions", &[a, k]) => PipelineKey::Position {
                client,
                actor: a,
                frame: k as usize,
            },
            ("predictions", &[k, a]) => PipelineKey::Prediction {
                client,
                frame: k as usize,
                actor: a,
            },
            ("cd", &[k, a, m]) => PipelineKey::Cd {
                client,
                frame: k as usize,
                actor: a,
                collisions: m,
            },
            _ => return None,
        };
        Some(parsed)
    }

    /// The `(client, frame)` this key belongs to.
    pub fn frame(&self) -> (&str, usize) {
        match self {
            PipelineKey::Frame { client, frame }
            | PipelineKey::State { client, frame }
            | PipelineKey::Position { client, frame, .. }
            | PipelineKey::Prediction { client, frame, .. }
            | PipelineKey::Cd { client, frame, .. } => (client, *frame),
        }
    }
}
