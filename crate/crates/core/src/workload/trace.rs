use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Poisson};

use super::WorkloadConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActorTrack {
    pub actor_id: u64,
    pub first_frame: usize,
    /// Inclusive; may run past the end of the trace.
    pub last_frame: usize,
}

/// An actor visible in one frame. `seq` counts frames since first appearance, starting at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct LiveActor {
    pub actor_id: u64,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientTrace {
    pub client: String,
    pub frames: Vec<Vec<LiveActor>>,
}

impl ClientTrace {
    pub fn actors(&self, frame: usize) -> &[LiveActor] {
        self.frames.get(frame).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Per client and frame, the live actors with their sequence numbers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameTrace {
    pub clients: Vec<ClientTrace>,
}

impl FrameTrace {
    pub fn client(&self, name: &str) -> Option<&ClientTrace> {
        self.clients.iter().find(|c| c.client == name)
    }

    pub fn frame_count(&self) -> usize {
        self.clients.iter().map(|c| c.frames.len()).max().unwrap_or(0)
    }

    /// Writes `client,frame,actor_id,seq` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::io("trace", e);
        w.write_record(["client", "frame", "actor_id", "seq"]).map_err(io)?;
        for c in &self.clients {
            for (frame, actors) in c.frames.iter().enumerate() {
                for a in actors {
                    w.write_record([
                        c.client.as_str(),
                        &frame.to_string(),
                        &a.actor_id.to_string(),
                        &a.seq.to_string(),
                    ])
                    .map_err(io)?;
                }
            }
        }
        w.flush().map_err(|e| Error::io("trace", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8")
    }

    /// Reads a trace written by [`FrameTrace::write_csv`]. Clients keep the
    /// order of `clients`; frames without rows are empty.
    pub fn read_csv<R: Read>(input: R, clients: &[String], frames: usize) -> Result<Self> {
        let mut rows: BTreeMap<&str, Vec<Vec<LiveActor>>> =
            clients.iter().map(|c| (c.as_str(), vec![Vec::new(); frames])).collect();
        let mut r = csv::Reader::from_reader(input);
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::io("trace", e))?;
            let bad = |what: &str| Error::BadConfig(format!("trace row {}: bad {what}", line + 2));
            let client = rec.get(0).ok_or_else(|| bad("client"))?;
            let frame: usize = rec.get(1).and_then(|v| v.parse().ok()).ok_or_else(|| bad("frame"))?;
            let actor_id = rec.get(2).and_then(|v| v.parse().ok()).ok_or_else(|| bad("actor_id"))?;
            let seq = rec.get(3).and_then(|v| v.parse().ok()).ok_or_else(|| bad("seq"))?;
            let per_client = rows
                .get_mut(client)
                .ok_or_else(|| Error::BadConfig(format!("trace names unknown client {client:?}")))?;
            let slot = per_client.get_mut(frame).ok_or_else(|| bad("frame (out of range)"))?;
            slot.push(LiveActor { actor_id, seq });
        }
        Ok(FrameTrace {
            clients: clients
                .iter()
                .map(|c| {
                    let mut frames = rows.remove(c.as_str()).unwrap_or_default();
                    frames.iter_mut().for_each(|f| f.sort());
                    ClientTrace {
                        client: c.clone(),
                        frames,
                    }
                })
                .collect(),
        })
    }
}

/// SplitMix64 step; expands a 64-bit seed into well-mixed words.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// ChaCha8 generator keyed by SplitMix64 output of `(seed, stream)`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut state = seed ^ stream.wrapping_mul(0xd1b5_4a32_d192_ed03);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Generates the actor trace. Deterministic in `config.rng_seed`; each client
/// draws from its own stream.
pub fn generate_trace(config: &WorkloadConfig) -> Result<FrameTrace> {
    config.validate()?;
    let arrivals = (config.actor_arrival_rate > 0.0)
        .then(|| Poisson::new(config.actor_arrival_rate))
        .transpose()
        .map_err(|e| Error::BadConfig(format!("actor_arrival_rate: {e}")))?;
    let lifetime = Geometric::new(1.0 / config.actor_mean_lifetime)
        .map_err(|e| Error::BadConfig(format!("actor_mean_lifetime: {e}")))?;

    let clients = config
        .clients
        .iter()
        .enumerate()
        .map(|(idx, name)| {
            let mut rng = seeded_rng(config.rng_seed, idx as u64);
            let mut next_id = 0u64;
            let mut live: Vec<ActorTrack> = Vec::new();
            let mut frames = Vec::with_capacity(config.frames);
            for k in 0..config.frames {
                live.retain(|a| a.last_frame >= k);
                let born = arrivals.map_or(0, |d| d.sample(&mut rng) as usize);
                for _ in 0..born {
                    // thinning: arrivals beyond the cap are dropped
                    if live.len() >= config.max_actors {
                        break;
                    }
                    let extra = lifetime.sample(&mut rng) as usize;
                    live.push(ActorTrack {
                        actor_id: next_id,
                        first_frame: k,
                        last_frame: k + extra,
                    });
                    next_id += 1;
                }
                frames.push(
                    live.iter()
                        .map(|a| LiveActor {
                            actor_id: a.actor_id,
                            seq: (k - a.first_frame + 1) as u64,
                        })
                        .collect(),
                );
            }
            ClientTrace {
                client: name.clone(),
                frames,
            }
        })
        .collect();
    Ok(FrameTrace { clients })
}
