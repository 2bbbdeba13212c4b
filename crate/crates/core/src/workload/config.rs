use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netsim::Micros;

/// Synthetic pipeline parameters. Sizes are bytes, times are microseconds.
///
/// Service times are modeling knobs, not measurements. The defaults are
/// small enough that a single MOT node keeps up with three clients at 2.5 FPS,
/// so layout comparisons are driven by data movement rather than by one
/// saturated step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    pub clients: Vec<String>,
    pub fps: f64,
    pub frames: usize,
    pub warmup_discard: usize,
    /// Past positions PRED needs before it predicts.
    pub p: usize,
    /// Predicted positions per trajectory.
    pub q: usize,
    pub frame_bytes: u64,
    pub state_base_bytes: u64,
    pub state_per_actor_bytes: u64,
    pub state_cap_bytes: u64,
    pub position_bytes: u64,
    /// Defaults to `q * 16`.
    pub prediction_bytes: Option<u64>,
    pub cd_result_bytes: u64,
    pub max_actors: usize,
    /// Mean new actors per frame (Poisson).
    pub actor_arrival_rate: f64,
    /// Mean frames an actor stays in view (geometric, at least 1).
    pub actor_mean_lifetime: f64,
    pub mot_base_us: Micros,
    pub mot_per_actor_us: Micros,
    pub pred_us: Micros,
    pub cd_per_pair_us: Micros,
    /// Chance that a pair of trajectories is reported as colliding.
    pub collision_probability: f64,
    /// Send frames as trigger puts (nothing stored) instead of volatile puts.
    pub trigger_frames: bool,
    pub rng_seed: u64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            clients: vec!["little3".into(), "hyang5".into(), "gates3".into()],
            fps: 2.5,
            frames: 700,
            warmup_discard: 100,
            p: 8,
            q: 12,
            frame_bytes: 8 << 20,
            state_base_bytes: 16 << 10,
            state_per_actor_bytes: 200 << 10,
            state_cap_bytes: 10 << 20,
            position_bytes: 64,
            prediction_bytes: None,
            cd_result_bytes: 64,
            max_actors: 49,
            actor_arrival_rate: 0.3,
            actor_mean_lifetime: 20.0,
            mot_base_us: 40_000,
            mot_per_actor_us: 2_000,
            pred_us: 10_000,
            cd_per_pair_us: 500,
            collision_probability: 0.02,
            trigger_frames: false,
            rng_seed: 0,
        }
    }
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadConfig(m));
        if self.clients.is_empty() {
            return bad("at least one client is required".into());
        }
        for c in &self.clients {
            if c.is_empty() || !c.chars().all(|ch| ch.is_ascii_alphanumeric()) {
                return bad(format!("client name {c:?} must be non-empty ASCII alphanumeric"));
            }
        }
        let mut names = self.clients.clone();
        names.sort();
        names.dedup();
        if names.len() != self.clients.len() {
            return bad("client names must be distinct".into());
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return bad(format!("fps must be positive, got {}", self.fps));
        }
        if self.frames <= self.warmup_discard {
            return bad(format!(
                "frames ({}) must exceed warmup_discard ({})",
                self.frames, self.warmup_discard
            ));
        }
        if self.p == 0 || self.q == 0 {
            return bad("p and q must be >= 1".into());
        }
        if !(self.actor_arrival_rate >= 0.0 && self.actor_arrival_rate.is_finite()) {
            return bad("actor_arrival_rate must be >= 0".into());
        }
        if !(self.actor_mean_lifetime >= 1.0 && self.actor_mean_lifetime.is_finite()) {
            return bad("actor_mean_lifetime must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.collision_probability) {
            return bad("collision_probability must be in [0, 1]".into());
        }
        Ok(())
    }

    /// Inter-frame period in microseconds.
    pub fn frame_period_us(&self) -> Micros {
        (1e6 / self.fps).round() as Micros
    }

    pub fn state_bytes(&self, actors: usize) -> u64 {
        (self.state_base_bytes + actors as u64 * self.state_per_actor_bytes).min(self.state_cap_bytes)
    }

    pub fn prediction_bytes(&self) -> u64 {
        self.prediction_bytes.unwrap_or(self.q as u64 * 16)
    }

    pub fn offered_fps(&self) -> f64 {
        self.fps * self.clients.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = WorkloadConfig::default();
        c.validate().unwrap();
        assert_eq!(c.frame_period_us(), 400_000);
        assert_eq!((c.p, c.q), (8, 12));
        assert_eq!(c.prediction_bytes(), 192);
        assert_eq!(c.state_bytes(0), 16 << 10);
        assert_eq!(c.state_bytes(49), (16 << 10) + 49 * (200 << 10));
        assert_eq!(c.state_bytes(60), 10 << 20);
        assert!((c.offered_fps() - 7.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = WorkloadConfig {
            frames: 100,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c.frames = 101;
        c.validate().unwrap();
        c.fps = 0.0;
        assert!(c.validate().is_err());
        let c = WorkloadConfig {
            clients: vec!["bad_name".into()],
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
