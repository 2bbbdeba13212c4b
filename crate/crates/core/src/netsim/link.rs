use serde::{Deserialize, Serialize};

/// Virtual time and durations, in microseconds.
pub type Micros = u64;

/// Uniform full-bisection network: every pair of distinct nodes sees the same
/// one-way latency and bandwidth; same-node access is free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkModel {
    pub latency_us: Micros,
    pub bandwidth_bytes_per_us: u64,
    /// Fixed cost of every remote get or list round trip on top of the wire
    /// transfer (request dispatch, marshalling and copying into the caller).
    pub request_overhead_us: Micros,
}

impl Default for LinkModel {
    fn default() -> Self {
        // 100 Gbit/s = 12,500 bytes per microsecond.
        LinkModel {
            latency_us: 50,
            bandwidth_bytes_per_us: 12_500,
            request_overhead_us: 0,
        }
    }
}

impl LinkModel {
    pub fn validate(&self) -> Result<(), String> {
        if self.bandwidth_bytes_per_us == 0 {
            return Err("link bandwidth must be > 0".into());
        }
        Ok(())
    }

    /// One-way transfer of `bytes`: latency plus serialization, rounded up to a whole microsecond.
    pub fn transfer_time(&self, bytes: u64, local: bool) -> Micros {
        if local {
            return 0;
        }
        self.latency_us + bytes.div_ceil(self.bandwidth_bytes_per_us)
    }

    /// Cost of pulling `bytes` from a remote node in response to a request.
    pub fn fetch_time(&self, bytes: u64, local: bool) -> Micros {
        if local {
            return 0;
        }
        self.request_overhead_us + self.transfer_time(bytes, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transfer_time_examples() {
        let link = LinkModel::default();
        // 8 MiB at 12,500 B/us is 671.09 us, rounded up.
        assert_eq!(link.transfer_time(8_388_608, false), 50 + 672);
        assert_eq!(link.transfer_time(10_000_000, false), 850);
        assert_eq!(link.transfer_time(0, false), 50);
        assert_eq!(link.transfer_time(123_456_789, true), 0);
    }

    #[test]
    fn fetch_adds_overhead_only_when_remote() {
        let link = LinkModel {
            request_overhead_us: 7,
            ..LinkModel::default()
        };
        assert_eq!(link.fetch_time(0, false), 57);
        assert_eq!(link.fetch_time(1 << 20, true), 0);
    }
}
