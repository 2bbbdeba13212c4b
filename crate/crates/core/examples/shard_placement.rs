//! How keys spread over shards with and without an affinity regex.
//!
//! With the client/actor regex every position of a trajectory shares a shard;
//! hashing whole keys scatters the same trajectory across all of them.

use std::collections::BTreeMap;

use affinity_sim::workload::keys;
use affinity_sim::{shard_for, PoolSpec};

fn main() -> Result<(), affinity_sim::Error> {
    let grouped = PoolSpec::new("/positions", 5, 1, Some(keys::CLIENT_ID_REGEX))?;
    let hashed = PoolSpec::new("/positions", 5, 1, None)?;

    println!("little3 actor 7, frames 40..48");
    println!("{:<28} {:>8} {:>8}", "key", "grouped", "hashed");
    for k in 40..48 {
        let key = keys::position_key("little3", 7, k);
        println!(
            "{:<28} {:>8} {:>8}",
            key.as_str(),
            shard_for(&grouped, &key).index,
            shard_for(&hashed, &key).index
        );
    }

    // Load per shard over many trajectories: both schemes balance, only the
    // grouped one keeps each trajectory in one place.
    let mut load: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut split = 0;
    for client in ["little3", "hyang5", "gates3"] {
        for actor in 0..200 {
            let mut homes = std::collections::BTreeSet::new();
            for k in 0..8 {
                let key = keys::position_key(client, actor, k);
                load.entry(shard_for(&grouped, &key).index).or_default().0 += 1;
                let h = shard_for(&hashed, &key).index;
                load.entry(h).or_default().1 += 1;
                homes.insert(h);
            }
            split += usize::from(homes.len() > 1);
        }
    }
    println!("\nobjects per shard (600 trajectories x 8 positions)");
    for (shard, (g, h)) in &load {
        println!("  shard {shard}: grouped {g:>5}  hashed {h:>5}");
    }
    println!("trajectories spread over several shards when hashed: {split} of 600");
    Ok(())
}
