//! Handlers fired by puts. Tasks sharing an affinity key run one after another
//! in put order; tasks of other keys use the node's remaining workers.

use affinity_sim::compute::{Fetch, Fetched, Handler, HandlerOutput, PutRequest, StepLabel, TaskContext};
use affinity_sim::netsim::{ClusterLayout, NodeSpec, SimConfig, Simulator};
use affinity_sim::store::DataObject;
use affinity_sim::{validate_key, NodeId, PoolSpec};

/// Burns a fixed amount of service time.
struct Work(u64);

impl Handler for Work {
    fn name(&self) -> &str {
        "work"
    }

    fn inputs(&self, _: &TaskContext<'_>) -> Result<Vec<Fetch>, String> {
        Ok(Vec::new())
    }

    fn execute(&self, _: &TaskContext<'_>, _: &[Fetched]) -> Result<HandlerOutput, String> {
        Ok(HandlerOutput {
            service_us: self.0,
            puts: Vec::new(),
        })
    }
}

fn main() -> Result<(), affinity_sim::Error> {
    // one worker node with two workers, plus a client node
    let mut layout = ClusterLayout::new(vec![NodeSpec { workers: 2 }, NodeSpec { workers: 0 }]);
    layout.add_pool(PoolSpec::new("/jobs", 1, 1, Some("/[a-z]+_"))?, vec![NodeId(0)])?;

    let mut sim = Simulator::new(&layout, SimConfig::default())?;
    sim.register_udl("/jobs", Box::new(Work(1_000)), StepLabel::Other)?;
    for i in 0..4u64 {
        for group in ["red", "blue", "green"] {
            let key = validate_key(&format!("/jobs/{group}_{i}"))?;
            sim.schedule_put(i * 10, NodeId(1), PutRequest::volatile(DataObject::synthetic(key, 100)))?;
        }
    }
    sim.run_until_idle()?;

    println!("{:<16} {:>8} {:>8} {:>8}", "key", "fired", "start", "done");
    let mut tasks: Vec<_> = sim.tasks().iter().collect();
    tasks.sort_by_key(|t| (t.event.affinity_key.clone(), t.id));
    for t in tasks {
        println!(
            "{:<16} {:>8} {:>8} {:>8}",
            t.event.key.as_str(),
            t.event.fired_at,
            t.start_us.unwrap_or_default(),
            t.done_us.unwrap_or_default()
        );
    }
    println!("\nrun log:\n{}", sim.run_log());
    Ok(())
}
