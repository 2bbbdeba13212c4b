//! Single-threaded discrete-event simulator over virtual time.
//!
//! Task lifecycle: a completed put whose key matches a registered prefix fires
//! a task on the home shard's designated member. The task joins the FIFO for
//! its `(shard, affinity key)` pair; only the head of a FIFO may run. The head
//! waits for a free worker on its node (lowest task id first, which is fire
//! order), fetches its inputs one by one while holding the worker, computes
//! for its service time and then issues its puts. A blocking get on an absent
//! key suspends the task and frees the worker until the key is stored.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::compute::{
    Fetch, Fetched, Handler, HandlerId, HandlerOutput, PutRequest, StepLabel, TaskContext, TaskInstance, TaskMetrics,
    TaskState, TriggerEvent, UdlRegistration, UdlRegistry,
};
use crate::error::{Error, Result};
use crate::keyspace::{fnv1a64, NodeId, ObjectKey, ShardId};
use crate::store::{CacheConfig, PutMode, PutRoute, Store};

use super::{ClusterLayout, EventQueue, LinkModel, Micros};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub link: LinkModel,
    pub cache: CacheConfig,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            link: LinkModel::default(),
            cache: CacheConfig {
                enabled: true,
                capacity_bytes: None,
            },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Action {
    IssuePut(usize),
    CompletePut(usize),
    Resume(usize),
    ServiceDone(usize),
}

impl Action {
    fn describe(self) -> (&'static str, usize) {
        match self {
            Action::IssuePut(i) => ("issue_put", i),
            Action::CompletePut(i) => ("complete_put", i),
            Action::Resume(i) => ("resume", i),
            Action::ServiceDone(i) => ("service_done", i),
        }
    }
}

/// One executed event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventRecord {
    pub at: Micros,
    pub sequence: u64,
    /// Time at which the event was scheduled.
    pub scheduled_at: Micros,
    pub kind: &'static str,
    pub subject: usize,
}

/// A put as seen by the simulator: who issued it, where it went, when it landed.
#[derive(Debug, Clone)]
pub struct PutRecord {
    pub id: usize,
    pub key: ObjectKey,
    pub mode: PutMode,
    pub origin: NodeId,
    pub size: u64,
    /// Issuing task, `None` for external sources.
    pub issuer: Option<usize>,
    pub issued_at: Micros,
    pub route: Option<PutRoute>,
    pub completed: bool,
    /// Task fired by this put.
    pub triggered: Option<usize>,
}

impl PutRecord {
    pub fn completed_at(&self) -> Option<Micros> {
        self.route.as_ref().filter(|_| self.completed).map(|r| r.completed_at)
    }
}

#[derive(Debug)]
struct TaskRuntime {
    plan: Vec<Fetch>,
    next_fetch: usize,
    fetched: Vec<Fetched>,
    output: Option<HandlerOutput>,
    queue: (ShardId, String),
    has_worker: bool,
}

#[derive(Debug)]
struct NodeRuntime {
    workers: usize,
    busy: usize,
    ready: BTreeSet<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSummary {
    pub end_time: Micros,
    pub events: usize,
}

pub struct Simulator {
    config: SimConfig,
    queue: EventQueue<Action>,
    store: Store,
    udls: UdlRegistry,
    handlers: Vec<Box<dyn Handler>>,
    nodes: Vec<NodeRuntime>,
    tasks: Vec<TaskInstance>,
    runtime: Vec<TaskRuntime>,
    fifos: BTreeMap<(ShardId, String), VecDeque<usize>>,
    waiters: HashMap<ObjectKey, Vec<usize>>,
    pending: Vec<Option<crate::store::DataObject>>,
    puts: Vec<PutRecord>,
    events: Vec<EventRecord>,
    sched_times: Vec<Micros>,
    errors: Vec<(usize, String)>,
}

impl std::fmt::Debug for Simulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulator")
            .field("now", &self.queue.now())
            .field("tasks", &self.tasks.len())
            .field("puts", &self.puts.len())
            .finish_non_exhaustive()
    }
}

/// Instantiates nodes, pools and shards; the run starts at t = 0.
pub fn build_cluster(layout: &ClusterLayout, config: SimConfig) -> Result<Simulator> {
    Simulator::new(layout, config)
}

impl Simulator {
    pub fn new(layout: &ClusterLayout, config: SimConfig) -> Result<Self> {
        config.link.validate().map_err(Error::BadConfig)?;
        let store = Store::from_layout(layout, config.link, config.cache)?;
        let nodes = layout
            .nodes
            .iter()
            .map(|n| NodeRuntime {
                workers: n.workers,
                busy: 0,
                ready: BTreeSet::new(),
            })
            .collect();
        Ok(Simulator {
            config,
            queue: EventQueue::new(),
            store,
            udls: UdlRegistry::new(),
            handlers: Vec::new(),
            nodes,
            tasks: Vec::new(),
            runtime: Vec::new(),
            fifos: BTreeMap::new(),
            waiters: HashMap::new(),
            pending: Vec::new(),
            puts: Vec::new(),
            events: Vec::new(),
            sched_times: Vec::new(),
            errors: Vec::new(),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn now(&self) -> Micros {
        self.queue.now()
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn tasks(&self) -> &[TaskInstance] {
        &self.tasks
    }

    pub fn puts(&self) -> &[PutRecord] {
        &self.puts
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    /// Handler failures as `(task id, message)`.
    pub fn errors(&self) -> &[(usize, String)] {
        &self.errors
    }

    pub fn register_udl(
        &mut self,
        prefix: &str,
        handler: Box<dyn Handler>,
        step: StepLabel,
    ) -> Result<UdlRegistration> {
        let id = HandlerId(self.handlers.len());
        let reg = self.udls.register_udl(prefix, id, handler.name(), step)?.clone();
        self.handlers.push(handler);
        Ok(reg)
    }

    /// Schedules an external put issued by `origin` at time `at`.
    pub fn schedule_put(&mut self, at: Micros, origin: NodeId, request: PutRequest) -> Result<usize> {
        self.store.registry().resolve(&request.object.key)?;
        let id = self.new_put(origin, None, at, request);
        self.schedule(at, Action::IssuePut(id));
        Ok(id)
    }

    fn new_put(&mut self, origin: NodeId, issuer: Option<usize>, at: Micros, request: PutRequest) -> usize {
        let id = self.puts.len();
        self.puts.push(PutRecord {
            id,
            key: request.object.key.clone(),
            mode: request.mode,
            origin,
            size: request.object.payload_size(),
            issuer,
            issued_at: at,
            route: None,
            completed: false,
            triggered: None,
        });
        self.pending.push(Some(request.object));
        id
    }

    /// Processes events in `(at, sequence)` order until none remain.
    pub fn run_until_idle(&mut self) -> Result<RunSummary> {
        while let Some(ev) = self.queue.pop() {
            let (kind, subject) = ev.action.describe();
            self.events.push(EventRecord {
                at: ev.at,
                sequence: ev.sequence,
                scheduled_at: self.scheduled_at(ev.sequence),
                kind,
                subject,
            });
            match ev.action {
                Action::IssuePut(id) => self.issue_put(id),
                Action::CompletePut(id) => self.complete_put(id),
                Action::Resume(task) => self.resume(task),
                Action::ServiceDone(task) => self.service_done(task),
            }
            debug_assert!(self.nodes.iter().all(|n| n.busy <= n.workers));
        }
        let suspended: Vec<&TaskInstance> = self.tasks.iter().filter(|t| t.state == TaskState::Suspended).collect();
        if let Some(first) = suspended.first() {
            let rt = &self.runtime[first.id];
            let first_key = match rt.plan.get(rt.next_fetch) {
                Some(Fetch::Get { key, .. }) => key.to_string(),
                Some(Fetch::List { prefix }) => prefix.clone(),
                None => String::new(),
            };
            return Err(Error::DeadlockDetected {
                suspended: suspended.len(),
                first_key,
            });
        }
        Ok(RunSummary {
            end_time: self.queue.now(),
            events: self.events.len(),
        })
    }

    // Creation time of each scheduled event, indexed by sequence.
    fn scheduled_at(&self, sequence: u64) -> Micros {
        self.sched_times.get(sequence as usize).copied().unwrap_or(0)
    }

    fn schedule(&mut self, at: Micros, action: Action) {
        let seq = self.queue.schedule(at, action);
        debug_assert_eq!(seq as usize, self.sched_times.len());
        self.sched_times.push(self.queue.now());
    }

    fn issue_put(&mut self, id: usize) {
        let now = self.queue.now();
        let record = &self.puts[id];
        let (key, size, mode, origin) = (record.key.clone(), record.size, record.mode, record.origin);
        match self.store.route_put(&key, size, mode, origin, now) {
            Ok(route) => {
                let at = route.completed_at;
                self.puts[id].route = Some(route);
                self.schedule(at, Action::CompletePut(id));
            }
            Err(e) => {
                // resolved at scheduling time, so only task-issued puts land here
                if let Some(task) = self.puts[id].issuer {
                    self.errors.push((task, e.to_string()));
                }
            }
        }
    }

    fn complete_put(&mut self, id: usize) {
        let now = self.queue.now();
        let route = self.puts[id].route.clone().expect("routed before completion");
        let object = self.pending[id].take().expect("completed once");
        let stored = self.store.commit_put(&route, object);
        self.puts[id].completed = true;

        if route.mode == PutMode::Volatile {
            if let Some(waiting) = self.waiters.remove(&route.key) {
                for task in waiting {
                    self.make_ready(task);
                }
            }
        }

        let Some(reg) = self.udls.lookup(&route.key).cloned() else {
            return;
        };
        let task_id = self.tasks.len();
        let label = match &route.affinity {
            Some(a) => a.as_str().to_string(),
            None => route.key.as_str().to_string(),
        };
        let queue = (route.shard.clone(), label);
        self.tasks.push(TaskInstance {
            id: task_id,
            event: TriggerEvent {
                key: route.key.clone(),
                affinity_key: route.affinity.clone(),
                node: route.designated,
                fired_at: now,
                shard: route.shard.clone(),
                object: stored,
            },
            registration: reg,
            state: TaskState::Queued,
            start_us: None,
            done_us: None,
            metrics: TaskMetrics::default(),
        });
        self.runtime.push(TaskRuntime {
            plan: Vec::new(),
            next_fetch: 0,
            fetched: Vec::new(),
            output: None,
            queue: queue.clone(),
            has_worker: false,
        });
        self.puts[id].triggered = Some(task_id);
        let fifo = self.fifos.entry(queue).or_default();
        fifo.push_back(task_id);
        if fifo.len() == 1 {
            self.make_ready(task_id);
        }
    }

    fn make_ready(&mut self, task: usize) {
        let node = self.tasks[task].event.node.0;
        self.nodes[node].ready.insert(task);
        self.dispatch(node);
    }

    fn dispatch(&mut self, node: usize) {
        while self.nodes[node].busy < self.nodes[node].workers {
            let Some(task) = self.nodes[node].ready.pop_first() else {
                break;
            };
            self.nodes[node].busy += 1;
            self.runtime[task].has_worker = true;
            let now = self.queue.now();
            self.schedule(now, Action::Resume(task));
        }
    }

    fn release_worker(&mut self, task: usize) {
        if std::mem::take(&mut self.runtime[task].has_worker) {
            let node = self.tasks[task].event.node.0;
            self.nodes[node].busy -= 1;
            self.dispatch(node);
        }
    }

    fn context(&self, task: usize) -> TaskContext<'_> {
        let t = &self.tasks[task];
        TaskContext {
            task_id: task,
            event: &t.event,
            seed: self.config.seed ^ fnv1a64(t.event.key.as_str().as_bytes()),
        }
    }

    fn handler(&self, task: usize) -> &dyn Handler {
        self.handlers[self.tasks[task].registration.handler_id.0].as_ref()
    }

    fn resume(&mut self, task: usize) {
        let now = self.queue.now();
        match self.tasks[task].state {
            TaskState::Queued => {
                self.tasks[task].state = TaskState::Running;
                self.tasks[task].start_us = Some(now);
                match self.handler(task).inputs(&self.context(task)) {
                    Ok(plan) => self.runtime[task].plan = plan,
                    Err(msg) => return self.fail(task, msg),
                }
            }
            TaskState::Suspended => self.tasks[task].state = TaskState::Running,
            TaskState::Running => {}
            TaskState::Done | TaskState::Failed => unreachable!("finished task resumed"),
        }

        let node = self.tasks[task].event.node;
        while let Some(fetch) = self.runtime[task].plan.get(self.runtime[task].next_fetch).cloned() {
            let (fetched, cost, remote_bytes, cache_hit, counted) = match fetch {
                Fetch::Get { key, blocking } => match self.store.get(&key, node, now) {
                    Ok(out) => {
                        let hit = out.source == crate::store::ReadSource::Cache;
                        (Fetched::Object(out.object), out.cost, out.remote_bytes, hit, true)
                    }
                    Err(Error::ObjectMissing(_)) if blocking => {
                        self.tasks[task].state = TaskState::Suspended;
                        self.waiters.entry(key).or_default().push(task);
                        self.release_worker(task);
                        return;
                    }
                    Err(Error::ObjectMissing(_)) => (Fetched::Missing(key), 0, 0, false, false),
                    Err(e) => return self.fail(task, e.to_string()),
                },
                Fetch::List { prefix } => match self.store.list_prefix(&prefix, node, now) {
                    Ok(out) => (Fetched::Listing(out.objects), out.cost, out.remote_bytes, false, false),
                    Err(e) => return self.fail(task, e.to_string()),
                },
            };
            let m = &mut self.tasks[task].metrics;
            if counted {
                m.gets += 1;
                if cache_hit {
                    m.cache_hits += 1;
                } else {
                    m.cache_misses += 1;
                }
                if remote_bytes > 0 || cost > 0 {
                    m.remote_gets += 1;
                }
            }
            m.fetch_us += cost;
            m.remote_bytes += remote_bytes;
            let rt = &mut self.runtime[task];
            rt.fetched.push(fetched);
            rt.next_fetch += 1;
            if cost > 0 {
                self.schedule(now + cost, Action::Resume(task));
                return;
            }
        }

        let result = self
            .handler(task)
            .execute(&self.context(task), &self.runtime[task].fetched);
        match result {
            Ok(output) => {
                let service = output.service_us;
                self.tasks[task].metrics.service_us = service;
                self.runtime[task].output = Some(output);
                self.schedule(now + service, Action::ServiceDone(task));
            }
            Err(msg) => self.fail(task, msg),
        }
    }

    fn service_done(&mut self, task: usize) {
        let now = self.queue.now();
        let node = self.tasks[task].event.node;
        let output = self.runtime[task].output.take().unwrap_or_default();
        for request in output.puts {
            let id = self.new_put(node, Some(task), now, request);
            self.issue_put(id);
        }
        self.finish(task, TaskState::Done);
    }

    fn fail(&mut self, task: usize, message: String) {
        let name = self.handler(task).name().to_string();
        let err = Error::Handler {
            handler: name,
            key: self.tasks[task].event.key.to_string(),
            message,
        };
        self.errors.push((task, err.to_string()));
        self.finish(task, TaskState::Failed);
    }

    fn finish(&mut self, task: usize, state: TaskState) {
        let now = self.queue.now();
        let t = &mut self.tasks[task];
        t.state = state;
        t.done_us = Some(now);
        t.start_us.get_or_insert(now);
        self.runtime[task].fetched.clear();
        self.release_worker(task);
        let queue = self.runtime[task].queue.clone();
        let fifo = self.fifos.get_mut(&queue).expect("task queued");
        debug_assert_eq!(fifo.front(), Some(&task));
        fifo.pop_front();
        match fifo.front().copied() {
            Some(next) => self.make_ready(next),
            None => {
                self.fifos.remove(&queue);
            }
        }
    }

    /// Completed put records, in issue order.
    pub fn completed_puts(&self) -> impl Iterator<Item = &PutRecord> {
        self.puts.iter().filter(|p| p.completed)
    }

    /// The event log as text, one `at,sequence,scheduled_at,kind,subject` line per event.
    pub fn event_log(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            writeln!(
                out,
                "{},{},{},{},{}",
                e.at, e.sequence, e.scheduled_at, e.kind, e.subject
            )
            .unwrap();
        }
        out
    }

    /// Per-task run log; see [`RUN_LOG_HEADER`].
    pub fn run_log(&self) -> String {
        let mut out = String::from(RUN_LOG_HEADER);
        out.push('\n');
        for t in &self.tasks {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                t.event.fired_at,
                t.start_us.map(|v| v.to_string()).unwrap_or_default(),
                t.done_us.map(|v| v.to_string()).unwrap_or_default(),
                t.event.node,
                t.registration.step_label,
                t.event.key,
                t.event.affinity_key.as_ref().map(|a| a.as_str()).unwrap_or(""),
                t.metrics.fetch_us,
                t.metrics.service_us,
                t.metrics.remote_bytes,
            )
            .unwrap();
        }
        out
    }

    /// Object the task was triggered with.
    pub fn trigger_object(&self, task: usize) -> &Arc<crate::store::DataObject> {
        &self.tasks[task].event.object
    }
}

pub const RUN_LOG_HEADER: &str =
    "fired_at_us,start_us,done_us,node,step,key,affinity_key,fetch_us,service_us,remote_bytes";
