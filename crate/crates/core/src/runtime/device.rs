use alloc::boxed::Box;
use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::crypto::EntropySource;
use crate::model::{FbBody, FbNetwork, FbType, Trigger, Value};
use crate::transport::{ChannelId, Delivery, LinkFilter, SubscriptionId, Transport, TransportError};
use crate::wire::WireFrame;

use super::clock::Clock;
use super::flatten::{flatten, Flat, LeafPort};
use super::snapshot::{truth, AlgError, Snapshot};
use super::{Bindings, LatencySample, RuntimeError, Service, ServiceSpec, ServiceTrigger};

/// Transitions a basic FB may take for one event before it is treated as
/// livelocked and faulted.
pub const LIVELOCK_CAP: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub time_us: u64,
    pub instance: String,
    pub event: String,
    /// Inputs sampled with the event.
    pub values: Vec<(String, Value)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fault {
    pub time_us: u64,
    pub instance: String,
    pub message: String,
}

enum Behaviour {
    Basic { state: usize },
    Service(Box<dyn Service>),
}

struct Inst {
    behaviour: Behaviour,
    snap: Snapshot,
    /// Latest values written into data inputs, sampled on events.
    buffer: BTreeMap<String, Value>,
    faulted: bool,
}

enum Inbox {
    Inject(usize, String),
    Frame(usize, Delivery),
    Timer(usize, u64),
}

#[derive(Default)]
pub(crate) struct Timers {
    entries: BTreeMap<(u64, u64), (usize, u64)>,
    seq: u64,
}

impl Timers {
    fn set(&mut self, at_us: u64, leaf: usize, token: u64) {
        self.seq += 1;
        self.entries.insert((at_us, self.seq), (leaf, token));
    }

    fn cancel(&mut self, leaf: usize, token: u64) {
        self.entries.retain(|_, v| *v != (leaf, token));
    }

    fn next(&self) -> Option<u64> {
        self.entries.keys().next().map(|(at, _)| *at)
    }

    fn pop_due(&mut self, now: u64) -> Option<(usize, u64)> {
        let (&key, _) = self.entries.iter().next().filter(|((at, _), _)| *at <= now)?;
        self.entries.remove(&key)
    }
}

/// Handle given to a service while it runs.
pub struct ServiceCtx<'a> {
    now_us: u64,
    leaf: usize,
    path: &'a str,
    transport: &'a mut dyn Transport,
    entropy: &'a mut dyn EntropySource,
    timers: &'a mut Timers,
    subscriptions: &'a mut BTreeMap<SubscriptionId, usize>,
    samples: &'a mut Vec<LatencySample>,
    emitted: Vec<String>,
}

impl ServiceCtx<'_> {
    pub fn now_us(&self) -> u64 {
        self.now_us
    }

    pub fn now_ms(&self) -> u64 {
        self.now_us / 1000
    }

    pub fn instance(&self) -> &str {
        self.path
    }

    /// Queues an output event of this instance.
    pub fn emit(&mut self, event: &str) {
        self.emitted.push(event.to_string());
    }

    pub fn entropy(&mut self) -> &mut dyn EntropySource {
        self.entropy
    }

    pub fn set_timer_at(&mut self, at_us: u64, token: u64) {
        self.timers.set(at_us, self.leaf, token);
    }

    pub fn set_timer(&mut self, delay_us: u64, token: u64) {
        self.timers.set(self.now_us + delay_us, self.leaf, token);
    }

    pub fn cancel_timer(&mut self, token: u64) {
        self.timers.cancel(self.leaf, token);
    }

    pub fn open(&mut self, channel: ChannelId) -> Result<(), TransportError> {
        self.transport.open(channel)
    }

    pub fn subscribe(&mut self, channel: ChannelId, filter: LinkFilter) -> Result<SubscriptionId, TransportError> {
        let sid = self.transport.subscribe(channel, self.path, filter)?;
        self.subscriptions.insert(sid, self.leaf);
        Ok(sid)
    }

    pub fn unsubscribe(&mut self, sid: SubscriptionId) {
        self.transport.unsubscribe(sid);
        self.subscriptions.remove(&sid);
    }

    pub fn publish(&mut self, channel: ChannelId, frame: &WireFrame) -> Result<(), TransportError> {
        self.transport.publish(channel, frame, self.now_us)
    }

    pub fn record_sample(&mut self, sample: LatencySample) {
        self.samples.push(sample);
    }
}

/// Event-driven executor for one device's FB network.
pub struct DeviceRuntime {
    name: String,
    flat: Flat,
    types: BTreeMap<String, FbType>,
    insts: Vec<Inst>,
    queue: VecDeque<(usize, String)>,
    inbox: VecDeque<Inbox>,
    timers: Timers,
    subscriptions: BTreeMap<SubscriptionId, usize>,
    clock: Box<dyn Clock>,
    transport: Box<dyn Transport>,
    entropy: Box<dyn EntropySource>,
    bindings: Bindings,
    trace: Option<Vec<TraceEntry>>,
    faults: Vec<Fault>,
    samples: Vec<LatencySample>,
    emitted: u64,
    processed: u64,
}

impl DeviceRuntime {
    pub fn new(
        name: &str,
        network: &FbNetwork,
        types: &[FbType],
        bindings: &Bindings,
        clock: Box<dyn Clock>,
        transport: Box<dyn Transport>,
        entropy: Box<dyn EntropySource>,
    ) -> Result<DeviceRuntime, RuntimeError> {
        let flat = flatten(network, types)?;
        let type_map: BTreeMap<String, FbType> = types.iter().map(|t| (t.name.clone(), t.clone())).collect();
        let mut insts = Vec::with_capacity(flat.leaves.len());
        for leaf in &flat.leaves {
            let ty = &type_map[&leaf.type_name];
            let behaviour = match &ty.body {
                FbBody::Basic(b) => {
                    for action in b.ecc.actions.values().flatten() {
                        if let Some(alg) = &action.algorithm {
                            if !bindings.algorithms.contains_key(alg) {
                                return Err(RuntimeError::MissingAlgorithm {
                                    fb_type: ty.name.clone(),
                                    algorithm: alg.clone(),
                                });
                            }
                        }
                    }
                    let state = b.ecc.state_index(&b.ecc.initial).ok_or_else(|| {
                        RuntimeError::Flatten(format!("`{}` has no initial state `{}`", ty.name, b.ecc.initial))
                    })?;
                    Behaviour::Basic { state }
                }
                FbBody::Service { binding } => {
                    let factory = bindings
                        .services
                        .get(binding)
                        .ok_or_else(|| RuntimeError::MissingBinding {
                            fb_type: ty.name.clone(),
                            binding: binding.clone(),
                        })?;
                    let spec = ServiceSpec {
                        instance: &leaf.path,
                        fb_type: ty,
                    };
                    Behaviour::Service(factory(&spec).map_err(|e| RuntimeError::ServiceInit {
                        instance: leaf.path.clone(),
                        message: e.0,
                    })?)
                }
                FbBody::Composite(_) => unreachable!("flatten yields only leaves"),
            };
            insts.push(Inst {
                behaviour,
                snap: Snapshot::for_type(ty),
                buffer: BTreeMap::new(),
                faulted: false,
            });
        }
        for (idx, port, value) in &flat.params {
            let inst = &mut insts[*idx];
            inst.snap.set(port, value.clone()).map_err(|e| RuntimeError::Param {
                instance: flat.leaves[*idx].path.clone(),
                message: e.0,
            })?;
            inst.buffer.insert(port.clone(), value.clone());
        }
        Ok(DeviceRuntime {
            name: name.to_string(),
            flat,
            types: type_map,
            insts,
            queue: VecDeque::new(),
            inbox: VecDeque::new(),
            timers: Timers::default(),
            subscriptions: BTreeMap::new(),
            clock,
            transport,
            entropy,
            bindings: bindings.clone(),
            trace: None,
            faults: Vec::new(),
            samples: Vec::new(),
            emitted: 0,
            processed: 0,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn now_us(&self) -> u64 {
        self.clock.now_us()
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> &[TraceEntry] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn faults(&self) -> &[Fault] {
        &self.faults
    }

    pub fn take_samples(&mut self) -> Vec<LatencySample> {
        core::mem::take(&mut self.samples)
    }

    pub fn instance_paths(&self) -> impl Iterator<Item = &str> {
        self.flat.leaves.iter().map(|l| l.path.as_str())
    }

    /// Events queued but not yet processed.
    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn is_faulted(&self, path: &str) -> bool {
        self.leaf(path).is_some_and(|i| self.insts[i].faulted)
    }

    /// Current ECC state of a basic instance.
    pub fn ecc_state(&self, path: &str) -> Option<&str> {
        let idx = self.leaf(path)?;
        let Behaviour::Basic { state } = self.insts[idx].behaviour else {
            return None;
        };
        match &self.types[&self.flat.leaves[idx].type_name].body {
            FbBody::Basic(b) => Some(b.ecc.states[state].as_str()),
            _ => None,
        }
    }

    fn leaf(&self, path: &str) -> Option<usize> {
        self.flat.leaves.iter().position(|l| l.path == path)
    }

    /// Reads a data port. `instance` is a root instance (its outputs are
    /// followed through composites) or a leaf path.
    pub fn read(&self, instance: &str, port: &str) -> Option<&Value> {
        if let Some((idx, p)) = self.flat.outputs.get(&(instance.to_string(), port.to_string())) {
            return self.insts[*idx].snap.get(p);
        }
        self.insts[self.leaf(instance)?].snap.get(port)
    }

    /// Drives a data input of a root instance from outside the network.
    pub fn write_input(&mut self, instance: &str, port: &str, value: Value) -> Result<(), RuntimeError> {
        let targets = self
            .flat
            .data_inject
            .get(&(instance.to_string(), port.to_string()))
            .cloned()
            .ok_or_else(|| RuntimeError::UnknownPort(format!("{instance}.{port}")))?;
        for (idx, p) in targets {
            self.insts[idx].buffer.insert(p, value.clone());
        }
        Ok(())
    }

    /// Schedules an input event on a root instance; it runs once the
    /// current chain of events has completed.
    pub fn inject(&mut self, instance: &str, event: &str) -> Result<(), RuntimeError> {
        let targets = self
            .flat
            .event_inject
            .get(&(instance.to_string(), event.to_string()))
            .cloned()
            .ok_or_else(|| RuntimeError::UnknownPort(format!("{instance}.{event}")))?;
        for (idx, ev) in targets {
            self.inbox.push_back(Inbox::Inject(idx, ev));
        }
        Ok(())
    }

    /// Injects INIT into every root instance that declares it.
    pub fn cold_start(&mut self) {
        let roots: Vec<String> = self
            .flat
            .roots
            .iter()
            .filter(|(_, t)| self.types[t].interface.has_event_input("INIT"))
            .map(|(n, _)| n.clone())
            .collect();
        for r in roots {
            self.inject(&r, "INIT").expect("declared input");
        }
    }

    /// Root-level event outputs can be observed through the trace of the
    /// leaves that raise them.
    pub fn event_sources(&self, instance: &str, event: &str) -> Vec<String> {
        self.flat
            .event_sources
            .get(&(instance.to_string(), event.to_string()))
            .into_iter()
            .flatten()
            .map(|(i, _)| self.flat.leaves[*i].path.clone())
            .collect()
    }

    /// Earliest future instant at which this device has work.
    pub fn next_wakeup(&self) -> Option<u64> {
        match (self.timers.next(), self.transport.next_delivery()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn transport(&self) -> &dyn Transport {
        self.transport.as_ref()
    }

    fn pump(&mut self) {
        let now = self.clock.now_us();
        for d in self.transport.poll(now) {
            if let Some(&leaf) = self.subscriptions.get(&d.subscription) {
                self.inbox.push_back(Inbox::Frame(leaf, d));
            }
        }
        while let Some((leaf, token)) = self.timers.pop_due(now) {
            self.inbox.push_back(Inbox::Timer(leaf, token));
        }
    }

    /// Processes one queued event, or one external stimulus when the queue
    /// is empty. Returns false when there was nothing to do.
    pub fn step(&mut self) -> bool {
        if let Some((leaf, ev)) = self.queue.pop_front() {
            self.processed += 1;
            self.dispatch_event(leaf, &ev);
            return true;
        }
        if self.inbox.is_empty() {
            self.pump();
        }
        match self.inbox.pop_front() {
            None => false,
            Some(Inbox::Inject(leaf, ev)) => {
                self.emitted += 1;
                self.queue.push_back((leaf, ev));
                let (leaf, ev) = self.queue.pop_front().expect("just queued");
                self.processed += 1;
                self.dispatch_event(leaf, &ev);
                true
            }
            Some(Inbox::Frame(leaf, d)) => {
                self.run_service(leaf, ServiceTrigger::Frame(&d));
                true
            }
            Some(Inbox::Timer(leaf, token)) => {
                self.run_service(leaf, ServiceTrigger::Timer(token));
                true
            }
        }
    }

    /// Steps until nothing is runnable at the current instant.
    pub fn run_until_idle(&mut self, max_steps: usize) -> Result<usize, RuntimeError> {
        let mut steps = 0;
        loop {
            if steps >= max_steps {
                if self.queue.is_empty() && self.inbox.is_empty() {
                    self.pump();
                    if self.inbox.is_empty() {
                        return Ok(steps);
                    }
                }
                return Err(RuntimeError::NonTermination {
                    device: self.name.clone(),
                    steps,
                });
            }
            if !self.step() {
                return Ok(steps);
            }
            steps += 1;
        }
    }

    fn fault(&mut self, leaf: usize, message: String) {
        self.insts[leaf].faulted = true;
        self.faults.push(Fault {
            time_us: self.clock.now_us(),
            instance: self.flat.leaves[leaf].path.clone(),
            message,
        });
    }

    fn dispatch_event(&mut self, leaf: usize, ev: &str) {
        if self.insts[leaf].faulted {
            return;
        }
        let ports: Vec<String> = self.types[&self.flat.leaves[leaf].type_name]
            .interface
            .associated(ev)
            .cloned()
            .collect();
        let inst = &mut self.insts[leaf];
        let mut sampled = Vec::new();
        for port in ports {
            if let Some(v) = inst.buffer.get(&port) {
                if let Err(e) = inst.snap.set(&port, v.clone()) {
                    self.fault(leaf, e.0);
                    return;
                }
            }
            if let Some(v) = inst.snap.get(&port) {
                sampled.push((port, v.clone()));
            }
        }
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEntry {
                time_us: self.clock.now_us(),
                instance: self.flat.leaves[leaf].path.clone(),
                event: ev.to_string(),
                values: sampled,
            });
        }
        match self.insts[leaf].behaviour {
            Behaviour::Basic { .. } => self.run_ecc(leaf, ev),
            Behaviour::Service(_) => self.run_service(leaf, ServiceTrigger::Event(ev)),
        }
    }

    fn run_ecc(&mut self, leaf: usize, ev: &str) {
        let ty = &self.types[&self.flat.leaves[leaf].type_name];
        let FbBody::Basic(basic) = &ty.body else {
            return;
        };
        let ecc = &basic.ecc;
        let inst = &mut self.insts[leaf];
        let Behaviour::Basic { state } = &mut inst.behaviour else {
            return;
        };
        let mut first = true;
        let mut fired = 0usize;
        let mut emitted: Vec<String> = Vec::new();
        let mut failure: Option<String> = None;
        'outer: loop {
            let current = &ecc.states[*state];
            let mut chosen = None;
            for t in ecc.transitions.iter().filter(|t| &t.from == current) {
                let triggered = match &t.trigger {
                    Trigger::Event(e) => first && e == ev,
                    Trigger::Always => true,
                };
                if !triggered {
                    continue;
                }
                let enabled = match &t.guard {
                    None => true,
                    Some(g) => match truth(g, &inst.snap) {
                        Ok(b) => b,
                        Err(e) => {
                            failure = Some(format!("guard on {} -> {}: {e}", t.from, t.to));
                            break 'outer;
                        }
                    },
                };
                if enabled {
                    chosen = Some(t);
                    break;
                }
            }
            let Some(t) = chosen else { break };
            first = false;
            fired += 1;
            if fired > LIVELOCK_CAP {
                failure = Some(format!("ECC did not settle after {LIVELOCK_CAP} transitions"));
                break;
            }
            *state = ecc.state_index(&t.to).expect("validated state");
            for action in ecc.actions.get(&t.to).into_iter().flatten() {
                if let Some(alg) = &action.algorithm {
                    let f = &self.bindings.algorithms[alg];
                    if let Err(AlgError(e)) = f(&mut inst.snap) {
                        failure = Some(format!("algorithm {alg}: {e}"));
                        break 'outer;
                    }
                }
                if let Some(out) = &action.output {
                    emitted.push(out.clone());
                }
            }
        }
        // outputs written before a failure still propagate
        self.propagate(leaf, emitted);
        if let Some(msg) = failure {
            self.fault(leaf, msg);
        }
    }

    fn run_service(&mut self, leaf: usize, trigger: ServiceTrigger<'_>) {
        if self.insts[leaf].faulted {
            return;
        }
        let now = self.clock.now_us();
        let inst = &mut self.insts[leaf];
        let Behaviour::Service(svc) = &mut inst.behaviour else {
            return;
        };
        let mut ctx = ServiceCtx {
            now_us: now,
            leaf,
            path: &self.flat.leaves[leaf].path,
            transport: self.transport.as_mut(),
            entropy: self.entropy.as_mut(),
            timers: &mut self.timers,
            subscriptions: &mut self.subscriptions,
            samples: &mut self.samples,
            emitted: Vec::new(),
        };
        let result = svc.handle(trigger, &mut inst.snap, &mut ctx);
        let emitted = core::mem::take(&mut ctx.emitted);
        self.propagate(leaf, emitted);
        if let Err(e) = result {
            self.fault(leaf, e.0);
        }
    }

    fn propagate(&mut self, leaf: usize, events: Vec<String>) {
        let dirty = self.insts[leaf].snap.take_dirty();
        for port in dirty {
            let key: LeafPort = (leaf, port);
            let Some(targets) = self.flat.data_routes.get(&key) else {
                continue;
            };
            let value = self.insts[leaf].snap.get(&key.1).cloned().expect("declared output");
            for (t, p) in targets {
                self.insts[*t].buffer.insert(p.clone(), value.clone());
            }
        }
        for ev in events {
            if let Some(targets) = self.flat.event_routes.get(&(leaf, ev)) {
                for (t, p) in targets {
                    self.queue.push_back((*t, p.clone()));
                    self.emitted += 1;
                }
            }
        }
    }
}
