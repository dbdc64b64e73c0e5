// SPDX-License-Identifier: Apache-2.0

//! Virtual-time simulation of prioritized message-dispatch threads.
//!
//! Each thread owns a FIFO of messages and runs one handler at a time. The
//! runnable thread with the highest priority holds the CPU; a lower-priority
//! handler that loses the CPU is suspended at a statement boundary and later
//! resumed. While every queue is empty the spectrum pool drains onto the
//! serial channel, so collection never shows up as busy time.

mod event;
mod load;
mod scenario;

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instrument::{Manifest, ProbeId, Scope};
use crate::minic::Program;
use crate::spectrum::{
    DrainOutcome, EpochSeq, Label, RotateOutcome, SpectraLog, Spectrum, SpectrumError, SpectrumPool,
};
use crate::transport::{
    Channel, ChannelTx, CodecError, FrameDecoder, Reassembler, ReassemblyError, DEFAULT_BYTES_PER_SECOND,
    DEFAULT_TX_BUFFER, FRAME_LEN,
};
use crate::vm::{CostModel, Execution, Host, Millis, RuntimeError, Vm};

pub use event::{events_to_string, Event, PostSource};
pub use load::{cpu_load_series, load_to_csv, parse_load_csv, CsvError, LoadSample, SECOND_MS};
pub use scenario::{
    FaultInjection, HandlerDecl, Phase, Scenario, ScenarioError, Stimulus, ThreadDecl, ThreadId, DEFAULT_CAPACITY,
};

pub type HandlerId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub scope: Scope,
    /// Counter count for all-calls instrumentation. Dispatch-entry probing
    /// uses one counter per registered handler.
    pub n_funcs: Option<usize>,
    pub capacity: usize,
    pub bytes_per_second: u32,
    pub tx_buffer: usize,
    pub epoch_period: Millis,
    /// Collect and transmit spectra. Turning this off must not change timing.
    pub recording: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            scope: Scope::DispatchEntry,
            n_funcs: None,
            capacity: DEFAULT_CAPACITY,
            bytes_per_second: DEFAULT_BYTES_PER_SECOND,
            tx_buffer: DEFAULT_TX_BUFFER,
            epoch_period: SECOND_MS,
            recording: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown thread {0}")]
    UnknownThread(ThreadId),
    #[error("thread {0} declared twice")]
    DuplicateThread(ThreadId),
    #[error("priority {0} is already taken")]
    DuplicatePriority(i32),
    #[error("handler `{0}` registered twice")]
    DuplicateHandler(String),
    #[error("unknown handler `{0}`")]
    UnknownHandler(String),
    #[error("handler `{0}` has no function in the program")]
    MissingFunction(String),
    #[error("handler `{handler}` runs on thread {expected}, not {found}")]
    WrongThread { handler: String, expected: ThreadId, found: ThreadId },
    #[error("manifest does not match the scenario: {0}")]
    ManifestMismatch(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Reassembly(#[from] ReassemblyError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub duration: Millis,
    pub epochs_rotated: u64,
    pub epochs_extended: u64,
    pub dropped_probes: u64,
    pub spectra_received: usize,
    pub total_busy_ms: Millis,
    pub handlers_completed: u64,
    pub handler_failures: u64,
    /// Messages still queued or running when the scenario ended.
    pub unfinished_messages: u64,
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "duration_ms={}", self.duration)?;
        writeln!(f, "epochs_rotated={}", self.epochs_rotated)?;
        writeln!(f, "epochs_extended={}", self.epochs_extended)?;
        writeln!(f, "dropped_probes={}", self.dropped_probes)?;
        writeln!(f, "spectra_received={}", self.spectra_received)?;
        writeln!(f, "total_busy_ms={}", self.total_busy_ms)?;
        writeln!(f, "handlers_completed={}", self.handlers_completed)?;
        writeln!(f, "handler_failures={}", self.handler_failures)?;
        write!(f, "unfinished_messages={}", self.unfinished_messages)
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub load: Vec<LoadSample>,
    /// Receiver-side log, with failing epochs labeled.
    pub spectra: SpectraLog,
    /// Pool-side spectra in the order they entered the send queue.
    pub queued: Vec<Spectrum>,
    pub events: Vec<Event>,
    pub summary: RunSummary,
}

#[derive(Debug)]
struct Message {
    handler: HandlerId,
    args: Vec<i64>,
}

#[derive(Debug)]
struct Running {
    handler: HandlerId,
    exec: Execution,
    preempted: bool,
}

#[derive(Debug)]
struct ThreadState {
    id: ThreadId,
    priority: i32,
    queue: VecDeque<Message>,
    running: Option<Running>,
}

impl ThreadState {
    fn runnable(&self) -> bool {
        self.running.is_some() || !self.queue.is_empty()
    }
}

#[derive(Debug, Clone)]
struct HandlerEntry {
    name: String,
    thread: usize,
}

#[derive(Debug)]
enum Pending {
    End,
    Tick,
    Phase(String),
    Post { thread: usize, handler: HandlerId, args: Vec<i64>, source: PostSource },
    Repost { handler: HandlerId, period: Millis },
}

impl Pending {
    /// Tie-break among events at the same instant.
    fn class(&self) -> u8 {
        match self {
            Pending::End => 0,
            Pending::Tick => 1,
            Pending::Phase(_) => 2,
            Pending::Post { .. } | Pending::Repost { .. } => 3,
        }
    }
}

#[derive(Debug)]
struct Timed {
    time: Millis,
    class: u8,
    seq: u64,
    event: Pending,
}

impl Timed {
    fn key(&self) -> (Millis, u8, u64) {
        (self.time, self.class, self.seq)
    }
}

impl PartialEq for Timed {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Timed {}

impl PartialOrd for Timed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Timed {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Builtin bridge for handlers running inside the simulator.
struct DispatchHost<'a> {
    pool: Option<&'a mut SpectrumPool>,
    n_handlers: usize,
    posts: Vec<(HandlerId, Millis)>,
    yield_now: bool,
}

impl Host for DispatchHost<'_> {
    fn probe(&mut self, id: ProbeId) -> Result<(), String> {
        match self.pool.as_deref_mut() {
            Some(pool) => pool.probe_record(id).map_err(|e| e.to_string()),
            None => Ok(()),
        }
    }

    fn post_message(&mut self, handler: i64, delay_ms: i64) -> Result<(), String> {
        let h = usize::try_from(handler)
            .ok()
            .filter(|&h| h < self.n_handlers)
            .ok_or_else(|| format!("post_message: no handler with id {handler}"))?;
        let delay = Millis::try_from(delay_ms).map_err(|_| format!("post_message: negative delay {delay_ms}"))?;
        self.posts.push((h, delay));
        self.yield_now = true;
        Ok(())
    }

    fn take_yield(&mut self) -> bool {
        std::mem::take(&mut self.yield_now)
    }
}

/// Spectrum pool, serial line and receiver.
struct Collector {
    pool: SpectrumPool,
    channel: Channel,
    decoder: FrameDecoder,
    reassembler: Reassembler,
    queued: Vec<Spectrum>,
    failed: BTreeSet<EpochSeq>,
}

impl Collector {
    fn snapshot_tail(&mut self) {
        if let Some(s) = self.pool.send_queue().back() {
            self.queued.push(s.clone());
        }
    }

    fn poll(&mut self, t: Millis, events: &mut Vec<Event>) -> Result<(), SimError> {
        let bytes = self.channel.poll(t);
        if bytes.is_empty() {
            return Ok(());
        }
        for frame in self.decoder.push(&bytes) {
            if let Some(s) = self.reassembler.feed(frame?)? {
                events.push(Event::SpectrumReceived { t, epoch: s.epoch_seq });
            }
        }
        Ok(())
    }

    /// Drains frames from `from` until the pool is empty or the channel
    /// stays full past `horizon`.
    fn idle(&mut self, from: Millis, horizon: Millis, events: &mut Vec<Event>) -> Result<(), SimError> {
        let mut t = from;
        loop {
            self.poll(t, events)?;
            let head = self.pool.send_queue().front().map(|s| s.epoch_seq);
            let mut tx = ChannelTx { channel: &mut self.channel, now: t };
            match self.pool.drain_step(&mut tx) {
                Ok(DrainOutcome::SentCounter) => {}
                Ok(DrainOutcome::SentEnd) => {
                    events.push(Event::SpectrumSent { t, epoch: head.expect("a spectrum was queued") });
                }
                Ok(DrainOutcome::Idle) => return Ok(()),
                Err(SpectrumError::TransmitterBusy) => match self.channel.time_with_space(FRAME_LEN, t) {
                    Some(next) if next > t && next < horizon => t = next,
                    _ => return Ok(()),
                },
                Err(e) => return Err(e.into()),
            }
        }
    }
}

pub struct Simulator {
    vm: Vm,
    config: SimConfig,
    threads: Vec<ThreadState>,
    handlers: Vec<HandlerEntry>,
    by_name: HashMap<String, HandlerId>,
    agenda: BinaryHeap<Reverse<Timed>>,
    seq: u64,
    now: Millis,
    last_ran: Option<usize>,
    events: Vec<Event>,
    completed: u64,
    failures: u64,
}

impl Simulator {
    pub fn new(program: &Program, cost: CostModel, config: SimConfig) -> Result<Self, SimError> {
        if cost.cost_per_statement == 0 {
            return Err(SimError::Config("cost_per_statement must be at least 1 ms".into()));
        }
        if config.epoch_period == 0 {
            return Err(SimError::Config("epoch period must be positive".into()));
        }
        if config.capacity == 0 || config.bytes_per_second == 0 || config.tx_buffer < FRAME_LEN {
            return Err(SimError::Config(
                "capacity and bandwidth must be positive and the transmit buffer must hold a frame".into(),
            ));
        }
        Ok(Self {
            vm: Vm::new(program, cost),
            config,
            threads: Vec::new(),
            handlers: Vec::new(),
            by_name: HashMap::new(),
            agenda: BinaryHeap::new(),
            seq: 0,
            now: 0,
            last_ran: None,
            events: Vec::new(),
            completed: 0,
            failures: 0,
        })
    }

    /// Builds a simulator for `scenario`, with stimuli jittered by its seed.
    pub fn from_scenario(
        program: &Program,
        scenario: &Scenario,
        manifest: &Manifest,
        cost: CostModel,
        recording: bool,
    ) -> Result<Self, SimError> {
        scenario.validate()?;
        if let Some(n) = scenario.n_funcs {
            if n != manifest.n_funcs() {
                return Err(SimError::ManifestMismatch(format!(
                    "scenario declares {n} functions, manifest has {}",
                    manifest.n_funcs()
                )));
            }
        }
        if scenario.scope == Scope::DispatchEntry && manifest.names() != scenario.handler_names() {
            return Err(SimError::ManifestMismatch("dispatch-entry ids must follow handler declaration order".into()));
        }
        let config = SimConfig {
            scope: scenario.scope,
            n_funcs: Some(manifest.n_funcs()),
            capacity: scenario.capacity,
            bytes_per_second: scenario.bytes_per_second,
            recording,
            ..SimConfig::default()
        };
        let mut sim = Simulator::new(program, cost, config)?;
        for t in &scenario.threads {
            sim.add_thread(t.id, t.priority)?;
        }
        for h in &scenario.handlers {
            sim.register_handler(&h.name, h.thread)?;
        }
        for (name, start, _) in scenario.phase_spans() {
            sim.mark_phase(start, &name);
        }
        let end = scenario.total_duration();
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        for s in &scenario.stimuli {
            let jitter = if scenario.jitter_ms > 0 { rng.random_range(0..=scenario.jitter_ms) } else { 0 };
            let time = (s.time + jitter).min(end.saturating_sub(1));
            sim.schedule_post(time, s.thread, &s.handler, s.args.clone())?;
        }
        if let Some(f) = &scenario.fault {
            let start = scenario.phase_start(&f.activation_phase).expect("validated phase");
            sim.inject_fault(&f.handler, f.repost_period, start)?;
        }
        Ok(sim)
    }

    pub fn add_thread(&mut self, id: ThreadId, priority: i32) -> Result<(), SimError> {
        if self.threads.iter().any(|t| t.id == id) {
            return Err(SimError::DuplicateThread(id));
        }
        if self.threads.iter().any(|t| t.priority == priority) {
            return Err(SimError::DuplicatePriority(priority));
        }
        self.threads.push(ThreadState { id, priority, queue: VecDeque::new(), running: None });
        Ok(())
    }

    /// Ties `name` to a thread's dispatch loop. Ids follow registration order.
    pub fn register_handler(&mut self, name: &str, thread: ThreadId) -> Result<HandlerId, SimError> {
        if self.by_name.contains_key(name) {
            return Err(SimError::DuplicateHandler(name.to_string()));
        }
        let thread = self.thread_index(thread)?;
        if !self.vm.has_function(name) {
            return Err(SimError::MissingFunction(name.to_string()));
        }
        let id = self.handlers.len();
        self.handlers.push(HandlerEntry { name: name.to_string(), thread });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn handler_names(&self) -> Vec<String> {
        self.handlers.iter().map(|h| h.name.clone()).collect()
    }

    pub fn now(&self) -> Millis {
        self.now
    }

    /// Appends a message to `thread`'s queue at the current virtual time.
    pub fn post(&mut self, thread: ThreadId, handler: &str, args: Vec<i64>) -> Result<(), SimError> {
        let (ti, h) = self.resolve(thread, handler)?;
        self.enqueue(ti, h, args, PostSource::Api);
        Ok(())
    }

    pub fn schedule_post(
        &mut self,
        time: Millis,
        thread: ThreadId,
        handler: &str,
        args: Vec<i64>,
    ) -> Result<(), SimError> {
        let (ti, h) = self.resolve(thread, handler)?;
        self.schedule(time, Pending::Post { thread: ti, handler: h, args, source: PostSource::Stimulus });
        Ok(())
    }

    /// Re-posts `handler` every `period` ms from `start` until the run ends.
    pub fn inject_fault(&mut self, handler: &str, period: Millis, start: Millis) -> Result<(), SimError> {
        if period == 0 {
            return Err(SimError::Config("repost period must be positive".into()));
        }
        let &h = self.by_name.get(handler).ok_or_else(|| SimError::UnknownHandler(handler.to_string()))?;
        self.schedule(start, Pending::Repost { handler: h, period });
        Ok(())
    }

    pub fn mark_phase(&mut self, time: Millis, name: &str) {
        self.schedule(time, Pending::Phase(name.to_string()));
    }

    fn thread_index(&self, id: ThreadId) -> Result<usize, SimError> {
        self.threads.iter().position(|t| t.id == id).ok_or(SimError::UnknownThread(id))
    }

    fn resolve(&self, thread: ThreadId, handler: &str) -> Result<(usize, HandlerId), SimError> {
        let ti = self.thread_index(thread)?;
        let &h = self.by_name.get(handler).ok_or_else(|| SimError::UnknownHandler(handler.to_string()))?;
        let expected = self.handlers[h].thread;
        if expected != ti {
            return Err(SimError::WrongThread {
                handler: handler.to_string(),
                expected: self.threads[expected].id,
                found: thread,
            });
        }
        Ok((ti, h))
    }

    fn schedule(&mut self, time: Millis, event: Pending) {
        let timed = Timed { time, class: event.class(), seq: self.seq, event };
        self.seq += 1;
        self.agenda.push(Reverse(timed));
    }

    fn enqueue(&mut self, ti: usize, handler: HandlerId, args: Vec<i64>, source: PostSource) {
        self.events.push(Event::Post {
            t: self.now,
            thread: self.threads[ti].id,
            handler: self.handlers[handler].name.clone(),
            source,
        });
        self.threads[ti].queue.push_back(Message { handler, args });
    }

    fn pick(&self) -> Option<usize> {
        self.threads.iter().enumerate().filter(|(_, t)| t.runnable()).max_by_key(|(_, t)| t.priority).map(|(i, _)| i)
    }

    fn n_funcs(&self) -> Result<usize, SimError> {
        match self.config.scope {
            Scope::DispatchEntry => match self.config.n_funcs {
                Some(n) if n != self.handlers.len() => Err(SimError::ManifestMismatch(format!(
                    "{n} counters configured for {} handlers",
                    self.handlers.len()
                ))),
                _ => Ok(self.handlers.len()),
            },
            Scope::AllCalls => self
                .config
                .n_funcs
                .ok_or_else(|| SimError::Config("all-calls recording needs the manifest size".into())),
        }
    }

    /// Runs the simulation for `duration` virtual ms, then flushes the pool.
    pub fn run(mut self, duration: Millis) -> Result<SimOutput, SimError> {
        let mut collector = if self.config.recording {
            let n_funcs = self.n_funcs()?;
            Some(Collector {
                pool: SpectrumPool::new(n_funcs, self.config.capacity, 0)?,
                channel: Channel::with_buffer(self.config.bytes_per_second, self.config.tx_buffer),
                decoder: FrameDecoder::new(),
                reassembler: Reassembler::new(n_funcs, self.config.epoch_period),
                queued: Vec::new(),
                failed: BTreeSet::new(),
            })
        } else {
            None
        };
        self.schedule(duration, Pending::End);
        if collector.is_some() && self.config.epoch_period < duration {
            self.schedule(self.config.epoch_period, Pending::Tick);
        }

        'run: loop {
            while let Some(Reverse(head)) = self.agenda.peek() {
                if head.time > self.now {
                    break;
                }
                let Reverse(timed) = self.agenda.pop().expect("peeked");
                match timed.event {
                    Pending::End => break 'run,
                    Pending::Tick => {
                        let c = collector.as_mut().expect("ticks only run while recording");
                        let outcome = c.pool.rotate_epoch(timed.time);
                        if outcome == RotateOutcome::Rotated {
                            c.snapshot_tail();
                        }
                        let epoch = c.pool.current().map_or(0, |s| s.epoch_seq);
                        self.events.push(Event::Rotate { t: timed.time, epoch, outcome });
                        let next = timed.time + self.config.epoch_period;
                        if next < duration {
                            self.schedule(next, Pending::Tick);
                        }
                    }
                    Pending::Phase(name) => self.events.push(Event::Phase { t: timed.time, name }),
                    Pending::Post { thread, handler, args, source } => {
                        self.enqueue(thread, handler, args, source);
                    }
                    Pending::Repost { handler, period } => {
                        let thread = self.handlers[handler].thread;
                        self.enqueue(thread, handler, Vec::new(), PostSource::Fault);
                        if timed.time + period < duration {
                            self.schedule(timed.time + period, Pending::Repost { handler, period });
                        }
                    }
                }
            }
            let next = self.agenda.peek().map(|Reverse(t)| t.time).expect("end is always pending");
            if let Some(c) = collector.as_mut() {
                c.poll(self.now, &mut self.events)?;
            }
            match self.pick() {
                Some(ti) => self.run_slice(ti, next, collector.as_mut())?,
                None => {
                    if let Some(c) = collector.as_mut() {
                        c.idle(self.now, next, &mut self.events)?;
                    }
                    self.now = next;
                }
            }
        }

        let unfinished: u64 = self.threads.iter().map(|t| t.queue.len() as u64 + u64::from(t.running.is_some())).sum();
        let load = cpu_load_series(&self.events, duration);
        let total_busy_ms = load.iter().map(|s| s.busy_ms).sum();
        let mut summary = RunSummary {
            duration,
            total_busy_ms,
            handlers_completed: self.completed,
            handler_failures: self.failures,
            unfinished_messages: unfinished,
            ..RunSummary::default()
        };
        let (spectra, queued) = match collector {
            Some(mut c) => {
                let had_current = c.pool.current().is_some();
                c.pool.close();
                if had_current {
                    c.snapshot_tail();
                }
                c.idle(self.now, Millis::MAX, &mut self.events)?;
                if let Some(t) = c.channel.drained_at() {
                    c.poll(t.max(self.now), &mut self.events)?;
                }
                summary.epochs_rotated = c.pool.rotations();
                summary.epochs_extended = c.pool.dropped_rotations();
                summary.dropped_probes = c.pool.dropped_probes();
                let mut log = c.reassembler.into_log();
                for &e in &c.failed {
                    let _ = log.label_epoch(e, Label::Fail);
                    for s in c.queued.iter_mut().filter(|s| s.epoch_seq == e) {
                        s.label = Label::Fail;
                    }
                }
                (log, c.queued)
            }
            None => (SpectraLog::new(), Vec::new()),
        };
        summary.spectra_received = spectra.len();
        Ok(SimOutput { load, spectra, queued, events: self.events, summary })
    }

    fn run_slice(&mut self, ti: usize, next: Millis, mut collector: Option<&mut Collector>) -> Result<(), SimError> {
        if let Some(prev) = self.last_ran.filter(|&p| p != ti) {
            let thread_id = self.threads[prev].id;
            if let Some(r) = self.threads[prev].running.as_mut().filter(|r| !r.preempted) {
                r.preempted = true;
                let handler = self.handlers[r.handler].name.clone();
                self.events.push(Event::Preempt { t: self.now, thread: thread_id, handler });
            }
        }
        self.last_ran = Some(ti);
        let thread_id = self.threads[ti].id;

        if self.threads[ti].running.is_none() {
            let msg = self.threads[ti].queue.pop_front().expect("picked thread is runnable");
            let name = self.handlers[msg.handler].name.clone();
            self.events.push(Event::Start { t: self.now, thread: thread_id, handler: name.clone() });
            if self.config.scope == Scope::DispatchEntry {
                if let Some(c) = collector.as_deref_mut() {
                    c.pool.probe_record(msg.handler as ProbeId)?;
                }
            }
            match self.vm.start(&name, &msg.args) {
                Ok(exec) => self.threads[ti].running = Some(Running { handler: msg.handler, exec, preempted: false }),
                Err(e) => {
                    self.fail(ti, msg.handler, &e, collector);
                    return Ok(());
                }
            }
        }

        let running = self.threads[ti].running.as_mut().expect("set above");
        let handler = running.handler;
        if running.preempted {
            running.preempted = false;
            let name = self.handlers[handler].name.clone();
            self.events.push(Event::Resume { t: self.now, thread: thread_id, handler: name });
        }
        let budget = next.saturating_sub(self.now).max(self.vm.cost_model().cost_per_statement);
        let before = running.exec.consumed();
        let mut host = DispatchHost {
            pool: collector.as_deref_mut().map(|c| &mut c.pool),
            n_handlers: self.handlers.len(),
            posts: Vec::new(),
            yield_now: false,
        };
        let result = self.vm.step_budgeted(&mut running.exec, budget, &mut host);
        let posts = host.posts;
        let total = running.exec.consumed();
        let slice = match &result {
            Ok(step) => step.consumed,
            Err(e) => e.consumed - before,
        };
        if slice > 0 {
            self.events.push(Event::Exec {
                from: self.now,
                to: self.now + slice,
                thread: thread_id,
                handler: self.handlers[handler].name.clone(),
            });
        }
        self.now += slice;
        match result {
            Ok(step) if step.returned.is_some() => {
                self.threads[ti].running = None;
                self.completed += 1;
                let name = self.handlers[handler].name.clone();
                self.events.push(Event::End { t: self.now, thread: thread_id, handler: name, cost: total });
            }
            Ok(_) => {}
            Err(e) => {
                self.threads[ti].running = None;
                self.fail(ti, handler, &e, collector);
            }
        }
        for (h, delay) in posts {
            let target = self.handlers[h].thread;
            self.schedule(
                self.now + delay,
                Pending::Post { thread: target, handler: h, args: Vec::new(), source: PostSource::Program },
            );
        }
        Ok(())
    }

    /// A handler fault marks the epoch in progress as failing.
    fn fail(&mut self, ti: usize, handler: HandlerId, error: &RuntimeError, collector: Option<&mut Collector>) {
        self.failures += 1;
        let epoch = collector.and_then(|c| {
            let e = c.pool.current()?.epoch_seq;
            c.failed.insert(e);
            Some(e)
        });
        self.events.push(Event::Fail {
            t: self.now,
            thread: self.threads[ti].id,
            handler: self.handlers[handler].name.clone(),
            epoch,
            error: error.kind.to_string(),
        });
    }
}

/// Runs `scenario` end to end.
pub fn run_scenario(
    program: &Program,
    scenario: &Scenario,
    manifest: &Manifest,
    cost: CostModel,
    recording: bool,
) -> Result<SimOutput, SimError> {
    Simulator::from_scenario(program, scenario, manifest, cost, recording)?.run(scenario.total_duration())
}
