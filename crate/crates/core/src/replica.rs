// SPDX-License-Identifier: Apache-2.0

//! A desk-scale TV controller with a CPU-load fault.
//!
//! Four phases: TV 60 s, teletext 15 s, transparent teletext 15 s, TV 60 s.
//! Leaving teletext does not stop the page poll, which keeps re-posting
//! itself every 250 ms; a benign cache sweep also runs only after teletext.
//! Both show up as fail-only suspects, one of them being the fault.

use std::ops::RangeInclusive;

use crate::instrument::{Manifest, Scope};
use crate::minic::{parse, Program};
use crate::sim::{
    run_scenario, FaultInjection, HandlerDecl, Phase, Scenario, SimError, SimOutput, Stimulus, ThreadDecl, ThreadId,
    DEFAULT_CAPACITY,
};
use crate::spectrum::EpochSeq;
use crate::transport::DEFAULT_BYTES_PER_SECOND;
use crate::vm::{CostModel, Millis};

pub const PROGRAM: &str = include_str!("../fixtures/tv_replica.mc");
pub const SCENARIO: &str = include_str!("../fixtures/tv_replica.scenario");
pub const TRUTH: &str = include_str!("../fixtures/tv_replica.truth");
/// Handler names in registration order, for dispatch-scope instrumentation.
pub const HANDLER_LIST: &str = include_str!("../fixtures/tv_replica.handlers");

/// `(name, thread)` in registration order.
pub const HANDLERS: [(&str, ThreadId); 12] = [
    ("rc_decode", 2),
    ("video_tick", 1),
    ("audio_tick", 1),
    ("sync_monitor", 1),
    ("osd_update", 0),
    ("clock_tick", 0),
    ("txt_acquire", 1),
    ("txt_render", 1),
    ("txt_blend", 0),
    ("txt_page_poll", 0),
    ("txt_cache_sweep", 0),
    ("menu_key", 0),
];

/// `(thread, priority)`.
pub const THREADS: [(ThreadId, i32); 3] = [(0, 1), (1, 2), (2, 3)];

pub const FAULT_HANDLER: &str = "txt_page_poll";
pub const SWEEP_HANDLER: &str = "txt_cache_sweep";

pub const PASS_EPOCHS: RangeInclusive<EpochSeq> = 10..=19;
pub const FAIL_EPOCHS: RangeInclusive<EpochSeq> = 100..=109;
/// First TV plateau, start-up seconds excluded.
pub const TV1_SECONDS: RangeInclusive<u32> = 10..=59;
pub const TV2_SECONDS: RangeInclusive<u32> = 90..=149;

const STARTUP_MS: Millis = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicaOptions {
    pub seed: u64,
    pub fault: bool,
    pub poll_period: Millis,
    pub capacity: usize,
    pub bytes_per_second: u32,
    pub jitter_ms: Millis,
}

impl Default for ReplicaOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            fault: true,
            poll_period: 250,
            capacity: DEFAULT_CAPACITY,
            bytes_per_second: DEFAULT_BYTES_PER_SECOND,
            jitter_ms: 5,
        }
    }
}

fn every(out: &mut Vec<Stimulus>, from: Millis, to: Millis, step: Millis, thread: ThreadId, handler: &str) {
    let mut t = from;
    while t < to {
        out.push(Stimulus { time: t, thread, handler: handler.to_string(), args: Vec::new() });
        t += step;
    }
}

/// Generates the fixture scenario. The default options give the checked-in
/// `tv_replica.scenario`.
pub fn scenario(opts: &ReplicaOptions) -> Scenario {
    let phases = vec![
        Phase { name: "tv1".into(), duration: 60_000 },
        Phase { name: "teletext".into(), duration: 15_000 },
        Phase { name: "transparent".into(), duration: 15_000 },
        Phase { name: "tv2".into(), duration: 60_000 },
    ];
    let (txt_start, transparent_start, tv2_start, end) = (60_000, 75_000, 90_000, 150_000);

    let mut stimuli = Vec::new();
    // Self-reposting periodic work is kicked off once.
    for name in ["video_tick", "audio_tick", "sync_monitor", "clock_tick"] {
        let thread = HANDLERS.iter().find(|h| h.0 == name).expect("fixture handler").1;
        stimuli.push(Stimulus { time: 0, thread, handler: name.into(), args: Vec::new() });
    }
    for s in 0..end / 1000 {
        stimuli.push(Stimulus {
            time: s * 1000 + 500,
            thread: 2,
            handler: "rc_decode".into(),
            args: vec![(s % 10) as i64],
        });
    }
    every(&mut stimuli, 50, STARTUP_MS, 100, 0, "osd_update");
    every(&mut stimuli, txt_start, tv2_start, 200, 1, "txt_acquire");
    every(&mut stimuli, txt_start + 100, tv2_start, 500, 1, "txt_render");
    every(&mut stimuli, transparent_start + 300, tv2_start, 500, 0, "txt_blend");
    every(&mut stimuli, txt_start, tv2_start, opts.poll_period, 0, FAULT_HANDLER);
    every(&mut stimuli, tv2_start + 2000, end, 4000, 0, SWEEP_HANDLER);
    stimuli.sort_by_key(|s| s.time);

    Scenario {
        seed: opts.seed,
        n_funcs: Some(HANDLERS.len()),
        scope: Scope::DispatchEntry,
        capacity: opts.capacity,
        bytes_per_second: opts.bytes_per_second,
        jitter_ms: opts.jitter_ms,
        fault: opts.fault.then(|| FaultInjection {
            handler: FAULT_HANDLER.into(),
            repost_period: opts.poll_period,
            activation_phase: "tv2".into(),
        }),
        threads: THREADS.iter().map(|&(id, priority)| ThreadDecl { id, priority }).collect(),
        handlers: HANDLERS.iter().map(|&(name, thread)| HandlerDecl { name: name.into(), thread }).collect(),
        phases,
        stimuli,
    }
}

pub fn program() -> Program {
    parse(PROGRAM).expect("fixture program parses")
}

pub fn manifest() -> Manifest {
    Manifest::from_names(HANDLERS.iter().map(|h| h.0)).expect("fixture handlers are distinct")
}

pub fn run(opts: &ReplicaOptions, recording: bool) -> Result<SimOutput, SimError> {
    run_scenario(&program(), &scenario(opts), &manifest(), CostModel::default(), recording)
}
