// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use crate::spectrum::{EpochSeq, RotateOutcome};
use crate::vm::Millis;

use super::scenario::ThreadId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostSource {
    Stimulus,
    /// `post_message` from a running handler.
    Program,
    Fault,
    Api,
}

impl fmt::Display for PostSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PostSource::Stimulus => "stimulus",
            PostSource::Program => "program",
            PostSource::Fault => "fault",
            PostSource::Api => "api",
        })
    }
}

/// One line of the simulator's event log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Phase {
        t: Millis,
        name: String,
    },
    Post {
        t: Millis,
        thread: ThreadId,
        handler: String,
        source: PostSource,
    },
    Start {
        t: Millis,
        thread: ThreadId,
        handler: String,
    },
    /// Handler execution occupying the CPU over `[from, to)`.
    Exec {
        from: Millis,
        to: Millis,
        thread: ThreadId,
        handler: String,
    },
    Preempt {
        t: Millis,
        thread: ThreadId,
        handler: String,
    },
    Resume {
        t: Millis,
        thread: ThreadId,
        handler: String,
    },
    End {
        t: Millis,
        thread: ThreadId,
        handler: String,
        cost: Millis,
    },
    Fail {
        t: Millis,
        thread: ThreadId,
        handler: String,
        epoch: Option<EpochSeq>,
        error: String,
    },
    Rotate {
        t: Millis,
        epoch: EpochSeq,
        outcome: RotateOutcome,
    },
    SpectrumSent {
        t: Millis,
        epoch: EpochSeq,
    },
    SpectrumReceived {
        t: Millis,
        epoch: EpochSeq,
    },
}

impl Event {
    pub fn time(&self) -> Millis {
        match self {
            Event::Exec { from, .. } => *from,
            Event::Phase { t, .. }
            | Event::Post { t, .. }
            | Event::Start { t, .. }
            | Event::Preempt { t, .. }
            | Event::Resume { t, .. }
            | Event::End { t, .. }
            | Event::Fail { t, .. }
            | Event::Rotate { t, .. }
            | Event::SpectrumSent { t, .. }
            | Event::SpectrumReceived { t, .. } => *t,
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Phase { t, name } => write!(f, "{t} phase {name}"),
            Event::Post { t, thread, handler, source } => {
                write!(f, "{t} post thread={thread} handler={handler} via={source}")
            }
            Event::Start { t, thread, handler } => write!(f, "{t} start thread={thread} handler={handler}"),
            Event::Exec { from, to, thread, handler } => {
                write!(f, "{from} exec thread={thread} handler={handler} until={to}")
            }
            Event::Preempt { t, thread, handler } => {
                write!(f, "{t} preempt thread={thread} handler={handler}")
            }
            Event::Resume { t, thread, handler } => write!(f, "{t} resume thread={thread} handler={handler}"),
            Event::End { t, thread, handler, cost } => {
                write!(f, "{t} end thread={thread} handler={handler} cost={cost}")
            }
            Event::Fail { t, thread, handler, epoch, error } => {
                write!(f, "{t} fail thread={thread} handler={handler} epoch=")?;
                match epoch {
                    Some(e) => write!(f, "{e}")?,
                    None => f.write_str("-")?,
                }
                write!(f, " error={error}")
            }
            Event::Rotate { t, epoch, outcome } => {
                let outcome = match outcome {
                    RotateOutcome::Rotated => "rotated",
                    RotateOutcome::Extended => "extended",
                };
                write!(f, "{t} rotate epoch={epoch} outcome={outcome}")
            }
            Event::SpectrumSent { t, epoch } => write!(f, "{t} spectrum-sent epoch={epoch}"),
            Event::SpectrumReceived { t, epoch } => write!(f, "{t} spectrum-received epoch={epoch}"),
        }
    }
}

/// The event log as text, one event per line.
pub fn events_to_string(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_string());
        out.push('\n');
    }
    out
}
