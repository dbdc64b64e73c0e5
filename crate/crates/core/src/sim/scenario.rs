// SPDX-License-Identifier: Apache-2.0

//! Scenario files.
//!
//! ```text
//! # comment
//! seed=0
//! scope=dispatch
//! capacity=8
//! bytes_per_second=960
//! fault=lingering-repost txt_page_poll 250 tv2
//! thread 0 1
//! handler osd_update 0
//! phase tv1 60000
//! at 1000 post 0 osd_update
//! ```
//!
//! `key=value` header lines come first. `thread <id> <priority>` and
//! `handler <name> <thread>` declare the dispatch structure; handlers are
//! numbered in declaration order. Phases are contiguous and start at 0.

use std::collections::HashSet;
use std::fmt::Write;

use thiserror::Error;

use crate::instrument::Scope;
use crate::transport::DEFAULT_BYTES_PER_SECOND;
use crate::vm::Millis;

pub const DEFAULT_CAPACITY: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("scenario line {line}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

impl ScenarioError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line, message: message.into() }
    }
}

pub type ThreadId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadDecl {
    pub id: ThreadId,
    /// Higher runs first.
    pub priority: i32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandlerDecl {
    pub name: String,
    pub thread: ThreadId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phase {
    pub name: String,
    pub duration: Millis,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stimulus {
    pub time: Millis,
    pub thread: ThreadId,
    pub handler: String,
    pub args: Vec<i64>,
}

/// A handler that keeps being re-posted every `repost_period` from the start
/// of `activation_phase` until the end of the run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultInjection {
    pub handler: String,
    pub repost_period: Millis,
    pub activation_phase: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub seed: u64,
    pub n_funcs: Option<usize>,
    pub scope: Scope,
    pub capacity: usize,
    pub bytes_per_second: u32,
    /// Upper bound of the seeded delay added to each stimulus.
    pub jitter_ms: Millis,
    pub fault: Option<FaultInjection>,
    pub threads: Vec<ThreadDecl>,
    pub handlers: Vec<HandlerDecl>,
    pub phases: Vec<Phase>,
    pub stimuli: Vec<Stimulus>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seed: 0,
            n_funcs: None,
            scope: Scope::DispatchEntry,
            capacity: DEFAULT_CAPACITY,
            bytes_per_second: DEFAULT_BYTES_PER_SECOND,
            jitter_ms: 0,
            fault: None,
            threads: Vec::new(),
            handlers: Vec::new(),
            phases: Vec::new(),
            stimuli: Vec::new(),
        }
    }
}

fn num<T: std::str::FromStr>(line: usize, what: &str, text: &str) -> Result<T, ScenarioError> {
    text.parse().map_err(|_| ScenarioError::at(line, format!("bad {what} `{text}`")))
}

impl Scenario {
    pub fn total_duration(&self) -> Millis {
        self.phases.iter().map(|p| p.duration).sum()
    }

    pub fn phase_start(&self, name: &str) -> Option<Millis> {
        let mut t = 0;
        for p in &self.phases {
            if p.name == name {
                return Some(t);
            }
            t += p.duration;
        }
        None
    }

    /// `(name, start, end)` per phase.
    pub fn phase_spans(&self) -> Vec<(String, Millis, Millis)> {
        let mut t = 0;
        self.phases
            .iter()
            .map(|p| {
                let span = (p.name.clone(), t, t + p.duration);
                t += p.duration;
                span
            })
            .collect()
    }

    pub fn handler_names(&self) -> Vec<String> {
        self.handlers.iter().map(|h| h.name.clone()).collect()
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut sc = Scenario::default();
        let mut in_header = true;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some((key, value)) = content.split_once('=') {
                if !in_header {
                    return Err(ScenarioError::at(line, "header lines must precede the body"));
                }
                let value = value.trim();
                match key.trim() {
                    "seed" => sc.seed = num(line, "seed", value)?,
                    "n_funcs" => sc.n_funcs = Some(num(line, "n_funcs", value)?),
                    "scope" => sc.scope = value.parse().map_err(|e| ScenarioError::at(line, e))?,
                    "capacity" => sc.capacity = num(line, "capacity", value)?,
                    "bytes_per_second" => sc.bytes_per_second = num(line, "bytes_per_second", value)?,
                    "jitter_ms" => sc.jitter_ms = num(line, "jitter_ms", value)?,
                    "fault" => sc.fault = parse_fault(line, value)?,
                    other => return Err(ScenarioError::at(line, format!("unknown header key `{other}`"))),
                }
                continue;
            }
            in_header = false;
            let words: Vec<&str> = content.split_whitespace().collect();
            match words.as_slice() {
                ["thread", id, priority] => sc
                    .threads
                    .push(ThreadDecl { id: num(line, "thread id", id)?, priority: num(line, "priority", priority)? }),
                ["handler", name, thread] => {
                    sc.handlers.push(HandlerDecl { name: name.to_string(), thread: num(line, "thread id", thread)? })
                }
                ["phase", name, duration] => {
                    sc.phases.push(Phase { name: name.to_string(), duration: num(line, "duration", duration)? })
                }
                ["at", time, "post", thread, handler, args @ ..] => sc.stimuli.push(Stimulus {
                    time: num(line, "time", time)?,
                    thread: num(line, "thread id", thread)?,
                    handler: handler.to_string(),
                    args: args.iter().map(|a| num(line, "argument", a)).collect::<Result<_, _>>()?,
                }),
                _ => return Err(ScenarioError::at(line, format!("unrecognized line `{content}`"))),
            }
        }
        sc.validate()?;
        Ok(sc)
    }

    /// Structural checks that do not need the program.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let err = |m: String| Err(ScenarioError::at(0, m));
        if self.capacity == 0 {
            return err("capacity must be at least 1".into());
        }
        if self.bytes_per_second == 0 {
            return err("bytes_per_second must be positive".into());
        }
        let mut ids = HashSet::new();
        let mut priorities = HashSet::new();
        for t in &self.threads {
            if !ids.insert(t.id) {
                return err(format!("thread {} declared twice", t.id));
            }
            if !priorities.insert(t.priority) {
                return err(format!("priority {} used by two threads", t.priority));
            }
        }
        let mut names = HashSet::new();
        for h in &self.handlers {
            if !names.insert(h.name.as_str()) {
                return err(format!("handler `{}` declared twice", h.name));
            }
            if !ids.contains(&h.thread) {
                return err(format!("handler `{}` names unknown thread {}", h.name, h.thread));
            }
        }
        let mut phase_names = HashSet::new();
        for p in &self.phases {
            if p.duration == 0 || !phase_names.insert(p.name.as_str()) {
                return err(format!("phase `{}` is empty or duplicated", p.name));
            }
        }
        let total = self.total_duration();
        let mut last = 0;
        for s in &self.stimuli {
            if s.time >= total {
                return err(format!("stimulus at {} ms is past the scenario end {total} ms", s.time));
            }
            if s.time < last {
                return err(format!("stimulus at {} ms is out of time order", s.time));
            }
            last = s.time;
            match self.handlers.iter().find(|h| h.name == s.handler) {
                None => return err(format!("stimulus posts unknown handler `{}`", s.handler)),
                Some(h) if h.thread != s.thread => {
                    return err(format!("handler `{}` runs on thread {}, not {}", s.handler, h.thread, s.thread))
                }
                Some(_) => {}
            }
        }
        if let Some(f) = &self.fault {
            if !names.contains(f.handler.as_str()) {
                return err(format!("fault names unknown handler `{}`", f.handler));
            }
            if !phase_names.contains(f.activation_phase.as_str()) {
                return err(format!("fault names unknown phase `{}`", f.activation_phase));
            }
            if f.repost_period == 0 {
                return err("fault repost period must be positive".into());
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "seed={}", self.seed);
        if let Some(n) = self.n_funcs {
            let _ = writeln!(out, "n_funcs={n}");
        }
        let _ = writeln!(out, "scope={}", self.scope);
        let _ = writeln!(out, "capacity={}", self.capacity);
        let _ = writeln!(out, "bytes_per_second={}", self.bytes_per_second);
        if self.jitter_ms > 0 {
            let _ = writeln!(out, "jitter_ms={}", self.jitter_ms);
        }
        if let Some(f) = &self.fault {
            let _ = writeln!(out, "fault=lingering-repost {} {} {}", f.handler, f.repost_period, f.activation_phase);
        }
        for t in &self.threads {
            let _ = writeln!(out, "thread {} {}", t.id, t.priority);
        }
        for h in &self.handlers {
            let _ = writeln!(out, "handler {} {}", h.name, h.thread);
        }
        for p in &self.phases {
            let _ = writeln!(out, "phase {} {}", p.name, p.duration);
        }
        for s in &self.stimuli {
            let _ = write!(out, "at {} post {} {}", s.time, s.thread, s.handler);
            for a in &s.args {
                let _ = write!(out, " {a}");
            }
            out.push('\n');
        }
        out
    }
}

fn parse_fault(line: usize, value: &str) -> Result<Option<FaultInjection>, ScenarioError> {
    let words: Vec<&str> = value.split_whitespace().collect();
    match words.as_slice() {
        ["none"] => Ok(None),
        ["lingering-repost", handler, period, phase] => Ok(Some(FaultInjection {
            handler: handler.to_string(),
            repost_period: num(line, "repost period", period)?,
            activation_phase: phase.to_string(),
        })),
        _ => Err(ScenarioError::at(
            line,
            "expected `fault=none` or `fault=lingering-repost <handler> <period_ms> <phase>`",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# demo
seed=3
scope=dispatch
capacity=4
bytes_per_second=480
fault=lingering-repost poll 250 b
thread 0 1
thread 1 5
handler poll 0
handler key 1
phase a 1000
phase b 2000
at 0 post 1 key 7
at 1500 post 0 poll
";

    #[test]
    fn parses_and_round_trips() {
        let sc = Scenario::parse(SAMPLE).unwrap();
        assert_eq!(sc.seed, 3);
        assert_eq!(sc.capacity, 4);
        assert_eq!(sc.total_duration(), 3000);
        assert_eq!(sc.phase_start("b"), Some(1000));
        assert_eq!(sc.stimuli[0].args, vec![7]);
        assert_eq!(sc.fault.as_ref().unwrap().repost_period, 250);
        assert_eq!(Scenario::parse(&sc.to_text()).unwrap(), sc);
    }

    #[test]
    fn rejects_bad_scenarios() {
        let cases = [
            SAMPLE.replace("at 1500 post 0 poll", "at 1500 post 0 nobody"),
            SAMPLE.replace("at 1500 post 0 poll", "at 1500 post 1 poll"),
            SAMPLE.replace("at 1500", "at 3000"),
            SAMPLE.replace("thread 1 5", "thread 1 1"),
            SAMPLE.replace("250 b", "250 zz"),
            SAMPLE.replace("phase a 1000", "phase a 1000\nseed=1"),
            SAMPLE.replace("handler key 1", "handler key 9"),
            SAMPLE.replace("at 0 post", "whenever post"),
            SAMPLE.replace("capacity=4", "capacity=0"),
        ];
        for text in cases {
            assert!(Scenario::parse(&text).is_err(), "{text}");
        }
    }
}
