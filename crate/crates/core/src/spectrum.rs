// SPDX-License-Identifier: Apache-2.0

//! Bounded-memory count spectra.
//!
//! A [`SpectrumPool`] owns a fixed number of counter buffers. One buffer is
//! current and receives probe hits; every timer tick moves it to the send
//! queue and takes a zeroed buffer from the free queue. When the free queue
//! is empty the current epoch is extended instead. An idle-time drain sends
//! the head of the send queue one counter per step and recycles the buffer
//! once its END frame is out.

use std::collections::VecDeque;
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use thiserror::Error;

use crate::instrument::ProbeId;
use crate::transport::{CodecError, Frame, FrameSink};
use crate::vm::Millis;

/// Counters stop at this value. It is also the largest count a frame carries.
pub const SATURATION: u8 = 127;

pub type EpochSeq = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum Label {
    Pass,
    Fail,
    #[default]
    Unlabeled,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Pass => "pass",
            Label::Fail => "fail",
            Label::Unlabeled => "unlabeled",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pass" => Ok(Label::Pass),
            "fail" => Ok(Label::Fail),
            "unlabeled" => Ok(Label::Unlabeled),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpectrumError {
    #[error("probe id {id} out of range for {n_funcs} counters")]
    IdOutOfRange { id: ProbeId, n_funcs: usize },
    #[error("no spectrum for epoch {0}")]
    UnknownEpoch(EpochSeq),
    #[error("transmitter busy")]
    TransmitterBusy,
    #[error("pool needs at least one buffer")]
    ZeroCapacity,
    #[error("{0} counters cannot be framed")]
    TooManyCounters(usize),
    #[error("count {0} exceeds {SATURATION}")]
    CountRange(u8),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// One epoch's saturating function-call counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spectrum {
    pub epoch_seq: EpochSeq,
    pub start_time: Millis,
    pub label: Label,
    counters: Vec<u8>,
}

impl Spectrum {
    pub fn zeroed(epoch_seq: EpochSeq, start_time: Millis, n_funcs: usize) -> Self {
        Self { epoch_seq, start_time, label: Label::Unlabeled, counters: vec![0; n_funcs] }
    }

    pub fn from_counts(epoch_seq: EpochSeq, start_time: Millis, counters: Vec<u8>) -> Result<Self, SpectrumError> {
        if let Some(&c) = counters.iter().find(|&&c| c > SATURATION) {
            return Err(SpectrumError::CountRange(c));
        }
        Ok(Self { epoch_seq, start_time, label: Label::Unlabeled, counters })
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = label;
        self
    }

    pub fn counters(&self) -> &[u8] {
        &self.counters
    }

    pub fn n_funcs(&self) -> usize {
        self.counters.len()
    }

    /// Saturating increment.
    pub fn record(&mut self, id: ProbeId) -> Result<(), SpectrumError> {
        let n_funcs = self.counters.len();
        let c = self.counters.get_mut(id as usize).ok_or(SpectrumError::IdOutOfRange { id, n_funcs })?;
        if *c < SATURATION {
            *c += 1;
        }
        Ok(())
    }

    /// Ids whose counter is nonzero.
    pub fn hit_ids(&self) -> impl Iterator<Item = ProbeId> + '_ {
        self.counters.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, _)| i as ProbeId)
    }

    fn reset(&mut self, epoch_seq: EpochSeq, start_time: Millis) {
        self.epoch_seq = epoch_seq;
        self.start_time = start_time;
        self.label = Label::Unlabeled;
        self.counters.fill(0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotateOutcome {
    Rotated,
    /// No free buffer: the current epoch keeps accumulating.
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrainOutcome {
    SentCounter,
    SentEnd,
    Idle,
}

#[derive(Debug, Clone)]
pub struct SpectrumPool {
    n_funcs: usize,
    capacity: usize,
    free: VecDeque<Spectrum>,
    send: VecDeque<Spectrum>,
    current: Option<Spectrum>,
    ticks: EpochSeq,
    cursor: usize,
    rotations: u64,
    dropped_rotations: u64,
    dropped_probes: u64,
}

impl SpectrumPool {
    /// Allocates `capacity` buffers and starts epoch 0 at `start_time`.
    pub fn new(n_funcs: usize, capacity: usize, start_time: Millis) -> Result<Self, SpectrumError> {
        if capacity == 0 {
            return Err(SpectrumError::ZeroCapacity);
        }
        if n_funcs >= usize::from(Frame::END_INDEX) {
            return Err(SpectrumError::TooManyCounters(n_funcs));
        }
        let mut free: VecDeque<Spectrum> = VecDeque::with_capacity(capacity);
        free.extend((0..capacity).map(|_| Spectrum::zeroed(0, 0, n_funcs)));
        let mut current = free.pop_front();
        if let Some(c) = current.as_mut() {
            c.reset(0, start_time);
        }
        Ok(Self {
            n_funcs,
            capacity,
            free,
            send: VecDeque::with_capacity(capacity),
            current,
            ticks: 0,
            cursor: 0,
            rotations: 0,
            dropped_rotations: 0,
            dropped_probes: 0,
        })
    }

    pub fn n_funcs(&self) -> usize {
        self.n_funcs
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn current(&self) -> Option<&Spectrum> {
        self.current.as_ref()
    }

    pub fn send_queue(&self) -> &VecDeque<Spectrum> {
        &self.send
    }

    pub fn free_len(&self) -> usize {
        self.free.len()
    }

    /// Buffers held by the free queue, the send queue and the current slot.
    pub fn buffers_in_use(&self) -> usize {
        self.free.len() + self.send.len() + usize::from(self.current.is_some())
    }

    pub fn rotations(&self) -> u64 {
        self.rotations
    }

    pub fn dropped_rotations(&self) -> u64 {
        self.dropped_rotations
    }

    pub fn dropped_probes(&self) -> u64 {
        self.dropped_probes
    }

    /// Counts one hit for `id` in the current epoch.
    pub fn probe_record(&mut self, id: ProbeId) -> Result<(), SpectrumError> {
        if id as usize >= self.n_funcs {
            return Err(SpectrumError::IdOutOfRange { id, n_funcs: self.n_funcs });
        }
        match self.current.as_mut() {
            Some(c) => c.record(id),
            None => {
                self.dropped_probes += 1;
                Ok(())
            }
        }
    }

    /// Timer tick. The new epoch's sequence number is the tick count, so an
    /// extended epoch leaves a gap in the numbering.
    pub fn rotate_epoch(&mut self, now: Millis) -> RotateOutcome {
        self.ticks += 1;
        let Some(mut fresh) = self.free.pop_front() else {
            self.dropped_rotations += 1;
            return RotateOutcome::Extended;
        };
        fresh.reset(self.ticks, now);
        if let Some(done) = self.current.replace(fresh) {
            self.send.push_back(done);
        }
        self.rotations += 1;
        RotateOutcome::Rotated
    }

    /// Queues the current epoch for sending and stops recording.
    pub fn close(&mut self) {
        if let Some(done) = self.current.take() {
            self.send.push_back(done);
        }
    }

    /// Sends one frame of the oldest queued spectrum.
    pub fn drain_step(&mut self, tx: &mut dyn FrameSink) -> Result<DrainOutcome, SpectrumError> {
        let Some(head) = self.send.front() else {
            return Ok(DrainOutcome::Idle);
        };
        let epoch = u16::try_from(head.epoch_seq).map_err(|_| CodecError::FieldRange)?;
        let frame = match head.counters.get(self.cursor) {
            Some(&count) => Frame::counter(epoch, self.cursor as u16, count)?,
            None => Frame::end(epoch),
        };
        tx.transmit(&frame).map_err(|_| SpectrumError::TransmitterBusy)?;
        if self.cursor < self.n_funcs {
            self.cursor += 1;
            return Ok(DrainOutcome::SentCounter);
        }
        self.cursor = 0;
        let mut done = self.send.pop_front().expect("head exists");
        done.reset(0, 0);
        self.free.push_back(done);
        Ok(DrainOutcome::SentEnd)
    }

    /// Labels a spectrum still held by the pool. Last write wins.
    pub fn label_epoch(&mut self, epoch_seq: EpochSeq, label: Label) -> Result<(), SpectrumError> {
        let target = self
            .current
            .iter_mut()
            .chain(self.send.iter_mut())
            .find(|s| s.epoch_seq == epoch_seq)
            .ok_or(SpectrumError::UnknownEpoch(epoch_seq))?;
        target.label = label;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("spectra log line {line}: {message}")]
pub struct LogError {
    pub line: usize,
    pub message: String,
}

/// Receiver-side record of completed spectra, ascending by epoch.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpectraLog {
    spectra: Vec<Spectrum>,
}

impl SpectraLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn spectra(&self) -> &[Spectrum] {
        &self.spectra
    }

    pub fn len(&self) -> usize {
        self.spectra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectra.is_empty()
    }

    pub fn get(&self, epoch_seq: EpochSeq) -> Option<&Spectrum> {
        self.spectra.binary_search_by_key(&epoch_seq, |s| s.epoch_seq).ok().map(|i| &self.spectra[i])
    }

    /// Appends a spectrum; epochs must be strictly ascending.
    pub fn push(&mut self, spectrum: Spectrum) -> Result<(), String> {
        if let Some(last) = self.spectra.last() {
            if spectrum.epoch_seq <= last.epoch_seq {
                return Err(format!("epoch {} does not follow epoch {}", spectrum.epoch_seq, last.epoch_seq));
            }
        }
        self.spectra.push(spectrum);
        Ok(())
    }

    pub fn label_epoch(&mut self, epoch_seq: EpochSeq, label: Label) -> Result<(), SpectrumError> {
        let i = self
            .spectra
            .binary_search_by_key(&epoch_seq, |s| s.epoch_seq)
            .map_err(|_| SpectrumError::UnknownEpoch(epoch_seq))?;
        self.spectra[i].label = label;
        Ok(())
    }

    /// Labels every logged epoch in `range`; returns how many were labeled.
    pub fn label_range(&mut self, range: RangeInclusive<EpochSeq>, label: Label) -> usize {
        let mut n = 0;
        for s in self.spectra.iter_mut().filter(|s| range.contains(&s.epoch_seq)) {
            s.label = label;
            n += 1;
        }
        n
    }

    pub fn to_log_string(&self) -> String {
        let mut out = String::new();
        for s in &self.spectra {
            let counts: Vec<String> = s.counters.iter().map(u8::to_string).collect();
            out.push_str(&format!(
                "epoch={} t={} label={} counts={}\n",
                s.epoch_seq,
                s.start_time,
                s.label,
                counts.join(",")
            ));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, LogError> {
        let mut log = SpectraLog::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| LogError { line: i + 1, message };
            let fields: Vec<&str> = line.split(' ').collect();
            let [epoch, t, label, counts] = fields[..] else {
                return Err(err("expected `epoch= t= label= counts=`".into()));
            };
            let value = |field: &'static str, text: &str| -> Result<String, LogError> {
                text.strip_prefix(field)
                    .and_then(|rest| rest.strip_prefix('='))
                    .map(str::to_string)
                    .ok_or_else(|| err(format!("expected `{field}=`")))
            };
            let epoch: EpochSeq = value("epoch", epoch)?.parse().map_err(|_| err("bad epoch".into()))?;
            let t: Millis = value("t", t)?.parse().map_err(|_| err("bad start time".into()))?;
            let label: Label = value("label", label)?.parse().map_err(err)?;
            let counts = value("counts", counts)?;
            let counters = if counts.is_empty() {
                Vec::new()
            } else {
                counts
                    .split(',')
                    .map(|c| c.parse::<u8>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| err("bad counter".into()))?
            };
            let spectrum = Spectrum::from_counts(epoch, t, counters).map_err(|e| err(e.to_string()))?.with_label(label);
            if let Some(first) = log.spectra.first() {
                if first.n_funcs() != spectrum.n_funcs() {
                    return Err(err("counter count differs from earlier lines".into()));
                }
            }
            log.push(spectrum).map_err(err)?;
        }
        Ok(log)
    }
}
