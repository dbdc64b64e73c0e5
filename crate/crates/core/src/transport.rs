// SPDX-License-Identifier: Apache-2.0

//! Serial extraction of spectra.
//!
//! Wire format, one counter per frame, 7 bytes, big-endian:
//!
//! ```text
//! +------+----------+----------+---------+---------+-------+----------+
//! | 0xA5 | epoch_hi | epoch_lo | index_hi| index_lo| count | checksum |
//! +------+----------+----------+---------+---------+-------+----------+
//! ```
//!
//! `checksum` is the XOR of the six bytes before it. Index `0xFFFF` marks the
//! END frame of a spectrum; its count is 0. The channel is a reliable,
//! in-order byte pipe with a fixed line rate and a bounded transmit buffer.

use std::collections::VecDeque;

use thiserror::Error;

use crate::spectrum::{EpochSeq, SpectraLog, Spectrum, SATURATION};
use crate::vm::Millis;

pub const MAGIC: u8 = 0xA5;
pub const FRAME_LEN: usize = 7;
pub const DEFAULT_BYTES_PER_SECOND: u32 = 960;
pub const DEFAULT_TX_BUFFER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("frame field out of range")]
    FieldRange,
    #[error("frame must be {FRAME_LEN} bytes, got {0}")]
    BadLength(usize),
    #[error("bad magic byte {0:#04x}")]
    BadMagic(u8),
    #[error("checksum mismatch: expected {expected:#04x}, found {found:#04x}")]
    ChecksumMismatch { expected: u8, found: u8 },
    #[error("count {0} out of range")]
    CountRange(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frame {
    pub epoch_seq: u16,
    pub counter_index: u16,
    pub count: u8,
}

impl Frame {
    pub const END_INDEX: u16 = 0xFFFF;

    pub fn counter(epoch_seq: u16, counter_index: u16, count: u8) -> Result<Self, CodecError> {
        if counter_index == Self::END_INDEX {
            return Err(CodecError::FieldRange);
        }
        if count > SATURATION {
            return Err(CodecError::CountRange(count));
        }
        Ok(Self { epoch_seq, counter_index, count })
    }

    pub fn end(epoch_seq: u16) -> Self {
        Self { epoch_seq, counter_index: Self::END_INDEX, count: 0 }
    }

    pub fn is_end(&self) -> bool {
        self.counter_index == Self::END_INDEX
    }
}

fn xor(bytes: &[u8]) -> u8 {
    bytes.iter().fold(0, |acc, b| acc ^ b)
}

pub fn encode_frame(f: &Frame) -> Result<[u8; FRAME_LEN], CodecError> {
    let count_ok = if f.is_end() { f.count == 0 } else { f.count <= SATURATION };
    if !count_ok {
        return Err(CodecError::FieldRange);
    }
    let [e_hi, e_lo] = f.epoch_seq.to_be_bytes();
    let [i_hi, i_lo] = f.counter_index.to_be_bytes();
    let mut out = [MAGIC, e_hi, e_lo, i_hi, i_lo, f.count, 0];
    out[6] = xor(&out[..6]);
    Ok(out)
}

pub fn decode_frame(bytes: &[u8]) -> Result<Frame, CodecError> {
    if bytes.len() != FRAME_LEN {
        return Err(CodecError::BadLength(bytes.len()));
    }
    if bytes[0] != MAGIC {
        return Err(CodecError::BadMagic(bytes[0]));
    }
    let expected = xor(&bytes[..6]);
    if expected != bytes[6] {
        return Err(CodecError::ChecksumMismatch { expected, found: bytes[6] });
    }
    let frame = Frame {
        epoch_seq: u16::from_be_bytes([bytes[1], bytes[2]]),
        counter_index: u16::from_be_bytes([bytes[3], bytes[4]]),
        count: bytes[5],
    };
    let count_ok = if frame.is_end() { frame.count == 0 } else { frame.count <= SATURATION };
    if !count_ok {
        return Err(CodecError::CountRange(frame.count));
    }
    Ok(frame)
}

/// Back-pressure from a transmitter; the frame was not taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("transmitter busy")]
pub struct TxBusy;

pub trait FrameSink {
    fn transmit(&mut self, frame: &Frame) -> Result<(), TxBusy>;
}

/// Simulated serial line. Internally timed in microseconds.
#[derive(Debug, Clone)]
pub struct Channel {
    bytes_per_second: u32,
    tx_buffer: usize,
    byte_us: u64,
    in_flight: VecDeque<(u8, u64)>,
    line_free_us: u64,
}

impl Channel {
    pub fn new(bytes_per_second: u32) -> Self {
        Self::with_buffer(bytes_per_second, DEFAULT_TX_BUFFER)
    }

    pub fn with_buffer(bytes_per_second: u32, tx_buffer: usize) -> Self {
        let bps = u64::from(bytes_per_second.max(1));
        Self {
            bytes_per_second: bytes_per_second.max(1),
            tx_buffer,
            byte_us: 1_000_000u64.div_ceil(bps),
            in_flight: VecDeque::new(),
            line_free_us: 0,
        }
    }

    pub fn bytes_per_second(&self) -> u32 {
        self.bytes_per_second
    }

    /// Bytes not yet fully on the wire at `now`.
    pub fn pending(&self, now: Millis) -> usize {
        let now_us = now * 1000;
        self.in_flight.iter().rev().take_while(|(_, ready)| *ready > now_us).count()
    }

    /// True once every sent byte has been polled.
    pub fn is_empty(&self) -> bool {
        self.in_flight.is_empty()
    }

    /// Enqueues `bytes` at `now`, all or nothing.
    pub fn send(&mut self, bytes: &[u8], now: Millis) -> Result<(), TxBusy> {
        if self.pending(now) + bytes.len() > self.tx_buffer {
            return Err(TxBusy);
        }
        let now_us = now * 1000;
        for &b in bytes {
            let ready = self.line_free_us.max(now_us) + self.byte_us;
            self.line_free_us = ready;
            self.in_flight.push_back((b, ready));
        }
        Ok(())
    }

    /// Removes and returns the bytes readable at `now`, in order.
    pub fn poll(&mut self, now: Millis) -> Vec<u8> {
        let now_us = now * 1000;
        let n = self.in_flight.iter().take_while(|(_, ready)| *ready <= now_us).count();
        self.in_flight.drain(..n).map(|(b, _)| b).collect()
    }

    /// Readiness time in microseconds of the last byte sent.
    pub fn last_ready_us(&self) -> Option<u64> {
        self.in_flight.back().map(|&(_, ready)| ready)
    }

    /// Earliest whole millisecond at or after `now` at which `n` more bytes
    /// fit. `None` if they never can.
    pub fn time_with_space(&self, n: usize, now: Millis) -> Option<Millis> {
        if n > self.tx_buffer {
            return None;
        }
        let pending = self.pending(now);
        if pending + n <= self.tx_buffer {
            return Some(now);
        }
        let must_leave = pending + n - self.tx_buffer;
        let first_pending = self.in_flight.len() - pending;
        let (_, ready) = self.in_flight[first_pending + must_leave - 1];
        Some(ready.div_ceil(1000).max(now))
    }

    /// Earliest whole millisecond at which every sent byte is readable.
    pub fn drained_at(&self) -> Option<Millis> {
        self.last_ready_us().map(|us| us.div_ceil(1000))
    }
}

/// Transmits frames on a channel at a fixed instant.
pub struct ChannelTx<'a> {
    pub channel: &'a mut Channel,
    pub now: Millis,
}

impl FrameSink for ChannelTx<'_> {
    fn transmit(&mut self, frame: &Frame) -> Result<(), TxBusy> {
        let bytes = encode_frame(frame).map_err(|_| TxBusy)?;
        self.channel.send(&bytes, self.now)
    }
}

/// Splits a byte stream into frames, resynchronizing on corrupt input.
#[derive(Debug, Clone, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) -> Vec<Result<Frame, CodecError>> {
        self.buf.extend_from_slice(bytes);
        let mut out = Vec::new();
        let mut at = 0;
        while self.buf.len() - at >= FRAME_LEN {
            match decode_frame(&self.buf[at..at + FRAME_LEN]) {
                Ok(frame) => {
                    out.push(Ok(frame));
                    at += FRAME_LEN;
                }
                Err(e) => {
                    out.push(Err(e));
                    at += 1;
                    while at < self.buf.len() && self.buf[at] != MAGIC {
                        at += 1;
                    }
                }
            }
        }
        self.buf.drain(..at);
        out
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReassemblyError {
    #[error("epoch {epoch} ended with counters {missing:?} missing")]
    IncompleteSpectrum { epoch: EpochSeq, missing: Vec<u16> },
    #[error("epoch {epoch} arrived after epoch {last}")]
    EpochRegression { epoch: EpochSeq, last: EpochSeq },
    #[error("counter index {index} out of range for {n_funcs} counters")]
    IndexOutOfRange { index: u16, n_funcs: usize },
}

/// Receiver side: rebuilds spectra from frames and appends them to a log.
#[derive(Debug, Clone)]
pub struct Reassembler {
    n_funcs: usize,
    epoch_period: Millis,
    pending: Option<(EpochSeq, Vec<Option<u8>>)>,
    last_completed: Option<EpochSeq>,
    log: SpectraLog,
}

impl Reassembler {
    /// `epoch_period` converts an epoch number to its start time.
    pub fn new(n_funcs: usize, epoch_period: Millis) -> Self {
        Self { n_funcs, epoch_period, pending: None, last_completed: None, log: SpectraLog::new() }
    }

    pub fn log(&self) -> &SpectraLog {
        &self.log
    }

    pub fn into_log(self) -> SpectraLog {
        self.log
    }

    pub fn feed(&mut self, frame: Frame) -> Result<Option<Spectrum>, ReassemblyError> {
        let epoch = EpochSeq::from(frame.epoch_seq);
        if let Some(last) = self.last_completed {
            if epoch <= last {
                return Err(ReassemblyError::EpochRegression { epoch, last });
            }
        }
        let mut abandoned = None;
        match &self.pending {
            Some((e, _)) if *e == epoch => {}
            _ => {
                if let Some((old, counts)) = self.pending.replace((epoch, vec![None; self.n_funcs])) {
                    abandoned = Some(ReassemblyError::IncompleteSpectrum { epoch: old, missing: missing(&counts) });
                }
            }
        }
        let (_, counts) = self.pending.as_mut().expect("pending set above");
        if !frame.is_end() {
            let slot = counts
                .get_mut(usize::from(frame.counter_index))
                .ok_or(ReassemblyError::IndexOutOfRange { index: frame.counter_index, n_funcs: self.n_funcs })?;
            *slot = Some(frame.count);
            return abandoned.map_or(Ok(None), Err);
        }
        let (_, counts) = self.pending.take().expect("pending set above");
        let gaps = missing(&counts);
        if !gaps.is_empty() {
            return Err(ReassemblyError::IncompleteSpectrum { epoch, missing: gaps });
        }
        let counters = counts.into_iter().map(|c| c.unwrap_or(0)).collect();
        let spectrum = Spectrum::from_counts(epoch, Millis::from(epoch) * self.epoch_period, counters)
            .expect("frames carry in-range counts");
        self.log.push(spectrum.clone()).expect("epochs ascend");
        self.last_completed = Some(epoch);
        Ok(Some(spectrum))
    }
}

fn missing(counts: &[Option<u8>]) -> Vec<u16> {
    counts.iter().enumerate().filter(|(_, c)| c.is_none()).map(|(i, _)| i as u16).collect()
}
