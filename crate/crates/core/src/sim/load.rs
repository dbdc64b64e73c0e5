// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;

use thiserror::Error;

use crate::vm::Millis;

use super::event::Event;

pub const SECOND_MS: Millis = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadSample {
    pub second: u32,
    pub busy_ms: Millis,
}

impl LoadSample {
    pub fn load(&self) -> f64 {
        self.busy_ms as f64 / SECOND_MS as f64
    }
}

/// Busy milliseconds per one-second window, from `Exec` events.
///
/// The series covers `ceil(duration / 1000)` seconds; execution past
/// `duration` is counted in the last window it touches.
pub fn cpu_load_series(events: &[Event], duration: Millis) -> Vec<LoadSample> {
    let mut last_end = duration;
    for e in events {
        if let Event::Exec { to, .. } = e {
            last_end = last_end.max(*to);
        }
    }
    let n = last_end.div_ceil(SECOND_MS) as usize;
    let mut busy = vec![0; n];
    for e in events {
        if let Event::Exec { from, to, .. } = e {
            let mut t = *from;
            while t < *to {
                let second = t / SECOND_MS;
                let edge = ((second + 1) * SECOND_MS).min(*to);
                busy[second as usize] += edge - t;
                t = edge;
            }
        }
    }
    busy.into_iter().enumerate().map(|(i, busy_ms)| LoadSample { second: i as u32, busy_ms }).collect()
}

pub fn load_to_csv(samples: &[LoadSample]) -> String {
    let mut out = String::from("second,load\n");
    for s in samples {
        let _ = writeln!(out, "{},{:.3}", s.second, s.load());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("load csv line {line}: {message}")]
pub struct CsvError {
    pub line: usize,
    pub message: String,
}

/// Parses `second,load` rows. The header line is optional.
pub fn parse_load_csv(text: &str) -> Result<Vec<(u32, f64)>, CsvError> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || (i == 0 && line == "second,load") {
            continue;
        }
        let err = |message: &str| CsvError { line: i + 1, message: message.to_string() };
        let (s, l) = line.split_once(',').ok_or_else(|| err("expected `second,load`"))?;
        let second = s.trim().parse().map_err(|_| err("bad second"))?;
        let load: f64 = l.trim().parse().map_err(|_| err("bad load"))?;
        if !load.is_finite() {
            return Err(err("bad load"));
        }
        rows.push((second, load));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exec(from: Millis, to: Millis) -> Event {
        Event::Exec { from, to, thread: 0, handler: "h".into() }
    }

    #[test]
    fn single_handler_lands_in_its_second() {
        let s = cpu_load_series(&[exec(100, 600)], 3000);
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].busy_ms, 500);
        assert_eq!(s[1].busy_ms, 0);
    }

    #[test]
    fn segments_split_at_second_edges() {
        let s = cpu_load_series(&[exec(900, 1300), exec(1999, 2001)], 3000);
        assert_eq!(s.iter().map(|x| x.busy_ms).collect::<Vec<_>>(), vec![100, 301, 1]);
    }

    #[test]
    fn empty_run_is_all_zero() {
        assert!(cpu_load_series(&[], 2000).iter().all(|s| s.busy_ms == 0));
    }

    #[test]
    fn csv_round_trip() {
        let samples = vec![LoadSample { second: 0, busy_ms: 213 }, LoadSample { second: 1, busy_ms: 1000 }];
        let text = load_to_csv(&samples);
        assert_eq!(text, "second,load\n0,0.213\n1,1.000\n");
        assert_eq!(parse_load_csv(&text).unwrap(), vec![(0, 0.213), (1, 1.0)]);
        assert!(parse_load_csv("second,load\n0;1\n").is_err());
    }
}
