// SPDX-License-Identifier: Apache-2.0

//! Set comparison of pass and fail spectra.
//!
//! A function is a fail-only suspect when it is active in at least one
//! failing spectrum and in none of the passing ones. Counts only matter
//! through their hit sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};
use std::ops::RangeInclusive;
use std::str::FromStr;

use thiserror::Error;

use crate::instrument::{Manifest, ProbeId};
use crate::spectrum::{EpochSeq, SpectraLog, Spectrum};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagnosisError {
    #[error("the {0} set is empty")]
    EmptySet(Role),
    #[error("spectra disagree on the number of counters ({0} vs {1})")]
    ShapeMismatch(usize, usize),
    #[error("truth names unknown function `{0}`")]
    UnknownId(String),
    #[error("bad epoch selector `{0}`")]
    BadSelector(String),
    #[error("load window {0} selects no samples")]
    EmptyWindow(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Pass,
    Fail,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Pass => "pass",
            Role::Fail => "fail",
        })
    }
}

pub fn hit_set(s: &Spectrum) -> BTreeSet<ProbeId> {
    s.hit_ids().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Suspect {
    pub id: ProbeId,
    /// Number of spectra in the suspect's own set where it is active.
    pub evidence: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagnosisReport {
    pub n_pass: usize,
    pub n_fail: usize,
    /// Sorted by evidence descending, then id.
    pub fail_only: Vec<Suspect>,
    pub pass_only: Vec<Suspect>,
}

impl DiagnosisReport {
    pub fn fail_only_ids(&self) -> BTreeSet<ProbeId> {
        self.fail_only.iter().map(|s| s.id).collect()
    }

    pub fn pass_only_ids(&self) -> BTreeSet<ProbeId> {
        self.pass_only.iter().map(|s| s.id).collect()
    }
}

/// Per-id number of spectra in which the id is active.
fn activity(set: &[Spectrum]) -> BTreeMap<ProbeId, usize> {
    let mut active = BTreeMap::new();
    for s in set {
        for id in s.hit_ids() {
            *active.entry(id).or_insert(0) += 1;
        }
    }
    active
}

fn only_in(a: &BTreeMap<ProbeId, usize>, b: &BTreeMap<ProbeId, usize>) -> Vec<Suspect> {
    let mut out: Vec<Suspect> =
        a.iter().filter(|(id, _)| !b.contains_key(id)).map(|(&id, &evidence)| Suspect { id, evidence }).collect();
    out.sort_by(|x, y| y.evidence.cmp(&x.evidence).then(x.id.cmp(&y.id)));
    out
}

pub fn suspects(pass: &[Spectrum], fail: &[Spectrum]) -> Result<DiagnosisReport, DiagnosisError> {
    let first_pass = pass.first().ok_or(DiagnosisError::EmptySet(Role::Pass))?;
    fail.first().ok_or(DiagnosisError::EmptySet(Role::Fail))?;
    let n = first_pass.n_funcs();
    if let Some(s) = pass.iter().chain(fail).find(|s| s.n_funcs() != n) {
        return Err(DiagnosisError::ShapeMismatch(n, s.n_funcs()));
    }
    let p = activity(pass);
    let f = activity(fail);
    Ok(DiagnosisReport {
        n_pass: pass.len(),
        n_fail: fail.len(),
        fail_only: only_in(&f, &p),
        pass_only: only_in(&p, &f),
    })
}

/// `|suspects ∩ truth| / |suspects|`, `None` when there are no suspects.
pub fn accuracy(report: &DiagnosisReport, truth: &BTreeSet<ProbeId>) -> Option<f64> {
    let s = report.fail_only_ids();
    if s.is_empty() {
        return None;
    }
    Some(s.intersection(truth).count() as f64 / s.len() as f64)
}

/// Truth file: one function name (or numeric id) per line.
pub fn parse_truth(text: &str, manifest: Option<&Manifest>) -> Result<BTreeSet<ProbeId>, DiagnosisError> {
    let mut out = BTreeSet::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let id = match manifest.and_then(|m| m.id_of(line)) {
            Some(id) => id,
            None => match (line.parse::<ProbeId>(), manifest) {
                (Ok(id), Some(m)) if (id as usize) < m.n_funcs() => id,
                (Ok(id), None) => id,
                _ => return Err(DiagnosisError::UnknownId(line.to_string())),
            },
        };
        out.insert(id);
    }
    Ok(out)
}

/// Epoch selection: `a..b` inclusive ranges and single epochs, comma separated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochSelector {
    parts: Vec<RangeInclusive<EpochSeq>>,
    text: String,
}

impl FromStr for EpochSelector {
    type Err = DiagnosisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DiagnosisError::BadSelector(s.to_string());
        let mut parts = Vec::new();
        for part in s.split(',').map(str::trim) {
            let range = match part.split_once("..") {
                Some((a, b)) => {
                    let a: EpochSeq = a.trim().parse().map_err(|_| bad())?;
                    let b: EpochSeq = b.trim().parse().map_err(|_| bad())?;
                    a..=b
                }
                None => {
                    let e: EpochSeq = part.parse().map_err(|_| bad())?;
                    e..=e
                }
            };
            parts.push(range);
        }
        Ok(Self { parts, text: s.trim().to_string() })
    }
}

impl fmt::Display for EpochSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl EpochSelector {
    pub fn range(range: RangeInclusive<EpochSeq>) -> Self {
        let text = format!("{}..{}", range.start(), range.end());
        Self { parts: vec![range], text }
    }

    pub fn contains(&self, epoch: EpochSeq) -> bool {
        self.parts.iter().any(|r| r.contains(&epoch))
    }

    /// Spectra of `log` whose epoch is selected, in log order.
    pub fn resolve(&self, log: &SpectraLog) -> Vec<Spectrum> {
        log.spectra().iter().filter(|s| self.contains(s.epoch_seq)).cloned().collect()
    }
}

fn function_name(manifest: Option<&Manifest>, id: ProbeId) -> String {
    manifest.and_then(|m| m.name(id)).map_or_else(|| format!("f{id}"), str::to_string)
}

/// Report text. `accuracy` is `None` when no truth was given.
pub fn render_report(
    report: &DiagnosisReport,
    manifest: Option<&Manifest>,
    pass: &EpochSelector,
    fail: &EpochSelector,
    accuracy: Option<Option<f64>>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# pass={pass} spectra={}", report.n_pass);
    let _ = writeln!(out, "# fail={fail} spectra={}", report.n_fail);
    for s in &report.fail_only {
        let _ = writeln!(
            out,
            "SUSPECT {} {} evidence={}/{}",
            s.id,
            function_name(manifest, s.id),
            s.evidence,
            report.n_fail
        );
    }
    for s in &report.pass_only {
        let _ = writeln!(
            out,
            "PASS-ONLY {} {} evidence={}/{}",
            s.id,
            function_name(manifest, s.id),
            s.evidence,
            report.n_pass
        );
    }
    match accuracy {
        Some(Some(a)) => {
            let _ = writeln!(out, "accuracy={a:.2}");
        }
        Some(None) => out.push_str("accuracy=n/a\n"),
        None => {}
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadDelta {
    pub mean_a: f64,
    pub mean_b: f64,
    /// `(mean_b - mean_a) * 100`.
    pub delta_points: f64,
}

/// Mean load of the samples whose second lies in `window`.
pub fn window_mean(series: &[(u32, f64)], window: &RangeInclusive<u32>) -> Option<f64> {
    let picked: Vec<f64> = series.iter().filter(|(s, _)| window.contains(s)).map(|&(_, l)| l).collect();
    if picked.is_empty() {
        return None;
    }
    Some(picked.iter().sum::<f64>() / picked.len() as f64)
}

pub fn load_delta(
    series: &[(u32, f64)],
    a: RangeInclusive<u32>,
    b: RangeInclusive<u32>,
) -> Result<LoadDelta, DiagnosisError> {
    let empty = |w: &RangeInclusive<u32>| DiagnosisError::EmptyWindow(format!("{}..{}", w.start(), w.end()));
    let mean_a = window_mean(series, &a).ok_or_else(|| empty(&a))?;
    let mean_b = window_mean(series, &b).ok_or_else(|| empty(&b))?;
    Ok(LoadDelta { mean_a, mean_b, delta_points: (mean_b - mean_a) * 100.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(epoch: EpochSeq, counts: &[u8]) -> Spectrum {
        Spectrum::from_counts(epoch, 0, counts.to_vec()).unwrap()
    }

    fn ids(v: &[ProbeId]) -> BTreeSet<ProbeId> {
        v.iter().copied().collect()
    }

    #[test]
    fn hit_sets() {
        assert_eq!(hit_set(&spec(0, &[0, 3, 0, 127])), ids(&[1, 3]));
        assert!(hit_set(&spec(0, &[0, 0])).is_empty());
        assert_eq!(hit_set(&spec(0, &[127; 4])), ids(&[0, 1, 2, 3]));
    }

    #[test]
    fn toy_example_blames_c3() {
        // Components C1..C4 at ids 0..3.
        let pass = [spec(0, &[1, 1, 0, 1])];
        let fail = [spec(1, &[1, 0, 1, 1])];
        let r = suspects(&pass, &fail).unwrap();
        assert_eq!(r.fail_only_ids(), ids(&[2]));
        assert_eq!(r.pass_only_ids(), ids(&[1]));
    }

    #[test]
    fn identical_sets_have_no_suspects() {
        let set = [spec(0, &[1, 0, 5]), spec(1, &[0, 2, 0])];
        let r = suspects(&set, &set).unwrap();
        assert!(r.fail_only.is_empty() && r.pass_only.is_empty());
        assert_eq!(accuracy(&r, &ids(&[0])), None);
    }

    #[test]
    fn evidence_orders_suspects() {
        let pass = [spec(0, &[1, 0, 0, 0])];
        let fail = [spec(1, &[1, 0, 1, 1]), spec(2, &[0, 0, 0, 1]), spec(3, &[0, 1, 0, 1])];
        let r = suspects(&pass, &fail).unwrap();
        assert_eq!(
            r.fail_only,
            vec![Suspect { id: 3, evidence: 3 }, Suspect { id: 1, evidence: 1 }, Suspect { id: 2, evidence: 1 }]
        );
    }

    #[test]
    fn accuracy_values() {
        let pass = [spec(0, &[0, 0, 1])];
        let fail = [spec(1, &[1, 1, 1])];
        let r = suspects(&pass, &fail).unwrap();
        assert_eq!(accuracy(&r, &ids(&[0])), Some(0.5));
        let fail = [spec(1, &[1, 0, 1])];
        let r = suspects(&pass, &fail).unwrap();
        assert_eq!(accuracy(&r, &ids(&[0])), Some(1.0));
    }

    #[test]
    fn errors() {
        let a = [spec(0, &[1])];
        assert_eq!(suspects(&[], &a), Err(DiagnosisError::EmptySet(Role::Pass)));
        assert_eq!(suspects(&a, &[]), Err(DiagnosisError::EmptySet(Role::Fail)));
        assert_eq!(suspects(&a, &[spec(1, &[1, 1])]), Err(DiagnosisError::ShapeMismatch(1, 2)));
    }

    #[test]
    fn selectors() {
        let sel: EpochSelector = "1..3, 7".parse().unwrap();
        assert!(sel.contains(2) && sel.contains(7) && !sel.contains(4));
        assert_eq!(sel.to_string(), "1..3, 7");
        assert!("a..b".parse::<EpochSelector>().is_err());
        assert!("".parse::<EpochSelector>().is_err());
        let mut log = SpectraLog::new();
        for e in 0..10 {
            log.push(spec(e, &[0])).unwrap();
        }
        let got: Vec<_> = sel.resolve(&log).iter().map(|s| s.epoch_seq).collect();
        assert_eq!(got, vec![1, 2, 3, 7]);
        assert!(EpochSelector::range(20..=30).resolve(&log).is_empty());
    }

    #[test]
    fn truth_by_name_or_id() {
        let m = Manifest::from_names(["a", "b"]).unwrap();
        assert_eq!(parse_truth("b\n", Some(&m)).unwrap(), ids(&[1]));
        assert_eq!(parse_truth("0\n\n", Some(&m)).unwrap(), ids(&[0]));
        assert!(parse_truth("zz\n", Some(&m)).is_err());
        assert!(parse_truth("5\n", Some(&m)).is_err());
    }

    #[test]
    fn report_text() {
        let m = Manifest::from_names(["a", "b", "c"]).unwrap();
        let pass = [spec(0, &[1, 1, 0])];
        let fail = [spec(1, &[1, 0, 1]), spec(2, &[1, 0, 0])];
        let r = suspects(&pass, &fail).unwrap();
        let text = render_report(
            &r,
            Some(&m),
            &"0".parse().unwrap(),
            &"1..2".parse().unwrap(),
            Some(accuracy(&r, &ids(&[2]))),
        );
        assert_eq!(
            text,
            "# pass=0 spectra=1\n# fail=1..2 spectra=2\nSUSPECT 2 c evidence=1/2\n\
             PASS-ONLY 1 b evidence=1/1\naccuracy=1.00\n"
        );
        let none = render_report(&r, None, &"0".parse().unwrap(), &"1".parse().unwrap(), None);
        assert!(none.contains("SUSPECT 2 f2") && !none.contains("accuracy"));
    }

    #[test]
    fn load_deltas() {
        let flat: Vec<(u32, f64)> = (0..10).map(|s| (s, 0.2)).collect();
        assert_eq!(load_delta(&flat, 0..=4, 5..=9).unwrap().delta_points, 0.0);
        let mut step = flat.clone();
        for s in &mut step[5..] {
            s.1 = 0.3;
        }
        let d = load_delta(&step, 0..=4, 5..=9).unwrap();
        assert!((d.delta_points - 10.0).abs() < 1e-9);
        assert!(matches!(load_delta(&flat, 0..=4, 50..=60), Err(DiagnosisError::EmptyWindow(_))));
    }
}
