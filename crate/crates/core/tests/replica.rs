// SPDX-License-Identifier: Apache-2.0

use spectra_lab::diagnosis::{accuracy, load_delta, parse_truth, suspects, EpochSelector};
use spectra_lab::replica::{self, ReplicaOptions};
use spectra_lab::sim::{events_to_string, load_to_csv, Event, Scenario};
use spectra_lab::vm::{CostModel, NoopHost, Vm};

fn series(out: &spectra_lab::sim::SimOutput) -> Vec<(u32, f64)> {
    out.load.iter().map(|s| (s.second, s.load())).collect()
}

#[test]
fn diagnosis_finds_fault_and_sweep() {
    let out = replica::run(&ReplicaOptions::default(), true).unwrap();
    assert_eq!(out.spectra.len(), 150);
    let pass = EpochSelector::range(replica::PASS_EPOCHS).resolve(&out.spectra);
    let fail = EpochSelector::range(replica::FAIL_EPOCHS).resolve(&out.spectra);
    assert_eq!((pass.len(), fail.len()), (10, 10));
    let r = suspects(&pass, &fail).unwrap();
    let m = replica::manifest();
    let names: Vec<&str> = r.fail_only.iter().map(|s| m.name(s.id).unwrap()).collect();
    assert_eq!(names, vec![replica::FAULT_HANDLER, replica::SWEEP_HANDLER]);
    assert_eq!(r.fail_only[0].evidence, 10);
    // One sweep every 4 s from 92 s: epochs 100, 104 and 108.
    assert_eq!(r.fail_only[1].evidence, 3);
    assert!(r.pass_only.is_empty());
    let truth = parse_truth(replica::TRUTH, Some(&m)).unwrap();
    assert_eq!(accuracy(&r, &truth), Some(0.5));
}

#[test]
fn load_rises_by_the_injected_work() {
    let out = replica::run(&ReplicaOptions::default(), true).unwrap();
    let d = load_delta(&series(&out), replica::TV1_SECONDS, replica::TV2_SECONDS).unwrap();

    // Arithmetic oracle: standalone handler costs times their rates.
    let vm = Vm::new(&replica::program(), CostModel::default());
    let cost = |h: &str| vm.run(h, &[], &mut NoopHost).unwrap().consumed_time as f64;
    let per_second = cost(replica::FAULT_HANDLER) * 1000.0 / 250.0 + cost(replica::SWEEP_HANDLER) / 4.0;
    let oracle_points = per_second / 10.0;
    assert_eq!(cost(replica::FAULT_HANDLER), 25.0);
    assert_eq!(cost(replica::SWEEP_HANDLER), 21.0);
    assert!((d.delta_points - oracle_points).abs() < 0.5, "{d:?} vs {oracle_points}");
    assert!((8.0..=12.0).contains(&d.delta_points), "{d:?}");

    // Teletext phases are the busiest.
    let teletext = load_delta(&series(&out), 60..=74, 75..=89).unwrap();
    assert!(teletext.mean_a > d.mean_b && teletext.mean_b > teletext.mean_a);
}

#[test]
fn without_the_fault_the_plateaus_match() {
    let opts = ReplicaOptions { fault: false, ..ReplicaOptions::default() };
    let out = replica::run(&opts, true).unwrap();
    let d = load_delta(&series(&out), replica::TV1_SECONDS, replica::TV2_SECONDS).unwrap();
    assert!(d.delta_points.abs() < 1.5, "{d:?}");
    let pass = EpochSelector::range(replica::PASS_EPOCHS).resolve(&out.spectra);
    let fail = EpochSelector::range(replica::FAIL_EPOCHS).resolve(&out.spectra);
    let r = suspects(&pass, &fail).unwrap();
    let m = replica::manifest();
    let names: Vec<&str> = r.fail_only.iter().map(|s| m.name(s.id).unwrap()).collect();
    assert_eq!(names, vec![replica::SWEEP_HANDLER]);
}

#[test]
fn runs_are_reproducible_and_seeds_matter() {
    let a = replica::run(&ReplicaOptions::default(), true).unwrap();
    let b = replica::run(&ReplicaOptions::default(), true).unwrap();
    assert_eq!(events_to_string(&a.events), events_to_string(&b.events));
    assert_eq!(a.spectra.to_log_string(), b.spectra.to_log_string());
    assert_eq!(load_to_csv(&a.load), load_to_csv(&b.load));
    let c = replica::run(&ReplicaOptions { seed: 9, ..ReplicaOptions::default() }, true).unwrap();
    assert_ne!(events_to_string(&a.events), events_to_string(&c.events));
}

#[test]
fn recording_is_neutral_on_the_replica() {
    let on = replica::run(&ReplicaOptions::default(), true).unwrap();
    let off = replica::run(&ReplicaOptions::default(), false).unwrap();
    assert_eq!(on.load, off.load);
    let busy = |o: &spectra_lab::sim::SimOutput| o.events.iter().filter(|e| matches!(e, Event::Exec { .. })).count();
    assert!(busy(&on) >= busy(&off));
}

#[test]
fn receiver_log_matches_pool() {
    let out = replica::run(&ReplicaOptions::default(), true).unwrap();
    assert_eq!(out.spectra.spectra(), out.queued.as_slice());
    assert_eq!(out.summary.epochs_extended, 0);
}

#[test]
fn small_pool_and_slow_line_extend_epochs() {
    let opts = ReplicaOptions { capacity: 2, bytes_per_second: 60, ..ReplicaOptions::default() };
    let out = replica::run(&opts, true).unwrap();
    assert!(out.summary.epochs_extended > 0);
    assert_eq!(out.spectra.len() as u64, 150 - out.summary.epochs_extended);
    assert_eq!(out.spectra.spectra(), out.queued.as_slice());
}

#[test]
fn fixture_file_parses() {
    let sc = Scenario::parse(replica::SCENARIO).unwrap();
    assert_eq!(sc.handlers.len(), 12);
    assert_eq!(replica::manifest().n_funcs(), 12);
}
