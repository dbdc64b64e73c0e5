// SPDX-License-Identifier: Apache-2.0

mod support;

use proptest::prelude::*;
use spectra_lab::instrument::{instrument, InstrumentError, Scope};
use spectra_lab::minic::{parse, print};
use spectra_lab::vm::{CostModel, NoopHost, Recorder, Vm};
use support::{corpus, count_calls, Oracle};

#[test]
fn corpus_is_large_enough() {
    assert!(corpus().len() >= 20);
}

#[test]
fn instrumented_programs_match_oracle() {
    for (name, src) in corpus() {
        let original = parse(&src).unwrap_or_else(|e| panic!("{name}: {e}"));
        let mut oracle = Oracle::new(&original);
        let expected = oracle.call("main", vec![]).unwrap_or_else(|e| panic!("{name}: {e}"));

        let vm = Vm::new(&original, CostModel::default());
        let mut plain = Recorder::default();
        let base = vm.run("main", &[], &mut plain).unwrap();
        assert_eq!(base.return_value, expected, "{name}");
        assert_eq!(plain.output, oracle.output, "{name}");
        assert!(plain.probes.is_empty());

        let (inst, manifest) = instrument(original.clone(), Scope::AllCalls, &[]).unwrap();
        let ivm = Vm::new(&inst, CostModel::default());
        let mut rec = Recorder::default();
        let r = ivm.run("main", &[], &mut rec).unwrap();
        assert_eq!(r, base, "{name}: probes changed the result or the time");
        assert_eq!(rec.output, oracle.output, "{name}");
        let counts = rec.counts(manifest.n_funcs());
        for (id, fname) in manifest.entries() {
            let want = oracle.calls.get(fname).copied().unwrap_or(0);
            assert_eq!(counts[id as usize], want, "{name}: calls of {fname}");
        }
        assert_eq!(ivm.run("main", &[], &mut NoopHost).unwrap(), base);

        let text = print(&inst);
        let reparsed = parse(&text).unwrap();
        assert_eq!(reparsed, inst, "{name}");
        assert_eq!(count_calls(&inst), 2 * count_calls(&original), "{name}");
        if count_calls(&original) > 0 {
            assert!(matches!(instrument(reparsed, Scope::AllCalls, &[]), Err(InstrumentError::AlreadyInstrumented(_))));
        }
    }
}

#[test]
fn fib_ten_gives_177_probes() {
    let src = corpus().into_iter().find(|(n, _)| n == "fib.mc").unwrap().1;
    let original = parse(&src).unwrap();
    let (inst, manifest) = instrument(original.clone(), Scope::AllCalls, &[]).unwrap();
    let mut rec = Recorder::default();
    Vm::new(&inst, CostModel::default()).run("fib", &[10], &mut rec).unwrap();

    // calls(n) = calls(n-1) + calls(n-2) + 1, calls(0) = calls(1) = 1
    let mut calls = [1u64; 11];
    for n in 2..=10 {
        calls[n] = calls[n - 1] + calls[n - 2] + 1;
    }
    let fib = manifest.id_of("fib").unwrap();
    // The outermost call comes from the host, not from a call site.
    assert_eq!(rec.counts(manifest.n_funcs())[fib as usize] + 1, calls[10]);
    let mut oracle = Oracle::new(&original);
    oracle.call("fib", vec![10]).unwrap();
    assert_eq!(oracle.calls["fib"], 177);

    let mut rec = Recorder::default();
    Vm::new(&inst, CostModel::default()).run("main", &[], &mut rec).unwrap();
    assert_eq!(rec.counts(manifest.n_funcs())[fib as usize], 177);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sliced_runs_match_unsliced(index in 0usize..64, budgets in prop::collection::vec(1u64..40, 1..20)) {
        let programs = corpus();
        let (_, src) = &programs[index % programs.len()];
        let (inst, _) = instrument(parse(src).unwrap(), Scope::AllCalls, &[]).unwrap();
        let vm = Vm::new(&inst, CostModel::default());
        let mut whole = Recorder::default();
        let expected = vm.run("main", &[], &mut whole).unwrap();

        let mut sliced = Recorder::default();
        let mut exec = vm.start("main", &[]).unwrap();
        let mut i = 0;
        let returned = loop {
            let step = vm.step_budgeted(&mut exec, budgets[i % budgets.len()], &mut sliced).unwrap();
            prop_assert!(step.consumed <= budgets[i % budgets.len()]);
            if let Some(v) = step.returned {
                break v;
            }
            i += 1;
        };
        prop_assert_eq!(returned, expected.return_value);
        prop_assert_eq!(exec.consumed(), expected.consumed_time);
        prop_assert_eq!(sliced, whole);
    }
}
