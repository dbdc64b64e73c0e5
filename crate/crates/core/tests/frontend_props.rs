// SPDX-License-Identifier: Apache-2.0

mod support;

use std::cell::Cell;

use proptest::prelude::*;
use spectra_lab::instrument::{find_probe, instrument, is_probe_call, Scope};
use spectra_lab::minic::{parse, print, traverse, Expr, ExprKind, ExprTag, Slot, StmtTag, TraverseTable};
use support::{arb_program, count_calls};

fn count_probes(e: &Expr) -> usize {
    let here = usize::from(is_probe_call(e));
    here + match &e.kind {
        ExprKind::IntLit(_) | ExprKind::Var(_) => 0,
        ExprKind::Binary { lhs, rhs, .. } => count_probes(lhs) + count_probes(rhs),
        ExprKind::Comma(a, b) => count_probes(a) + count_probes(b),
        ExprKind::Call { args, .. } => args.iter().map(count_probes).sum(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_is_identity(p in arb_program()) {
        let text = print(&p);
        let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, p);
    }

    #[test]
    fn traversal_visits_every_call_once(p in arb_program()) {
        let calls = Cell::new(0usize);
        let stmts = Cell::new(0usize);
        let mut table = TraverseTable::new()
            .on_expr(ExprTag::Call, Slot::Pre, |e| {
                calls.set(calls.get() + 1);
                Ok(e)
            });
        for tag in StmtTag::ALL {
            table = table.on_stmt(tag, Slot::Post, |s| {
                stmts.set(stmts.get() + 1);
                Ok(s)
            });
        }
        let out = traverse(p.clone(), &mut table).unwrap();
        prop_assert_eq!(out, p.clone());
        prop_assert_eq!(calls.get(), count_calls(&p));
        let all: usize = p.functions.iter().map(|f| stmt_count(&f.body)).sum();
        prop_assert_eq!(stmts.get(), all);
    }

    #[test]
    fn instrumentation_wraps_each_call_once(p in arb_program()) {
        let before = count_calls(&p);
        let (inst, manifest) = instrument(p, Scope::AllCalls, &[]).unwrap();
        prop_assert_eq!(count_calls(&inst), 2 * before);
        let text = print(&inst);
        let reparsed = parse(&text).unwrap();
        prop_assert_eq!(&reparsed, &inst);
        let probes: usize = inst.functions.iter().flat_map(|f| &f.body).map(probe_count).sum();
        prop_assert_eq!(probes, before);
        prop_assert!(manifest.n_funcs() <= before);
        prop_assert_eq!(find_probe(&inst).is_some(), before > 0);
    }
}

fn stmt_count(b: &[spectra_lab::minic::Stmt]) -> usize {
    use spectra_lab::minic::StmtKind;
    b.iter()
        .map(|s| {
            1 + match &s.kind {
                StmtKind::If { then_block, else_block, .. } => {
                    stmt_count(then_block) + else_block.as_deref().map_or(0, stmt_count)
                }
                StmtKind::While { body, .. } => stmt_count(body),
                _ => 0,
            }
        })
        .sum()
}

fn probe_count(s: &spectra_lab::minic::Stmt) -> usize {
    use spectra_lab::minic::StmtKind;
    match &s.kind {
        StmtKind::Expr(e) | StmtKind::Return(e) => count_probes(e),
        StmtKind::Decl { init: e, .. } | StmtKind::Assign { value: e, .. } => count_probes(e),
        StmtKind::If { cond, then_block, else_block } => {
            count_probes(cond)
                + then_block.iter().map(probe_count).sum::<usize>()
                + else_block.iter().flatten().map(probe_count).sum::<usize>()
        }
        StmtKind::While { cond, body } => count_probes(cond) + body.iter().map(probe_count).sum::<usize>(),
    }
}
