// SPDX-License-Identifier: Apache-2.0

//! Virtual-time interpreter for Mini-C.
//!
//! Each executed statement costs [`CostModel::cost_per_statement`] virtual
//! milliseconds. Execution is resumable: [`Vm::step_budgeted`] runs whole
//! statements until the next one would exceed its budget, which is how the
//! dispatch simulator preempts handlers. Probe calls cost nothing.

mod compile;

use std::collections::BTreeMap;
use std::rc::Rc;

use thiserror::Error;

use crate::instrument::ProbeId;
use crate::minic::{BinOp, Pos, Program};
use compile::{compile, Builtin, CompiledProgram, Op};

pub const DEFAULT_MAX_DEPTH: usize = 256;

/// Virtual milliseconds.
pub type Millis = u64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostModel {
    pub cost_per_statement: Millis,
    builtin_costs: BTreeMap<String, Millis>,
}

impl Default for CostModel {
    fn default() -> Self {
        Self { cost_per_statement: 1, builtin_costs: BTreeMap::new() }
    }
}

impl CostModel {
    pub fn with_statement_cost(cost_per_statement: Millis) -> Self {
        Self { cost_per_statement, ..Self::default() }
    }

    /// Overrides the cost of calling a builtin. `__probe` stays free.
    pub fn with_builtin_cost(mut self, name: &str, cost: Millis) -> Self {
        if Builtin::lookup(name) != Some(Builtin::Probe) {
            self.builtin_costs.insert(name.to_string(), cost);
        }
        self
    }

    pub fn builtin_cost(&self, name: &str) -> Millis {
        self.builtin_costs.get(name).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeErrorKind {
    #[error("division by zero")]
    DivByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("call to unknown function `{0}`")]
    UnknownFunction(String),
    #[error("use of undeclared variable `{0}`")]
    UnknownVariable(String),
    #[error("`{name}` takes {expected} argument(s), got {found}")]
    ArityMismatch { name: String, expected: usize, found: usize },
    #[error("stack depth exceeded")]
    StackDepthExceeded,
    #[error("invalid probe id {0}")]
    BadProbeId(i64),
    #[error("{0}")]
    Host(String),
}

/// A failed execution, with the virtual time consumed up to the fault.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {kind} (after {consumed} ms)")]
pub struct RuntimeError {
    pub kind: RuntimeErrorKind,
    pub consumed: Millis,
    pub pos: Pos,
}

/// Environment the interpreter calls out to for builtins.
pub trait Host {
    fn probe(&mut self, id: ProbeId) -> Result<(), String>;

    fn post_message(&mut self, handler: i64, delay_ms: i64) -> Result<(), String> {
        let _ = (handler, delay_ms);
        Err("post_message is not available outside the dispatcher".into())
    }

    fn print_int(&mut self, value: i64) {
        let _ = value;
    }

    /// Checked before each statement; `true` ends the current slice early.
    fn take_yield(&mut self) -> bool {
        false
    }
}

/// Ignores probes and output.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoopHost;

impl Host for NoopHost {
    fn probe(&mut self, _id: ProbeId) -> Result<(), String> {
        Ok(())
    }
}

/// Records probe events and printed values in order.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Recorder {
    pub probes: Vec<ProbeId>,
    pub output: Vec<i64>,
}

impl Recorder {
    /// Number of probe events per id, for ids `0..n`.
    pub fn counts(&self, n: usize) -> Vec<u64> {
        let mut counts = vec![0; n];
        for &id in &self.probes {
            if let Some(c) = counts.get_mut(id as usize) {
                *c += 1;
            }
        }
        counts
    }
}

impl Host for Recorder {
    fn probe(&mut self, id: ProbeId) -> Result<(), String> {
        self.probes.push(id);
        Ok(())
    }

    fn print_int(&mut self, value: i64) {
        self.output.push(value);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecResult {
    pub return_value: i64,
    pub consumed_time: Millis,
}

/// Result of one budgeted slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub consumed: Millis,
    /// `Some(value)` once the function has returned.
    pub returned: Option<i64>,
}

#[derive(Debug, Clone)]
struct Frame {
    func: usize,
    pc: usize,
    base: usize,
}

/// Suspended state of one function invocation.
#[derive(Debug, Clone)]
pub struct Execution {
    frames: Vec<Frame>,
    locals: Vec<i64>,
    stack: Vec<i64>,
    consumed: Millis,
    returned: Option<i64>,
}

impl Execution {
    pub fn consumed(&self) -> Millis {
        self.consumed
    }

    pub fn is_finished(&self) -> bool {
        self.returned.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct Vm {
    program: Rc<CompiledProgram>,
    cost: CostModel,
    max_depth: usize,
}

impl Vm {
    pub fn new(program: &Program, cost: CostModel) -> Self {
        Self { program: Rc::new(compile(program)), cost, max_depth: DEFAULT_MAX_DEPTH }
    }

    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn cost_model(&self) -> &CostModel {
        &self.cost
    }

    pub fn has_function(&self, name: &str) -> bool {
        self.program.by_name.contains_key(name)
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.program.by_name.get(name).map(|&i| self.program.funcs[i].n_params)
    }

    /// Prepares a call of `name(args)` without executing anything.
    pub fn start(&self, name: &str, args: &[i64]) -> Result<Execution, RuntimeError> {
        let fault = |kind| RuntimeError { kind, consumed: 0, pos: Pos::default() };
        let &func =
            self.program.by_name.get(name).ok_or_else(|| fault(RuntimeErrorKind::UnknownFunction(name.to_string())))?;
        let f = &self.program.funcs[func];
        if f.n_params != args.len() {
            return Err(fault(RuntimeErrorKind::ArityMismatch {
                name: name.to_string(),
                expected: f.n_params,
                found: args.len(),
            }));
        }
        let mut locals = vec![0; f.n_locals];
        locals[..args.len()].copy_from_slice(args);
        Ok(Execution {
            frames: vec![Frame { func, pc: 0, base: 0 }],
            locals,
            stack: Vec::new(),
            consumed: 0,
            returned: None,
        })
    }

    /// Runs `name(args)` to completion.
    pub fn run(&self, name: &str, args: &[i64], host: &mut dyn Host) -> Result<ExecResult, RuntimeError> {
        let mut exec = self.start(name, args)?;
        loop {
            let step = self.step_budgeted(&mut exec, Millis::MAX, host)?;
            if let Some(return_value) = step.returned {
                return Ok(ExecResult { return_value, consumed_time: exec.consumed });
            }
        }
    }

    /// Executes whole statements until the next one would exceed `budget`
    /// or the function returns.
    pub fn step_budgeted(
        &self,
        exec: &mut Execution,
        budget: Millis,
        host: &mut dyn Host,
    ) -> Result<Step, RuntimeError> {
        let mut used: Millis = 0;
        if let Some(value) = exec.returned {
            return Ok(Step { consumed: 0, returned: Some(value) });
        }
        let stmt_cost = self.cost.cost_per_statement;
        loop {
            let frame = exec.frames.last_mut().expect("live execution has a frame");
            let func = &self.program.funcs[frame.func];
            let pc = frame.pc;
            let pos = func.pos[pc];
            let fault = |kind, consumed| RuntimeError { kind, consumed, pos };
            match &func.code[pc] {
                Op::Stmt => {
                    if used.saturating_add(stmt_cost) > budget || host.take_yield() {
                        return Ok(Step { consumed: used, returned: None });
                    }
                    used += stmt_cost;
                    exec.consumed += stmt_cost;
                    frame.pc += 1;
                }
                Op::Const(v) => {
                    exec.stack.push(*v);
                    frame.pc += 1;
                }
                Op::Load(slot) => {
                    exec.stack.push(exec.locals[frame.base + slot]);
                    frame.pc += 1;
                }
                Op::Store(slot) => {
                    let v = exec.stack.pop().expect("operand");
                    exec.locals[frame.base + slot] = v;
                    frame.pc += 1;
                }
                Op::Unbound(name) => {
                    return Err(fault(RuntimeErrorKind::UnknownVariable(name.to_string()), exec.consumed));
                }
                Op::Bin(op) => {
                    let rhs = exec.stack.pop().expect("operand");
                    let lhs = exec.stack.pop().expect("operand");
                    let v = binary(*op, lhs, rhs).map_err(|k| fault(k, exec.consumed))?;
                    exec.stack.push(v);
                    frame.pc += 1;
                }
                Op::Jump(t) => frame.pc = *t,
                Op::JumpIfZero(t) => {
                    let v = exec.stack.pop().expect("operand");
                    frame.pc = if v == 0 { *t } else { pc + 1 };
                }
                Op::JumpIfNonZero(t) => {
                    let v = exec.stack.pop().expect("operand");
                    frame.pc = if v != 0 { *t } else { pc + 1 };
                }
                Op::Pop => {
                    exec.stack.pop();
                    frame.pc += 1;
                }
                Op::Builtin { builtin, argc } => {
                    let (builtin, argc) = (*builtin, *argc);
                    if argc != builtin.arity() {
                        return Err(fault(
                            RuntimeErrorKind::ArityMismatch {
                                name: builtin.name().to_string(),
                                expected: builtin.arity(),
                                found: argc,
                            },
                            exec.consumed,
                        ));
                    }
                    let args = exec.stack.split_off(exec.stack.len() - argc);
                    let outcome = match builtin {
                        Builtin::Probe => match ProbeId::try_from(args[0]) {
                            Ok(id) => host.probe(id).map_err(RuntimeErrorKind::Host),
                            Err(_) => Err(RuntimeErrorKind::BadProbeId(args[0])),
                        },
                        Builtin::PostMessage => host.post_message(args[0], args[1]).map_err(RuntimeErrorKind::Host),
                        Builtin::PrintInt => {
                            host.print_int(args[0]);
                            Ok(())
                        }
                    };
                    outcome.map_err(|k| fault(k, exec.consumed))?;
                    let extra = self.cost.builtin_cost(builtin.name());
                    used = used.saturating_add(extra);
                    exec.consumed += extra;
                    exec.stack.push(0);
                    frame.pc += 1;
                }
                Op::CallUnknown { name, .. } => {
                    return Err(fault(RuntimeErrorKind::UnknownFunction(name.to_string()), exec.consumed));
                }
                Op::Call { func: callee, argc } => {
                    let (callee, argc) = (*callee, *argc);
                    let target = &self.program.funcs[callee];
                    if target.n_params != argc {
                        return Err(fault(
                            RuntimeErrorKind::ArityMismatch {
                                name: target.name.clone(),
                                expected: target.n_params,
                                found: argc,
                            },
                            exec.consumed,
                        ));
                    }
                    frame.pc += 1;
                    if exec.frames.len() >= self.max_depth {
                        return Err(fault(RuntimeErrorKind::StackDepthExceeded, exec.consumed));
                    }
                    let base = exec.locals.len();
                    exec.locals.resize(base + target.n_locals, 0);
                    let args_at = exec.stack.len() - argc;
                    exec.locals[base..base + argc].copy_from_slice(&exec.stack[args_at..]);
                    exec.stack.truncate(args_at);
                    exec.frames.push(Frame { func: callee, pc: 0, base });
                }
                Op::Ret => {
                    let value = exec.stack.pop().expect("return value");
                    let done = exec.frames.pop().expect("frame");
                    exec.locals.truncate(done.base);
                    if exec.frames.is_empty() {
                        exec.returned = Some(value);
                        return Ok(Step { consumed: used, returned: Some(value) });
                    }
                    exec.stack.push(value);
                }
            }
        }
    }
}

fn binary(op: BinOp, lhs: i64, rhs: i64) -> Result<i64, RuntimeErrorKind> {
    let b = |c: bool| Ok(i64::from(c));
    match op {
        BinOp::Add => lhs.checked_add(rhs).ok_or(RuntimeErrorKind::Overflow),
        BinOp::Sub => lhs.checked_sub(rhs).ok_or(RuntimeErrorKind::Overflow),
        BinOp::Mul => lhs.checked_mul(rhs).ok_or(RuntimeErrorKind::Overflow),
        BinOp::Div if rhs == 0 => Err(RuntimeErrorKind::DivByZero),
        BinOp::Div => lhs.checked_div(rhs).ok_or(RuntimeErrorKind::Overflow),
        BinOp::Lt => b(lhs < rhs),
        BinOp::Le => b(lhs <= rhs),
        BinOp::Eq => b(lhs == rhs),
        BinOp::Ne => b(lhs != rhs),
        BinOp::Gt => b(lhs > rhs),
        BinOp::Ge => b(lhs >= rhs),
        BinOp::And => b(lhs != 0 && rhs != 0),
        BinOp::Or => b(lhs != 0 || rhs != 0),
    }
}

/// Compiles `program` and runs `name(args)` to completion.
pub fn run_function(
    program: &Program,
    name: &str,
    args: &[i64],
    host: &mut dyn Host,
    cost: &CostModel,
) -> Result<ExecResult, RuntimeError> {
    Vm::new(program, cost.clone()).run(name, args, host)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::{instrument, Scope};
    use crate::minic::parse;

    fn run_src(src: &str, name: &str, args: &[i64]) -> Result<(ExecResult, Recorder), RuntimeError> {
        let p = parse(src).unwrap();
        let mut rec = Recorder::default();
        let r = run_function(&p, name, args, &mut rec, &CostModel::default())?;
        Ok((r, rec))
    }

    #[test]
    fn returns_sum() {
        let (r, _) = run_src("int main(){return 2+3;}", "main", &[]).unwrap();
        assert_eq!(r.return_value, 5);
        assert_eq!(r.consumed_time, 1);
    }

    #[test]
    fn single_probe_event() {
        let p = parse("int main(){f();return 0;} int f(){return 1;}").unwrap();
        let (p, m) = instrument(p, Scope::AllCalls, &[]).unwrap();
        let mut rec = Recorder::default();
        run_function(&p, "main", &[], &mut rec, &CostModel::default()).unwrap();
        assert_eq!(rec.probes, vec![m.id_of("f").unwrap()]);
        assert_eq!(rec.probes, vec![0]);
    }

    #[test]
    fn c_semantics() {
        let src = "int main(){ print_int(7 / 2); print_int(-7 / 2); print_int(3 < 4); \
                   print_int(0 && (1 / 0)); print_int(1 || (1 / 0)); print_int((1, 2)); return 0; }";
        let (_, rec) = run_src(src, "main", &[]).unwrap();
        assert_eq!(rec.output, vec![3, -3, 1, 0, 1, 2]);
    }

    #[test]
    fn runtime_faults() {
        let cases = [
            ("int main(){ int x = 1; return x / 0; }", RuntimeErrorKind::DivByZero, 2),
            ("int main(){ return 9223372036854775807 + 1; }", RuntimeErrorKind::Overflow, 1),
            ("int main(){ return nope(); }", RuntimeErrorKind::UnknownFunction("nope".into()), 1),
            ("int main(){ return y; }", RuntimeErrorKind::UnknownVariable("y".into()), 1),
            ("int main(){ return main(); }", RuntimeErrorKind::StackDepthExceeded, 256),
        ];
        for (src, kind, consumed) in cases {
            let err = run_src(src, "main", &[]).unwrap_err();
            assert_eq!(err.kind, kind, "{src}");
            assert_eq!(err.consumed, consumed, "{src}");
        }
        let err = run_src("int f(int a){return a;} int main(){return f();}", "main", &[]).unwrap_err();
        assert!(matches!(err.kind, RuntimeErrorKind::ArityMismatch { expected: 1, found: 0, .. }));
        let err = run_src("int main(){return 0;}", "main", &[1]).unwrap_err();
        assert!(matches!(err.kind, RuntimeErrorKind::ArityMismatch { .. }));
        let err = run_src("int main(){return 0;}", "other", &[]).unwrap_err();
        assert_eq!(err.kind, RuntimeErrorKind::UnknownFunction("other".into()));
    }

    #[test]
    fn fault_position_points_at_statement() {
        let err = run_src("int main(){\n  int a = 0;\n  return 4 / a;\n}", "main", &[]).unwrap_err();
        assert_eq!(err.pos.line, 3);
    }

    #[test]
    fn post_message_outside_dispatcher_fails() {
        let err = run_src("int main(){ post_message(0, 0); return 0; }", "main", &[]).unwrap_err();
        assert!(matches!(err.kind, RuntimeErrorKind::Host(_)));
    }

    const TEN: &str = "int f(){ int a = 0; a = a + 1; a = a + 1; a = a + 1; a = a + 1; \
                       a = a + 1; a = a + 1; a = a + 1; a = a + 1; return a; }";

    #[test]
    fn budget_slices_statements() {
        let vm = Vm::new(&parse(TEN).unwrap(), CostModel::default());
        let mut exec = vm.start("f", &[]).unwrap();
        let step = vm.step_budgeted(&mut exec, 4, &mut NoopHost).unwrap();
        assert_eq!(step, Step { consumed: 4, returned: None });
        assert!(!exec.is_finished());
        let step = vm.step_budgeted(&mut exec, 100, &mut NoopHost).unwrap();
        assert_eq!(step, Step { consumed: 6, returned: Some(8) });
        assert_eq!(exec.consumed(), 10);

        let mut whole = vm.start("f", &[]).unwrap();
        let step = vm.step_budgeted(&mut whole, 10, &mut NoopHost).unwrap();
        assert_eq!(step, Step { consumed: 10, returned: Some(8) });
    }

    #[test]
    fn statement_costs_are_atomic() {
        let vm = Vm::new(&parse(TEN).unwrap(), CostModel::with_statement_cost(3));
        let mut exec = vm.start("f", &[]).unwrap();
        let step = vm.step_budgeted(&mut exec, 7, &mut NoopHost).unwrap();
        assert_eq!(step.consumed, 6);
        let step = vm.step_budgeted(&mut exec, 2, &mut NoopHost).unwrap();
        assert_eq!(step.consumed, 0);
    }

    #[test]
    fn while_charges_each_test() {
        let src = "int f(int n){ int i = 0; while (i < n) { i = i + 1; } return i; }";
        for n in 0..6 {
            let (r, _) = run_src(src, "f", &[n]).unwrap();
            assert_eq!(r.consumed_time, 2 * n as u64 + 3);
        }
    }

    #[test]
    fn builtin_costs_apply_except_probe() {
        let p = parse("int main(){ print_int(1); __probe(0); return 0; }").unwrap();
        let cost = CostModel::default().with_builtin_cost("print_int", 5).with_builtin_cost("__probe", 9);
        let r = run_function(&p, "main", &[], &mut Recorder::default(), &cost).unwrap();
        assert_eq!(r.consumed_time, 3 + 5);
        assert_eq!(cost.builtin_cost("__probe"), 0);
    }

    #[test]
    fn negative_probe_id_is_a_fault() {
        let err = run_src("int main(){ __probe(-1); return 0; }", "main", &[]).unwrap_err();
        assert_eq!(err.kind, RuntimeErrorKind::BadProbeId(-1));
    }
}
