// SPDX-License-Identifier: Apache-2.0

//! Lowering of Mini-C functions to a small stack code.
//!
//! Every statement begins with an [`Op::Stmt`] marker, which is where time is
//! charged and where execution may be suspended. A `while` charges its marker
//! once per condition test.

use std::collections::HashMap;
use std::rc::Rc;

use crate::instrument::PROBE_FN;
use crate::minic::{BinOp, Block, Expr, ExprKind, FunDef, Pos, Program, StmtKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Builtin {
    Probe,
    PostMessage,
    PrintInt,
}

impl Builtin {
    pub(crate) fn lookup(name: &str) -> Option<Self> {
        match name {
            PROBE_FN => Some(Builtin::Probe),
            "post_message" => Some(Builtin::PostMessage),
            "print_int" => Some(Builtin::PrintInt),
            _ => None,
        }
    }

    pub(crate) fn name(self) -> &'static str {
        match self {
            Builtin::Probe => PROBE_FN,
            Builtin::PostMessage => "post_message",
            Builtin::PrintInt => "print_int",
        }
    }

    pub(crate) fn arity(self) -> usize {
        match self {
            Builtin::Probe | Builtin::PrintInt => 1,
            Builtin::PostMessage => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Op {
    Stmt,
    Const(i64),
    Load(usize),
    Store(usize),
    /// Reference to a name never declared in the function.
    Unbound(Rc<str>),
    Bin(BinOp),
    Jump(usize),
    JumpIfZero(usize),
    JumpIfNonZero(usize),
    Pop,
    Call {
        func: usize,
        argc: usize,
    },
    Builtin {
        builtin: Builtin,
        argc: usize,
    },
    CallUnknown {
        name: Rc<str>,
        argc: usize,
    },
    Ret,
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledFn {
    pub name: String,
    pub n_params: usize,
    pub n_locals: usize,
    pub code: Vec<Op>,
    pub pos: Vec<Pos>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct CompiledProgram {
    pub funcs: Vec<CompiledFn>,
    pub by_name: HashMap<String, usize>,
}

pub(crate) fn compile(program: &Program) -> CompiledProgram {
    let mut by_name = HashMap::new();
    for (i, f) in program.functions.iter().enumerate() {
        by_name.entry(f.name.clone()).or_insert(i);
    }
    let funcs = program.functions.iter().map(|f| FnCompiler::new(f, &by_name).finish(f)).collect();
    CompiledProgram { funcs, by_name }
}

struct FnCompiler<'a> {
    by_name: &'a HashMap<String, usize>,
    slots: HashMap<String, usize>,
    code: Vec<Op>,
    pos: Vec<Pos>,
}

impl<'a> FnCompiler<'a> {
    fn new(f: &FunDef, by_name: &'a HashMap<String, usize>) -> Self {
        let mut slots = HashMap::new();
        for p in &f.params {
            let next = slots.len();
            slots.entry(p.clone()).or_insert(next);
        }
        collect_decls(&f.body, &mut slots);
        Self { by_name, slots, code: Vec::new(), pos: Vec::new() }
    }

    fn finish(mut self, f: &FunDef) -> CompiledFn {
        self.block(&f.body);
        self.emit(Op::Const(0), f.pos);
        self.emit(Op::Ret, f.pos);
        CompiledFn {
            name: f.name.clone(),
            n_params: f.params.len(),
            n_locals: self.slots.len(),
            code: self.code,
            pos: self.pos,
        }
    }

    fn emit(&mut self, op: Op, pos: Pos) -> usize {
        self.code.push(op);
        self.pos.push(pos);
        self.code.len() - 1
    }

    fn patch(&mut self, at: usize) {
        let target = self.code.len();
        match &mut self.code[at] {
            Op::Jump(t) | Op::JumpIfZero(t) | Op::JumpIfNonZero(t) => *t = target,
            op => unreachable!("patching non-jump {op:?}"),
        }
    }

    fn store(&mut self, name: &str, pos: Pos) {
        let op = match self.slots.get(name) {
            Some(&slot) => Op::Store(slot),
            None => Op::Unbound(name.into()),
        };
        self.emit(op, pos);
    }

    fn block(&mut self, block: &Block) {
        for stmt in block {
            let pos = stmt.pos;
            match &stmt.kind {
                StmtKind::Expr(e) => {
                    self.emit(Op::Stmt, pos);
                    self.expr(e);
                    self.emit(Op::Pop, pos);
                }
                StmtKind::Decl { name, init: value } | StmtKind::Assign { name, value } => {
                    self.emit(Op::Stmt, pos);
                    self.expr(value);
                    self.store(name, pos);
                }
                StmtKind::If { cond, then_block, else_block } => {
                    self.emit(Op::Stmt, pos);
                    self.expr(cond);
                    let to_else = self.emit(Op::JumpIfZero(0), pos);
                    self.block(then_block);
                    match else_block {
                        Some(else_block) => {
                            let to_end = self.emit(Op::Jump(0), pos);
                            self.patch(to_else);
                            self.block(else_block);
                            self.patch(to_end);
                        }
                        None => self.patch(to_else),
                    }
                }
                StmtKind::While { cond, body } => {
                    let head = self.emit(Op::Stmt, pos);
                    self.expr(cond);
                    let to_end = self.emit(Op::JumpIfZero(0), pos);
                    self.block(body);
                    self.emit(Op::Jump(head), pos);
                    self.patch(to_end);
                }
                StmtKind::Return(e) => {
                    self.emit(Op::Stmt, pos);
                    self.expr(e);
                    self.emit(Op::Ret, pos);
                }
            }
        }
    }

    fn expr(&mut self, e: &Expr) {
        let pos = e.pos;
        match &e.kind {
            ExprKind::IntLit(v) => {
                self.emit(Op::Const(*v), pos);
            }
            ExprKind::Var(name) => {
                let op = match self.slots.get(name) {
                    Some(&slot) => Op::Load(slot),
                    None => Op::Unbound(name.as_str().into()),
                };
                self.emit(op, pos);
            }
            ExprKind::Binary { op: BinOp::And, lhs, rhs } => {
                self.expr(lhs);
                let a = self.emit(Op::JumpIfZero(0), pos);
                self.expr(rhs);
                let b = self.emit(Op::JumpIfZero(0), pos);
                self.emit(Op::Const(1), pos);
                let end = self.emit(Op::Jump(0), pos);
                self.patch(a);
                self.patch(b);
                self.emit(Op::Const(0), pos);
                self.patch(end);
            }
            ExprKind::Binary { op: BinOp::Or, lhs, rhs } => {
                self.expr(lhs);
                let a = self.emit(Op::JumpIfNonZero(0), pos);
                self.expr(rhs);
                let b = self.emit(Op::JumpIfNonZero(0), pos);
                self.emit(Op::Const(0), pos);
                let end = self.emit(Op::Jump(0), pos);
                self.patch(a);
                self.patch(b);
                self.emit(Op::Const(1), pos);
                self.patch(end);
            }
            ExprKind::Binary { op, lhs, rhs } => {
                self.expr(lhs);
                self.expr(rhs);
                self.emit(Op::Bin(*op), pos);
            }
            ExprKind::Call { callee, args } => {
                for a in args {
                    self.expr(a);
                }
                let argc = args.len();
                let op = if let Some(builtin) = Builtin::lookup(callee) {
                    Op::Builtin { builtin, argc }
                } else if let Some(&func) = self.by_name.get(callee) {
                    Op::Call { func, argc }
                } else {
                    Op::CallUnknown { name: callee.as_str().into(), argc }
                };
                self.emit(op, pos);
            }
            ExprKind::Comma(first, second) => {
                self.expr(first);
                self.emit(Op::Pop, pos);
                self.expr(second);
            }
        }
    }
}

fn collect_decls(block: &Block, slots: &mut HashMap<String, usize>) {
    for stmt in block {
        match &stmt.kind {
            StmtKind::Decl { name, .. } => {
                let next = slots.len();
                slots.entry(name.clone()).or_insert(next);
            }
            StmtKind::If { then_block, else_block, .. } => {
                collect_decls(then_block, slots);
                if let Some(b) = else_block {
                    collect_decls(b, slots);
                }
            }
            StmtKind::While { body, .. } => collect_decls(body, slots),
            _ => {}
        }
    }
}
