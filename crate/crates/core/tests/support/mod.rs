// SPDX-License-Identifier: Apache-2.0

//! Shared test helpers: a reference tree-walking interpreter and AST generators.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::PathBuf;

use proptest::prelude::*;
use spectra_lab::minic::{BinOp, Block, Expr, ExprKind, FunDef, Pos, Program, Stmt, StmtKind};

/// Direct AST interpreter that counts calls per callee name. Written
/// independently of the VM; it shares only the AST.
pub struct Oracle<'p> {
    program: &'p Program,
    pub calls: BTreeMap<String, u64>,
    pub output: Vec<i64>,
    depth: usize,
}

enum Flow {
    Next,
    Return(i64),
}

impl<'p> Oracle<'p> {
    pub fn new(program: &'p Program) -> Self {
        Self { program, calls: BTreeMap::new(), output: Vec::new(), depth: 0 }
    }

    pub fn call(&mut self, name: &str, args: Vec<i64>) -> Result<i64, String> {
        *self.calls.entry(name.to_string()).or_insert(0) += 1;
        match name {
            "print_int" => {
                self.output.push(args[0]);
                return Ok(0);
            }
            "__probe" => return Ok(0),
            _ => {}
        }
        let f: &FunDef = self.program.function(name).ok_or(format!("no function {name}"))?;
        if f.params.len() != args.len() {
            return Err(format!("arity {name}"));
        }
        if self.depth >= 256 {
            return Err("depth".into());
        }
        self.depth += 1;
        let mut env: HashMap<String, i64> = f.params.iter().cloned().zip(args).collect();
        let r = self.block(&f.body, &mut env);
        self.depth -= 1;
        match r? {
            Flow::Return(v) => Ok(v),
            Flow::Next => Ok(0),
        }
    }

    fn block(&mut self, b: &Block, env: &mut HashMap<String, i64>) -> Result<Flow, String> {
        for s in b {
            if let Flow::Return(v) = self.stmt(s, env)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Next)
    }

    fn stmt(&mut self, s: &Stmt, env: &mut HashMap<String, i64>) -> Result<Flow, String> {
        match &s.kind {
            StmtKind::Expr(e) => {
                self.expr(e, env)?;
            }
            StmtKind::Decl { name, init } => {
                let v = self.expr(init, env)?;
                env.insert(name.clone(), v);
            }
            StmtKind::Assign { name, value } => {
                let v = self.expr(value, env)?;
                match env.get_mut(name) {
                    Some(slot) => *slot = v,
                    None => return Err(format!("undeclared {name}")),
                }
            }
            StmtKind::If { cond, then_block, else_block } => {
                if self.expr(cond, env)? != 0 {
                    return self.block(then_block, env);
                } else if let Some(b) = else_block {
                    return self.block(b, env);
                }
            }
            StmtKind::While { cond, body } => {
                while self.expr(cond, env)? != 0 {
                    if let Flow::Return(v) = self.block(body, env)? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
            StmtKind::Return(e) => return Ok(Flow::Return(self.expr(e, env)?)),
        }
        Ok(Flow::Next)
    }

    fn expr(&mut self, e: &Expr, env: &mut HashMap<String, i64>) -> Result<i64, String> {
        Ok(match &e.kind {
            ExprKind::IntLit(v) => *v,
            ExprKind::Var(n) => *env.get(n).ok_or(format!("undeclared {n}"))?,
            ExprKind::Comma(a, b) => {
                self.expr(a, env)?;
                self.expr(b, env)?
            }
            ExprKind::Call { callee, args } => {
                let mut vals = Vec::new();
                for a in args {
                    vals.push(self.expr(a, env)?);
                }
                self.call(callee, vals)?
            }
            ExprKind::Binary { op: BinOp::And, lhs, rhs } => {
                i64::from(self.expr(lhs, env)? != 0 && self.expr(rhs, env)? != 0)
            }
            ExprKind::Binary { op: BinOp::Or, lhs, rhs } => {
                i64::from(self.expr(lhs, env)? != 0 || self.expr(rhs, env)? != 0)
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let a = self.expr(lhs, env)?;
                let b = self.expr(rhs, env)?;
                let ovf = || "overflow".to_string();
                match op {
                    BinOp::Add => a.checked_add(b).ok_or_else(ovf)?,
                    BinOp::Sub => a.checked_sub(b).ok_or_else(ovf)?,
                    BinOp::Mul => a.checked_mul(b).ok_or_else(ovf)?,
                    BinOp::Div => {
                        if b == 0 {
                            return Err("div0".into());
                        }
                        a.checked_div(b).ok_or_else(ovf)?
                    }
                    BinOp::Lt => i64::from(a < b),
                    BinOp::Le => i64::from(a <= b),
                    BinOp::Eq => i64::from(a == b),
                    BinOp::Ne => i64::from(a != b),
                    BinOp::Gt => i64::from(a > b),
                    BinOp::Ge => i64::from(a >= b),
                    BinOp::And | BinOp::Or => unreachable!(),
                }
            }
        })
    }
}

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

/// `(file name, source)` for every corpus program, sorted by name.
pub fn corpus() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "mc"))
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read_to_string(&p).expect("corpus file"))
        })
        .collect();
    out.sort();
    out
}

/// Counts Call nodes in the AST directly, as a second opinion on traversal.
pub fn count_calls(p: &Program) -> usize {
    fn expr(e: &Expr) -> usize {
        match &e.kind {
            ExprKind::IntLit(_) | ExprKind::Var(_) => 0,
            ExprKind::Binary { lhs, rhs, .. } => expr(lhs) + expr(rhs),
            ExprKind::Comma(a, b) => expr(a) + expr(b),
            ExprKind::Call { args, .. } => 1 + args.iter().map(expr).sum::<usize>(),
        }
    }
    fn block(b: &Block) -> usize {
        b.iter()
            .map(|s| match &s.kind {
                StmtKind::Expr(e) | StmtKind::Return(e) => expr(e),
                StmtKind::Decl { init: e, .. } | StmtKind::Assign { value: e, .. } => expr(e),
                StmtKind::If { cond, then_block, else_block } => {
                    expr(cond) + block(then_block) + else_block.as_ref().map_or(0, block)
                }
                StmtKind::While { cond, body } => expr(cond) + block(body),
            })
            .sum()
    }
    p.functions.iter().map(|f| block(&f.body)).sum()
}

const VARS: [&str; 4] = ["a", "b", "cnt", "x1"];
const FUNS: [&str; 3] = ["f", "g_2", "helper"];

fn p() -> Pos {
    Pos::default()
}

pub fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        any::<i64>().prop_map(Expr::int),
        (-50i64..50).prop_map(Expr::int),
        prop::sample::select(VARS.to_vec()).prop_map(Expr::var),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (prop::sample::select(BinOp::ALL.to_vec()), inner.clone(), inner.clone())
                .prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            (prop::sample::select(FUNS.to_vec()), prop::collection::vec(inner.clone(), 0..3))
                .prop_map(|(f, args)| Expr::call(f, args)),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::comma(a, b)),
        ]
    })
}

fn arb_block(depth: u32) -> BoxedStrategy<Block> {
    prop::collection::vec(arb_stmt(depth), 0..4).boxed()
}

pub fn arb_stmt(depth: u32) -> BoxedStrategy<Stmt> {
    let simple = prop_oneof![
        arb_expr().prop_map(StmtKind::Expr),
        (prop::sample::select(VARS.to_vec()), arb_expr())
            .prop_map(|(n, e)| StmtKind::Decl { name: n.to_string(), init: e }),
        (prop::sample::select(VARS.to_vec()), arb_expr())
            .prop_map(|(n, e)| StmtKind::Assign { name: n.to_string(), value: e }),
        arb_expr().prop_map(StmtKind::Return),
    ];
    let kind = if depth == 0 {
        simple.boxed()
    } else {
        prop_oneof![
            3 => simple,
            1 => (arb_expr(), arb_block(depth - 1), prop::option::of(arb_block(depth - 1)))
                .prop_map(|(cond, then_block, else_block)| StmtKind::If { cond, then_block, else_block }),
            1 => (arb_expr(), arb_block(depth - 1)).prop_map(|(cond, body)| StmtKind::While { cond, body }),
        ]
        .boxed()
    };
    kind.prop_map(|kind| Stmt { kind, pos: p() }).boxed()
}

pub fn arb_program() -> impl Strategy<Value = Program> {
    prop::collection::vec((prop::collection::btree_set(prop::sample::select(VARS.to_vec()), 0..3), arb_block(2)), 1..=3)
        .prop_map(|fs| Program {
            functions: fs
                .into_iter()
                .enumerate()
                .map(|(i, (params, body))| FunDef {
                    name: FUNS[i].to_string(),
                    params: params.into_iter().map(str::to_string).collect(),
                    body,
                    pos: p(),
                })
                .collect(),
        })
}
