// SPDX-License-Identifier: Apache-2.0

//! Table-driven AST rewriting.
//!
//! A [`TraverseTable`] holds two action slots per production: one run before
//! the node's children are traversed and one run after. Traversing a node
//! computes `post(traverse_children(pre(node)))`. The children traversed are
//! those of the node returned by the pre-action, so a pre-action that wraps
//! its node will meet the wrapped node again; rewrites that wrap belong in the
//! post slot.

use thiserror::Error;

use super::ast::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {message}")]
pub struct TransformError {
    pub pos: Pos,
    pub message: String,
}

impl TransformError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        Self { pos, message: message.into() }
    }
}

pub type ExprAction<'a> = Box<dyn FnMut(Expr) -> Result<Expr, TransformError> + 'a>;
pub type StmtAction<'a> = Box<dyn FnMut(Stmt) -> Result<Stmt, TransformError> + 'a>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Pre = 0,
    Post = 1,
}

pub struct TraverseTable<'a> {
    expr: [[Option<ExprAction<'a>>; 2]; ExprTag::COUNT],
    stmt: [[Option<StmtAction<'a>>; 2]; StmtTag::COUNT],
}

impl Default for TraverseTable<'_> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'a> TraverseTable<'a> {
    /// A table with every slot empty; traversing with it is the identity.
    pub fn new() -> Self {
        Self { expr: std::array::from_fn(|_| [None, None]), stmt: std::array::from_fn(|_| [None, None]) }
    }

    pub fn on_expr(
        mut self,
        tag: ExprTag,
        slot: Slot,
        action: impl FnMut(Expr) -> Result<Expr, TransformError> + 'a,
    ) -> Self {
        self.expr[tag.index()][slot as usize] = Some(Box::new(action));
        self
    }

    pub fn on_stmt(
        mut self,
        tag: StmtTag,
        slot: Slot,
        action: impl FnMut(Stmt) -> Result<Stmt, TransformError> + 'a,
    ) -> Self {
        self.stmt[tag.index()][slot as usize] = Some(Box::new(action));
        self
    }

    fn fire_expr(&mut self, slot: Slot, e: Expr) -> Result<Expr, TransformError> {
        match &mut self.expr[ExprTag::of(&e).index()][slot as usize] {
            Some(action) => action(e),
            None => Ok(e),
        }
    }

    fn fire_stmt(&mut self, slot: Slot, s: Stmt) -> Result<Stmt, TransformError> {
        match &mut self.stmt[StmtTag::of(&s).index()][slot as usize] {
            Some(action) => action(s),
            None => Ok(s),
        }
    }
}

/// Rewrites every statement and expression of `program` through `table`.
pub fn traverse(program: Program, table: &mut TraverseTable<'_>) -> Result<Program, TransformError> {
    let functions = program
        .functions
        .into_iter()
        .map(|f| Ok(FunDef { body: traverse_block(f.body, table)?, ..f }))
        .collect::<Result<_, TransformError>>()?;
    Ok(Program { functions })
}

fn traverse_block(block: Block, table: &mut TraverseTable<'_>) -> Result<Block, TransformError> {
    block.into_iter().map(|s| traverse_stmt(s, table)).collect()
}

pub fn traverse_stmt(stmt: Stmt, table: &mut TraverseTable<'_>) -> Result<Stmt, TransformError> {
    let stmt = table.fire_stmt(Slot::Pre, stmt)?;
    let pos = stmt.pos;
    let kind = match stmt.kind {
        StmtKind::Expr(e) => StmtKind::Expr(traverse_expr(e, table)?),
        StmtKind::Decl { name, init } => StmtKind::Decl { name, init: traverse_expr(init, table)? },
        StmtKind::Assign { name, value } => StmtKind::Assign { name, value: traverse_expr(value, table)? },
        StmtKind::If { cond, then_block, else_block } => StmtKind::If {
            cond: traverse_expr(cond, table)?,
            then_block: traverse_block(then_block, table)?,
            else_block: else_block.map(|b| traverse_block(b, table)).transpose()?,
        },
        StmtKind::While { cond, body } => {
            StmtKind::While { cond: traverse_expr(cond, table)?, body: traverse_block(body, table)? }
        }
        StmtKind::Return(e) => StmtKind::Return(traverse_expr(e, table)?),
    };
    table.fire_stmt(Slot::Post, Stmt { kind, pos })
}

pub fn traverse_expr(expr: Expr, table: &mut TraverseTable<'_>) -> Result<Expr, TransformError> {
    let expr = table.fire_expr(Slot::Pre, expr)?;
    let pos = expr.pos;
    let kind = match expr.kind {
        kind @ (ExprKind::IntLit(_) | ExprKind::Var(_)) => kind,
        ExprKind::Binary { op, lhs, rhs } => ExprKind::Binary {
            op,
            lhs: Box::new(traverse_expr(*lhs, table)?),
            rhs: Box::new(traverse_expr(*rhs, table)?),
        },
        ExprKind::Call { callee, args } => ExprKind::Call {
            callee,
            args: args.into_iter().map(|a| traverse_expr(a, table)).collect::<Result<_, _>>()?,
        },
        ExprKind::Comma(first, second) => {
            ExprKind::Comma(Box::new(traverse_expr(*first, table)?), Box::new(traverse_expr(*second, table)?))
        }
    };
    table.fire_expr(Slot::Post, Expr { kind, pos })
}
