// SPDX-License-Identifier: Apache-2.0

//! Mini-C abstract syntax tree.
//!
//! Every statement and expression carries the source position it was parsed
//! from. Positions are metadata: they never take part in equality, so two
//! trees compare equal when they have the same shape and contents.

use std::fmt;

/// 1-based source position.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub const fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }
}

impl PartialEq for Pos {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub functions: Vec<FunDef>,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunDef> {
        self.functions.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Block,
    pub pos: Pos,
}

pub type Block = Vec<Stmt>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Expr(Expr),
    Decl { name: String, init: Expr },
    Assign { name: String, value: Expr },
    If { cond: Expr, then_block: Block, else_block: Option<Block> },
    While { cond: Expr, body: Block },
    Return(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    IntLit(i64),
    Var(String),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        callee: String,
        args: Vec<Expr>,
    },
    /// `(first, second)`: evaluates `first`, discards it, yields `second`.
    Comma(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Eq,
    Ne,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub const ALL: [BinOp; 12] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::And,
        BinOp::Or,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength, C ordering. Higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Self {
        Self { kind, pos }
    }

    pub fn int(value: i64) -> Self {
        Self::new(ExprKind::IntLit(value), Pos::default())
    }

    pub fn var(name: impl Into<String>) -> Self {
        Self::new(ExprKind::Var(name.into()), Pos::default())
    }

    pub fn call(callee: impl Into<String>, args: Vec<Expr>) -> Self {
        Self::new(ExprKind::Call { callee: callee.into(), args }, Pos::default())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        let pos = lhs.pos;
        Self::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, pos)
    }

    pub fn comma(first: Expr, second: Expr) -> Self {
        let pos = second.pos;
        Self::new(ExprKind::Comma(Box::new(first), Box::new(second)), pos)
    }

    pub fn callee(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Call { callee, .. } => Some(callee),
            _ => None,
        }
    }
}

impl Stmt {
    pub fn new(kind: StmtKind, pos: Pos) -> Self {
        Self { kind, pos }
    }
}

/// Production tags for expressions; one slot pair per tag in a traverse table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExprTag {
    IntLit,
    Var,
    Binary,
    Call,
    Comma,
}

impl ExprTag {
    pub const COUNT: usize = 5;
    pub const ALL: [ExprTag; 5] = [ExprTag::IntLit, ExprTag::Var, ExprTag::Binary, ExprTag::Call, ExprTag::Comma];

    pub fn of(expr: &Expr) -> Self {
        match expr.kind {
            ExprKind::IntLit(_) => ExprTag::IntLit,
            ExprKind::Var(_) => ExprTag::Var,
            ExprKind::Binary { .. } => ExprTag::Binary,
            ExprKind::Call { .. } => ExprTag::Call,
            ExprKind::Comma(..) => ExprTag::Comma,
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

/// Production tags for statements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StmtTag {
    Expr,
    Decl,
    Assign,
    If,
    While,
    Return,
}

impl StmtTag {
    pub const COUNT: usize = 6;
    pub const ALL: [StmtTag; 6] =
        [StmtTag::Expr, StmtTag::Decl, StmtTag::Assign, StmtTag::If, StmtTag::While, StmtTag::Return];

    pub fn of(stmt: &Stmt) -> Self {
        match stmt.kind {
            StmtKind::Expr(_) => StmtTag::Expr,
            StmtKind::Decl { .. } => StmtTag::Decl,
            StmtKind::Assign { .. } => StmtTag::Assign,
            StmtKind::If { .. } => StmtTag::If,
            StmtKind::While { .. } => StmtTag::While,
            StmtKind::Return(_) => StmtTag::Return,
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}
