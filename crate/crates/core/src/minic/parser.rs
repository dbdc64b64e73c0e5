// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

/// Parses Mini-C source text into a [`Program`].
pub fn parse(src: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(src)?;
    let mut parser = Parser { tokens, at: 0 };
    parser.program()
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn peek_nth(&self, n: usize) -> &Tok {
        let i = (self.at + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        tok
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        ParseError::new(self.pos(), expected, self.peek().describe())
    }

    fn expect(&mut self, want: Tok) -> Result<Pos, ParseError> {
        if *self.peek() == want {
            Ok(self.advance().pos)
        } else {
            Err(self.unexpected(&want.describe()))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let pos = self.advance().pos;
                Ok((name, pos))
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut functions: Vec<FunDef> = Vec::new();
        let mut seen = HashSet::new();
        while *self.peek() != Tok::Eof {
            let f = self.fundef()?;
            if !seen.insert(f.name.clone()) {
                return Err(ParseError::new(
                    f.pos,
                    "a unique function name",
                    format!("duplicate function `{}`", f.name),
                ));
            }
            functions.push(f);
        }
        Ok(Program { functions })
    }

    fn fundef(&mut self) -> Result<FunDef, ParseError> {
        let pos = self.expect(Tok::Int)?;
        let (name, _) = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                self.expect(Tok::Int)?;
                let (param, ppos) = self.ident()?;
                if params.contains(&param) {
                    return Err(ParseError::new(
                        ppos,
                        "a unique parameter name",
                        format!("duplicate parameter `{param}`"),
                    ));
                }
                params.push(param);
                if *self.peek() != Tok::Comma {
                    break;
                }
                self.advance();
            }
        }
        self.expect(Tok::RParen)?;
        let body = self.block()?;
        Ok(FunDef { name, params, body, pos })
    }

    fn block(&mut self) -> Result<Block, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return Err(self.unexpected("`}`"));
            }
            stmts.push(self.stmt()?);
        }
        self.advance();
        Ok(stmts)
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::Int => {
                self.advance();
                let (name, _) = self.ident()?;
                self.expect(Tok::Assign)?;
                let init = self.expr()?;
                self.expect(Tok::Semi)?;
                StmtKind::Decl { name, init }
            }
            Tok::If => {
                self.advance();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let then_block = self.block()?;
                let else_block = if *self.peek() == Tok::Else {
                    self.advance();
                    Some(self.block()?)
                } else {
                    None
                };
                StmtKind::If { cond, then_block, else_block }
            }
            Tok::While => {
                self.advance();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let body = self.block()?;
                StmtKind::While { cond, body }
            }
            Tok::Return => {
                self.advance();
                let value = self.expr()?;
                self.expect(Tok::Semi)?;
                StmtKind::Return(value)
            }
            Tok::Ident(name) if *self.peek_nth(1) == Tok::Assign => {
                self.advance();
                self.advance();
                let value = self.expr()?;
                self.expect(Tok::Semi)?;
                StmtKind::Assign { name, value }
            }
            _ => {
                let e = self.expr()?;
                self.expect(Tok::Semi)?;
                StmtKind::Expr(e)
            }
        };
        Ok(Stmt::new(kind, pos))
    }

    /// Comma-free expression.
    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary(1)
    }

    fn binary_op(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::EqEq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::AndAnd => BinOp::And,
            Tok::OrOr => BinOp::Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.primary()?;
        while let Some(op) = self.binary_op() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let pos = self.advance().pos;
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, pos);
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Number(n) => {
                self.advance();
                let value = i64::try_from(n)
                    .map_err(|_| ParseError::new(pos, "an integer literal within 64-bit range", format!("`{n}`")))?;
                Ok(Expr::new(ExprKind::IntLit(value), pos))
            }
            Tok::Minus => {
                self.advance();
                match *self.peek() {
                    Tok::Number(n) if n <= i64::MAX as u64 + 1 => {
                        self.advance();
                        let value = (n as i128).wrapping_neg() as i64;
                        Ok(Expr::new(ExprKind::IntLit(value), pos))
                    }
                    Tok::Number(n) => {
                        Err(ParseError::new(self.pos(), "an integer literal within 64-bit range", format!("`-{n}`")))
                    }
                    _ => Err(self.unexpected("an integer literal after `-`")),
                }
            }
            Tok::Ident(name) => {
                self.advance();
                if *self.peek() != Tok::LParen {
                    return Ok(Expr::new(ExprKind::Var(name), pos));
                }
                self.advance();
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        args.push(self.expr()?);
                        if *self.peek() != Tok::Comma {
                            break;
                        }
                        self.advance();
                    }
                }
                self.expect(Tok::RParen)?;
                Ok(Expr::new(ExprKind::Call { callee: name, args }, pos))
            }
            Tok::LParen => {
                self.advance();
                let mut e = self.expr()?;
                while *self.peek() == Tok::Comma {
                    self.advance();
                    let second = self.expr()?;
                    e = Expr::new(ExprKind::Comma(Box::new(e), Box::new(second)), pos);
                }
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => Err(self.unexpected("an expression")),
        }
    }
}
