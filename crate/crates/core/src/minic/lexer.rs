// SPDX-License-Identifier: Apache-2.0

use super::ast::Pos;
use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Int,
    If,
    Else,
    While,
    Return,
    Ident(String),
    /// Unsigned magnitude; the parser folds a leading `-`.
    Number(u64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
    EqEq,
    Ne,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Int => "`int`".into(),
            Tok::If => "`if`".into(),
            Tok::Else => "`else`".into(),
            Tok::While => "`while`".into(),
            Tok::Return => "`return`".into(),
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::Number(n) => format!("integer `{n}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Assign => "`=`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::EqEq => "`==`".into(),
            Tok::Ne => "`!=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::AndAnd => "`&&`".into(),
            Tok::OrOr => "`||`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1u32, 1u32);

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let pos = Pos::new(line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' {
            bump!();
            if chars.peek() == Some(&'/') {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            } else {
                out.push(Token { tok: Tok::Slash, pos });
            }
            continue;
        }
        if c.is_ascii_digit() {
            let mut text = String::new();
            while let Some(&d) = chars.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                text.push(d);
                bump!();
            }
            let value = text
                .parse::<u64>()
                .map_err(|_| ParseError::new(pos, "an integer literal that fits in 64 bits", format!("`{text}`")))?;
            out.push(Token { tok: Tok::Number(value), pos });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut text = String::new();
            while let Some(&d) = chars.peek() {
                if !(d.is_ascii_alphanumeric() || d == '_') {
                    break;
                }
                text.push(d);
                bump!();
            }
            let tok = match text.as_str() {
                "int" => Tok::Int,
                "if" => Tok::If,
                "else" => Tok::Else,
                "while" => Tok::While,
                "return" => Tok::Return,
                _ => Tok::Ident(text),
            };
            out.push(Token { tok, pos });
            continue;
        }
        bump!();
        let next = chars.peek().copied();
        let (tok, two) = match (c, next) {
            ('<', Some('=')) => (Tok::Le, true),
            ('>', Some('=')) => (Tok::Ge, true),
            ('=', Some('=')) => (Tok::EqEq, true),
            ('!', Some('=')) => (Tok::Ne, true),
            ('&', Some('&')) => (Tok::AndAnd, true),
            ('|', Some('|')) => (Tok::OrOr, true),
            ('<', _) => (Tok::Lt, false),
            ('>', _) => (Tok::Gt, false),
            ('=', _) => (Tok::Assign, false),
            ('(', _) => (Tok::LParen, false),
            (')', _) => (Tok::RParen, false),
            ('{', _) => (Tok::LBrace, false),
            ('}', _) => (Tok::RBrace, false),
            (',', _) => (Tok::Comma, false),
            (';', _) => (Tok::Semi, false),
            ('+', _) => (Tok::Plus, false),
            ('-', _) => (Tok::Minus, false),
            ('*', _) => (Tok::Star, false),
            _ => return Err(ParseError::new(pos, "a token", format!("character {c:?}"))),
        };
        if two {
            bump!();
        }
        out.push(Token { tok, pos });
    }
    out.push(Token { tok: Tok::Eof, pos: Pos::new(line, col) });
    Ok(out)
}
