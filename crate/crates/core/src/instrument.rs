// SPDX-License-Identifier: Apache-2.0

//! Probe insertion.
//!
//! Every probed function gets a dense integer ID. In [`Scope::AllCalls`] each
//! call `f(..)` is rewritten to `(__probe(id_f), f(..))`, so the probe runs
//! before the call and the expression keeps the call's value. In
//! [`Scope::DispatchEntry`] the source is left alone and the dispatcher probes
//! the handler ID just before handling each message.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::minic::{traverse, Expr, ExprKind, ExprTag, Pos, Program, Slot, TransformError, TraverseTable};

/// Name of the probe builtin inserted by the instrumenter.
pub const PROBE_FN: &str = "__probe";

pub type ProbeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scope {
    /// Only message handlers are counted, by the dispatcher.
    DispatchEntry,
    /// Every call site in the source is wrapped with a probe.
    #[default]
    AllCalls,
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(Scope::AllCalls),
            "dispatch" => Ok(Scope::DispatchEntry),
            other => Err(format!("unknown scope `{other}` (expected `all` or `dispatch`)")),
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::AllCalls => "all",
            Scope::DispatchEntry => "dispatch",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstrumentError {
    #[error("handler `{0}` is not defined in the program")]
    UnknownHandler(String),
    #[error("handler `{0}` registered twice")]
    DuplicateHandler(String),
    #[error("{0}: program already contains `__probe` calls")]
    AlreadyInstrumented(Pos),
    #[error("{0}: only call expressions can be wrapped")]
    NotACall(Pos),
    #[error("{0}: expression is already probed")]
    AlreadyProbed(Pos),
    #[error("probe id {id} exceeds the manifest size {n_funcs}")]
    IdOutOfRange { id: ProbeId, n_funcs: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("manifest line {line}: {message}")]
pub struct ManifestError {
    pub line: usize,
    pub message: String,
}

/// Probe ID to function name mapping. IDs are `0..n_funcs` with no gaps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    names: Vec<String>,
    index: HashMap<String, ProbeId>,
}

impl Manifest {
    /// Builds a manifest assigning IDs in the given order.
    pub fn from_names<I, S>(names: I) -> Result<Self, InstrumentError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut manifest = Manifest::default();
        for name in names {
            let name = name.into();
            if manifest.index.contains_key(&name) {
                return Err(InstrumentError::DuplicateHandler(name));
            }
            manifest.push(name);
        }
        Ok(manifest)
    }

    fn push(&mut self, name: String) -> ProbeId {
        let id = self.names.len() as ProbeId;
        self.index.insert(name.clone(), id);
        self.names.push(name);
        id
    }

    pub fn n_funcs(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: ProbeId) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn id_of(&self, name: &str) -> Option<ProbeId> {
        self.index.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn entries(&self) -> impl Iterator<Item = (ProbeId, &str)> {
        self.names.iter().enumerate().map(|(i, n)| (i as ProbeId, n.as_str()))
    }

    /// `<id>\t<name>\n` per entry, ascending.
    pub fn to_file_string(&self) -> String {
        self.entries().map(|(id, name)| format!("{id}\t{name}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self, ManifestError> {
        let mut manifest = Manifest::default();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let err = |message: String| ManifestError { line: lineno, message };
            let (id, name) = line.split_once('\t').ok_or_else(|| err("expected `<id>\\t<name>`".into()))?;
            let id: usize = id.parse().map_err(|_| err(format!("bad probe id `{id}`")))?;
            if id != manifest.n_funcs() {
                return Err(err(format!("expected id {}, found {id}", manifest.n_funcs())));
            }
            if name.is_empty() || manifest.index.contains_key(name) {
                return Err(err(format!("empty or duplicate name `{name}`")));
            }
            manifest.push(name.to_string());
        }
        Ok(manifest)
    }
}

pub fn is_probe_call(expr: &Expr) -> bool {
    expr.callee() == Some(PROBE_FN)
}

fn is_probed(expr: &Expr) -> bool {
    matches!(&expr.kind, ExprKind::Comma(first, _) if is_probe_call(first))
}

/// Position of the first `__probe` call in the program, if any.
pub fn find_probe(program: &Program) -> Option<Pos> {
    let mut found = None;
    let mut table = TraverseTable::new().on_expr(ExprTag::Call, Slot::Pre, |e| {
        if found.is_none() && is_probe_call(&e) {
            found = Some(e.pos);
        }
        Ok(e)
    });
    let _ = traverse(program.clone(), &mut table);
    drop(table);
    found
}

/// Assigns probe IDs without rewriting the program.
///
/// `AllCalls` numbers callees by first textual occurrence; `DispatchEntry`
/// numbers `handlers` in registration order.
pub fn assign_probe_ids(program: &Program, scope: Scope, handlers: &[String]) -> Result<Manifest, InstrumentError> {
    match scope {
        Scope::DispatchEntry => {
            for h in handlers {
                if program.function(h).is_none() {
                    return Err(InstrumentError::UnknownHandler(h.clone()));
                }
            }
            Manifest::from_names(handlers.iter().cloned())
        }
        Scope::AllCalls => {
            let mut manifest = Manifest::default();
            let mut table = TraverseTable::new().on_expr(ExprTag::Call, Slot::Pre, |e| {
                if let Some(callee) = e.callee() {
                    if callee != PROBE_FN && manifest.id_of(callee).is_none() {
                        manifest.push(callee.to_string());
                    }
                }
                Ok(e)
            });
            let _ = traverse(program.clone(), &mut table);
            drop(table);
            Ok(manifest)
        }
    }
}

/// `__probe(id)`.
pub fn make_probe_call(id: ProbeId) -> Expr {
    Expr::call(PROBE_FN, vec![Expr::int(i64::from(id))])
}

/// Replaces `call` with `(__probe(id), call)`.
pub fn wrap_call(call: Expr, id: ProbeId) -> Result<Expr, InstrumentError> {
    if is_probed(&call) {
        return Err(InstrumentError::AlreadyProbed(call.pos));
    }
    match call.callee() {
        None => Err(InstrumentError::NotACall(call.pos)),
        Some(PROBE_FN) => Err(InstrumentError::AlreadyProbed(call.pos)),
        Some(_) => {
            let pos = call.pos;
            let mut probe = make_probe_call(id);
            probe.pos = pos;
            if let ExprKind::Call { args, .. } = &mut probe.kind {
                args[0].pos = pos;
            }
            let mut wrapped = Expr::comma(probe, call);
            wrapped.pos = pos;
            Ok(wrapped)
        }
    }
}

/// Instruments `program` for the given scope and returns it with its manifest.
///
/// Programs that already contain probe calls are refused.
pub fn instrument(program: Program, scope: Scope, handlers: &[String]) -> Result<(Program, Manifest), InstrumentError> {
    if let Some(pos) = find_probe(&program) {
        return Err(InstrumentError::AlreadyInstrumented(pos));
    }
    let manifest = assign_probe_ids(&program, scope, handlers)?;
    if scope == Scope::DispatchEntry {
        return Ok((program, manifest));
    }
    // Post-order: arguments are rewritten before their enclosing call.
    let mut table = TraverseTable::new().on_expr(ExprTag::Call, Slot::Post, |e| {
        let callee = e.callee().unwrap_or_default();
        let id = manifest
            .id_of(callee)
            .ok_or_else(|| TransformError::new(e.pos, format!("`{callee}` missing from manifest")))?;
        wrap_call(e, id).map_err(|err| TransformError::new(Pos::default(), err.to_string()))
    });
    let out = traverse(program, &mut table).expect("every callee was assigned an id");
    drop(table);
    Ok((out, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minic::{parse, print, print_expr, print_stmt};

    fn all(src: &str) -> (Program, Manifest) {
        instrument(parse(src).unwrap(), Scope::AllCalls, &[]).unwrap()
    }

    #[test]
    fn ids_by_first_textual_occurrence() {
        let p = parse("int main(){ f(); g(); f(); return 0; }").unwrap();
        let m = assign_probe_ids(&p, Scope::AllCalls, &[]).unwrap();
        assert_eq!(m.names(), ["f", "g"]);
    }

    #[test]
    fn call_free_program_is_untouched() {
        let src = "int main(){ int x = 1; while (x < 3) { x = x + 1; } return x; }";
        let (p, m) = all(src);
        assert_eq!(p, parse(src).unwrap());
        assert_eq!(m.n_funcs(), 0);
    }

    #[test]
    fn probe_call_shape() {
        assert_eq!(make_probe_call(0), Expr::call("__probe", vec![Expr::int(0)]));
        assert_eq!(make_probe_call(41), Expr::call("__probe", vec![Expr::int(41)]));
        assert_eq!(print_expr(&make_probe_call(7)), "__probe(7)");
    }

    #[test]
    fn wrap_call_puts_probe_first() {
        let w = wrap_call(Expr::call("f", vec![]), 0).unwrap();
        assert_eq!(print_expr(&w), "(__probe(0), f())");
        assert_eq!(wrap_call(w, 0), Err(InstrumentError::AlreadyProbed(Pos::default())));
        assert!(matches!(wrap_call(Expr::int(1), 0), Err(InstrumentError::NotACall(_))));
        assert!(matches!(wrap_call(make_probe_call(3), 0), Err(InstrumentError::AlreadyProbed(_))));
    }

    #[test]
    fn single_call_statement() {
        let (p, m) = all("int main(){ f(); }");
        assert_eq!(print_stmt(&p.functions[0].body[0]), "(__probe(0), f());");
        assert_eq!(m.to_file_string(), "0\tf\n");
    }

    #[test]
    fn nested_call_arguments_first() {
        let (p, m) = all("int main(){ f(g()); }");
        assert_eq!(print_stmt(&p.functions[0].body[0]), "(__probe(0), f((__probe(1), g())));");
        assert_eq!(m.names(), ["f", "g"]);
    }

    #[test]
    fn reinstrumenting_is_refused() {
        let (p, _) = all("int main(){ f(); }");
        assert!(matches!(instrument(p, Scope::AllCalls, &[]), Err(InstrumentError::AlreadyInstrumented(_))));
    }

    #[test]
    fn dispatch_scope_keeps_source() {
        let src = "int a(){return 1;} int b(){return a();}";
        let handlers = vec!["b".to_string(), "a".to_string()];
        let (p, m) = instrument(parse(src).unwrap(), Scope::DispatchEntry, &handlers).unwrap();
        assert_eq!(print(&p), print(&parse(src).unwrap()));
        assert_eq!(m.names(), ["b", "a"]);
        let err = assign_probe_ids(&p, Scope::DispatchEntry, &["zz".into()]).unwrap_err();
        assert_eq!(err, InstrumentError::UnknownHandler("zz".into()));
    }

    #[test]
    fn manifest_file_round_trip_and_errors() {
        let m = Manifest::from_names(["vol_up", "vol_down", "txt_page_poll"]).unwrap();
        let text = m.to_file_string();
        assert_eq!(text, "0\tvol_up\n1\tvol_down\n2\ttxt_page_poll\n");
        assert_eq!(Manifest::parse(&text).unwrap(), m);
        assert_eq!(Manifest::parse("1\tf\n").unwrap_err().line, 1);
        assert!(Manifest::parse("0\tf\n1\tf\n").is_err());
        assert!(Manifest::parse("0 f\n").is_err());
        assert!(Manifest::from_names(["a", "a"]).is_err());
    }

    #[test]
    fn scope_parsing() {
        assert_eq!("all".parse::<Scope>().unwrap(), Scope::AllCalls);
        assert_eq!("dispatch".parse::<Scope>().unwrap(), Scope::DispatchEntry);
        assert!("entry".parse::<Scope>().is_err());
    }
}
