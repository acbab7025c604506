// SPDX-License-Identifier: Apache-2.0

//! S-expression surface syntax.
//!
//! ```text
//! file    ::= decl* formula
//! decl    ::= (declare NAME order K [predicate] [bool-args I ...])
//!           | (define NAME X)
//! formula ::= true | false | NAME | (not F) | (and F F ...) | (or F F ...)
//!           | (=> F F) | (implies F F) | (iff F F) | (= T T) | (= F F) | (NAME X ...)
//! term    ::= NAME | (ite F T T) | (NAME X ...)
//! ```
//!
//! `and`/`or` with more than two operands fold to the left. `=>`, `implies`
//! and `iff` are rewritten into `not`/`or`/`and` while parsing, and `=` between
//! two formulas means `iff`. Undeclared symbols take their kind from the
//! position they first appear in and their argument kinds from the syntax of
//! their first arguments (ambiguous arguments default to terms). `;` starts a
//! comment that runs to the end of the line.
//!
//! `(define NAME X)` names a formula or term for the rest of the input; using
//! the name denotes the very same node. Names must not collide with symbols.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::expr::{NodeId, Sort, Store, SymbolKind};

const KEYWORDS: &[&str] = &[
    "true", "false", "not", "and", "or", "=", "=>", "implies", "iff", "ite", "declare", "define",
];

#[derive(Clone, Debug)]
enum Sexp {
    Atom(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn pos(&self) -> usize {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }
}

struct Reader<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn error(&self, pos: usize, message: impl Into<String>) -> Error {
        syntax_error(self.text, pos, message)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c == b';' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn read_all(&mut self) -> Result<Vec<Sexp>> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            if self.pos >= self.bytes.len() {
                return Ok(out);
            }
            out.push(self.read()?);
        }
    }

    fn read(&mut self) -> Result<Sexp> {
        self.skip_ws();
        let start = self.pos;
        match self.bytes.get(self.pos) {
            None => Err(self.error(start, "unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.bytes.get(self.pos) {
                        None => return Err(self.error(start, "unclosed parenthesis")),
                        Some(b')') => {
                            self.pos += 1;
                            return Ok(Sexp::List(items, start));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(b')') => Err(self.error(start, "unexpected `)`")),
            Some(_) => {
                let tok_start = self.pos;
                while self.pos < self.bytes.len() {
                    let c = self.bytes[self.pos];
                    if c.is_ascii_whitespace() || c == b'(' || c == b')' || c == b';' {
                        break;
                    }
                    self.pos += 1;
                }
                let tok = &self.text[tok_start..self.pos];
                if !is_token(tok) {
                    return Err(self.error(tok_start, format!("invalid token `{tok}`")));
                }
                Ok(Sexp::Atom(tok.to_string(), tok_start))
            }
        }
    }
}

fn is_identifier(tok: &str) -> bool {
    let mut chars = tok.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_token(tok: &str) -> bool {
    tok == "=" || tok == "=>" || tok == "bool-args" || is_identifier(tok) || tok.bytes().all(|b| b.is_ascii_digit())
}

fn syntax_error(text: &str, pos: usize, message: impl Into<String>) -> Error {
    let before = &text[..pos.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

/// Parses a complete source text into `store` and returns the formula root.
pub fn parse(store: &mut Store, text: &str) -> Result<NodeId> {
    let forms = Reader {
        text,
        bytes: text.as_bytes(),
        pos: 0,
    }
    .read_all()?;
    let mut b = Builder {
        store,
        text,
        defs: HashMap::new(),
    };
    let mut root = None;
    for form in &forms {
        if let Sexp::List(items, _) = form {
            if matches!(items.first(), Some(Sexp::Atom(h, _)) if h == "declare") {
                if root.is_some() {
                    return Err(b.err(form, "declarations must precede the formula"));
                }
                b.declaration(items, form.pos())?;
                continue;
            }
            if matches!(items.first(), Some(Sexp::Atom(h, _)) if h == "define") {
                if root.is_some() {
                    return Err(b.err(form, "definitions must precede the formula"));
                }
                b.definition(form, items)?;
                continue;
            }
        }
        if root.is_some() {
            return Err(b.err(form, "more than one formula in input"));
        }
        root = Some(b.formula(form)?);
    }
    root.ok_or_else(|| syntax_error(text, text.len(), "no formula in input"))
}

/// Parses a single formula with no declarations into a fresh store.
pub fn parse_formula(text: &str) -> Result<(Store, NodeId)> {
    let mut store = Store::new();
    let root = parse(&mut store, text)?;
    Ok((store, root))
}

struct Builder<'s, 't> {
    store: &'s mut Store,
    text: &'t str,
    defs: HashMap<String, NodeId>,
}

impl Builder<'_, '_> {
    fn err(&self, at: &Sexp, message: impl Into<String>) -> Error {
        syntax_error(self.text, at.pos(), message)
    }

    fn declaration(&mut self, items: &[Sexp], pos: usize) -> Result<()> {
        let bad = |b: &Self, at: usize| {
            syntax_error(
                b.text,
                at,
                "expected (declare NAME order K [predicate] [bool-args I ...])",
            )
        };
        let name = match items.get(1) {
            Some(Sexp::Atom(n, _)) if is_identifier(n) && !KEYWORDS.contains(&n.as_str()) => n,
            _ => return Err(bad(self, pos)),
        };
        match items.get(2) {
            Some(Sexp::Atom(k, _)) if k == "order" => {}
            _ => return Err(bad(self, pos)),
        }
        let order: usize = match items.get(3) {
            Some(Sexp::Atom(k, p)) => k.parse().map_err(|_| bad(self, *p))?,
            _ => return Err(bad(self, pos)),
        };
        let mut kind = SymbolKind::Function;
        let mut sorts = vec![Sort::Term; order];
        let mut i = 4;
        while i < items.len() {
            match &items[i] {
                Sexp::Atom(k, _) if k == "predicate" => kind = SymbolKind::Predicate,
                Sexp::Atom(k, _) if k == "function" => kind = SymbolKind::Function,
                Sexp::Atom(k, _) if k == "bool-args" => {
                    while let Some(Sexp::Atom(n, p)) = items.get(i + 1) {
                        let Ok(idx) = n.parse::<usize>() else { break };
                        if idx == 0 || idx > order {
                            return Err(syntax_error(
                                self.text,
                                *p,
                                format!("bool-args position {idx} outside 1..={order}"),
                            ));
                        }
                        sorts[idx - 1] = Sort::Formula;
                        i += 1;
                    }
                }
                other => return Err(bad(self, other.pos())),
            }
            i += 1;
        }
        self.store.declare(name, kind, &sorts)?;
        Ok(())
    }

    fn definition(&mut self, form: &Sexp, items: &[Sexp]) -> Result<()> {
        let name = match items {
            [_, Sexp::Atom(n, _), _] if is_identifier(n) && !KEYWORDS.contains(&n.as_str()) => n,
            _ => return Err(self.err(form, "expected (define NAME EXPR)")),
        };
        if self.defs.contains_key(name) || self.store.symbol_id(name).is_some() {
            return Err(self.err(form, format!("`{name}` is already defined")));
        }
        let node = match self.infer(&items[2]) {
            Some(Sort::Formula) => self.formula(&items[2])?,
            _ => self.term(&items[2])?,
        };
        if self.store.symbol_id(name).is_some() {
            return Err(self.err(form, format!("`{name}` is used as a symbol in its own definition")));
        }
        self.defs.insert(name.clone(), node);
        Ok(())
    }

    /// A defined name used as `want`, if `name` is one.
    fn defined(&self, sx: &Sexp, name: &str, want: Sort) -> Option<Result<NodeId>> {
        let &node = self.defs.get(name)?;
        if self.store.sort(node) == want {
            return Some(Ok(node));
        }
        let (is, expected) = match want {
            Sort::Term => ("a formula", "a term"),
            Sort::Formula => ("a term", "a formula"),
        };
        Some(Err(
            self.kind_err(sx, format!("`{name}` names {is} but {expected} is expected"))
        ))
    }

    /// Sort an expression must have, if its syntax alone decides it.
    fn infer(&self, sx: &Sexp) -> Option<Sort> {
        match sx {
            Sexp::Atom(a, _) => match a.as_str() {
                "true" | "false" => Some(Sort::Formula),
                _ if self.defs.contains_key(a) => Some(self.store.sort(self.defs[a])),
                _ => self.store.symbol_id(a).map(|s| self.store.symbol(s).result_sort()),
            },
            Sexp::List(items, _) => match items.first() {
                Some(Sexp::Atom(h, _)) => match h.as_str() {
                    "not" | "and" | "or" | "=" | "=>" | "implies" | "iff" => Some(Sort::Formula),
                    "ite" => Some(Sort::Term),
                    _ => self.store.symbol_id(h).map(|s| self.store.symbol(s).result_sort()),
                },
                _ => None,
            },
        }
    }

    fn kind_err(&self, at: &Sexp, message: impl Into<String>) -> Error {
        Error::Kind(format!("{} at {}", message.into(), position(self.text, at.pos())))
    }

    fn expect_args<'a>(&self, sx: &Sexp, items: &'a [Sexp], n: usize) -> Result<&'a [Sexp]> {
        if items.len() != n + 1 {
            return Err(self.err(
                sx,
                format!("`{}` takes {n} operand(s), found {}", head_name(items), items.len() - 1),
            ));
        }
        Ok(&items[1..])
    }

    fn formula(&mut self, sx: &Sexp) -> Result<NodeId> {
        match sx {
            Sexp::Atom(a, _) => match a.as_str() {
                "true" => Ok(self.store.tt()),
                "false" => Ok(self.store.ff()),
                _ if KEYWORDS.contains(&a.as_str()) || !is_identifier(a) => {
                    Err(self.err(sx, format!("unexpected `{a}`")))
                }
                _ => match self.defined(sx, a, Sort::Formula) {
                    Some(r) => r,
                    None => self.application(sx, a, &[], Sort::Formula),
                },
            },
            Sexp::List(items, _) => {
                let head = match items.first() {
                    Some(Sexp::Atom(h, _)) => h.as_str(),
                    _ => return Err(self.err(sx, "expected an operator or symbol name")),
                };
                match head {
                    "not" => {
                        let a = self.expect_args(sx, items, 1)?;
                        let f = self.formula(&a[0])?;
                        Ok(self.store.not(f))
                    }
                    "and" | "or" => {
                        if items.len() < 2 {
                            return Ok(if head == "and" {
                                self.store.tt()
                            } else {
                                self.store.ff()
                            });
                        }
                        let mut ops = Vec::with_capacity(items.len() - 1);
                        for it in &items[1..] {
                            ops.push(self.formula(it)?);
                        }
                        Ok(if head == "and" {
                            self.store.and_all(ops)
                        } else {
                            self.store.or_all(ops)
                        })
                    }
                    "=>" | "implies" => {
                        let a = self.expect_args(sx, items, 2)?;
                        let l = self.formula(&a[0])?;
                        let r = self.formula(&a[1])?;
                        Ok(self.store.implies(l, r))
                    }
                    "iff" => {
                        let a = self.expect_args(sx, items, 2)?;
                        let l = self.formula(&a[0])?;
                        let r = self.formula(&a[1])?;
                        Ok(self.store.iff(l, r))
                    }
                    "=" => {
                        let a = self.expect_args(sx, items, 2)?;
                        let boolean =
                            self.infer(&a[0]) == Some(Sort::Formula) || self.infer(&a[1]) == Some(Sort::Formula);
                        if boolean {
                            let l = self.formula(&a[0])?;
                            let r = self.formula(&a[1])?;
                            Ok(self.store.iff(l, r))
                        } else {
                            let l = self.term(&a[0])?;
                            let r = self.term(&a[1])?;
                            Ok(self.store.eq(l, r))
                        }
                    }
                    "ite" => Err(self.kind_err(sx, "`ite` builds a term, but a formula is expected")),
                    "true" | "false" | "declare" | "define" => Err(self.err(sx, format!("`{head}` cannot be applied"))),
                    _ => self.application(sx, head, &items[1..], Sort::Formula),
                }
            }
        }
    }

    fn term(&mut self, sx: &Sexp) -> Result<NodeId> {
        match sx {
            Sexp::Atom(a, _) => match a.as_str() {
                "true" | "false" => Err(self.kind_err(sx, format!("`{a}` is a formula, but a term is expected"))),
                _ if KEYWORDS.contains(&a.as_str()) || !is_identifier(a) => {
                    Err(self.err(sx, format!("unexpected `{a}`")))
                }
                _ => match self.defined(sx, a, Sort::Term) {
                    Some(r) => r,
                    None => self.application(sx, a, &[], Sort::Term),
                },
            },
            Sexp::List(items, _) => {
                let head = match items.first() {
                    Some(Sexp::Atom(h, _)) => h.as_str(),
                    _ => return Err(self.err(sx, "expected an operator or symbol name")),
                };
                match head {
                    "ite" => {
                        let a = self.expect_args(sx, items, 3)?;
                        let c = self.formula(&a[0])?;
                        let t = self.term(&a[1])?;
                        let e = self.term(&a[2])?;
                        Ok(self.store.ite(c, t, e))
                    }
                    "not" | "and" | "or" | "=" | "=>" | "implies" | "iff" => {
                        Err(self.kind_err(sx, format!("`{head}` builds a formula, but a term is expected")))
                    }
                    "true" | "false" | "declare" | "define" => Err(self.err(sx, format!("`{head}` cannot be applied"))),
                    _ => self.application(sx, head, &items[1..], Sort::Term),
                }
            }
        }
    }

    fn application(&mut self, sx: &Sexp, name: &str, args: &[Sexp], want: Sort) -> Result<NodeId> {
        if self.defs.contains_key(name) {
            return Err(self.err(sx, format!("`{name}` is a defined name and takes no arguments")));
        }
        let sym = match self.store.symbol_id(name) {
            Some(id) => {
                let s = self.store.symbol(id);
                if s.result_sort() != want {
                    let (is, expected) = match want {
                        Sort::Term => ("a predicate", "a term"),
                        Sort::Formula => ("a function", "a formula"),
                    };
                    return Err(self.kind_err(sx, format!("`{name}` is {is} but {expected} is expected")));
                }
                if s.order() != args.len() {
                    return Err(Error::Arity {
                        symbol: name.to_string(),
                        expected: s.order(),
                        found: args.len(),
                    });
                }
                id
            }
            None => {
                let sorts: Vec<Sort> = args.iter().map(|a| self.infer(a).unwrap_or(Sort::Term)).collect();
                let kind = match want {
                    Sort::Term => SymbolKind::Function,
                    Sort::Formula => SymbolKind::Predicate,
                };
                self.store.declare(name, kind, &sorts)?
            }
        };
        let sorts = self.store.symbol(sym).arg_sorts.clone();
        let mut kids = Vec::with_capacity(args.len());
        for (a, k) in args.iter().zip(sorts) {
            kids.push(match k {
                Sort::Term => self.term(a)?,
                Sort::Formula => self.formula(a)?,
            });
        }
        Ok(self.store.apply(sym, &kids))
    }
}

fn head_name(items: &[Sexp]) -> String {
    match items.first() {
        Some(Sexp::Atom(h, _)) => h.clone(),
        _ => "?".into(),
    }
}

fn position(text: &str, pos: usize) -> String {
    match syntax_error(text, pos, "") {
        Error::Syntax { line, column, .. } => format!("line {line}, column {column}"),
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Node;

    const FEG: &str = "(or (not (= x y)) (= (h (g x) (g (g x))) (h (g y) (g (g x)))))";

    #[test]
    fn running_example_has_seven_application_terms() {
        let (s, root) = parse_formula(FEG).unwrap();
        let names: Vec<String> = s.application_terms(root).into_iter().map(|t| s.display(t)).collect();
        assert_eq!(
            names,
            [
                "x",
                "y",
                "(g x)",
                "(g (g x))",
                "(h (g x) (g (g x)))",
                "(g y)",
                "(h (g y) (g (g x)))"
            ]
        );
    }

    #[test]
    fn equal_sides_share_a_node() {
        let (s, root) = parse_formula("(= x x)").unwrap();
        match s.node(root) {
            Node::Eq([a, b]) => assert_eq!(a, b),
            other => panic!("{other:?}"),
        }
        assert_eq!(s.application_terms(root).len(), 1);
    }

    #[test]
    fn ite_with_constant_control() {
        let (s, root) = parse_formula("(= (ite true x y) x)").unwrap();
        let Node::Eq([ite, _]) = s.node(root) else { panic!() };
        let Node::Ite([c, _, _]) = s.node(*ite) else { panic!() };
        assert_eq!(s.node(*c), &Node::True);
    }

    #[test]
    fn shared_argument_counted_once() {
        let (s, root) = parse_formula("(p (f a) (f a))").unwrap();
        assert_eq!(s.application_terms(root).len(), 2);
    }

    #[test]
    fn implication_and_iff_are_desugared() {
        let (s, root) = parse_formula("(=> a b)").unwrap();
        assert_eq!(s.display(root), "(or (not a) b)");
        let (s, root) = parse_formula("(iff a b)").unwrap();
        assert_eq!(s.display(root), "(and (or (not a) b) (or (not b) a))");
        let (s, root) = parse_formula("(= (not a) b)").unwrap();
        assert_eq!(s.display(root), "(and (or (not (not a)) b) (or (not b) (not a)))");
    }

    #[test]
    fn nary_connectives_fold_left() {
        let (s, root) = parse_formula("(and a b c)").unwrap();
        assert_eq!(s.display(root), "(and (and a b) c)");
    }

    #[test]
    fn syntax_errors_report_positions() {
        let err = parse_formula("(and a\n  (or b").unwrap_err();
        assert_eq!(
            err,
            Error::Syntax {
                line: 2,
                column: 3,
                message: "unclosed parenthesis".into()
            }
        );
        let err = parse_formula("(= x $)").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 1, column: 6, .. }));
    }

    #[test]
    fn arity_mismatch_is_reported() {
        let err = parse_formula("(= (f x) (f x y))").unwrap_err();
        assert_eq!(
            err,
            Error::Arity {
                symbol: "f".into(),
                expected: 1,
                found: 2
            }
        );
    }

    #[test]
    fn kind_mismatch_is_reported() {
        assert!(matches!(parse_formula("(and (= x y) x)"), Err(Error::Kind(_))));
        assert!(matches!(parse_formula("(= (ite a b c) a)"), Err(Error::Kind(_))));
        assert!(matches!(parse_formula("(= (not a) (ite a x y))"), Err(Error::Kind(_))));
    }

    #[test]
    fn declarations_set_signatures() {
        let src = "(declare op order 1 predicate)\n(declare alu order 3 bool-args 1)\n(= (alu (op pc) a b) c)";
        let (s, root) = parse_formula(src).unwrap();
        let alu = s.symbol(s.symbol_id("alu").unwrap());
        assert_eq!(alu.arg_sorts, vec![Sort::Formula, Sort::Term, Sort::Term]);
        assert_eq!(s.to_source(root), format!("{src}\n"));
    }

    #[test]
    fn multiple_formulas_rejected() {
        assert!(matches!(parse_formula("a b"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_formula(""), Err(Error::Syntax { .. })));
    }

    #[test]
    fn definitions_share_nodes() {
        let src = "(define gx (g x))\n(define same (= gx gx))\n(and same (= (g x) gx))";
        let (s, root) = parse_formula(src).unwrap();
        assert_eq!(s.display(root), "(and (= (g x) (g x)) (= (g x) (g x)))");
        let Node::And([l, r]) = *s.node(root) else { panic!() };
        assert_eq!(l, r);
        assert!(parse_formula("(define gx (g x))\n(gx y)").is_err());
        assert!(matches!(
            parse_formula("(declare f order 1)\n(define p (= x y))\n(= (f p) x)"),
            Err(Error::Kind(_))
        ));
        assert!(parse_formula("(define x (g y))\n(= x y)").is_ok());
        assert!(parse_formula("(define x (g x))\n(= x y)").is_err());
    }

    #[test]
    fn shared_printing_round_trips() {
        let (mut s, mut t) = parse_formula("(= x y)").unwrap();
        let f = s.function("f", 2);
        let x = s.var("x");
        let mut acc = x;
        for _ in 0..40 {
            acc = s.apply(f, &[acc, acc]);
        }
        let e = s.eq(acc, x);
        t = s.and(t, e);
        let text = s.to_source(t);
        assert!(text.contains("(define "), "{text}");
        assert!(text.len() < 5_000);
        let mut s2 = Store::new();
        let back = parse(&mut s2, &text).unwrap();
        assert_eq!(s2.to_source(back), text);
        assert_eq!(s2.tree_size(back), s.tree_size(t));
    }

    #[test]
    fn comments_are_skipped() {
        let (s, root) = parse_formula("; header\n(= x y) ; trailing").unwrap();
        assert_eq!(s.display(root), "(= x y)");
    }
}
