// SPDX-License-Identifier: Apache-2.0

//! Negation normal form and the split of function symbols into those whose
//! applications only ever need to be compared positively (p-functions) and
//! the rest (g-functions).

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Node, NodeId, Polarity, Sort, Store, SymbolId, SymbolKind};

/// Rewrites `f` so that `not` only sits directly above equations and
/// predicate applications. Formulas nested inside terms (`ite` controls,
/// boolean arguments) are normalized too.
pub fn to_nnf(store: &mut Store, f: NodeId) -> NodeId {
    let mut memo = HashMap::new();
    nnf(store, f, false, &mut memo)
}

fn nnf(store: &mut Store, n: NodeId, neg: bool, memo: &mut HashMap<(NodeId, bool), NodeId>) -> NodeId {
    if let Some(&r) = memo.get(&(n, neg)) {
        return r;
    }
    let node = store.node(n).clone();
    let out = match node {
        Node::True => {
            if neg {
                store.ff()
            } else {
                store.tt()
            }
        }
        Node::False => {
            if neg {
                store.tt()
            } else {
                store.ff()
            }
        }
        Node::Not(a) => nnf(store, a, !neg, memo),
        Node::And([a, b]) | Node::Or([a, b]) => {
            let x = nnf(store, a, neg, memo);
            let y = nnf(store, b, neg, memo);
            let conj = matches!(node, Node::And(_)) != neg;
            if conj {
                store.and(x, y)
            } else {
                store.or(x, y)
            }
        }
        Node::Eq([a, b]) => {
            let x = nnf(store, a, false, memo);
            let y = nnf(store, b, false, memo);
            let e = store.eq(x, y);
            if neg {
                store.not(e)
            } else {
                e
            }
        }
        Node::Ite([c, t, e]) => {
            let c = nnf(store, c, false, memo);
            let t = nnf(store, t, false, memo);
            let e = nnf(store, e, false, memo);
            store.ite(c, t, e)
        }
        Node::Func(_, ref args) | Node::Pred(_, ref args) => {
            let kids: Vec<NodeId> = args.iter().map(|&a| nnf(store, a, false, memo)).collect();
            let app = store.rebuild(n, &kids);
            if neg {
                store.not(app)
            } else {
                app
            }
        }
    };
    memo.insert((n, neg), out);
    out
}

/// True if negations in `f` only sit above equations and predicate
/// applications.
pub fn is_nnf(store: &Store, f: NodeId) -> bool {
    store.reachable(&[f]).into_iter().all(|n| match store.node(n) {
        Node::Not(a) => matches!(store.node(*a), Node::Eq(_) | Node::Pred(..)),
        _ => true,
    })
}

/// Outcome of classifying the function symbols of an NNF formula.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PolarityReport {
    /// Formulas that occur negatively.
    pub neg_formulas: BTreeSet<NodeId>,
    /// Terms that may be compared under a negation.
    pub neg_terms: BTreeSet<NodeId>,
    pub g_funcs: Vec<SymbolId>,
    pub p_funcs: Vec<SymbolId>,
}

impl PolarityReport {
    pub fn is_p(&self, sym: SymbolId) -> bool {
        self.p_funcs.contains(&sym)
    }

    pub fn is_g(&self, sym: SymbolId) -> bool {
        self.g_funcs.contains(&sym)
    }

    /// Symbol names, for printing.
    pub fn names(&self, store: &Store, syms: &[SymbolId]) -> Vec<String> {
        syms.iter().map(|s| store.symbol(*s).name.clone()).collect()
    }
}

/// Least sets of negative formulas and negative terms of an NNF formula.
///
/// A formula is negative if it sits under a `not`, is an `ite` control, is a
/// boolean argument of an application, or is an operand of a negative
/// conjunction or disjunction. A term is negative if it is a side of a
/// negative equation or a branch of a negative `ite`.
pub fn negative_sets(store: &Store, f: NodeId) -> (BTreeSet<NodeId>, BTreeSet<NodeId>) {
    let all = store.reachable(&[f]);
    let mut neg_f: BTreeSet<NodeId> = BTreeSet::new();
    let mut work = Vec::new();
    for &n in &all {
        match store.node(n) {
            Node::Not(a) => work.push(*a),
            Node::Ite([c, _, _]) => work.push(*c),
            Node::Func(_, args) | Node::Pred(_, args) => {
                for &a in args.iter() {
                    if store.sort(a) == Sort::Formula {
                        work.push(a);
                    }
                }
            }
            _ => {}
        }
    }
    while let Some(n) = work.pop() {
        if !neg_f.insert(n) {
            continue;
        }
        if let Node::And([a, b]) | Node::Or([a, b]) = store.node(n) {
            work.push(*a);
            work.push(*b);
        }
    }
    let mut neg_t: BTreeSet<NodeId> = BTreeSet::new();
    for &n in &neg_f {
        if let Node::Eq([a, b]) = store.node(n) {
            work.push(*a);
            work.push(*b);
        }
    }
    while let Some(n) = work.pop() {
        if !neg_t.insert(n) {
            continue;
        }
        if let Node::Ite([_, t, e]) = store.node(n) {
            work.push(*t);
            work.push(*e);
        }
    }
    (neg_f, neg_t)
}

/// Classifies the function symbols of the NNF formula `f`. A symbol is a
/// g-function when some negative term is an application of it; every other
/// function symbol is a p-function. The result is checked against the
/// positive-equality grammar before it is returned.
pub fn classify(store: &Store, f: NodeId) -> Result<PolarityReport> {
    let (neg_formulas, neg_terms) = negative_sets(store, f);
    let mut g: HashSet<SymbolId> = HashSet::new();
    for &t in &neg_terms {
        if let Node::Func(s, _) = store.node(t) {
            g.insert(*s);
        }
    }
    let mut g_funcs = Vec::new();
    let mut p_funcs = Vec::new();
    for s in store.symbols_in(f) {
        if store.symbol(s).kind != SymbolKind::Function {
            continue;
        }
        if g.contains(&s) {
            g_funcs.push(s);
        } else {
            p_funcs.push(s);
        }
    }
    let report = PolarityReport {
        neg_formulas,
        neg_terms,
        g_funcs,
        p_funcs,
    };
    if !GrammarCheck::new(store, &report).accepts(f) {
        return Err(Error::Internal(
            "formula does not parse as a positive-equality formula under its classification".into(),
        ));
    }
    Ok(report)
}

/// Writes the classification into the symbol table.
pub fn annotate(store: &mut Store, report: &PolarityReport) {
    for &s in &report.g_funcs {
        store.set_polarity(s, Polarity::G);
    }
    for &s in &report.p_funcs {
        store.set_polarity(s, Polarity::P);
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
enum Class {
    GTerm,
    PTerm,
    GFormula,
    PFormula,
}

/// Recursive-descent recognizer for the positive-equality grammar:
///
/// ```text
/// g-term    ::= ite(g-formula, g-term, g-term) | gfun(p-args)
/// p-term    ::= g-term | ite(g-formula, p-term, p-term) | pfun(p-args)
/// g-formula ::= true | false | not g-formula | g-formula and/or g-formula
///             | g-term = g-term | pred(p-args)
/// p-formula ::= g-formula | p-formula and/or p-formula | p-term = p-term
/// ```
///
/// Term arguments of applications are p-terms and formula arguments are
/// g-formulas.
pub struct GrammarCheck<'a> {
    store: &'a Store,
    g: HashSet<SymbolId>,
    memo: HashMap<(NodeId, Class), bool>,
}

impl<'a> GrammarCheck<'a> {
    pub fn new(store: &'a Store, report: &PolarityReport) -> Self {
        GrammarCheck {
            store,
            g: report.g_funcs.iter().copied().collect(),
            memo: HashMap::new(),
        }
    }

    /// True if `f` derives from `p-formula`.
    pub fn accepts(&mut self, f: NodeId) -> bool {
        self.is(f, Class::PFormula)
    }

    fn args_ok(&mut self, args: &[NodeId]) -> bool {
        args.iter().all(|&a| match self.store.sort(a) {
            Sort::Term => self.is(a, Class::PTerm),
            Sort::Formula => self.is(a, Class::GFormula),
        })
    }

    fn is(&mut self, n: NodeId, class: Class) -> bool {
        if let Some(&r) = self.memo.get(&(n, class)) {
            return r;
        }
        let node = self.store.node(n).clone();
        let r = match class {
            Class::GTerm => match &node {
                Node::Ite([c, t, e]) => {
                    self.is(*c, Class::GFormula) && self.is(*t, Class::GTerm) && self.is(*e, Class::GTerm)
                }
                Node::Func(s, args) => self.g.contains(s) && self.args_ok(args),
                _ => false,
            },
            Class::PTerm => {
                self.is(n, Class::GTerm)
                    || match &node {
                        Node::Ite([c, t, e]) => {
                            self.is(*c, Class::GFormula) && self.is(*t, Class::PTerm) && self.is(*e, Class::PTerm)
                        }
                        Node::Func(s, args) => !self.g.contains(s) && self.args_ok(args),
                        _ => false,
                    }
            }
            Class::GFormula => match &node {
                Node::True | Node::False => true,
                Node::Not(a) => self.is(*a, Class::GFormula),
                Node::And([a, b]) | Node::Or([a, b]) => self.is(*a, Class::GFormula) && self.is(*b, Class::GFormula),
                Node::Eq([a, b]) => self.is(*a, Class::GTerm) && self.is(*b, Class::GTerm),
                Node::Pred(_, args) => self.args_ok(args),
                _ => false,
            },
            Class::PFormula => {
                self.is(n, Class::GFormula)
                    || match &node {
                        Node::And([a, b]) | Node::Or([a, b]) => {
                            self.is(*a, Class::PFormula) && self.is(*b, Class::PFormula)
                        }
                        Node::Eq([a, b]) => self.is(*a, Class::PTerm) && self.is(*b, Class::PTerm),
                        _ => false,
                    }
            }
        };
        self.memo.insert((n, class), r);
        r
    }
}
