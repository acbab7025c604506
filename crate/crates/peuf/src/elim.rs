// SPDX-License-Identifier: Apache-2.0

//! Removing applications of nonzero-order symbols.
//!
//! The main path replaces the i-th application of `f` by a chain of `ite`
//! terms that returns the fresh variable of the first earlier application
//! whose arguments agree, falling back to its own fresh variable. The
//! Ackermann path replaces every application by a fresh variable outright and
//! adds pairwise consistency implications as an antecedent.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::error::Result;
use crate::expr::{Node, NodeId, Polarity, Sort, Store, SymbolId, SymbolKind};
use crate::interp::{evaluate, Interpretation, Value};
use crate::polarity::PolarityReport;

/// Record of eliminating one symbol.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EliminationStep {
    pub symbol: SymbolId,
    /// Classification of the symbol; predicates stay unclassified.
    pub polarity: Polarity,
    /// Applications of the symbol, in elimination index order.
    pub applications: Vec<NodeId>,
    /// Fresh order-0 symbols, one per application.
    pub fresh: Vec<SymbolId>,
    pub fresh_nodes: Vec<NodeId>,
    /// Arguments of each application after rewriting.
    pub args: Vec<Vec<NodeId>>,
    /// Replacement of each application.
    pub replacements: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EliminationResult {
    pub f_star: NodeId,
    /// Domain variables that stem from g-functions, in encoding order.
    pub sigma_g: Vec<SymbolId>,
    /// Domain variables that stem from p-functions, in encoding order.
    pub sigma_p: Vec<SymbolId>,
    pub trace: Vec<EliminationStep>,
}

/// Applications of `f` under `g` in elimination index order: by nesting depth
/// of `f` inside them, ties broken by first occurrence. An application that
/// occurs inside another one therefore always gets a smaller index.
pub fn application_order(store: &Store, g: NodeId, f: SymbolId) -> Vec<NodeId> {
    let post = store.postorder(g);
    let first: HashMap<NodeId, usize> = post.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut depth: HashMap<NodeId, usize> = HashMap::new();
    let mut apps = Vec::new();
    for n in store.reachable(&[g]) {
        let node = store.node(n);
        let inner = node.children().iter().map(|c| depth[c]).max().unwrap_or(0);
        let own = node.symbol() == Some(f) && !node.children().is_empty();
        depth.insert(n, inner + own as usize);
        if own {
            apps.push(n);
        }
    }
    apps.sort_by_key(|n| (depth[n], first[n]));
    apps
}

/// Highest index of an application of `f` occurring in `e`, given an index
/// map from applications to 1-based positions; 0 when there is none.
pub fn f_order(store: &Store, e: NodeId, f: SymbolId, index: &HashMap<NodeId, usize>) -> usize {
    store
        .reachable(&[e])
        .into_iter()
        .filter(|n| store.node(*n).symbol() == Some(f))
        .filter_map(|n| index.get(&n).copied())
        .max()
        .unwrap_or(0)
}

/// Rewrites `root` bottom-up, using `memo` for nodes that already have a
/// replacement and rebuilding everything above them.
fn rewrite(store: &mut Store, root: NodeId, memo: &mut HashMap<NodeId, NodeId>) -> NodeId {
    if let Some(&r) = memo.get(&root) {
        return r;
    }
    let mut todo = Vec::new();
    let mut seen = HashSet::new();
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        if memo.contains_key(&n) || !seen.insert(n) {
            continue;
        }
        todo.push(n);
        stack.extend_from_slice(store.node(n).children());
    }
    todo.sort_unstable();
    for n in todo {
        let kids: Vec<NodeId> = store.node(n).children().iter().map(|c| memo[c]).collect();
        let r = store.rebuild(n, &kids);
        memo.insert(n, r);
    }
    memo[&root]
}

/// Conjunction of argument agreements between two rewritten argument lists.
/// Boolean positions compare with `iff`.
fn args_agree(store: &mut Store, left: &[NodeId], right: &[NodeId]) -> NodeId {
    let parts: Vec<NodeId> = left
        .iter()
        .zip(right)
        .map(|(&a, &b)| match store.sort(a) {
            Sort::Term => store.eq(a, b),
            Sort::Formula => store.iff(a, b),
        })
        .collect();
    store.and_all(parts)
}

fn fresh_vars(store: &mut Store, f: SymbolId, n: usize) -> (Vec<SymbolId>, Vec<NodeId>) {
    let base = store.symbol(f).name.clone();
    let kind = store.symbol(f).kind;
    let mut syms = Vec::with_capacity(n);
    let mut nodes = Vec::with_capacity(n);
    for i in 1..=n {
        let s = store.fresh_symbol(&format!("v{base}_{i}"), kind, &[]);
        syms.push(s);
        nodes.push(store.apply(s, &[]));
    }
    (syms, nodes)
}

/// Replaces every application of `f` under `g`. Returns the new root and a
/// record of the step. Order-0 symbols and absent symbols leave `g` as is.
pub fn eliminate_symbol(store: &mut Store, g: NodeId, f: SymbolId) -> (NodeId, EliminationStep) {
    let apps = application_order(store, g, f);
    let (fresh, fresh_nodes) = fresh_vars(store, f, apps.len());
    let predicate = store.symbol(f).kind == SymbolKind::Predicate;
    let mut memo = HashMap::new();
    let mut args: Vec<Vec<NodeId>> = Vec::with_capacity(apps.len());
    let mut replacements = Vec::with_capacity(apps.len());
    for (i, &t) in apps.iter().enumerate() {
        let orig: Vec<NodeId> = store.node(t).children().to_vec();
        let hat: Vec<NodeId> = orig.iter().map(|&a| rewrite(store, a, &mut memo)).collect();
        let mut acc = fresh_nodes[i];
        for j in (0..i).rev() {
            let c = args_agree(store, &hat, &args[j]);
            acc = if predicate {
                let take = store.and(c, fresh_nodes[j]);
                let nc = store.not(c);
                let rest = store.and(nc, acc);
                store.or(take, rest)
            } else {
                store.ite(c, fresh_nodes[j], acc)
            };
        }
        args.push(hat);
        replacements.push(acc);
        memo.insert(t, acc);
    }
    let root = rewrite(store, g, &mut memo);
    let polarity = store.symbol(f).polarity;
    (
        root,
        EliminationStep {
            symbol: f,
            polarity,
            applications: apps,
            fresh,
            fresh_nodes,
            args,
            replacements,
        },
    )
}

/// Replaces every application of the function symbol `f`.
pub fn eliminate_function(store: &mut Store, g: NodeId, f: SymbolId) -> (NodeId, EliminationStep) {
    debug_assert_eq!(store.symbol(f).kind, SymbolKind::Function);
    eliminate_symbol(store, g, f)
}

/// Replaces every application of the predicate symbol `p`.
pub fn eliminate_predicate(store: &mut Store, g: NodeId, p: SymbolId) -> (NodeId, EliminationStep) {
    debug_assert_eq!(store.symbol(p).kind, SymbolKind::Predicate);
    eliminate_symbol(store, g, p)
}

/// Nonzero-order symbols of `f`: functions first, then predicates, each in
/// first-occurrence order.
pub fn elimination_order(store: &Store, f: NodeId) -> Vec<SymbolId> {
    let syms = store.symbols_in(f);
    let mut out: Vec<SymbolId> = syms
        .iter()
        .copied()
        .filter(|s| store.symbol(*s).kind == SymbolKind::Function && store.symbol(*s).order() > 0)
        .collect();
    out.extend(
        syms.iter()
            .copied()
            .filter(|s| store.symbol(*s).kind == SymbolKind::Predicate && store.symbol(*s).order() > 0),
    );
    out
}

/// Eliminates every nonzero-order symbol of the NNF formula `f`, classified
/// by `report`.
pub fn eliminate_all(store: &mut Store, f: NodeId, report: &PolarityReport) -> EliminationResult {
    let originals: Vec<SymbolId> = store
        .symbols_in(f)
        .into_iter()
        .filter(|s| store.symbol(*s).is_domain_var())
        .collect();
    let mut current = f;
    let mut trace = Vec::new();
    let mut sigma_g = Vec::new();
    let mut sigma_p = Vec::new();
    for &v in &originals {
        if report.is_g(v) {
            sigma_g.push(v);
        } else {
            sigma_p.push(v);
        }
    }
    for sym in elimination_order(store, f) {
        let (root, mut step) = eliminate_symbol(store, current, sym);
        if step.applications.is_empty() {
            continue;
        }
        step.polarity = match store.symbol(sym).kind {
            SymbolKind::Predicate => Polarity::Unclassified,
            SymbolKind::Function if report.is_g(sym) => Polarity::G,
            SymbolKind::Function => Polarity::P,
        };
        match step.polarity {
            Polarity::G => sigma_g.extend_from_slice(&step.fresh),
            Polarity::P => sigma_p.extend_from_slice(&step.fresh),
            Polarity::Unclassified => {}
        }
        current = root;
        trace.push(step);
    }
    let present: HashSet<SymbolId> = store.symbols_in(current).into_iter().collect();
    sigma_g.retain(|s| present.contains(s));
    sigma_p.retain(|s| present.contains(s));
    EliminationResult {
        f_star: current,
        sigma_g,
        sigma_p,
        trace,
    }
}

/// Extends an interpretation of the application-free formula to the symbols
/// of `original` that were eliminated, undoing the steps of `result` from
/// last to first. Under the extension `original` evaluates like the
/// application-free one. Argument tuples that no application produces map to
/// value 0 (or `false`), as do variables, fresh or original, that only
/// occurred inside dropped arguments.
pub fn lift_interpretation(
    store: &Store,
    original: NodeId,
    result: &EliminationResult,
    star: &Interpretation,
) -> Result<Interpretation> {
    let mut interp = star.clone();
    for sym in store.symbols_in(original) {
        let s = store.symbol(sym);
        if s.order() == 0 && interp.table(sym).is_none() {
            let v = match s.kind {
                SymbolKind::Function => Value::Dom(0),
                SymbolKind::Predicate => Value::Bool(false),
            };
            interp.set_var(sym, v);
        }
    }
    for step in &result.trace {
        let default = match store.symbol(step.symbol).kind {
            SymbolKind::Function => Value::Dom(0),
            SymbolKind::Predicate => Value::Bool(false),
        };
        interp.set_default(step.symbol, default);
        for &v in &step.fresh {
            if interp.table(v).is_none() {
                interp.set_var(v, default);
            }
        }
    }
    for step in result.trace.iter().rev() {
        let mut defined: HashSet<Vec<Value>> = HashSet::new();
        for (j, hat) in step.args.iter().enumerate() {
            let mut key = Vec::with_capacity(hat.len());
            for &a in hat {
                key.push(evaluate(store, a, &interp)?);
            }
            if defined.insert(key.clone()) {
                let v = evaluate(store, step.fresh_nodes[j], &interp)?;
                interp.set(step.symbol, key, v);
            }
        }
    }
    Ok(interp)
}

/// Output of the Ackermann path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AckermannResult {
    /// `not (c_1 and ... and c_m) or body`.
    pub formula: NodeId,
    pub body: NodeId,
    /// Consistency implications, in the order they were generated.
    pub constraints: Vec<NodeId>,
    pub fresh: Vec<(SymbolId, Vec<SymbolId>)>,
}

/// Replaces every application by a fresh variable and adds, for each pair of
/// applications of the same symbol, the implication that equal arguments give
/// equal results.
pub fn ackermann_eliminate(store: &mut Store, f: NodeId) -> AckermannResult {
    let mut body = f;
    let mut constraints: Vec<NodeId> = Vec::new();
    let mut fresh_all = Vec::new();
    for sym in elimination_order(store, f) {
        let apps = application_order(store, body, sym);
        if apps.is_empty() {
            continue;
        }
        let (fresh, nodes) = fresh_vars(store, sym, apps.len());
        let predicate = store.symbol(sym).kind == SymbolKind::Predicate;
        let mut memo = HashMap::new();
        let mut args: Vec<Vec<NodeId>> = Vec::new();
        for (i, &t) in apps.iter().enumerate() {
            let orig: Vec<NodeId> = store.node(t).children().to_vec();
            let hat: Vec<NodeId> = orig.iter().map(|&a| rewrite(store, a, &mut memo)).collect();
            args.push(hat);
            memo.insert(t, nodes[i]);
        }
        let mut fresh_constraints = Vec::new();
        for i in 1..apps.len() {
            for j in 0..i {
                let ante = args_agree(store, &args[j], &args[i]);
                let cons = if predicate {
                    store.iff(nodes[j], nodes[i])
                } else {
                    store.eq(nodes[j], nodes[i])
                };
                fresh_constraints.push(store.implies(ante, cons));
            }
        }
        for c in constraints.iter_mut() {
            *c = rewrite(store, *c, &mut memo);
        }
        constraints.extend(fresh_constraints);
        body = rewrite(store, body, &mut memo);
        fresh_all.push((sym, fresh));
    }
    let formula = if constraints.is_empty() {
        body
    } else {
        let all = store.and_all(constraints.iter().copied());
        store.implies(all, body)
    };
    AckermannResult {
        formula,
        body,
        constraints,
        fresh: fresh_all,
    }
}

/// Number of distinct equations under `root`.
pub fn count_equations(store: &Store, root: NodeId) -> usize {
    store
        .reachable(&[root])
        .into_iter()
        .filter(|n| matches!(store.node(*n), Node::Eq(_)))
        .count()
}

/// True if no application of nonzero order remains under `root`.
pub fn is_application_free(store: &Store, root: NodeId) -> bool {
    store.reachable(&[root]).into_iter().all(|n| match store.node(n) {
        Node::Func(_, a) | Node::Pred(_, a) => a.is_empty(),
        _ => true,
    })
}
