// SPDX-License-Identifier: Apache-2.0

//! Hash-consed terms and formulas.
//!
//! Every node lives in a [`Store`]. Building the same node twice returns the
//! same [`NodeId`], so syntactic identity and id equality coincide. Children
//! are always built before their parent, which makes every child id strictly
//! smaller than its parent id; several passes rely on this and walk nodes in
//! ascending id order instead of recursing.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymbolId(pub u32);

impl SymbolId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sort {
    Term,
    Formula,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    Function,
    Predicate,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Unclassified,
    P,
    G,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Symbol {
    pub name: String,
    pub kind: SymbolKind,
    pub arg_sorts: Vec<Sort>,
    pub polarity: Polarity,
}

impl Symbol {
    /// Number of arguments.
    pub fn order(&self) -> usize {
        self.arg_sorts.len()
    }

    pub fn result_sort(&self) -> Sort {
        match self.kind {
            SymbolKind::Function => Sort::Term,
            SymbolKind::Predicate => Sort::Formula,
        }
    }

    /// Order-0 function symbol.
    pub fn is_domain_var(&self) -> bool {
        self.kind == SymbolKind::Function && self.arg_sorts.is_empty()
    }

    /// Order-0 predicate symbol.
    pub fn is_prop_var(&self) -> bool {
        self.kind == SymbolKind::Predicate && self.arg_sorts.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    True,
    False,
    Not(NodeId),
    And([NodeId; 2]),
    Or([NodeId; 2]),
    Eq([NodeId; 2]),
    Ite([NodeId; 3]),
    Func(SymbolId, Box<[NodeId]>),
    Pred(SymbolId, Box<[NodeId]>),
}

impl Node {
    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::True | Node::False => &[],
            Node::Not(a) => std::slice::from_ref(a),
            Node::And(c) | Node::Or(c) | Node::Eq(c) => c,
            Node::Ite(c) => c,
            Node::Func(_, args) | Node::Pred(_, args) => args,
        }
    }

    pub fn sort(&self) -> Sort {
        match self {
            Node::Ite(_) | Node::Func(..) => Sort::Term,
            _ => Sort::Formula,
        }
    }

    /// Symbol of an application node.
    pub fn symbol(&self) -> Option<SymbolId> {
        match self {
            Node::Func(s, _) | Node::Pred(s, _) => Some(*s),
            _ => None,
        }
    }

    /// Same node kind with the children replaced.
    pub fn with_children(&self, kids: &[NodeId]) -> Node {
        match self {
            Node::True => Node::True,
            Node::False => Node::False,
            Node::Not(_) => Node::Not(kids[0]),
            Node::And(_) => Node::And([kids[0], kids[1]]),
            Node::Or(_) => Node::Or([kids[0], kids[1]]),
            Node::Eq(_) => Node::Eq([kids[0], kids[1]]),
            Node::Ite(_) => Node::Ite([kids[0], kids[1], kids[2]]),
            Node::Func(s, _) => Node::Func(*s, kids.into()),
            Node::Pred(s, _) => Node::Pred(*s, kids.into()),
        }
    }
}

/// Arena of hash-consed nodes plus the symbol table they refer to.
///
/// Stores only grow: transformations append new nodes and never invalidate
/// existing ids.
#[derive(Clone, Debug, Default)]
pub struct Store {
    nodes: Vec<Node>,
    dedup: HashMap<Node, NodeId>,
    symbols: Vec<Symbol>,
    by_name: HashMap<String, SymbolId>,
}

/// Unfolded size above which [`Store::to_source`] prints shared
/// subexpressions as `define`s.
pub const SHARE_THRESHOLD: u128 = 10_000;

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn sort(&self, id: NodeId) -> Sort {
        self.node(id).sort()
    }

    /// Returns the id of `node`, creating it if it is new.
    pub fn intern(&mut self, node: Node) -> NodeId {
        if let Some(&id) = self.dedup.get(&node) {
            return id;
        }
        debug_assert!(node.children().iter().all(|c| c.index() < self.nodes.len()));
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(node.clone());
        self.dedup.insert(node, id);
        id
    }

    /// Id of `node` if it has been built.
    pub fn lookup(&self, node: &Node) -> Option<NodeId> {
        self.dedup.get(node).copied()
    }

    /// Node of an existing domain or propositional variable.
    ///
    /// Panics if no such variable has been built.
    pub fn var_node(&self, name: &str) -> NodeId {
        let sym = self
            .symbol_id(name)
            .unwrap_or_else(|| panic!("unknown symbol `{name}`"));
        let node = match self.symbol(sym).kind {
            SymbolKind::Function => Node::Func(sym, Box::new([])),
            SymbolKind::Predicate => Node::Pred(sym, Box::new([])),
        };
        self.lookup(&node)
            .unwrap_or_else(|| panic!("`{name}` is not a variable in this store"))
    }

    pub fn tt(&mut self) -> NodeId {
        self.intern(Node::True)
    }

    pub fn ff(&mut self) -> NodeId {
        self.intern(Node::False)
    }

    pub fn not(&mut self, a: NodeId) -> NodeId {
        debug_assert_eq!(self.sort(a), Sort::Formula);
        self.intern(Node::Not(a))
    }

    pub fn and(&mut self, a: NodeId, b: NodeId) -> NodeId {
        debug_assert_eq!(self.sort(a), Sort::Formula);
        debug_assert_eq!(self.sort(b), Sort::Formula);
        self.intern(Node::And([a, b]))
    }

    pub fn or(&mut self, a: NodeId, b: NodeId) -> NodeId {
        debug_assert_eq!(self.sort(a), Sort::Formula);
        debug_assert_eq!(self.sort(b), Sort::Formula);
        self.intern(Node::Or([a, b]))
    }

    /// `a => b`, built as `(not a) or b`.
    pub fn implies(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let na = self.not(a);
        self.or(na, b)
    }

    /// `a <=> b`, built as the conjunction of both implications.
    pub fn iff(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let ab = self.implies(a, b);
        let ba = self.implies(b, a);
        self.and(ab, ba)
    }

    pub fn eq(&mut self, a: NodeId, b: NodeId) -> NodeId {
        debug_assert_eq!(self.sort(a), Sort::Term);
        debug_assert_eq!(self.sort(b), Sort::Term);
        self.intern(Node::Eq([a, b]))
    }

    pub fn ite(&mut self, c: NodeId, t: NodeId, e: NodeId) -> NodeId {
        debug_assert_eq!(self.sort(c), Sort::Formula);
        debug_assert_eq!(self.sort(t), Sort::Term);
        debug_assert_eq!(self.sort(e), Sort::Term);
        self.intern(Node::Ite([c, t, e]))
    }

    /// Left-folded conjunction; `true` when empty.
    pub fn and_all<I: IntoIterator<Item = NodeId>>(&mut self, items: I) -> NodeId {
        let mut acc = None;
        for x in items {
            acc = Some(match acc {
                None => x,
                Some(a) => self.and(a, x),
            });
        }
        acc.unwrap_or_else(|| self.tt())
    }

    /// Left-folded disjunction; `false` when empty.
    pub fn or_all<I: IntoIterator<Item = NodeId>>(&mut self, items: I) -> NodeId {
        let mut acc = None;
        for x in items {
            acc = Some(match acc {
                None => x,
                Some(a) => self.or(a, x),
            });
        }
        acc.unwrap_or_else(|| self.ff())
    }

    /// Application of `sym` to `args`, a term or a formula depending on the
    /// symbol kind.
    pub fn apply(&mut self, sym: SymbolId, args: &[NodeId]) -> NodeId {
        let s = &self.symbols[sym.index()];
        debug_assert_eq!(s.order(), args.len());
        debug_assert!(s
            .arg_sorts
            .iter()
            .zip(args)
            .all(|(k, a)| *k == self.nodes[a.index()].sort()));
        let node = match s.kind {
            SymbolKind::Function => Node::Func(sym, args.into()),
            SymbolKind::Predicate => Node::Pred(sym, args.into()),
        };
        self.intern(node)
    }

    /// Rebuilds `id` with new children, reusing the node when nothing changed.
    pub fn rebuild(&mut self, id: NodeId, kids: &[NodeId]) -> NodeId {
        let node = self.node(id);
        if node.children() == kids {
            return id;
        }
        let fresh = node.with_children(kids);
        self.intern(fresh)
    }

    // ---- symbols ----

    pub fn symbol(&self, id: SymbolId) -> &Symbol {
        &self.symbols[id.index()]
    }

    pub fn symbol_id(&self, name: &str) -> Option<SymbolId> {
        self.by_name.get(name).copied()
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> impl Iterator<Item = (SymbolId, &Symbol)> {
        self.symbols.iter().enumerate().map(|(i, s)| (SymbolId(i as u32), s))
    }

    pub fn set_polarity(&mut self, id: SymbolId, polarity: Polarity) {
        self.symbols[id.index()].polarity = polarity;
    }

    /// Declares a symbol, or returns the existing one if the signature agrees.
    pub fn declare(&mut self, name: &str, kind: SymbolKind, arg_sorts: &[Sort]) -> Result<SymbolId> {
        if let Some(id) = self.symbol_id(name) {
            let s = self.symbol(id);
            if s.kind != kind {
                return Err(Error::Kind(format!(
                    "`{name}` is a {} but is used as a {}",
                    kind_name(s.kind),
                    kind_name(kind)
                )));
            }
            if s.order() != arg_sorts.len() {
                return Err(Error::Arity {
                    symbol: name.to_string(),
                    expected: s.order(),
                    found: arg_sorts.len(),
                });
            }
            if s.arg_sorts != arg_sorts {
                return Err(Error::Kind(format!(
                    "`{name}` is applied with argument kinds that differ from its signature"
                )));
            }
            return Ok(id);
        }
        let id = SymbolId(self.symbols.len() as u32);
        self.symbols.push(Symbol {
            name: name.to_string(),
            kind,
            arg_sorts: arg_sorts.to_vec(),
            polarity: Polarity::Unclassified,
        });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    /// Declares a symbol under `base`, or `base_1`, `base_2`, ... if taken.
    pub fn fresh_symbol(&mut self, base: &str, kind: SymbolKind, arg_sorts: &[Sort]) -> SymbolId {
        let mut name = base.to_string();
        let mut n = 0;
        while self.by_name.contains_key(&name) {
            n += 1;
            name = format!("{base}_{n}");
        }
        self.declare(&name, kind, arg_sorts).expect("fresh names never clash")
    }

    /// Domain variable node, declaring it on first use.
    ///
    /// Panics if `name` is already a different kind of symbol.
    pub fn var(&mut self, name: &str) -> NodeId {
        let s = self
            .declare(name, SymbolKind::Function, &[])
            .unwrap_or_else(|e| panic!("{e}"));
        self.apply(s, &[])
    }

    /// Propositional variable node, declaring it on first use.
    ///
    /// Panics if `name` is already a different kind of symbol.
    pub fn prop(&mut self, name: &str) -> NodeId {
        let s = self
            .declare(name, SymbolKind::Predicate, &[])
            .unwrap_or_else(|e| panic!("{e}"));
        self.apply(s, &[])
    }

    /// Term-argument function symbol of the given order.
    ///
    /// Panics if `name` is already declared differently.
    pub fn function(&mut self, name: &str, order: usize) -> SymbolId {
        self.declare(name, SymbolKind::Function, &vec![Sort::Term; order])
            .unwrap_or_else(|e| panic!("{e}"))
    }

    /// Term-argument predicate symbol of the given order.
    ///
    /// Panics if `name` is already declared differently.
    pub fn predicate(&mut self, name: &str, order: usize) -> SymbolId {
        self.declare(name, SymbolKind::Predicate, &vec![Sort::Term; order])
            .unwrap_or_else(|e| panic!("{e}"))
    }

    /// Shorthand for applying a term-argument function symbol by name.
    pub fn app(&mut self, name: &str, args: &[NodeId]) -> NodeId {
        let f = self.function(name, args.len());
        self.apply(f, args)
    }

    // ---- traversal ----

    /// All nodes reachable from `roots`, in ascending id order (children
    /// before parents).
    pub fn reachable(&self, roots: &[NodeId]) -> Vec<NodeId> {
        let mut seen = HashSet::new();
        let mut stack: Vec<NodeId> = roots.to_vec();
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                stack.extend_from_slice(self.node(n).children());
            }
        }
        let mut out: Vec<NodeId> = seen.into_iter().collect();
        out.sort_unstable();
        out
    }

    /// Nodes reachable from `root` in first-occurrence order: the order in
    /// which a left-to-right depth-first walk finishes each node.
    pub fn postorder(&self, root: NodeId) -> Vec<NodeId> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut stack = vec![(root, false)];
        while let Some((n, expanded)) = stack.pop() {
            if expanded {
                out.push(n);
                continue;
            }
            if !seen.insert(n) {
                continue;
            }
            stack.push((n, true));
            for &c in self.node(n).children().iter().rev() {
                if !seen.contains(&c) {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    /// Function application terms (domain variables included) in
    /// first-occurrence order.
    pub fn application_terms(&self, root: NodeId) -> Vec<NodeId> {
        self.postorder(root)
            .into_iter()
            .filter(|&n| matches!(self.node(n), Node::Func(..)))
            .collect()
    }

    /// Symbols applied somewhere under `root`, in first-occurrence order.
    pub fn symbols_in(&self, root: NodeId) -> Vec<SymbolId> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for n in self.postorder(root) {
            if let Some(s) = self.node(n).symbol() {
                if seen.insert(s) {
                    out.push(s);
                }
            }
        }
        out
    }

    /// Number of nodes in the tree obtained by unfolding all sharing.
    pub fn tree_size(&self, root: NodeId) -> u128 {
        let mut size: HashMap<NodeId, u128> = HashMap::new();
        for n in self.reachable(&[root]) {
            let s = 1 + self
                .node(n)
                .children()
                .iter()
                .map(|c| size[c])
                .fold(0u128, |a, b| a.saturating_add(b));
            size.insert(n, s);
        }
        size[&root]
    }

    // ---- printing ----

    /// Surface syntax of `id` as a single line.
    pub fn display(&self, id: NodeId) -> String {
        let mut out = String::new();
        self.write_node(id, &mut out);
        out
    }

    fn write_node(&self, id: NodeId, out: &mut String) {
        self.write_shared(id, out, &HashMap::new(), true);
    }

    /// Writes `id`, printing any node listed in `names` (other than `id`
    /// itself when `top` is set) by its name.
    fn write_shared(&self, id: NodeId, out: &mut String, names: &HashMap<NodeId, String>, top: bool) {
        if !top {
            if let Some(n) = names.get(&id) {
                out.push_str(n);
                return;
            }
        }
        let write_node = |id: NodeId, out: &mut String| self.write_shared(id, out, names, false);
        match self.node(id) {
            Node::True => out.push_str("true"),
            Node::False => out.push_str("false"),
            Node::Not(a) => {
                out.push_str("(not ");
                write_node(*a, out);
                out.push(')');
            }
            Node::And([a, b]) | Node::Or([a, b]) | Node::Eq([a, b]) => {
                let op = match self.node(id) {
                    Node::And(_) => "and",
                    Node::Or(_) => "or",
                    _ => "=",
                };
                let _ = write!(out, "({op} ");
                write_node(*a, out);
                out.push(' ');
                write_node(*b, out);
                out.push(')');
            }
            Node::Ite([c, t, e]) => {
                out.push_str("(ite ");
                write_node(*c, out);
                out.push(' ');
                write_node(*t, out);
                out.push(' ');
                write_node(*e, out);
                out.push(')');
            }
            Node::Func(s, args) | Node::Pred(s, args) => {
                let name = &self.symbol(*s).name;
                if args.is_empty() {
                    out.push_str(name);
                } else {
                    let _ = write!(out, "({name}");
                    for a in args.iter() {
                        out.push(' ');
                        write_node(*a, out);
                    }
                    out.push(')');
                }
            }
        }
    }

    /// Complete source text for `root`: `declare` lines for every symbol whose
    /// signature the parser could not infer from the formula alone, then the
    /// formula. When unfolding the sharing would exceed [`SHARE_THRESHOLD`]
    /// nodes, shared subexpressions are printed once as `define`s.
    pub fn to_source(&self, root: NodeId) -> String {
        self.to_source_with(root, self.tree_size(root) > SHARE_THRESHOLD)
    }

    pub fn to_source_with(&self, root: NodeId, share: bool) -> String {
        let mut out = String::new();
        for s in self.symbols_in(root) {
            let sym = self.symbol(s);
            let bool_args: Vec<usize> = sym
                .arg_sorts
                .iter()
                .enumerate()
                .filter(|(_, k)| **k == Sort::Formula)
                .map(|(i, _)| i + 1)
                .collect();
            if sym.kind == SymbolKind::Predicate || !bool_args.is_empty() {
                let _ = write!(out, "(declare {} order {}", sym.name, sym.order());
                if sym.kind == SymbolKind::Predicate {
                    out.push_str(" predicate");
                }
                if !bool_args.is_empty() {
                    out.push_str(" bool-args");
                    for i in bool_args {
                        let _ = write!(out, " {i}");
                    }
                }
                out.push_str(")\n");
            }
        }
        let mut names = HashMap::new();
        if share {
            let order = self.postorder(root);
            let mut parents: HashMap<NodeId, usize> = HashMap::new();
            for &n in &order {
                for &c in self.node(n).children() {
                    *parents.entry(c).or_default() += 1;
                }
            }
            let taken: HashSet<&str> = self.symbols.iter().map(|s| s.name.as_str()).collect();
            let mut prefix = String::from("_s");
            while taken.iter().any(|t| t.starts_with(&prefix)) {
                prefix.push('_');
            }
            for &n in &order {
                if n == root || parents.get(&n).copied().unwrap_or(0) < 2 || self.node(n).children().is_empty() {
                    continue;
                }
                let name = format!("{prefix}{}", names.len());
                let _ = write!(out, "(define {name} ");
                self.write_shared(n, &mut out, &names, true);
                out.push_str(")\n");
                names.insert(n, name);
            }
        }
        self.write_shared(root, &mut out, &names, true);
        out.push('\n');
        out
    }

    /// Graphviz rendering of the DAG under `root`. Term-valued edges are
    /// solid, formula-valued edges dashed.
    pub fn to_dot(&self, root: NodeId) -> String {
        let mut out = String::from("digraph expr {\n  node [shape=box, fontname=\"monospace\"];\n");
        for n in self.reachable(&[root]) {
            let label = match self.node(n) {
                Node::True => "true".to_string(),
                Node::False => "false".to_string(),
                Node::Not(_) => "not".to_string(),
                Node::And(_) => "and".to_string(),
                Node::Or(_) => "or".to_string(),
                Node::Eq(_) => "=".to_string(),
                Node::Ite(_) => "ite".to_string(),
                Node::Func(s, _) | Node::Pred(s, _) => self.symbol(*s).name.clone(),
            };
            let shape = match self.sort(n) {
                Sort::Term => "box",
                Sort::Formula => "ellipse",
            };
            let _ = writeln!(out, "  n{} [label=\"{}\", shape={shape}];", n.0, label);
            for (i, c) in self.node(n).children().iter().enumerate() {
                let style = match self.sort(*c) {
                    Sort::Term => "solid",
                    Sort::Formula => "dashed",
                };
                let _ = writeln!(out, "  n{} -> n{} [style={style}, label=\"{i}\"];", n.0, c.0);
            }
        }
        out.push_str("}\n");
        out
    }
}

fn kind_name(k: SymbolKind) -> &'static str {
    match k {
        SymbolKind::Function => "function",
        SymbolKind::Predicate => "predicate",
    }
}
