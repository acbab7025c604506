// SPDX-License-Identifier: Apache-2.0

//! Propositional formulas as a hash-consed DAG over named variables.
//!
//! Constructors fold constants, double negation and repeated operands, and do
//! nothing else; in particular `a and not a` stays as written.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct PropId(pub u32);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PNode {
    Const(bool),
    /// Index into the variable registry.
    Var(u32),
    Not(PropId),
    And(PropId, PropId),
    Or(PropId, PropId),
    Implies(PropId, PropId),
    Iff(PropId, PropId),
}

impl PNode {
    pub fn children(&self) -> Vec<PropId> {
        match *self {
            PNode::Const(_) | PNode::Var(_) => Vec::new(),
            PNode::Not(a) => vec![a],
            PNode::And(a, b) | PNode::Or(a, b) | PNode::Implies(a, b) | PNode::Iff(a, b) => vec![a, b],
        }
    }
}

#[derive(Clone, Debug)]
pub struct PropDag {
    nodes: Vec<PNode>,
    index: HashMap<PNode, PropId>,
    names: Vec<String>,
    by_name: HashMap<String, u32>,
}

impl Default for PropDag {
    fn default() -> Self {
        Self::new()
    }
}

impl PropDag {
    pub fn new() -> Self {
        let mut d = PropDag {
            nodes: Vec::new(),
            index: HashMap::new(),
            names: Vec::new(),
            by_name: HashMap::new(),
        };
        d.intern(PNode::Const(false));
        d.intern(PNode::Const(true));
        d
    }

    fn intern(&mut self, n: PNode) -> PropId {
        if let Some(&id) = self.index.get(&n) {
            return id;
        }
        let id = PropId(self.nodes.len() as u32);
        self.nodes.push(n.clone());
        self.index.insert(n, id);
        id
    }

    pub fn node(&self, id: PropId) -> &PNode {
        &self.nodes[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn constant(&mut self, b: bool) -> PropId {
        PropId(b as u32)
    }

    pub fn tt(&self) -> PropId {
        PropId(1)
    }

    pub fn ff(&self) -> PropId {
        PropId(0)
    }

    pub fn as_const(&self, id: PropId) -> Option<bool> {
        match self.node(id) {
            PNode::Const(b) => Some(*b),
            _ => None,
        }
    }

    /// The variable called `name`, registering it on first use.
    pub fn var(&mut self, name: &str) -> PropId {
        let idx = match self.by_name.get(name) {
            Some(&i) => i,
            None => {
                let i = self.names.len() as u32;
                self.names.push(name.to_string());
                self.by_name.insert(name.to_string(), i);
                i
            }
        };
        self.intern(PNode::Var(idx))
    }

    pub fn var_count(&self) -> usize {
        self.names.len()
    }

    pub fn var_name(&self, idx: u32) -> &str {
        &self.names[idx as usize]
    }

    pub fn var_index(&self, name: &str) -> Option<u32> {
        self.by_name.get(name).copied()
    }

    pub fn not(&mut self, a: PropId) -> PropId {
        match *self.node(a) {
            PNode::Const(b) => self.constant(!b),
            PNode::Not(x) => x,
            _ => self.intern(PNode::Not(a)),
        }
    }

    pub fn and(&mut self, a: PropId, b: PropId) -> PropId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(false), _) | (_, Some(false)) => self.ff(),
            (Some(true), _) => b,
            (_, Some(true)) => a,
            _ if a == b => a,
            _ => self.intern(PNode::And(a.min(b), a.max(b))),
        }
    }

    pub fn or(&mut self, a: PropId, b: PropId) -> PropId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(true), _) | (_, Some(true)) => self.tt(),
            (Some(false), _) => b,
            (_, Some(false)) => a,
            _ if a == b => a,
            _ => self.intern(PNode::Or(a.min(b), a.max(b))),
        }
    }

    pub fn implies(&mut self, a: PropId, b: PropId) -> PropId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(false), _) | (_, Some(true)) => self.tt(),
            (Some(true), _) => b,
            (_, Some(false)) => self.not(a),
            _ if a == b => self.tt(),
            _ => self.intern(PNode::Implies(a, b)),
        }
    }

    pub fn iff(&mut self, a: PropId, b: PropId) -> PropId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => self.constant(x == y),
            (Some(true), _) => b,
            (_, Some(true)) => a,
            (Some(false), _) => self.not(b),
            (_, Some(false)) => self.not(a),
            _ if a == b => self.tt(),
            _ => self.intern(PNode::Iff(a.min(b), a.max(b))),
        }
    }

    pub fn ite(&mut self, c: PropId, t: PropId, e: PropId) -> PropId {
        if let Some(b) = self.as_const(c) {
            return if b { t } else { e };
        }
        if t == e {
            return t;
        }
        let l = self.and(c, t);
        let nc = self.not(c);
        let r = self.and(nc, e);
        self.or(l, r)
    }

    pub fn and_all<I: IntoIterator<Item = PropId>>(&mut self, items: I) -> PropId {
        let mut acc = self.tt();
        for x in items {
            acc = self.and(acc, x);
        }
        acc
    }

    pub fn or_all<I: IntoIterator<Item = PropId>>(&mut self, items: I) -> PropId {
        let mut acc = self.ff();
        for x in items {
            acc = self.or(acc, x);
        }
        acc
    }

    /// Nodes reachable from `roots`, ascending.
    pub fn reachable(&self, roots: &[PropId]) -> Vec<PropId> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack: Vec<PropId> = roots.to_vec();
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut seen[n.0 as usize], true) {
                continue;
            }
            stack.extend(self.node(n).children());
        }
        (0..self.nodes.len() as u32)
            .filter(|i| seen[*i as usize])
            .map(PropId)
            .collect()
    }

    /// Variable indices occurring under `roots`.
    pub fn vars_in(&self, roots: &[PropId]) -> BTreeSet<u32> {
        self.reachable(roots)
            .into_iter()
            .filter_map(|n| match self.node(n) {
                PNode::Var(v) => Some(*v),
                _ => None,
            })
            .collect()
    }

    /// Value of `root` with variable `i` set to `assignment(i)`.
    pub fn eval(&self, root: PropId, assignment: &dyn Fn(u32) -> bool) -> bool {
        let order = self.reachable(&[root]);
        let mut vals: HashMap<PropId, bool> = HashMap::with_capacity(order.len());
        for n in order {
            let v = match *self.node(n) {
                PNode::Const(b) => b,
                PNode::Var(i) => assignment(i),
                PNode::Not(a) => !vals[&a],
                PNode::And(a, b) => vals[&a] && vals[&b],
                PNode::Or(a, b) => vals[&a] || vals[&b],
                PNode::Implies(a, b) => !vals[&a] || vals[&b],
                PNode::Iff(a, b) => vals[&a] == vals[&b],
            };
            vals.insert(n, v);
        }
        vals[&root]
    }

    /// Prefix text, e.g. `(and a_1_0 (not e_1_2))`. Shared nodes are printed
    /// at every occurrence.
    pub fn to_prefix(&self, root: PropId) -> String {
        let mut out = String::new();
        self.write_prefix(root, &mut out);
        out
    }

    fn write_prefix(&self, n: PropId, out: &mut String) {
        let (op, kids) = match *self.node(n) {
            PNode::Const(b) => {
                let _ = write!(out, "{b}");
                return;
            }
            PNode::Var(i) => {
                out.push_str(&self.names[i as usize]);
                return;
            }
            PNode::Not(a) => ("not", vec![a]),
            PNode::And(a, b) => ("and", vec![a, b]),
            PNode::Or(a, b) => ("or", vec![a, b]),
            PNode::Implies(a, b) => ("=>", vec![a, b]),
            PNode::Iff(a, b) => ("iff", vec![a, b]),
        };
        out.push('(');
        out.push_str(op);
        for k in kids {
            out.push(' ');
            self.write_prefix(k, out);
        }
        out.push(')');
    }
}
