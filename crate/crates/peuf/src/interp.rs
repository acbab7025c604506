// SPDX-License-Identifier: Apache-2.0

//! Interpretations over a finite domain and evaluation of expressions.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Node, NodeId, Store, SymbolId};

/// A domain element or a truth value.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Dom(u32),
    Bool(bool),
}

impl Value {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(b),
            Value::Dom(_) => None,
        }
    }

    pub fn as_dom(self) -> Option<u32> {
        match self {
            Value::Dom(d) => Some(d),
            Value::Bool(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Dom(d) => write!(f, "{d}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// Lookup table for one symbol. Tuples not listed map to `default`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Table {
    pub entries: HashMap<Vec<Value>, Value>,
    pub default: Option<Value>,
}

impl Table {
    pub fn get(&self, args: &[Value]) -> Option<Value> {
        self.entries.get(args).copied().or(self.default)
    }
}

/// Tables for function and predicate symbols. Domain and propositional
/// variables are tables with a single empty-tuple entry.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Interpretation {
    tables: HashMap<SymbolId, Table>,
}

impl Interpretation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, sym: SymbolId, args: Vec<Value>, value: Value) {
        self.tables.entry(sym).or_default().entries.insert(args, value);
    }

    pub fn set_var(&mut self, sym: SymbolId, value: Value) {
        self.set(sym, Vec::new(), value);
    }

    pub fn set_default(&mut self, sym: SymbolId, value: Value) {
        self.tables.entry(sym).or_default().default = Some(value);
    }

    pub fn table(&self, sym: SymbolId) -> Option<&Table> {
        self.tables.get(&sym)
    }

    pub fn lookup(&self, sym: SymbolId, args: &[Value]) -> Option<Value> {
        self.tables.get(&sym).and_then(|t| t.get(args))
    }

    /// Human-readable tables keyed by symbol name, for reports.
    pub fn describe(&self, store: &Store) -> BTreeMap<String, Vec<(Vec<Value>, Value)>> {
        let mut out = BTreeMap::new();
        for (sym, table) in &self.tables {
            let mut rows: Vec<(Vec<Value>, Value)> = table.entries.iter().map(|(k, v)| (k.clone(), *v)).collect();
            rows.sort();
            out.insert(store.symbol(*sym).name.clone(), rows);
        }
        out
    }
}

/// Value of `root` under `interp`.
pub fn evaluate(store: &Store, root: NodeId, interp: &Interpretation) -> Result<Value> {
    evaluate_all(store, root, interp)
        .remove(&root)
        .expect("root is reachable from itself")
}

/// Values of every node reachable from `root`. Each shared node is evaluated
/// once. A node whose value needs a missing table entry maps to an error; the
/// error only propagates to nodes that actually depend on it (an `ite` branch
/// that is not selected does not matter).
pub fn evaluate_all(store: &Store, root: NodeId, interp: &Interpretation) -> HashMap<NodeId, Result<Value>> {
    let order = store.reachable(&[root]);
    let mut vals: HashMap<NodeId, Result<Value>> = HashMap::with_capacity(order.len());
    for n in order {
        let v = eval_node(store, n, interp, &vals);
        vals.insert(n, v);
    }
    vals
}

/// Application terms of `root` grouped by their value under `interp`, in
/// order of value.
pub fn term_partition(store: &Store, root: NodeId, interp: &Interpretation) -> Result<Vec<Vec<NodeId>>> {
    let vals = evaluate_all(store, root, interp);
    let mut groups: BTreeMap<u32, Vec<NodeId>> = BTreeMap::new();
    for t in store.application_terms(root) {
        match &vals[&t] {
            Ok(Value::Dom(d)) => groups.entry(*d).or_default().push(t),
            Ok(Value::Bool(_)) => return Err(Error::Internal("term evaluated to a truth value".into())),
            Err(e) => return Err(e.clone()),
        }
    }
    Ok(groups.into_values().collect())
}

fn eval_node(
    store: &Store,
    n: NodeId,
    interp: &Interpretation,
    vals: &HashMap<NodeId, Result<Value>>,
) -> Result<Value> {
    let get = |c: &NodeId| vals[c].clone();
    let truth = |c: &NodeId| -> Result<bool> {
        get(c)?
            .as_bool()
            .ok_or_else(|| Error::Internal("term used as formula".into()))
    };
    Ok(match store.node(n) {
        Node::True => Value::Bool(true),
        Node::False => Value::Bool(false),
        Node::Not(a) => Value::Bool(!truth(a)?),
        Node::And([a, b]) => {
            let (x, y) = (truth(a), truth(b));
            match (x, y) {
                (Ok(false), _) | (_, Ok(false)) => Value::Bool(false),
                (x, y) => Value::Bool(x? && y?),
            }
        }
        Node::Or([a, b]) => {
            let (x, y) = (truth(a), truth(b));
            match (x, y) {
                (Ok(true), _) | (_, Ok(true)) => Value::Bool(true),
                (x, y) => Value::Bool(x? || y?),
            }
        }
        Node::Eq([a, b]) => Value::Bool(get(a)? == get(b)?),
        Node::Ite([c, t, e]) => {
            if truth(c)? {
                get(t)?
            } else {
                get(e)?
            }
        }
        Node::Func(sym, args) | Node::Pred(sym, args) => {
            let mut argv = Vec::with_capacity(args.len());
            for a in args.iter() {
                argv.push(get(a)?);
            }
            match interp.lookup(*sym, &argv) {
                Some(v) => v,
                None => {
                    return Err(Error::MissingEntry {
                        symbol: store.symbol(*sym).name.clone(),
                        args: argv.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "),
                    })
                }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_formula;

    fn var_interp(store: &Store, vals: &[(&str, Value)]) -> Interpretation {
        let mut i = Interpretation::new();
        for (n, v) in vals {
            i.set_var(store.symbol_id(n).unwrap(), *v);
        }
        i
    }

    #[test]
    fn ite_with_true_control_selects_then_branch() {
        let (s, root) = parse_formula("(= (ite true x1 x2) x1)").unwrap();
        let i = var_interp(&s, &[("x1", Value::Dom(4)), ("x2", Value::Dom(9))]);
        assert_eq!(evaluate(&s, root, &i).unwrap(), Value::Bool(true));
    }

    #[test]
    fn unselected_branch_may_be_uninterpreted() {
        let (s, root) = parse_formula("(= (ite true x1 (f x2)) x1)").unwrap();
        let i = var_interp(&s, &[("x1", Value::Dom(0)), ("x2", Value::Dom(1))]);
        assert_eq!(evaluate(&s, root, &i).unwrap(), Value::Bool(true));
    }

    #[test]
    fn equal_values_make_equation_true() {
        let (s, root) = parse_formula("(= x y)").unwrap();
        let i = var_interp(&s, &[("x", Value::Dom(3)), ("y", Value::Dom(3))]);
        assert_eq!(evaluate(&s, root, &i).unwrap(), Value::Bool(true));
    }

    #[test]
    fn missing_entry_is_an_error() {
        let (s, root) = parse_formula("(= (f x) x)").unwrap();
        let i = var_interp(&s, &[("x", Value::Dom(0))]);
        assert!(matches!(evaluate(&s, root, &i), Err(Error::MissingEntry { .. })));
    }

    #[test]
    fn running_example_under_partition_d2() {
        // {x,y}, {g(x),g(y)}, {g(g(x))}, {h1,h2}
        let (s, root) = parse_formula("(or (not (= x y)) (= (h (g x) (g (g x))) (h (g y) (g (g x)))))").unwrap();
        let mut i = var_interp(&s, &[("x", Value::Dom(0)), ("y", Value::Dom(0))]);
        let g = s.symbol_id("g").unwrap();
        let h = s.symbol_id("h").unwrap();
        i.set(g, vec![Value::Dom(0)], Value::Dom(1));
        i.set(g, vec![Value::Dom(1)], Value::Dom(2));
        i.set(h, vec![Value::Dom(1), Value::Dom(2)], Value::Dom(3));
        assert_eq!(evaluate(&s, root, &i).unwrap(), Value::Bool(true));
    }
}
