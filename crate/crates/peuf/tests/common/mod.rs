// SPDX-License-Identifier: Apache-2.0

//! Helpers shared by the integration tests.
//!
//! `explicit` is a validity check written without the library's evaluator or
//! partition search: it looks for a falsifying interpretation over a small
//! concrete domain, filling in function table entries only when evaluation
//! asks for them.

#![allow(dead_code)]

use std::collections::HashMap;

use peuf::expr::{Node, NodeId, Sort, Store, SymbolId, SymbolKind};
use peuf::gen::{random_formula, GenConfig};
use peuf::{Interpretation, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FEG: &str = "(or (not (= x y)) (= (h (g x) (g (g x))) (h (g y) (g (g x)))))";

pub fn formula(seed: u64, cfg: &GenConfig) -> String {
    random_formula(&mut ChaCha8Rng::seed_from_u64(seed), cfg)
}

/// Full tables over `0..domain` for every symbol under `root`, with random
/// values.
pub fn random_interpretation(store: &Store, root: NodeId, domain: u32, rng: &mut ChaCha8Rng) -> Interpretation {
    let mut interp = Interpretation::new();
    for sym in store.symbols_in(root) {
        let s = store.symbol(sym);
        let mut tuples: Vec<Vec<Value>> = vec![Vec::new()];
        for sort in &s.arg_sorts {
            let choices: Vec<Value> = match sort {
                Sort::Term => (0..domain).map(Value::Dom).collect(),
                Sort::Formula => vec![Value::Bool(false), Value::Bool(true)],
            };
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    choices.iter().map(move |c| {
                        let mut t = t.clone();
                        t.push(*c);
                        t
                    })
                })
                .collect();
        }
        for t in tuples {
            let v = match s.kind {
                SymbolKind::Function => Value::Dom(rng.gen_range(0..domain)),
                SymbolKind::Predicate => Value::Bool(rng.gen_bool(0.5)),
            };
            interp.set(sym, t, v);
        }
    }
    interp
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Val {
    D(u32),
    B(bool),
}

type Key = (SymbolId, Vec<Val>);

/// Evaluation that stops at the first table entry it lacks.
fn eval(store: &Store, n: NodeId, tables: &HashMap<Key, Val>) -> Result<Val, Key> {
    Ok(match store.node(n) {
        Node::True => Val::B(true),
        Node::False => Val::B(false),
        Node::Not(a) => Val::B(!as_bool(eval(store, *a, tables)?)),
        Node::And([a, b]) => Val::B(as_bool(eval(store, *a, tables)?) && as_bool(eval(store, *b, tables)?)),
        Node::Or([a, b]) => Val::B(as_bool(eval(store, *a, tables)?) || as_bool(eval(store, *b, tables)?)),
        Node::Eq([a, b]) => Val::B(eval(store, *a, tables)? == eval(store, *b, tables)?),
        Node::Ite([c, t, e]) => {
            if as_bool(eval(store, *c, tables)?) {
                eval(store, *t, tables)?
            } else {
                eval(store, *e, tables)?
            }
        }
        Node::Func(s, args) | Node::Pred(s, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args.iter() {
                vals.push(eval(store, *a, tables)?);
            }
            let key = (*s, vals);
            match tables.get(&key) {
                Some(v) => *v,
                None => return Err(key),
            }
        }
    })
}

fn as_bool(v: Val) -> bool {
    match v {
        Val::B(b) => b,
        Val::D(_) => panic!("domain value where a truth value was expected"),
    }
}

fn search(store: &Store, root: NodeId, domain: u32, tables: &mut HashMap<Key, Val>) -> bool {
    match eval(store, root, tables) {
        Ok(v) => !as_bool(v),
        Err(key) => {
            let choices: Vec<Val> = match store.symbol(key.0).kind {
                SymbolKind::Function => (0..domain).map(Val::D).collect(),
                SymbolKind::Predicate => vec![Val::B(false), Val::B(true)],
            };
            for c in choices {
                tables.insert(key.clone(), c);
                if search(store, root, domain, tables) {
                    return true;
                }
            }
            tables.remove(&key);
            false
        }
    }
}

/// True if some interpretation over a domain of `domain` elements falsifies
/// `root`.
pub fn explicit_falsifiable(store: &Store, root: NodeId, domain: u32) -> bool {
    search(store, root, domain, &mut HashMap::new())
}

/// Validity by explicit search. Complete once `domain` reaches the number of
/// application terms, since a falsifying interpretation never needs more
/// values than there are terms.
pub fn explicit_valid(store: &Store, root: NodeId, domain: u32) -> bool {
    !explicit_falsifiable(store, root, domain)
}
