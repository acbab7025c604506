// SPDX-License-Identifier: Apache-2.0

//! Domain variables as fixed-width bit vectors.
//!
//! With `n` g-variables and `m` p-variables the width is
//! `max(1, ceil(log2(n + m)))`. The g-variable at 1-based position `i` owns
//! `ceil(log2 i)` free low bits named `a_<i-1>_<bit>` and is constrained to
//! `0..i`. The p-variable at 1-based position `j` is the constant `n - 1 + j`,
//! so p-values are pairwise distinct and lie above every g-value.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Node, NodeId, Store, SymbolId};
use crate::interp::{Interpretation, Value};
use crate::prop::{PropDag, PropId};

#[derive(Clone, Debug)]
pub struct BitVecEncoding {
    pub width: usize,
    pub g_vars: Vec<SymbolId>,
    pub p_vars: Vec<SymbolId>,
    /// Bits of each domain variable, most significant first.
    pub bits: HashMap<SymbolId, Vec<PropId>>,
    /// Range restrictions on g-variables whose position is not a power of two.
    pub ranges: Vec<PropId>,
    /// Names of the free bit variables, in creation order.
    pub free: Vec<String>,
}

fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// A name not used by any symbol of `store`.
pub(crate) fn unused_name(store: &Store, base: String) -> String {
    let mut name = base;
    while store.symbol_id(&name).is_some() {
        name.push('\'');
    }
    name
}

/// Constant vector for `value`, most significant bit first.
fn constant(dag: &PropDag, width: usize, value: usize) -> Vec<PropId> {
    (0..width)
        .rev()
        .map(|b| if value >> b & 1 == 1 { dag.tt() } else { dag.ff() })
        .collect()
}

/// `bits <= bound` as a formula, bits most significant first.
fn at_most(dag: &mut PropDag, bits: &[PropId], bound: usize) -> PropId {
    // Scan from the least significant bit: at each position the suffix so far
    // is <= the bound's suffix.
    let mut ok = dag.tt();
    let w = bits.len();
    for (pos, &bit) in bits.iter().enumerate().rev() {
        let shift = w - 1 - pos;
        ok = if bound >> shift & 1 == 1 {
            let nb = dag.not(bit);
            dag.or(nb, ok)
        } else {
            let nb = dag.not(bit);
            dag.and(nb, ok)
        };
    }
    ok
}

/// Bit vectors for the given variables.
pub fn assign_encodings(dag: &mut PropDag, store: &Store, g_vars: &[SymbolId], p_vars: &[SymbolId]) -> BitVecEncoding {
    let n = g_vars.len();
    let width = ceil_log2(n + p_vars.len()).max(1);
    let mut bits = HashMap::new();
    let mut ranges = Vec::new();
    let mut free = Vec::new();
    for (k, &v) in g_vars.iter().enumerate() {
        let i = k + 1;
        let owned = ceil_log2(i);
        let mut vec = constant(dag, width - owned, 0);
        for b in (0..owned).rev() {
            let name = unused_name(store, format!("a_{k}_{b}"));
            vec.push(dag.var(&name));
            free.push(name);
        }
        if !i.is_power_of_two() {
            let r = at_most(dag, &vec, i - 1);
            ranges.push(r);
        }
        bits.insert(v, vec);
    }
    for (k, &v) in p_vars.iter().enumerate() {
        bits.insert(v, constant(dag, width, n + k));
    }
    BitVecEncoding {
        width,
        g_vars: g_vars.to_vec(),
        p_vars: p_vars.to_vec(),
        bits,
        ranges,
        free,
    }
}

/// Translation of the application-free formula `f_star`.
pub fn encode_formula(dag: &mut PropDag, store: &Store, f_star: NodeId, enc: &BitVecEncoding) -> Result<PropId> {
    let mut terms: HashMap<NodeId, Vec<PropId>> = HashMap::new();
    let mut forms: HashMap<NodeId, PropId> = HashMap::new();
    for n in store.reachable(&[f_star]) {
        match store.node(n) {
            Node::True => {
                forms.insert(n, dag.tt());
            }
            Node::False => {
                forms.insert(n, dag.ff());
            }
            Node::Not(a) => {
                let x = dag.not(forms[a]);
                forms.insert(n, x);
            }
            Node::And([a, b]) => {
                let x = dag.and(forms[a], forms[b]);
                forms.insert(n, x);
            }
            Node::Or([a, b]) => {
                let x = dag.or(forms[a], forms[b]);
                forms.insert(n, x);
            }
            Node::Eq([a, b]) => {
                let pairs: Vec<(PropId, PropId)> = terms[a].iter().copied().zip(terms[b].iter().copied()).collect();
                let mut acc = dag.tt();
                for (x, y) in pairs {
                    let e = dag.iff(x, y);
                    acc = dag.and(acc, e);
                }
                forms.insert(n, acc);
            }
            Node::Ite([c, t, e]) => {
                let g = forms[c];
                let v: Vec<PropId> = (0..enc.width).map(|b| dag.ite(g, terms[t][b], terms[e][b])).collect();
                terms.insert(n, v);
            }
            Node::Func(sym, args) => {
                if !args.is_empty() {
                    return Err(Error::Internal(format!(
                        "application {} left in the formula",
                        store.display(n)
                    )));
                }
                let v = enc
                    .bits
                    .get(sym)
                    .ok_or_else(|| Error::UnmappedVariable(store.symbol(*sym).name.clone()))?;
                terms.insert(n, v.clone());
            }
            Node::Pred(sym, args) => {
                if !args.is_empty() {
                    return Err(Error::Internal(format!(
                        "application {} left in the formula",
                        store.display(n)
                    )));
                }
                let x = dag.var(&store.symbol(*sym).name);
                forms.insert(n, x);
            }
        }
    }
    Ok(forms[&f_star])
}

/// Integer values of the domain variables under a propositional assignment.
pub fn decode(dag: &PropDag, enc: &BitVecEncoding, assignment: &dyn Fn(u32) -> bool) -> Interpretation {
    let mut interp = Interpretation::new();
    for v in enc.g_vars.iter().chain(&enc.p_vars) {
        let value = enc.bits[v]
            .iter()
            .fold(0u32, |acc, b| acc << 1 | dag.eval(*b, assignment) as u32);
        interp.set_var(*v, Value::Dom(value));
    }
    interp
}

/// Printable pattern of one variable, e.g. `<0,0,a_1_0>`.
pub fn pattern(dag: &PropDag, enc: &BitVecEncoding, v: SymbolId) -> String {
    let parts: Vec<String> = enc.bits[&v].iter().map(|b| dag.to_prefix(*b)).collect();
    format!("<{}>", parts.join(","))
        .replace("false", "0")
        .replace("true", "1")
}

/// Variable-to-pattern rows in encoding order.
#[derive(Clone, Debug, Serialize)]
pub struct PatternRow {
    pub variable: String,
    pub class: &'static str,
    pub pattern: String,
}

pub fn pattern_table(dag: &PropDag, store: &Store, enc: &BitVecEncoding) -> Vec<PatternRow> {
    let g = enc.g_vars.iter().map(|v| (v, "g"));
    let p = enc.p_vars.iter().map(|v| (v, "p"));
    g.chain(p)
        .map(|(v, class)| PatternRow {
            variable: store.symbol(*v).name.clone(),
            class,
            pattern: pattern(dag, enc, *v),
        })
        .collect()
}
