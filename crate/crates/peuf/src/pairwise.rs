// SPDX-License-Identifier: Apache-2.0

//! Equality indicators between g-variables.
//!
//! Variables are numbered `1..=n` for the g-variables and `n+1..=n+m` for the
//! p-variables. Each term maps to a sparse selector list `(index, condition)`
//! naming the variables it can evaluate to. An equation between two terms
//! holds when they select the same variable, or two g-variables whose
//! indicator `e_<i>_<j>` is set. p-variables only equal themselves.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::bitvec::unused_name;
use crate::error::{Error, Result};
use crate::expr::{Node, NodeId, Store, SymbolId};
use crate::interp::{Interpretation, Value};
use crate::prop::{PropDag, PropId};

pub type Selector = Vec<(usize, PropId)>;

#[derive(Clone, Debug)]
pub struct PairwiseEncoding {
    pub n: usize,
    pub m: usize,
    /// 1-based index of each domain variable.
    pub index: HashMap<SymbolId, usize>,
    /// Domain variable at each index, index 0 unused.
    pub vars: Vec<Option<SymbolId>>,
    /// Indicators by `(i, j)` with `i < j <= n`.
    pub e_vars: BTreeMap<(usize, usize), PropId>,
    pub formula: PropId,
    pub selectors: HashMap<NodeId, Selector>,
}

fn e_var(
    dag: &mut PropDag,
    store: &Store,
    e_vars: &mut BTreeMap<(usize, usize), PropId>,
    i: usize,
    j: usize,
) -> PropId {
    if i == j {
        return dag.tt();
    }
    let key = (i.min(j), i.max(j));
    if let Some(&p) = e_vars.get(&key) {
        return p;
    }
    let name = unused_name(store, format!("e_{}_{}", key.0, key.1));
    let p = dag.var(&name);
    e_vars.insert(key, p);
    p
}

/// Encodes `f_star` given its g- and p-variables in order.
pub fn encode(
    dag: &mut PropDag,
    store: &Store,
    f_star: NodeId,
    g_vars: &[SymbolId],
    p_vars: &[SymbolId],
) -> Result<PairwiseEncoding> {
    let n = g_vars.len();
    let mut index = HashMap::new();
    let mut vars = vec![None];
    for (k, v) in g_vars.iter().chain(p_vars).enumerate() {
        index.insert(*v, k + 1);
        vars.push(Some(*v));
    }
    let mut e_vars = BTreeMap::new();
    let mut sel: HashMap<NodeId, Selector> = HashMap::new();
    let mut forms: HashMap<NodeId, PropId> = HashMap::new();
    for node in store.reachable(&[f_star]) {
        match store.node(node) {
            Node::True => {
                forms.insert(node, dag.tt());
            }
            Node::False => {
                forms.insert(node, dag.ff());
            }
            Node::Not(a) => {
                let x = dag.not(forms[a]);
                forms.insert(node, x);
            }
            Node::And([a, b]) => {
                let x = dag.and(forms[a], forms[b]);
                forms.insert(node, x);
            }
            Node::Or([a, b]) => {
                let x = dag.or(forms[a], forms[b]);
                forms.insert(node, x);
            }
            Node::Eq([a, b]) => {
                let (left, right) = (sel[a].clone(), sel[b].clone());
                let mut parts = Vec::new();
                for &(i, ci) in &left {
                    for &(j, cj) in &right {
                        if i <= n && j <= n {
                            let e = e_var(dag, store, &mut e_vars, i, j);
                            let both = dag.and(ci, cj);
                            parts.push(dag.and(both, e));
                        } else if i == j {
                            parts.push(dag.and(ci, cj));
                        }
                    }
                }
                let x = dag.or_all(parts);
                forms.insert(node, x);
            }
            Node::Ite([c, t, e]) => {
                let g = forms[c];
                let ng = dag.not(g);
                let mut merged: BTreeMap<usize, PropId> = BTreeMap::new();
                for &(i, ci) in &sel[t] {
                    let x = dag.and(g, ci);
                    merged.insert(i, x);
                }
                for &(i, ci) in &sel[e] {
                    let x = dag.and(ng, ci);
                    let prev = merged.get(&i).copied().unwrap_or(dag.ff());
                    let y = dag.or(prev, x);
                    merged.insert(i, y);
                }
                let list = merged.into_iter().filter(|(_, c)| *c != dag.ff()).collect();
                sel.insert(node, list);
            }
            Node::Func(sym, args) => {
                if !args.is_empty() {
                    return Err(Error::Internal(format!(
                        "application {} left in the formula",
                        store.display(node)
                    )));
                }
                let i = *index
                    .get(sym)
                    .ok_or_else(|| Error::UnmappedVariable(store.symbol(*sym).name.clone()))?;
                sel.insert(node, vec![(i, dag.tt())]);
            }
            Node::Pred(sym, args) => {
                if !args.is_empty() {
                    return Err(Error::Internal(format!(
                        "application {} left in the formula",
                        store.display(node)
                    )));
                }
                let x = dag.var(&store.symbol(*sym).name);
                forms.insert(node, x);
            }
        }
    }
    Ok(PairwiseEncoding {
        n,
        m: p_vars.len(),
        index,
        vars,
        formula: forms[&f_star],
        e_vars,
        selectors: sel,
    })
}

/// Transitivity implications. Indices linked by used indicators form
/// components; each component of three or more indices is completed with
/// indicators for all its pairs, and every triple in it contributes three
/// implications.
pub fn transitivity_constraints(dag: &mut PropDag, store: &Store, enc: &mut PairwiseEncoding) -> Vec<PropId> {
    let mut parent: Vec<usize> = (0..=enc.n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for &(i, j) in enc.e_vars.keys() {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        parent[a.max(b)] = a.min(b);
    }
    let touched: BTreeSet<usize> = enc.e_vars.keys().flat_map(|&(i, j)| [i, j]).collect();
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in touched {
        let r = find(&mut parent, i);
        comps.entry(r).or_default().push(i);
    }
    let mut out = Vec::new();
    for comp in comps.values() {
        for (x, &i) in comp.iter().enumerate() {
            for (y, &j) in comp.iter().enumerate().skip(x + 1) {
                for &k in &comp[y + 1..] {
                    let eij = e_var(dag, store, &mut enc.e_vars, i, j);
                    let ejk = e_var(dag, store, &mut enc.e_vars, j, k);
                    let eik = e_var(dag, store, &mut enc.e_vars, i, k);
                    for (p, q, r) in [(eij, ejk, eik), (eij, eik, ejk), (eik, ejk, eij)] {
                        let both = dag.and(p, q);
                        out.push(dag.implies(both, r));
                    }
                }
            }
        }
    }
    out
}

/// Index selected by `term` under `assignment`, when exactly one selector
/// condition holds.
pub fn selector_of(
    dag: &PropDag,
    enc: &PairwiseEncoding,
    term: NodeId,
    assignment: &dyn Fn(u32) -> bool,
) -> Option<usize> {
    let hits: Vec<usize> = enc
        .selectors
        .get(&term)?
        .iter()
        .filter(|(_, c)| dag.eval(*c, assignment))
        .map(|(i, _)| *i)
        .collect();
    match hits.as_slice() {
        [i] => Some(*i),
        _ => None,
    }
}

/// Interpretation of the domain variables for an assignment that obeys
/// transitivity: a g-variable takes the smallest index it is marked equal
/// to, a p-variable its own index.
pub fn decode(dag: &PropDag, enc: &PairwiseEncoding, assignment: &dyn Fn(u32) -> bool) -> Interpretation {
    let mut interp = Interpretation::new();
    for j in 1..enc.vars.len() {
        let mut value = j;
        if j <= enc.n {
            for i in 1..j {
                if enc.e_vars.get(&(i, j)).is_some_and(|e| dag.eval(*e, assignment)) {
                    value = i;
                    break;
                }
            }
        }
        if let Some(v) = enc.vars[j] {
            interp.set_var(v, Value::Dom(value as u32));
        }
    }
    interp
}

/// Sizes reported for a pairwise run.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PairwiseStats {
    pub g_vars: usize,
    pub p_vars: usize,
    pub e_vars: usize,
    pub constraints: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elim::eliminate_all;
    use crate::parse::parse_formula;
    use crate::polarity::{classify, to_nnf};

    fn setup(text: &str) -> (Store, PropDag, PairwiseEncoding) {
        let (mut s, f) = parse_formula(text).unwrap();
        let nnf = to_nnf(&mut s, f);
        let report = classify(&s, nnf).unwrap();
        let r = eliminate_all(&mut s, nnf, &report);
        let mut d = PropDag::new();
        let enc = encode(&mut d, &s, r.f_star, &r.sigma_g, &r.sigma_p).unwrap();
        (s, d, enc)
    }

    #[test]
    fn running_example_uses_one_indicator() {
        let (s, mut d, mut enc) = setup("(or (not (= x y)) (= (h (g x) (g (g x))) (h (g y) (g (g x)))))");
        assert_eq!((enc.n, enc.m), (2, 5));
        let names: Vec<&str> = d.vars_in(&[enc.formula]).iter().map(|v| d.var_name(*v)).collect();
        assert_eq!(names, ["e_1_2"]);
        assert_eq!(enc.e_vars.len(), 1);
        assert!(d.eval(enc.formula, &|_| true) && d.eval(enc.formula, &|_| false));
        assert!(transitivity_constraints(&mut d, &s, &mut enc).is_empty());
    }

    #[test]
    fn selector_of_second_replacement() {
        let (mut s, f) = parse_formula("(or (not (= x y)) (= (h (g x) (g (g x))) (h (g y) (g (g x)))))").unwrap();
        let nnf = to_nnf(&mut s, f);
        let report = classify(&s, nnf).unwrap();
        let r = eliminate_all(&mut s, nnf, &report);
        let mut d = PropDag::new();
        let enc = encode(&mut d, &s, r.f_star, &r.sigma_g, &r.sigma_p).unwrap();
        let u2 = r.trace[0].replacements[1];
        let vg1 = enc.index[&r.trace[0].fresh[0]];
        let vg2 = enc.index[&r.trace[0].fresh[1]];
        assert_eq!(selector_of(&d, &enc, u2, &|_| true), Some(vg1));
        assert_eq!(selector_of(&d, &enc, u2, &|_| false), Some(vg2));
        let x = s.var_node("x");
        assert_eq!(selector_of(&d, &enc, x, &|_| false), Some(1));
    }

    #[test]
    fn p_variables_equal_only_themselves() {
        let mut s = Store::new();
        let u = s.var("u");
        let w = s.var("w");
        let same = s.eq(u, u);
        let diff = s.eq(u, w);
        let (us, ws) = (s.symbol_id("u").unwrap(), s.symbol_id("w").unwrap());
        let mut d = PropDag::new();
        let enc = encode(&mut d, &s, same, &[], &[us, ws]).unwrap();
        assert_eq!(enc.formula, d.tt());
        let enc = encode(&mut d, &s, diff, &[], &[us, ws]).unwrap();
        assert_eq!(enc.formula, d.ff());
    }

    #[test]
    fn full_triangle_gives_three_implications() {
        let (s, mut d, mut enc) = setup("(or (not (= x y)) (not (= y z)) (= x z))");
        assert_eq!(enc.e_vars.len(), 3);
        let t = transitivity_constraints(&mut d, &s, &mut enc);
        assert_eq!(t.len(), 3);
        // Without constraints the chain is falsified by e_1_2 = e_2_3 = 1, e_1_3 = 0.
        let e13 = d.var_index("e_1_3").unwrap();
        assert!(!d.eval(enc.formula, &|v| v != e13));
        let all = d.and_all(t.iter().copied());
        assert!(!d.eval(all, &|v| v != e13));
    }

    #[test]
    fn components_are_completed() {
        // Uses e_1_2 and e_2_3 only; the component {1,2,3} gets e_1_3 too.
        let (s, mut d, mut enc) = setup("(or (not (= x y)) (not (= y z)) (p x z))");
        assert_eq!(enc.e_vars.len(), 2);
        let t = transitivity_constraints(&mut d, &s, &mut enc);
        assert_eq!(t.len(), 3);
        assert_eq!(enc.e_vars.len(), 3);
    }

    #[test]
    fn decode_follows_indicators() {
        let (s, d, enc) = setup("(or (not (= x y)) (not (= y z)) (= x z))");
        let i = decode(&d, &enc, &|_| true);
        let vals: Vec<Value> = ["x", "y", "z"]
            .iter()
            .map(|n| i.lookup(s.symbol_id(n).unwrap(), &[]).unwrap())
            .collect();
        assert_eq!(vals, [Value::Dom(1); 3]);
    }
}
