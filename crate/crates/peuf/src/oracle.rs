// SPDX-License-Identifier: Apache-2.0

//! Brute-force validity by enumerating partitions of the application terms.
//!
//! Every application term (domain variables included) is assigned a block,
//! and the block index is its value. Nodes are visited in ascending id order,
//! so argument values are known when an application is reached. An
//! application whose symbol and argument values match an earlier one is
//! forced into that block; any other application branches over the existing
//! blocks and one new block. Predicate applications branch over both truth
//! values per distinct argument tuple. Each leaf of the search is one
//! functionally consistent combination.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Node, NodeId, Store, SymbolId, SymbolKind};
use crate::interp::{Interpretation, Value};
use crate::polarity::{classify, to_nnf, PolarityReport};

pub const DEFAULT_GUARD: usize = 12;

/// Guard from `PEUF_ORACLE_GUARD` when set to a number, else the default.
pub fn default_guard() -> usize {
    std::env::var("PEUF_ORACLE_GUARD")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_GUARD)
}

/// Number of set partitions of `n` elements, saturating at `u128::MAX`.
pub fn bell(n: usize) -> u128 {
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for v in &row {
            let prev = *next.last().unwrap();
            next.push(prev.saturating_add(*v));
        }
        row = next;
    }
    row[0]
}

/// Restricted growth strings of length `n`: label `i` is at most one more
/// than the largest earlier label. Each string is one set partition.
#[derive(Clone, Debug)]
pub struct RestrictedGrowth {
    labels: Vec<u32>,
    started: bool,
    done: bool,
}

impl RestrictedGrowth {
    pub fn new(n: usize) -> Self {
        Self {
            labels: vec![0; n],
            started: false,
            done: false,
        }
    }
}

impl Iterator for RestrictedGrowth {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.labels.clone());
        }
        let n = self.labels.len();
        for i in (1..n).rev() {
            let cap = self.labels[..i].iter().max().copied().unwrap_or(0) + 1;
            if self.labels[i] < cap {
                self.labels[i] += 1;
                for l in &mut self.labels[i + 1..] {
                    *l = 0;
                }
                return Some(self.labels.clone());
            }
        }
        self.done = true;
        None
    }
}

/// Raw partitions of the application terms of `root`, as lists of blocks.
pub fn partitionings(store: &Store, root: NodeId) -> impl Iterator<Item = Vec<Vec<NodeId>>> {
    let terms = store.application_terms(root);
    RestrictedGrowth::new(terms.len()).map(move |labels| {
        let count = labels.iter().max().map_or(0, |m| *m as usize + 1);
        let mut blocks = vec![Vec::new(); count];
        for (t, l) in terms.iter().zip(&labels) {
            blocks[*l as usize].push(*t);
        }
        blocks
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Valid,
    Invalid,
}

/// Which combinations the search visits.
#[derive(Clone, Debug)]
pub enum Restrict {
    All,
    /// Applications of the listed symbols only share a block when forced.
    MaximallyDiverse(HashSet<SymbolId>),
}

impl Restrict {
    pub fn diverse_over(report: &PolarityReport) -> Self {
        Restrict::MaximallyDiverse(report.p_funcs.iter().copied().collect())
    }
}

/// A falsifying combination.
#[derive(Clone, Debug)]
pub struct Witness {
    pub blocks: Vec<Vec<NodeId>>,
    /// Block indices as domain values, with tables for every application.
    pub interpretation: Interpretation,
}

impl Witness {
    pub fn describe_blocks(&self, store: &Store) -> Vec<Vec<String>> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|t| store.display(*t)).collect())
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    /// Consistent combinations visited.
    pub consistent: u64,
    /// Visited combinations under which the formula is false.
    pub falsified: u64,
    pub witness: Option<Witness>,
}

struct Search<'a> {
    store: &'a Store,
    order: Vec<NodeId>,
    kids: Vec<Vec<usize>>,
    vals: Vec<Value>,
    block_has_p: Vec<bool>,
    members: Vec<Vec<usize>>,
    func_keys: HashMap<(SymbolId, Vec<Value>), u32>,
    pred_keys: HashMap<(SymbolId, Vec<Value>), bool>,
    diverse: Option<&'a HashSet<SymbolId>>,
    fixed: Option<Vec<u32>>,
    stop_at_first: bool,
    out: SearchOutcome,
}

impl<'a> Search<'a> {
    fn new(store: &'a Store, root: NodeId, restrict: &'a Restrict) -> Self {
        let order = store.reachable(&[root]);
        let pos: HashMap<NodeId, usize> = order.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let kids = order
            .iter()
            .map(|n| store.node(*n).children().iter().map(|c| pos[c]).collect())
            .collect();
        let len = order.len();
        Search {
            store,
            order,
            kids,
            vals: vec![Value::Bool(false); len],
            block_has_p: Vec::new(),
            members: Vec::new(),
            func_keys: HashMap::new(),
            pred_keys: HashMap::new(),
            diverse: match restrict {
                Restrict::All => None,
                Restrict::MaximallyDiverse(p) => Some(p),
            },
            fixed: None,
            stop_at_first: false,
            out: SearchOutcome {
                consistent: 0,
                falsified: 0,
                witness: None,
            },
        }
    }

    fn truth(&self, p: usize) -> bool {
        self.vals[p] == Value::Bool(true)
    }

    fn key(&self, pos: usize, sym: SymbolId) -> (SymbolId, Vec<Value>) {
        (sym, self.kids[pos].iter().map(|k| self.vals[*k]).collect())
    }

    /// Returns true once the search should stop.
    fn run(&mut self, mut pos: usize) -> bool {
        while pos < self.order.len() {
            let k = &self.kids[pos];
            let v = match self.store.node(self.order[pos]) {
                Node::True => Value::Bool(true),
                Node::False => Value::Bool(false),
                Node::Not(_) => Value::Bool(!self.truth(k[0])),
                Node::And(_) => Value::Bool(self.truth(k[0]) && self.truth(k[1])),
                Node::Or(_) => Value::Bool(self.truth(k[0]) || self.truth(k[1])),
                Node::Eq(_) => Value::Bool(self.vals[k[0]] == self.vals[k[1]]),
                Node::Ite(_) => {
                    if self.truth(k[0]) {
                        self.vals[k[1]]
                    } else {
                        self.vals[k[2]]
                    }
                }
                Node::Func(sym, _) => return self.branch_term(pos, *sym),
                Node::Pred(sym, _) => return self.branch_pred(pos, *sym),
            };
            self.vals[pos] = v;
            pos += 1;
        }
        self.leaf()
    }

    fn branch_term(&mut self, pos: usize, sym: SymbolId) -> bool {
        let key = self.key(pos, sym);
        let wanted = self.fixed.as_ref().map(|f| f[pos]);
        if let Some(&b) = self.func_keys.get(&key) {
            if wanted.is_some_and(|w| w != b) {
                return false;
            }
            self.vals[pos] = Value::Dom(b);
            return self.run(pos + 1);
        }
        let is_p = self.diverse.is_some_and(|p| p.contains(&sym));
        let fresh = self.block_has_p.len() as u32;
        let choices: Vec<u32> = match (wanted, self.diverse) {
            (Some(w), _) => vec![w],
            (None, None) => (0..=fresh).collect(),
            (None, Some(_)) if is_p => vec![fresh],
            (None, Some(_)) => (0..fresh)
                .filter(|b| !self.block_has_p[*b as usize])
                .chain(std::iter::once(fresh))
                .collect(),
        };
        for b in choices {
            let bi = b as usize;
            let grown = bi >= self.block_has_p.len();
            let mut was_p = false;
            if grown {
                self.block_has_p.resize(bi + 1, false);
                self.members.resize(bi + 1, Vec::new());
            } else {
                was_p = self.block_has_p[bi];
            }
            let len_before = self.block_has_p.len();
            self.block_has_p[bi] |= is_p;
            self.members[bi].push(pos);
            self.func_keys.insert(key.clone(), b);
            self.vals[pos] = Value::Dom(b);
            let stop = self.run(pos + 1);
            self.func_keys.remove(&key);
            self.members[bi].pop();
            self.block_has_p[bi] = was_p;
            if grown && self.fixed.is_none() {
                self.block_has_p.truncate(len_before - 1);
                self.members.truncate(len_before - 1);
            }
            if stop {
                return true;
            }
        }
        false
    }

    fn branch_pred(&mut self, pos: usize, sym: SymbolId) -> bool {
        let key = self.key(pos, sym);
        if let Some(&b) = self.pred_keys.get(&key) {
            self.vals[pos] = Value::Bool(b);
            return self.run(pos + 1);
        }
        for b in [false, true] {
            self.pred_keys.insert(key.clone(), b);
            self.vals[pos] = Value::Bool(b);
            let stop = self.run(pos + 1);
            self.pred_keys.remove(&key);
            if stop {
                return true;
            }
        }
        false
    }

    fn leaf(&mut self) -> bool {
        self.out.consistent += 1;
        let root = self.order.len() - 1;
        if self.truth(root) {
            return false;
        }
        self.out.falsified += 1;
        if self.out.witness.is_none() {
            self.out.witness = Some(self.witness());
        }
        self.stop_at_first
    }

    fn witness(&self) -> Witness {
        let blocks = self
            .members
            .iter()
            .filter(|m| !m.is_empty())
            .map(|m| m.iter().map(|p| self.order[*p]).collect())
            .collect();
        let mut interp = Interpretation::new();
        for ((sym, args), b) in &self.func_keys {
            interp.set(*sym, args.clone(), Value::Dom(*b));
        }
        for ((sym, args), b) in &self.pred_keys {
            interp.set(*sym, args.clone(), Value::Bool(*b));
        }
        for (id, s) in self.store.symbols() {
            if s.order() > 0 {
                let d = match s.kind {
                    SymbolKind::Function => Value::Dom(0),
                    SymbolKind::Predicate => Value::Bool(false),
                };
                interp.set_default(id, d);
            }
        }
        Witness {
            blocks,
            interpretation: interp,
        }
    }
}

/// Application terms that branch under `restrict`: all of them, or only
/// those outside the diverse symbol set.
pub fn branching_terms(store: &Store, root: NodeId, restrict: &Restrict) -> usize {
    let terms = store.application_terms(root);
    match restrict {
        Restrict::All => terms.len(),
        Restrict::MaximallyDiverse(p) => terms
            .iter()
            .filter(|t| !store.node(**t).symbol().is_some_and(|s| p.contains(&s)))
            .count(),
    }
}

/// Predicate applications under `root`; each one can double the search.
fn predicate_applications(store: &Store, root: NodeId) -> usize {
    store
        .postorder(root)
        .into_iter()
        .filter(|&n| matches!(store.node(n), Node::Pred(..)))
        .count()
}

/// Term count whose partition count matches the search space of `root`:
/// the smallest `m` with `bell(m) >= bell(terms) * 2^predicates`.
pub fn effective_terms(store: &Store, root: NodeId, restrict: &Restrict) -> usize {
    let n = branching_terms(store, root, restrict);
    let k = predicate_applications(store, root).min(100) as u32;
    let space = bell(n).saturating_mul(1u128.checked_shl(k).unwrap_or(u128::MAX));
    let mut m = n;
    while bell(m) < space {
        m += 1;
    }
    m
}

fn guarded(store: &Store, root: NodeId, restrict: &Restrict, guard: usize) -> Result<()> {
    let n = effective_terms(store, root, restrict);
    if n > guard {
        return Err(Error::SizeGuard { terms: n, limit: guard });
    }
    Ok(())
}

/// Visits every consistent combination under `restrict`.
pub fn count(store: &Store, root: NodeId, restrict: &Restrict, guard: usize) -> Result<SearchOutcome> {
    guarded(store, root, restrict, guard)?;
    let mut s = Search::new(store, root, restrict);
    s.run(0);
    Ok(s.out)
}

#[derive(Clone, Debug)]
pub struct OracleRun {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
}

/// Validity under `restrict`, stopping at the first falsifying combination.
pub fn oracle_validity(store: &Store, root: NodeId, restrict: &Restrict, guard: usize) -> Result<OracleRun> {
    guarded(store, root, restrict, guard)?;
    let mut s = Search::new(store, root, restrict);
    s.stop_at_first = true;
    s.run(0);
    Ok(OracleRun {
        verdict: if s.out.falsified == 0 {
            Verdict::Valid
        } else {
            Verdict::Invalid
        },
        witness: s.out.witness,
    })
}

/// Result of checking one fixed partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionCheck {
    /// Predicate assignments consistent with the partition; zero means the
    /// partition itself violates functional consistency.
    pub consistent: u64,
    pub falsified: u64,
}

/// Checks the partition `blocks` of the application terms of `root`. Terms
/// missing from `blocks` are an error.
pub fn check_partition(store: &Store, root: NodeId, blocks: &[Vec<NodeId>]) -> Result<PartitionCheck> {
    let restrict = Restrict::All;
    let mut s = Search::new(store, root, &restrict);
    let mut label: HashMap<NodeId, u32> = HashMap::new();
    for (i, b) in blocks.iter().enumerate() {
        for t in b {
            label.insert(*t, i as u32);
        }
    }
    let mut fixed = vec![0; s.order.len()];
    for (p, n) in s.order.iter().enumerate() {
        if matches!(store.node(*n), Node::Func(..)) {
            fixed[p] = *label
                .get(n)
                .ok_or_else(|| Error::Internal(format!("term {} is in no block", store.display(*n))))?;
        }
    }
    s.fixed = Some(fixed);
    s.run(0);
    Ok(PartitionCheck {
        consistent: s.out.consistent,
        falsified: s.out.falsified,
    })
}

/// Counts reported for one formula.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleReport {
    pub terms: usize,
    /// Set partitions of the application terms, as a decimal string since it
    /// can exceed 64 bits.
    pub raw_partitions: String,
    /// Consistent combinations; absent when the term count exceeds the guard.
    pub consistent: Option<u64>,
    pub maximally_diverse: u64,
    pub verdict: Verdict,
    /// Blocks of a falsifying combination, as printed terms.
    pub witness: Option<Vec<Vec<String>>>,
    #[serde(skip)]
    pub witness_interpretation: Option<Interpretation>,
}

/// Full report: unrestricted counts when the term count is within `guard`,
/// and the maximally diverse count over the p-functions of the NNF. The
/// verdict comes from the unrestricted search when it ran, else from the
/// diverse one.
pub fn report(store: &mut Store, root: NodeId, guard: usize) -> Result<OracleReport> {
    let terms = store.application_terms(root).len();
    let nnf = to_nnf(store, root);
    let polarity = classify(store, nnf)?;
    let diverse = Restrict::diverse_over(&polarity);
    let md = count(store, nnf, &diverse, guard)?;
    let full = if effective_terms(store, root, &Restrict::All) <= guard {
        Some(count(store, root, &Restrict::All, guard)?)
    } else {
        None
    };
    let decisive = full.as_ref().unwrap_or(&md);
    let verdict = if decisive.falsified == 0 {
        Verdict::Valid
    } else {
        Verdict::Invalid
    };
    Ok(OracleReport {
        terms,
        raw_partitions: bell(terms).to_string(),
        consistent: full.as_ref().map(|f| f.consistent),
        maximally_diverse: md.consistent,
        verdict,
        witness: decisive.witness.as_ref().map(|w| w.describe_blocks(store)),
        witness_interpretation: decisive.witness.as_ref().map(|w| w.interpretation.clone()),
    })
}
