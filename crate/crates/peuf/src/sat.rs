// SPDX-License-Identifier: Apache-2.0

//! Conflict-driven clause learning.
//!
//! Two watched literals per clause, first-UIP learning with non-chronological
//! backjumping, activity-ordered decisions with saved phases and Luby
//! restarts. Learned clauses are pruned by size once they outnumber the
//! input clauses. Ties in activity go to the lowest-numbered variable and a
//! fresh variable is tried `false` first, so runs are deterministic and the
//! first decisions fall on named variables. [`solve_backtracking`] is the
//! plain chronological search, kept as a reference and for small inputs.

use serde::{Deserialize, Serialize};

use crate::cnf::Cnf;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    /// Model indexed by variable minus one.
    Sat(Vec<bool>),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

/// Search engine behind [`run`].
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Cdcl,
    Backtracking,
}

impl std::str::FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cdcl" => Ok(Engine::Cdcl),
            "backtracking" => Ok(Engine::Backtracking),
            other => Err(format!("unknown solver `{other}` (expected cdcl or backtracking)")),
        }
    }
}

pub fn run(cnf: &Cnf, engine: Engine) -> SatResult {
    match engine {
        Engine::Cdcl => solve(cnf),
        Engine::Backtracking => solve_backtracking(cnf),
    }
}

const UNASSIGNED: u8 = 2;
const NO_REASON: usize = usize::MAX;

fn var(l: i32) -> usize {
    l.unsigned_abs() as usize - 1
}

fn lit_index(l: i32) -> usize {
    var(l) * 2 + (l < 0) as usize
}

/// Max-heap of variables keyed by activity, lower index first on ties.
struct Order {
    heap: Vec<usize>,
    pos: Vec<usize>,
}

const ABSENT: usize = usize::MAX;

impl Order {
    fn new(n: usize) -> Self {
        Order {
            heap: (0..n).collect(),
            pos: (0..n).collect(),
        }
    }

    fn above(act: &[f64], a: usize, b: usize) -> bool {
        act[a] > act[b] || (act[a] == act[b] && a < b)
    }

    fn up(&mut self, act: &[f64], mut i: usize) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if !Self::above(act, v, self.heap[parent]) {
                break;
            }
            self.heap[i] = self.heap[parent];
            self.pos[self.heap[i]] = i;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v] = i;
    }

    fn down(&mut self, act: &[f64], mut i: usize) {
        let v = self.heap[i];
        loop {
            let l = 2 * i + 1;
            if l >= self.heap.len() {
                break;
            }
            let r = l + 1;
            let c = if r < self.heap.len() && Self::above(act, self.heap[r], self.heap[l]) {
                r
            } else {
                l
            };
            if !Self::above(act, self.heap[c], v) {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i]] = i;
            i = c;
        }
        self.heap[i] = v;
        self.pos[v] = i;
    }

    fn insert(&mut self, act: &[f64], v: usize) {
        if self.pos[v] != ABSENT {
            return;
        }
        self.heap.push(v);
        self.pos[v] = self.heap.len() - 1;
        self.up(act, self.heap.len() - 1);
    }

    fn bumped(&mut self, act: &[f64], v: usize) {
        if self.pos[v] != ABSENT {
            self.up(act, self.pos[v]);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top] = ABSENT;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last] = 0;
            self.down(act, 0);
        }
        Some(top)
    }
}

struct Clause {
    lits: Vec<i32>,
    learned: bool,
    deleted: bool,
}

struct Solver {
    clauses: Vec<Clause>,
    watches: Vec<Vec<usize>>,
    value: Vec<u8>,
    level: Vec<usize>,
    reason: Vec<usize>,
    phase: Vec<bool>,
    activity: Vec<f64>,
    bump: f64,
    order: Order,
    trail: Vec<i32>,
    /// Trail length at the start of each decision level.
    limits: Vec<usize>,
    head: usize,
    seen: Vec<bool>,
    original: usize,
    learned: usize,
}

impl Solver {
    fn new(n: usize) -> Self {
        Solver {
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            value: vec![UNASSIGNED; n],
            level: vec![0; n],
            reason: vec![NO_REASON; n],
            phase: vec![false; n],
            activity: vec![0.0; n],
            bump: 1.0,
            order: Order::new(n),
            trail: Vec::new(),
            limits: Vec::new(),
            head: 0,
            seen: vec![false; n],
            original: 0,
            learned: 0,
        }
    }

    fn lit_value(&self, l: i32) -> u8 {
        let v = self.value[var(l)];
        if v == UNASSIGNED {
            v
        } else {
            (v == 1) as u8 ^ (l < 0) as u8
        }
    }

    fn decision_level(&self) -> usize {
        self.limits.len()
    }

    fn assign(&mut self, l: i32, reason: usize) {
        let v = var(l);
        self.value[v] = (l > 0) as u8;
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn attach(&mut self, lits: Vec<i32>, learned: bool) -> usize {
        let ci = self.clauses.len();
        self.watches[lit_index(lits[0])].push(ci);
        self.watches[lit_index(lits[1])].push(ci);
        self.clauses.push(Clause {
            lits,
            learned,
            deleted: false,
        });
        ci
    }

    /// Conflicting clause, if any.
    fn propagate(&mut self) -> Option<usize> {
        while self.head < self.trail.len() {
            let falsified = -self.trail[self.head];
            self.head += 1;
            let wl = lit_index(falsified);
            let mut i = 0;
            while i < self.watches[wl].len() {
                let ci = self.watches[wl][i];
                if self.clauses[ci].deleted {
                    self.watches[wl].swap_remove(i);
                    continue;
                }
                let c = &mut self.clauses[ci].lits;
                if c[0] == falsified {
                    c.swap(0, 1);
                }
                let first = c[0];
                if self.lit_value(first) == 1 {
                    i += 1;
                    continue;
                }
                let c = &self.clauses[ci].lits;
                let replacement = (2..c.len()).find(|&k| self.lit_value(c[k]) != 0);
                if let Some(k) = replacement {
                    let c = &mut self.clauses[ci].lits;
                    c.swap(1, k);
                    let nl = c[1];
                    self.watches[wl].swap_remove(i);
                    self.watches[lit_index(nl)].push(ci);
                    continue;
                }
                if self.lit_value(first) == 0 {
                    return Some(ci);
                }
                self.assign(first, ci);
                i += 1;
            }
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.bump;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.bump *= 1e-100;
        }
        self.order.bumped(&self.activity, v);
    }

    /// First-UIP clause (asserting literal first) and the level to return to.
    fn analyze(&mut self, mut conflict: usize) -> (Vec<i32>, usize) {
        let mut learnt = vec![0];
        let mut pending = 0;
        let mut idx = self.trail.len();
        let current = self.decision_level();
        let mut asserting;
        loop {
            let lits = self.clauses[conflict].lits.clone();
            let skip = usize::from(learnt[0] != 0);
            for &q in &lits[skip..] {
                let v = var(q);
                if self.seen[v] || self.level[v] == 0 {
                    continue;
                }
                self.seen[v] = true;
                self.bump_var(v);
                if self.level[v] == current {
                    pending += 1;
                } else {
                    learnt.push(q);
                }
            }
            loop {
                idx -= 1;
                if self.seen[var(self.trail[idx])] {
                    break;
                }
            }
            asserting = self.trail[idx];
            self.seen[var(asserting)] = false;
            pending -= 1;
            if pending == 0 {
                break;
            }
            conflict = self.reason[var(asserting)];
            learnt[0] = asserting;
        }
        learnt[0] = -asserting;
        for l in &learnt[1..] {
            self.seen[var(*l)] = false;
        }
        let mut back = 0;
        if learnt.len() > 1 {
            let mut best = 1;
            for k in 2..learnt.len() {
                if self.level[var(learnt[k])] > self.level[var(learnt[best])] {
                    best = k;
                }
            }
            learnt.swap(1, best);
            back = self.level[var(learnt[1])];
        }
        self.bump /= 0.95;
        (learnt, back)
    }

    fn backjump(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let len = self.limits[level];
        for k in (len..self.trail.len()).rev() {
            let l = self.trail[k];
            let v = var(l);
            self.phase[v] = l > 0;
            self.value[v] = UNASSIGNED;
            self.reason[v] = NO_REASON;
            self.order.insert(&self.activity, v);
        }
        self.trail.truncate(len);
        self.limits.truncate(level);
        self.head = len;
    }

    fn locked(&self, ci: usize) -> bool {
        let l = self.clauses[ci].lits[0];
        self.lit_value(l) == 1 && self.reason[var(l)] == ci
    }

    /// Drops the longer half of the unlocked learned clauses.
    fn reduce(&mut self) {
        let mut cands: Vec<usize> = (0..self.clauses.len())
            .filter(|&ci| {
                let c = &self.clauses[ci];
                c.learned && !c.deleted && c.lits.len() > 2 && !self.locked(ci)
            })
            .collect();
        cands.sort_by_key(|&ci| std::cmp::Reverse(self.clauses[ci].lits.len()));
        for &ci in &cands[..cands.len() / 2] {
            self.clauses[ci].deleted = true;
            self.clauses[ci].lits = Vec::new();
            self.learned -= 1;
        }
    }

    fn decide(&mut self) -> Option<i32> {
        while let Some(v) = self.order.pop(&self.activity) {
            if self.value[v] == UNASSIGNED {
                let l = v as i32 + 1;
                return Some(if self.phase[v] { l } else { -l });
            }
        }
        None
    }
}

/// Element `i` (from 1) of the Luby sequence 1 1 2 1 1 2 4 ...
fn luby(mut i: u64) -> u64 {
    loop {
        let mut k = 1;
        while (1u64 << k) - 1 < i {
            k += 1;
        }
        if (1u64 << k) - 1 == i {
            return 1 << (k - 1);
        }
        i -= (1u64 << (k - 1)) - 1;
    }
}

/// Decides satisfiability of `cnf`.
pub fn solve(cnf: &Cnf) -> SatResult {
    let n = cnf.num_vars as usize;
    let mut s = Solver::new(n);
    let mut units = Vec::new();
    for c in &cnf.clauses {
        let mut c = c.clone();
        c.sort_unstable_by_key(|l| (l.unsigned_abs(), *l));
        c.dedup();
        if c.windows(2).any(|w| w[0] == -w[1]) {
            continue;
        }
        match c.len() {
            0 => return SatResult::Unsat,
            1 => units.push(c[0]),
            _ => {
                s.attach(c, false);
                s.original += 1;
            }
        }
    }
    for u in units {
        match s.lit_value(u) {
            0 => return SatResult::Unsat,
            1 => {}
            _ => s.assign(u, NO_REASON),
        }
    }
    let mut restarts = 1;
    let mut budget = 100 * luby(restarts);
    let mut conflicts = 0u64;
    loop {
        if let Some(conflict) = s.propagate() {
            if s.decision_level() == 0 {
                return SatResult::Unsat;
            }
            conflicts += 1;
            let (learnt, back) = s.analyze(conflict);
            s.backjump(back);
            if learnt.len() == 1 {
                s.assign(learnt[0], NO_REASON);
            } else {
                let first = learnt[0];
                let ci = s.attach(learnt, true);
                s.learned += 1;
                s.assign(first, ci);
            }
            continue;
        }
        if conflicts >= budget {
            conflicts = 0;
            restarts += 1;
            budget = 100 * luby(restarts);
            s.backjump(0);
            if s.learned > s.original.max(1000) {
                s.reduce();
            }
            continue;
        }
        match s.decide() {
            None => return SatResult::Sat(s.value.iter().map(|v| *v == 1).collect()),
            Some(l) => {
                s.limits.push(s.trail.len());
                s.assign(l, NO_REASON);
            }
        }
    }
}

/// Chronological backtracking with unit propagation and no learning: after a
/// conflict the most recent decision not yet tried both ways is flipped.
/// Decisions take the lowest-numbered unassigned variable, `false` first.
/// Kept as an independent reference for [`solve`].
pub fn solve_backtracking(cnf: &Cnf) -> SatResult {
    let n = cnf.num_vars as usize;
    let mut s = Solver::new(n);
    let mut units = Vec::new();
    for c in &cnf.clauses {
        let mut c = c.clone();
        c.sort_unstable_by_key(|l| (l.unsigned_abs(), *l));
        c.dedup();
        if c.windows(2).any(|w| w[0] == -w[1]) {
            continue;
        }
        match c.len() {
            0 => return SatResult::Unsat,
            1 => units.push(c[0]),
            _ => {
                s.attach(c, false);
            }
        }
    }
    for u in units {
        match s.lit_value(u) {
            0 => return SatResult::Unsat,
            1 => {}
            _ => s.assign(u, NO_REASON),
        }
    }
    // Trail length at each decision, and whether it has been flipped.
    let mut levels: Vec<(usize, bool)> = Vec::new();
    let mut next_var = 0;
    loop {
        if s.propagate().is_some() {
            loop {
                let Some((len, flipped)) = levels.pop() else {
                    return SatResult::Unsat;
                };
                let decision = s.trail[len];
                for l in s.trail.drain(len..) {
                    s.value[var(l)] = UNASSIGNED;
                }
                s.head = len;
                next_var = next_var.min(var(decision));
                if !flipped {
                    levels.push((len, true));
                    s.assign(-decision, NO_REASON);
                    break;
                }
            }
            continue;
        }
        while next_var < n && s.value[next_var] != UNASSIGNED {
            next_var += 1;
        }
        if next_var == n {
            return SatResult::Sat(s.value.iter().map(|v| *v == 1).collect());
        }
        levels.push((s.trail.len(), false));
        s.assign(-(next_var as i32 + 1), NO_REASON);
    }
}
