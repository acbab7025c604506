// SPDX-License-Identifier: Apache-2.0

//! Clause form with definition variables, and DIMACS text.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prop::{PNode, PropDag, PropId};

/// Where a clause came from.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Formula,
    Transitivity,
    Range,
}

/// Clauses over variables `1..=num_vars`. The first `names.len()` variables
/// are the named ones; later variables are definitions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Vec<i32>>,
    pub provenance: Vec<Provenance>,
    pub names: Vec<String>,
}

impl Cnf {
    pub fn named_vars(&self) -> u32 {
        self.names.len() as u32
    }

    pub fn count(&self, p: Provenance) -> usize {
        self.provenance.iter().filter(|x| **x == p).count()
    }

    pub fn var_of(&self, name: &str) -> Option<u32> {
        self.names.iter().position(|n| n == name).map(|i| i as u32 + 1)
    }

    /// True if `model` (indexed by variable minus one) satisfies every clause.
    pub fn satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|&l| model[l.unsigned_abs() as usize - 1] == (l > 0)))
    }
}

struct Builder<'a> {
    dag: &'a PropDag,
    cnf: Cnf,
    lit: HashMap<PropId, i32>,
    var_of: HashMap<u32, i32>,
    true_var: Option<i32>,
}

impl Builder<'_> {
    fn fresh(&mut self) -> i32 {
        self.cnf.num_vars += 1;
        self.cnf.num_vars as i32
    }

    fn clause(&mut self, c: Vec<i32>, p: Provenance) {
        self.cnf.clauses.push(c);
        self.cnf.provenance.push(p);
    }

    fn constant(&mut self, b: bool, p: Provenance) -> i32 {
        let t = match self.true_var {
            Some(t) => t,
            None => {
                let t = self.fresh();
                self.true_var = Some(t);
                self.clause(vec![t], p);
                t
            }
        };
        if b {
            t
        } else {
            -t
        }
    }

    /// Literal for `root`, defining every node under it that has none yet.
    fn define(&mut self, root: PropId, p: Provenance) -> i32 {
        for n in self.dag.reachable(&[root]) {
            if self.lit.contains_key(&n) {
                continue;
            }
            let l = match *self.dag.node(n) {
                PNode::Const(b) => self.constant(b, p),
                PNode::Var(v) => self.var_of[&v],
                PNode::Not(a) => -self.lit[&a],
                PNode::And(a, b) => {
                    let (x, y, t) = (self.lit[&a], self.lit[&b], self.fresh());
                    self.clause(vec![-t, x], p);
                    self.clause(vec![-t, y], p);
                    self.clause(vec![t, -x, -y], p);
                    t
                }
                PNode::Or(a, b) => {
                    let (x, y, t) = (self.lit[&a], self.lit[&b], self.fresh());
                    self.clause(vec![t, -x], p);
                    self.clause(vec![t, -y], p);
                    self.clause(vec![-t, x, y], p);
                    t
                }
                PNode::Implies(a, b) => {
                    let (x, y, t) = (self.lit[&a], self.lit[&b], self.fresh());
                    self.clause(vec![t, x], p);
                    self.clause(vec![t, -y], p);
                    self.clause(vec![-t, -x, y], p);
                    t
                }
                PNode::Iff(a, b) => {
                    let (x, y, t) = (self.lit[&a], self.lit[&b], self.fresh());
                    self.clause(vec![-t, -x, y], p);
                    self.clause(vec![-t, x, -y], p);
                    self.clause(vec![t, x, y], p);
                    self.clause(vec![t, -x, -y], p);
                    t
                }
            };
            self.lit.insert(n, l);
        }
        self.lit[&root]
    }
}

/// Clause form asserting every root, each tagged with its provenance.
/// Named variables come first, in registry order, restricted to those that
/// occur under some root. Satisfiable iff the conjunction of roots is.
pub fn to_cnf(dag: &PropDag, roots: &[(PropId, Provenance)]) -> Cnf {
    let ids: Vec<PropId> = roots.iter().map(|r| r.0).collect();
    let used = dag.vars_in(&ids);
    let mut b = Builder {
        dag,
        cnf: Cnf::default(),
        lit: HashMap::new(),
        var_of: HashMap::new(),
        true_var: None,
    };
    for v in used {
        let x = b.fresh();
        b.var_of.insert(v, x);
        b.cnf.names.push(dag.var_name(v).to_string());
    }
    for &(root, p) in roots {
        match dag.as_const(root) {
            Some(true) => {}
            Some(false) => b.clause(Vec::new(), p),
            None => {
                let l = b.define(root, p);
                b.clause(vec![l], p);
            }
        }
    }
    b.cnf
}

/// DIMACS text. Named variables are listed in `c var <index> <name>` lines.
pub fn to_dimacs(cnf: &Cnf) -> String {
    let mut out = String::new();
    for (i, n) in cnf.names.iter().enumerate() {
        let _ = writeln!(out, "c var {} {}", i + 1, n);
    }
    let _ = writeln!(out, "p cnf {} {}", cnf.num_vars, cnf.clauses.len());
    for c in &cnf.clauses {
        for l in c {
            let _ = write!(out, "{l} ");
        }
        out.push_str("0\n");
    }
    out
}

/// Reads DIMACS text. `c var` lines restore names; the named variables must
/// be numbered `1..=n` without gaps. Clauses read this way are tagged as
/// formula clauses.
pub fn parse_dimacs(text: &str) -> Result<Cnf> {
    let mut cnf = Cnf::default();
    let mut names: Vec<(u32, String)> = Vec::new();
    let mut header: Option<(u32, usize)> = None;
    let mut current: Vec<i32> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        let bad = |m: &str| Error::Dimacs(format!("line {}: {m}", lineno + 1));
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('c') {
            let mut words = rest.split_whitespace();
            if words.next() == Some("var") {
                let idx = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| bad("malformed variable name line"))?;
                let name = words.next().ok_or_else(|| bad("missing variable name"))?;
                names.push((idx, name.to_string()));
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix('p') {
            let w: Vec<&str> = rest.split_whitespace().collect();
            if w.len() != 3 || w[0] != "cnf" {
                return Err(bad("expected `p cnf <vars> <clauses>`"));
            }
            let v = w[1].parse().map_err(|_| bad("bad variable count"))?;
            let c = w[2].parse().map_err(|_| bad("bad clause count"))?;
            header = Some((v, c));
            continue;
        }
        let (nv, _) = header.ok_or_else(|| bad("clause before header"))?;
        for w in line.split_whitespace() {
            let l: i32 = w.parse().map_err(|_| bad("bad literal"))?;
            if l == 0 {
                cnf.clauses.push(std::mem::take(&mut current));
                cnf.provenance.push(Provenance::Formula);
            } else {
                if l.unsigned_abs() > nv {
                    return Err(bad("literal exceeds variable count"));
                }
                current.push(l);
            }
        }
    }
    let (nv, nc) = header.ok_or_else(|| Error::Dimacs("missing header".into()))?;
    if !current.is_empty() {
        cnf.clauses.push(current);
        cnf.provenance.push(Provenance::Formula);
    }
    if cnf.clauses.len() != nc {
        return Err(Error::Dimacs(format!(
            "header announces {nc} clauses, found {}",
            cnf.clauses.len()
        )));
    }
    names.sort();
    for (i, (idx, n)) in names.into_iter().enumerate() {
        if idx != i as u32 + 1 || idx > nv {
            return Err(Error::Dimacs(format!("variable name for {idx} out of sequence")));
        }
        cnf.names.push(n);
    }
    cnf.num_vars = nv;
    Ok(cnf)
}
