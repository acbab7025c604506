// SPDX-License-Identifier: Apache-2.0

//! Seeded random formulas for cross-checking the deciders.
//!
//! About half of the formulas are built from shapes that are usually valid
//! (congruence under a random context, transitivity chains, case splits on an
//! `ite`), optionally weakened or perturbed; the rest are random boolean
//! combinations of equations and predicate applications. Every formula stays
//! within the configured number of application terms so the oracle can check
//! it exhaustively.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::parse::parse_formula;

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GenConfig {
    /// Nonzero-order symbols, at most three are used.
    pub symbols: usize,
    pub max_arity: usize,
    pub max_depth: usize,
    /// Upper bound on distinct application terms, variables included.
    pub max_terms: usize,
    pub variables: usize,
    /// Allow a predicate symbol and a propositional variable.
    pub predicates: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            symbols: 3,
            max_arity: 2,
            max_depth: 5,
            max_terms: 10,
            variables: 3,
            predicates: true,
        }
    }
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    vars: Vec<&'static str>,
    funcs: Vec<(&'static str, usize)>,
    pred: Option<(&'static str, usize)>,
    prop: Option<&'static str>,
}

impl Gen<'_> {
    fn var(&mut self) -> String {
        self.vars.choose(self.rng).unwrap().to_string()
    }

    fn term(&mut self, depth: usize) -> String {
        if depth == 0 || self.funcs.is_empty() || self.rng.gen_bool(0.35) {
            return self.var();
        }
        if depth >= 2 && self.rng.gen_bool(0.15) {
            let c = self.atom(depth - 1);
            let t = self.term(depth - 1);
            let e = self.term(depth - 1);
            return format!("(ite {c} {t} {e})");
        }
        let (f, arity) = *self.funcs.choose(self.rng).unwrap();
        let args: Vec<String> = (0..arity).map(|_| self.term(depth - 1)).collect();
        format!("({f} {})", args.join(" "))
    }

    fn atom(&mut self, depth: usize) -> String {
        let d = depth.min(2);
        if let Some((p, arity)) = self.pred {
            if self.rng.gen_bool(0.2) {
                let args: Vec<String> = (0..arity).map(|_| self.term(d)).collect();
                return format!("({p} {})", args.join(" "));
            }
        }
        if let Some(a) = self.prop {
            if self.rng.gen_bool(0.1) {
                return a.to_string();
            }
        }
        let l = self.term(d);
        let r = self.term(d);
        format!("(= {l} {r})")
    }

    fn literal(&mut self, depth: usize) -> String {
        let a = self.atom(depth);
        if self.rng.gen_bool(0.5) {
            format!("(not {a})")
        } else {
            a
        }
    }

    fn random(&mut self, depth: usize) -> String {
        if depth <= 1 || self.rng.gen_bool(0.3) {
            return self.literal(depth);
        }
        let op = ["and", "or", "or"].choose(self.rng).unwrap();
        let l = self.random(depth - 1);
        let r = self.random(depth - 1);
        if self.rng.gen_bool(0.1) {
            format!("(not ({op} {l} {r}))")
        } else {
            format!("({op} {l} {r})")
        }
    }

    /// A term containing `hole` somewhere inside an application.
    fn context(&mut self, hole: &str, depth: usize) -> String {
        if depth == 0 || self.funcs.is_empty() || self.rng.gen_bool(0.3) {
            return hole.to_string();
        }
        let (f, arity) = *self.funcs.choose(self.rng).unwrap();
        let at = self.rng.gen_range(0..arity);
        let args: Vec<String> = (0..arity)
            .map(|i| {
                if i == at {
                    self.context(hole, depth - 1)
                } else {
                    self.term(1)
                }
            })
            .collect();
        format!("({f} {})", args.join(" "))
    }

    fn shaped(&mut self, depth: usize) -> String {
        let core = match self.rng.gen_range(0..4) {
            0 | 1 => {
                let s = self.term(1);
                let t = self.term(1);
                let ctx = self.context("HOLE", depth.saturating_sub(2).max(1));
                let (l, r) = (ctx.replace("HOLE", &s), ctx.replace("HOLE", &t));
                format!("(or (not (= {s} {t})) (= {l} {r}))")
            }
            2 => {
                let (a, b, c) = (self.term(1), self.term(1), self.term(1));
                format!("(or (not (= {a} {b})) (or (not (= {b} {c})) (= {a} {c})))")
            }
            _ => {
                let c = self.atom(1);
                let t = self.term(1);
                let e = self.term(1);
                format!("(or (= (ite {c} {t} {e}) {t}) (= (ite {c} {t} {e}) {e}))")
            }
        };
        match self.rng.gen_range(0..4) {
            0 => {
                let extra = self.literal(1);
                format!("(or {core} {extra})")
            }
            1 => {
                let extra = self.literal(1);
                format!("(and {core} {extra})")
            }
            _ => core,
        }
    }
}

/// One random formula in surface syntax.
pub fn random_formula(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> String {
    const VARS: [&str; 4] = ["x", "y", "z", "w"];
    const FUNCS: [&str; 3] = ["f", "g", "h"];
    loop {
        let nsym = cfg.symbols.min(3);
        let with_pred = cfg.predicates && nsym > 0 && rng.gen_bool(0.4);
        let nfun = if with_pred { nsym - 1 } else { nsym };
        let funcs: Vec<(&'static str, usize)> = FUNCS[..nfun]
            .iter()
            .map(|f| (*f, rng.gen_range(1..=cfg.max_arity.max(1))))
            .collect();
        let mut g = Gen {
            vars: VARS[..cfg.variables.clamp(1, 4)].to_vec(),
            funcs,
            pred: with_pred.then(|| ("p", rng.gen_range(1..=cfg.max_arity.clamp(1, 2)))),
            prop: (cfg.predicates && rng.gen_bool(0.3)).then_some("a"),
            rng,
        };
        let depth = g.rng.gen_range(2..=cfg.max_depth.max(2));
        let text = if g.rng.gen_bool(0.5) {
            g.shaped(depth)
        } else {
            g.random(depth)
        };
        if let Ok((store, root)) = parse_formula(&text) {
            if store.application_terms(root).len() <= cfg.max_terms {
                return text;
            }
        }
    }
}

/// `count` formulas from `seed`.
pub fn corpus(seed: u64, count: usize, cfg: &GenConfig) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_formula(&mut rng, cfg)).collect()
}
