// SPDX-License-Identifier: Apache-2.0

//! Invariants of each stage, checked on generated formulas and clause sets.

mod common;

use common::{explicit_valid, formula, random_interpretation};
use peuf::bitvec::{assign_encodings, decode as bitvec_decode};
use peuf::cnf::{to_cnf, Cnf, Provenance};
use peuf::decide::{encode, prepare, Method};
use peuf::elim::{ackermann_eliminate, is_application_free, lift_interpretation};
use peuf::gen::GenConfig;
use peuf::oracle::{oracle_validity, Restrict, Verdict};
use peuf::pairwise::selector_of;
use peuf::polarity::{classify, is_nnf, to_nnf, GrammarCheck};
use peuf::prop::{PropDag, PropId};
use peuf::sat::{self, Engine, SatResult};
use peuf::{evaluate, parse_formula, Node, Store, Value};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small() -> GenConfig {
    GenConfig {
        max_terms: 5,
        max_depth: 4,
        ..GenConfig::default()
    }
}

fn eval_bool(store: &Store, root: peuf::NodeId, interp: &peuf::Interpretation) -> bool {
    evaluate(store, root, interp).unwrap().as_bool().unwrap()
}

/// Clause sets over at most `vars` variables.
fn clauses(vars: u32) -> impl Strategy<Value = Cnf> {
    let lit = (1..=vars as i32, any::<bool>()).prop_map(|(v, neg)| if neg { -v } else { v });
    prop::collection::vec(prop::collection::vec(lit, 0..4), 0..14).prop_map(move |clauses| Cnf {
        num_vars: vars,
        provenance: vec![Provenance::Formula; clauses.len()],
        clauses,
        names: Vec::new(),
    })
}

fn brute_force_sat(cnf: &Cnf) -> bool {
    (0u32..1 << cnf.num_vars).any(|bits| {
        let model: Vec<bool> = (0..cnf.num_vars).map(|i| bits >> i & 1 == 1).collect();
        cnf.satisfied_by(&model)
    })
}

/// A random propositional DAG over `vars` variables, returning its root.
fn random_dag(dag: &mut PropDag, vars: usize, steps: usize, rng: &mut ChaCha8Rng) -> PropId {
    let mut pool: Vec<PropId> = (0..vars).map(|i| dag.var(&format!("p{i}"))).collect();
    for _ in 0..steps {
        let a = pool[rng.gen_range(0..pool.len())];
        let b = pool[rng.gen_range(0..pool.len())];
        let c = pool[rng.gen_range(0..pool.len())];
        let n = match rng.gen_range(0..6) {
            0 => dag.not(a),
            1 => dag.and(a, b),
            2 => dag.or(a, b),
            3 => dag.implies(a, b),
            4 => dag.iff(a, b),
            _ => dag.ite(a, b, c),
        };
        pool.push(n);
    }
    *pool.last().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn nnf_keeps_meaning_and_is_stable(seed in any::<u64>(), iseed in any::<u64>()) {
        let (mut s, f) = parse_formula(&formula(seed, &GenConfig::default())).unwrap();
        let nnf = to_nnf(&mut s, f);
        prop_assert!(is_nnf(&s, nnf));
        prop_assert_eq!(to_nnf(&mut s, nnf), nnf);
        let mut rng = ChaCha8Rng::seed_from_u64(iseed);
        for _ in 0..4 {
            let i = random_interpretation(&s, f, 3, &mut rng);
            prop_assert_eq!(eval_bool(&s, f, &i), eval_bool(&s, nnf, &i));
        }
    }

    #[test]
    fn grammar_accepts_classified_nnf(seed in any::<u64>()) {
        let (mut s, f) = parse_formula(&formula(seed, &GenConfig::default())).unwrap();
        let nnf = to_nnf(&mut s, f);
        let report = classify(&s, nnf).unwrap();
        prop_assert!(GrammarCheck::new(&s, &report).accepts(nnf));
        for sym in report.g_funcs.iter() {
            prop_assert!(!report.is_p(*sym));
        }
    }

    #[test]
    fn printing_round_trips(seed in any::<u64>(), share in any::<bool>()) {
        let (s, f) = parse_formula(&formula(seed, &GenConfig::default())).unwrap();
        let text = s.to_source_with(f, share);
        let (s2, f2) = parse_formula(&text).unwrap();
        prop_assert_eq!(s.display(f), s2.display(f2));
        prop_assert_eq!(s.application_terms(f).len(), s2.application_terms(f2).len());
    }

    #[test]
    fn both_engines_match_truth_table(cnf in clauses(6)) {
        let expect = brute_force_sat(&cnf);
        for engine in [Engine::Cdcl, Engine::Backtracking] {
            match sat::run(&cnf, engine) {
                SatResult::Sat(model) => {
                    prop_assert!(expect, "{:?} found a model of an unsatisfiable set", engine);
                    prop_assert!(cnf.satisfied_by(&model));
                }
                SatResult::Unsat => prop_assert!(!expect, "{:?} missed a model", engine),
            }
        }
    }

    #[test]
    fn clause_form_is_equisatisfiable_per_assignment(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dag = PropDag::new();
        let vars = 4;
        let root = random_dag(&mut dag, vars, 8, &mut rng);
        let cnf = to_cnf(&dag, &[(root, Provenance::Formula)]);
        for bits in 0u32..1 << vars {
            let value = |i: u32| bits >> i & 1 == 1;
            let mut fixed = cnf.clone();
            for (k, name) in cnf.names.iter().enumerate() {
                let lit = (k + 1) as i32;
                let i = dag.var_index(name).unwrap();
                fixed.clauses.push(vec![if value(i) { lit } else { -lit }]);
                fixed.provenance.push(Provenance::Formula);
            }
            prop_assert_eq!(sat::solve(&fixed).is_sat(), dag.eval(root, &value));
        }
    }

    #[test]
    fn selectors_pick_exactly_one_index(seed in any::<u64>(), aseed in any::<u64>()) {
        let (mut s, f) = parse_formula(&formula(seed, &GenConfig::default())).unwrap();
        let prepared = prepare(&mut s, f).unwrap();
        let enc = encode(&s, &prepared, Method::Pairwise, true).unwrap();
        let pw = enc.pairwise.as_ref().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(aseed);
        let bits: Vec<bool> = (0..enc.dag.var_count()).map(|_| rng.gen_bool(0.5)).collect();
        let assignment = |i: u32| bits[i as usize];
        for term in pw.selectors.keys() {
            let i = selector_of(&enc.dag, pw, *term, &assignment);
            prop_assert!(i.is_some_and(|i| (1..=pw.n + pw.m).contains(&i)));
        }
    }

    #[test]
    fn bit_vectors_respect_their_ranges(g in 0usize..9, p in 0usize..6, seed in any::<u64>()) {
        let mut s = Store::new();
        let g_vars: Vec<_> = (0..g).map(|k| s.function(&format!("u{k}"), 0)).collect();
        let p_vars: Vec<_> = (0..p).map(|k| s.function(&format!("w{k}"), 0)).collect();
        let mut dag = PropDag::new();
        let enc = assign_encodings(&mut dag, &s, &g_vars, &p_vars);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<bool> = (0..dag.var_count()).map(|_| rng.gen_bool(0.5)).collect();
        let assignment = |i: u32| bits[i as usize];
        let in_range = enc.ranges.iter().all(|r| dag.eval(*r, &assignment));
        let interp = bitvec_decode(&dag, &enc, &assignment);
        for (k, v) in g_vars.iter().enumerate() {
            let value = interp.lookup(*v, &[]).unwrap().as_dom().unwrap() as usize;
            if in_range {
                prop_assert!(value <= k, "u{} = {}", k, value);
            }
        }
        for (k, v) in p_vars.iter().enumerate() {
            prop_assert_eq!(interp.lookup(*v, &[]), Some(Value::Dom((g + k) as u32)));
        }
    }

    #[test]
    fn lifted_interpretation_agrees_with_eliminated_formula(seed in any::<u64>(), iseed in any::<u64>()) {
        let (mut s, f) = parse_formula(&formula(seed, &GenConfig::default())).unwrap();
        let prepared = prepare(&mut s, f).unwrap();
        let star = prepared.elimination.f_star;
        prop_assert!(is_application_free(&s, star));
        let mut rng = ChaCha8Rng::seed_from_u64(iseed);
        for _ in 0..4 {
            let i = random_interpretation(&s, star, 4, &mut rng);
            let lifted = lift_interpretation(&s, prepared.nnf, &prepared.elimination, &i).unwrap();
            prop_assert_eq!(eval_bool(&s, star, &i), eval_bool(&s, prepared.nnf, &lifted));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    /// The partition search, both eliminations and both encodings agree with
    /// a plain search for a falsifying model over as many values as there are
    /// application terms.
    #[test]
    fn validity_matches_explicit_search(seed in any::<u64>()) {
        let text = formula(seed, &small());
        let (mut s, f) = parse_formula(&text).unwrap();
        let terms = s.application_terms(f).len() as u32;
        let expect = if explicit_valid(&s, f, terms.max(1)) { Verdict::Valid } else { Verdict::Invalid };

        let oracle = oracle_validity(&s, f, &Restrict::All, 12).unwrap();
        prop_assert_eq!(oracle.verdict, expect, "oracle on {}", text);

        let prepared = prepare(&mut s, f).unwrap();
        let star = prepared.elimination.f_star;
        let star_terms = s.application_terms(star).len() as u32;
        prop_assert_eq!(explicit_valid(&s, star, star_terms.max(1)), expect == Verdict::Valid, "nested ite on {}", text);

        let nnf = to_nnf(&mut s, f);
        let ack = ackermann_eliminate(&mut s, nnf);
        let ack_terms = s.application_terms(ack.formula).len() as u32;
        prop_assert_eq!(explicit_valid(&s, ack.formula, ack_terms.max(1)), expect == Verdict::Valid, "ackermann on {}", text);

        for m in [Method::Bitvec, Method::Pairwise] {
            let mut enc = encode(&s, &prepared, m, true).unwrap();
            let unsat = !sat::solve(&enc.refutation_cnf()).is_sat();
            prop_assert_eq!(unsat, expect == Verdict::Valid, "{} on {}", m, text);
        }
    }

    /// Restricting the search to maximally diverse combinations loses no
    /// falsifying one, and every witness it reports is a real countermodel.
    #[test]
    fn diverse_search_is_enough(seed in any::<u64>()) {
        let (mut s, f) = parse_formula(&formula(seed, &GenConfig::default())).unwrap();
        let nnf = to_nnf(&mut s, f);
        let report = classify(&s, nnf).unwrap();
        let all = oracle_validity(&s, nnf, &Restrict::All, 12).unwrap();
        let diverse = oracle_validity(&s, nnf, &Restrict::diverse_over(&report), 12).unwrap();
        prop_assert_eq!(all.verdict, diverse.verdict);
        if let Some(w) = diverse.witness {
            prop_assert!(!eval_bool(&s, nnf, &w.interpretation));
            // Applications of p-functions share a block only with others of
            // the same symbol.
            for block in &w.blocks {
                for t in block {
                    if let Node::Func(sym, args) = s.node(*t) {
                        if report.is_p(*sym) && !args.is_empty() {
                            prop_assert!(block.iter().all(|u| s.node(*u).symbol() == Some(*sym)));
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn explicit_search_separates_known_cases() {
    let (s, f) = parse_formula(common::FEG).unwrap();
    assert!(explicit_valid(&s, f, 7));
    let (s, f) = parse_formula("(= (h (g x) (g (g x))) (h (g y) (g (g y))))").unwrap();
    assert!(!explicit_valid(&s, f, 7));
    // Needs two values: with one, every equation holds.
    let (s, f) = parse_formula("(= x y)").unwrap();
    assert!(explicit_valid(&s, f, 1));
    assert!(!explicit_valid(&s, f, 2));
}

#[test]
fn generated_formulas_are_not_all_one_verdict() {
    let mut valid = 0;
    for seed in 0..200 {
        let (s, f) = parse_formula(&formula(seed, &small())).unwrap();
        let terms = s.application_terms(f).len() as u32;
        valid += explicit_valid(&s, f, terms.max(1)) as usize;
    }
    assert!(valid > 10 && valid < 190, "{valid} of 200 valid");
}
