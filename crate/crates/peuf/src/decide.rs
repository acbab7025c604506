// SPDX-License-Identifier: Apache-2.0

//! Validity decisions: NNF, classification, elimination, an encoder, and the
//! satisfiability search on the negated encoding.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::bitvec;
use crate::cnf::{to_cnf, Cnf, Provenance};
use crate::elim::{eliminate_all, lift_interpretation, EliminationResult};
use crate::error::{Error, Result};
use crate::expr::{NodeId, Sort, Store};
use crate::interp::{evaluate, evaluate_all, Interpretation, Value};
use crate::oracle::{self, OracleReport, Verdict};
use crate::pairwise;
use crate::polarity::{classify, to_nnf};
use crate::prop::{PropDag, PropId};
use crate::sat::{self, Engine, SatResult};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bitvec,
    Pairwise,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Bitvec, Method::Pairwise, Method::Oracle];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Bitvec => "bitvec",
            Method::Pairwise => "pairwise",
            Method::Oracle => "oracle",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bitvec" => Ok(Method::Bitvec),
            "pairwise" => Ok(Method::Pairwise),
            "oracle" => Ok(Method::Oracle),
            other => Err(format!("unknown method `{other}` (bitvec, pairwise, oracle)")),
        }
    }
}

#[derive(Copy, Clone, Debug)]
pub struct DecideOptions {
    /// Add transitivity constraints on the pairwise path.
    pub transitivity: bool,
    pub guard: usize,
    pub solver: Engine,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            transitivity: true,
            guard: oracle::default_guard(),
            solver: Engine::default(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VarCounts {
    /// Named propositional variables in the clause form.
    pub propositional: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_vars: Option<usize>,
}

/// Falsifying interpretation of the original formula.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Countermodel {
    /// Values of the order-0 symbols.
    pub variables: BTreeMap<String, Value>,
    /// Listed entries of the tables of nonzero-order symbols.
    pub tables: BTreeMap<String, Vec<(Vec<Value>, Value)>>,
    /// Application terms grouped by value.
    pub blocks: Vec<Vec<String>>,
    /// The original formula evaluates to false under `interpretation`.
    pub confirmed: bool,
    #[serde(skip)]
    pub interpretation: Interpretation,
}

impl Countermodel {
    fn new(store: &Store, root: NodeId, interpretation: Interpretation) -> Self {
        let described = interpretation.describe(store);
        let own: std::collections::HashSet<_> = store.symbols_in(root).into_iter().collect();
        let mut variables = BTreeMap::new();
        let mut tables = BTreeMap::new();
        for (name, rows) in described {
            let sym = store.symbol_id(&name).expect("described symbols exist");
            if !own.contains(&sym) {
                continue;
            }
            if store.symbol(sym).order() == 0 {
                if let Some((_, v)) = rows.first() {
                    variables.insert(name, *v);
                }
            } else {
                tables.insert(name, rows);
            }
        }
        let vals = evaluate_all(store, root, &interpretation);
        let mut groups: BTreeMap<u32, Vec<String>> = BTreeMap::new();
        for t in store.application_terms(root) {
            if let Some(Ok(Value::Dom(d))) = vals.get(&t) {
                groups.entry(*d).or_default().push(store.display(t));
            }
        }
        let confirmed = matches!(vals.get(&root), Some(Ok(Value::Bool(false))));
        Countermodel {
            variables,
            tables,
            blocks: groups.into_values().collect(),
            confirmed,
            interpretation,
        }
    }

    /// Evaluates `root` under the countermodel again.
    pub fn replay(&self, store: &Store, root: NodeId) -> Result<bool> {
        match evaluate(store, root, &self.interpretation)? {
            Value::Bool(b) => Ok(!b),
            Value::Dom(_) => Err(Error::Internal("formula evaluated to a domain value".into())),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Decision {
    pub verdict: Verdict,
    pub method: Method,
    pub var_counts: VarCounts,
    /// Transitivity or range constraints added.
    pub constraint_count: usize,
    pub clauses: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub countermodel: Option<Countermodel>,
    pub micros: u128,
    #[serde(skip)]
    pub cnf: Option<Cnf>,
}

/// Everything up to the application-free formula.
pub struct Prepared {
    pub nnf: NodeId,
    pub elimination: EliminationResult,
}

pub fn prepare(store: &mut Store, root: NodeId) -> Result<Prepared> {
    let nnf = to_nnf(store, root);
    let report = classify(store, nnf)?;
    let elimination = eliminate_all(store, nnf, &report);
    Ok(Prepared { nnf, elimination })
}

fn model_lookup(dag: &PropDag, cnf: &Cnf, model: &[bool]) -> HashMap<u32, bool> {
    let mut out = HashMap::new();
    for (k, name) in cnf.names.iter().enumerate() {
        if let Some(i) = dag.var_index(name) {
            out.insert(i, model[k]);
        }
    }
    out
}

fn star_props(
    store: &Store,
    prepared: &Prepared,
    dag: &PropDag,
    values: &HashMap<u32, bool>,
    interp: &mut Interpretation,
) {
    for sym in store.symbols_in(prepared.elimination.f_star) {
        if store.symbol(sym).is_prop_var() {
            let b = dag
                .var_index(&store.symbol(sym).name)
                .and_then(|i| values.get(&i).copied())
                .unwrap_or(false);
            interp.set_var(sym, Value::Bool(b));
        }
    }
}

/// Decides validity of `root` with `method`.
pub fn decide(store: &mut Store, root: NodeId, method: Method, opts: DecideOptions) -> Result<Decision> {
    let start = Instant::now();
    if store.sort(root) != Sort::Formula {
        return Err(Error::Kind("the input is a term, not a formula".into()));
    }
    let mut d = match method {
        Method::Oracle => decide_oracle(store, root, opts)?,
        Method::Bitvec | Method::Pairwise => decide_sat(store, root, method, opts)?,
    };
    d.micros = start.elapsed().as_micros();
    Ok(d)
}

fn decide_oracle(store: &mut Store, root: NodeId, opts: DecideOptions) -> Result<Decision> {
    let report = oracle::report(store, root, opts.guard)?;
    let countermodel = report
        .witness_interpretation
        .clone()
        .map(|i| Countermodel::new(store, root, i));
    Ok(Decision {
        verdict: report.verdict,
        method: Method::Oracle,
        var_counts: VarCounts::default(),
        constraint_count: 0,
        clauses: 0,
        oracle: Some(report),
        countermodel,
        micros: 0,
        cnf: None,
    })
}

/// Propositional form of an application-free formula.
pub struct Encoded {
    pub dag: PropDag,
    pub formula: PropId,
    /// Range or transitivity constraints, by `provenance`.
    pub constraints: Vec<PropId>,
    pub provenance: Provenance,
    pub bitvec: Option<bitvec::BitVecEncoding>,
    pub pairwise: Option<pairwise::PairwiseEncoding>,
}

impl Encoded {
    /// Clause form of `¬formula ∧ constraints`: satisfiable exactly when the
    /// original formula is invalid.
    pub fn refutation_cnf(&mut self) -> Cnf {
        let negated = self.dag.not(self.formula);
        let mut roots = vec![(negated, Provenance::Formula)];
        roots.extend(self.constraints.iter().map(|c| (*c, self.provenance)));
        to_cnf(&self.dag, &roots)
    }

    fn decode(&self, assignment: &dyn Fn(u32) -> bool) -> Interpretation {
        match (&self.bitvec, &self.pairwise) {
            (Some(enc), _) => bitvec::decode(&self.dag, enc, assignment),
            (_, Some(enc)) => pairwise::decode(&self.dag, enc, assignment),
            _ => Interpretation::default(),
        }
    }
}

/// Encodes the application-free formula of `prepared` with `method`.
pub fn encode(store: &Store, prepared: &Prepared, method: Method, transitivity: bool) -> Result<Encoded> {
    let el = &prepared.elimination;
    let mut dag = PropDag::new();
    match method {
        Method::Bitvec => {
            let enc = bitvec::assign_encodings(&mut dag, store, &el.sigma_g, &el.sigma_p);
            let formula = bitvec::encode_formula(&mut dag, store, el.f_star, &enc)?;
            Ok(Encoded {
                dag,
                formula,
                constraints: enc.ranges.clone(),
                provenance: Provenance::Range,
                bitvec: Some(enc),
                pairwise: None,
            })
        }
        Method::Pairwise => {
            let mut enc = pairwise::encode(&mut dag, store, el.f_star, &el.sigma_g, &el.sigma_p)?;
            let constraints = if transitivity {
                pairwise::transitivity_constraints(&mut dag, store, &mut enc)
            } else {
                Vec::new()
            };
            Ok(Encoded {
                dag,
                formula: enc.formula,
                constraints,
                provenance: Provenance::Transitivity,
                bitvec: None,
                pairwise: Some(enc),
            })
        }
        Method::Oracle => Err(Error::Kind("the oracle does not encode to propositional logic".into())),
    }
}

fn decide_sat(store: &mut Store, root: NodeId, method: Method, opts: DecideOptions) -> Result<Decision> {
    let prepared = prepare(store, root)?;
    let mut enc = encode(store, &prepared, method, opts.transitivity)?;
    let cnf = enc.refutation_cnf();
    let (verdict, countermodel) = match sat::run(&cnf, opts.solver) {
        SatResult::Unsat => (Verdict::Valid, None),
        SatResult::Sat(model) => {
            let values = model_lookup(&enc.dag, &cnf, &model);
            let assignment = |i: u32| values.get(&i).copied().unwrap_or(false);
            let mut star = enc.decode(&assignment);
            star_props(store, &prepared, &enc.dag, &values, &mut star);
            let lifted = lift_interpretation(store, root, &prepared.elimination, &star)?;
            (Verdict::Invalid, Some(Countermodel::new(store, root, lifted)))
        }
    };
    Ok(Decision {
        verdict,
        method,
        var_counts: VarCounts {
            propositional: cnf.named_vars() as usize,
            e_vars: enc.pairwise.as_ref().map(|p| p.e_vars.len()),
        },
        constraint_count: enc.constraints.len(),
        clauses: cnf.clauses.len(),
        oracle: None,
        countermodel,
        micros: 0,
        cnf: Some(cnf),
    })
}

/// Parses `text` and decides it.
pub fn decide_text(text: &str, method: Method, opts: DecideOptions) -> Result<(Store, NodeId, Decision)> {
    let (mut store, root) = crate::parse::parse_formula(text)?;
    let d = decide(&mut store, root, method, opts)?;
    Ok((store, root, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FEG: &str = "(or (not (= x y)) (= (h (g x) (g (g x))) (h (g y) (g (g x)))))";
    const FEG_CHANGED: &str = "(or (not (= x y)) (= (h (g x) (g (g x))) (h (g y) (g (g y)))))";
    const FEG_UNGUARDED: &str = "(= (h (g x) (g (g x))) (h (g y) (g (g y))))";

    #[test]
    fn running_example_is_valid_three_ways() {
        for m in Method::ALL {
            let (_, _, d) = decide_text(FEG, m, DecideOptions::default()).unwrap();
            assert_eq!(d.verdict, Verdict::Valid, "{m}");
        }
        let (_, _, b) = decide_text(FEG, Method::Bitvec, DecideOptions::default()).unwrap();
        assert_eq!(b.var_counts.propositional, 1);
        let (_, _, p) = decide_text(FEG, Method::Pairwise, DecideOptions::default()).unwrap();
        assert_eq!(p.var_counts.e_vars, Some(1));
    }

    #[test]
    fn changed_consequent_stays_valid_under_the_antecedent() {
        for m in Method::ALL {
            let (_, _, d) = decide_text(FEG_CHANGED, m, DecideOptions::default()).unwrap();
            assert_eq!(d.verdict, Verdict::Valid, "{m}");
        }
    }

    #[test]
    fn changed_consequent_without_antecedent_is_invalid() {
        for m in Method::ALL {
            let (s, root, d) = decide_text(FEG_UNGUARDED, m, DecideOptions::default()).unwrap();
            assert_eq!(d.verdict, Verdict::Invalid, "{m}");
            let cm = d.countermodel.unwrap();
            assert!(cm.confirmed, "{m}");
            assert!(cm.replay(&s, root).unwrap());
            let h1 = cm
                .blocks
                .iter()
                .position(|b| b.contains(&"(h (g x) (g (g x)))".to_string()));
            let h2 = cm
                .blocks
                .iter()
                .position(|b| b.contains(&"(h (g y) (g (g y)))".to_string()));
            assert_ne!(h1, h2, "{m}");
        }
    }

    #[test]
    fn reflexive_equation_is_valid() {
        for m in Method::ALL {
            let (_, _, d) = decide_text("(= x x)", m, DecideOptions::default()).unwrap();
            assert_eq!(d.verdict, Verdict::Valid);
        }
    }

    #[test]
    fn chain_needs_transitivity() {
        let chain = "(or (not (= x y)) (not (= y z)) (= x z))";
        let off = DecideOptions {
            transitivity: false,
            ..DecideOptions::default()
        };
        let (_, _, d) = decide_text(chain, Method::Pairwise, off).unwrap();
        assert_eq!(d.verdict, Verdict::Invalid);
        assert!(!d.countermodel.unwrap().confirmed);
        let (_, _, d) = decide_text(chain, Method::Pairwise, DecideOptions::default()).unwrap();
        assert_eq!(d.verdict, Verdict::Valid);
        assert_eq!(d.constraint_count, 3);
    }

    #[test]
    fn dropped_argument_variables_get_values() {
        let (s, root, d) = decide_text("(= (f x) y)", Method::Bitvec, DecideOptions::default()).unwrap();
        assert_eq!(d.verdict, Verdict::Invalid);
        assert!(d.countermodel.unwrap().replay(&s, root).unwrap());
    }

    #[test]
    fn term_input_is_rejected() {
        assert!(matches!(
            decide_text("(ite a x y)", Method::Bitvec, DecideOptions::default()),
            Err(Error::Kind(_))
        ));
    }
}
