// SPDX-License-Identifier: Apache-2.0

//! Runs every method on a formula and checks that the verdicts agree.

use serde::Serialize;

use crate::decide::{decide, DecideOptions, Method};
use crate::elim::{ackermann_eliminate, count_equations};
use crate::error::Error;
use crate::oracle::Verdict;
use crate::parse::parse_formula;
use crate::polarity::to_nnf;

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchRow {
    pub method: Method,
    /// Absent when the method was skipped or failed.
    pub verdict: Option<Verdict>,
    pub propositional: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_vars: Option<usize>,
    pub clauses: usize,
    pub constraints: usize,
    pub micros: u128,
    /// Why there is no verdict.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FormulaBench {
    pub name: String,
    pub application_terms: usize,
    /// Distinct equations after Ackermann expansion, the variable count an
    /// encoding with one indicator per equation would need.
    pub ackermann_equations: usize,
    pub rows: Vec<BenchRow>,
    /// All verdicts that were produced are equal.
    pub agreed: bool,
    /// The input could not be parsed or decided at all.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl FormulaBench {
    pub fn verdicts(&self) -> Vec<(Method, Verdict)> {
        self.rows
            .iter()
            .filter_map(|r| r.verdict.map(|v| (r.method, v)))
            .collect()
    }
}

/// Decides `text` with each method in `methods`. The oracle is skipped, not
/// failed, when the formula is beyond its size guard.
pub fn bench_formula(name: &str, text: &str, methods: &[Method], opts: DecideOptions) -> FormulaBench {
    let mut out = FormulaBench {
        name: name.to_string(),
        application_terms: 0,
        ackermann_equations: 0,
        rows: Vec::new(),
        agreed: true,
        error: None,
    };
    let (mut store, root) = match parse_formula(text) {
        Ok(p) => p,
        Err(e) => {
            out.error = Some(e.to_string());
            out.agreed = false;
            return out;
        }
    };
    out.application_terms = store.application_terms(root).len();
    let nnf = to_nnf(&mut store, root);
    let ack = ackermann_eliminate(&mut store, nnf);
    out.ackermann_equations = count_equations(&store, ack.formula);
    for &m in methods {
        let row = match decide(&mut store, root, m, opts) {
            Ok(d) => BenchRow {
                method: m,
                verdict: Some(d.verdict),
                propositional: d.var_counts.propositional,
                e_vars: d.var_counts.e_vars,
                clauses: d.clauses,
                constraints: d.constraint_count,
                micros: d.micros,
                note: None,
            },
            Err(e) => {
                if !matches!(e, Error::SizeGuard { .. }) {
                    out.error = Some(format!("{m}: {e}"));
                }
                BenchRow {
                    method: m,
                    verdict: None,
                    propositional: 0,
                    e_vars: None,
                    clauses: 0,
                    constraints: 0,
                    micros: 0,
                    note: Some(e.to_string()),
                }
            }
        };
        out.rows.push(row);
    }
    let verdicts = out.verdicts();
    out.agreed = out.error.is_none() && verdicts.windows(2).all(|w| w[0].1 == w[1].1);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_example_row() {
        let b = bench_formula(
            "feg",
            "(or (not (= x y)) (= (h (g x) (g (g x))) (h (g y) (g (g x)))))",
            &Method::ALL,
            DecideOptions::default(),
        );
        assert!(b.agreed);
        assert_eq!(b.ackermann_equations, 8);
        assert_eq!(b.rows[1].e_vars, Some(1));
        assert_eq!(b.verdicts().len(), 3);
    }

    #[test]
    fn parse_errors_do_not_agree() {
        let b = bench_formula("bad", "(and x", &Method::ALL, DecideOptions::default());
        assert!(!b.agreed);
        assert!(b.error.is_some());
    }

    #[test]
    fn guard_skips_only_the_oracle() {
        let opts = DecideOptions {
            guard: 1,
            ..DecideOptions::default()
        };
        let b = bench_formula("g", "(or (not (= x y)) (= (f x) (f y)))", &Method::ALL, opts);
        assert!(b.agreed);
        assert_eq!(b.verdicts().len(), 2);
        assert!(b.rows[2].note.is_some());
    }
}
