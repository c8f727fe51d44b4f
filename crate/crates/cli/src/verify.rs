use std::sync::Arc;

use clap::ValueEnum;
use num_traits::{One, Zero};

use rasm::algebra::{compose, FormalSum};
use rasm::markov::{
    build_generator, derive_marginal_generator, dtmc_propagate, embedded_dtmc, marginal_propagate, Absorbing,
    Distribution, TransitionSet,
};
use rasm::operator::{
    commutator, represent, represent_observable, represent_rules, verify_functional, verify_identity, IdentityReport,
    SparseOperator, StateBasis,
};
use rasm::rewrite::count_admissible;
use rasm::species::{count_patterns, expand};
use rasm::Q;

use crate::system::System;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Commutators,
    Jumpclosure,
    Homomorphism,
    Dtmc,
    Marginal,
}

impl Suite {
    pub fn default_depth(self) -> usize {
        match self {
            Suite::Commutators | Suite::Jumpclosure | Suite::Dtmc => 5,
            Suite::Homomorphism => 4,
            Suite::Marginal => 6,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Suite::Commutators => "commutators",
            Suite::Jumpclosure => "jumpclosure",
            Suite::Homomorphism => "homomorphism",
            Suite::Dtmc => "dtmc",
            Suite::Marginal => "marginal",
        }
    }
}

/// One line of the result table.
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub checked: usize,
    pub detail: String,
}

impl Check {
    fn from_report(name: impl Into<String>, r: &IdentityReport) -> Self {
        let detail = match &r.witness {
            None => String::new(),
            Some(w) if w.incomplete => format!("witness column {} (incomplete)", w.column),
            Some(w) => {
                let row = w.row.as_ref().map(|k| format!(" row {k}")).unwrap_or_default();
                format!("witness column {}{row}: lhs {} rhs {}", w.column, w.lhs, w.rhs)
            }
        };
        Check {
            name: name.into(),
            passed: r.passed,
            checked: r.checked,
            detail,
        }
    }
}

fn q(n: i64) -> Q {
    Q::from_integer(n.into())
}

fn domain<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Domain(e.to_string())
}

/// Basis of every state within `gens` generations of the initial state.
fn basis(sys: &System, gens: usize) -> Result<Arc<StateBasis>, CliError> {
    let table = expand(&sys.rules, &sys.initial, gens, sys.semantics, sys.constraints.as_ref()).map_err(domain)?;
    Ok(Arc::new(StateBasis::from_table(&table, gens)))
}

pub fn run(sys: &System, suite: Suite, depth: usize, p3_decay: i64) -> Result<Vec<Check>, CliError> {
    match suite {
        Suite::Commutators => commutators(sys, depth, p3_decay),
        Suite::Jumpclosure => jump_closure(sys, depth),
        Suite::Homomorphism => homomorphism(sys, depth),
        Suite::Dtmc => dtmc(sys, depth),
        Suite::Marginal => marginal(sys, depth),
    }
}

fn commutators(sys: &System, depth: usize, p3_decay: i64) -> Result<Vec<Check>, CliError> {
    sys.require(&["E", "P1", "P2", "P3"])?;
    let basis = basis(sys, depth + 2)?;
    let interior = basis.up_to(depth);
    let g = represent_rules(&sys.rules, &basis, sys.semantics);
    let o = |name: &str| represent_observable(sys.observable(name).expect("required above"), &basis);
    let (oe, p1, p2, p3) = (o("E"), o("P1"), o("P2"), o("P3"));
    let comm = |a: &SparseOperator, b: &SparseOperator| commutator(a, b).map_err(domain);
    let lin = |terms: &[(i64, &SparseOperator)]| -> Result<SparseOperator, CliError> {
        terms.iter().try_fold(SparseOperator::zero(&basis), |acc, (c, op)| {
            acc.add_scaled(op, &q(*c)).map_err(domain)
        })
    };
    let c2 = comm(&p2, &g)?;
    let c3 = comm(&p3, &g)?;
    let mut out = vec![
        Check::from_report(
            "[O_E, G] = 2 G",
            &verify_identity(&comm(&oe, &g)?, &g.scale(&q(2)), &interior).map_err(domain)?,
        ),
        Check::from_report(
            "<|G = 2 <|O_E",
            &verify_functional(&g, &oe.scale(&q(2)), &interior).map_err(domain)?,
        ),
        Check::from_report(
            "[O_P1, G] = G",
            &verify_identity(&comm(&p1, &g)?, &g, &interior).map_err(domain)?,
        ),
        Check::from_report(
            "<|[O_P2, G] = <|(3 O_P1 - 2 O_P2)",
            &verify_functional(&c2, &lin(&[(3, &p1), (-2, &p2)])?, &interior).map_err(domain)?,
        ),
        Check::from_report(
            "<|[O_P2, [O_P2, G]] = <|[O_P2, G]",
            &verify_functional(&comm(&p2, &c2)?, &c2, &interior).map_err(domain)?,
        ),
    ];
    out.push(Check::from_report(
        format!("<|[O_P3, G] = <|(4 O_P2 - {p3_decay} O_P3)"),
        &verify_functional(&c3, &lin(&[(4, &p2), (-p3_decay, &p3)])?, &interior).map_err(domain)?,
    ));
    Ok(out)
}

/// Each rule's row functional against its admissible-match count, and the
/// whole generator against the exit rates.
fn jump_closure(sys: &System, depth: usize) -> Result<Vec<Check>, CliError> {
    let basis = basis(sys, depth + 1)?;
    let interior = basis.up_to(depth);
    let mut out = Vec::new();
    let mut total = SparseOperator::zero(&basis);
    for (w, r) in &sys.rules {
        let op = represent_rules(&[(w.clone(), r.clone())], &basis, sys.semantics);
        let diag = SparseOperator::diagonal(&basis, |i| {
            w * Q::from_integer(count_admissible(r, basis.graph(i), sys.semantics).into())
        });
        total = total.add(&diag).map_err(domain)?;
        out.push(Check::from_report(
            format!("<|{} = <|O({})", r.name(), r.name()),
            &verify_functional(&op, &diag, &interior).map_err(domain)?,
        ));
    }
    let g = represent_rules(&sys.rules, &basis, sys.semantics);
    out.push(Check::from_report(
        "<|G = sum of <|O(r)",
        &verify_functional(&g, &total, &interior).map_err(domain)?,
    ));
    Ok(out)
}

/// Composition of plain rules, weights dropped.
fn homomorphism(sys: &System, depth: usize) -> Result<Vec<Check>, CliError> {
    if let Some((_, r)) = sys.rules.iter().find(|(_, r)| !r.condition().is_true()) {
        return Err(CliError::Domain(format!(
            "rule `{}` has an application condition; composition covers plain rules only",
            r.name()
        )));
    }
    let basis = basis(sys, depth + 2)?;
    let interior = basis.up_to(depth);
    let cs = sys.constraint_set();
    let single: Vec<SparseOperator> = sys
        .rules
        .iter()
        .map(|(_, r)| represent(&FormalSum::rule(r.clone()), &basis, sys.semantics))
        .collect();
    let mut out = Vec::new();
    for (a, (_, ra)) in sys.rules.iter().enumerate() {
        for (b, (_, rb)) in sys.rules.iter().enumerate() {
            let lhs = represent(&compose(ra, rb, &cs), &basis, sys.semantics);
            let rhs = single[a].mul(&single[b]).map_err(domain)?;
            out.push(Check::from_report(
                format!(
                    "rho({} . {}) = rho({}) rho({})",
                    ra.name(),
                    rb.name(),
                    ra.name(),
                    rb.name()
                ),
                &verify_identity(&lhs, &rhs, &interior).map_err(domain)?,
            ));
        }
    }
    Ok(out)
}

fn dtmc(sys: &System, depth: usize) -> Result<Vec<Check>, CliError> {
    let basis = basis(sys, depth + 1)?;
    let interior = basis.up_to(depth);
    let ts = TransitionSet::new(sys.rules.clone(), sys.semantics).map_err(domain)?;
    let h = build_generator(&ts, &basis);
    let d = embedded_dtmc(&ts, &basis, Absorbing::SelfLoop);
    let sums = |op: &SparseOperator, target: &Q, name: &str| {
        let s = op.column_sums();
        let bad = interior.iter().find(|&&j| !op.is_complete(j) || s[j] != *target);
        Check {
            name: name.into(),
            passed: bad.is_none(),
            checked: interior.len(),
            detail: bad
                .map(|&j| format!("witness column {}: sum {}", basis.key(j), s[j]))
                .unwrap_or_default(),
        }
    };
    Ok(vec![
        sums(&h, &Q::zero(), "H columns sum to 0"),
        sums(&d, &Q::one(), "d columns sum to 1"),
    ])
}

fn marginal(sys: &System, depth: usize) -> Result<Vec<Check>, CliError> {
    if sys.observables.is_empty() {
        return Err(CliError::Usage("the marginal suite needs observables".into()));
    }
    let table = expand(&sys.rules, &sys.initial, depth, sys.semantics, sys.constraints.as_ref()).map_err(domain)?;
    let counts = count_patterns(&table, &sys.observables);
    let mg = derive_marginal_generator(&table, &counts).map_err(domain)?;
    let basis = Arc::new(StateBasis::from_table(&table, depth));
    let ts = TransitionSet::new(sys.rules.clone(), sys.semantics).map_err(domain)?;
    let d = embedded_dtmc(&ts, &basis, Absorbing::SelfLoop);
    let x0 = sys.initial.canonical_form();
    let c0 = counts.get(&x0).expect("initial state is counted").to_vec();
    let mut out = Vec::new();
    for n in 0..=depth {
        let full = dtmc_propagate(&d, &x0, n).map_err(domain)?;
        let full: Distribution<Vec<u64>> =
            full.marginalize(|k| counts.get(k).expect("every basis state is counted").to_vec());
        let lattice = marginal_propagate(&mg, &c0, n).map_err(domain)?;
        let bad = match (full.exact(), lattice.exact()) {
            (Some(a), Some(b)) => a.keys().chain(b.keys()).find(|k| a.get(*k) != b.get(*k)).map(|k| {
                let show = |m: &std::collections::BTreeMap<Vec<u64>, Q>| m.get(k).map_or("0".to_string(), Q::to_string);
                format!("witness counts {k:?}: full {} marginal {}", show(a), show(b))
            }),
            _ => Some("inexact distribution".to_string()),
        };
        out.push(Check {
            name: format!("marginal = full at step {n}"),
            passed: bad.is_none(),
            checked: full.len(),
            detail: bad.unwrap_or_default(),
        });
    }
    Ok(out)
}

pub fn print_table(suite: Suite, checks: &[Check]) {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        let line = format!(
            "{verdict}  {:<12} {:<width$}  {:>5} checked",
            suite.name(),
            c.name,
            c.checked
        );
        if c.detail.is_empty() {
            println!("{line}");
        } else {
            println!("{line}  {}", c.detail);
        }
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} failed", checks.len(), failed);
}
