//! Sparse exact operators over truncated, canonically indexed state bases.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};
use std::sync::Arc;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::FormalSum;
use crate::canon::CanonicalKey;
use crate::graph::TypedGraph;
use crate::rewrite::{derive_all, Rule, Semantics};
use crate::species::{GenerationTable, Observable};
use crate::Q;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OperatorError {
    #[error("operators live on different bases")]
    BasisMismatch,
    #[error("state {0} is not in the basis")]
    UnknownState(CanonicalKey),
}

/// An ordered set of states with a generation tag per state.
#[derive(Debug, Clone)]
pub struct StateBasis {
    keys: Vec<CanonicalKey>,
    graphs: Vec<TypedGraph>,
    generation: Vec<usize>,
    index: HashMap<CanonicalKey, usize>,
}

impl PartialEq for StateBasis {
    fn eq(&self, other: &Self) -> bool {
        self.keys == other.keys && self.generation == other.generation
    }
}

impl StateBasis {
    /// States ordered by generation, then key. Repeated keys keep their
    /// first (lowest) generation.
    pub fn new(states: impl IntoIterator<Item = (usize, TypedGraph)>) -> Self {
        let mut tagged: Vec<(usize, CanonicalKey, TypedGraph)> = states
            .into_iter()
            .map(|(n, g)| (n, g.canonical_form(), g.canonicalized()))
            .collect();
        tagged.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        let mut basis = StateBasis {
            keys: Vec::new(),
            graphs: Vec::new(),
            generation: Vec::new(),
            index: HashMap::new(),
        };
        for (n, k, g) in tagged {
            if basis.index.contains_key(&k) {
                continue;
            }
            basis.index.insert(k.clone(), basis.keys.len());
            basis.keys.push(k);
            basis.graphs.push(g);
            basis.generation.push(n);
        }
        basis
    }

    /// All states of generations `≤ max_generation` of the table.
    pub fn from_table(table: &GenerationTable, max_generation: usize) -> Self {
        StateBasis::new(
            table
                .states()
                .filter(|(n, _, _)| *n <= max_generation)
                .map(|(n, _, g)| (n, g.clone())),
        )
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn key(&self, i: usize) -> &CanonicalKey {
        &self.keys[i]
    }

    pub fn graph(&self, i: usize) -> &TypedGraph {
        &self.graphs[i]
    }

    pub fn generation(&self, i: usize) -> usize {
        self.generation[i]
    }

    pub fn index_of(&self, key: &CanonicalKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    /// Indices of states of generation `≤ n`.
    pub fn up_to(&self, n: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.generation[i] <= n).collect()
    }

    /// Manifest: one `{index, key, generation}` record per state.
    pub fn manifest_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Item<'a> {
            index: usize,
            key: String,
            generation: usize,
            graph: &'a str,
        }
        let items: Vec<serde_json::Value> = (0..self.len())
            .map(|i| {
                let g = format!("{:?}", self.graphs[i]);
                serde_json::to_value(Item {
                    index: i,
                    key: self.keys[i].to_string(),
                    generation: self.generation[i],
                    graph: &g,
                })
                .expect("serializable")
            })
            .collect();
        serde_json::Value::Array(items)
    }
}

/// A column-major sparse matrix of exact rationals on a [`StateBasis`].
///
/// A column is complete when every contribution to it stays inside the
/// basis; identities are only meaningful on complete columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    basis: Arc<StateBasis>,
    columns: Vec<BTreeMap<usize, Q>>,
    complete: Vec<bool>,
}

impl SparseOperator {
    pub fn zero(basis: &Arc<StateBasis>) -> Self {
        SparseOperator {
            basis: basis.clone(),
            columns: vec![BTreeMap::new(); basis.len()],
            complete: vec![true; basis.len()],
        }
    }

    pub fn identity(basis: &Arc<StateBasis>) -> Self {
        SparseOperator::diagonal(basis, |_| Q::from_integer(1.into()))
    }

    pub fn diagonal(basis: &Arc<StateBasis>, f: impl Fn(usize) -> Q) -> Self {
        let mut op = SparseOperator::zero(basis);
        for (i, col) in op.columns.iter_mut().enumerate() {
            let v = f(i);
            if !v.is_zero() {
                col.insert(i, v);
            }
        }
        op
    }

    pub fn basis(&self) -> &Arc<StateBasis> {
        &self.basis
    }

    pub fn entry(&self, row: usize, col: usize) -> Q {
        self.columns[col].get(&row).cloned().unwrap_or_else(Q::zero)
    }

    pub fn column(&self, col: usize) -> &BTreeMap<usize, Q> {
        &self.columns[col]
    }

    pub fn is_complete(&self, col: usize) -> bool {
        self.complete[col]
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(BTreeMap::len).sum()
    }

    pub fn set(&mut self, row: usize, col: usize, v: Q) {
        if v.is_zero() {
            self.columns[col].remove(&row);
        } else {
            self.columns[col].insert(row, v);
        }
    }

    pub fn mark_incomplete(&mut self, col: usize) {
        self.complete[col] = false;
    }

    fn same_basis(&self, other: &SparseOperator) -> Result<(), OperatorError> {
        if Arc::ptr_eq(&self.basis, &other.basis) || self.basis == other.basis {
            Ok(())
        } else {
            Err(OperatorError::BasisMismatch)
        }
    }

    /// `self + scale · other`.
    pub fn add_scaled(&self, other: &SparseOperator, scale: &Q) -> Result<SparseOperator, OperatorError> {
        self.same_basis(other)?;
        let mut out = self.clone();
        for (j, col) in other.columns.iter().enumerate() {
            for (&i, v) in col {
                let e = out.columns[j].entry(i).or_insert_with(Q::zero);
                *e += v * scale;
                if e.is_zero() {
                    out.columns[j].remove(&i);
                }
            }
            out.complete[j] &= other.complete[j];
        }
        Ok(out)
    }

    pub fn add(&self, other: &SparseOperator) -> Result<SparseOperator, OperatorError> {
        self.add_scaled(other, &Q::from_integer(1.into()))
    }

    pub fn sub(&self, other: &SparseOperator) -> Result<SparseOperator, OperatorError> {
        self.add_scaled(other, &Q::from_integer((-1).into()))
    }

    pub fn scale(&self, s: &Q) -> SparseOperator {
        let mut out = self.clone();
        for col in out.columns.iter_mut() {
            if s.is_zero() {
                col.clear();
            } else {
                for v in col.values_mut() {
                    *v *= s;
                }
            }
        }
        out
    }

    /// Matrix product `self · other`. Column `j` is complete iff `other`'s
    /// column `j` is, and so is every column of `self` it reaches.
    pub fn mul(&self, other: &SparseOperator) -> Result<SparseOperator, OperatorError> {
        self.same_basis(other)?;
        let n = self.basis.len();
        let (columns, complete): (Vec<_>, Vec<_>) = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut col: BTreeMap<usize, Q> = BTreeMap::new();
                let mut ok = other.complete[j];
                for (&k, b) in &other.columns[j] {
                    ok &= self.complete[k];
                    for (&i, a) in &self.columns[k] {
                        *col.entry(i).or_insert_with(Q::zero) += a * b;
                    }
                }
                col.retain(|_, v| !v.is_zero());
                (col, ok)
            })
            .unzip();
        Ok(SparseOperator {
            basis: self.basis.clone(),
            columns,
            complete,
        })
    }

    /// Column sums `⟨|A|X⟩` for every basis state X.
    pub fn column_sums(&self) -> Vec<Q> {
        self.columns.iter().map(|c| c.values().sum()).collect()
    }

    /// Row functional `⟨|A` restricted to the basis, as an operator-free vector.
    pub fn row_functional(&self) -> Vec<Q> {
        self.column_sums()
    }

    /// Operator dump: `row_key,col_key,numerator,denominator` lines.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "row_key,col_key,numerator,denominator")?;
        for (j, col) in self.columns.iter().enumerate() {
            for (&i, v) in col {
                writeln!(
                    w,
                    "\"{}\",\"{}\",{},{}",
                    self.basis.key(i),
                    self.basis.key(j),
                    v.numer(),
                    v.denom()
                )?;
            }
        }
        Ok(())
    }
}

/// `[A, B] = AB − BA`.
pub fn commutator(a: &SparseOperator, b: &SparseOperator) -> Result<SparseOperator, OperatorError> {
    a.mul(b)?.sub(&b.mul(a)?)
}

/// Matrix of a formal sum of rules: entry `(Y, X)` is the weighted number of
/// admissible matches in X whose result is isomorphic to Y. Columns with a
/// result outside the basis are marked incomplete.
pub fn represent(fs: &FormalSum, basis: &Arc<StateBasis>, semantics: Semantics) -> SparseOperator {
    represent_rules(&fs.weighted_rules(), basis, semantics)
}

pub fn represent_rules(rules: &[(Q, Rule)], basis: &Arc<StateBasis>, semantics: Semantics) -> SparseOperator {
    let cols: Vec<(BTreeMap<usize, Q>, bool)> = (0..basis.len())
        .into_par_iter()
        .map(|j| {
            let mut col = BTreeMap::new();
            let mut complete = true;
            for (key, o) in derive_all(rules, basis.graph(j), semantics) {
                match basis.index_of(&key) {
                    Some(i) => {
                        col.insert(i, o.weight);
                    }
                    None => complete = false,
                }
            }
            (col, complete)
        })
        .collect();
    let (columns, complete) = cols.into_iter().unzip();
    SparseOperator {
        basis: basis.clone(),
        columns,
        complete,
    }
}

/// Diagonal operator of an observable, computed by direct counting.
pub fn represent_observable(o: &Observable, basis: &Arc<StateBasis>) -> SparseOperator {
    let counts: Vec<u64> = (0..basis.len())
        .into_par_iter()
        .map(|i| o.count(basis.graph(i)))
        .collect();
    SparseOperator::diagonal(basis, |i| Q::from_integer(counts[i].into()))
}

/// Outcome of a column-by-column identity check.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub passed: bool,
    pub checked: usize,
    /// Largest absolute entry of `lhs − rhs` over the checked columns.
    pub max_deviation: Q,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub column: CanonicalKey,
    /// `None` for an incomplete column or a row-functional mismatch.
    pub row: Option<CanonicalKey>,
    pub lhs: Q,
    pub rhs: Q,
    pub incomplete: bool,
}

/// Exact equality of `lhs` and `rhs` on the given columns, each of which must
/// be complete in both operators.
pub fn verify_identity(
    lhs: &SparseOperator,
    rhs: &SparseOperator,
    interior: &[usize],
) -> Result<IdentityReport, OperatorError> {
    let diff = lhs.sub(rhs)?;
    let basis = lhs.basis();
    let mut report = IdentityReport {
        passed: true,
        checked: 0,
        max_deviation: Q::zero(),
        witness: None,
    };
    for &j in interior {
        report.checked += 1;
        if !(lhs.complete[j] && rhs.complete[j]) {
            report.passed = false;
            if report.witness.is_none() {
                report.witness = Some(Witness {
                    column: basis.key(j).clone(),
                    row: None,
                    lhs: Q::zero(),
                    rhs: Q::zero(),
                    incomplete: true,
                });
            }
            continue;
        }
        for (&i, v) in &diff.columns[j] {
            report.passed = false;
            if v.abs() > report.max_deviation {
                report.max_deviation = v.abs();
            }
            if report.witness.is_none() {
                report.witness = Some(Witness {
                    column: basis.key(j).clone(),
                    row: Some(basis.key(i).clone()),
                    lhs: lhs.entry(i, j),
                    rhs: rhs.entry(i, j),
                    incomplete: false,
                });
            }
        }
    }
    Ok(report)
}

/// Exact equality of two row functionals `⟨|A|X⟩ = ⟨|B|X⟩` on the given
/// columns; both operators must be complete there.
pub fn verify_functional(
    lhs: &SparseOperator,
    rhs: &SparseOperator,
    interior: &[usize],
) -> Result<IdentityReport, OperatorError> {
    lhs.same_basis(rhs)?;
    let (a, b) = (lhs.column_sums(), rhs.column_sums());
    let basis = lhs.basis();
    let mut report = IdentityReport {
        passed: true,
        checked: 0,
        max_deviation: Q::zero(),
        witness: None,
    };
    for &j in interior {
        report.checked += 1;
        let incomplete = !(lhs.complete[j] && rhs.complete[j]);
        let dev = (&a[j] - &b[j]).abs();
        if incomplete || !dev.is_zero() {
            report.passed = false;
            if dev > report.max_deviation {
                report.max_deviation = dev;
            }
            if report.witness.is_none() {
                report.witness = Some(Witness {
                    column: basis.key(j).clone(),
                    row: None,
                    lhs: a[j].clone(),
                    rhs: b[j].clone(),
                    incomplete,
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::prbt;

    #[test]
    fn product_completeness_follows_reached_columns() {
        let sys = prbt::make_remy_system();
        let x0 = prbt::make_initial_tree(&sys.types);
        let table = crate::species::expand(&sys.rules, &x0, 3, Semantics::Sqpo, None).unwrap();
        let basis = Arc::new(StateBasis::from_table(&table, 3));
        let g = represent_rules(&sys.rules, &basis, Semantics::Sqpo);
        let gg = g.mul(&g).unwrap();
        for j in 0..basis.len() {
            assert_eq!(g.is_complete(j), basis.generation(j) < 3);
            assert_eq!(gg.is_complete(j), basis.generation(j) < 2);
        }
    }

    #[test]
    fn self_commutator_vanishes() {
        let sys = prbt::make_remy_system();
        let x0 = prbt::make_initial_tree(&sys.types);
        let table = crate::species::expand(&sys.rules, &x0, 4, Semantics::Sqpo, None).unwrap();
        let basis = Arc::new(StateBasis::from_table(&table, 4));
        let g = represent_rules(&sys.rules, &basis, Semantics::Sqpo);
        let c = commutator(&g, &g).unwrap();
        assert_eq!(c.nnz(), 0);
    }
}
