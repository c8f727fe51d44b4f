//! Continuous-time Markov chains generated by rewriting rules, their embedded
//! jump chains, exact propagation, pattern-count marginalization and
//! stochastic simulation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::canon::CanonicalKey;
use crate::graph::TypedGraph;
use crate::linalg::{solve, RowReducer};
use crate::operator::{represent_rules, SparseOperator, StateBasis};
use crate::rewrite::{admissible_matches, count_admissible, rewrite_unchecked, Rule, Semantics};
use crate::species::{CountTable, GenerationTable, Observable};
use crate::Q;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MarkovError {
    #[error("base rate of rule `{0}` is not positive")]
    NonPositiveRate(String),
    #[error("state {0} is not in the basis")]
    UnknownState(CanonicalKey),
    #[error("step {step}: probability mass reached the truncation frontier at {state}")]
    TruncationExceeded { step: usize, state: CanonicalKey },
    #[error("no affine form fits the multiplicity of count change {delta:?}; witness state {witness}")]
    AffineFit { delta: Vec<i64>, witness: CanonicalKey },
    #[error("the exit rate is not an affine function of the counts; witness state {0}")]
    NormalizerFit(CanonicalKey),
    #[error("transition {delta:?} has negative weight at counts {counts:?}")]
    NegativeWeight { delta: Vec<i64>, counts: Vec<u64> },
    #[error("normalizer vanishes at counts {0:?} while transitions remain")]
    ZeroNormalizer(Vec<u64>),
    #[error("state {0} has no successors recorded in the generation table")]
    MissingColumn(CanonicalKey),
    #[error("initial state is not a state of the system")]
    InvalidInitial,
}

/// Base rates paired with rules, under one semantics.
#[derive(Debug, Clone)]
pub struct TransitionSet {
    pub transitions: Vec<(Q, Rule)>,
    pub semantics: Semantics,
}

impl TransitionSet {
    pub fn new(transitions: Vec<(Q, Rule)>, semantics: Semantics) -> Result<Self, MarkovError> {
        for (k, r) in &transitions {
            if !k.is_positive() {
                return Err(MarkovError::NonPositiveRate(r.name().to_string()));
            }
        }
        Ok(TransitionSet { transitions, semantics })
    }

    /// `Λ(X) = Σ_j κ_j · #admissible matches of R_j in X`.
    pub fn exit_rate(&self, x: &TypedGraph) -> Q {
        self.transitions
            .iter()
            .map(|(k, r)| k * Q::from_integer(count_admissible(r, x, self.semantics).into()))
            .sum()
    }
}

/// Exit rates of every basis state, computed by match counting.
pub fn exit_rates(ts: &TransitionSet, basis: &Arc<StateBasis>) -> Vec<Q> {
    (0..basis.len())
        .into_par_iter()
        .map(|i| ts.exit_rate(basis.graph(i)))
        .collect()
}

/// `H = Ĝ − diag(Λ)`, with `Ĝ` the represented transitions and `Λ` counted
/// independently from the matches. Columns whose successors leave the basis
/// are incomplete.
pub fn build_generator(ts: &TransitionSet, basis: &Arc<StateBasis>) -> SparseOperator {
    let g = represent_rules(&ts.transitions, basis, ts.semantics);
    let lambda = exit_rates(ts, basis);
    let d = SparseOperator::diagonal(basis, |i| lambda[i].clone());
    g.sub(&d).expect("same basis")
}

/// What the jump chain does at a state with no outgoing transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Absorbing {
    /// Stay put with probability one, conserving mass.
    #[default]
    SelfLoop,
    /// The literal zero column: absorbing states annihilate their mass.
    Annihilate,
}

/// Embedded jump chain: column X of `Ĝ` divided by `Λ(X)`.
pub fn embedded_dtmc(ts: &TransitionSet, basis: &Arc<StateBasis>, absorbing: Absorbing) -> SparseOperator {
    let g = represent_rules(&ts.transitions, basis, ts.semantics);
    let lambda = exit_rates(ts, basis);
    let mut d = SparseOperator::zero(basis);
    for j in 0..basis.len() {
        if lambda[j].is_zero() {
            if absorbing == Absorbing::SelfLoop {
                d.set(j, j, Q::one());
            }
            continue;
        }
        for (&i, w) in g.column(j) {
            d.set(i, j, w / &lambda[j]);
        }
        if !g.is_complete(j) {
            d.mark_incomplete(j);
        }
    }
    d
}

/// A probability distribution, exact or floating point.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution<K: Ord> {
    Exact(BTreeMap<K, Q>),
    Float(BTreeMap<K, f64>),
}

impl<K: Ord + Clone> Distribution<K> {
    pub fn point(k: K) -> Self {
        Distribution::Exact(BTreeMap::from([(k, Q::one())]))
    }

    pub fn len(&self) -> usize {
        match self {
            Distribution::Exact(m) => m.len(),
            Distribution::Float(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn exact(&self) -> Option<&BTreeMap<K, Q>> {
        match self {
            Distribution::Exact(m) => Some(m),
            Distribution::Float(_) => None,
        }
    }

    pub fn total_f64(&self) -> f64 {
        self.to_float_map().values().sum()
    }

    pub fn to_float_map(&self) -> BTreeMap<K, f64> {
        match self {
            Distribution::Exact(m) => m
                .iter()
                .map(|(k, v)| (k.clone(), v.to_f64().expect("probability is finite")))
                .collect(),
            Distribution::Float(m) => m.clone(),
        }
    }

    pub fn to_float(&self) -> Self {
        Distribution::Float(self.to_float_map())
    }

    /// Push-forward along `f`.
    pub fn marginalize<K2: Ord + Clone>(&self, f: impl Fn(&K) -> K2) -> Distribution<K2> {
        match self {
            Distribution::Exact(m) => {
                let mut out: BTreeMap<K2, Q> = BTreeMap::new();
                for (k, v) in m {
                    *out.entry(f(k)).or_insert_with(Q::zero) += v;
                }
                Distribution::Exact(out)
            }
            Distribution::Float(m) => {
                let mut out: BTreeMap<K2, f64> = BTreeMap::new();
                for (k, v) in m {
                    *out.entry(f(k)).or_insert(0.0) += v;
                }
                Distribution::Float(out)
            }
        }
    }

    /// Exact mode: sums to exactly one. Float mode: within `1e-12`.
    pub fn is_normalized(&self) -> bool {
        match self {
            Distribution::Exact(m) => m.values().sum::<Q>() == Q::one() && m.values().all(|v| !v.is_negative()),
            Distribution::Float(m) => (m.values().sum::<f64>() - 1.0).abs() <= 1e-12 && m.values().all(|&v| v >= 0.0),
        }
    }
}

/// `d̂ⁿ |X₀⟩`, exactly. Fails if mass reaches an incomplete column.
pub fn dtmc_propagate(
    d: &SparseOperator,
    x0: &CanonicalKey,
    n: usize,
) -> Result<Distribution<CanonicalKey>, MarkovError> {
    let basis = d.basis();
    let start = basis
        .index_of(x0)
        .ok_or_else(|| MarkovError::UnknownState(x0.clone()))?;
    let mut p: BTreeMap<usize, Q> = BTreeMap::from([(start, Q::one())]);
    for step in 0..n {
        let mut next: BTreeMap<usize, Q> = BTreeMap::new();
        for (&j, pj) in &p {
            if !d.is_complete(j) {
                return Err(MarkovError::TruncationExceeded {
                    step,
                    state: basis.key(j).clone(),
                });
            }
            for (&i, w) in d.column(j) {
                *next.entry(i).or_insert_with(Q::zero) += pj * w;
            }
        }
        next.retain(|_, v| !v.is_zero());
        p = next;
    }
    Ok(Distribution::Exact(
        p.into_iter().map(|(i, v)| (basis.key(i).clone(), v)).collect(),
    ))
}

/// Probability that the jump chain started at `from` is eventually absorbed
/// in `target`, computed exactly on the states reachable from `from`.
pub fn absorption_probability(
    d: &SparseOperator,
    from: &CanonicalKey,
    target: &CanonicalKey,
) -> Result<Q, MarkovError> {
    let basis = d.basis();
    let start = basis
        .index_of(from)
        .ok_or_else(|| MarkovError::UnknownState(from.clone()))?;
    let goal = basis
        .index_of(target)
        .ok_or_else(|| MarkovError::UnknownState(target.clone()))?;
    // reachable set
    let mut reach: BTreeSet<usize> = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(j) = stack.pop() {
        if !d.is_complete(j) {
            return Err(MarkovError::TruncationExceeded {
                step: 0,
                state: basis.key(j).clone(),
            });
        }
        for &i in d.column(j).keys() {
            if reach.insert(i) {
                stack.push(i);
            }
        }
    }
    let states: Vec<usize> = reach.into_iter().collect();
    let pos = |s: usize| states.iter().position(|&x| x == s).unwrap();
    // h(x) − Σ_y d(y,x) h(y) = 0 for x ≠ goal; h(goal) = 1;
    // closed classes not containing the goal get h = 0 via their self-loops
    let n = states.len();
    let mut a = vec![vec![Q::zero(); n]; n];
    let mut b = vec![Q::zero(); n];
    for (r, &x) in states.iter().enumerate() {
        a[r][r] = Q::one();
        if x == goal {
            b[r] = Q::one();
            continue;
        }
        let col = d.column(x);
        let stays = col.get(&x).is_some_and(|v| v.is_one()) || col.is_empty();
        if stays {
            continue;
        }
        for (&y, w) in col {
            a[r][pos(y)] -= w;
        }
    }
    let h = solve(&a, &b).map_err(|_| MarkovError::UnknownState(from.clone()))?;
    Ok(h[pos(start)].clone())
}

/// `a₀ + Σ_i a_i n_i` with exact coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineForm {
    pub constant: Q,
    pub coeffs: Vec<Q>,
}

impl AffineForm {
    pub fn zero(width: usize) -> Self {
        AffineForm {
            constant: Q::zero(),
            coeffs: vec![Q::zero(); width],
        }
    }

    pub fn eval(&self, counts: &[u64]) -> Q {
        let mut v = self.constant.clone();
        for (a, &n) in self.coeffs.iter().zip(counts) {
            v += a * Q::from_integer(n.into());
        }
        v
    }

    pub fn add(&self, other: &AffineForm) -> AffineForm {
        AffineForm {
            constant: &self.constant + &other.constant,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    /// Renders with the given variable names, e.g. `2n_E - 3n_P1`.
    pub fn render(&self, names: &[String]) -> String {
        let mut s = String::new();
        let mut push = |c: &Q, var: &str| {
            if c.is_zero() {
                return;
            }
            let neg = c.is_negative();
            let a = c.abs();
            if s.is_empty() {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            if var.is_empty() || !a.is_one() {
                s.push_str(&a.to_string());
            }
            s.push_str(var);
        };
        for (c, name) in self.coeffs.iter().zip(names) {
            push(c, &format!("n_{name}"));
        }
        push(&self.constant, "");
        if s.is_empty() {
            s.push('0');
        }
        s
    }
}

/// Count-lattice jump chain: transitions by count increments with affine
/// weights, normalized by an affine exit rate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginalGenerator {
    pub names: Vec<String>,
    pub transitions: Vec<(Vec<i64>, AffineForm)>,
    pub normalizer: AffineForm,
}

impl fmt::Display for MarginalGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (delta, w) in &self.transitions {
            writeln!(f, "{delta:?}: {}", w.render(&self.names))?;
        }
        write!(f, "normalizer: {}", self.normalizer.render(&self.names))
    }
}

impl MarginalGenerator {
    /// Sum of all transition weights, as an affine form.
    pub fn weight_sum(&self) -> AffineForm {
        self.transitions
            .iter()
            .fold(AffineForm::zero(self.names.len()), |acc, (_, w)| acc.add(w))
    }
}

/// Fits, for every count increment that occurs, its multiplicity as an exact
/// affine function of the counts at the source state, over all states whose
/// generator columns are recorded in `table`.
///
/// Features are ordered `[n_1, …, n_k, 1]` and free variables are set to zero,
/// so a constant term appears only when the counts cannot absorb it.
pub fn derive_marginal_generator(
    table: &GenerationTable,
    counts: &CountTable,
) -> Result<MarginalGenerator, MarkovError> {
    let width = counts.names.len();
    let mut rows: Vec<(CanonicalKey, Vec<u64>, BTreeMap<Vec<i64>, Q>, Q)> = Vec::new();
    let mut deltas: BTreeSet<Vec<i64>> = BTreeSet::new();
    for n in 0..table.depth() {
        for key in table.generations[n].keys() {
            let succ = table
                .successors(key)
                .ok_or_else(|| MarkovError::MissingColumn(key.clone()))?;
            let cx = counts.get(key).expect("counts cover the table").to_vec();
            let mut by_delta: BTreeMap<Vec<i64>, Q> = BTreeMap::new();
            let mut mass = Q::zero();
            for (y, w) in succ {
                let cy = counts.get(y).expect("counts cover the table");
                let delta: Vec<i64> = cy.iter().zip(&cx).map(|(&a, &b)| a as i64 - b as i64).collect();
                *by_delta.entry(delta.clone()).or_insert_with(Q::zero) += w;
                mass += w;
                deltas.insert(delta);
            }
            rows.push((key.clone(), cx, by_delta, mass));
        }
    }
    let features = |c: &[u64]| -> Vec<Q> {
        c.iter()
            .map(|&x| Q::from_integer(x.into()))
            .chain(std::iter::once(Q::one()))
            .collect()
    };
    let to_form = |x: Vec<Q>| AffineForm {
        constant: x[width].clone(),
        coeffs: x[..width].to_vec(),
    };
    let mut transitions = Vec::new();
    for delta in deltas {
        let mut r = RowReducer::new(width + 1);
        for (key, cx, by_delta, _) in &rows {
            let m = by_delta.get(&delta).cloned().unwrap_or_else(Q::zero);
            r.push(&features(cx), m).map_err(|_| MarkovError::AffineFit {
                delta: delta.clone(),
                witness: key.clone(),
            })?;
        }
        transitions.push((delta, to_form(r.solution())));
    }
    let mut r = RowReducer::new(width + 1);
    for (key, cx, _, mass) in &rows {
        r.push(&features(cx), mass.clone())
            .map_err(|_| MarkovError::NormalizerFit(key.clone()))?;
    }
    Ok(MarginalGenerator {
        names: counts.names.clone(),
        transitions,
        normalizer: to_form(r.solution()),
    })
}

fn apply_delta(c: &[u64], delta: &[i64]) -> Vec<u64> {
    c.iter().zip(delta).map(|(&x, &d)| (x as i64 + d) as u64).collect()
}

/// `n` steps of the count-lattice jump chain from `c0`, exactly.
///
/// Probabilities are carried as integer numerators over one common
/// denominator per step, which keeps long runs tractable.
pub fn marginal_propagate(mg: &MarginalGenerator, c0: &[u64], n: usize) -> Result<Distribution<Vec<u64>>, MarkovError> {
    let mut num: BTreeMap<Vec<u64>, BigInt> = BTreeMap::from([(c0.to_vec(), BigInt::one())]);
    let mut den = BigInt::one();
    for _ in 0..n {
        // per-state step probabilities
        let mut steps: Vec<(Vec<u64>, Vec<(Vec<u64>, Q)>)> = Vec::with_capacity(num.len());
        let mut lcm = BigInt::one();
        for c in num.keys() {
            let norm = mg.normalizer.eval(c);
            let mut out = Vec::new();
            for (delta, w) in &mg.transitions {
                let w = w.eval(c);
                if w.is_negative() {
                    return Err(MarkovError::NegativeWeight {
                        delta: delta.clone(),
                        counts: c.clone(),
                    });
                }
                if w.is_zero() {
                    continue;
                }
                if norm.is_zero() {
                    return Err(MarkovError::ZeroNormalizer(c.clone()));
                }
                let p = w / &norm;
                lcm = lcm.lcm(p.denom());
                out.push((apply_delta(c, delta), p));
            }
            if out.is_empty() {
                out.push((c.clone(), Q::one()));
            }
            steps.push((c.clone(), out));
        }
        let mut next: BTreeMap<Vec<u64>, BigInt> = BTreeMap::new();
        for (c, out) in steps {
            let x = &num[&c];
            for (y, p) in out {
                let scaled = p.numer() * (&lcm / p.denom());
                *next.entry(y).or_insert_with(BigInt::zero) += x * scaled;
            }
        }
        den *= &lcm;
        num = next;
    }
    Ok(Distribution::Exact(
        num.into_iter().map(|(k, v)| (k, Q::new(v, den.clone()))).collect(),
    ))
}

/// Output format for distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Writes a distribution over count vectors. CSV has one column per count
/// and a `probability` column with 15 significant digits, rows in
/// lexicographic order; JSON additionally carries the exact value.
pub fn export_distribution<W: Write>(
    d: &Distribution<Vec<u64>>,
    names: &[String],
    format: Format,
    mut w: W,
) -> io::Result<()> {
    match format {
        Format::Csv => {
            let header: Vec<String> = names.iter().map(|n| format!("n_{n}")).collect();
            writeln!(w, "{},probability", header.join(","))?;
            for (k, p) in d.to_float_map() {
                let cols: Vec<String> = k.iter().map(u64::to_string).collect();
                writeln!(w, "{},{:.14e}", cols.join(","), p)?;
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                counts: BTreeMap<String, u64>,
                probability: f64,
                #[serde(skip_serializing_if = "Option::is_none")]
                exact: Option<String>,
            }
            let exact = d.exact();
            let rows: Vec<Row> = d
                .to_float_map()
                .into_iter()
                .map(|(k, p)| Row {
                    exact: exact.map(|m| m[&k].to_string()),
                    counts: names.iter().map(|n| format!("n_{n}")).zip(k.iter().copied()).collect(),
                    probability: p,
                })
                .collect();
            serde_json::to_writer_pretty(&mut w, &rows)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Stopping rule for a simulation run; the run also stops when absorbed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon {
    pub max_time: Option<f64>,
    pub max_steps: Option<usize>,
}

impl Horizon {
    pub fn steps(n: usize) -> Self {
        Horizon {
            max_time: None,
            max_steps: Some(n),
        }
    }

    pub fn time(t: f64) -> Self {
        Horizon {
            max_time: Some(t),
            max_steps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub state: CanonicalKey,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub stream: u64,
    pub points: Vec<TrajectoryPoint>,
    pub final_state: TypedGraph,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryPoint {
        self.points.last().expect("trajectory has its initial point")
    }

    pub fn write_jsonl<W: Write>(&self, names: &[String], mut w: W) -> io::Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            seed: u64,
            stream: u64,
            t: f64,
            state: String,
            counts: BTreeMap<&'a str, u64>,
        }
        for p in &self.points {
            let line = Line {
                seed: self.seed,
                stream: self.stream,
                t: p.time,
                state: p.state.to_string(),
                counts: names.iter().map(String::as_str).zip(p.counts.iter().copied()).collect(),
            };
            serde_json::to_writer(&mut w, &line)?;
            writeln!(w)?;
        }
        Ok(())
    }
}

/// The generator used for stream `stream` of seed `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Gillespie's direct method. The match set is recomputed at every step.
pub fn ssa_run(
    ts: &TransitionSet,
    x0: &TypedGraph,
    horizon: Horizon,
    seed: u64,
    stream: u64,
    observables: &[Observable],
) -> Trajectory {
    let mut rng = rng_for(seed, stream);
    let counts = |g: &TypedGraph| observables.iter().map(|o| o.count(g)).collect::<Vec<_>>();
    let rates: Vec<f64> = ts
        .transitions
        .iter()
        .map(|(k, _)| k.to_f64().expect("finite rate"))
        .collect();
    let mut x = x0.clone();
    let mut t = 0.0f64;
    let mut points = vec![TrajectoryPoint {
        time: 0.0,
        state: x.canonical_form(),
        counts: counts(&x),
    }];
    let mut steps = 0usize;
    loop {
        if horizon.max_steps.is_some_and(|m| steps >= m) {
            break;
        }
        let matches: Vec<Vec<_>> = ts
            .transitions
            .iter()
            .map(|(_, r)| admissible_matches(r, &x, ts.semantics))
            .collect();
        let lambda: f64 = matches.iter().zip(&rates).map(|(m, k)| m.len() as f64 * k).sum();
        if lambda <= 0.0 {
            break;
        }
        let u: f64 = rng.gen();
        let tau = -(1.0 - u).ln() / lambda;
        if horizon.max_time.is_some_and(|m| t + tau > m) {
            break;
        }
        let mut pick = rng.gen::<f64>() * lambda;
        let mut chosen = None;
        'outer: for (j, ms) in matches.iter().enumerate() {
            for m in ms {
                pick -= rates[j];
                if pick < 0.0 {
                    chosen = Some((j, m));
                    break 'outer;
                }
            }
        }
        // rounding can leave `pick` marginally non-negative: take the last match
        let (j, m) = chosen.unwrap_or_else(|| {
            let j = matches.iter().rposition(|ms| !ms.is_empty()).unwrap();
            (j, matches[j].last().unwrap())
        });
        x = rewrite_unchecked(&ts.transitions[j].1, m, &x).0;
        t += tau;
        steps += 1;
        points.push(TrajectoryPoint {
            time: t,
            state: x.canonical_form(),
            counts: counts(&x),
        });
    }
    Trajectory {
        seed,
        stream,
        points,
        final_state: x,
    }
}

/// `samples` independent runs on streams `0..samples`, in stream order.
pub fn ssa_ensemble(
    ts: &TransitionSet,
    x0: &TypedGraph,
    horizon: Horizon,
    seed: u64,
    samples: usize,
    observables: &[Observable],
) -> Vec<Trajectory> {
    (0..samples as u64)
        .into_par_iter()
        .map(|s| ssa_run(ts, x0, horizon, seed, s, observables))
        .collect()
}

/// Transient distribution of a pure-birth chain with rates `rates[k]` from
/// level `k` to `k + 1`, started at level 0, by uniformization. Levels beyond
/// the last rate absorb; the returned vector has `rates.len() + 1` entries.
pub fn pure_birth_transient(rates: &[f64], t: f64) -> Vec<f64> {
    let q = rates.iter().cloned().fold(0.0, f64::max);
    let mut v = vec![0.0; rates.len() + 1];
    v[0] = 1.0;
    if q == 0.0 || t == 0.0 {
        return v;
    }
    // keep q·t per slice small enough that e^{-q t} does not underflow
    let slices = (q * t / 500.0).ceil().max(1.0) as usize;
    for _ in 0..slices {
        v = uniformized(rates, q, t / slices as f64, &v);
    }
    v
}

fn uniformized(rates: &[f64], q: f64, t: f64, start: &[f64]) -> Vec<f64> {
    let n = start.len();
    let lambda = q * t;
    let mut v = start.to_vec();
    let mut out = vec![0.0; n];
    let mut log_w = -lambda;
    // the Poisson tail beyond λ + 12√λ + 30 is far below double precision
    let last = (lambda + 12.0 * lambda.sqrt() + 30.0).ceil() as usize;
    let mut k = 0usize;
    loop {
        let w = log_w.exp();
        for (o, x) in out.iter_mut().zip(&v) {
            *o += w * x;
        }
        if k == last {
            break;
        }
        let mut next = vec![0.0; n];
        for i in 0..n {
            let r = rates.get(i).copied().unwrap_or(0.0);
            next[i] += v[i] * (1.0 - r / q);
            if i + 1 < n {
                next[i + 1] += v[i] * r / q;
            }
        }
        v = next;
        k += 1;
        log_w += lambda.ln() - (k as f64).ln();
    }
    out
}

/// Empirical mean and standard error of a sample.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_birth_mean_matches_closed_form() {
        // levels 2k+1 edges, exit rate 2(2k+1): mean edge count e^{4t}
        let rates: Vec<f64> = (0..300).map(|k| 2.0 * (2 * k + 1) as f64).collect();
        let p = pure_birth_transient(&rates, 0.5);
        let mean: f64 = p.iter().enumerate().map(|(k, x)| (2 * k + 1) as f64 * x).sum();
        assert!((mean - 2f64.exp()).abs() < 1e-9, "{mean}");
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn affine_rendering() {
        let f = AffineForm {
            constant: Q::zero(),
            coeffs: vec![Q::from_integer(2.into()), Q::from_integer((-3).into()), Q::one()],
        };
        let names: Vec<String> = ["E", "P1", "P2"].iter().map(|s| s.to_string()).collect();
        assert_eq!(f.render(&names), "2n_E - 3n_P1 + n_P2");
        assert_eq!(AffineForm::zero(1).render(&names), "0");
    }
}
