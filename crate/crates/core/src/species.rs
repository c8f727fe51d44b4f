//! Weighted species generated by iterating a rule set, pattern counts over
//! them, and a search for patterns satisfying given drift relations.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::canon::CanonicalKey;
use crate::condition::{holds, Condition, ConstraintSet};
use crate::graph::{for_each_extension, Partial, TypeGraph, TypedGraph};
use crate::rewrite::{derive_all, RewriteError, Rule, Semantics};
use crate::Q;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpeciesError {
    #[error("generation {generation} contains a non-state: {key}")]
    ConstraintViolation { generation: usize, key: CanonicalKey },
    #[error("initial graph is not a state")]
    InvalidInitial,
    #[error("generation {0} is not in the table")]
    MissingGeneration(usize),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

/// A pattern-count observable: the number of matches of each pattern that
/// satisfy its condition, summed over the terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observable {
    pub name: String,
    pub terms: Vec<(TypedGraph, Condition)>,
}

impl Observable {
    pub fn new(name: impl Into<String>, pattern: TypedGraph) -> Self {
        Observable::with_condition(name, pattern, Condition::True)
    }

    pub fn with_condition(name: impl Into<String>, pattern: TypedGraph, condition: Condition) -> Self {
        Observable {
            name: name.into(),
            terms: vec![(pattern, condition)],
        }
    }

    /// Sum of several unconditioned patterns.
    pub fn sum(name: impl Into<String>, patterns: Vec<TypedGraph>) -> Self {
        Observable {
            name: name.into(),
            terms: patterns.into_iter().map(|p| (p, Condition::True)).collect(),
        }
    }

    pub fn count(&self, g: &TypedGraph) -> u64 {
        let mut n = 0;
        for (pattern, condition) in &self.terms {
            if !pattern.same_type_graph(g) {
                continue;
            }
            let _ = for_each_extension(pattern, g, &Partial::none(pattern), |m| {
                if holds(m, g, condition) {
                    n += 1;
                }
                std::ops::ControlFlow::Continue(())
            });
        }
        n
    }

    /// Identity rules `P ← P → P`, one per term; their sum represents this
    /// observable.
    pub fn rules(&self) -> Vec<Rule> {
        self.terms
            .iter()
            .enumerate()
            .map(|(i, (p, c))| {
                Rule::identity(format!("O_{}#{i}", self.name), p.clone(), c.clone())
                    .expect("observable condition is rooted at its pattern")
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub graph: TypedGraph,
    pub weight: Q,
}

/// Per-generation states with exact weights `gₙ(X)`, plus the columns of the
/// generator on every state whose successors were computed.
#[derive(Debug, Clone)]
pub struct GenerationTable {
    pub generations: Vec<BTreeMap<CanonicalKey, Entry>>,
    successors: HashMap<CanonicalKey, Vec<(CanonicalKey, Q)>>,
}

impl GenerationTable {
    pub fn depth(&self) -> usize {
        self.generations.len() - 1
    }

    pub fn generation(&self, n: usize) -> Result<&BTreeMap<CanonicalKey, Entry>, SpeciesError> {
        self.generations.get(n).ok_or(SpeciesError::MissingGeneration(n))
    }

    /// `gₙ = Σ_X gₙ(X)`.
    pub fn total(&self, n: usize) -> Q {
        self.generations[n].values().map(|e| &e.weight).sum()
    }

    /// Column of the generator at `key`, if computed.
    pub fn successors(&self, key: &CanonicalKey) -> Option<&[(CanonicalKey, Q)]> {
        self.successors.get(key).map(Vec::as_slice)
    }

    /// Every state in generation order, then key order, with its generation.
    pub fn states(&self) -> impl Iterator<Item = (usize, &CanonicalKey, &TypedGraph)> {
        self.generations
            .iter()
            .enumerate()
            .flat_map(|(n, g)| g.iter().map(move |(k, e)| (n, k, &e.graph)))
    }

    pub fn find(&self, key: &CanonicalKey) -> Option<(usize, &Entry)> {
        self.generations
            .iter()
            .enumerate()
            .find_map(|(n, g)| g.get(key).map(|e| (n, e)))
    }
}

/// Iterates `rules` from `x0` for `depth` generations. When `constraints` is
/// given, every generated graph must be a state.
pub fn expand(
    rules: &[(Q, Rule)],
    x0: &TypedGraph,
    depth: usize,
    semantics: Semantics,
    constraints: Option<&ConstraintSet>,
) -> Result<GenerationTable, SpeciesError> {
    if let Some(cs) = constraints {
        if !cs.is_state(x0) {
            return Err(SpeciesError::InvalidInitial);
        }
    }
    let mut first = BTreeMap::new();
    first.insert(
        x0.canonical_form(),
        Entry {
            graph: x0.canonicalized(),
            weight: Q::one(),
        },
    );
    let mut table = GenerationTable {
        generations: vec![first],
        successors: HashMap::new(),
    };
    for n in 0..depth {
        let current: Vec<(&CanonicalKey, &Entry)> = table.generations[n].iter().collect();
        let columns: Vec<_> = current
            .par_iter()
            .map(|(_, e)| derive_all(rules, &e.graph, semantics))
            .collect();
        let mut next: BTreeMap<CanonicalKey, Entry> = BTreeMap::new();
        let mut succ = Vec::with_capacity(current.len());
        for ((key, entry), column) in current.iter().zip(columns) {
            let mut col = Vec::with_capacity(column.len());
            for (k, o) in column {
                let w = &entry.weight * &o.weight;
                match next.get_mut(&k) {
                    Some(e) => e.weight += w,
                    None => {
                        next.insert(
                            k.clone(),
                            Entry {
                                graph: o.graph,
                                weight: w,
                            },
                        );
                    }
                }
                col.push((k, o.weight));
            }
            succ.push(((*key).clone(), col));
        }
        if let Some(cs) = constraints {
            let bad = next
                .par_iter()
                .find_first(|(_, e)| !cs.is_state(&e.graph))
                .map(|(k, _)| k.clone());
            if let Some(key) = bad {
                return Err(SpeciesError::ConstraintViolation { generation: n + 1, key });
            }
        }
        next.retain(|_, e| !e.weight.is_zero());
        table.successors.extend(succ);
        table.generations.push(next);
    }
    Ok(table)
}

/// Per-state pattern counts `N_i(X)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    pub names: Vec<String>,
    pub counts: BTreeMap<CanonicalKey, Vec<u64>>,
}

impl CountTable {
    pub fn get(&self, key: &CanonicalKey) -> Option<&[u64]> {
        self.counts.get(key).map(Vec::as_slice)
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

pub fn count_patterns(table: &GenerationTable, observables: &[Observable]) -> CountTable {
    let states: Vec<(&CanonicalKey, &TypedGraph)> = table.states().map(|(_, k, g)| (k, g)).collect();
    let counts = states
        .par_iter()
        .map(|(k, g)| ((*k).clone(), observables.iter().map(|o| o.count(g)).collect()))
        .collect();
    CountTable {
        names: observables.iter().map(|o| o.name.clone()).collect(),
        counts,
    }
}

/// `Σ_X gₙ(X) Π_i N_i(X)^{k_i}`: the n-th EGF coefficient of a joint moment.
pub fn egf_moment(table: &GenerationTable, counts: &CountTable, n: usize, powers: &[u32]) -> Result<Q, SpeciesError> {
    let generation = table.generation(n)?;
    let mut total = Q::zero();
    for (key, e) in generation {
        let c = counts.get(key).expect("count table covers the generation table");
        let mut term = e.weight.clone();
        for (i, &k) in powers.iter().enumerate() {
            term *= Q::from_integer(c[i].into()).pow(k as i32);
        }
        total += term;
    }
    Ok(total)
}

/// Connected patterns over `types` in which at most `max_sources` vertices
/// have out-edges, up to isomorphism, ordered by edge count, vertex count and
/// canonical key. Candidates are grown edge by edge; since every connected
/// graph has an edge order keeping all prefixes connected and patterns are
/// closed under subgraphs, the growth reaches every candidate.
pub fn candidate_patterns(
    types: &std::sync::Arc<TypeGraph>,
    constraints: &ConstraintSet,
    max_sources: usize,
) -> Vec<TypedGraph> {
    let sources = |g: &TypedGraph| g.edges().iter().map(|e| e.src).collect::<BTreeSet<_>>().len();
    let mut seen: BTreeMap<CanonicalKey, TypedGraph> = BTreeMap::new();
    let mut layer: Vec<TypedGraph> = Vec::new();
    for vt in 0..types.vertex_types().len() {
        let g = TypedGraph::new(types, vec![vt], vec![]).unwrap();
        if constraints.is_pattern(&g) {
            seen.insert(g.canonical_form(), g.clone());
            layer.push(g);
        }
    }
    while !layer.is_empty() {
        let mut next = Vec::new();
        for g in &layer {
            for (ty, et) in types.edge_types().iter().enumerate() {
                let n = g.num_vertices();
                let mut options: Vec<(Option<usize>, Option<usize>)> = Vec::new();
                for u in 0..n {
                    for v in 0..n {
                        options.push((Some(u), Some(v)));
                    }
                    options.push((Some(u), None));
                    options.push((None, Some(u)));
                }
                for (s, t) in options {
                    let mut h = g.clone();
                    let s = s.unwrap_or_else(|| h.add_vertex(et.src));
                    let t = t.unwrap_or_else(|| h.add_vertex(et.tgt));
                    if h.vertex_type(s) != et.src || h.vertex_type(t) != et.tgt {
                        continue;
                    }
                    h.add_edge(ty, s, t);
                    if sources(&h) > max_sources || !constraints.is_pattern(&h) {
                        continue;
                    }
                    let key = h.canonical_form();
                    if seen.contains_key(&key) {
                        continue;
                    }
                    let h = h.canonicalized();
                    seen.insert(key, h.clone());
                    next.push(h);
                }
            }
        }
        layer = next;
    }
    let mut out: Vec<(usize, usize, CanonicalKey, TypedGraph)> = seen
        .into_iter()
        .map(|(k, g)| (g.num_edges(), g.num_vertices(), k, g))
        .collect();
    out.sort_by(|a, b| (a.0, a.1, &a.2).cmp(&(b.0, b.1, &b.2)));
    out.into_iter().map(|(_, _, _, g)| g).collect()
}

/// An observable referenced by a relation: a search slot or a fixed observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Obs {
    Slot(usize),
    Fixed(usize),
}

/// Row-functional quantities evaluated at a state X.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    /// `N(X)`.
    Count(Obs),
    /// `Σ_Y Ĝ(Y,X) (N(Y) − N(X))^k`, i.e. `⟨|ad_O^k(Ĝ)|X⟩`.
    Drift(Obs, u32),
    /// `Σ_Y Ĝ(Y,X)`.
    Mass,
    One,
}

/// `Σ lhs = Σ rhs` at every checked state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub lhs: Vec<(Q, Term)>,
    pub rhs: Vec<(Q, Term)>,
}

impl Relation {
    fn slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.lhs.iter().chain(&self.rhs).filter_map(|(_, t)| match t {
            Term::Count(Obs::Slot(s)) | Term::Drift(Obs::Slot(s), _) => Some(*s),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    /// Candidate indices for slots `0..=k`.
    pub assignment: Vec<usize>,
    pub relation: String,
    pub witness: CanonicalKey,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discovery {
    /// Every satisfying assignment, as candidate indices, in lexicographic order.
    pub assignments: Vec<Vec<usize>>,
    pub rejections: Vec<Rejection>,
}

/// Column of the generator at X with counts for X and every successor.
struct Column {
    key: CanonicalKey,
    x: usize,
    succ: Vec<(usize, Q)>,
}

/// Searches assignments of `candidates` to `slots` observables such that every
/// relation holds on all states of generations `≤ check_depth`.
///
/// Relations are checked as soon as all slots they mention are assigned, so
/// the search also reports, for each failing partial assignment, the relation
/// it violates and a witness state.
pub fn discover_patterns(
    table: &GenerationTable,
    candidates: &[TypedGraph],
    fixed: &[Observable],
    slots: usize,
    relations: &[Relation],
    check_depth: usize,
) -> Result<Discovery, SpeciesError> {
    if table.depth() < check_depth + 1 {
        return Err(SpeciesError::MissingGeneration(check_depth + 1));
    }
    let states: Vec<(&CanonicalKey, &TypedGraph)> = table
        .states()
        .filter(|(n, _, _)| *n <= check_depth + 1)
        .map(|(_, k, g)| (k, g))
        .collect();
    let index: HashMap<&CanonicalKey, usize> = states.iter().enumerate().map(|(i, (k, _))| (*k, i)).collect();
    let columns: Vec<Column> = table
        .states()
        .filter(|(n, _, _)| *n <= check_depth)
        .map(|(_, k, _)| Column {
            key: k.clone(),
            x: index[k],
            succ: table
                .successors(k)
                .expect("successors computed below the table depth")
                .iter()
                .map(|(y, w)| (index[y], w.clone()))
                .collect(),
        })
        .collect();
    let cand_counts: Vec<Vec<u64>> = candidates
        .par_iter()
        .map(|p| {
            let o = Observable::new("", p.clone());
            states.iter().map(|(_, g)| o.count(g)).collect()
        })
        .collect();
    let fixed_counts: Vec<Vec<u64>> = fixed
        .iter()
        .map(|o| states.iter().map(|(_, g)| o.count(g)).collect())
        .collect();

    // relations become checkable once their highest slot is assigned
    let mut by_slot: Vec<Vec<&Relation>> = vec![Vec::new(); slots];
    for r in relations {
        let top = r.slots().max().unwrap_or(0);
        assert!(top < slots, "relation `{}` references slot {top}", r.name);
        by_slot[top].push(r);
    }

    let eval = |assign: &[usize], col: &Column, terms: &[(Q, Term)]| -> Q {
        let counts = |o: Obs| -> &Vec<u64> {
            match o {
                Obs::Slot(s) => &cand_counts[assign[s]],
                Obs::Fixed(i) => &fixed_counts[i],
            }
        };
        let mut total = Q::zero();
        for (c, t) in terms {
            let v = match t {
                Term::One => Q::one(),
                Term::Mass => col.succ.iter().map(|(_, w)| w).sum(),
                Term::Count(o) => Q::from_integer(counts(*o)[col.x].into()),
                Term::Drift(o, k) => {
                    let n = counts(*o);
                    let nx = n[col.x] as i64;
                    col.succ
                        .iter()
                        .map(|(y, w)| w * Q::from_integer((n[*y] as i64 - nx).into()).pow(*k as i32))
                        .sum()
                }
            };
            total += c * v;
        }
        total
    };

    let mut out = Discovery {
        assignments: Vec::new(),
        rejections: Vec::new(),
    };
    let mut assign: Vec<usize> = Vec::with_capacity(slots);
    fn search(
        slot: usize,
        slots: usize,
        n: usize,
        assign: &mut Vec<usize>,
        check: &dyn Fn(&[usize], usize) -> Option<(String, CanonicalKey)>,
        out: &mut Discovery,
    ) {
        if slot == slots {
            out.assignments.push(assign.clone());
            return;
        }
        for c in 0..n {
            assign.push(c);
            match check(assign, slot) {
                None => search(slot + 1, slots, n, assign, check, out),
                Some((relation, witness)) => out.rejections.push(Rejection {
                    assignment: assign.clone(),
                    relation,
                    witness,
                }),
            }
            assign.pop();
        }
    }
    let check = |assign: &[usize], slot: usize| -> Option<(String, CanonicalKey)> {
        for r in &by_slot[slot] {
            for col in &columns {
                if eval(assign, col, &r.lhs) != eval(assign, col, &r.rhs) {
                    return Some((r.name.clone(), col.key.clone()));
                }
            }
        }
        None
    };
    search(0, slots, candidates.len(), &mut assign, &check, &mut out);
    Ok(out)
}
