use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use num_traits::{One, Zero};

use rasm::canon::CanonicalKey;
use rasm::condition::Condition;
use rasm::graph::{enumerate_monos, Embedding, TypedGraph};
use rasm::instances::prbt::{self, I, L, R};
use rasm::rewrite::{apply, Rule, Semantics};
use rasm::species::{
    candidate_patterns, count_patterns, discover_patterns, egf_moment, expand, CountTable, GenerationTable, Obs,
    Observable, Relation, SpeciesError, Term,
};
use rasm::Q;

fn q(n: i64) -> Q {
    Q::from_integer(n.into())
}

fn table() -> &'static (prbt::PrbtSystem, GenerationTable, CountTable) {
    static T: OnceLock<(prbt::PrbtSystem, GenerationTable, CountTable)> = OnceLock::new();
    T.get_or_init(|| {
        let sys = prbt::make_remy_system();
        let x0 = prbt::make_initial_tree(&sys.types);
        let table = expand(&sys.rules, &x0, 6, Semantics::Sqpo, Some(&sys.constraints)).unwrap();
        let counts = count_patterns(&table, &sys.observables);
        (sys, table, counts)
    })
}

fn factorial(n: i64) -> Q {
    (1..=n).fold(Q::one(), |acc, k| acc * q(k))
}

#[test]
fn generation_zero_is_the_root() {
    let (sys, table, _) = table();
    let root = prbt::make_initial_tree(&sys.types);
    let g0 = table.generation(0).unwrap();
    assert_eq!(g0.len(), 1);
    assert!(g0[&root.canonical_form()].weight.is_one());
    assert!(matches!(table.generation(7), Err(SpeciesError::MissingGeneration(7))));
}

#[test]
fn second_generation_by_double_application() {
    let (sys, table, _) = table();
    let root = prbt::make_initial_tree(&sys.types);
    let mut oracle: BTreeMap<CanonicalKey, i64> = BTreeMap::new();
    for (_, r1) in &sys.rules {
        for m1 in enumerate_monos(r1.input(), &root).unwrap() {
            let x = apply(r1, &m1, &root, Semantics::Sqpo).unwrap().result;
            for (_, r2) in &sys.rules {
                for m2 in enumerate_monos(r2.input(), &x).unwrap() {
                    let y = apply(r2, &m2, &x, Semantics::Sqpo).unwrap().result;
                    *oracle.entry(y.canonical_form()).or_default() += 1;
                }
            }
        }
    }
    let g2 = table.generation(2).unwrap();
    assert_eq!(oracle.len(), 2);
    for (k, n) in oracle {
        assert_eq!(g2[&k].weight, q(n));
        assert_eq!(n, 6);
    }
    assert_eq!(table.total(2), q(12));
}

#[test]
fn weights_are_uniform_and_factorial() {
    let (_, table, _) = table();
    for n in 0..=6 {
        for e in table.generation(n).unwrap().values() {
            assert_eq!(e.weight, factorial(n as i64 + 1));
        }
    }
}

/// Every tree with `n` internal vertices, built recursively: a tree is the
/// root edge over a subtree, a subtree is a leaf or an internal vertex with
/// left and right subtrees.
fn all_trees(n: usize) -> Vec<Vec<(usize, usize, usize)>> {
    // (root vertex, edges, vertex count), vertices numbered from 0
    fn subtrees(n: usize) -> Vec<(usize, Vec<(usize, usize, usize)>, usize)> {
        let mut out = Vec::new();
        if n == 0 {
            out.push((0, vec![], 1));
            return out;
        }
        for k in 0..n {
            for (lr, le, lv) in subtrees(k) {
                for (rr, re, rv) in subtrees(n - 1 - k) {
                    // root 0, left block from 1, right block after it
                    let shift = |e: &[(usize, usize, usize)], by: usize| {
                        e.iter().map(|&(t, s, d)| (t, s + by, d + by)).collect::<Vec<_>>()
                    };
                    let mut edges = vec![(L, 0, lr + 1), (R, 0, rr + 1 + lv)];
                    edges.extend(shift(&le, 1));
                    edges.extend(shift(&re, 1 + lv));
                    out.push((0, edges, 1 + lv + rv));
                }
            }
        }
        out
    }
    subtrees(n)
        .into_iter()
        .map(|(r, e, _)| {
            let mut edges = vec![(I, 0, r + 1)];
            edges.extend(e.iter().map(|&(t, s, d)| (t, s + 1, d + 1)));
            edges
        })
        .collect()
}

#[test]
fn every_tree_is_generated() {
    let (sys, table, _) = table();
    for n in 0..=5 {
        let trees = all_trees(n);
        let keys: BTreeSet<CanonicalKey> = trees
            .iter()
            .map(|e| prbt::graph(&sys.types, 2 * n + 2, e).canonical_form())
            .collect();
        assert_eq!(keys.len(), trees.len());
        let generated: BTreeSet<CanonicalKey> = table.generation(n).unwrap().keys().cloned().collect();
        assert_eq!(keys, generated, "generation {n}");
    }
}

#[test]
fn observable_counts() {
    let (sys, table, counts) = table();
    let e = counts.index("E").unwrap();
    let p1 = counts.index("P1").unwrap();
    let empty = Observable::new("empty", TypedGraph::empty(&sys.types));
    for (n, k, g) in table.states() {
        let c = counts.get(k).unwrap();
        assert_eq!(c[e], 2 * n as u64 + 1);
        assert_eq!(c[p1], n as u64);
        assert_eq!(empty.count(g), 1);
    }
}

/// L-chains of `len` edges, counted by walking the tree.
fn l_chains(g: &TypedGraph, len: usize) -> u64 {
    let left: BTreeMap<usize, usize> = g.edges().iter().filter(|e| e.ty == L).map(|e| (e.src, e.tgt)).collect();
    left.keys()
        .filter(|&&v| {
            let mut at = v;
            (0..len).all(|_| match left.get(&at) {
                Some(&w) => {
                    at = w;
                    true
                }
                None => false,
            })
        })
        .count() as u64
}

#[test]
fn moments() {
    let (_, table, counts) = table();
    for n in 0..=6 {
        assert_eq!(egf_moment(table, counts, n, &[0, 0, 0, 0]).unwrap(), table.total(n));
    }
    assert_eq!(egf_moment(table, counts, 3, &[1]).unwrap(), q(840));

    // joint (P2, P3) moment at n = 4 from direct chain counting
    let mut oracle = Q::zero();
    for e in table.generation(4).unwrap().values() {
        oracle += &e.weight * q((l_chains(&e.graph, 2) * l_chains(&e.graph, 3)) as i64);
    }
    assert_eq!(egf_moment(table, counts, 4, &[0, 0, 1, 1]).unwrap(), oracle);
    assert!(!oracle.is_zero());
}

#[test]
fn shipped_patterns_count_chains() {
    let (_, table, counts) = table();
    let (p2, p3) = (counts.index("P2").unwrap(), counts.index("P3").unwrap());
    for (_, k, g) in table.states() {
        let c = counts.get(k).unwrap();
        assert_eq!(c[p2], l_chains(g, 2));
        assert_eq!(c[p3], l_chains(g, 3));
    }
}

#[test]
fn candidates_are_ordered_and_distinct() {
    let (sys, _, _) = table();
    let cands = candidate_patterns(&sys.types, &sys.constraints, 2);
    assert_eq!(cands[0].num_vertices(), 1);
    let keys: BTreeSet<CanonicalKey> = cands.iter().map(TypedGraph::canonical_form).collect();
    assert_eq!(keys.len(), cands.len());
    assert!(cands.windows(2).all(|w| w[0].num_edges() <= w[1].num_edges()));
    assert!(cands.iter().all(|g| g.is_connected() && sys.constraints.is_pattern(g)));
}

#[test]
fn discovery_with_a_single_relation() {
    let (sys, table, _) = table();
    let cands = candidate_patterns(&sys.types, &sys.constraints, 1);
    let p1 = Relation {
        name: "P1".into(),
        lhs: vec![(Q::one(), Term::Drift(Obs::Slot(0), 1))],
        rhs: vec![(Q::one(), Term::Mass)],
    };
    let found = discover_patterns(table, &cands, &[], 1, &[p1], 4).unwrap();
    assert!(!found.assignments.is_empty());
    let first = &cands[found.assignments[0][0]];
    assert_eq!(first.canonical_form(), prbt::P1.graph(&sys.types).canonical_form());
    // the bare vertex never moves by exactly one per step
    let vertex = cands.iter().position(|g| g.num_edges() == 0).unwrap();
    let rej = found.rejections.iter().find(|r| r.assignment == [vertex]).unwrap();
    assert_eq!(rej.relation, "P1");
    assert!(table.find(&rej.witness).is_some());
}

#[test]
fn discovery_regenerates_shipped_patterns() {
    let (sys, _, _) = table();
    let (cands, found) = prbt::discover(sys, 4, 3, 4).unwrap();
    let first: Vec<CanonicalKey> = found.assignments[0]
        .iter()
        .map(|&i| cands[i].canonical_form())
        .collect();
    let shipped: Vec<CanonicalKey> = [prbt::P1, prbt::P2, prbt::P3]
        .iter()
        .map(|p| p.graph(&sys.types).canonical_form())
        .collect();
    assert_eq!(first, shipped);
}

#[test]
fn discovery_needs_one_more_generation() {
    let (sys, table, _) = table();
    let cands = candidate_patterns(&sys.types, &sys.constraints, 1);
    assert!(matches!(
        discover_patterns(table, &cands, &[], 1, &[], 6),
        Err(SpeciesError::MissingGeneration(7))
    ));
}

#[test]
fn constraint_violations_stop_expansion() {
    let (sys, _, _) = table();
    let t = &sys.types;
    // grow a bare L-edge under any leaf: the L-source gets no R-sibling
    let point = prbt::graph(t, 1, &[]);
    let out = prbt::graph(t, 2, &[(L, 0, 1)]);
    let id = Embedding {
        vertices: vec![0],
        edges: vec![],
    };
    let bad = Rule::new("bad", out, point.clone(), point, id.clone(), id, Condition::True).unwrap();
    let x0 = prbt::make_initial_tree(t);
    let r = expand(&[(Q::one(), bad)], &x0, 1, Semantics::Sqpo, Some(&sys.constraints));
    assert!(matches!(
        r,
        Err(SpeciesError::ConstraintViolation { generation: 1, .. })
    ));
    let not_a_state = prbt::graph(t, 2, &[]);
    assert!(matches!(
        expand(&sys.rules, &not_a_state, 1, Semantics::Sqpo, Some(&sys.constraints)),
        Err(SpeciesError::InvalidInitial)
    ));
}
