use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use proptest::sample::Index;

use rasm::condition::{holds_constraints, satisfies, Condition, ConstraintSet};
use rasm::graph::{enumerate_monos, Edge, Embedding, Morphism, TypeGraph, TypedGraph};
use rasm::instances::birth_death;
use rasm::instances::prbt::{self, EDGE_TYPES, I, L, R};
use rasm::rewrite::{count_admissible, Rule, Semantics};
use rasm::species::{expand, Observable};

fn prbt_graph() -> impl Strategy<Value = TypedGraph> {
    (
        1..=6usize,
        prop::collection::vec((0..3usize, any::<Index>(), any::<Index>()), 0..=7),
    )
        .prop_map(|(n, raw)| {
            let t = prbt::type_graph();
            let es = raw
                .into_iter()
                .map(|(ty, s, d)| Edge {
                    ty,
                    src: s.index(n),
                    tgt: d.index(n),
                })
                .collect();
            TypedGraph::new(&t, vec![0; n], es).unwrap()
        })
}

fn trees() -> &'static (Vec<TypedGraph>, ConstraintSet) {
    static T: OnceLock<(Vec<TypedGraph>, ConstraintSet)> = OnceLock::new();
    T.get_or_init(|| {
        let sys = prbt::make_remy_system();
        let x0 = prbt::make_initial_tree(&sys.types);
        let table = expand(&sys.rules, &x0, 4, Semantics::Sqpo, None).unwrap();
        let trees = table.generation(4).unwrap().values().map(|e| e.graph.clone()).collect();
        (trees, sys.constraints)
    })
}

fn into(small: &TypedGraph, big: &TypedGraph, vertices: Vec<usize>, edges: Vec<usize>) -> Morphism {
    Morphism::new(small.clone(), big.clone(), Embedding { vertices, edges }).unwrap()
}

/// A few conditions over the single vertex, built from edge patterns.
fn vertex_conditions() -> Vec<Condition> {
    let t = prbt::type_graph();
    let point = prbt::graph(&t, 1, &[]);
    let out = |ty| into(&point, &prbt::graph(&t, 2, &[(ty, 0, 1)]), vec![0], vec![]);
    let inc = |ty| into(&point, &prbt::graph(&t, 2, &[(ty, 1, 0)]), vec![0], vec![]);
    vec![
        Condition::True,
        Condition::exists_plain(out(L)),
        Condition::exists_plain(inc(I)),
        Condition::forall(out(L), Condition::True).negate(),
        Condition::and(vec![Condition::exists_plain(out(L)), Condition::exists_plain(out(R))]),
        Condition::or(vec![Condition::exists_plain(inc(L)), Condition::exists_plain(inc(R))]),
    ]
}

proptest! {
    #[test]
    fn de_morgan(g in prbt_graph(), i in 0..6usize, j in 0..6usize) {
        let t = prbt::type_graph();
        let cs = vertex_conditions();
        let (a, b) = (cs[i].clone(), cs[j].clone());
        for m in enumerate_monos(&prbt::graph(&t, 1, &[]), &g).unwrap() {
            let m = Morphism::new(prbt::graph(&t, 1, &[]), g.clone(), m).unwrap();
            let sa = satisfies(&m, &a).unwrap();
            let sb = satisfies(&m, &b).unwrap();
            let double = Condition::Not(Box::new(Condition::Not(Box::new(a.clone()))));
            prop_assert_eq!(satisfies(&m, &double).unwrap(), sa);
            prop_assert_eq!(satisfies(&m, &Condition::or(vec![a.clone(), b.clone()])).unwrap(), sa || sb);
            prop_assert_eq!(
                satisfies(&m, &Condition::and(vec![a.clone(), b.clone()]).negate()).unwrap(),
                satisfies(&m, &Condition::or(vec![a.clone().negate(), b.clone().negate()])).unwrap()
            );
        }
    }

    #[test]
    fn satisfaction_ignores_host_ids(g in prbt_graph(), seed in any::<u64>()) {
        let cs = prbt::constraints(&prbt::type_graph());
        let n = g.num_vertices();
        let mut vp: Vec<usize> = (0..n).collect();
        let ep: Vec<usize> = (0..g.num_edges()).rev().collect();
        vp.rotate_left((seed as usize) % n);
        let h = g.relabel(&vp, &ep);
        prop_assert_eq!(holds_constraints(&g, &cs), holds_constraints(&h, &cs));
        let a = satisfies(&Morphism::from_empty(g), &cs.positive).unwrap();
        let b = satisfies(&Morphism::from_empty(h), &cs.positive).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn patterns_are_closed_under_subgraphs(pick in any::<Index>(), mask in any::<u32>(), drop in any::<Index>()) {
        // patterns drawn as edge subsets of generation-4 trees
        let (trees, cs) = trees();
        let tree = &trees[pick.index(trees.len())];
        let keep_e: Vec<bool> = (0..tree.num_edges()).map(|i| mask >> i & 1 == 1).collect();
        let (g, _) = tree.subgraph(&vec![true; tree.num_vertices()], &keep_e);
        prop_assert!(cs.is_pattern(&g));
        prop_assume!(g.num_edges() > 0);
        let mut keep = vec![true; g.num_edges()];
        keep[drop.index(g.num_edges())] = false;
        let (sub, _) = g.subgraph(&vec![true; g.num_vertices()], &keep);
        prop_assert!(cs.is_pattern(&sub));
    }
}

#[test]
fn true_is_always_satisfied() {
    let t = prbt::type_graph();
    let root = prbt::make_initial_tree(&t);
    assert!(satisfies(&Morphism::identity(root.clone()), &Condition::True).unwrap());
    assert!(satisfies(&Morphism::from_empty(root), &Condition::True).unwrap());
}

#[test]
fn at_least_three_vertices() {
    let types = birth_death::type_graph();
    let c = birth_death::at_least_three(&types);
    for (n, expect) in [(0, false), (2, false), (3, true), (5, true)] {
        let x = birth_death::points(&types, n);
        assert_eq!(satisfies(&Morphism::from_empty(x), &c).unwrap(), expect, "{n} vertices");
    }
}

#[test]
fn forall_matches_exhaustive_extensions() {
    // every L-edge has an R-sibling, checked by listing all L-edge matches
    let t = prbt::type_graph();
    let edge = prbt::graph(&t, 2, &[(L, 0, 1)]);
    let sib = prbt::graph(&t, 3, &[(L, 0, 1), (R, 0, 2)]);
    let c = Condition::forall(
        Morphism::from_empty(edge.clone()),
        Condition::exists_plain(into(&edge, &sib, vec![0, 1], vec![0])),
    );
    let hosts = [
        prbt::graph(&t, 4, &[(I, 0, 1), (L, 1, 2), (R, 1, 3)]),
        prbt::graph(&t, 3, &[(I, 0, 1), (L, 1, 2)]),
        prbt::graph(&t, 6, &[(L, 0, 1), (R, 0, 2), (L, 3, 4), (R, 4, 5)]),
        prbt::graph(&t, 2, &[(R, 0, 1)]),
    ];
    for h in &hosts {
        let oracle = enumerate_monos(&edge, h).unwrap().iter().all(|m| {
            let src = m.vertices[0];
            h.edges().iter().any(|e| e.ty == R && e.src == src)
        });
        assert_eq!(satisfies(&Morphism::from_empty(h.clone()), &c).unwrap(), oracle);
    }
}

#[test]
fn mismatched_condition_is_rejected() {
    let t = prbt::type_graph();
    let edge = prbt::graph(&t, 2, &[(L, 0, 1)]);
    let c = Condition::exists_plain(Morphism::identity(edge.clone()));
    // rooted at the edge, evaluated over the empty graph
    assert!(satisfies(&Morphism::from_empty(edge), &c).is_err());
}

#[test]
fn constraint_examples() {
    let t = prbt::type_graph();
    let cs = prbt::constraints(&t);
    assert_eq!(holds_constraints(&prbt::make_initial_tree(&t), &cs), (true, true));
    assert_eq!(
        holds_constraints(&prbt::graph(&t, 3, &[(L, 0, 1), (L, 0, 2)]), &cs),
        (false, false)
    );
    assert_eq!(holds_constraints(&prbt::graph(&t, 2, &[]), &cs), (true, false));
}

fn has_directed_cycle(g: &TypedGraph) -> bool {
    let n = g.num_vertices();
    let mut indeg = vec![0; n];
    for e in g.edges() {
        indeg[e.tgt] += 1;
    }
    let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = stack.pop() {
        seen += 1;
        for (_, e) in g.out_edges(v) {
            indeg[e.tgt] -= 1;
            if indeg[e.tgt] == 0 {
                stack.push(e.tgt);
            }
        }
    }
    seen < n
}

/// All multisets of `k` edges over `n` vertices with PRBF edge types.
fn graphs(types: &Arc<TypeGraph>, n: usize, k: usize, out: &mut Vec<TypedGraph>) {
    let slots: Vec<(usize, usize, usize)> = EDGE_TYPES
        .iter()
        .flat_map(|&t| (0..n).flat_map(move |s| (0..n).map(move |d| (t, s, d))))
        .collect();
    fn go(
        types: &Arc<TypeGraph>,
        n: usize,
        slots: &[(usize, usize, usize)],
        from: usize,
        left: usize,
        acc: &mut Vec<(usize, usize, usize)>,
        out: &mut Vec<TypedGraph>,
    ) {
        if left == 0 {
            out.push(prbt::graph(types, n, acc));
            return;
        }
        for i in from..slots.len() {
            acc.push(slots[i]);
            go(types, n, slots, i, left - 1, acc, out);
            acc.pop();
        }
    }
    go(types, n, &slots, 0, k, &mut Vec::new(), out);
}

#[test]
fn local_constraints_agree_with_structure_on_small_graphs() {
    let t = prbt::type_graph();
    let cs = prbt::constraints(&t);
    let mut all = Vec::new();
    for n in 1..=4 {
        for k in 0..=3 {
            graphs(&t, n, k, &mut all);
        }
    }
    let mut states = 0;
    for g in &all {
        let structural = prbt::is_prbf(g);
        let local = cs.is_state(g);
        if has_directed_cycle(g) {
            assert!(!structural);
        } else {
            assert_eq!(local, structural, "{g:?}");
        }
        states += structural as usize;
    }
    // "|", the tree with one internal vertex, and "| |"
    assert!(states >= 3);
}

#[test]
fn local_constraints_miss_cycles() {
    let t = prbt::type_graph();
    // an L-cycle through three internal vertices, each with an R-leaf
    let g = prbt::graph(
        &t,
        6,
        &[(L, 0, 1), (L, 1, 2), (L, 2, 0), (R, 0, 3), (R, 1, 4), (R, 2, 5)],
    );
    assert!(prbt::constraints(&t).is_state(&g));
    assert!(!prbt::is_prbf(&g));
}

fn one_edge_host() -> (Arc<TypeGraph>, TypedGraph) {
    let t = TypeGraph::new(&["v"], &[("e", "v", "v")]).unwrap();
    let host = TypedGraph::from_names(&t, &["v", "v", "v"], &[("e", 0, 1)]).unwrap();
    (t, host)
}

#[test]
fn isolated_vertex_observable_differs_between_semantics() {
    let (t, host) = one_edge_host();
    let point = TypedGraph::from_names(&t, &["v"], &[]).unwrap();
    let empty = TypedGraph::empty(&t);
    let none = Embedding {
        vertices: vec![],
        edges: vec![],
    };
    // • ← ∅ → •: deletes and recreates the vertex
    let recreate = Rule::new(
        "recreate",
        point.clone(),
        empty,
        point.clone(),
        none.clone(),
        none,
        Condition::True,
    )
    .unwrap();
    assert_eq!(count_admissible(&recreate, &host, Semantics::Dpo), 1);
    assert_eq!(count_admissible(&recreate, &host, Semantics::Sqpo), 3);
    assert_eq!(Observable::new("V", point).count(&host), 3);
}

#[test]
fn non_edge_pairs() {
    // ordered pairs (u, w) with no edge between them in either direction
    let (t, host) = one_edge_host();
    let pair = TypedGraph::from_names(&t, &["v", "v"], &[]).unwrap();
    let fwd = TypedGraph::from_names(&t, &["v", "v"], &[("e", 0, 1)]).unwrap();
    let bwd = TypedGraph::from_names(&t, &["v", "v"], &[("e", 1, 0)]).unwrap();
    let linked = |y: &TypedGraph| Condition::exists_plain(into(&pair, y, vec![0, 1], vec![]));
    let c = Condition::and(vec![linked(&fwd).negate(), linked(&bwd).negate()]);
    let o = Observable::with_condition("nonedge", pair, c);
    assert_eq!(o.count(&host), 4);

    let empty = ConstraintSet::none();
    assert!(empty.is_state(&host));
}
