//! Planar rooted binary trees grown by Rémy's edge-splitting rules.
//!
//! Trees are graphs over one vertex type with edge types `I` (the root edge),
//! `L` and `R`. The root-only tree `|` is a root vertex joined to a leaf by an
//! `I`-edge, so it has one edge and no internal vertices.

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::One;

use crate::condition::{Condition, ConstraintSet};
use crate::graph::{Edge, Embedding, Morphism, TypeGraph, TypedGraph};
use crate::rewrite::{Rule, Semantics};
use crate::species::{
    candidate_patterns, discover_patterns, expand, Discovery, Obs, Observable, Relation, SpeciesError, Term,
};
use crate::Q;

pub const I: usize = 0;
pub const L: usize = 1;
pub const R: usize = 2;
pub const EDGE_TYPES: [usize; 3] = [I, L, R];

pub fn type_graph() -> Arc<TypeGraph> {
    TypeGraph::new(&["v"], &[("I", "v", "v"), ("L", "v", "v"), ("R", "v", "v")]).expect("static type graph")
}

/// A graph on `n` vertices with `(type, src, tgt)` edges.
pub fn graph(types: &Arc<TypeGraph>, n: usize, edges: &[(usize, usize, usize)]) -> TypedGraph {
    TypedGraph::new(
        types,
        vec![0; n],
        edges.iter().map(|&(ty, src, tgt)| Edge { ty, src, tgt }).collect(),
    )
    .expect("well-formed PRBF graph")
}

/// Mono from `small` into `big` where `small`'s vertices and edges are the
/// leading vertices and edges of `big`.
fn prefix(small: &TypedGraph, big: &TypedGraph) -> Morphism {
    Morphism::new(
        small.clone(),
        big.clone(),
        Embedding {
            vertices: (0..small.num_vertices()).collect(),
            edges: (0..small.num_edges()).collect(),
        },
    )
    .expect("prefix embedding")
}

/// Forbidden subgraphs of planar rooted binary forests.
pub fn forbidden(types: &Arc<TypeGraph>) -> Vec<TypedGraph> {
    let mut out = Vec::new();
    for t in EDGE_TYPES {
        out.push(graph(types, 1, &[(t, 0, 0)]));
    }
    for a in EDGE_TYPES {
        for b in EDGE_TYPES {
            if a <= b {
                out.push(graph(types, 2, &[(a, 0, 1), (b, 0, 1)]));
            }
        }
    }
    for a in EDGE_TYPES {
        for b in EDGE_TYPES {
            if a <= b {
                out.push(graph(types, 3, &[(a, 0, 2), (b, 1, 2)]));
            }
        }
    }
    for t in EDGE_TYPES {
        out.push(graph(types, 3, &[(t, 0, 1), (t, 0, 2)]));
    }
    for t in [L, R] {
        out.push(graph(types, 3, &[(I, 0, 1), (t, 0, 2)]));
    }
    // an I-source never has a parent, whether or not the parent is its child
    for t in EDGE_TYPES {
        out.push(graph(types, 3, &[(t, 0, 1), (I, 1, 2)]));
        out.push(graph(types, 2, &[(t, 0, 1), (I, 1, 0)]));
    }
    out
}

/// Local positive constraints: `L` and `R` out-edges come in pairs, every
/// internal non-root vertex has a parent, and no vertex is isolated.
pub fn positive(types: &Arc<TypeGraph>) -> Condition {
    let mut parts = Vec::new();
    for (t, other) in [(L, R), (R, L)] {
        let edge = graph(types, 2, &[(t, 0, 1)]);
        let sibling = graph(types, 3, &[(t, 0, 1), (other, 0, 2)]);
        parts.push(Condition::forall(
            Morphism::from_empty(edge.clone()),
            Condition::exists_plain(prefix(&edge, &sibling)),
        ));
        let parents = EDGE_TYPES
            .iter()
            .map(|&p| {
                let with_parent = graph(types, 3, &[(t, 0, 1), (p, 2, 0)]);
                Condition::exists_plain(prefix(&edge, &with_parent))
            })
            .collect();
        parts.push(Condition::forall(Morphism::from_empty(edge), Condition::or(parents)));
    }
    let point = graph(types, 1, &[]);
    let mut incident = Vec::new();
    for t in EDGE_TYPES {
        incident.push(Condition::exists_plain(prefix(&point, &graph(types, 2, &[(t, 0, 1)]))));
        incident.push(Condition::exists_plain(prefix(&point, &graph(types, 2, &[(t, 1, 0)]))));
    }
    parts.push(Condition::forall(Morphism::from_empty(point), Condition::or(incident)));
    Condition::and(parts)
}

pub fn constraints(types: &Arc<TypeGraph>) -> ConstraintSet {
    ConstraintSet::new(forbidden(types), positive(types)).expect("static constraints")
}

/// Rémy rule splitting a `t`-edge `u → v` by a new vertex `w` whose fresh leaf
/// hangs on the `side` (`L` or `R`) and whose other child is `v`.
pub fn remy_rule(types: &Arc<TypeGraph>, side: usize, t: usize) -> Rule {
    let other = if side == L { R } else { L };
    let input = graph(types, 2, &[(t, 0, 1)]);
    let interface = graph(types, 2, &[]);
    let output = graph(types, 4, &[(t, 0, 2), (side, 2, 3), (other, 2, 1)]);
    let k = Embedding {
        vertices: vec![0, 1],
        edges: vec![],
    };
    let names = ["I", "L", "R"];
    Rule::new(
        format!("G{}_{}", names[side], names[t]),
        output,
        interface,
        input,
        k.clone(),
        k,
        Condition::True,
    )
    .expect("static rule")
}

/// The pattern of a PRBT observable, given by its edge list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrozenPattern {
    pub vertices: usize,
    pub edges: &'static [(usize, usize, usize)],
}

/// `P1`: an internal vertex, seen through its `L`-edge.
pub const P1: FrozenPattern = FrozenPattern {
    vertices: 2,
    edges: &[(L, 0, 1)],
};

/// `P2`: an internal vertex whose `L`-child is internal.
pub const P2: FrozenPattern = FrozenPattern {
    vertices: 3,
    edges: &[(L, 0, 1), (L, 1, 2)],
};

/// `P3`: three internal vertices chained along `L`-edges.
pub const P3: FrozenPattern = FrozenPattern {
    vertices: 4,
    edges: &[(L, 0, 1), (L, 1, 2), (L, 2, 3)],
};

impl FrozenPattern {
    pub fn graph(&self, types: &Arc<TypeGraph>) -> TypedGraph {
        graph(types, self.vertices, self.edges)
    }
}

#[derive(Debug, Clone)]
pub struct PrbtSystem {
    pub types: Arc<TypeGraph>,
    pub constraints: ConstraintSet,
    /// The six plain Rémy rules, `G_L` then `G_R`, each over `I`, `L`, `R`.
    pub rules: Vec<(Q, Rule)>,
    /// `E`, `P1`, `P2`, `P3`.
    pub observables: Vec<Observable>,
}

impl PrbtSystem {
    pub fn observable(&self, name: &str) -> &Observable {
        self.observables
            .iter()
            .find(|o| o.name == name)
            .unwrap_or_else(|| panic!("no observable `{name}`"))
    }
}

pub fn edge_observable(types: &Arc<TypeGraph>) -> Observable {
    Observable::sum("E", EDGE_TYPES.iter().map(|&t| graph(types, 2, &[(t, 0, 1)])).collect())
}

pub fn make_remy_system() -> PrbtSystem {
    let types = type_graph();
    let mut rules = Vec::new();
    for side in [L, R] {
        for t in EDGE_TYPES {
            rules.push((Q::one(), remy_rule(&types, side, t)));
        }
    }
    let observables = vec![
        edge_observable(&types),
        Observable::new("P1", P1.graph(&types)),
        Observable::new("P2", P2.graph(&types)),
        Observable::new("P3", P3.graph(&types)),
    ];
    PrbtSystem {
        constraints: constraints(&types),
        types,
        rules,
        observables,
    }
}

/// The root-only tree `|`.
pub fn make_initial_tree(types: &Arc<TypeGraph>) -> TypedGraph {
    graph(types, 2, &[(I, 0, 1)])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceValues {
    pub g: BigUint,
    pub catalan: BigUint,
    pub edges: u64,
}

fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// `gₙ = (2n)!/n!`, `Catalan(n) = (2n)!/(n!(n+1)!)`, and `2n+1` edges.
pub fn reference_values(n: u64) -> ReferenceValues {
    let g = factorial(2 * n) / factorial(n);
    ReferenceValues {
        catalan: &g / factorial(n + 1),
        g,
        edges: 2 * n + 1,
    }
}

/// Structural characterization of planar rooted binary forests: every vertex
/// has in-degree at most one and out-edges exactly `{}`, `{I}` or `{L, R}`;
/// every component is a tree with exactly one `I`-edge, whose source has
/// in-degree zero.
pub fn is_prbf(g: &TypedGraph) -> bool {
    let n = g.num_vertices();
    let mut indeg = vec![0usize; n];
    let mut out = vec![[0usize; 3]; n];
    for e in g.edges() {
        if e.src == e.tgt {
            return false;
        }
        indeg[e.tgt] += 1;
        out[e.src][e.ty] += 1;
    }
    if indeg.iter().any(|&d| d > 1) {
        return false;
    }
    if !out.iter().all(|o| matches!(o, [0, 0, 0] | [1, 0, 0] | [0, 1, 1])) {
        return false;
    }
    for comp in g.components() {
        let mut inside = vec![false; n];
        for &v in &comp {
            inside[v] = true;
        }
        let edges: Vec<&Edge> = g.edges().iter().filter(|e| inside[e.src]).collect();
        if edges.len() + 1 != comp.len() {
            return false;
        }
        let roots: Vec<&&Edge> = edges.iter().filter(|e| e.ty == I).collect();
        if roots.len() != 1 || indeg[roots[0].src] != 0 {
            return false;
        }
    }
    true
}

pub fn is_prbt(g: &TypedGraph) -> bool {
    g.is_connected() && is_prbf(g)
}

/// Number of internal vertices of a tree (vertices with `L`/`R` out-edges).
pub fn internal_vertices(g: &TypedGraph) -> usize {
    g.edges().iter().filter(|e| e.ty == L).count()
}

/// Relations pinning the counts of `P1`, `P2`, `P3` (search slots 0, 1, 2).
///
/// `p3_decay` is the coefficient of `N_P3` on the right of the `P3` relation:
/// 3 as originally stated, 4 for the value implied by the marginal generator.
/// With 3 no assignment exists (see the acceptance suite).
pub fn pattern_relations(p3_decay: i64) -> Vec<Relation> {
    let q = |n: i64| Q::from_integer(n.into());
    let slot = |s| Term::Count(Obs::Slot(s));
    let drift = |s, k| Term::Drift(Obs::Slot(s), k);
    vec![
        Relation {
            name: "P1".into(),
            lhs: vec![(q(1), drift(0, 1))],
            rhs: vec![(q(1), Term::Mass)],
        },
        Relation {
            name: "P2".into(),
            lhs: vec![(q(1), drift(1, 1))],
            rhs: vec![(q(3), slot(0)), (q(-2), slot(1))],
        },
        Relation {
            name: "P2 second order".into(),
            lhs: vec![(q(1), drift(1, 2))],
            rhs: vec![(q(1), drift(1, 1))],
        },
        Relation {
            name: "P3".into(),
            lhs: vec![(q(1), drift(2, 1))],
            rhs: vec![(q(4), slot(1)), (q(-p3_decay), slot(2))],
        },
    ]
}

/// Runs the pattern search over connected candidates with at most
/// `max_sources` internal vertices, checking generations `≤ check_depth`.
pub fn discover(
    sys: &PrbtSystem,
    p3_decay: i64,
    max_sources: usize,
    check_depth: usize,
) -> Result<(Vec<TypedGraph>, Discovery), SpeciesError> {
    let table = expand(
        &sys.rules,
        &make_initial_tree(&sys.types),
        check_depth + 1,
        Semantics::Sqpo,
        Some(&sys.constraints),
    )?;
    let candidates = candidate_patterns(&sys.types, &sys.constraints, max_sources);
    let found = discover_patterns(&table, &candidates, &[], 3, &pattern_relations(p3_decay), check_depth)?;
    Ok((candidates, found))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condition::holds_constraints;

    #[test]
    fn initial_tree_is_a_state() {
        let t = type_graph();
        let cs = constraints(&t);
        let root = make_initial_tree(&t);
        assert_eq!(holds_constraints(&root, &cs), (true, true));
        assert!(is_prbt(&root));
    }

    #[test]
    fn double_left_edge_is_forbidden() {
        let t = type_graph();
        let g = graph(&t, 3, &[(L, 0, 1), (L, 0, 2)]);
        assert_eq!(holds_constraints(&g, &constraints(&t)), (false, false));
    }

    #[test]
    fn two_bare_vertices_are_a_pattern_but_not_a_state() {
        let t = type_graph();
        let g = graph(&t, 2, &[]);
        assert_eq!(holds_constraints(&g, &constraints(&t)), (true, false));
    }

    #[test]
    fn reference_values_small() {
        let r = reference_values(0);
        assert_eq!((r.g, r.catalan, r.edges), (1u32.into(), 1u32.into(), 1));
        let r = reference_values(5);
        assert_eq!((r.g, r.catalan, r.edges), (30240u32.into(), 42u32.into(), 11));
        let r = reference_values(8);
        assert_eq!((r.g, r.catalan, r.edges), (518918400u32.into(), 1430u32.into(), 17));
    }
}
