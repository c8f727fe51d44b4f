//! Rule classes, formal sums of rules, and SqPO rule composition.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::canon::{canonical_labelling, CanonicalKey, LabelledGraph};
use crate::condition::{Condition, ConstraintSet};
use crate::graph::{enumerate_monos, Edge, Embedding, TypedGraph};
use crate::rewrite::Rule;
use crate::Q;

/// Isomorphism class of a rule, including its condition tree.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleClass(CanonicalKey);

impl RuleClass {
    pub fn of(rule: &Rule) -> Self {
        let mut j = Joint::default();
        let o = j.graph(rule.output(), Part::O);
        let k = j.graph(rule.interface(), Part::K);
        let i = j.graph(rule.input(), Part::I);
        j.link(&k, &o, rule.k_to_o(), Link::KO);
        j.link(&k, &i, rule.k_to_i(), Link::KI);
        if !rule.condition().is_true() {
            let root = j.node(NodeKind::Root);
            j.condition(rule.condition(), root, &i);
        }
        RuleClass(j.key())
    }

    pub fn key(&self) -> &CanonicalKey {
        &self.0
    }
}

impl fmt::Debug for RuleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RuleClass({})", self.0)
    }
}

#[derive(Clone, Copy)]
enum Part {
    O = 0,
    K = 1,
    I = 2,
    Cond = 3,
}

#[derive(Clone, Copy)]
enum Link {
    Src = 0,
    Tgt = 1,
    KO = 2,
    KI = 3,
    Owns = 4,
    Embeds = 5,
    Child = 6,
}

#[derive(Clone, Copy)]
enum NodeKind {
    Root = 0,
    Exists = 1,
    Not = 2,
    And = 3,
    True = 4,
}

/// Element ids of one graph inside the joint graph.
struct Placed {
    vertices: Vec<usize>,
    edges: Vec<usize>,
}

/// Joint labelled graph: every rule component and condition object, with
/// edges subdivided into edge-vertices so that edge maps become links.
#[derive(Default)]
struct Joint {
    labels: Vec<u32>,
    edges: Vec<(u32, usize, usize)>,
}

impl Joint {
    fn add(&mut self, label: u32) -> usize {
        self.labels.push(label);
        self.labels.len() - 1
    }

    fn graph(&mut self, g: &TypedGraph, part: Part) -> Placed {
        let vertices: Vec<usize> = (0..g.num_vertices())
            .map(|v| self.add(((part as u32) << 24) | g.vertex_type(v) as u32))
            .collect();
        let edges = g
            .edges()
            .iter()
            .map(|e| {
                let x = self.add(((part as u32) << 24) | (1 << 20) | e.ty as u32);
                self.edges.push((Link::Src as u32, vertices[e.src], x));
                self.edges.push((Link::Tgt as u32, x, vertices[e.tgt]));
                x
            })
            .collect();
        Placed { vertices, edges }
    }

    fn link(&mut self, from: &Placed, to: &Placed, m: &Embedding, l: Link) {
        for (a, &b) in m.vertices.iter().enumerate() {
            self.edges.push((l as u32, from.vertices[a], to.vertices[b]));
        }
        for (a, &b) in m.edges.iter().enumerate() {
            self.edges.push((l as u32, from.edges[a], to.edges[b]));
        }
    }

    fn node(&mut self, kind: NodeKind) -> usize {
        self.add((4 << 24) | kind as u32)
    }

    fn condition(&mut self, c: &Condition, parent: usize, over: &Placed) {
        let kind = match c {
            Condition::True => NodeKind::True,
            Condition::Exists { .. } => NodeKind::Exists,
            Condition::Not(_) => NodeKind::Not,
            Condition::And(_) => NodeKind::And,
        };
        let n = self.node(kind);
        self.edges.push((Link::Child as u32, parent, n));
        match c {
            Condition::True => {}
            Condition::Not(inner) => self.condition(inner, n, over),
            Condition::And(cs) => {
                for c in cs {
                    self.condition(c, n, over);
                }
            }
            Condition::Exists { embed, sub } => {
                let y = self.graph(&embed.codomain, Part::Cond);
                for &x in y.vertices.iter().chain(&y.edges) {
                    self.edges.push((Link::Owns as u32, n, x));
                }
                self.link(over, &y, &embed.map, Link::Embeds);
                self.condition(sub, n, &y);
            }
        }
    }

    fn key(&self) -> CanonicalKey {
        canonical_labelling(&LabelledGraph {
            labels: &self.labels,
            edges: &self.edges,
        })
        .0
    }
}

/// Finite rational combination of rule classes, one representative per class.
#[derive(Debug, Clone, Default)]
pub struct FormalSum {
    terms: BTreeMap<RuleClass, (Rule, Q)>,
}

impl PartialEq for FormalSum {
    fn eq(&self, other: &Self) -> bool {
        self.terms.len() == other.terms.len()
            && self
                .terms
                .iter()
                .zip(&other.terms)
                .all(|((ka, (_, a)), (kb, (_, b)))| ka == kb && a == b)
    }
}

impl FormalSum {
    pub fn zero() -> Self {
        FormalSum::default()
    }

    pub fn rule(rule: Rule) -> Self {
        let mut s = FormalSum::zero();
        s.add(rule, Q::one());
        s
    }

    pub fn from_terms<I: IntoIterator<Item = (Q, Rule)>>(terms: I) -> Self {
        let mut s = FormalSum::zero();
        for (c, r) in terms {
            s.add(r, c);
        }
        s
    }

    pub fn add(&mut self, rule: Rule, coeff: Q) {
        let class = RuleClass::of(&rule);
        let remove = match self.terms.get_mut(&class) {
            Some((_, c)) => {
                *c += coeff;
                c.is_zero()
            }
            None => {
                if !coeff.is_zero() {
                    self.terms.insert(class.clone(), (rule, coeff));
                }
                false
            }
        };
        if remove {
            self.terms.remove(&class);
        }
    }

    pub fn add_sum(&mut self, other: &FormalSum, scale: &Q) {
        for (r, c) in other.terms() {
            self.add(r.clone(), c * scale);
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, class: &RuleClass) -> Q {
        self.terms.get(class).map(|(_, c)| c.clone()).unwrap_or_else(Q::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Rule, &Q)> {
        self.terms.values().map(|(r, c)| (r, c))
    }

    /// `(coefficient, rule)` pairs in class order.
    pub fn weighted_rules(&self) -> Vec<(Q, Rule)> {
        self.terms.values().map(|(r, c)| (c.clone(), r.clone())).collect()
    }

    /// Bilinear product `Σ a_i b_j (R_i ⊛ R_j)`.
    pub fn product(&self, other: &FormalSum, constraints: &ConstraintSet) -> FormalSum {
        let mut out = FormalSum::zero();
        for (r2, a) in self.terms() {
            for (r1, b) in other.terms() {
                out.add_sum(&compose(r2, r1, constraints), &(a * b));
            }
        }
        out
    }
}

/// One overlap of `I₂` with `O₁`: a subgraph of `I₂` and a mono of it into `O₁`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overlap {
    pub keep_vertices: Vec<bool>,
    pub keep_edges: Vec<bool>,
    /// The mono from the subgraph (in `I₂` order) into `O₁`.
    pub into_o1: Embedding,
}

/// Every span `I₂ ↩ M ↪ O₁` up to isomorphism of `M`, including the empty
/// overlap. Each class is represented exactly once: by the image of `M` in
/// `I₂` together with the induced mono into `O₁`.
pub fn overlaps(i2: &TypedGraph, o1: &TypedGraph) -> Vec<Overlap> {
    let nv = i2.num_vertices();
    let mut out = Vec::new();
    for vmask in 0u64..(1 << nv) {
        let keep_v: Vec<bool> = (0..nv).map(|v| vmask >> v & 1 == 1).collect();
        let candidates: Vec<usize> = (0..i2.num_edges())
            .filter(|&e| {
                let ed = i2.edge(e);
                keep_v[ed.src] && keep_v[ed.tgt]
            })
            .collect();
        for emask in 0u64..(1 << candidates.len()) {
            let mut keep_e = vec![false; i2.num_edges()];
            for (k, &e) in candidates.iter().enumerate() {
                keep_e[e] = emask >> k & 1 == 1;
            }
            let (sub, _) = i2.subgraph(&keep_v, &keep_e);
            for m in enumerate_monos(&sub, o1).expect("same type graph") {
                out.push(Overlap {
                    keep_vertices: keep_v.clone(),
                    keep_edges: keep_e.clone(),
                    into_o1: m,
                });
            }
        }
    }
    out
}

/// The composite `R₂ ⊛_μ R₁` ("first R₁, then R₂") along one overlap, or
/// `None` if the overlap is not admissible: the gluing must pass the negative
/// constraints and `K₁ → O₁ → N₂₁` must have a pushout complement.
pub fn compose_along(r2: &Rule, r1: &Rule, mu: &Overlap, constraints: &ConstraintSet) -> Option<Rule> {
    let (i2, o1) = (r2.input(), r1.output());
    // N21: pushout of I2 ↩ M ↪ O1, built on top of O1
    let mut n = o1.clone();
    let mut i2v = vec![usize::MAX; i2.num_vertices()];
    let mut i2e = vec![usize::MAX; i2.num_edges()];
    let mut k = 0;
    for v in 0..i2.num_vertices() {
        if mu.keep_vertices[v] {
            i2v[v] = mu.into_o1.vertices[k];
            k += 1;
        }
    }
    let mut k = 0;
    for e in 0..i2.num_edges() {
        if mu.keep_edges[e] {
            i2e[e] = mu.into_o1.edges[k];
            k += 1;
        }
    }
    for v in 0..i2.num_vertices() {
        if i2v[v] == usize::MAX {
            i2v[v] = n.add_vertex(i2.vertex_type(v));
        }
    }
    for e in 0..i2.num_edges() {
        if i2e[e] == usize::MAX {
            let ed = i2.edge(e);
            i2e[e] = n.add_edge(ed.ty, i2v[ed.src], i2v[ed.tgt]);
        }
    }
    if !constraints.is_pattern(&n) {
        return None;
    }

    // K1' = N21 minus the part of O1 outside K1; no new edge may dangle
    let mut k1v = vec![true; n.num_vertices()];
    let mut k1e = vec![true; n.num_edges()];
    let mut in_k1 = vec![false; o1.num_vertices()];
    for &v in &r1.k_to_o().vertices {
        in_k1[v] = true;
    }
    let mut in_k1e = vec![false; o1.num_edges()];
    for &e in &r1.k_to_o().edges {
        in_k1e[e] = true;
    }
    for v in 0..o1.num_vertices() {
        k1v[v] = in_k1[v];
    }
    for e in 0..o1.num_edges() {
        k1e[e] = in_k1e[e];
    }
    for (e, ed) in n.edges().iter().enumerate() {
        if k1e[e] && !(k1v[ed.src] && k1v[ed.tgt]) {
            return None;
        }
    }

    // K2' = N21 minus the image of I2 outside K2, with side effects
    let mut k2v = vec![true; n.num_vertices()];
    let mut k2e = vec![true; n.num_edges()];
    let mut in_k2 = vec![false; i2.num_vertices()];
    for &v in &r2.k_to_i().vertices {
        in_k2[v] = true;
    }
    let mut in_k2e = vec![false; i2.num_edges()];
    for &e in &r2.k_to_i().edges {
        in_k2e[e] = true;
    }
    for v in 0..i2.num_vertices() {
        if !in_k2[v] {
            k2v[i2v[v]] = false;
        }
    }
    for e in 0..i2.num_edges() {
        if !in_k2e[e] {
            k2e[i2e[e]] = false;
        }
    }
    for (e, ed) in n.edges().iter().enumerate() {
        if !(k2v[ed.src] && k2v[ed.tgt]) {
            k2e[e] = false;
        }
    }

    // I21 = K1' glued with I1 along K1; O21 = K2' glued with O2 along K2
    let (mut i21, k1_in_n) = n.subgraph(&k1v, &k1e);
    let to_k1v = inverse(&k1_in_n.vertices, n.num_vertices());
    let to_k1e = inverse(&k1_in_n.edges, n.num_edges());
    glue(
        &mut i21,
        r1.input(),
        r1.k_to_i(),
        |kv| to_k1v[r1.k_to_o().vertices[kv]],
        |ke| to_k1e[r1.k_to_o().edges[ke]],
    );
    let (mut o21, k2_in_n) = n.subgraph(&k2v, &k2e);
    let to_k2v = inverse(&k2_in_n.vertices, n.num_vertices());
    let to_k2e = inverse(&k2_in_n.edges, n.num_edges());
    glue(
        &mut o21,
        r2.output(),
        r2.k_to_o(),
        |kv| to_k2v[i2v[r2.k_to_i().vertices[kv]]],
        |ke| to_k2e[i2e[r2.k_to_i().edges[ke]]],
    );

    // K21 = K1' ∩ K2' inside N21
    let kv: Vec<bool> = (0..n.num_vertices()).map(|v| k1v[v] && k2v[v]).collect();
    let ke: Vec<bool> = (0..n.num_edges()).map(|e| k1e[e] && k2e[e]).collect();
    let (k21, k21_in_n) = n.subgraph(&kv, &ke);
    let into_i21 = Embedding {
        vertices: k21_in_n.vertices.iter().map(|&v| to_k1v[v]).collect(),
        edges: k21_in_n.edges.iter().map(|&e| to_k1e[e]).collect(),
    };
    let into_o21 = Embedding {
        vertices: k21_in_n.vertices.iter().map(|&v| to_k2v[v]).collect(),
        edges: k21_in_n.edges.iter().map(|&e| to_k2e[e]).collect(),
    };
    Some(
        Rule::new(
            format!("{}*{}", r2.name(), r1.name()),
            o21,
            k21,
            i21,
            into_o21,
            into_i21,
            Condition::True,
        )
        .expect("composite spans are monic"),
    )
}

fn inverse(image: &[usize], size: usize) -> Vec<usize> {
    let mut inv = vec![usize::MAX; size];
    for (i, &x) in image.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

/// Adds the part of `g` outside the image of `k_to_g` to `base`, where `K`
/// elements sit in `base` at `kv(k)` / `ke(k)`.
fn glue(
    base: &mut TypedGraph,
    g: &TypedGraph,
    k_to_g: &Embedding,
    kv: impl Fn(usize) -> usize,
    ke: impl Fn(usize) -> usize,
) {
    let mut vmap = vec![usize::MAX; g.num_vertices()];
    let mut emap = vec![usize::MAX; g.num_edges()];
    for (k, &v) in k_to_g.vertices.iter().enumerate() {
        vmap[v] = kv(k);
    }
    for (k, &e) in k_to_g.edges.iter().enumerate() {
        emap[e] = ke(k);
    }
    for v in 0..g.num_vertices() {
        if vmap[v] == usize::MAX {
            vmap[v] = base.add_vertex(g.vertex_type(v));
        }
    }
    for e in 0..g.num_edges() {
        if emap[e] == usize::MAX {
            let Edge { ty, src, tgt } = g.edge(e);
            emap[e] = base.add_edge(ty, vmap[src], vmap[tgt]);
        }
    }
}

/// `δ(R₂) * δ(R₁)`: the sum of all admissible composites, folded by class.
///
/// Composite conditions are recorded as `True`; this is exact on states of a
/// system whose rules preserve `constraints`.
pub fn compose(r2: &Rule, r1: &Rule, constraints: &ConstraintSet) -> FormalSum {
    let mut out = FormalSum::zero();
    for mu in overlaps(r2.input(), r1.output()) {
        if let Some(r) = compose_along(r2, r1, &mu, constraints) {
            out.add(r, Q::one());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::TypeGraph;

    #[test]
    fn composing_with_the_trivial_rule() {
        let t = TypeGraph::new(&["v"], &[("e", "v", "v")]).unwrap();
        let p = TypedGraph::from_names(&t, &["v", "v"], &[("e", 0, 1)]).unwrap();
        let k = TypedGraph::from_names(&t, &["v", "v"], &[]).unwrap();
        let ki = Embedding {
            vertices: vec![0, 1],
            edges: vec![],
        };
        let r = Rule::new("del-edge", k.clone(), k.clone(), p, ki.clone(), ki, Condition::True).unwrap();
        let empty = TypedGraph::empty(&t);
        let trivial = Rule::identity("empty", empty, Condition::True).unwrap();
        let cs = ConstraintSet::none();
        assert_eq!(compose(&r, &trivial, &cs), FormalSum::rule(r.clone()));
        assert_eq!(compose(&trivial, &r, &cs), FormalSum::rule(r));
    }

    #[test]
    fn rule_class_ignores_presentation() {
        let t = TypeGraph::new(&["v"], &[("e", "v", "v")]).unwrap();
        let p = TypedGraph::from_names(&t, &["v", "v"], &[("e", 0, 1)]).unwrap();
        let q = TypedGraph::from_names(&t, &["v", "v"], &[("e", 1, 0)]).unwrap();
        let a = Rule::identity("a", p, Condition::True).unwrap();
        let b = Rule::identity("b", q, Condition::True).unwrap();
        assert_eq!(RuleClass::of(&a), RuleClass::of(&b));
    }
}
