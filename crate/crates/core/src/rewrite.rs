//! DPO and SqPO direct derivations for monic rules along monic matches.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::canon::CanonicalKey;
use crate::condition::{holds, Condition, ConditionError};
use crate::graph::{enumerate_monos, Embedding, GraphError, TypedGraph};
use crate::Q;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RewriteError {
    #[error("rule `{rule}`: {source}")]
    Graph {
        rule: String,
        #[source]
        source: GraphError,
    },
    #[error("rule `{rule}`: {source}")]
    Condition {
        rule: String,
        #[source]
        source: ConditionError,
    },
    #[error("match violates the application condition of rule `{0}`")]
    ConditionViolated(String),
    #[error("match of rule `{0}` violates the dangling condition")]
    Dangling(String),
    #[error("invalid match for rule `{rule}`: {source}")]
    InvalidMatch {
        rule: String,
        #[source]
        source: GraphError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Semantics {
    Dpo,
    Sqpo,
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Semantics::Dpo => "DPO",
            Semantics::Sqpo => "SqPO",
        })
    }
}

/// A monic span `O ↩ K ↪ I` with an application condition over `I`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    name: String,
    o: TypedGraph,
    k: TypedGraph,
    i: TypedGraph,
    ko: Embedding,
    ki: Embedding,
    condition: Condition,
    // I vertices / edges outside the image of K
    deleted_v: Vec<usize>,
    deleted_e: Vec<usize>,
    // O vertices / edges outside the image of K
    created_v: Vec<usize>,
    created_e: Vec<usize>,
}

fn complement(image: &[usize], size: usize) -> Vec<usize> {
    let mut hit = vec![false; size];
    for &x in image {
        hit[x] = true;
    }
    (0..size).filter(|&x| !hit[x]).collect()
}

impl Rule {
    pub fn new(
        name: impl Into<String>,
        o: TypedGraph,
        k: TypedGraph,
        i: TypedGraph,
        ko: Embedding,
        ki: Embedding,
        condition: Condition,
    ) -> Result<Self, RewriteError> {
        let name = name.into();
        let graph_err = |source| RewriteError::Graph {
            rule: name.clone(),
            source,
        };
        ko.check(&k, &o).map_err(graph_err)?;
        ki.check(&k, &i).map_err(graph_err)?;
        condition.validate(Some(&i)).map_err(|source| RewriteError::Condition {
            rule: name.clone(),
            source,
        })?;
        Ok(Rule {
            deleted_v: complement(&ki.vertices, i.num_vertices()),
            deleted_e: complement(&ki.edges, i.num_edges()),
            created_v: complement(&ko.vertices, o.num_vertices()),
            created_e: complement(&ko.edges, o.num_edges()),
            name,
            o,
            k,
            i,
            ko,
            ki,
            condition,
        })
    }

    /// The identity rule `P ← P → P` with a condition over `P`.
    pub fn identity(name: impl Into<String>, p: TypedGraph, condition: Condition) -> Result<Self, RewriteError> {
        let id = Embedding::identity(&p);
        Rule::new(name, p.clone(), p.clone(), p, id.clone(), id, condition)
    }

    /// The same span with a different condition.
    pub fn with_condition(&self, condition: Condition) -> Result<Self, RewriteError> {
        Rule::new(
            self.name.clone(),
            self.o.clone(),
            self.k.clone(),
            self.i.clone(),
            self.ko.clone(),
            self.ki.clone(),
            condition,
        )
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn output(&self) -> &TypedGraph {
        &self.o
    }
    pub fn interface(&self) -> &TypedGraph {
        &self.k
    }
    pub fn input(&self) -> &TypedGraph {
        &self.i
    }
    pub fn k_to_o(&self) -> &Embedding {
        &self.ko
    }
    pub fn k_to_i(&self) -> &Embedding {
        &self.ki
    }
    pub fn condition(&self) -> &Condition {
        &self.condition
    }

    /// True iff the rule neither deletes nor creates anything.
    pub fn is_identity_span(&self) -> bool {
        self.deleted_v.is_empty() && self.deleted_e.is_empty() && self.created_v.is_empty() && self.created_e.is_empty()
    }

    pub fn deletes_vertices(&self) -> bool {
        !self.deleted_v.is_empty()
    }
}

/// The result of applying a rule along a match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectDerivation {
    pub rule: String,
    pub host: TypedGraph,
    pub matching: Embedding,
    pub result: TypedGraph,
    pub comatch: Embedding,
    pub semantics: Semantics,
}

/// Whether `m: I ↪ host` satisfies the condition and the dangling condition.
pub fn dpo_admissible(rule: &Rule, m: &Embedding, host: &TypedGraph) -> bool {
    holds(m, host, &rule.condition) && dangling_ok(rule, m, host)
}

fn dangling_ok(rule: &Rule, m: &Embedding, host: &TypedGraph) -> bool {
    if rule.deleted_v.is_empty() {
        return true;
    }
    let mut removed = vec![false; host.num_vertices()];
    for &v in &rule.deleted_v {
        removed[m.vertices[v]] = true;
    }
    let mut matched = vec![false; host.num_edges()];
    for &e in &m.edges {
        matched[e] = true;
    }
    host.edges()
        .iter()
        .enumerate()
        .all(|(i, e)| matched[i] || !(removed[e.src] || removed[e.tgt]))
}

/// Whether `m` may be used under `semantics`.
pub fn admissible(rule: &Rule, m: &Embedding, host: &TypedGraph, semantics: Semantics) -> bool {
    match semantics {
        Semantics::Dpo => dpo_admissible(rule, m, host),
        Semantics::Sqpo => holds(m, host, &rule.condition),
    }
}

/// All admissible matches of the rule's input in `host`, in sorted order.
pub fn admissible_matches(rule: &Rule, host: &TypedGraph, semantics: Semantics) -> Vec<Embedding> {
    match enumerate_monos(&rule.i, host) {
        Ok(ms) => ms
            .into_iter()
            .filter(|m| admissible(rule, m, host, semantics))
            .collect(),
        Err(_) => Vec::new(),
    }
}

pub fn count_admissible(rule: &Rule, host: &TypedGraph, semantics: Semantics) -> usize {
    admissible_matches(rule, host, semantics).len()
}

/// Applies `rule` along `m`.
///
/// Ids of the result are positional: surviving host vertices and edges keep
/// their relative order, followed by the created vertices and edges of `O`.
pub fn apply(
    rule: &Rule,
    m: &Embedding,
    host: &TypedGraph,
    semantics: Semantics,
) -> Result<DirectDerivation, RewriteError> {
    m.check(&rule.i, host).map_err(|source| RewriteError::InvalidMatch {
        rule: rule.name.clone(),
        source,
    })?;
    if !holds(m, host, &rule.condition) {
        return Err(RewriteError::ConditionViolated(rule.name.clone()));
    }
    if semantics == Semantics::Dpo && !dangling_ok(rule, m, host) {
        return Err(RewriteError::Dangling(rule.name.clone()));
    }
    let (result, comatch) = rewrite_unchecked(rule, m, host);
    Ok(DirectDerivation {
        rule: rule.name.clone(),
        host: host.clone(),
        matching: m.clone(),
        result,
        comatch,
        semantics,
    })
}

/// Delete-with-side-effects followed by gluing. Assumes `m` is admissible.
pub(crate) fn rewrite_unchecked(rule: &Rule, m: &Embedding, host: &TypedGraph) -> (TypedGraph, Embedding) {
    let mut keep_v = vec![true; host.num_vertices()];
    for &v in &rule.deleted_v {
        keep_v[m.vertices[v]] = false;
    }
    let mut keep_e: Vec<bool> = host.edges().iter().map(|e| keep_v[e.src] && keep_v[e.tgt]).collect();
    for &e in &rule.deleted_e {
        keep_e[m.edges[e]] = false;
    }
    let (mut result, incl) = host.subgraph(&keep_v, &keep_e);
    let mut new_v = vec![usize::MAX; host.num_vertices()];
    for (i, &v) in incl.vertices.iter().enumerate() {
        new_v[v] = i;
    }
    let mut new_e = vec![usize::MAX; host.num_edges()];
    for (i, &e) in incl.edges.iter().enumerate() {
        new_e[e] = i;
    }

    let mut co_v = vec![usize::MAX; rule.o.num_vertices()];
    let mut co_e = vec![usize::MAX; rule.o.num_edges()];
    for (kv, &ov) in rule.ko.vertices.iter().enumerate() {
        co_v[ov] = new_v[m.vertices[rule.ki.vertices[kv]]];
    }
    for (ke, &oe) in rule.ko.edges.iter().enumerate() {
        co_e[oe] = new_e[m.edges[rule.ki.edges[ke]]];
    }
    for &ov in &rule.created_v {
        co_v[ov] = result.add_vertex(rule.o.vertex_type(ov));
    }
    for &oe in &rule.created_e {
        let e = rule.o.edge(oe);
        co_e[oe] = result.add_edge(e.ty, co_v[e.src], co_v[e.tgt]);
    }
    (
        result,
        Embedding {
            vertices: co_v,
            edges: co_e,
        },
    )
}

/// One iso-class of results: a canonical representative and its weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub graph: TypedGraph,
    pub weight: Q,
}

/// Applies every rule along every admissible match and folds the results by
/// isomorphism class, accumulating `weight × multiplicity`.
pub fn derive_all(rules: &[(Q, Rule)], state: &TypedGraph, semantics: Semantics) -> BTreeMap<CanonicalKey, Outcome> {
    let mut out: BTreeMap<CanonicalKey, Outcome> = BTreeMap::new();
    for (w, rule) in rules {
        for m in admissible_matches(rule, state, semantics) {
            let (g, _) = rewrite_unchecked(rule, &m, state);
            let (key, _) = g.canonical_labelling();
            match out.get_mut(&key) {
                Some(o) => o.weight += w,
                None => {
                    out.insert(
                        key,
                        Outcome {
                            graph: g.canonicalized(),
                            weight: w.clone(),
                        },
                    );
                }
            }
        }
    }
    out.retain(|_, o| !num_traits::Zero::is_zero(&o.weight));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{is_isomorphic, TypeGraph};
    use std::sync::Arc;

    fn types() -> Arc<TypeGraph> {
        TypeGraph::new(&["v"], &[("e", "v", "v")]).unwrap()
    }

    fn delete_vertex(t: &Arc<TypeGraph>) -> Rule {
        let one = TypedGraph::from_names(t, &["v"], &[]).unwrap();
        let empty = TypedGraph::empty(t);
        let none = Embedding {
            vertices: vec![],
            edges: vec![],
        };
        Rule::new("del", empty.clone(), empty, one, none.clone(), none, Condition::True).unwrap()
    }

    #[test]
    fn dangling_condition() {
        let t = types();
        let r = delete_vertex(&t);
        let host = TypedGraph::from_names(&t, &["v", "v", "v"], &[("e", 0, 1)]).unwrap();
        let at = |v| Embedding {
            vertices: vec![v],
            edges: vec![],
        };
        assert!(!dpo_admissible(&r, &at(0), &host));
        assert!(dpo_admissible(&r, &at(2), &host));
        assert_eq!(
            apply(&r, &at(0), &host, Semantics::Dpo),
            Err(RewriteError::Dangling("del".into()))
        );
        let d = apply(&r, &at(0), &host, Semantics::Sqpo).unwrap();
        assert_eq!(d.result.num_vertices(), 2);
        assert_eq!(d.result.num_edges(), 0);
    }

    #[test]
    fn identity_rule_preserves_host() {
        let t = types();
        let p = TypedGraph::from_names(&t, &["v", "v"], &[("e", 0, 1)]).unwrap();
        let r = Rule::identity("id", p, Condition::True).unwrap();
        let host = TypedGraph::from_names(&t, &["v", "v", "v"], &[("e", 0, 1), ("e", 1, 2)]).unwrap();
        for m in admissible_matches(&r, &host, Semantics::Dpo) {
            let d = apply(&r, &m, &host, Semantics::Dpo).unwrap();
            assert!(is_isomorphic(&d.result, &host));
            assert!(d.comatch.check(r.output(), &d.result).is_ok());
        }
    }

    #[test]
    fn no_matches_no_results() {
        let t = types();
        let p = TypedGraph::from_names(&t, &["v", "v"], &[("e", 0, 1)]).unwrap();
        let r = Rule::identity("id", p, Condition::True).unwrap();
        let host = TypedGraph::from_names(&t, &["v"], &[]).unwrap();
        let one = Q::from_integer(1.into());
        assert!(derive_all(&[(one, r)], &host, Semantics::Sqpo).is_empty());
    }
}
