//! Nested application conditions and structural constraint sets.

use std::ops::ControlFlow;

use thiserror::Error;

use crate::graph::{count_monos, for_each_extension, Embedding, Morphism, Partial, TypedGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConditionError {
    #[error("condition is rooted at a different object than the morphism's domain")]
    ObjectMismatch,
    #[error("nested condition is rooted at a different object than its embedding's codomain")]
    NestedMismatch,
    #[error("forbidden graphs must be nonempty")]
    EmptyForbidden,
}

/// A nested condition over some object X.
///
/// `Exists` carries a mono `X ↪ Y` and a condition over `Y`. Universal
/// quantification and disjunction are encoded through `Not`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Condition {
    True,
    Exists { embed: Morphism, sub: Box<Condition> },
    Not(Box<Condition>),
    And(Vec<Condition>),
}

impl Condition {
    pub fn exists(embed: Morphism, sub: Condition) -> Self {
        Condition::Exists {
            embed,
            sub: Box::new(sub),
        }
    }

    /// `∃(embed, true)`.
    pub fn exists_plain(embed: Morphism) -> Self {
        Condition::exists(embed, Condition::True)
    }

    pub fn forall(embed: Morphism, sub: Condition) -> Self {
        Condition::Not(Box::new(Condition::exists(embed, sub.negate())))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn negate(self) -> Self {
        Condition::Not(Box::new(self))
    }

    pub fn and(parts: Vec<Condition>) -> Self {
        Condition::And(parts)
    }

    pub fn or(parts: Vec<Condition>) -> Self {
        Condition::And(parts.into_iter().map(Condition::negate).collect()).negate()
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Condition::True)
    }

    /// Checks that every nested condition is rooted at its embedding's codomain
    /// and, if `root` is given, that top-level embeddings start at `root`.
    pub fn validate(&self, root: Option<&TypedGraph>) -> Result<(), ConditionError> {
        match self {
            Condition::True => Ok(()),
            Condition::Exists { embed, sub } => {
                if let Some(r) = root {
                    if &embed.domain != r {
                        return Err(ConditionError::ObjectMismatch);
                    }
                }
                sub.validate_nested(&embed.codomain)
            }
            Condition::Not(c) => c.validate(root),
            Condition::And(cs) => cs.iter().try_for_each(|c| c.validate(root)),
        }
    }

    fn validate_nested(&self, root: &TypedGraph) -> Result<(), ConditionError> {
        match self.validate(Some(root)) {
            Err(ConditionError::ObjectMismatch) => Err(ConditionError::NestedMismatch),
            r => r,
        }
    }
}

/// Whether the mono `a: X ↪ Z` satisfies `c`, a condition over X.
pub fn satisfies(a: &Morphism, c: &Condition) -> Result<bool, ConditionError> {
    c.validate(Some(&a.domain))?;
    Ok(holds(&a.map, &a.codomain, c))
}

/// Unchecked evaluation: `a` maps the condition's root object into `host`.
pub fn holds(a: &Embedding, host: &TypedGraph, c: &Condition) -> bool {
    match c {
        Condition::True => true,
        Condition::Not(inner) => !holds(a, host, inner),
        Condition::And(cs) => cs.iter().all(|c| holds(a, host, c)),
        Condition::Exists { embed, sub } => {
            let partial = Partial::through(&embed.map, a, &embed.codomain);
            for_each_extension(&embed.codomain, host, &partial, |b| {
                if holds(b, host, sub) {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            })
            .is_break()
        }
    }
}

/// Negative constraints (forbidden subgraphs) plus a positive condition over ∅.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSet {
    pub forbidden: Vec<TypedGraph>,
    pub positive: Condition,
}

impl ConstraintSet {
    pub fn new(forbidden: Vec<TypedGraph>, positive: Condition) -> Result<Self, ConditionError> {
        if forbidden.iter().any(TypedGraph::is_empty) {
            return Err(ConditionError::EmptyForbidden);
        }
        let cs = ConstraintSet { forbidden, positive };
        if let Some(g) = cs.forbidden.first() {
            cs.positive.validate(Some(&TypedGraph::empty(g.type_graph())))?;
        }
        Ok(cs)
    }

    pub fn none() -> Self {
        ConstraintSet {
            forbidden: Vec::new(),
            positive: Condition::True,
        }
    }

    pub fn is_pattern(&self, g: &TypedGraph) -> bool {
        self.forbidden.iter().all(|f| count_monos(f, g) == 0)
    }

    pub fn is_state(&self, g: &TypedGraph) -> bool {
        self.is_pattern(g) && self.positive_holds(g)
    }

    fn positive_holds(&self, g: &TypedGraph) -> bool {
        let empty = Embedding {
            vertices: Vec::new(),
            edges: Vec::new(),
        };
        holds(&empty, g, &self.positive)
    }
}

/// `(is_pattern, is_state)` of `g` under `cs`.
pub fn holds_constraints(g: &TypedGraph, cs: &ConstraintSet) -> (bool, bool) {
    let pattern = cs.is_pattern(g);
    (pattern, pattern && cs.positive_holds(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{enumerate_monos, TypeGraph};
    use std::sync::Arc;

    fn points(t: &Arc<TypeGraph>, n: usize) -> TypedGraph {
        TypedGraph::from_names(t, &vec!["v"; n], &[]).unwrap()
    }

    fn at_least_three(t: &Arc<TypeGraph>) -> Condition {
        Condition::exists_plain(Morphism::from_empty(points(t, 3)))
    }

    #[test]
    fn true_always_holds() {
        let t = TypeGraph::new(&["v"], &[]).unwrap();
        let a = Morphism::from_empty(points(&t, 2));
        assert!(satisfies(&a, &Condition::True).unwrap());
    }

    #[test]
    fn existence_of_three_vertices() {
        let t = TypeGraph::new(&["v"], &[]).unwrap();
        let c = at_least_three(&t);
        assert!(!satisfies(&Morphism::from_empty(points(&t, 2)), &c).unwrap());
        assert!(satisfies(&Morphism::from_empty(points(&t, 3)), &c).unwrap());
    }

    #[test]
    fn double_negation() {
        let t = TypeGraph::new(&["v"], &[]).unwrap();
        let c = at_least_three(&t);
        for n in 0..5 {
            let a = Morphism::from_empty(points(&t, n));
            assert_eq!(
                satisfies(&a, &c.clone().negate().negate()).unwrap(),
                satisfies(&a, &c).unwrap()
            );
        }
    }

    #[test]
    fn forall_matches_brute_force() {
        // every vertex has an out-edge to another vertex; loops do not count
        let t = TypeGraph::new(&["v"], &[("e", "v", "v")]).unwrap();
        let one = points(&t, 1);
        let edge = TypedGraph::from_names(&t, &["v", "v"], &[("e", 0, 1)]).unwrap();
        let has_out = Condition::exists_plain(
            Morphism::new(
                one.clone(),
                edge,
                Embedding {
                    vertices: vec![0],
                    edges: vec![],
                },
            )
            .unwrap(),
        );
        let c = Condition::forall(Morphism::from_empty(one.clone()), has_out);
        let hosts = [
            TypedGraph::from_names(&t, &["v", "v"], &[("e", 0, 1), ("e", 1, 0)]).unwrap(),
            TypedGraph::from_names(&t, &["v", "v"], &[("e", 0, 1)]).unwrap(),
            TypedGraph::from_names(&t, &["v", "v", "v"], &[("e", 0, 1), ("e", 1, 2), ("e", 2, 2)]).unwrap(),
        ];
        for h in hosts {
            let brute = enumerate_monos(&one, &h)
                .unwrap()
                .iter()
                .all(|m| h.edges().iter().any(|e| e.src == m.vertices[0] && e.tgt != e.src));
            assert_eq!(satisfies(&Morphism::from_empty(h.clone()), &c).unwrap(), brute);
        }
    }

    #[test]
    fn mismatched_root_is_an_error() {
        let t = TypeGraph::new(&["v"], &[]).unwrap();
        let c = Condition::exists_plain(Morphism::identity(points(&t, 1)));
        let a = Morphism::from_empty(points(&t, 2));
        assert_eq!(satisfies(&a, &c), Err(ConditionError::ObjectMismatch));
    }

    #[test]
    fn empty_forbidden_graph_rejected() {
        let t = TypeGraph::new(&["v"], &[]).unwrap();
        assert_eq!(
            ConstraintSet::new(vec![points(&t, 0)], Condition::True),
            Err(ConditionError::EmptyForbidden)
        );
    }
}
