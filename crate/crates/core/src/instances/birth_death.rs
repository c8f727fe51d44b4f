//! Birth-death process on graphs with vertices only.

use std::sync::Arc;

use num_traits::One;

use crate::condition::Condition;
use crate::graph::{Embedding, Morphism, TypeGraph, TypedGraph};
use crate::rewrite::Rule;
use crate::Q;

#[derive(Debug, Clone)]
pub struct BirthDeathSystem {
    pub types: Arc<TypeGraph>,
    pub birth: Rule,
    pub death: Rule,
}

impl BirthDeathSystem {
    /// Both rules with the given base rates, birth first.
    pub fn transitions(&self, birth_rate: Q, death_rate: Q) -> Vec<(Q, Rule)> {
        vec![(birth_rate, self.birth.clone()), (death_rate, self.death.clone())]
    }

    pub fn unit_rates(&self) -> Vec<(Q, Rule)> {
        self.transitions(Q::one(), Q::one())
    }

    pub fn state(&self, n: usize) -> TypedGraph {
        points(&self.types, n)
    }
}

pub fn type_graph() -> Arc<TypeGraph> {
    TypeGraph::new::<&str>(&["v"], &[]).expect("static type graph")
}

pub fn points(types: &Arc<TypeGraph>, n: usize) -> TypedGraph {
    TypedGraph::new(types, vec![0; n], vec![]).expect("vertex-only graph")
}

/// `∃(∅ ↪ • • •)`: at least three vertices are present.
pub fn at_least_three(types: &Arc<TypeGraph>) -> Condition {
    Condition::exists_plain(Morphism::from_empty(points(types, 3)))
}

/// Birth `• ← ∅ → ∅` (optionally conditioned on three vertices) and death
/// `∅ ← ∅ → •`.
pub fn make_birth_death(with_condition: bool) -> BirthDeathSystem {
    let types = type_graph();
    let empty = points(&types, 0);
    let one = points(&types, 1);
    let none = Embedding {
        vertices: vec![],
        edges: vec![],
    };
    let condition = if with_condition {
        at_least_three(&types)
    } else {
        Condition::True
    };
    let birth = Rule::new(
        "birth",
        one.clone(),
        empty.clone(),
        empty.clone(),
        none.clone(),
        none.clone(),
        condition,
    )
    .expect("static rule");
    let death =
        Rule::new("death", empty.clone(), empty, one, none.clone(), none, Condition::True).expect("static rule");
    BirthDeathSystem { types, birth, death }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::{count_admissible, Semantics};

    #[test]
    fn propensities() {
        let bd = make_birth_death(false);
        for n in 0..6 {
            let x = bd.state(n);
            assert_eq!(count_admissible(&bd.birth, &x, Semantics::Sqpo), 1);
            assert_eq!(count_admissible(&bd.death, &x, Semantics::Sqpo), n);
        }
        let bd = make_birth_death(true);
        assert_eq!(count_admissible(&bd.birth, &bd.state(2), Semantics::Sqpo), 0);
        assert_eq!(count_admissible(&bd.birth, &bd.state(3), Semantics::Sqpo), 1);
    }
}
