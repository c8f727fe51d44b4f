//! JSON and CSV interchange formats for graphs, rules, rule sets and tables.
//!
//! Graph elements carry string ids in JSON; internally they are positional.
//! Exported graphs use ids `v0, v1, …` and `e0, e1, …`.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::condition::{Condition, ConditionError, ConstraintSet};
use crate::graph::{Edge, Embedding, GraphError, Morphism, TypeGraph, TypedGraph};
use crate::rewrite::{RewriteError, Rule};
use crate::species::{CountTable, GenerationTable};
use crate::Q;

#[derive(Debug, Error)]
pub enum JsonError {
    #[error(transparent)]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Condition(#[from] ConditionError),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("unknown id `{0}`")]
    UnknownId(String),
    #[error("morphism does not map `{0}`")]
    Unmapped(String),
    #[error("malformed rational `{0}`")]
    Rational(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeTypeJson {
    pub label: String,
    pub src: String,
    pub tgt: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeGraphJson {
    pub vertex_types: Vec<String>,
    pub edge_types: Vec<EdgeTypeJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexJson {
    pub id: String,
    #[serde(rename = "type")]
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeJson {
    pub id: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub src: String,
    pub tgt: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub vertices: Vec<VertexJson>,
    pub edges: Vec<EdgeJson>,
}

/// Element map of a morphism, by id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MorphismJson {
    pub vertices: BTreeMap<String, String>,
    pub edges: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConditionJson {
    True,
    Exists {
        graph: GraphJson,
        embed: MorphismJson,
        sub: Box<ConditionJson>,
    },
    Forall {
        graph: GraphJson,
        embed: MorphismJson,
        sub: Box<ConditionJson>,
    },
    Not {
        sub: Box<ConditionJson>,
    },
    And {
        parts: Vec<ConditionJson>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleJson {
    pub name: String,
    #[serde(rename = "O")]
    pub o: GraphJson,
    #[serde(rename = "K")]
    pub k: GraphJson,
    #[serde(rename = "I")]
    pub i: GraphJson,
    pub ko: MorphismJson,
    pub ki: MorphismJson,
    pub condition: ConditionJson,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedRuleJson {
    pub weight: String,
    #[serde(flatten)]
    pub rule: RuleJson,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsJson {
    pub forbidden: Vec<GraphJson>,
    pub positive: ConditionJson,
}

/// A self-contained rule system: type graph, weighted rules, and optionally
/// an initial state and constraints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSetJson {
    pub type_graph: TypeGraphJson,
    pub rules: Vec<WeightedRuleJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<GraphJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<ConstraintsJson>,
}

/// A decoded rule system.
#[derive(Debug, Clone)]
pub struct RuleSet {
    pub types: Arc<TypeGraph>,
    pub rules: Vec<(Q, Rule)>,
    pub initial: Option<TypedGraph>,
    pub constraints: Option<ConstraintSet>,
}

pub fn parse_rational(s: &str) -> Result<Q, JsonError> {
    s.trim().parse::<Q>().map_err(|_| JsonError::Rational(s.to_string()))
}

pub fn type_graph_from_json(j: &TypeGraphJson) -> Result<Arc<TypeGraph>, JsonError> {
    let edges: Vec<(&str, &str, &str)> = j
        .edge_types
        .iter()
        .map(|e| (e.label.as_str(), e.src.as_str(), e.tgt.as_str()))
        .collect();
    let vertices: Vec<&str> = j.vertex_types.iter().map(String::as_str).collect();
    Ok(TypeGraph::new(&vertices, &edges)?)
}

pub fn type_graph_to_json(t: &TypeGraph) -> TypeGraphJson {
    TypeGraphJson {
        vertex_types: t.vertex_types().to_vec(),
        edge_types: t
            .edge_types()
            .iter()
            .map(|e| EdgeTypeJson {
                label: e.label.clone(),
                src: t.vertex_types()[e.src].clone(),
                tgt: t.vertex_types()[e.tgt].clone(),
            })
            .collect(),
    }
}

/// A graph together with its id → position maps.
struct Decoded {
    graph: TypedGraph,
    vertex_ids: HashMap<String, usize>,
    edge_ids: HashMap<String, usize>,
}

fn decode_graph(types: &Arc<TypeGraph>, j: &GraphJson) -> Result<Decoded, JsonError> {
    let mut vertex_ids = HashMap::new();
    let mut vs = Vec::new();
    for v in &j.vertices {
        if vertex_ids.insert(v.id.clone(), vs.len()).is_some() {
            return Err(JsonError::DuplicateId(v.id.clone()));
        }
        vs.push(types.vertex_type(&v.ty)?);
    }
    let mut edge_ids = HashMap::new();
    let mut es = Vec::new();
    for e in &j.edges {
        if edge_ids.insert(e.id.clone(), es.len()).is_some() {
            return Err(JsonError::DuplicateId(e.id.clone()));
        }
        let lookup = |id: &String| {
            vertex_ids
                .get(id)
                .copied()
                .ok_or_else(|| JsonError::UnknownId(id.clone()))
        };
        es.push(Edge {
            ty: types.edge_type(&e.ty)?,
            src: lookup(&e.src)?,
            tgt: lookup(&e.tgt)?,
        });
    }
    Ok(Decoded {
        graph: TypedGraph::new(types, vs, es)?,
        vertex_ids,
        edge_ids,
    })
}

pub fn graph_from_json(types: &Arc<TypeGraph>, j: &GraphJson) -> Result<TypedGraph, JsonError> {
    Ok(decode_graph(types, j)?.graph)
}

pub fn graph_to_json(g: &TypedGraph) -> GraphJson {
    let t = g.type_graph();
    GraphJson {
        vertices: (0..g.num_vertices())
            .map(|v| VertexJson {
                id: format!("v{v}"),
                ty: t.vertex_types()[g.vertex_type(v)].clone(),
            })
            .collect(),
        edges: g
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| EdgeJson {
                id: format!("e{i}"),
                ty: t.edge_types()[e.ty].label.clone(),
                src: format!("v{}", e.src),
                tgt: format!("v{}", e.tgt),
            })
            .collect(),
    }
}

fn decode_morphism(j: &MorphismJson, dom: &Decoded, cod: &Decoded) -> Result<Morphism, JsonError> {
    let mut vertices = vec![usize::MAX; dom.graph.num_vertices()];
    for (a, b) in &j.vertices {
        let x = *dom.vertex_ids.get(a).ok_or_else(|| JsonError::UnknownId(a.clone()))?;
        vertices[x] = *cod.vertex_ids.get(b).ok_or_else(|| JsonError::UnknownId(b.clone()))?;
    }
    let mut edges = vec![usize::MAX; dom.graph.num_edges()];
    for (a, b) in &j.edges {
        let x = *dom.edge_ids.get(a).ok_or_else(|| JsonError::UnknownId(a.clone()))?;
        edges[x] = *cod.edge_ids.get(b).ok_or_else(|| JsonError::UnknownId(b.clone()))?;
    }
    for (id, &x) in &dom.vertex_ids {
        if vertices[x] == usize::MAX {
            return Err(JsonError::Unmapped(id.clone()));
        }
    }
    for (id, &x) in &dom.edge_ids {
        if edges[x] == usize::MAX {
            return Err(JsonError::Unmapped(id.clone()));
        }
    }
    Ok(Morphism::new(
        dom.graph.clone(),
        cod.graph.clone(),
        Embedding { vertices, edges },
    )?)
}

fn morphism_to_json(m: &Embedding) -> MorphismJson {
    MorphismJson {
        vertices: m
            .vertices
            .iter()
            .enumerate()
            .map(|(a, b)| (format!("v{a}"), format!("v{b}")))
            .collect(),
        edges: m
            .edges
            .iter()
            .enumerate()
            .map(|(a, b)| (format!("e{a}"), format!("e{b}")))
            .collect(),
    }
}

fn decode_condition(types: &Arc<TypeGraph>, j: &ConditionJson, over: &Decoded) -> Result<Condition, JsonError> {
    Ok(match j {
        ConditionJson::True => Condition::True,
        ConditionJson::Not { sub } => decode_condition(types, sub, over)?.negate(),
        ConditionJson::And { parts } => Condition::And(
            parts
                .iter()
                .map(|p| decode_condition(types, p, over))
                .collect::<Result<_, _>>()?,
        ),
        ConditionJson::Exists { graph, embed, sub } | ConditionJson::Forall { graph, embed, sub } => {
            let y = decode_graph(types, graph)?;
            let m = decode_morphism(embed, over, &y)?;
            let sub = decode_condition(types, sub, &y)?;
            if matches!(j, ConditionJson::Forall { .. }) {
                Condition::forall(m, sub)
            } else {
                Condition::exists(m, sub)
            }
        }
    })
}

/// Decodes a condition over `root`, whose JSON ids are `root_json`'s.
pub fn condition_from_json(
    types: &Arc<TypeGraph>,
    j: &ConditionJson,
    root_json: &GraphJson,
) -> Result<Condition, JsonError> {
    let root = decode_graph(types, root_json)?;
    decode_condition(types, j, &root)
}

pub fn condition_to_json(c: &Condition) -> ConditionJson {
    match c {
        Condition::True => ConditionJson::True,
        Condition::Not(inner) => ConditionJson::Not {
            sub: Box::new(condition_to_json(inner)),
        },
        Condition::And(parts) => ConditionJson::And {
            parts: parts.iter().map(condition_to_json).collect(),
        },
        Condition::Exists { embed, sub } => ConditionJson::Exists {
            graph: graph_to_json(&embed.codomain),
            embed: morphism_to_json(&embed.map),
            sub: Box::new(condition_to_json(sub)),
        },
    }
}

pub fn rule_from_json(types: &Arc<TypeGraph>, j: &RuleJson) -> Result<Rule, JsonError> {
    let o = decode_graph(types, &j.o)?;
    let k = decode_graph(types, &j.k)?;
    let i = decode_graph(types, &j.i)?;
    let ko = decode_morphism(&j.ko, &k, &o)?;
    let ki = decode_morphism(&j.ki, &k, &i)?;
    let condition = decode_condition(types, &j.condition, &i)?;
    Ok(Rule::new(
        j.name.clone(),
        o.graph,
        k.graph,
        i.graph,
        ko.map,
        ki.map,
        condition,
    )?)
}

pub fn rule_to_json(r: &Rule) -> RuleJson {
    RuleJson {
        name: r.name().to_string(),
        o: graph_to_json(r.output()),
        k: graph_to_json(r.interface()),
        i: graph_to_json(r.input()),
        ko: morphism_to_json(r.k_to_o()),
        ki: morphism_to_json(r.k_to_i()),
        condition: condition_to_json(r.condition()),
    }
}

pub fn rule_set_from_json(j: &RuleSetJson) -> Result<RuleSet, JsonError> {
    let types = type_graph_from_json(&j.type_graph)?;
    let rules = j
        .rules
        .iter()
        .map(|w| Ok((parse_rational(&w.weight)?, rule_from_json(&types, &w.rule)?)))
        .collect::<Result<Vec<_>, JsonError>>()?;
    let initial = j.initial.as_ref().map(|g| graph_from_json(&types, g)).transpose()?;
    let constraints = match &j.constraints {
        None => None,
        Some(c) => {
            let forbidden = c
                .forbidden
                .iter()
                .map(|g| graph_from_json(&types, g))
                .collect::<Result<Vec<_>, _>>()?;
            let empty = GraphJson {
                vertices: vec![],
                edges: vec![],
            };
            let positive = condition_from_json(&types, &c.positive, &empty)?;
            Some(ConstraintSet::new(forbidden, positive)?)
        }
    };
    Ok(RuleSet {
        types,
        rules,
        initial,
        constraints,
    })
}

pub fn rule_set_to_json(
    types: &TypeGraph,
    rules: &[(Q, Rule)],
    initial: Option<&TypedGraph>,
    constraints: Option<&ConstraintSet>,
) -> RuleSetJson {
    RuleSetJson {
        type_graph: type_graph_to_json(types),
        rules: rules
            .iter()
            .map(|(w, r)| WeightedRuleJson {
                weight: w.to_string(),
                rule: rule_to_json(r),
            })
            .collect(),
        initial: initial.map(graph_to_json),
        constraints: constraints.map(|c| ConstraintsJson {
            forbidden: c.forbidden.iter().map(graph_to_json).collect(),
            positive: condition_to_json(&c.positive),
        }),
    }
}

pub fn load_rule_set(text: &str) -> Result<RuleSet, JsonError> {
    rule_set_from_json(&serde_json::from_str(text)?)
}

#[derive(Debug, Serialize)]
struct TableRow<'a> {
    key: String,
    weight: String,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    counts: BTreeMap<&'a str, u64>,
}

/// Generation table as JSON: one array of `{key, weight, counts}` per
/// generation. Weights are exact decimal (or `p/q`) strings.
pub fn write_table_json<W: Write>(table: &GenerationTable, counts: Option<&CountTable>, mut w: W) -> io::Result<()> {
    let gens: Vec<Vec<TableRow>> = table
        .generations
        .iter()
        .map(|g| {
            g.iter()
                .map(|(k, e)| TableRow {
                    key: k.to_string(),
                    weight: e.weight.to_string(),
                    counts: counts
                        .map(|c| {
                            c.names
                                .iter()
                                .map(String::as_str)
                                .zip(c.get(k).unwrap_or(&[]).iter().copied())
                                .collect()
                        })
                        .unwrap_or_default(),
                })
                .collect()
        })
        .collect();
    serde_json::to_writer_pretty(&mut w, &gens)?;
    writeln!(w)
}

/// Generation table as CSV: `n,key,weight,<count columns>`. Keys contain
/// commas and are quoted.
pub fn write_table_csv<W: Write>(table: &GenerationTable, counts: Option<&CountTable>, mut w: W) -> io::Result<()> {
    let names: Vec<&str> = counts
        .map(|c| c.names.iter().map(String::as_str).collect())
        .unwrap_or_default();
    let mut header = vec!["n", "key", "weight"];
    header.extend(&names);
    writeln!(w, "{}", header.join(","))?;
    for (n, g) in table.generations.iter().enumerate() {
        for (k, e) in g {
            write!(w, "{n},\"{k}\",{}", e.weight)?;
            if let Some(c) = counts {
                for x in c.get(k).unwrap_or(&[]) {
                    write!(w, ",{x}")?;
                }
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{birth_death, prbt};

    #[test]
    fn rule_set_round_trip() {
        let sys = prbt::make_remy_system();
        let root = prbt::make_initial_tree(&sys.types);
        let j = rule_set_to_json(&sys.types, &sys.rules, Some(&root), Some(&sys.constraints));
        let text = serde_json::to_string(&j).unwrap();
        let back = load_rule_set(&text).unwrap();
        assert_eq!(back.rules, sys.rules);
        assert_eq!(back.initial.as_ref(), Some(&root));
        assert_eq!(back.constraints.as_ref(), Some(&sys.constraints));
    }

    #[test]
    fn conditions_round_trip() {
        let bd = birth_death::make_birth_death(true);
        let j = rule_set_to_json(&bd.types, &bd.unit_rates(), None, None);
        let back = rule_set_from_json(&j).unwrap();
        assert_eq!(back.rules, bd.unit_rates());
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = r#"{"vertices":[{"id":"a","type":"v","colour":1}],"edges":[]}"#;
        assert!(serde_json::from_str::<GraphJson>(bad).is_err());
    }

    #[test]
    fn unmapped_interface_vertex_rejected() {
        let text = r#"{
          "type_graph": {"vertex_types": ["v"], "edge_types": []},
          "rules": [{"weight": "1/2", "name": "r",
            "O": {"vertices": [{"id": "a", "type": "v"}], "edges": []},
            "K": {"vertices": [{"id": "a", "type": "v"}], "edges": []},
            "I": {"vertices": [{"id": "a", "type": "v"}], "edges": []},
            "ko": {"vertices": {}, "edges": {}},
            "ki": {"vertices": {"a": "a"}, "edges": {}},
            "condition": {"kind": "true"}}]
        }"#;
        assert!(matches!(load_rule_set(text), Err(JsonError::Unmapped(_))));
    }
}
