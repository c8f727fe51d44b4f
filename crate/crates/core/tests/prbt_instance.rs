use num_bigint::BigUint;

use rasm::canon::CanonicalKey;
use rasm::instances::prbt::{self, I, L, R};
use rasm::json::{load_rule_set, rule_set_to_json, write_table_csv, write_table_json};
use rasm::rewrite::{admissible_matches, Semantics};
use rasm::species::{count_patterns, expand};

#[test]
fn reference_values() {
    let check = |n, g: u64, c: u64, e| {
        let r = prbt::reference_values(n);
        assert_eq!((r.g, r.catalan, r.edges), (BigUint::from(g), BigUint::from(c), e));
    };
    check(0, 1, 1, 1);
    check(5, 30240, 42, 11);
    check(8, 518918400, 1430, 17);
}

#[test]
fn remy_rules_on_the_root() {
    let sys = prbt::make_remy_system();
    let root = prbt::make_initial_tree(&sys.types);
    let total: usize = sys
        .rules
        .iter()
        .map(|(_, r)| admissible_matches(r, &root, Semantics::Sqpo).len())
        .sum();
    assert_eq!(total, 2);
    assert_eq!(
        sys.rules.iter().map(|(_, r)| r.name()).collect::<Vec<_>>(),
        ["GL_I", "GL_L", "GL_R", "GR_I", "GR_L", "GR_R"]
    );
    let gl = &sys.rules[0].1;
    assert_eq!(gl.input().num_edges(), 1);
    assert_eq!(gl.interface().num_vertices(), 2);
    assert_eq!(gl.output().num_vertices(), 4);
    assert!(!gl.deletes_vertices());
}

#[test]
fn root_edge_has_explicit_endpoints() {
    let sys = prbt::make_remy_system();
    let root = prbt::make_initial_tree(&sys.types);
    assert_eq!(root.num_vertices(), 2);
    assert_eq!(sys.observable("E").count(&root), 1);
    assert_eq!(prbt::internal_vertices(&root), 0);
    let t1 = prbt::graph(&sys.types, 4, &[(I, 0, 1), (L, 1, 2), (R, 1, 3)]);
    assert!(prbt::is_prbt(&t1));
    assert_eq!(prbt::internal_vertices(&t1), 1);
}

#[test]
fn rule_file_round_trip_reproduces_the_table() {
    let sys = prbt::make_remy_system();
    let root = prbt::make_initial_tree(&sys.types);
    let text = serde_json::to_string_pretty(&rule_set_to_json(
        &sys.types,
        &sys.rules,
        Some(&root),
        Some(&sys.constraints),
    ))
    .unwrap();
    let loaded = load_rule_set(&text).unwrap();
    let a = expand(&sys.rules, &root, 4, Semantics::Sqpo, Some(&sys.constraints)).unwrap();
    let b = expand(
        &loaded.rules,
        loaded.initial.as_ref().unwrap(),
        4,
        Semantics::Sqpo,
        loaded.constraints.as_ref(),
    )
    .unwrap();
    let keys = |t: &rasm::species::GenerationTable| -> Vec<Vec<CanonicalKey>> {
        t.generations.iter().map(|g| g.keys().cloned().collect()).collect()
    };
    assert_eq!(keys(&a), keys(&b));

    let counts = count_patterns(&a, &sys.observables);
    let mut csv = Vec::new();
    write_table_csv(&a, Some(&counts), &mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,key,weight,E,P1,P2,P3"));
    assert!(lines.next().unwrap().ends_with(",1,1,0,0,0"));
    assert_eq!(csv.lines().count(), 1 + 1 + 1 + 2 + 5 + 14);
    for line in csv.lines().skip(1) {
        let parts: Vec<&str> = line.split('"').collect();
        assert_eq!(parts.len(), 3, "{line}");
        let key: CanonicalKey = parts[1].parse().unwrap();
        assert!(a.find(&key).is_some());
        assert_eq!(parts[2].split(',').count(), 6);
    }

    let mut json = Vec::new();
    write_table_json(&a, Some(&counts), &mut json).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(v[4].as_array().unwrap().len(), 14);
    assert_eq!(v[2][0]["weight"], "6");
    assert_eq!(v[2][0]["counts"]["E"], 5);
    let key: CanonicalKey = v[1][0]["key"].as_str().unwrap().parse().unwrap();
    assert!(a.find(&key).is_some());
}
