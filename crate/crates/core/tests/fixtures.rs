//! Every bundled fixture loads and is internally consistent.

use gkcert_core::cases::{case_names, default_fixture_dir, load_case};
use gkcert_core::chartab::{load_slice_file, validate_fusion, FusionMap, OrderList, ParentData};
use gkcert_core::primegraph::{build_graph, PrimeGraph};

#[test]
fn every_case_and_stage_loads() {
    let root = default_fixture_dir();
    let names = case_names(&root).unwrap();
    assert_eq!(names, ["b_p2", "co1_p2", "m_p3"]);
    for name in names {
        let case = load_case(&root, &name).unwrap();
        assert_eq!(case.stages.len(), case.spec.stages.len());
        assert!(!case.spec.fixed_point_free_orders.is_empty());
        let parent = load_slice_file(&root.join(&case.spec.parent_classes)).unwrap();
        for st in &case.stages {
            let sub = load_slice_file(&root.join(&st.sub_slice)).unwrap();
            let fusion = FusionMap::load(&root.join(&st.fusion)).unwrap();
            let check = validate_fusion(&fusion, &sub, ParentData::Slice(&parent)).unwrap();
            assert!(check.valid, "{name}/{}: {check:?}", st.name);
            for rel in [&st.expect.built_system, &st.expect.rational_system, &st.expect.rref].into_iter().flatten() {
                let text = std::fs::read_to_string(root.join(rel)).unwrap();
                let v: serde_json::Value = serde_json::from_str(&text).unwrap();
                assert_eq!(v["a"].as_array().unwrap().len(), v["rhs"].as_array().unwrap().len(), "{rel}");
            }
        }
    }
}

#[test]
fn tables_have_consistent_shapes() {
    for entry in std::fs::read_dir(default_fixture_dir().join("tables")).unwrap() {
        let path = entry.unwrap().path();
        let s = load_slice_file(&path).unwrap();
        assert!(s.characteristic > 0, "{}", path.display());
        for ch in &s.characters {
            assert_eq!(ch.values.len(), s.classes.len(), "{} character {}", path.display(), ch.id);
            let deg = s.value(ch.id, s.identity_class()).unwrap();
            assert_eq!(deg.as_rational(), Some(gkcert_core::rat::rat(ch.degree as i64)));
        }
    }
}

#[test]
fn order_lists_match_stored_graphs() {
    let root = default_fixture_dir();
    for g in ["co1", "m", "b"] {
        let list = OrderList::load(&root.join(format!("orders/{g}.json"))).unwrap();
        list.validate().unwrap();
        let text = std::fs::read_to_string(root.join(format!("graphs/{g}_expected.json"))).unwrap();
        let want: PrimeGraph = serde_json::from_str(&text).unwrap();
        assert_eq!(build_graph(&list).unwrap(), want, "{g}");
    }
}
