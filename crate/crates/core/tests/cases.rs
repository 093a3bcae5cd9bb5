use gkcert_core::cases::*;
use gkcert_core::linform::RatForm;
use serde_json::Value;
use std::path::Path;

fn run(root: &Path, name: &str) -> (LoadedCase, CertificateReport) {
    let case = load_case(root, name).unwrap();
    let r = run_case(&case).unwrap();
    (case, r)
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let dst = to.join(e.file_name());
        if e.file_type().unwrap().is_dir() {
            copy_dir(&e.path(), &dst);
        } else {
            std::fs::copy(e.path(), dst).unwrap();
        }
    }
}

fn edit_json(path: &Path, f: impl FnOnce(&mut Value)) {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    f(&mut v);
    std::fs::write(path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

#[test]
fn bundled_cases_pass_and_verify() {
    let root = default_fixture_dir();
    for name in ["co1_p2", "m_p3", "b_p2"] {
        let (case, r) = run(&root, name);
        assert!(r.pass, "{name}:\n{}", render_text(&r));
        assert_eq!(r.verdict, LAST_INFEASIBLE);
        let v = verify_report(&r, &case);
        assert!(v.ok(), "{name}: {:?}", v.failures);
        let again = verify_report_str(&r.to_json_string(), &case).unwrap();
        assert!(again.ok() && again.checks == v.checks);
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let root = default_fixture_dir();
    for name in ["co1_p2", "m_p3"] {
        let a = run(&root, name).1.to_json_string();
        let b = run(&root, name).1.to_json_string();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn case_names_resolve_by_prefix() {
    let root = default_fixture_dir();
    assert_eq!(resolve_case_name(&root, "b").unwrap(), "b_p2");
    assert_eq!(resolve_case_name(&root, "co1_p2").unwrap(), "co1_p2");
    assert!(matches!(resolve_case_name(&root, "j4"), Err(CaseError::UnknownCase(_))));
}

#[test]
fn perturbed_farkas_entry_is_rejected() {
    let root = default_fixture_dir();
    let (case, r) = run(&root, "co1_p2");
    let mut v: Value = serde_json::from_str(&r.to_json_string()).unwrap();
    let stage = v["stages"].as_array_mut().unwrap().iter_mut().find(|s| s["name"] == "h").unwrap();
    let y = &mut stage["solves"][0]["rational"]["farkas"]["y"][0];
    let old: i64 = y.as_str().unwrap().parse().unwrap_or(0);
    *y = Value::String((old - 1000).to_string());
    let out = verify_report_str(&v.to_string(), &case).unwrap();
    assert!(!out.ok());
    assert!(out.failures.iter().any(|f| f.contains("rational certificate")), "{:?}", out.failures);
}

#[test]
fn reordered_stages_are_rejected() {
    let root = default_fixture_dir();
    let (case, mut r) = run(&root, "b_p2");
    r.stages.swap(0, 1);
    let out = verify_report(&r, &case);
    assert!(out.failures.iter().any(|f| f.contains("before it is produced")), "{:?}", out.failures);
}

#[test]
fn tampered_fact_is_rejected() {
    let root = default_fixture_dir();
    let (case, mut r) = run(&root, "b_p2");
    let f = r.facts.iter_mut().find(|f| f.class == "3A").unwrap();
    f.value = f.value.scale(&gkcert_core::cyclotomic::CycValue::int(2));
    assert!(!verify_report(&r, &case).ok());
}

#[test]
fn changed_fixture_breaks_the_hash() {
    let root = default_fixture_dir();
    let (_, r) = run(&root, "m_p3");
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&root, dir.path());
    let table = dir.path().join("tables/o8m3_mod3.json");
    let text = std::fs::read_to_string(&table).unwrap();
    std::fs::write(&table, text + "\n").unwrap();
    let case = load_case(dir.path(), "m_p3").unwrap();
    let out = verify_report(&r, &case);
    assert!(out.failures.iter().any(|f| f.contains("tables/o8m3_mod3.json")), "{:?}", out.failures);
}

#[test]
fn m_case_is_feasible_without_the_fixed_point_filter() {
    let root = default_fixture_dir();
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&root, dir.path());
    edit_json(&dir.path().join("stages/m_o8.json"), |v| {
        v["allowed"] = "all".into();
        v["var_names"] = "id".into();
        v["expect"] = serde_json::json!({});
        v["post"][1]["solve"]["methods"] = serde_json::json!(["rational"]);
    });
    let (case, r) = run(dir.path(), "m_p3");
    assert!(!r.last_stage_infeasible);
    assert_eq!(r.verdict, NOT_EXCLUDED);
    assert!(!r.pass);
    let st = r.stage("o8").unwrap();
    assert!(st.error.is_none(), "{:?}", st.error);
    let sv = &st.solves[0];
    assert_eq!(sv.outcome, "feasible");
    assert!(verify_report(&r, &case).ok());
}

#[test]
fn galois_relabelling_of_the_degree_15_pair() {
    let root = default_fixture_dir();
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&root, dir.path());
    edit_json(&dir.path().join("tables/l2_31_mod2.json"), |v| {
        let chars = v["characters"].as_array_mut().unwrap();
        let i = chars.iter().position(|c| c["id"] == 2).unwrap();
        let j = chars.iter().position(|c| c["id"] == 3).unwrap();
        let vi = chars[i]["values"].clone();
        chars[i]["values"] = chars[j]["values"].clone();
        chars[j]["values"] = vi;
    });
    let (_, base) = run(&root, "b_p2");
    let (case, swapped) = run(dir.path(), "b_p2");
    assert_eq!(swapped.verdict, base.verdict);
    assert!(verify_report(&swapped, &case).ok());

    let rel: Vec<(&str, RatForm)> = swapped.relations.iter().map(|r| (r.param.as_str(), r.value.clone())).collect();
    let k2_k3 = rel.iter().any(|(p, v)| (*p == "k3" && *v == RatForm::param("k2")) || (*p == "k2" && *v == RatForm::param("k3")));
    assert!(k2_k3, "{rel:?}");
    let l5 = |r: &CertificateReport| r.stage("l5").unwrap().resolved.clone();
    let resolve_k = |m: std::collections::BTreeMap<u32, RatForm>, r: &CertificateReport| -> Vec<RatForm> {
        m.values()
            .map(|f| {
                let mut f = f.clone();
                for rel in &r.relations {
                    f = f.substitute(&rel.param, &rel.value);
                }
                f
            })
            .collect()
    };
    assert_eq!(resolve_k(l5(&swapped), &swapped), resolve_k(l5(&base), &base));
    for class in ["1A", "3A", "7A", "23A", "23B"] {
        assert_eq!(swapped.fact(class).unwrap().value, base.fact(class).unwrap().value, "{class}");
    }
}
