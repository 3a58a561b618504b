//! The bindings are plain functions on the host; drive them with the
//! shipped fixtures and check the JSON they hand to the page.

use agdiag_wasm::{compose_json, diagnose_json, status_json};

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR")))
        .expect("fixture")
}

fn parse(s: String) -> serde_json::Value {
    serde_json::from_str(&s).expect("valid json")
}

#[test]
fn compose_describes_system_and_graph() {
    let v = parse(compose_json(&fixture("example1.json")));
    assert_eq!(v["system"]["name"], "comp_2");
    assert_eq!(v["system"]["guarantees"][0]["term"], "i - 2*o' <= -3");
    assert_eq!(v["terms_total"], 5);
    assert_eq!(v["graph"]["vertices"].as_array().unwrap().len(), 8);
    assert_eq!(v["graph"]["edges"].as_array().unwrap().len(), 4);
    assert!(v["rendered"].as_str().unwrap().contains("contract comp_2"));
}

#[test]
fn status_reports_fail_with_witness() {
    let v = parse(status_json(&fixture("example3.json"), &fixture("example3_log.json")));
    let m2 = &v["statuses"][1];
    assert_eq!(m2["component"], "M2");
    assert_eq!(m2["status"], "FAIL");
    assert_eq!(m2["witness"], serde_json::json!(["M2.g0"]));
    assert!(v["rendered"].as_str().unwrap().contains("M3: IDLE"));
}

#[test]
fn diagnose_blames_faulty_component() {
    let v = parse(diagnose_json(
        &fixture("example3.json"),
        &fixture("example3_log.json"),
        "all",
    ));
    assert_eq!(v["faulty_components"], serde_json::json!(["M2"]));
    assert_eq!(v["terms_checked"], 6);
    assert_eq!(v["terms_total"], 10);
    assert_eq!(v["reports"][0]["violated_guarantee"], "comp_3.g0");
    assert!(v["rendered"].as_str().unwrap().contains("faulty components: M2"));
}

#[test]
fn pasted_csv_log_is_sniffed() {
    let v = parse(diagnose_json(
        &fixture("alice_core.json"),
        &fixture("alice_core_full.csv"),
        "g0",
    ));
    assert_eq!(v["faulty_components"], serde_json::json!(["perception@1"]));
    assert_eq!(v["terms_checked"], 9);
}

#[test]
fn satisfied_guarantee_reports_no_violation() {
    let v = parse(diagnose_json(
        &fixture("example3.json"),
        r#"{"i": 1, "j": 1, "a": 2, "b": 2, "o": 1}"#,
        "all",
    ));
    assert_eq!(v["faulty_components"], serde_json::json!([]));
    assert_eq!(v["reports"], serde_json::json!([]));
    assert!(v["rendered"].as_str().unwrap().contains("no violated system guarantee"));
}

#[test]
fn errors_come_back_as_json() {
    let v = parse(compose_json("not a spec"));
    assert!(v["error"].as_str().unwrap().contains("json"), "{v}");

    let v = parse(diagnose_json(&fixture("example3.json"), r#"{"i": 1}"#, "all"));
    assert!(v["error"].as_str().unwrap().contains("missing from the valuation"), "{v}");
}
