use mqchan_web::{capacity_curve, classes, fidelity_decay, typical_coverage};
use serde_json::Value;

fn spec(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../specs/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn classes_of_mixed_chain() {
    let v: Value = serde_json::from_str(&classes(&spec("mixed_classes.json")).unwrap()).unwrap();
    assert_eq!(v["classes"].as_array().unwrap().len(), 2);
}

#[test]
fn capacity_of_clean_dead_cycle() {
    let v: Value = serde_json::from_str(&capacity_curve(&spec("swap_cycle.json"), 2, 2, 1).unwrap()).unwrap();
    for p in v.as_array().unwrap() {
        assert!((p["min_value"].as_f64().unwrap() - 0.5).abs() < 1e-6, "{p}");
    }
    assert!(capacity_curve(&spec("swap_cycle.json"), 9, 2, 1).is_err());
}

#[test]
fn decay_curves_stay_under_bounds() {
    let v: Value = serde_json::from_str(&fidelity_decay(&spec("flip_mixture.json"), 4, 0.05, 0).unwrap()).unwrap();
    let pairs = v.as_array().unwrap();
    assert!(!pairs.is_empty());
    for pair in pairs {
        for p in pair["curve"]["points"].as_array().unwrap() {
            assert!(p["fidelity"].as_f64().unwrap() <= p["bound"].as_f64().unwrap() + 1e-9);
        }
    }
}

#[test]
fn uniform_coverage_is_one() {
    let v: Value = serde_json::from_str(&typical_coverage(&[0.5, 0.5], 0.05, 5).unwrap()).unwrap();
    assert!(v.as_array().unwrap().iter().all(|p| (p["coverage"].as_f64().unwrap() - 1.0).abs() < 1e-12));
    assert!(typical_coverage(&[0.5, 0.2], 0.1, 3).is_err());
}

#[test]
fn bad_spec_is_an_error() {
    assert!(classes("{}").is_err());
    assert!(classes(&spec("invalid_gamma.json")).is_err());
}
