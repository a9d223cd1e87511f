use nullcone_demo::{bigbang_levels_json, null_zigzag_json, slim_table_json};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn minkowski_zigzag_matches_closed_form() {
    let v = parse(&null_zigzag_json("minkowski", 1.0, [0.0, 0.0], [0.5, 2.0], 2, 1).unwrap());
    assert!((v["upper"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(v["lower"].as_f64().unwrap(), 0.5);
    let bp = v["breakpoints"].as_array().unwrap();
    assert_eq!(bp.first().unwrap(), &serde_json::json!([0.0, 0.0]));
    assert_eq!(bp.last().unwrap(), &serde_json::json!([0.5, 2.0]));
    assert_eq!(v["samples"].as_array().unwrap().len(), bp.len() - 1);
}

#[test]
fn torus_zigzag_and_errors() {
    let v = parse(&null_zigzag_json("t", 1.0, [1.0, 0.1], [1.0, 0.4], 2, 0).unwrap());
    let up = v["upper"].as_f64().unwrap();
    assert!(up > 0.0 && up <= 0.3 + 1e-3, "{up}");
    assert!(null_zigzag_json("sin(t)", 1.0, [1.0, 0.0], [1.0, 0.5], 2, 0).is_err());
    assert!(null_zigzag_json("t", 1.0, [-1.0, 0.0], [1.0, 0.5], 2, 0).is_err());
}

#[test]
fn slim_table_has_limits() {
    let v = parse(&slim_table_json(&[0.5, 0.19, 0.01], &[1e-2, 1e-3, 1e-4]).unwrap());
    assert_eq!(v["rows"].as_array().unwrap().len(), 9);
    for l in v["limits"].as_array().unwrap() {
        let (x, e) = (l["extrapolated"].as_f64().unwrap(), l["expected"].as_f64().unwrap());
        assert!((x - e).abs() < 1e-3);
    }
    assert!((v["diagonal"].as_f64().unwrap() - 1.0).abs() < 2e-3);
    assert!(slim_table_json(&[1.5], &[1e-2]).is_err());
}

#[test]
fn bigbang_levels_shrink_only_when_slices_collapse() {
    let v = parse(&bigbang_levels_json("t", &[0.2, 0.1, 0.05], 6, 3).unwrap());
    assert_eq!(v["hypothesis"], "met");
    let levels = v["levels"].as_array().unwrap();
    let diam: Vec<f64> = levels.iter().map(|l| l["diam_ht"].as_f64().unwrap()).collect();
    assert!(diam.windows(2).all(|w| w[1] < w[0]));
    let c = parse(&bigbang_levels_json("const 1", &[0.2, 0.1, 0.05], 6, 3).unwrap());
    assert!(c["hypothesis"].as_str().unwrap().starts_with("not met"));
    assert_eq!(c["pass"], false);
}
