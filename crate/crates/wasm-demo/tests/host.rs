use serde_json::Value;
use tentcocycle_wasm_demo::{equivariant_density_json, map_graph_json, markov_table_json};

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn map_graph_has_four_and_sixteen_branches() {
    let g = parse(&map_graph_json(0.5, 0.25, 1.0, 0.0).unwrap());
    assert_eq!(g["first"].as_array().unwrap().len(), 8);
    assert_eq!(g["composite"].as_array().unwrap().len(), 2 * g["branches"].as_u64().unwrap() as usize);
    assert!(g["first"].as_array().unwrap().iter().all(|p| p[1].as_f64().unwrap().abs() <= 1.0 + 1e-12));
    assert!(map_graph_json(1.5, 0.0, 0.0, 0.0).is_err());
}

#[test]
fn density_integrates_to_one() {
    let d = parse(&equivariant_density_json(r#"{"kind":"iid","table":[[1,0.5,0.5],[0.25,1,0.5]],"seed":2}"#, 0, 40).unwrap());
    let b: Vec<f64> = d["breakpoints"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let v: Vec<f64> = d["values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let integral: f64 = v.iter().zip(b.windows(2)).map(|(v, w)| v * (w[1] - w[0]) / 2.0).sum();
    assert!((integral - 1.0).abs() < 1e-9);
    assert!(d["bound"]["C"].as_f64().unwrap() < 0.0);
    assert!(equivariant_density_json("{", 0, 10).is_err());
}

#[test]
fn markov_table_rows() {
    let t = parse(&markov_table_json(5, 6).unwrap());
    assert_eq!(t.as_array().unwrap().len(), 2);
    assert!((t[0]["lambda2"].as_f64().unwrap() + 0.0656).abs() < 1e-3);
    assert!(markov_table_json(3, 2).is_err());
}
