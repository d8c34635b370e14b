use gwm_delta::job::{run_job, JobSpec, Overrides, SCHEMA};
use serde_json::json;

fn run(tasks: serde_json::Value) -> serde_json::Value {
    let job: JobSpec = serde_json::from_value(json!({ "weights": { "u": "e", "v": "e" }, "tasks": tasks })).unwrap();
    run_job(&job, &Overrides::default()).unwrap().body()
}

#[test]
fn forward_transform_of_enumerate_is_identity_at_trivial_weights() {
    let body = run(json!([{ "op": "forward_transform", "x": "enumerate", "prefix": 5 }]));
    assert_eq!(body["results"][0]["result"]["y"], json!(["1/1", "2/1", "3/1", "4/1", "5/1"]));
    assert_eq!(body["schema"], SCHEMA);
}

#[test]
fn cesaro_is_regular() {
    let body = run(json!([{ "op": "classify_into_c", "matrix": "cesaro", "horizon": 10000, "tol": 1e-6 }]));
    let r = &body["results"][0];
    assert_eq!(r["outcome"], "holds");
    let alpha: f64 = r["result"]["alpha_approx"].as_str().unwrap().parse().unwrap();
    assert!((alpha - 1.0).abs() < 1e-6);
}

#[test]
fn harmonic_is_not_in_the_beta_dual_of_c_zero() {
    let body = run(json!([{ "op": "check_beta", "a": "harmonic", "space": "c_zero", "horizon": 1000 }]));
    let r = &body["results"][0];
    assert_eq!(r["outcome"], "fails");
    assert!(!r["result"]["overall"]["witness"].as_array().unwrap().is_empty());
    assert_eq!(body["summary"]["exit_code"], 2);
}

#[test]
fn exact_values_render_as_reduced_fractions() {
    let body = run(json!([
        { "op": "inverse_transform", "y": "geometric(2/4)", "prefix": 3, "weights": { "u": "harmonic", "v": "e" } }
    ]));
    assert_eq!(body["results"][0]["result"]["x"], json!(["1/1", "1/1", "3/4"]));
}
