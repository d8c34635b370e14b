//! Running a job description and reading the report.

use gwm_delta::job::{run_job, JobSpec, Overrides};

fn main() -> gwm_delta::Result<()> {
    let job = JobSpec::from_json(
        r#"{
            "weights": { "u": "e", "v": "harmonic" },
            "defaults": { "horizon": 1000, "prefix": 5 },
            "tasks": [
                { "op": "forward_transform", "x": "enumerate" },
                { "op": "check_gamma", "a": "geometric(1/3)" },
                { "op": "classify_into_linf", "matrix": "cesaro", "weights": { "u": "e", "v": "e" },
                  "horizon": 10000, "tol": 1e-6 },
                { "op": "verify" }
            ]
        }"#,
    )?;
    let report = run_job(&job, &Overrides::default())?;
    for r in &report.results {
        println!("task {} {:<20} {:?}", r.index, r.op, r.outcome);
    }
    println!("exit code {}", report.exit_code());
    println!("{}", serde_json::to_string_pretty(&report.body()["summary"]).expect("json"));
    Ok(())
}
