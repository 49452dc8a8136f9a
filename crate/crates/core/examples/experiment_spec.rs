// Driving the `fsard` command line from a JSON experiment spec. The same
// spec file works with `fsard analyze --config spec.json`.

use std::fs;

use fsard::cli::main_with_args;

pub fn run() -> fsard::Result<()> {
    let dir = tempfile::tempdir()?;
    let spec = dir.path().join("sweep.json");
    fs::write(
        &spec,
        r#"{
  "command": "analyze",
  "scheme": "FSA_RD",
  "N": [20, 30],
  "M": 3,
  "V": 4,
  "rho": "0.02:0.1:0.04",
  "gamma": [0.2, 0.4]
}"#,
    )?;
    let out = dir.path().join("sweep.csv");
    let code = main_with_args(["fsard", "analyze", "--config", path(&spec), "--out", path(&out)]);
    assert_eq!(code, 0);
    print!("{}", fs::read_to_string(&out)?);

    // Flags override the spec; JSON output carries the resolved spec.
    let json = dir.path().join("sim.json");
    let code = main_with_args([
        "fsard", "simulate", "--config", path(&spec), "--N", "20", "--rho", "0.1", "--gamma", "0.4",
        "--horizon", "200000", "--reps", "2", "--seed", "5", "--format", "json", "--out", path(&json),
    ]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json)?).expect("valid JSON");
    let point = &doc["results"][0];
    println!(
        "mean AAoI {:.2} over {} runs, analysis {:.2}",
        point["mean_aaoi"].as_f64().unwrap_or(f64::NAN),
        point["runs"].as_array().map_or(0, |r| r.len()),
        point["analytic_aaoi"].as_f64().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().expect("temp paths are UTF-8")
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
