//! Drive the experiment harness from a TOML config: writes trace.csv and
//! manifest.json into a directory under the system temp dir.

use sibling_td::experiment::{run_experiment, ExperimentConfig};

const CONFIG: &str = r#"
env = "two-state"
learner = "std"
initial_weights = [0.88]
steps = 100000
seed = 3
log_every = 10000
diagnostics = true

[schedule]
kind = "harmonic"
a = 1.5
b = 100.0

[behavior]
kind = "greedy-online"
"#;

fn main() -> sibling_td::Result<()> {
    let config = ExperimentConfig::from_toml(CONFIG)?;
    let dir = std::env::temp_dir().join("sibling-td-example");
    let manifest = run_experiment(&config, &dir)?;
    println!("wrote {}", dir.display());
    println!("status {:?}, w = {:?}, region {}", manifest.status, manifest.final_weights, manifest.region);
    if let Some(o) = &manifest.oracle {
        println!("oracle limit {:?}, delta {:?}", o.limit, o.delta);
    }
    print!("{}", std::fs::read_to_string(dir.join("trace.csv"))?);
    Ok(())
}
