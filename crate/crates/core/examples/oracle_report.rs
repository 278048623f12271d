//! Everything the oracle knows about a policy, as JSON. Pass an environment
//! name, a policy and optionally weights, e.g.
//!
//!     cargo run --example oracle_report -- two-state optimal -1.024

use sibling_td::experiment::{oracle_report, parse_weights, OracleRequest};

fn main() -> sibling_td::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let req = OracleRequest {
        env: args.first().cloned().unwrap_or_else(|| "two-state".into()),
        policy: args.get(1).cloned().unwrap_or_else(|| "optimal".into()),
        w: args.get(2).map(|s| parse_weights(s)).transpose()?,
        rollouts: 5,
        ..Default::default()
    };
    println!("{}", serde_json::to_string_pretty(&oracle_report(&req)?)?);
    Ok(())
}
