//! Command-line front end. Exit codes: 0 success, 1 configuration error,
//! 2 divergence, 3 a preset or oracle check failed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sibling_td::experiment::{
    self, compare, list_envs, oracle_report, parse_weights, reproduce, ExperimentConfig, OracleRequest, RunOverrides,
    RunStatus,
};
use sibling_td::LabError;

#[derive(Parser)]
#[command(name = "sibling-td", version, about = "TD, STD and DT learners on binary decision processes")]
struct Cli {
    /// Output directory (default: the config's output_dir, else ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override every run's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override every run's log interval.
    #[arg(long, global = true)]
    log_every: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in environments.
    ListEnvs,
    /// Run one experiment config.
    Run { config: PathBuf },
    /// Regenerate a figure's data: fig2, fig4, fig10, sec4_4 or acrobot.
    Reproduce { figure: String },
    /// Print exact values, distributions and limiting weights as JSON.
    Oracle {
        #[arg(long, default_value = "two-state")]
        env: String,
        /// optimal, uniform, greedy:<w,..>, comma-separated action names,
        /// or on the acrobot handcoded / converse.
        #[arg(long, default_value = "optimal")]
        policy: String,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Weights at which to evaluate the error functionals, e.g. -1.024.
        #[arg(long, allow_hyphen_values = true)]
        w: Option<String>,
        /// Multiply every reward; 0 gives the zero-reward variant.
        #[arg(long, default_value_t = 1.0)]
        reward_scale: f64,
        /// Rollouts per estimate on the acrobot.
        #[arg(long, default_value_t = 10)]
        rollouts: usize,
    },
    /// Run several configs over a seed grid and tabulate the endpoints.
    Compare {
        #[arg(required = true, num_args = 2..)]
        configs: Vec<PathBuf>,
        /// Comma-separated seeds (default: each config's own seed).
        #[arg(long)]
        seeds: Option<String>,
    },
}

fn exit_for(e: &LabError) -> u8 {
    match e {
        LabError::Diverged { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}

fn run(cli: Cli) -> sibling_td::Result<u8> {
    let overrides = RunOverrides { seed: cli.seed, log_every: cli.log_every };
    let out = cli.out.clone();
    let default_out = || out.clone().unwrap_or_else(|| PathBuf::from("out"));
    match cli.command {
        Command::ListEnvs => {
            println!("{:<18} {:>15} {:>8} {:>9} {:>6}", "name", "states", "actions", "features", "alpha");
            for e in list_envs() {
                println!("{:<18} {:>15} {:>8} {:>9} {:>6}", e.name, e.states, e.actions, e.features, e.alpha);
            }
            Ok(0)
        }
        Command::Run { config } => {
            let mut c = ExperimentConfig::load(&config)?;
            overrides.apply(&mut c);
            let dir = out.clone().or_else(|| c.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
            let m = experiment::run_experiment(&c, &dir)?;
            println!("{}: {:?} after {} steps, w = {:?} ({})", dir.display(), m.status, m.steps_completed, m.final_weights, m.region);
            if let Some(o) = &m.oracle {
                if let Some(l) = &o.limit {
                    println!("oracle limit under {}: {:?}", o.policy, l);
                }
            }
            Ok(match m.status {
                RunStatus::Completed => 0,
                RunStatus::Diverged => 2,
                RunStatus::Failed => 1,
            })
        }
        Command::Reproduce { figure } => {
            let s = reproduce(&figure, &default_out(), overrides)?;
            for c in &s.checks {
                println!("[{}] {} ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            for r in &s.references {
                println!("reference: {r}");
            }
            if s.runs.iter().any(|r| r.manifest.status == RunStatus::Diverged) {
                return Ok(2);
            }
            Ok(if s.pass { 0 } else { 3 })
        }
        Command::Oracle { env, policy, alpha, lambda, w, reward_scale, rollouts } => {
            let w = w.as_deref().map(parse_weights).transpose()?;
            let req = OracleRequest {
                env,
                policy,
                alpha,
                lambda,
                w,
                reward_scale,
                rollouts,
                seed: cli.seed.unwrap_or(0),
            };
            let report = oracle_report(&req)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.bound.as_ref().is_some_and(|b| !b.pass) { 3 } else { 0 })
        }
        Command::Compare { configs, seeds } => {
            let seeds = match seeds {
                Some(s) => s
                    .split(',')
                    .map(|x| x.trim().parse::<u64>().map_err(|e| LabError::config("seeds", format!("{x:?}: {e}"))))
                    .collect::<sibling_td::Result<Vec<_>>>()?,
                None => cli.seed.map(|s| vec![s]).unwrap_or_default(),
            };
            let mut labelled = Vec::new();
            for path in &configs {
                let mut c = ExperimentConfig::load(path)?;
                overrides.apply(&mut c);
                let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                labelled.push((label, c));
            }
            let rows = compare(&labelled, &seeds, &default_out())?;
            println!("{:<24} {:<14} {:>5} {:<10} {:<28} {:<12} {:<28}", "label", "learner", "seed", "status", "final w", "region", "oracle w");
            for r in &rows {
                println!(
                    "{:<24} {:<14} {:>5} {:<10} {:<28} {:<12} {:<28}",
                    r.label,
                    r.learner,
                    r.seed,
                    format!("{:?}", r.status).to_lowercase(),
                    format!("{:.5?}", r.final_weights),
                    r.region,
                    r.oracle_limit.as_ref().map(|l| format!("{l:.5?}")).unwrap_or_default()
                );
            }
            Ok(if rows.iter().any(|r| r.status == RunStatus::Diverged) { 2 } else { 0 })
        }
    }
}
