//! TD(1) with two features on the three-state system, against the weighted
//! least-squares weights and the exact values.

use sibling_td::approx::values;
use sibling_td::bmdp::{exact_value, stationary_distribution};
use sibling_td::envs::three_state;
use sibling_td::learners::{run_learner, Behavior, LearnerConfig, RunSpec, StepSchedule, Variant};
use sibling_td::oracle::td_limit_ls;

fn main() -> sibling_td::Result<()> {
    let env = three_state();
    let j = exact_value(&env.bmdp, &env.optimal, env.alpha)?;
    let pi = stationary_distribution(&env.bmdp, &env.optimal)?.pi;
    println!("J  = {j:.4?}");
    println!("pi = {pi:.4?}");

    let cfg = LearnerConfig {
        lambda: 1.0,
        alpha: env.alpha,
        schedule: StepSchedule::Harmonic { a: 300.0, b: 30_000.0 },
        variant: Variant::Td,
    };
    let spec = RunSpec::new(cfg, Behavior::Fixed(env.optimal.clone()), vec![-10.0, -10.0], 2_000_000, 1);
    let w = run_learner(&env.bmdp, &env.features, &spec)?.final_state.w;
    let limit = td_limit_ls(&env, &env.optimal, env.alpha)?;
    println!("TD endpoint  {w:.4?} -> J~ = {:.3?}", values(&w, &env.features)?);
    println!("LS limit     {limit:.4?} -> J~ = {:.3?}", values(&limit, &env.features)?);
    Ok(())
}
