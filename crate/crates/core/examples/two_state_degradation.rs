//! TD(1) on the two-state system: starting inside the optimal region it
//! converges to w = 0.88, whose greedy policy is the worse one.

use sibling_td::approx::{greedy_policy, GreedyMode};
use sibling_td::bmdp::exact_value;
use sibling_td::envs::two_state;
use sibling_td::learners::{run_learner, Behavior, LearnerConfig, RunSpec, StepSchedule, Variant};
use sibling_td::oracle::td_limit_ls;

fn main() -> sibling_td::Result<()> {
    let env = two_state();
    let cfg = LearnerConfig {
        lambda: 1.0,
        alpha: env.alpha,
        schedule: StepSchedule::Harmonic { a: 1.0, b: 100.0 },
        variant: Variant::Td,
    };
    let mut spec = RunSpec::new(cfg, Behavior::Fixed(env.optimal.clone()), vec![-10.0], 200_000, 1);
    spec.log_every = 20_000;
    let out = run_learner(&env.bmdp, &env.features, &spec)?;

    for p in &out.log {
        let policy = greedy_policy(&env.bmdp, &p.w, &env.features, GreedyMode::SuccessorPreference, env.alpha)?;
        let j = exact_value(&env.bmdp, &policy, env.alpha)?;
        println!("t = {:>7}  w = {:>9.4}  greedy J = ({:.2}, {:.2})", p.t, p.w[0], j[0], j[1]);
    }
    let limit = td_limit_ls(&env, &env.optimal, env.alpha)?;
    println!("least-squares limit: {:.4}", limit[0]);
    Ok(())
}
