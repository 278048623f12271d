//! STD(1) on the two-state system: from each initial weight, the greedy
//! policy after learning is at least as good as the one it started from.

use sibling_td::approx::{greedy_policy, GreedyMode};
use sibling_td::bmdp::exact_value;
use sibling_td::envs::two_state;
use sibling_td::learners::{run_learner, Behavior, LearnerConfig, RunSpec, StepSchedule, Variant};
use sibling_td::oracle::std_limit_ls;

fn main() -> sibling_td::Result<()> {
    let env = two_state();
    let mode = GreedyMode::SuccessorPreference;
    let cfg = LearnerConfig {
        lambda: 1.0,
        alpha: env.alpha,
        schedule: StepSchedule::Harmonic { a: 1.5, b: 100.0 },
        variant: Variant::Std,
    };
    let j_of = |w: &[f64]| -> sibling_td::Result<Vec<f64>> {
        exact_value(&env.bmdp, &greedy_policy(&env.bmdp, w, &env.features, mode, env.alpha)?, env.alpha)
    };
    for w0 in [-2.0, 0.5, 0.88, 2.0] {
        let behavior = Behavior::GreedyFrozen { weights: vec![w0], mode };
        let spec = RunSpec::new(cfg, behavior, vec![w0], 1_000_000, 7);
        let w = run_learner(&env.bmdp, &env.features, &spec)?.final_state.w;
        let policy = greedy_policy(&env.bmdp, &[w0], &env.features, mode, env.alpha)?;
        let limit = std_limit_ls(&env, &policy, env.alpha)?;
        println!(
            "w0 = {w0:>5}: w = {:>8.4} (limit {:>8.4})  J before {:.2?}  after {:.2?}",
            w[0],
            limit[0],
            j_of(&[w0])?,
            j_of(&w)?
        );
    }

    let spec = RunSpec::new(cfg, Behavior::GreedyOnline { mode }, vec![0.88], 2_000_000, 7);
    let w = run_learner(&env.bmdp, &env.features, &spec)?.final_state.w;
    println!("greedy online from 0.88: w = {:.4}", w[0]);
    Ok(())
}
