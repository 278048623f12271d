//! The acrobot under its hand-coded policy: rollout values of the policy and
//! its converse, then TD(1) and STD(1) weights on the one-feature
//! approximator.

use sibling_td::approx::{Greedy, GreedyMode};
use sibling_td::bmdp::SiblingEnv;
use sibling_td::envs::{AcrobotEnv, AcrobotFeature};
use sibling_td::experiment::ACROBOT_HANDCODED_WEIGHTS;
use sibling_td::learners::{run_learner, Behavior, LearnerConfig, RunSpec, StepSchedule, Variant};
use sibling_td::oracle::rollout_estimate;
use sibling_td::seeded_rng;

fn main() -> sibling_td::Result<()> {
    let env = AcrobotEnv::default();
    let mode = GreedyMode::SuccessorPreference;
    let mut rng = seeded_rng(11);
    for (name, sign) in [("hand-coded", 1.0), ("converse", -1.0)] {
        let weights: Vec<f64> = ACROBOT_HANDCODED_WEIGHTS.iter().map(|w| sign * w).collect();
        let rule = Greedy { weights: &weights, features: &AcrobotFeature, mode, alpha: env.alpha };
        let est = rollout_estimate(&env, &rule, &env.start_state(), 5, env.alpha, 1e-3, &mut rng)?;
        println!("{name:>10}: discounted reward {:.3} (horizon {})", est.mean, est.horizon);
    }

    let behavior = Behavior::GreedyFrozen { weights: ACROBOT_HANDCODED_WEIGHTS.to_vec(), mode };
    for (variant, a, b) in [(Variant::Td, 1.0, 100.0), (Variant::Std, 1e4, 1e3)] {
        let cfg = LearnerConfig { lambda: 1.0, alpha: env.alpha, schedule: StepSchedule::Harmonic { a, b }, variant };
        let spec = RunSpec::new(cfg, behavior.clone(), vec![0.0], 50_000, 1);
        let w = run_learner(&env, &AcrobotFeature, &spec)?.final_state.w;
        println!("{:>4} after 50k steps: w = {:.2}", variant.label(), w[0]);
    }
    Ok(())
}
