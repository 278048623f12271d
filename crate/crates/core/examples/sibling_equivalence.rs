//! STD(λ) on a system is TD(λ) on its chain of (state, sibling) pairs with
//! features φ(i) - φ(i'). Both learners consume the same trajectory here and
//! end with identical weights.

use sibling_td::bmdp::{derived_sibling_chain, stationary_distribution, trajectory};
use sibling_td::envs::two_state;
use sibling_td::learners::{LearnerConfig, LearnerState, PairFeatures, StepSchedule, Variant};
use sibling_td::seeded_rng;

fn main() -> sibling_td::Result<()> {
    let env = two_state();
    let policy = env.optimal.clone();
    let derived = derived_sibling_chain(&env.bmdp, &policy)?;
    let dist = stationary_distribution(&env.bmdp, &policy)?;
    println!("pair chain states: {:?}", derived.bmdp.state_names);
    println!("pair masses:       {:?}", dist.pair_pi);

    let cfg = |variant| LearnerConfig {
        lambda: 0.7,
        alpha: env.alpha,
        schedule: StepSchedule::Constant { rate: 0.01 },
        variant,
    };
    let (std_cfg, td_cfg) = (cfg(Variant::Std), cfg(Variant::Td));
    let pair_phi = PairFeatures(&env.features);
    let mut std_learner = LearnerState::new(vec![0.3]);
    let mut td_learner = LearnerState::new(vec![0.3]);
    let mut rng = seeded_rng(5);
    for step in trajectory(&env.bmdp, &policy, 0, 10_000, &mut rng) {
        let step = step?;
        std_learner.std_step(&step, &std_cfg, &env.features)?;
        let pair_step = sibling_td::bmdp::SiblingStep {
            state: (step.state, step.sibling),
            sibling: (step.state, step.sibling),
            next_state: (step.next_state, step.next_sibling),
            next_sibling: (step.next_state, step.next_sibling),
            t: step.t,
            action: step.action,
            reward: step.reward,
        };
        td_learner.td_step(&pair_step, &td_cfg, &pair_phi)?;
    }
    println!("STD on the system:      w = {:?}", std_learner.w);
    println!("TD on the pair chain:   w = {:?}", td_learner.w);
    assert_eq!(std_learner.w, td_learner.w);
    Ok(())
}
