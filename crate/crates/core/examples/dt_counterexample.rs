//! STD(1) and DT(1) on the counterexample: STD keeps the sign that ranks C
//! above A, DT flips it for every discount factor.

use sibling_td::envs::dt_counterexample;
use sibling_td::learners::{run_learner, Behavior, LearnerConfig, RunSpec, StepSchedule, Variant};
use sibling_td::oracle::{counterexample_dt_limit, counterexample_std_limit};

fn main() -> sibling_td::Result<()> {
    for alpha in [0.3, 0.5, 0.9] {
        let env = dt_counterexample(alpha);
        let run = |variant| -> sibling_td::Result<f64> {
            let cfg = LearnerConfig { lambda: 1.0, alpha, schedule: StepSchedule::Harmonic { a: 2.0, b: 100.0 }, variant };
            let mut spec = RunSpec::new(cfg, Behavior::Fixed(env.optimal.clone()), vec![0.0], 2_000_000, 3);
            spec.dt_phase_offsets = 2;
            Ok(run_learner(&env.bmdp, &env.features, &spec)?.final_state.w[0])
        };
        println!(
            "alpha = {alpha}: STD {:>7.4} (limit {:>7.4})   DT {:>7.4} (limit {:>7.4})",
            run(Variant::Std)?,
            counterexample_std_limit(alpha),
            run(Variant::Dt)?,
            counterexample_dt_limit(alpha)
        );
    }
    Ok(())
}
