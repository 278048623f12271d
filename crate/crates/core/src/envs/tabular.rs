use crate::approx::FeatureMatrix;
use crate::bmdp::{ActionRow, Policy, TabularBmdp};

/// A tabular system with its features, discount and optimal policy.
#[derive(Clone, Debug)]
pub struct TabularEnv {
    pub bmdp: TabularBmdp,
    pub features: FeatureMatrix,
    pub alpha: f64,
    pub optimal: Policy,
}

impl TabularEnv {
    /// Whether `policy` coincides with the optimal policy in every state.
    pub fn is_optimal(&self, policy: &Policy) -> bool {
        let n = self.bmdp.n_states();
        (0..n).all(|i| {
            match (policy.action_probs(&self.bmdp, i), self.optimal.action_probs(&self.bmdp, i)) {
                (Ok(a), Ok(b)) => a == b,
                _ => false,
            }
        })
    }
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn row(action: usize, probs: &[f64]) -> ActionRow {
    ActionRow { action, probs: probs.to_vec() }
}

/// States A, B. From either state a1 reaches A w.p. 0.8 and a2 reaches B
/// w.p. 0.8; only B -> B pays 1. Features φ(A) = 2, φ(B) = 1; α = 0.5.
pub fn two_state() -> TabularEnv {
    let decision = || vec![row(0, &[0.8, 0.2]), row(1, &[0.2, 0.8])];
    let bmdp = TabularBmdp {
        name: "two-state".into(),
        state_names: names(&["A", "B"]),
        action_names: names(&["a1", "a2"]),
        rows: vec![decision(), decision()],
        rewards: vec![vec![0.0, 0.0], vec![0.0, 1.0]],
    };
    let optimal = Policy::always(&bmdp, 1);
    TabularEnv {
        bmdp,
        features: FeatureMatrix::new(vec![vec![2.0], vec![1.0]]).expect("static features"),
        alpha: 0.5,
        optimal,
    }
}

/// States A, B, C. a1 favours the non-C successor 0.8 / 0.2, a2 reaches C
/// w.p. 0.8. Only C -> C pays 1, which reproduces J = (12.16, 12.16, 12.96)
/// at α = 0.95 under always-a2.
pub fn three_state() -> TabularEnv {
    let bmdp = TabularBmdp {
        name: "three-state".into(),
        state_names: names(&["A", "B", "C"]),
        action_names: names(&["a1", "a2"]),
        rows: vec![
            vec![row(0, &[0.0, 0.8, 0.2]), row(1, &[0.0, 0.2, 0.8])],
            vec![row(0, &[0.8, 0.0, 0.2]), row(1, &[0.2, 0.0, 0.8])],
            vec![row(0, &[0.0, 0.8, 0.2]), row(1, &[0.0, 0.2, 0.8])],
        ],
        rewards: vec![vec![0.0; 3], vec![0.0; 3], vec![0.0, 0.0, 1.0]],
    };
    let optimal = Policy::always(&bmdp, 1);
    let f = |a: f64, b: f64| vec![a / 18.0, b / 18.0];
    TabularEnv {
        bmdp,
        features: FeatureMatrix::new(vec![f(12.0, 6.0), f(6.0, 12.0), f(1.0, 1.0)]).expect("static features"),
        alpha: 0.95,
        optimal,
    }
}

/// States A, B, C. A and C move to B; from B, a1 reaches C w.p. 0.9 and a2
/// reaches A w.p. 0.9. Only C -> B pays 1. Features φ = (1, 3, 2), so any
/// positive weight values C above A.
pub fn dt_counterexample(alpha: f64) -> TabularEnv {
    let bmdp = TabularBmdp {
        name: "dt-counterexample".into(),
        state_names: names(&["A", "B", "C"]),
        action_names: names(&["a1", "a2"]),
        rows: vec![
            vec![row(0, &[0.0, 1.0, 0.0])],
            vec![row(0, &[0.1, 0.0, 0.9]), row(1, &[0.9, 0.0, 0.1])],
            vec![row(0, &[0.0, 1.0, 0.0])],
        ],
        rewards: vec![vec![0.0; 3], vec![0.0; 3], vec![0.0, 1.0, 0.0]],
    };
    let optimal = Policy::always(&bmdp, 0);
    TabularEnv {
        bmdp,
        features: FeatureMatrix::new(vec![vec![1.0], vec![3.0], vec![2.0]]).expect("static features"),
        alpha,
        optimal,
    }
}
