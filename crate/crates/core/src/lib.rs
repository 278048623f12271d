//! Policy-evaluation laboratory for binary Markov decision processes.
//!
//! The crate implements three incremental learners over linear value
//! approximators:
//!
//! * TD(λ), which fits state values,
//! * STD(λ), which fits value *differences* between sibling states (the two
//!   possible successors of a decision), and
//! * DT(λ), differential training over two independent lock-step copies of the
//!   system.
//!
//! Around the learners sit exact chain analysis ([`bmdp`]), closed-form and
//! brute-force ground truth ([`oracle`]), the built-in systems
//! ([`envs`]) and an experiment harness ([`experiment`]) that writes CSV
//! traces and JSON manifests.
//!
//! All randomness flows through [`LabRng`], a ChaCha8 generator seeded from a
//! `u64`, so every run replays exactly from its seed.

pub mod approx;
pub mod bmdp;
pub mod envs;
pub mod error;
pub mod experiment;
pub mod learners;
pub mod linalg;
pub mod oracle;

pub use error::{LabError, Result};

/// The single generator used for every stochastic operation.
pub type LabRng = rand_chacha::ChaCha8Rng;

/// Build a [`LabRng`] from a seed.
pub fn seeded_rng(seed: u64) -> LabRng {
    use rand::SeedableRng;
    LabRng::seed_from_u64(seed)
}
