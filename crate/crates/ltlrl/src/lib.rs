//! Model-based reinforcement learning for temporal-logic control objectives.
//!
//! The engine learns control policies for an unknown labeled MDP so that the
//! probability of satisfying an omega-regular task (given as a deterministic
//! Rabin automaton or a limit-deterministic Büchi automaton) is maximized.
//! Exploration is biased along a distance function over the pruned automaton
//! graph, routed through the continuously estimated transition model.
//!
//! Modules mirror the moving parts of the system:
//!
//! - [`automaton`]: Rabin/Büchi automata, HOA ingestion, pruning, distances.
//! - [`mdp`]: ground-truth labeled MDPs and the grid-world generator.
//! - [`estimator`]: maximum-likelihood transition model from observed steps.
//! - [`product`]: on-the-fly product of MDP and automaton, reward shaping.
//! - [`policy`]: action selection — (ε,δ)-greedy with logic bias, ε-greedy,
//!   Boltzmann, UCB1 — plus schedules and the bias machinery.
//! - [`learner`]: the episodic Q-learning loop.
//! - [`oracle`]: exact model checking used as ground truth in tests and CLI.
//! - [`bench`]: multi-seed multi-policy benchmark harness.

pub mod automaton;
pub mod bench;
pub mod estimator;
pub mod learner;
pub mod mdp;
pub mod oracle;
pub mod policy;
pub mod product;

mod error;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
