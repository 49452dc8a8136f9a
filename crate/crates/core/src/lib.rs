//! Age of Information for frame slotted ALOHA with reservation and data slots.
//!
//! Each frame has one reservation slot split into `V` mini-slots and `M - 1`
//! data slots. Active users reserve with probability `gamma`, pick a
//! mini-slot uniformly, and the first `M - 1` singleton mini-slots win the
//! data slots in order. The crate provides:
//!
//! - [`combinatorics`]: exact singleton-occupancy and reservation kernels;
//! - [`markov`]: the active-user chain of FSA-RD and its stationary law;
//! - [`analysis`]: analytical AAoI for FSA-RD and FSA-RD-One, the one-shot
//!   upper bound and the near-optimal reservation probability;
//! - [`simulator`]: slot-level Monte Carlo for both schemes and slotted ALOHA;
//! - [`optimizer`]: parameter searches over `(gamma, M)` and `tau`;
//! - [`cli`]: the experiment runner behind the `fsard` binary.
//!
//! Runnable walkthroughs live in `examples/`.

pub mod analysis;
pub mod cli;
pub mod combinatorics;
pub mod config;
pub mod error;
pub mod markov;
pub mod optimizer;
pub mod output;
pub mod reference;
pub mod simulator;

pub use analysis::{
    aaoi_from_moments, aaoi_fsa_rd, aaoi_fsa_rd_one, aaoi_upper_bound_one, collision_free_prob,
    collision_free_prob_by_enumeration, near_optimal_gamma, p_success_fsa_rd, p_success_fsa_rd_one,
    AnalysisReport, MomentDecomposition, SlotProfile,
};
pub use combinatorics::{
    capped_success_pmf, reservation_count_pmf, singleton_count_pmf, singleton_count_pmf_alternating,
    successful_update_pmf, CountPmf, Probability, SingletonTable,
};
pub use config::{AlohaConfig, ProtocolConfig, Scheme};
pub use error::{Error, Result};
pub use markov::{build_transition_matrix, steady_state, steady_state_power, StochasticMatrix, SteadyState};

pub use optimizer::{
    optimize_fsa_rd, optimize_fsa_rd_default, optimize_fsa_rd_one, optimize_fsa_rd_one_exhaustive,
    optimize_slotted_aloha, OptimizationResult,
};
pub use simulator::{
    empirical_moment_report, simulate, simulate_replications, simulate_slotted_aloha, simulate_with, SchemeSpec,
    SimOptions, SimResult,
};

/// Order-preserving parallel map that stops at the first error.
pub(crate) fn parallel_map<T, R, F>(items: Vec<T>, f: F) -> Result<Vec<R>>
where
    T: Send,
    R: Send,
    F: Fn(T) -> Result<R> + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}
