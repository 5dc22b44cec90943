//! The three-state robust mean-field game: best responses, forward and
//! backward dynamics, the initial-terminal value problem and agent sampling.

mod game;
mod integrate;
mod itvp;
mod sampler;
mod trajectory;

pub use game::{
    difference_operator, hamiltonian, hamiltonian_objective, hjb_rhs, in_regime, kolmogorov_rhs,
    optimal_control, rates_from_values, terminal_values, worst_disturbance, Regime,
};
pub use integrate::{integrate_backward, integrate_forward, STAGE_SLACK};
pub use itvp::{solve_itvp, ItvpConfig, ItvpSolution, Terminal};
pub use sampler::{
    agent_rng, empirical_distribution, sample_agent_path, sample_path, sample_population, AgentPath,
};
pub use trajectory::{ConstantRates, RateSchedule, Trajectory, ValueDrivenRates};
