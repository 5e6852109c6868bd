//! Reference simulations and fits used to grade the output of agent trials:
//! off-lattice random walks, pivot-sampled lattice self-avoiding walks with an
//! exact enumeration cross-check, power-law exponent fitting, and Newtonian
//! trajectories for small-body risk missions.

mod chain;
mod error;
mod gravity;
mod saw;
mod scaling;
mod sphere;
mod vec3;

pub use chain::{random_walk_chain, random_walk_mean_r2, Conformation, MeanEstimate};
pub use error::PhysicsError;
pub use gravity::{
    circular_speed, parse_body_table, probe_specific_angular_momentum, probe_specific_energy,
    simulate_trajectory, solar_system, system_energy, Approach, BodyState, Trajectory,
    TrajectorySample, G,
};
pub use saw::{
    enumerate_saw_exact, pivot_mean_r2, saw_chain_pivot, ExactSawMean, LatticeSymmetry, PivotChain,
    PivotSchedule, MAX_ENUMERATION_N,
};
pub use scaling::{
    fit_estimates, fit_scaling, grade_exponent, scaling_csv, scaling_svg, ChainModel, ScalingFit,
};
pub use sphere::sample_unit_sphere;
pub use vec3::Vec3;
