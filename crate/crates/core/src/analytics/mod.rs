//! Closed-form laws for the signalling schemes.
//!
//! Under scalar signalling each agent picks `A` independently, so the next
//! allocation is binomial. [`p_sigma_n`] gives the per-agent probability,
//! [`next_step_distribution`] the law and [`expected_next_step_cost`] its mean
//! social cost. [`convolve_binomials`] handles populations whose classes react
//! to different past states. The interval scheme is covered by
//! [`trapezoid_tail`], [`choice_prob_lambda`] and [`population_choice_prob`],
//! which treat agents as independent, and by
//! [`broadcast_next_step_distribution`], which accounts for the single draw
//! all agents share.

mod binomial;
mod bounds;
mod fixed_point;
mod interval;
mod normal;

pub use binomial::{
    convolve_binomials, delayed_next_step_distribution, expected_next_step_cost, next_step_distribution,
    CountDistribution,
};
pub use bounds::{concentration_bound_mcdiarmid, concentration_bound_paper, mcdiarmid_bound_with_range};
pub use fixed_point::{find_fixed_point, fixed_point_iterates, fixed_point_map, FixedPointMap, FixedPointReport};
pub use interval::{broadcast_next_step_distribution, choice_prob_lambda, population_choice_prob, trapezoid_tail};
pub use normal::{normal_cdf, p_sigma_n};
