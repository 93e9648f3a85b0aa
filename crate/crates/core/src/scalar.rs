//! Per-agent noisy cost reports and the delayed greedy response.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cost::CostPair;
use crate::{Action, Error, Result};

/// Perturbed cost reports `(y_A, y_B)` sent to a single agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarSignal {
    pub y_a: f64,
    pub y_b: f64,
}

/// Noise level of the scalar scheme: the standard deviation of `w_A - w_B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarScheme {
    sigma: f64,
}

impl ScalarScheme {
    pub fn new(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::config(
                "scheme.sigma",
                format!("sigma must be a finite non-negative number, got {sigma}"),
            ));
        }
        Ok(ScalarScheme { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// One agent's report about allocation `n_prev`. Each component gets an
    /// independent `N(0, sigma^2 / 2)` perturbation, so the difference has
    /// variance `sigma^2`. No randomness is consumed when `sigma == 0`.
    pub fn signal<R: Rng + ?Sized>(&self, pair: &CostPair, n_prev: usize, rng: &mut R) -> Result<ScalarSignal> {
        let (a, b) = pair.action_costs(n_prev)?;
        Ok(self.perturb(a, b, rng))
    }

    pub(crate) fn perturb<R: Rng + ?Sized>(&self, cost_a: f64, cost_b: f64, rng: &mut R) -> ScalarSignal {
        if self.sigma == 0.0 {
            return ScalarSignal {
                y_a: cost_a,
                y_b: cost_b,
            };
        }
        let scale = self.sigma * std::f64::consts::FRAC_1_SQRT_2;
        let w_a: f64 = StandardNormal.sample(rng);
        let w_b: f64 = StandardNormal.sample(rng);
        ScalarSignal {
            y_a: cost_a + scale * w_a,
            y_b: cost_b + scale * w_b,
        }
    }

    /// Reports for all `N` agents, drawn in agent order from a single stream.
    pub fn signals<R: Rng + ?Sized>(&self, pair: &CostPair, n_prev: usize, rng: &mut R) -> Result<Vec<ScalarSignal>> {
        let (a, b) = pair.action_costs(n_prev)?;
        Ok((0..pair.population_size()).map(|_| self.perturb(a, b, rng)).collect())
    }
}

/// Picks the action with the smaller report; ties go to `A`.
pub fn greedy_choice(signal: &ScalarSignal) -> Action {
    if signal.y_b < signal.y_a {
        Action::B
    } else {
        Action::A
    }
}

/// Action of a delay-`k` agent at step `t` (1-based). `history[j]` holds the
/// signal generated at step `j + 1`; the agent responds to the one from step
/// `t - k` and plays `A` while no such signal exists.
pub fn delayed_action(delay: usize, t: usize, history: &[ScalarSignal]) -> Result<Action> {
    if t == 0 {
        return Err(Error::domain("time steps start at 1"));
    }
    if t < delay + 1 {
        return Ok(Action::A);
    }
    let idx = t - delay - 1;
    history.get(idx).map(greedy_choice).ok_or_else(|| {
        Error::domain(format!(
            "no signal from step {} in a history of length {}",
            t - delay,
            history.len()
        ))
    })
}
