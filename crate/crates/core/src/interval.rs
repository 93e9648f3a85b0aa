//! Broadcast interval signals and the risk-weighted decision rule.

use rand::Rng;

use crate::cost::CostPair;
use crate::{Action, Error, Result};

/// Cost intervals `[lo_a, hi_a]` and `[lo_b, hi_b]` broadcast to every agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalSignal {
    pub lo_a: f64,
    pub hi_a: f64,
    pub lo_b: f64,
    pub hi_b: f64,
}

impl IntervalSignal {
    /// `lambda * lo + (1 - lambda) * hi` for both actions.
    pub fn scores(&self, lambda: f64) -> (f64, f64) {
        (
            lambda * self.lo_a + (1.0 - lambda) * self.hi_a,
            lambda * self.lo_b + (1.0 - lambda) * self.hi_b,
        )
    }
}

/// Interval widths: `delta` for action `A`, `gamma` for action `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalScheme {
    delta: f64,
    gamma: f64,
}

impl IntervalScheme {
    pub fn new(delta: f64, gamma: f64) -> Result<Self> {
        for (name, v) in [("scheme.delta", delta), ("scheme.gamma", gamma)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(
                    name,
                    format!("width must be a finite non-negative number, got {v}"),
                ));
            }
        }
        Ok(IntervalScheme { delta, gamma })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Draws the offsets `(nu, eta)` uniformly from `[-delta/2, delta/2]` and
    /// `[-gamma/2, gamma/2]`. A zero width yields exactly zero.
    pub fn draw_offsets<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let centred = |width: f64, rng: &mut R| {
            if width == 0.0 {
                0.0
            } else {
                width * (rng.random::<f64>() - 0.5)
            }
        };
        let nu = centred(self.delta, rng);
        let eta = centred(self.gamma, rng);
        (nu, eta)
    }

    /// Signal built from previous-step costs and fixed offsets.
    pub fn signal_from_offsets(&self, cost_a: f64, cost_b: f64, nu: f64, eta: f64) -> IntervalSignal {
        let (ha, hb) = (self.delta / 2.0, self.gamma / 2.0);
        IntervalSignal {
            lo_a: cost_a + nu - ha,
            hi_a: cost_a + nu + ha,
            lo_b: cost_b + eta - hb,
            hi_b: cost_b + eta + hb,
        }
    }

    /// The broadcast signal for previous allocation `n_prev`: one draw shared by all agents.
    pub fn signal<R: Rng + ?Sized>(&self, pair: &CostPair, n_prev: usize, rng: &mut R) -> Result<IntervalSignal> {
        let (a, b) = pair.action_costs(n_prev)?;
        let (nu, eta) = self.draw_offsets(rng);
        Ok(self.signal_from_offsets(a, b, nu, eta))
    }
}

/// Action minimizing `lambda * lo + (1 - lambda) * hi`; ties go to `A`.
pub fn risk_weighted_choice(signal: &IntervalSignal, lambda: f64) -> Result<Action> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::domain(format!("risk level {lambda} outside [0, 1]")));
    }
    Ok(choose(signal, lambda))
}

pub(crate) fn choose(signal: &IntervalSignal, lambda: f64) -> Action {
    let (score_a, score_b) = signal.scores(lambda);
    if score_b < score_a {
        Action::B
    } else {
        Action::A
    }
}
