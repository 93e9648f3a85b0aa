//! The expected-profile map `x -> sum_m Phi_sigma(gap(m)) Binom(N, m, x)` and its iteration.

use super::normal::std_normal_cdf;
use crate::cost::CostPair;
use crate::{Error, Result};

const TOLERANCE: f64 = 1e-12;
const MAX_ITERATIONS: usize = 100_000;
const GRID_POINTS: usize = 1000;
const STEP: f64 = 1e-6;

/// The map with its per-allocation choice probabilities precomputed.
#[derive(Debug, Clone)]
pub struct FixedPointMap {
    choice: Vec<f64>,
}

impl FixedPointMap {
    pub fn new(pair: &CostPair, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain(format!("fixed-point map needs sigma > 0, got {sigma}")));
        }
        let choice = (0..=pair.population_size())
            .map(|m| {
                let (a, b) = pair.action_costs_unchecked(m);
                std_normal_cdf((b - a) / sigma)
            })
            .collect();
        Ok(FixedPointMap { choice })
    }

    /// `f(x)`, a Bernstein polynomial in `x` with the choice probabilities as
    /// coefficients, evaluated by de Casteljau's algorithm.
    pub fn apply(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::domain(format!("probability {x} outside [0, 1]")));
        }
        let mut beta = self.choice.clone();
        for len in (1..beta.len()).rev() {
            for i in 0..len {
                beta[i] = beta[i] * (1.0 - x) + beta[i + 1] * x;
            }
        }
        Ok(beta[0].clamp(0.0, 1.0))
    }

    /// Largest forward-difference slope `|f(x + h) - f(x)| / h` over
    /// `x = i / 1000`, `i = 0..1000`, with `h = 1e-6`.
    pub fn contraction_estimate(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for i in 0..GRID_POINTS {
            let x = i as f64 / GRID_POINTS as f64;
            let slope = (self.apply(x + STEP)? - self.apply(x)?).abs() / STEP;
            worst = worst.max(slope);
        }
        Ok(worst)
    }
}

pub fn fixed_point_map(x: f64, pair: &CostPair, sigma: f64) -> Result<f64> {
    FixedPointMap::new(pair, sigma)?.apply(x)
}

/// Outcome of iterating the map. Non-convergence is reported, not raised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointReport {
    /// Final iterate (the limit when `converged`).
    pub limit: f64,
    pub iterations: usize,
    /// `|f(limit) - limit|`.
    pub residual: f64,
    pub contraction_estimate: f64,
    pub converged: bool,
}

/// Iterates `x <- f(x)` from `x0` until a step changes `x` by at most `1e-12`
/// or `100_000` iterations pass.
pub fn find_fixed_point(pair: &CostPair, sigma: f64, x0: f64) -> Result<FixedPointReport> {
    if !(0.0..=1.0).contains(&x0) {
        return Err(Error::domain(format!("start {x0} outside [0, 1]")));
    }
    let map = FixedPointMap::new(pair, sigma)?;
    let mut x = x0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        let next = map.apply(x)?;
        iterations += 1;
        let step = (next - x).abs();
        x = next;
        if step <= TOLERANCE {
            converged = true;
            break;
        }
    }
    let residual = (map.apply(x)? - x).abs();
    Ok(FixedPointReport {
        limit: x,
        iterations,
        residual,
        contraction_estimate: map.contraction_estimate()?,
        converged,
    })
}

/// `x0, f(x0), f(f(x0)), ...` with `steps + 1` entries.
pub fn fixed_point_iterates(pair: &CostPair, sigma: f64, x0: f64, steps: usize) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&x0) {
        return Err(Error::domain(format!("start {x0} outside [0, 1]")));
    }
    let map = FixedPointMap::new(pair, sigma)?;
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = x0;
    out.push(x);
    for _ in 0..steps {
        x = map.apply(x)?;
        out.push(x);
    }
    Ok(out)
}
