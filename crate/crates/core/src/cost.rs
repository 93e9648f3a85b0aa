//! Two-action congestion costs and the social cost functional.

use crate::{Error, Result};

/// Shape of a per-action cost curve. Arguments are head counts on the action.
#[derive(Debug, Clone, PartialEq)]
pub enum CostKind {
    /// `intercept + slope * n / N`
    Affine { intercept: f64, slope: f64 },
    /// `base + scale / (pole - n / N)`, with `pole > 1` so the curve is finite on `0..=N`.
    Reciprocal { base: f64, pole: f64, scale: f64 },
    /// Explicit table of `N + 1` values.
    Tabular(Vec<f64>),
}

/// A congestion cost `c(n)` for `n` agents on one action, defined on `0..=N`.
///
/// Construction checks that every value on the domain is finite and
/// non-negative, so [`CostFunction::eval`] only fails on out-of-range `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostFunction {
    kind: CostKind,
    population_size: usize,
}

impl CostFunction {
    pub fn new(kind: CostKind, population_size: usize) -> Result<Self> {
        if population_size == 0 {
            return Err(Error::config("N", "population size must be positive"));
        }
        match &kind {
            CostKind::Affine { intercept, slope } => {
                if !intercept.is_finite() || !slope.is_finite() {
                    return Err(Error::config("affine", "coefficients must be finite"));
                }
            }
            CostKind::Reciprocal { base, pole, scale } => {
                if !base.is_finite() || !pole.is_finite() || !scale.is_finite() {
                    return Err(Error::config("reciprocal", "coefficients must be finite"));
                }
                if *pole <= 1.0 {
                    return Err(Error::config(
                        "reciprocal.pole",
                        format!("pole must exceed 1, got {pole}"),
                    ));
                }
            }
            CostKind::Tabular(values) => {
                if values.len() != population_size + 1 {
                    return Err(Error::config(
                        "tabular.values",
                        format!(
                            "expected {} entries for N = {population_size}, got {}",
                            population_size + 1,
                            values.len()
                        ),
                    ));
                }
            }
        }
        let cf = CostFunction { kind, population_size };
        for n in 0..=population_size {
            let v = cf.eval_unchecked(n);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(
                    "cost",
                    format!("cost at n = {n} is {v}; costs must be finite and non-negative"),
                ));
            }
        }
        Ok(cf)
    }

    pub fn affine(intercept: f64, slope: f64, population_size: usize) -> Result<Self> {
        Self::new(CostKind::Affine { intercept, slope }, population_size)
    }

    pub fn reciprocal(base: f64, pole: f64, scale: f64, population_size: usize) -> Result<Self> {
        Self::new(CostKind::Reciprocal { base, pole, scale }, population_size)
    }

    pub fn tabular(values: Vec<f64>, population_size: usize) -> Result<Self> {
        Self::new(CostKind::Tabular(values), population_size)
    }

    pub fn kind(&self) -> &CostKind {
        &self.kind
    }

    pub fn population_size(&self) -> usize {
        self.population_size
    }

    /// Cost when `n` agents use this action.
    pub fn eval(&self, n: usize) -> Result<f64> {
        if n > self.population_size {
            return Err(Error::domain(format!(
                "allocation {n} outside 0..={}",
                self.population_size
            )));
        }
        Ok(self.eval_unchecked(n))
    }

    /// `eval` for callers that already hold `n <= N`.
    pub(crate) fn eval_unchecked(&self, n: usize) -> f64 {
        let frac = n as f64 / self.population_size as f64;
        match &self.kind {
            CostKind::Affine { intercept, slope } => intercept + slope * frac,
            CostKind::Reciprocal { base, pole, scale } => base + scale / (pole - frac),
            CostKind::Tabular(values) => values[n],
        }
    }

    /// Largest value on `0..=N`.
    pub fn max_value(&self) -> f64 {
        (0..=self.population_size)
            .map(|n| self.eval_unchecked(n))
            .fold(0.0, f64::max)
    }

    /// Lipschitz constant with respect to the population fraction `n / N`,
    /// taken over consecutive grid points: `max_n N * |c(n + 1) - c(n)|`.
    pub fn fraction_lipschitz(&self) -> f64 {
        let scale = self.population_size as f64;
        (0..self.population_size)
            .map(|n| scale * (self.eval_unchecked(n + 1) - self.eval_unchecked(n)).abs())
            .fold(0.0, f64::max)
    }
}

/// The pair `(c_A, c_B)` over a shared population size.
#[derive(Debug, Clone, PartialEq)]
pub struct CostPair {
    cost_a: CostFunction,
    cost_b: CostFunction,
}

impl CostPair {
    pub fn new(cost_a: CostFunction, cost_b: CostFunction) -> Result<Self> {
        if cost_a.population_size != cost_b.population_size {
            return Err(Error::config(
                "costs.N",
                format!(
                    "c_A is defined for N = {} but c_B for N = {}",
                    cost_a.population_size, cost_b.population_size
                ),
            ));
        }
        Ok(CostPair { cost_a, cost_b })
    }

    /// The two-resource example used throughout the experiments:
    /// `c_A(n) = 1.2 + n/N`, `c_B(n) = 1 + 1 / (22 (1.08 - n/N))`.
    pub fn reference(population_size: usize) -> Result<Self> {
        CostPair::new(
            CostFunction::affine(1.2, 1.0, population_size)?,
            CostFunction::reciprocal(1.0, 1.08, 1.0 / 22.0, population_size)?,
        )
    }

    pub fn population_size(&self) -> usize {
        self.cost_a.population_size
    }

    pub fn cost_a(&self) -> &CostFunction {
        &self.cost_a
    }

    pub fn cost_b(&self) -> &CostFunction {
        &self.cost_b
    }

    fn check(&self, n: usize) -> Result<()> {
        if n > self.population_size() {
            return Err(Error::domain(format!(
                "allocation {n} outside 0..={}",
                self.population_size()
            )));
        }
        Ok(())
    }

    /// Costs `(c_A(n), c_B(N - n))` seen when `n` agents are on `A`.
    pub fn action_costs(&self, n: usize) -> Result<(f64, f64)> {
        self.check(n)?;
        Ok(self.action_costs_unchecked(n))
    }

    pub(crate) fn action_costs_unchecked(&self, n: usize) -> (f64, f64) {
        let big_n = self.population_size();
        (self.cost_a.eval_unchecked(n), self.cost_b.eval_unchecked(big_n - n))
    }

    /// Cost advantage of `A`: `c_B(N - n) - c_A(n)`. Positive means `A` is cheaper.
    pub fn gap(&self, n: usize) -> Result<f64> {
        let (a, b) = self.action_costs(n)?;
        Ok(b - a)
    }

    /// Population-weighted cost `(n/N) c_A(n) + ((N - n)/N) c_B(N - n)`.
    pub fn social_cost(&self, n: usize) -> Result<f64> {
        self.check(n)?;
        Ok(self.social_cost_unchecked(n))
    }

    pub(crate) fn social_cost_unchecked(&self, n: usize) -> f64 {
        let big_n = self.population_size();
        let (a, b) = self.action_costs_unchecked(n);
        let on_a = n as f64 / big_n as f64;
        let on_b = (big_n - n) as f64 / big_n as f64;
        on_a * a + on_b * b
    }

    /// `C(0), ..., C(N)`.
    pub fn social_cost_table(&self) -> Vec<f64> {
        (0..=self.population_size())
            .map(|n| self.social_cost_unchecked(n))
            .collect()
    }

    /// Exhaustive minimizer of the social cost. Ties go to the smallest `n`.
    pub fn social_optimum(&self) -> SocialOptimum {
        let mut best = SocialOptimum {
            n_star: 0,
            value: self.social_cost_unchecked(0),
        };
        for n in 1..=self.population_size() {
            let v = self.social_cost_unchecked(n);
            if v < best.value {
                best = SocialOptimum { n_star: n, value: v };
            }
        }
        best
    }

    /// Larger of the two per-action Lipschitz constants in the population fraction.
    pub fn fraction_lipschitz(&self) -> f64 {
        self.cost_a.fraction_lipschitz().max(self.cost_b.fraction_lipschitz())
    }

    /// Largest per-action cost on the domain.
    pub fn max_cost(&self) -> f64 {
        self.cost_a.max_value().max(self.cost_b.max_value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocialOptimum {
    pub n_star: usize,
    pub value: f64,
}

/// Mean of a sequence of per-step social costs.
pub fn time_averaged_social_cost(costs: &[f64]) -> Result<f64> {
    if costs.is_empty() {
        return Err(Error::domain("time average over an empty cost sequence"));
    }
    Ok(costs.iter().sum::<f64>() / costs.len() as f64)
}
