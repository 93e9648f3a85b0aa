use super::binomial::CountDistribution;
use crate::cost::CostPair;
use crate::population::{AgentRoster, PopulationDistribution, PopulationKind};
use crate::{Error, Result};

/// `P(nu + eta > z)` for independent `nu ~ U[-delta/2, delta/2]` and
/// `eta ~ U[-gamma/2, gamma/2]`. The sum has a trapezoidal density; zero
/// widths collapse the corresponding uniform to a point mass at 0.
pub fn trapezoid_tail(z: f64, delta: f64, gamma: f64) -> f64 {
    let (a, b) = {
        let (x, y) = (delta / 2.0, gamma / 2.0);
        if x >= y {
            (x, y)
        } else {
            (y, x)
        }
    };
    if a == 0.0 {
        return if z < 0.0 { 1.0 } else { 0.0 };
    }
    let upper = |z: f64| -> f64 {
        if z >= a + b {
            0.0
        } else if b > 0.0 && z > a - b {
            let r = a + b - z;
            r * r / (8.0 * a * b)
        } else {
            (a - z) / (2.0 * a)
        }
    };
    if z >= 0.0 {
        upper(z)
    } else {
        1.0 - upper(-z)
    }
}

fn threshold(pair: &CostPair, n: usize, delta: f64, gamma: f64, lambda: f64) -> Result<f64> {
    let (a, b) = pair.action_costs(n)?;
    Ok(a - b + (delta - gamma) * (0.5 - lambda))
}

fn check_widths(delta: f64, gamma: f64) -> Result<()> {
    if !(delta >= 0.0 && gamma >= 0.0 && delta.is_finite() && gamma.is_finite()) {
        return Err(Error::domain(format!(
            "widths must be finite and non-negative, got ({delta}, {gamma})"
        )));
    }
    Ok(())
}

/// Probability that a risk-level-`lambda` agent picks `A` after the interval
/// signal for allocation `n`: the tail of `nu + eta` beyond
/// `c_A(n) - c_B(N - n) + (delta - gamma)(1/2 - lambda)`.
pub fn choice_prob_lambda(pair: &CostPair, n: usize, delta: f64, gamma: f64, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::domain(format!("risk level {lambda} outside [0, 1]")));
    }
    check_widths(delta, gamma)?;
    Ok(trapezoid_tail(threshold(pair, n, delta, gamma, lambda)?, delta, gamma))
}

/// Average of [`choice_prob_lambda`] over a risk population.
///
/// Discrete populations are summed atom by atom. For the continuous uniform
/// population the integrand is piecewise quadratic in `lambda`, so each piece
/// between trapezoid knots is integrated exactly by 3-point Gauss-Legendre.
pub fn population_choice_prob(
    pair: &CostPair,
    n: usize,
    delta: f64,
    gamma: f64,
    population: &PopulationDistribution,
) -> Result<f64> {
    check_widths(delta, gamma)?;
    pair.action_costs(n)?;
    match population.kind() {
        PopulationKind::DelayClasses(_) => Err(Error::domain(
            "interval choice probabilities need a risk population, not delay classes",
        )),
        PopulationKind::RiskDiscrete(_) => {
            let mut total = 0.0;
            for (lambda, w) in population.risk_atoms().unwrap_or_default() {
                total += w * choice_prob_lambda(pair, n, delta, gamma, lambda)?;
            }
            Ok(total)
        }
        PopulationKind::RiskUniform => uniform_integral(pair, n, delta, gamma),
    }
}

/// Exact law of the next allocation when one interval draw is shared by the
/// whole (materialized) risk population.
///
/// A level-`lambda` agent picks `A` exactly when `eta - nu` reaches its
/// threshold `z_lambda`, so the count is `#{j : z_j <= eta - nu}` and
/// `P(n >= k)` is the tail of `eta - nu` at the `k`-th smallest threshold.
/// Unlike [`population_choice_prob`] followed by a binomial, this keeps the
/// correlation the shared draw induces between agents.
pub fn broadcast_next_step_distribution(
    pair: &CostPair,
    n: usize,
    delta: f64,
    gamma: f64,
    population: &PopulationDistribution,
) -> Result<CountDistribution> {
    check_widths(delta, gamma)?;
    let AgentRoster::Risk(levels) = population.materialize()? else {
        return Err(Error::domain(
            "broadcast law needs a risk population, not delay classes",
        ));
    };
    if levels.len() != pair.population_size() {
        return Err(Error::domain("population and costs disagree on N"));
    }
    let mut thresholds = levels
        .iter()
        .map(|&l| threshold(pair, n, delta, gamma, l))
        .collect::<Result<Vec<f64>>>()?;
    thresholds.sort_by(f64::total_cmp);
    // at_least[k] = P(n >= k)
    let mut at_least = vec![1.0];
    at_least.extend(thresholds.iter().map(|&z| trapezoid_tail(z, delta, gamma)));
    at_least.push(0.0);
    let pmf = at_least.windows(2).map(|w| (w[0] - w[1]).max(0.0)).collect();
    CountDistribution::new(pmf)
}

fn uniform_integral(pair: &CostPair, n: usize, delta: f64, gamma: f64) -> Result<f64> {
    let (ca, cb) = pair.action_costs(n)?;
    let gap = ca - cb;
    let slope = delta - gamma;
    let f = |lambda: f64| trapezoid_tail(gap + slope * (0.5 - lambda), delta, gamma);

    let mut cuts = vec![0.0, 1.0];
    if slope != 0.0 {
        let (a, b) = (delta / 2.0, gamma / 2.0);
        for knot in [-(a + b), -(a - b).abs(), 0.0, (a - b).abs(), a + b] {
            let lambda = 0.5 - (knot - gap) / slope;
            if lambda > 0.0 && lambda < 1.0 {
                cuts.push(lambda);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let offset = (3.0f64 / 5.0).sqrt();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        total += half * (5.0 / 9.0 * f(mid - half * offset) + 8.0 / 9.0 * f(mid) + 5.0 / 9.0 * f(mid + half * offset));
    }
    Ok(total)
}
