//! Closed forms against seeded Monte Carlo estimates.

use desync_core::analytics::{
    broadcast_next_step_distribution, delayed_next_step_distribution, expected_next_step_cost, fixed_point_map,
    next_step_distribution, p_sigma_n, trapezoid_tail, CountDistribution,
};
use desync_core::cost::CostPair;
use desync_core::interval::IntervalScheme;
use desync_core::population::PopulationDistribution;
use desync_core::scalar::{greedy_choice, ScalarScheme};
use desync_core::sim::{
    lag1_autocorrelation, next_allocation, run_once, run_traces, InitialAllocation, LambdaSampling, Scheme,
    SimulationConfig, Summary,
};
use desync_core::Action;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson chi-square test of observed counts against `expected`, pooling
/// sparse cells until every bin expects at least 5. Returns whether the fit is
/// accepted at the 1% level.
fn chi_square_accepts(observed: &[usize], expected: &CountDistribution, draws: usize) -> bool {
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut e_acc, mut o_acc) = (0.0, 0.0);
    for (o, p) in observed.iter().zip(expected.pmf()) {
        e_acc += p * draws as f64;
        o_acc += *o as f64;
        if e_acc >= 5.0 {
            bins.push((o_acc, e_acc));
            e_acc = 0.0;
            o_acc = 0.0;
        }
    }
    if let Some(last) = bins.last_mut() {
        last.0 += o_acc;
        last.1 += e_acc;
    }
    if bins.len() < 2 {
        return true;
    }
    let stat: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let critical = ChiSquared::new((bins.len() - 1) as f64).unwrap().inverse_cdf(0.99);
    stat <= critical
}

fn scalar_cfg(sigma: f64, population: PopulationDistribution, horizon: usize, start: usize) -> SimulationConfig {
    SimulationConfig {
        pair: CostPair::reference(40).unwrap(),
        population,
        scheme: Scheme::Scalar(ScalarScheme::new(sigma).unwrap()),
        horizon,
        initial_allocation: InitialAllocation::Fixed(start),
        seed: 2024,
        replications: 1,
        lambda_sampling: LambdaSampling::Stratified,
    }
}

#[test]
fn greedy_frequency_matches_choice_probability() {
    let pair = CostPair::reference(40).unwrap();
    let draws = 100_000;
    for (n, sigma) in [(8, 0.3), (0, 0.5), (20, 1.0), (12, 0.1)] {
        let scheme = ScalarScheme::new(sigma).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64 + 1);
        let hits = (0..draws)
            .filter(|_| greedy_choice(&scheme.signal(&pair, n, &mut rng).unwrap()) == Action::A)
            .count();
        let p = p_sigma_n(&pair, n, sigma).unwrap();
        let freq = hits as f64 / draws as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt().max(1e-12);
        assert!((freq - p).abs() <= 3.0 * se, "n = {n}, sigma = {sigma}: {freq} vs {p}");
    }
}

#[test]
fn one_step_histogram_matches_binomial() {
    let pair = CostPair::reference(40).unwrap();
    let scheme = ScalarScheme::new(0.3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let draws = 100_000;
    let mut counts = vec![0usize; 41];
    for _ in 0..draws {
        let signals = scheme.signals(&pair, 8, &mut rng).unwrap();
        let m = signals.iter().filter(|s| greedy_choice(s) == Action::A).count();
        counts[m] += 1;
    }
    let p = p_sigma_n(&pair, 8, 0.3).unwrap();
    assert!((p - 0.214).abs() < 1e-3);
    let law = next_step_distribution(40, p).unwrap();
    assert!(chi_square_accepts(&counts, &law, draws));
}

#[test]
fn fixed_point_map_matches_sampling() {
    let pair = CostPair::reference(40).unwrap();
    let sigma = 0.6;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let samples = 100_000;
    let phi: Vec<f64> = (0..=40).map(|m| p_sigma_n(&pair, m, sigma).unwrap()).collect();
    for i in (0..=100).step_by(10) {
        let x = i as f64 / 100.0;
        let mut hits = 0usize;
        for _ in 0..samples {
            let m = (0..40).filter(|_| rng.random::<f64>() < x).count();
            if rng.random::<f64>() < phi[m] {
                hits += 1;
            }
        }
        let freq = hits as f64 / samples as f64;
        let f = fixed_point_map(x, &pair, sigma).unwrap();
        let se = (f * (1.0 - f) / samples as f64).sqrt().max(1e-9);
        assert!((freq - f).abs() <= 3.0 * se, "x = {x}: {freq} vs {f}");
    }
}

#[test]
fn trapezoid_matches_sampling() {
    let scheme = IntervalScheme::new(1.0, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 1_000_000;
    let sums: Vec<f64> = (0..draws)
        .map(|_| {
            let (nu, eta) = scheme.draw_offsets(&mut rng);
            nu + eta
        })
        .collect();
    for i in 0..=16 {
        let z = -0.8 + 0.1 * i as f64;
        let p = trapezoid_tail(z, 1.0, 0.5);
        let freq = sums.iter().filter(|&&s| s > z).count() as f64 / draws as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt().max(1e-9);
        assert!((freq - p).abs() <= 3.0 * se, "z = {z}: {freq} vs {p}");
    }
}

#[test]
fn simulated_next_step_cost_matches_expectation() {
    let mut cfg = scalar_cfg(0.3, PopulationDistribution::homogeneous_delay(1, 40).unwrap(), 2, 8);
    cfg.replications = 4000;
    let costs: Vec<f64> = run_traces(&cfg)
        .unwrap()
        .iter()
        .map(|t| t.steps[1].social_cost)
        .collect();
    let s = Summary::of(&costs);
    let p = p_sigma_n(&cfg.pair, 8, 0.3).unwrap();
    let want = expected_next_step_cost(&next_step_distribution(40, p).unwrap(), &cfg.pair).unwrap();
    assert!((s.mean - want).abs() <= 3.0 * s.standard_error(costs.len()));
}

#[test]
fn heterogeneous_step_matches_convolution() {
    // Hold n_1 = n_2 = n_3 = 8 by forcing the history; the delay classes then
    // all condition on the same state.
    let pop = PopulationDistribution::delays(vec![(1, 0.25), (2, 0.25), (3, 0.5)], 40).unwrap();
    let cfg = scalar_cfg(0.4, pop.clone(), 4, 8);
    let history = [8, 8, 8];
    let draws = 20_000;
    let mut counts = vec![0usize; 41];
    for r in 1..=draws {
        counts[next_allocation(&cfg, r as u64, &history).unwrap()] += 1;
    }
    let law = delayed_next_step_distribution(&cfg.pair, 0.4, &pop, &history).unwrap();
    let plain = next_step_distribution(40, p_sigma_n(&cfg.pair, 8, 0.4).unwrap()).unwrap();
    for (a, b) in law.pmf().iter().zip(plain.pmf()) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(chi_square_accepts(&counts, &law, draws));

    // Mixed states: each class conditions on a different past allocation.
    let history = [8, 20, 0];
    let mut counts = vec![0usize; 41];
    for r in 1..=draws {
        counts[next_allocation(&cfg, r as u64, &history).unwrap()] += 1;
    }
    let law = delayed_next_step_distribution(&cfg.pair, 0.4, &pop, &history).unwrap();
    assert!(chi_square_accepts(&counts, &law, draws));
}

#[test]
fn noise_damps_flapping() {
    let mean_ac = |sigma: f64| -> f64 {
        let mut total = 0.0;
        for seed in 0..100u64 {
            let mut cfg = scalar_cfg(sigma, PopulationDistribution::homogeneous_delay(1, 40).unwrap(), 30, 8);
            cfg.seed = seed;
            let fr = run_once(&cfg, 1).unwrap().fractions();
            total += lag1_autocorrelation(&fr[4..]);
        }
        total / 100.0
    };
    let low = mean_ac(0.1);
    let high = mean_ac(0.6);
    assert!(low < 0.0, "{low}");
    assert!(high > low, "{high} vs {low}");
}

#[test]
fn broadcast_next_step_cost_matches_exact_law() {
    let pair = CostPair::reference(40).unwrap();
    let n_star = pair.social_optimum().n_star;
    let pop = PopulationDistribution::risk_lattice(40).unwrap();
    for (delta, gamma) in [(0.2, 0.2), (1.0, 0.4), (0.6, 1.8), (2.0, 2.0)] {
        let cfg = SimulationConfig {
            pair: pair.clone(),
            population: pop.clone(),
            scheme: Scheme::Interval(IntervalScheme::new(delta, gamma).unwrap()),
            horizon: 2,
            initial_allocation: InitialAllocation::Fixed(n_star),
            seed: 11,
            replications: 4000,
            lambda_sampling: LambdaSampling::Stratified,
        };
        let costs: Vec<f64> = run_traces(&cfg)
            .unwrap()
            .iter()
            .map(|t| t.steps[1].social_cost)
            .collect();
        let s = Summary::of(&costs);
        let law = broadcast_next_step_distribution(&pair, n_star, delta, gamma, &pop).unwrap();
        let want = expected_next_step_cost(&law, &pair).unwrap();
        let tol = 3.0 * s.standard_error(costs.len());
        assert!((s.mean - want).abs() <= tol, "({delta}, {gamma}): {} vs {want}", s.mean);
    }
}
