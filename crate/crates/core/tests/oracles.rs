//! Exact analytics checked against independent brute-force and quadrature oracles.

use desync_core::analytics::{
    broadcast_next_step_distribution, choice_prob_lambda, convolve_binomials, expected_next_step_cost,
    find_fixed_point, fixed_point_map, next_step_distribution, p_sigma_n, population_choice_prob, trapezoid_tail,
};
use desync_core::cost::CostPair;
use desync_core::interval::{risk_weighted_choice, IntervalScheme};
use desync_core::population::{AgentRoster, PopulationDistribution};
use desync_core::Action;

/// Distribution of the number of successes, by enumerating every outcome
/// vector of independent Bernoulli agents.
fn enumerate_outcomes(probs: &[f64]) -> Vec<f64> {
    let n = probs.len();
    let mut pmf = vec![0.0; n + 1];
    for mask in 0u32..(1 << n) {
        let mut w = 1.0;
        for (i, p) in probs.iter().enumerate() {
            w *= if mask >> i & 1 == 1 { *p } else { 1.0 - p };
        }
        pmf[mask.count_ones() as usize] += w;
    }
    pmf
}

/// Composite Simpson rule with `intervals` (even) subintervals.
fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> f64 {
    let h = (hi - lo) / intervals as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..intervals {
        let x = lo + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// `P(nu + eta > z)` by integrating the convolution density of the two uniforms.
fn tail_by_density(z: f64, delta: f64, gamma: f64) -> f64 {
    let (a, b) = (delta / 2.0, gamma / 2.0);
    if a == 0.0 && b == 0.0 {
        return if z < 0.0 { 1.0 } else { 0.0 };
    }
    if a == 0.0 || b == 0.0 {
        let w = a.max(b);
        return ((w - z) / (2.0 * w)).clamp(0.0, 1.0);
    }
    let density = |s: f64| {
        let overlap = (a.min(s + b) - (-a).max(s - b)).max(0.0);
        overlap / (4.0 * a * b)
    };
    let top = a + b;
    if z >= top {
        return 0.0;
    }
    simpson(density, z.max(-top), top, 100_000)
}

#[test]
fn convolution_matches_enumeration() {
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let shapes: &[&[usize]] = &[&[3, 5], &[1, 2, 3], &[4, 4, 4], &[6, 6], &[2, 1, 1, 2, 3], &[12]];
    for shape in shapes {
        let k = shape.len();
        let total: usize = shape.iter().sum();
        for code in 0..grid.len().pow(k as u32) {
            let mut c = code;
            let ps: Vec<f64> = (0..k)
                .map(|_| {
                    let p = grid[c % grid.len()];
                    c /= grid.len();
                    p
                })
                .collect();
            let components: Vec<(usize, f64)> = shape.iter().copied().zip(ps.iter().copied()).collect();
            let got = convolve_binomials(&components, total).unwrap();
            let agents: Vec<f64> = components
                .iter()
                .flat_map(|&(count, p)| std::iter::repeat_n(p, count))
                .collect();
            let want = enumerate_outcomes(&agents);
            for (m, (g, w)) in got.pmf().iter().zip(&want).enumerate() {
                assert!((g - w).abs() <= 1e-12, "{components:?} m = {m}: {g} vs {w}");
            }
        }
    }
}

#[test]
fn vandermonde_split() {
    let split = convolve_binomials(&[(3, 0.4), (5, 0.4)], 8).unwrap();
    let whole = next_step_distribution(8, 0.4).unwrap();
    for (a, b) in split.pmf().iter().zip(whole.pmf()) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn trapezoid_matches_density_integral() {
    for delta in [0.0, 0.5, 1.0] {
        for gamma in [0.0, 0.2, 0.5] {
            let reach = (delta + gamma) / 2.0 + 0.1;
            for i in 0..=40 {
                let z = -reach + 2.0 * reach * i as f64 / 40.0;
                if delta == 0.0 && gamma == 0.0 && z == 0.0 {
                    continue;
                }
                let got = trapezoid_tail(z, delta, gamma);
                let want = tail_by_density(z, delta, gamma);
                assert!((got - want).abs() < 1e-9, "({delta}, {gamma}) z = {z}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn trapezoid_symmetry_and_monotonicity() {
    for (delta, gamma) in [(1.0, 0.5), (0.3, 0.3), (2.0, 0.1), (0.4, 0.0)] {
        let mut prev = 1.0;
        for i in 0..=200 {
            let z = -1.5 + 3.0 * i as f64 / 200.0;
            let v = trapezoid_tail(z, delta, gamma);
            assert!(v <= prev + 1e-15);
            prev = v;
            assert!((v - (1.0 - trapezoid_tail(-z, delta, gamma))).abs() < 1e-14);
        }
    }
}

#[test]
fn uniform_population_integral_matches_simpson() {
    let pair = CostPair::reference(40).unwrap();
    let pop = PopulationDistribution::risk_uniform(40).unwrap();
    for (n, delta, gamma) in [
        (8, 1.0, 0.2),
        (8, 0.2, 1.0),
        (20, 2.0, 0.5),
        (0, 0.7, 0.1),
        (8, 0.4, 0.4),
    ] {
        let got = population_choice_prob(&pair, n, delta, gamma, &pop).unwrap();
        let want = simpson(
            |l| choice_prob_lambda(&pair, n, delta, gamma, l).unwrap(),
            0.0,
            1.0,
            100_000,
        );
        assert!((got - want).abs() < 1e-9, "n = {n} ({delta}, {gamma}): {got} vs {want}");
    }
}

#[test]
fn lattice_population_is_atom_average() {
    let pair = CostPair::reference(40).unwrap();
    let pop = PopulationDistribution::risk_lattice(40).unwrap();
    let got = population_choice_prob(&pair, 8, 1.2, 0.4, &pop).unwrap();
    let want: f64 = (1..=40)
        .map(|j| choice_prob_lambda(&pair, 8, 1.2, 0.4, j as f64 / 40.0).unwrap())
        .sum::<f64>()
        / 40.0;
    assert!((got - want).abs() < 1e-14);
}

#[test]
fn sigma_sweep_minimum_near_point_three() {
    let pair = CostPair::reference(40).unwrap();
    let n_star = pair.social_optimum().n_star;
    let mut best = (f64::INFINITY, 0.0);
    for i in 1..=30 {
        let sigma = 0.05 * i as f64;
        let p = p_sigma_n(&pair, n_star, sigma).unwrap();
        let cost = expected_next_step_cost(&next_step_distribution(40, p).unwrap(), &pair).unwrap();
        if cost < best.0 {
            best = (cost, sigma);
        }
    }
    assert!((best.1 - 0.3).abs() < 1e-9, "argmin at {}", best.1);
}

#[test]
fn fixed_point_limits_agree_with_bisection() {
    let pair = CostPair::reference(40).unwrap();
    for sigma in [0.6, 1.0] {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if fixed_point_map(mid, &pair, sigma).unwrap() > mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        for x0 in [0.0, 0.5, 1.0] {
            let r = find_fixed_point(&pair, sigma, x0).unwrap();
            assert!(r.converged);
            assert!((r.limit - lo).abs() < 1e-9, "sigma {sigma}: {} vs {lo}", r.limit);
        }
    }
}

/// Law of the allocation after one shared interval draw, by classifying every
/// agent on a `grid x grid` midpoint lattice of offsets.
fn broadcast_law_by_grid(
    pair: &CostPair,
    delta: f64,
    gamma: f64,
    levels: &[f64],
    n_prev: usize,
    grid: usize,
) -> Vec<f64> {
    let scheme = IntervalScheme::new(delta, gamma).unwrap();
    let (cost_a, cost_b) = pair.action_costs(n_prev).unwrap();
    let mut pmf = vec![0.0; levels.len() + 1];
    let weight = 1.0 / (grid * grid) as f64;
    for i in 0..grid {
        let nu = delta * ((i as f64 + 0.5) / grid as f64 - 0.5);
        for j in 0..grid {
            let eta = gamma * ((j as f64 + 0.5) / grid as f64 - 0.5);
            let signal = scheme.signal_from_offsets(cost_a, cost_b, nu, eta);
            let n = levels
                .iter()
                .filter(|&&l| risk_weighted_choice(&signal, l).unwrap() == Action::A)
                .count();
            pmf[n] += weight;
        }
    }
    pmf
}

#[test]
fn broadcast_law_matches_offset_grid() {
    let pair = CostPair::reference(40).unwrap();
    for pop in [
        PopulationDistribution::risk_lattice(40).unwrap(),
        PopulationDistribution::risk_uniform(40).unwrap(),
    ] {
        let AgentRoster::Risk(levels) = pop.materialize().unwrap() else {
            panic!("risk population expected");
        };
        for (delta, gamma) in [(1.0, 0.4), (0.6, 1.8), (2.0, 2.0), (0.5, 0.0)] {
            let law = broadcast_next_step_distribution(&pair, 8, delta, gamma, &pop).unwrap();
            let grid = broadcast_law_by_grid(&pair, delta, gamma, &levels, 8, 1000);
            // The grid misclassifies only cells cut by one of the N + 1 jump lines.
            for (m, (a, b)) in law.pmf().iter().zip(&grid).enumerate() {
                assert!((a - b).abs() < 5e-3, "({delta}, {gamma}) m = {m}: {a} vs {b}");
            }
            let ours = expected_next_step_cost(&law, &pair).unwrap();
            let theirs: f64 = grid
                .iter()
                .enumerate()
                .map(|(m, w)| w * pair.social_cost(m).unwrap())
                .sum();
            assert!((ours - theirs).abs() < 1e-3);
        }
    }
}
