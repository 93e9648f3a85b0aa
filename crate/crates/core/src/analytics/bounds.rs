//! Tail bounds for the normalized next-step social cost `C(n_t) / C(n*)`.

/// Bound in the form stated with the concentration result:
/// `2 exp(-2 eps^2 c_star / (2 (L + 1)))`.
pub fn concentration_bound_paper(eps: f64, lipschitz: f64, c_star: f64) -> f64 {
    2.0 * (-2.0 * eps * eps * c_star / (2.0 * (lipschitz + 1.0))).exp()
}

/// McDiarmid's inequality with bounded differences `2 (1 + L) / (N c_star)`,
/// i.e. costs taking values in `[0, 1]`:
/// `2 exp(-eps^2 N c_star^2 / (2 (1 + L)^2))`.
pub fn concentration_bound_mcdiarmid(eps: f64, lipschitz: f64, population_size: usize, c_star: f64) -> f64 {
    mcdiarmid_bound_with_range(eps, lipschitz, population_size, c_star, 1.0)
}

/// McDiarmid's inequality for costs in `[0, cost_max]`. Moving one agent
/// changes each weighted term by at most `(cost_max + L) / N`, so the bounded
/// difference is `2 (cost_max + L) / (N c_star)`.
pub fn mcdiarmid_bound_with_range(eps: f64, lipschitz: f64, population_size: usize, c_star: f64, cost_max: f64) -> f64 {
    let n = population_size as f64;
    let diff = 2.0 * (cost_max + lipschitz) / (n * c_star);
    2.0 * (-2.0 * eps * eps / (n * diff * diff)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_form() {
        assert_eq!(concentration_bound_paper(0.0, 1.0, 1.2), 2.0);
        assert_eq!(concentration_bound_paper(f64::INFINITY, 1.0, 1.2), 0.0);
        let v = concentration_bound_paper(0.1, 1.0, 1.2);
        assert!((v - 2.0 * (-0.006f64).exp()).abs() < 1e-15);
        assert!((v - 1.988).abs() < 1e-3);
    }

    #[test]
    fn mcdiarmid_form() {
        let v = concentration_bound_mcdiarmid(0.1, 1.0, 40, 1.2);
        assert!((v - 2.0 * (-0.072f64).exp()).abs() < 1e-14);
        assert!((v - 1.861).abs() < 1e-3);
        assert_eq!(concentration_bound_mcdiarmid(f64::INFINITY, 1.0, 40, 1.2), 0.0);
        let small = concentration_bound_mcdiarmid(0.1, 1.0, 80, 1.2);
        assert!(small < v);
    }

    #[test]
    fn unit_range_matches_plain_form() {
        for eps in [0.01, 0.1, 0.5] {
            assert_eq!(
                mcdiarmid_bound_with_range(eps, 2.0, 40, 1.1, 1.0),
                concentration_bound_mcdiarmid(eps, 2.0, 40, 1.1)
            );
        }
        assert!(mcdiarmid_bound_with_range(0.1, 2.0, 40, 1.1, 3.0) > concentration_bound_mcdiarmid(0.1, 2.0, 40, 1.1));
    }
}
