use crate::cost::CostPair;
use crate::{Error, Result};

/// `P(Z <= x)` for `Z ~ N(0, sigma^2)`.
pub fn normal_cdf(x: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!("normal cdf needs sigma > 0, got {sigma}")));
    }
    Ok(std_normal_cdf(x / sigma))
}

pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Probability that a greedy agent picks `A` after a scalar report of allocation `n`:
/// `Phi_sigma(c_B(N - n) - c_A(n))`. For `sigma == 0` this is the step
/// function `1 / 0.5 / 0` for a positive, zero or negative gap.
pub fn p_sigma_n(pair: &CostPair, n: usize, sigma: f64) -> Result<f64> {
    let gap = pair.gap(n)?;
    choice_prob_from_gap(gap, sigma)
}

pub(crate) fn choice_prob_from_gap(gap: f64, sigma: f64) -> Result<f64> {
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::domain(format!(
            "sigma must be finite and non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(if gap > 0.0 {
            1.0
        } else if gap < 0.0 {
            0.0
        } else {
            0.5
        });
    }
    Ok(std_normal_cdf(gap / sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostFunction;

    #[test]
    fn symmetric_point() {
        assert_eq!(normal_cdf(0.0, 1.0).unwrap(), 0.5);
        assert!(normal_cdf(1.0, 0.0).is_err());
        assert!(normal_cdf(1.0, -1.0).is_err());
    }

    #[test]
    fn one_sigma() {
        // Phi(1) = 0.841344746068542948...
        for sigma in [0.1, 1.0, 3.7] {
            let v = normal_cdf(sigma, sigma).unwrap();
            assert!((v - 0.841_344_746_068_542_9).abs() < 1e-14, "{v}");
        }
        // Phi(-2) = 0.022750131948179207
        assert!((normal_cdf(-2.0, 1.0).unwrap() - 0.022_750_131_948_179_2).abs() < 1e-15);
    }

    #[test]
    fn reference_pair_at_optimum() {
        let pair = CostPair::reference(40).unwrap();
        let gap = pair.gap(8).unwrap();
        assert!((gap - (-0.237_662_337_662_337_5)).abs() < 1e-12);
        let p = p_sigma_n(&pair, 8, 0.3).unwrap();
        // Phi(-0.79220779...) = 0.21411976290527...
        assert!((p - 0.214_119_762_905_27).abs() < 1e-11, "{p}");
        assert!((normal_cdf(-0.23766, 0.3).unwrap() - 0.214).abs() < 1e-3);
    }

    #[test]
    fn zero_sigma_step() {
        let flat = CostFunction::tabular(vec![1.0; 3], 2).unwrap();
        let pair = CostPair::new(flat.clone(), flat).unwrap();
        assert_eq!(p_sigma_n(&pair, 1, 0.5).unwrap(), 0.5);
        assert_eq!(p_sigma_n(&pair, 1, 0.0).unwrap(), 0.5);
        assert_eq!(choice_prob_from_gap(0.3, 0.0).unwrap(), 1.0);
        assert_eq!(choice_prob_from_gap(-0.3, 0.0).unwrap(), 0.0);
        assert!(choice_prob_from_gap(0.3, 1e-6).unwrap() > 1.0 - 1e-15);
    }
}
