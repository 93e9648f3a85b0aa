use super::normal::choice_prob_from_gap;
use crate::cost::CostPair;
use crate::population::PopulationDistribution;
use crate::{Error, Result};

/// Probability mass over allocations `0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution {
    pmf: Vec<f64>,
}

impl CountDistribution {
    /// Wraps a mass vector, checking non-negativity and unit total (tolerance `1e-12`).
    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::domain("empty probability mass vector"));
        }
        if let Some(m) = pmf.iter().position(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::domain(format!("mass at {m} is {}", pmf[m])));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("mass sums to {total}")));
        }
        Ok(CountDistribution { pmf })
    }

    pub fn point_mass(at: usize, population_size: usize) -> Result<Self> {
        if at > population_size {
            return Err(Error::domain(format!("point {at} outside 0..={population_size}")));
        }
        let mut pmf = vec![0.0; population_size + 1];
        pmf[at] = 1.0;
        Ok(CountDistribution { pmf })
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// `N`, the largest allocation in the support.
    pub fn population_size(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(m, p)| m as f64 * p).sum()
    }

    pub fn cdf(&self) -> Vec<f64> {
        self.pmf
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    }
}

// Loader's saddle-point evaluation of the binomial mass: the log of each term
// is assembled from Stirling-series remainders and the deviance `bd0`, which
// avoids the cancellation between large log-gamma values.

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `ln(n!) - ((n + 1/2) ln n - n + ln sqrt(2 pi))` at half-integers `0, 0.5, ..., 15`.
#[allow(clippy::excessive_precision)]
const STIRLING_ERROR: [f64; 31] = [
    0.0,
    0.153_426_409_720_027_345_291_384_8,
    0.081_061_466_795_327_258_219_670_2,
    0.054_814_121_051_917_653_896_139_0,
    0.041_340_695_955_409_294_093_822_1,
    0.033_162_873_519_936_287_485_110_48,
    0.027_677_925_684_998_339_148_789_29,
    0.023_746_163_656_297_495_971_329_20,
    0.020_790_672_103_765_093_111_522_77,
    0.018_488_450_532_673_185_230_779_34,
    0.016_644_691_189_821_192_163_194_87,
    0.015_134_973_221_917_378_873_512_55,
    0.013_876_128_823_070_747_998_745_73,
    0.012_810_465_242_920_226_924_249_86,
    0.011_896_709_945_891_770_095_055_72,
    0.011_104_559_758_206_917_326_629_91,
    0.010_411_265_261_972_096_497_478_567,
    0.009_799_416_126_158_803_298_389_475,
    0.009_255_462_182_712_732_917_728_637,
    0.008_768_700_134_139_385_462_952_823,
    0.008_330_563_433_362_871_256_469_318,
    0.007_934_114_564_314_020_547_248_100,
    0.007_573_675_487_951_840_794_972_024,
    0.007_244_554_301_320_383_179_543_912,
    0.006_942_840_107_209_529_865_664_152,
    0.006_665_247_032_707_682_442_354_394,
    0.006_408_994_188_004_207_068_439_631,
    0.006_171_712_263_039_457_647_532_867,
    0.005_951_370_112_758_847_735_624_416,
    0.005_746_216_513_010_115_682_023_589,
    0.005_554_733_551_962_801_371_038_690,
];

fn stirling_error(n: usize) -> f64 {
    if n <= 15 {
        return STIRLING_ERROR[2 * n];
    }
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let x = n as f64;
    let xx = x * x;
    if n > 500 {
        (S0 - S1 / xx) / x
    } else if n > 80 {
        (S0 - (S1 - S2 / xx) / xx) / x
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / xx) / xx) / xx) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / xx) / xx) / xx) / xx) / x
    }
}

/// Deviance term `x ln(x / mean) + mean - x`, with a series near `x == mean`.
fn bd0(x: f64, mean: f64) -> f64 {
    if (x - mean).abs() < 0.1 * (x + mean) {
        let mut v = (x - mean) / (x + mean);
        let mut s = (x - mean) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        s
    } else {
        x * (x / mean).ln() + mean - x
    }
}

fn binomial_term(m: usize, n: usize, p: f64, q: f64) -> f64 {
    if m == 0 {
        return if p < q {
            (n as f64 * (-p).ln_1p()).exp()
        } else {
            q.powi(n as i32)
        };
    }
    if m == n {
        return if q < p {
            (n as f64 * (-q).ln_1p()).exp()
        } else {
            p.powi(n as i32)
        };
    }
    let (x, nf) = (m as f64, n as f64);
    let lc = stirling_error(n) - stirling_error(m) - stirling_error(n - m) - bd0(x, nf * p) - bd0(nf - x, nf * q);
    let lf = LN_2PI + x.ln() + (-x / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; n + 1];
    if p <= 0.0 {
        pmf[0] = 1.0;
        return pmf;
    }
    if p >= 1.0 {
        pmf[n] = 1.0;
        return pmf;
    }
    let q = 1.0 - p;
    for (m, slot) in pmf.iter_mut().enumerate() {
        *slot = binomial_term(m, n, p, q);
    }
    pmf
}

/// Law of the number of `A`-choosers among `N` independent agents that each
/// pick `A` with probability `p`: `Binom(N, p)`, each term evaluated in log space.
pub fn next_step_distribution(population_size: usize, p: f64) -> Result<CountDistribution> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(CountDistribution {
        pmf: binomial_pmf(population_size, p),
    })
}

/// `sum_m C(m) * P(m)` over the support `0..=N`.
pub fn expected_next_step_cost(dist: &CountDistribution, pair: &CostPair) -> Result<f64> {
    if dist.population_size() != pair.population_size() {
        return Err(Error::domain(format!(
            "distribution over 0..={} but costs defined for N = {}",
            dist.population_size(),
            pair.population_size()
        )));
    }
    Ok(dist
        .pmf
        .iter()
        .enumerate()
        .map(|(m, p)| pair.social_cost_unchecked(m) * p)
        .sum())
}

/// Exact law of `sum_j X_j` with independent `X_j ~ Binom(count_j, p_j)`,
/// built by sequential convolution. Counts must add up to `total`.
pub fn convolve_binomials(components: &[(usize, f64)], total: usize) -> Result<CountDistribution> {
    let sum: usize = components.iter().map(|&(c, _)| c).sum();
    if sum != total {
        return Err(Error::domain(format!(
            "component counts sum to {sum}, expected {total}"
        )));
    }
    let mut acc = vec![1.0];
    for &(count, p) in components {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("probability {p} outside [0, 1]")));
        }
        let part = binomial_pmf(count, p);
        let mut next = vec![0.0; acc.len() + count];
        for (i, a) in acc.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in part.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    Ok(CountDistribution { pmf: acc })
}

/// Next-step law for a delay-class population under scalar signalling with
/// noise `sigma`. `history[j]` is the allocation at step `j + 1`; the law is
/// for step `history.len() + 1`. Classes whose delay reaches back before the
/// first step play `A` with certainty.
pub fn delayed_next_step_distribution(
    pair: &CostPair,
    sigma: f64,
    population: &PopulationDistribution,
    history: &[usize],
) -> Result<CountDistribution> {
    if !population.is_delay() {
        return Err(Error::domain("delayed law needs a delay-class population"));
    }
    if population.size() != pair.population_size() {
        return Err(Error::domain("population and costs disagree on N"));
    }
    let t = history.len() + 1;
    let mut components = Vec::new();
    for (k, count) in population.delay_counts() {
        let p = if t > k {
            choice_prob_from_gap(pair.gap(history[t - k - 1])?, sigma)?
        } else {
            1.0
        };
        components.push((count, p));
    }
    convolve_binomials(&components, pair.population_size())
}
