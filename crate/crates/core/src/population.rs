//! Agent-type distributions over delay classes or risk levels.

use rand::Rng;

use crate::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;
const INTEGRALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum PopulationKind {
    /// `(delay k, share mu_k)` atoms for greedy agents acting on `k`-step-old signals.
    DelayClasses(Vec<(usize, f64)>),
    /// `(lambda, share)` atoms for risk-weighted interval agents.
    RiskDiscrete(Vec<(f64, f64)>),
    /// Continuous uniform risk levels on `[0, 1]`.
    RiskUniform,
}

/// A measure over agent types together with the population size `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationDistribution {
    kind: PopulationKind,
    size: usize,
}

/// Per-agent types, indexed by agent id (zero-based here).
#[derive(Debug, Clone, PartialEq)]
pub enum AgentRoster {
    Delays(Vec<usize>),
    Risk(Vec<f64>),
}

impl AgentRoster {
    pub fn len(&self) -> usize {
        match self {
            AgentRoster::Delays(v) => v.len(),
            AgentRoster::Risk(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl PopulationDistribution {
    /// Builds and validates a distribution.
    pub fn new(kind: PopulationKind, size: usize) -> Result<Self> {
        let dist = PopulationDistribution { kind, size };
        dist.validate()?;
        Ok(dist)
    }

    pub fn delays(atoms: Vec<(usize, f64)>, size: usize) -> Result<Self> {
        Self::new(PopulationKind::DelayClasses(atoms), size)
    }

    /// All agents share delay `k`.
    pub fn homogeneous_delay(k: usize, size: usize) -> Result<Self> {
        Self::delays(vec![(k, 1.0)], size)
    }

    /// Uniform shares over delays `1..=max_delay`.
    pub fn uniform_delays(max_delay: usize, size: usize) -> Result<Self> {
        let w = 1.0 / max_delay as f64;
        Self::delays((1..=max_delay).map(|k| (k, w)).collect(), size)
    }

    pub fn risk_discrete(atoms: Vec<(f64, f64)>, size: usize) -> Result<Self> {
        Self::new(PopulationKind::RiskDiscrete(atoms), size)
    }

    /// One agent at each level `1/N, 2/N, ..., 1`.
    pub fn risk_lattice(size: usize) -> Result<Self> {
        let w = 1.0 / size as f64;
        Self::risk_discrete((1..=size).map(|j| (j as f64 / size as f64, w)).collect(), size)
    }

    pub fn risk_uniform(size: usize) -> Result<Self> {
        Self::new(PopulationKind::RiskUniform, size)
    }

    pub fn kind(&self) -> &PopulationKind {
        &self.kind
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_delay(&self) -> bool {
        matches!(self.kind, PopulationKind::DelayClasses(_))
    }

    pub fn is_risk(&self) -> bool {
        !self.is_delay()
    }

    /// Largest delay class, or `None` for risk populations.
    pub fn max_delay(&self) -> Option<usize> {
        match &self.kind {
            PopulationKind::DelayClasses(atoms) => atoms.iter().map(|&(k, _)| k).max(),
            _ => None,
        }
    }

    /// Checks normalization, integrality of `mu * N`, ranges and distinctness.
    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::config("population.N", "population size must be positive"));
        }
        match &self.kind {
            PopulationKind::RiskUniform => Ok(()),
            PopulationKind::DelayClasses(atoms) => {
                let mut seen: Vec<usize> = Vec::with_capacity(atoms.len());
                for (i, &(k, _)) in atoms.iter().enumerate() {
                    if k == 0 {
                        return Err(Error::config(
                            format!("population.atoms[{i}]"),
                            "delay must be a positive integer",
                        ));
                    }
                    if seen.contains(&k) {
                        return Err(Error::config(
                            format!("population.atoms[{i}]"),
                            format!("duplicate delay class {k}"),
                        ));
                    }
                    seen.push(k);
                }
                self.check_weights(atoms.iter().map(|&(k, w)| (k.to_string(), w)))
            }
            PopulationKind::RiskDiscrete(atoms) => {
                let mut seen: Vec<f64> = Vec::with_capacity(atoms.len());
                for (i, &(lambda, _)) in atoms.iter().enumerate() {
                    if !(0.0..=1.0).contains(&lambda) {
                        return Err(Error::config(
                            format!("population.atoms[{i}]"),
                            format!("risk level {lambda} outside [0, 1]"),
                        ));
                    }
                    if seen.contains(&lambda) {
                        return Err(Error::config(
                            format!("population.atoms[{i}]"),
                            format!("duplicate risk level {lambda}"),
                        ));
                    }
                    seen.push(lambda);
                }
                self.check_weights(atoms.iter().map(|&(l, w)| (l.to_string(), w)))
            }
        }
    }

    fn check_weights(&self, atoms: impl Iterator<Item = (String, f64)>) -> Result<()> {
        let mut total = 0.0;
        let mut any = false;
        for (label, w) in atoms {
            any = true;
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::config(
                    format!("population.atoms[{label}]"),
                    format!("weight {w} outside [0, 1]"),
                ));
            }
            let agents = w * self.size as f64;
            if (agents - agents.round()).abs() > INTEGRALITY_TOL {
                return Err(Error::config(
                    format!("population.atoms[{label}]"),
                    format!("weight {w} gives {agents} agents for N = {}", self.size),
                ));
            }
            total += w;
        }
        if !any {
            return Err(Error::config("population.atoms", "no atoms given"));
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::config(
                "population.atoms",
                format!("weights sum to {total}, expected 1"),
            ));
        }
        Ok(())
    }

    /// Agent counts per atom in ascending type order. Empty for `RiskUniform`.
    pub fn delay_counts(&self) -> Vec<(usize, usize)> {
        match &self.kind {
            PopulationKind::DelayClasses(atoms) => {
                let mut out: Vec<(usize, usize)> = atoms
                    .iter()
                    .map(|&(k, w)| (k, (w * self.size as f64).round() as usize))
                    .collect();
                out.sort_by_key(|&(k, _)| k);
                out
            }
            _ => Vec::new(),
        }
    }

    /// `(lambda, weight)` atoms in ascending order, or `None` for the continuous kind.
    pub fn risk_atoms(&self) -> Option<Vec<(f64, f64)>> {
        match &self.kind {
            PopulationKind::RiskDiscrete(atoms) => {
                let mut out = atoms.clone();
                out.sort_by(|a, b| a.0.total_cmp(&b.0));
                Some(out)
            }
            _ => None,
        }
    }

    /// Deterministic roster. Discrete kinds list `mu * N` agents per type in
    /// ascending type order; `RiskUniform` uses stratified quantiles `(i - 1/2) / N`.
    pub fn materialize(&self) -> Result<AgentRoster> {
        self.validate()?;
        let n = self.size;
        Ok(match &self.kind {
            PopulationKind::DelayClasses(_) => AgentRoster::Delays(
                self.delay_counts()
                    .into_iter()
                    .flat_map(|(k, count)| std::iter::repeat_n(k, count))
                    .collect(),
            ),
            PopulationKind::RiskDiscrete(_) => {
                let atoms = self.risk_atoms().unwrap_or_default();
                AgentRoster::Risk(
                    atoms
                        .into_iter()
                        .flat_map(|(l, w)| std::iter::repeat_n(l, (w * n as f64).round() as usize))
                        .collect(),
                )
            }
            PopulationKind::RiskUniform => AgentRoster::Risk((1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect()),
        })
    }

    /// Like [`materialize`](Self::materialize), but `RiskUniform` levels are
    /// drawn i.i.d. from `rng` and sorted ascending.
    pub fn materialize_iid<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<AgentRoster> {
        match self.kind {
            PopulationKind::RiskUniform => {
                let mut levels: Vec<f64> = (0..self.size).map(|_| rng.random::<f64>()).collect();
                levels.sort_by(f64::total_cmp);
                Ok(AgentRoster::Risk(levels))
            }
            _ => self.materialize(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn homogeneous_roster() {
        let d = PopulationDistribution::homogeneous_delay(1, 3).unwrap();
        assert_eq!(d.materialize().unwrap(), AgentRoster::Delays(vec![1, 1, 1]));
    }

    #[test]
    fn even_split_roster() {
        let d = PopulationDistribution::delays(vec![(2, 0.5), (1, 0.5)], 4).unwrap();
        assert_eq!(d.materialize().unwrap(), AgentRoster::Delays(vec![1, 1, 2, 2]));
    }

    #[test]
    fn stratified_uniform_levels() {
        let d = PopulationDistribution::risk_uniform(4).unwrap();
        assert_eq!(
            d.materialize().unwrap(),
            AgentRoster::Risk(vec![0.125, 0.375, 0.625, 0.875])
        );
    }

    #[test]
    fn stratified_mean_is_half() {
        for n in [1, 2, 7, 40, 101] {
            let AgentRoster::Risk(levels) = PopulationDistribution::risk_uniform(n).unwrap().materialize().unwrap()
            else {
                unreachable!()
            };
            let mean = levels.iter().sum::<f64>() / n as f64;
            assert!((mean - 0.5).abs() < 1e-15, "n = {n}: mean {mean}");
        }
    }

    #[test]
    fn validation_cases() {
        assert!(PopulationDistribution::delays(vec![(1, 0.3), (2, 0.7)], 10).is_ok());

        let err = PopulationDistribution::delays(vec![(1, 0.5), (2, 0.5)], 3).unwrap_err();
        match err {
            Error::Config { field, reason } => {
                assert!(field.contains("population.atoms"));
                assert!(reason.contains("1.5"));
            }
            other => panic!("unexpected {other:?}"),
        }

        assert!(PopulationDistribution::risk_discrete(vec![(0.2, 0.5), (0.8, 0.4)], 10).is_err());
        assert!(PopulationDistribution::delays(vec![(1, 0.5), (1, 0.5)], 4).is_err());
        assert!(PopulationDistribution::delays(vec![(0, 1.0)], 4).is_err());
        assert!(PopulationDistribution::risk_discrete(vec![(1.5, 1.0)], 4).is_err());
    }

    #[test]
    fn lattice_has_one_agent_per_level() {
        let d = PopulationDistribution::risk_lattice(40).unwrap();
        let AgentRoster::Risk(levels) = d.materialize().unwrap() else {
            unreachable!()
        };
        assert_eq!(levels.len(), 40);
        assert_eq!(levels[0], 1.0 / 40.0);
        assert_eq!(levels[39], 1.0);
    }

    #[test]
    fn iid_levels_are_sorted_and_in_range() {
        let d = PopulationDistribution::risk_uniform(50).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let AgentRoster::Risk(levels) = d.materialize_iid(&mut rng).unwrap() else {
            unreachable!()
        };
        assert!(levels.windows(2).all(|w| w[0] <= w[1]));
        assert!(levels.iter().all(|l| (0.0..1.0).contains(l)));
    }

    #[test]
    fn counts_sum_to_population() {
        let d = PopulationDistribution::uniform_delays(5, 40).unwrap();
        let total: usize = d.delay_counts().iter().map(|&(_, c)| c).sum();
        assert_eq!(total, 40);
        assert_eq!(d.materialize().unwrap().len(), 40);
        assert_eq!(d.max_delay(), Some(5));
    }
}
