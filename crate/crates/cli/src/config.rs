//! Run-configuration file: strict JSON mapped onto the core model types.

use std::path::Path;

use desync_core::cost::{CostFunction, CostKind, CostPair};
use desync_core::interval::IntervalScheme;
use desync_core::population::PopulationDistribution;
use desync_core::scalar::ScalarScheme;
use desync_core::sim::{InitialAllocation, LambdaSampling, Scheme};
use serde::Deserialize;

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub costs: CostsSection,
    #[serde(default)]
    pub population: Option<PopulationSection>,
    #[serde(default)]
    pub scheme: Option<SchemeSection>,
    #[serde(default)]
    pub simulation: Option<SimulationSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostsSection {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "c_A")]
    pub c_a: CostSpec,
    #[serde(rename = "c_B")]
    pub c_b: CostSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    Affine { intercept: f64, slope: f64 },
    Reciprocal { base: f64, pole: f64, scale: f64 },
    Tabular { values: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PopulationSection {
    /// `[[k, mu_k], ...]`
    Delays { atoms: Vec<(usize, f64)> },
    /// Equal shares over delays `1..=max_delay`.
    UniformDelays { max_delay: usize },
    /// `[[lambda, mu], ...]`
    RiskDiscrete { atoms: Vec<(f64, f64)> },
    /// One agent at each of `1/N, 2/N, ..., 1`.
    RiskLattice {},
    RiskUniform {
        #[serde(default)]
        sampling: Option<SamplingSpec>,
    },
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SamplingSpec {
    Stratified,
    Iid,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeSection {
    Scalar { sigma: f64 },
    Interval { delta: f64, gamma: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(rename = "T")]
    pub horizon: Option<usize>,
    #[serde(rename = "R")]
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub initial_allocation: Option<InitialSpec>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum InitialSpec {
    Count(usize),
    Named(InitialName),
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
pub enum InitialName {
    #[serde(rename = "policy-default")]
    PolicyDefault,
    /// The social optimum `n*`.
    #[serde(rename = "optimum")]
    Optimum,
}

/// Either an explicit ascending list or an inclusive `min..max` range with `step`.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Range { min: f64, max: f64, step: f64 },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub sigma: Option<GridSpec>,
    pub delta: Option<GridSpec>,
    pub gamma: Option<GridSpec>,
    pub x0: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    pub lipschitz: Option<f64>,
    pub cost_max: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<String>,
    #[serde(default)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
}

impl GridSpec {
    /// Grid values in ascending order without duplicates.
    pub fn values(&self, field: &str) -> CliResult<Vec<f64>> {
        let mut out = match self {
            GridSpec::List(v) => v.clone(),
            GridSpec::Range { min, max, step } => {
                if !(*step > 0.0) || !step.is_finite() {
                    return Err(CliError::invalid(field, format!("step must be positive, got {step}")));
                }
                if !(min <= max) {
                    return Err(CliError::invalid(field, format!("min {min} exceeds max {max}")));
                }
                let count = ((max - min) / step + 1e-9).floor() as usize;
                (0..=count).map(|i| min + i as f64 * step).collect()
            }
        };
        if out.is_empty() {
            return Err(CliError::invalid(field, "grid is empty"));
        }
        if let Some(bad) = out.iter().find(|v| !v.is_finite()) {
            return Err(CliError::invalid(field, format!("grid value {bad} is not finite")));
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        Ok(out)
    }

    /// Parses `a,b,c` or `min:max:step`.
    pub fn parse(text: &str, field: &str) -> CliResult<GridSpec> {
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::invalid(field, format!("`{s}` is not a number")))
        };
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() == 3 {
            return Ok(GridSpec::Range {
                min: num(parts[0])?,
                max: num(parts[1])?,
                step: num(parts[2])?,
            });
        }
        if parts.len() != 1 {
            return Err(CliError::invalid(field, "expected `a,b,c` or `min:max:step`"));
        }
        Ok(GridSpec::List(
            text.split(',').map(num).collect::<CliResult<Vec<f64>>>()?,
        ))
    }
}

impl CostSpec {
    fn build(&self, n: usize, field: &str) -> CliResult<CostFunction> {
        let kind = match self {
            CostSpec::Affine { intercept, slope } => CostKind::Affine {
                intercept: *intercept,
                slope: *slope,
            },
            CostSpec::Reciprocal { base, pole, scale } => CostKind::Reciprocal {
                base: *base,
                pole: *pole,
                scale: *scale,
            },
            CostSpec::Tabular { values } => CostKind::Tabular(values.clone()),
        };
        CostFunction::new(kind, n).map_err(|e| CliError::from_core(e, field))
    }
}

impl RunConfigFile {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn pair(&self) -> CliResult<CostPair> {
        let n = self.costs.n;
        if n == 0 {
            return Err(CliError::invalid("costs.N", "population size must be positive"));
        }
        let a = self.costs.c_a.build(n, "costs.c_A")?;
        let b = self.costs.c_b.build(n, "costs.c_B")?;
        CostPair::new(a, b).map_err(|e| CliError::from_core(e, "costs"))
    }

    pub fn population(&self) -> CliResult<(PopulationDistribution, LambdaSampling)> {
        let n = self.costs.n;
        let section = self
            .population
            .as_ref()
            .ok_or_else(|| CliError::invalid("population", "section is required for this command"))?;
        let mut sampling = LambdaSampling::Stratified;
        let dist = match section {
            PopulationSection::Delays { atoms } => PopulationDistribution::delays(atoms.clone(), n),
            PopulationSection::UniformDelays { max_delay } => {
                if *max_delay == 0 {
                    return Err(CliError::invalid("population.max_delay", "must be at least 1"));
                }
                PopulationDistribution::uniform_delays(*max_delay, n)
            }
            PopulationSection::RiskDiscrete { atoms } => PopulationDistribution::risk_discrete(atoms.clone(), n),
            PopulationSection::RiskLattice {} => PopulationDistribution::risk_lattice(n),
            PopulationSection::RiskUniform { sampling: s } => {
                if *s == Some(SamplingSpec::Iid) {
                    sampling = LambdaSampling::Iid;
                }
                PopulationDistribution::risk_uniform(n)
            }
        }
        .map_err(|e| CliError::from_core(e, "population"))?;
        Ok((dist, sampling))
    }

    pub fn scheme(&self) -> CliResult<Scheme> {
        let section = self
            .scheme
            .as_ref()
            .ok_or_else(|| CliError::invalid("scheme", "section is required for this command"))?;
        let scheme = match section {
            SchemeSection::Scalar { sigma } => ScalarScheme::new(*sigma).map(Scheme::Scalar),
            SchemeSection::Interval { delta, gamma } => IntervalScheme::new(*delta, *gamma).map(Scheme::Interval),
        };
        scheme.map_err(|e| CliError::from_core(e, "scheme"))
    }

    pub fn simulation(&self) -> SimulationSection {
        self.simulation.clone().unwrap_or(SimulationSection {
            horizon: None,
            replications: None,
            seed: None,
            initial_allocation: None,
        })
    }

    pub fn sweep(&self) -> SweepSection {
        self.sweep.clone().unwrap_or_default()
    }

    pub fn output_path(&self) -> Option<String> {
        self.output.as_ref().and_then(|o| o.path.clone())
    }
}

impl InitialSpec {
    pub fn resolve(&self, pair: &CostPair) -> InitialAllocation {
        match self {
            InitialSpec::Count(n) => InitialAllocation::Fixed(*n),
            InitialSpec::Named(InitialName::PolicyDefault) => InitialAllocation::PolicyDefault,
            InitialSpec::Named(InitialName::Optimum) => InitialAllocation::Fixed(pair.social_optimum().n_star),
        }
    }
}
