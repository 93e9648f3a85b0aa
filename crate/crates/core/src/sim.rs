//! Closed-loop simulation of signalling and population response.
//!
//! Step 1 sets the initial allocation. At every later step the central agent
//! reports on the previous allocation and each agent applies its policy:
//!
//! - scalar scheme: after step `tau` every agent `i` receives its own noisy
//!   report of `n_tau`, drawn from substream `(seed, replication, tau, i)`. A
//!   delay-`k` agent acting at `t` uses the report from step `t - k`.
//! - interval scheme: at step `t` one interval signal about `n_{t-1}` is drawn
//!   from substream `(seed, replication, t, BROADCAST)` and shared by all agents.

use rayon::prelude::*;

use crate::cost::CostPair;
use crate::interval::{self, IntervalScheme};
use crate::population::{AgentRoster, PopulationDistribution};
use crate::rng::{self, substream};
use crate::scalar::{delayed_action, ScalarScheme, ScalarSignal};
use crate::{Action, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Scalar(ScalarScheme),
    Interval(IntervalScheme),
}

/// Allocation at step 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialAllocation {
    /// Every agent plays `A`, the default branch of the delayed policy.
    PolicyDefault,
    Fixed(usize),
}

/// How continuous risk populations become a finite roster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaSampling {
    #[default]
    Stratified,
    /// Fresh i.i.d. uniform levels per replication.
    Iid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub pair: CostPair,
    pub population: PopulationDistribution,
    pub scheme: Scheme,
    pub horizon: usize,
    pub initial_allocation: InitialAllocation,
    pub seed: u64,
    pub replications: usize,
    pub lambda_sampling: LambdaSampling,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.pair.population_size();
        if self.population.size() != n {
            return Err(Error::config(
                "population.N",
                format!(
                    "population has {} agents but costs are defined for N = {n}",
                    self.population.size()
                ),
            ));
        }
        self.population.validate()?;
        match (&self.scheme, self.population.is_delay()) {
            (Scheme::Scalar(_), false) => {
                return Err(Error::config(
                    "scheme.kind",
                    "scalar signalling needs a delay-class population",
                ))
            }
            (Scheme::Interval(_), true) => {
                return Err(Error::config(
                    "scheme.kind",
                    "interval signalling needs a risk population",
                ))
            }
            _ => {}
        }
        if self.horizon == 0 {
            return Err(Error::config("simulation.T", "horizon must be at least 1"));
        }
        if self.replications == 0 {
            return Err(Error::config("simulation.R", "need at least one replication"));
        }
        if let InitialAllocation::Fixed(n0) = self.initial_allocation {
            if n0 > n {
                return Err(Error::config(
                    "simulation.initial_allocation",
                    format!("{n0} exceeds N = {n}"),
                ));
            }
        }
        Ok(())
    }

    fn first_allocation(&self) -> usize {
        match self.initial_allocation {
            InitialAllocation::PolicyDefault => self.pair.population_size(),
            InitialAllocation::Fixed(n) => n,
        }
    }

    fn roster(&self, replication: u64) -> Result<AgentRoster> {
        match self.lambda_sampling {
            LambdaSampling::Stratified => self.population.materialize(),
            LambdaSampling::Iid => {
                let mut rng = substream(self.seed, replication, 0, rng::REPLICATION);
                self.population.materialize_iid(&mut rng)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub t: usize,
    pub n_a: usize,
    pub cost_a: f64,
    pub cost_b: f64,
    pub social_cost: f64,
    /// Mean social cost over steps `1..=t`.
    pub running_avg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub population_size: usize,
    pub steps: Vec<TraceStep>,
}

impl SimulationTrace {
    pub fn allocations(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.n_a).collect()
    }

    pub fn fractions(&self) -> Vec<f64> {
        let n = self.population_size as f64;
        self.steps.iter().map(|s| s.n_a as f64 / n).collect()
    }

    /// Time-averaged social cost over the whole horizon.
    pub fn final_average(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.running_avg)
    }
}

/// State of one replication: the allocations so far and, for the scalar
/// scheme, every agent's received reports.
struct Run<'a> {
    cfg: &'a SimulationConfig,
    replication: u64,
    roster: AgentRoster,
    allocations: Vec<usize>,
    histories: Vec<Vec<ScalarSignal>>,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a SimulationConfig, replication: u64) -> Result<Self> {
        let roster = cfg.roster(replication)?;
        let histories = match cfg.scheme {
            Scheme::Scalar(_) => vec![Vec::with_capacity(cfg.horizon); roster.len()],
            Scheme::Interval(_) => Vec::new(),
        };
        Ok(Run {
            cfg,
            replication,
            roster,
            allocations: Vec::with_capacity(cfg.horizon),
            histories,
        })
    }

    /// Records `n` as the allocation of the next step. With `report`, also
    /// sends every agent its report about it.
    fn push(&mut self, n: usize, report: bool) {
        self.allocations.push(n);
        let tau = self.allocations.len() as u64;
        if !report {
            return;
        }
        if let Scheme::Scalar(scheme) = self.cfg.scheme {
            let (a, b) = self.cfg.pair.action_costs_unchecked(n);
            for (i, history) in self.histories.iter_mut().enumerate() {
                let signal = if scheme.sigma() == 0.0 {
                    ScalarSignal { y_a: a, y_b: b }
                } else {
                    let mut rng = substream(self.cfg.seed, self.replication, tau, i as u64);
                    scheme.perturb(a, b, &mut rng)
                };
                history.push(signal);
            }
        }
    }

    /// Allocation at step `allocations.len() + 1`.
    fn next(&self) -> Result<usize> {
        let t = self.allocations.len() + 1;
        let mut on_a = 0;
        match (&self.cfg.scheme, &self.roster) {
            (Scheme::Scalar(_), AgentRoster::Delays(delays)) => {
                for (k, history) in delays.iter().zip(&self.histories) {
                    if delayed_action(*k, t, history)? == Action::A {
                        on_a += 1;
                    }
                }
            }
            (Scheme::Interval(scheme), AgentRoster::Risk(levels)) => {
                let prev = *self
                    .allocations
                    .last()
                    .ok_or_else(|| Error::domain("interval step needs a previous allocation"))?;
                let mut rng = substream(self.cfg.seed, self.replication, t as u64, rng::BROADCAST);
                let signal = scheme.signal(&self.cfg.pair, prev, &mut rng)?;
                on_a = levels
                    .iter()
                    .filter(|&&l| interval::choose(&signal, l) == Action::A)
                    .count();
            }
            _ => return Err(Error::config("scheme.kind", "scheme does not match population")),
        }
        Ok(on_a)
    }
}

fn build_trace(pair: &CostPair, allocations: &[usize]) -> SimulationTrace {
    let mut total = 0.0;
    let steps = allocations
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let (cost_a, cost_b) = pair.action_costs_unchecked(n);
            let social_cost = pair.social_cost_unchecked(n);
            total += social_cost;
            TraceStep {
                t: i + 1,
                n_a: n,
                cost_a,
                cost_b,
                social_cost,
                running_avg: total / (i + 1) as f64,
            }
        })
        .collect();
    SimulationTrace {
        population_size: pair.population_size(),
        steps,
    }
}

/// One replication over the configured horizon. Identical `(cfg, replication)`
/// always yields an identical trace.
pub fn run_once(cfg: &SimulationConfig, replication: u64) -> Result<SimulationTrace> {
    cfg.validate()?;
    let mut run = Run::new(cfg, replication)?;
    run.push(cfg.first_allocation(), cfg.horizon > 1);
    for t in 2..=cfg.horizon {
        let n = run.next()?;
        run.push(n, t < cfg.horizon);
    }
    Ok(build_trace(&cfg.pair, &run.allocations))
}

/// Allocation at step `history.len() + 1` when steps `1..=history.len()` are
/// forced to `history`. Uses the same substreams as [`run_once`], so a
/// history that `run_once` itself produced reproduces its next step.
pub fn next_allocation(cfg: &SimulationConfig, replication: u64, history: &[usize]) -> Result<usize> {
    cfg.validate()?;
    let n = cfg.pair.population_size();
    if history.is_empty() {
        return Ok(cfg.first_allocation());
    }
    if let Some(bad) = history.iter().find(|&&h| h > n) {
        return Err(Error::domain(format!("forced allocation {bad} exceeds N = {n}")));
    }
    let mut run = Run::new(cfg, replication)?;
    for &h in history {
        run.push(h, true);
    }
    run.next()
}

/// Mean and standard deviation across replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (`R - 1` denominator); zero when `R = 1`.
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let r = values.len();
        if r == 0 {
            return Summary {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        if values.iter().all(|v| *v == values[0]) {
            return Summary {
                mean: values[0],
                std: 0.0,
            };
        }
        let mean = values.iter().sum::<f64>() / r as f64;
        let std = if r < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64).sqrt()
        };
        Summary { mean, std }
    }

    /// `std / sqrt(R)`.
    pub fn standard_error(&self, replications: usize) -> f64 {
        self.std / (replications as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepStats {
    pub t: usize,
    pub frac_a: Summary,
    pub cost_a: Summary,
    pub cost_b: Summary,
    pub social_cost: Summary,
    pub running_avg: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationStats {
    pub replications: usize,
    pub final_average: Summary,
    pub steps: Vec<StepStats>,
}

impl ReplicationStats {
    pub fn from_traces(traces: &[SimulationTrace]) -> ReplicationStats {
        let horizon = traces.first().map_or(0, |t| t.steps.len());
        let column = |i: usize, f: &dyn Fn(&TraceStep, f64) -> f64| -> Summary {
            let vals: Vec<f64> = traces
                .iter()
                .map(|tr| f(&tr.steps[i], tr.population_size as f64))
                .collect();
            Summary::of(&vals)
        };
        let steps = (0..horizon)
            .map(|i| StepStats {
                t: i + 1,
                frac_a: column(i, &|s, n| s.n_a as f64 / n),
                cost_a: column(i, &|s, _| s.cost_a),
                cost_b: column(i, &|s, _| s.cost_b),
                social_cost: column(i, &|s, _| s.social_cost),
                running_avg: column(i, &|s, _| s.running_avg),
            })
            .collect();
        let finals: Vec<f64> = traces.iter().map(SimulationTrace::final_average).collect();
        ReplicationStats {
            replications: traces.len(),
            final_average: Summary::of(&finals),
            steps,
        }
    }
}

/// Runs replications `1..=R` in parallel, returned in replication order.
pub fn run_traces(cfg: &SimulationConfig) -> Result<Vec<SimulationTrace>> {
    cfg.validate()?;
    (1..=cfg.replications as u64)
        .into_par_iter()
        .map(|r| run_once(cfg, r))
        .collect()
}

/// Aggregate statistics over `R` replications.
pub fn run_replications(cfg: &SimulationConfig) -> Result<ReplicationStats> {
    Ok(ReplicationStats::from_traces(&run_traces(cfg)?))
}

/// Lag-1 sample autocorrelation; zero for a constant series.
pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let denom: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    if denom == 0.0 {
        return 0.0;
    }
    let num: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    num / denom
}
