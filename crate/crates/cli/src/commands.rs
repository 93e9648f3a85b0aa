//! Subcommands and their CSV layouts.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use desync_core::analytics::{
    broadcast_next_step_distribution, concentration_bound_mcdiarmid, concentration_bound_paper,
    delayed_next_step_distribution, expected_next_step_cost, find_fixed_point, fixed_point_iterates,
    mcdiarmid_bound_with_range, next_step_distribution, population_choice_prob, CountDistribution,
};
use desync_core::cost::CostPair;
use desync_core::interval::IntervalScheme;
use desync_core::population::PopulationDistribution;
use desync_core::scalar::ScalarScheme;
use desync_core::sim::{
    run_traces, InitialAllocation, LambdaSampling, ReplicationStats, Scheme, SimulationConfig, Summary,
};

use crate::config::{GridSpec, RunConfigFile};
use crate::output::{emit, write_atomic, Csv};
use crate::{CliError, CliResult};

const DEFAULT_HORIZON: usize = 30;
const DEFAULT_REPLICATIONS: usize = 100;
const DEFAULT_ITERATE_STEPS: usize = 30;

#[derive(Debug, Parser)]
#[command(
    name = "desync",
    version,
    about = "Signalling experiments for two-resource congestion games"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides `simulation.seed`.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Overrides `simulation.R`.
    #[arg(long, global = true, value_name = "R")]
    pub replications: Option<usize>,
    /// Overrides `simulation.T`.
    #[arg(long, global = true, value_name = "T")]
    pub horizon: Option<usize>,
    /// Output file; stdout when absent. Overrides `output.path`.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Worker threads for replications; defaults to the number of CPUs.
    #[arg(long, global = true, value_name = "K")]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the closed loop and write the per-step trace.
    Simulate {
        /// Per-step standard deviations across replications.
        #[arg(long, value_name = "PATH")]
        stats: Option<PathBuf>,
    },
    /// Next-step social cost from the optimum over a noise grid.
    SweepSigma {
        #[arg(long)]
        min: Option<f64>,
        #[arg(long)]
        max: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// Explicit grid, `a,b,c` or `min:max:step`.
        #[arg(long, value_name = "GRID")]
        sigma: Option<String>,
    },
    /// Next-step social cost from the optimum over an interval-width grid.
    SweepInterval {
        #[arg(long, value_name = "GRID")]
        delta: Option<String>,
        #[arg(long, value_name = "GRID")]
        gamma: Option<String>,
        /// Append `broadcast_cost`, the exact expectation under the shared draw.
        #[arg(long)]
        exact: bool,
    },
    /// Iterate the expected-profile map to its fixed point.
    FixedPoint {
        #[arg(long, value_name = "GRID")]
        sigma: Option<String>,
        #[arg(long, value_name = "GRID")]
        x0: Option<String>,
        /// Also write every iterate in long form.
        #[arg(long, value_name = "PATH")]
        iterates: Option<PathBuf>,
        /// Number of iterates written per start.
        #[arg(long, value_name = "K")]
        steps: Option<usize>,
    },
    /// The allocation minimizing the social cost.
    SocialOptimum,
    /// Exact expected next-step allocation and cost.
    ExpectedCost {
        /// Previous allocation; defaults to the social optimum.
        #[arg(long, value_name = "N")]
        n_prev: Option<usize>,
    },
    /// Concentration bounds next to the simulated deviation frequency.
    Bounds {
        #[arg(long, value_name = "GRID")]
        eps: Option<String>,
        #[arg(long)]
        lipschitz: Option<f64>,
        #[arg(long)]
        cost_max: Option<f64>,
    },
}

/// Loads the config, runs the command inside a worker pool of the requested
/// size and writes the primary output.
pub fn run(cli: &Cli) -> CliResult<()> {
    let path = cli
        .global
        .config
        .as_deref()
        .ok_or_else(|| CliError::Validation("missing required flag `--config PATH`".into()))?;
    let file = RunConfigFile::load(path)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.global.workers {
        if k == 0 {
            return Err(CliError::invalid("--workers", "need at least one worker"));
        }
        builder = builder.num_threads(k);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Io(format!("starting worker pool: {e}")))?;
    let ctx = Context {
        file,
        global: cli.global.clone(),
    };
    let (csv, extra) = pool.install(|| ctx.dispatch(&cli.command))?;
    let out = ctx.output_path();
    emit(out.as_deref(), csv.as_str())?;
    if let Some((path, text)) = extra {
        write_atomic(&path, text.as_str())?;
    }
    Ok(())
}

struct Context {
    file: RunConfigFile,
    global: GlobalArgs,
}

type Outputs = (Csv, Option<(PathBuf, Csv)>);

impl Context {
    fn dispatch(&self, command: &Command) -> CliResult<Outputs> {
        match command {
            Command::Simulate { stats } => self.simulate(stats.as_deref()),
            Command::SweepSigma { min, max, step, sigma } => {
                let grid = sigma_grid(self, *min, *max, *step, sigma.as_deref())?;
                Ok((self.sweep_sigma(&grid)?, None))
            }
            Command::SweepInterval { delta, gamma, exact } => {
                let sweep = self.file.sweep();
                let deltas = grid_from(delta.as_deref(), sweep.delta.as_ref(), "sweep.delta")?;
                let gammas = grid_from(gamma.as_deref(), sweep.gamma.as_ref(), "sweep.gamma")?;
                Ok((self.sweep_interval(&deltas, &gammas, *exact)?, None))
            }
            Command::FixedPoint {
                sigma,
                x0,
                iterates,
                steps,
            } => {
                let sweep = self.file.sweep();
                let sigmas = match (sigma, &sweep.sigma) {
                    (None, None) => match self.file.scheme()? {
                        Scheme::Scalar(s) => vec![s.sigma()],
                        Scheme::Interval(_) => return Err(CliError::invalid("sweep.sigma", "no sigma grid given")),
                    },
                    (s, g) => grid_from(s.as_deref(), g.as_ref(), "sweep.sigma")?,
                };
                let starts = match (x0, &sweep.x0) {
                    (Some(text), _) => GridSpec::parse(text, "--x0")?.values("--x0")?,
                    (None, Some(v)) => GridSpec::List(v.clone()).values("sweep.x0")?,
                    (None, None) => vec![0.0, 0.5, 1.0],
                };
                self.fixed_point(
                    &sigmas,
                    &starts,
                    iterates.as_deref(),
                    steps.unwrap_or(DEFAULT_ITERATE_STEPS),
                )
            }
            Command::SocialOptimum => Ok((self.social_optimum()?, None)),
            Command::ExpectedCost { n_prev } => Ok((self.expected_cost(*n_prev)?, None)),
            Command::Bounds {
                eps,
                lipschitz,
                cost_max,
            } => {
                let sweep = self.file.sweep();
                let eps = match (eps, &sweep.eps) {
                    (Some(text), _) => GridSpec::parse(text, "--eps")?.values("--eps")?,
                    (None, Some(v)) => GridSpec::List(v.clone()).values("sweep.eps")?,
                    (None, None) => vec![0.05, 0.1, 0.2],
                };
                Ok((
                    self.bounds(&eps, lipschitz.or(sweep.lipschitz), cost_max.or(sweep.cost_max))?,
                    None,
                ))
            }
        }
    }

    fn output_path(&self) -> Option<PathBuf> {
        self.global
            .output
            .clone()
            .or_else(|| self.file.output_path().map(PathBuf::from))
    }

    fn seed(&self) -> u64 {
        self.global.seed.or(self.file.simulation().seed).unwrap_or(0)
    }

    fn replications(&self) -> CliResult<usize> {
        let r = self
            .global
            .replications
            .or(self.file.simulation().replications)
            .unwrap_or(DEFAULT_REPLICATIONS);
        if r == 0 {
            return Err(CliError::invalid("simulation.R", "need at least one replication"));
        }
        Ok(r)
    }

    fn horizon(&self) -> CliResult<usize> {
        let t = self
            .global
            .horizon
            .or(self.file.simulation().horizon)
            .unwrap_or(DEFAULT_HORIZON);
        if t == 0 {
            return Err(CliError::invalid("simulation.T", "horizon must be at least 1"));
        }
        Ok(t)
    }

    /// The configured population, or the one matching `scheme` when the
    /// section is absent: homogeneous delay 1 for scalar signalling, the risk
    /// lattice `{1/N, ..., 1}` for interval signalling.
    fn population_for(&self, pair: &CostPair, interval: bool) -> CliResult<(PopulationDistribution, LambdaSampling)> {
        if self.file.population.is_some() {
            return self.file.population();
        }
        let n = pair.population_size();
        let pop = if interval {
            PopulationDistribution::risk_lattice(n)
        } else {
            PopulationDistribution::homogeneous_delay(1, n)
        };
        Ok((
            pop.map_err(|e| CliError::from_core(e, "population"))?,
            LambdaSampling::Stratified,
        ))
    }

    fn sim_config(
        &self,
        pair: &CostPair,
        scheme: Scheme,
        horizon: usize,
        start: InitialAllocation,
    ) -> CliResult<SimulationConfig> {
        let (population, lambda_sampling) = self.population_for(pair, matches!(scheme, Scheme::Interval(_)))?;
        let cfg = SimulationConfig {
            pair: pair.clone(),
            population,
            scheme,
            horizon,
            initial_allocation: start,
            seed: self.seed(),
            replications: self.replications()?,
            lambda_sampling,
        };
        cfg.validate().map_err(|e| CliError::from_core(e, "simulation"))?;
        Ok(cfg)
    }

    fn simulate(&self, stats_path: Option<&Path>) -> CliResult<Outputs> {
        let pair = self.file.pair()?;
        let scheme = self.file.scheme()?;
        let start = self
            .file
            .simulation()
            .initial_allocation
            .map(|s| s.resolve(&pair))
            .unwrap_or(InitialAllocation::PolicyDefault);
        let cfg = self.sim_config(&pair, scheme, self.horizon()?, start)?;
        let traces = run_traces(&cfg).map_err(|e| CliError::from_core(e, "simulation"))?;
        let n = pair.population_size() as f64;
        let mut csv = Csv::with_header(&[
            "t",
            "n_A",
            "frac_A",
            "cost_A",
            "cost_B",
            "social_cost",
            "running_avg_cost",
        ]);
        if let [trace] = traces.as_slice() {
            for s in &trace.steps {
                csv.row(vec![
                    s.t.into(),
                    s.n_a.into(),
                    (s.n_a as f64 / n).into(),
                    s.cost_a.into(),
                    s.cost_b.into(),
                    s.social_cost.into(),
                    s.running_avg.into(),
                ]);
            }
        }
        let stats = ReplicationStats::from_traces(&traces);
        if traces.len() > 1 {
            for s in &stats.steps {
                csv.row(vec![
                    s.t.into(),
                    (s.frac_a.mean * n).into(),
                    s.frac_a.mean.into(),
                    s.cost_a.mean.into(),
                    s.cost_b.mean.into(),
                    s.social_cost.mean.into(),
                    s.running_avg.mean.into(),
                ]);
            }
        }
        let extra = stats_path.map(|p| {
            let mut out = Csv::with_header(&[
                "t",
                "frac_A_mean",
                "frac_A_std",
                "social_cost_mean",
                "social_cost_std",
                "running_avg_cost_mean",
                "running_avg_cost_std",
            ]);
            for s in &stats.steps {
                out.row(vec![
                    s.t.into(),
                    s.frac_a.mean.into(),
                    s.frac_a.std.into(),
                    s.social_cost.mean.into(),
                    s.social_cost.std.into(),
                    s.running_avg.mean.into(),
                    s.running_avg.std.into(),
                ]);
            }
            (p.to_path_buf(), out)
        });
        Ok((csv, extra))
    }

    fn sweep_sigma(&self, grid: &[f64]) -> CliResult<Csv> {
        let pair = self.file.pair()?;
        let n_star = pair.social_optimum().n_star;
        let horizon = self.horizon()?.max(2);
        let mut csv = Csv::with_header(&[
            "sigma",
            "analytic_cost",
            "sim_mean",
            "sim_std",
            "avg_cost_mean",
            "avg_cost_std",
        ]);
        for &sigma in grid {
            let scheme = ScalarScheme::new(sigma).map_err(|e| CliError::from_core(e, "sweep.sigma"))?;
            let cfg = self.sim_config(&pair, Scheme::Scalar(scheme), horizon, InitialAllocation::Fixed(n_star))?;
            let law = delayed_next_step_distribution(&pair, sigma, &cfg.population, &[n_star])
                .map_err(|e| CliError::from_core(e, "sweep.sigma"))?;
            let analytic = expected_cost(&law, &pair)?;
            let traces = run_traces(&cfg).map_err(|e| CliError::from_core(e, "simulation"))?;
            let next: Vec<f64> = traces.iter().map(|t| t.steps[1].social_cost).collect();
            let avg: Vec<f64> = traces.iter().map(|t| t.final_average()).collect();
            let (next, avg) = (Summary::of(&next), Summary::of(&avg));
            csv.row(vec![
                sigma.into(),
                analytic.into(),
                next.mean.into(),
                next.std.into(),
                avg.mean.into(),
                avg.std.into(),
            ]);
        }
        Ok(csv)
    }

    fn sweep_interval(&self, deltas: &[f64], gammas: &[f64], exact: bool) -> CliResult<Csv> {
        let pair = self.file.pair()?;
        let n_star = pair.social_optimum().n_star;
        let mut columns = vec!["delta", "gamma", "analytic_cost", "sim_mean", "sim_std"];
        if exact {
            columns.push("broadcast_cost");
        }
        let mut csv = Csv::with_header(&columns);
        for &delta in deltas {
            for &gamma in gammas {
                let scheme = IntervalScheme::new(delta, gamma).map_err(|e| CliError::from_core(e, "sweep"))?;
                let cfg = self.sim_config(&pair, Scheme::Interval(scheme), 2, InitialAllocation::Fixed(n_star))?;
                let p = population_choice_prob(&pair, n_star, delta, gamma, &cfg.population)
                    .map_err(|e| CliError::from_core(e, "population"))?;
                let law =
                    next_step_distribution(pair.population_size(), p).map_err(|e| CliError::from_core(e, "sweep"))?;
                let analytic = expected_cost(&law, &pair)?;
                let traces = run_traces(&cfg).map_err(|e| CliError::from_core(e, "simulation"))?;
                let next: Vec<f64> = traces.iter().map(|t| t.steps[1].social_cost).collect();
                let s = Summary::of(&next);
                let mut row = vec![delta.into(), gamma.into(), analytic.into(), s.mean.into(), s.std.into()];
                if exact {
                    let law = broadcast_next_step_distribution(&pair, n_star, delta, gamma, &cfg.population)
                        .map_err(|e| CliError::from_core(e, "population"))?;
                    row.push(expected_cost(&law, &pair)?.into());
                }
                csv.row(row);
            }
        }
        Ok(csv)
    }

    fn fixed_point(&self, sigmas: &[f64], starts: &[f64], iterates: Option<&Path>, steps: usize) -> CliResult<Outputs> {
        let pair = self.file.pair()?;
        let mut csv = Csv::with_header(&[
            "sigma",
            "x0",
            "limit",
            "iterations",
            "residual",
            "contraction_estimate",
            "converged",
        ]);
        let mut long = Csv::with_header(&["sigma", "x0", "t", "x"]);
        for &sigma in sigmas {
            if !(sigma > 0.0) {
                return Err(CliError::invalid(
                    "sweep.sigma",
                    format!("fixed-point needs sigma > 0, got {sigma}"),
                ));
            }
            for &x0 in starts {
                if !(0.0..=1.0).contains(&x0) {
                    return Err(CliError::invalid("sweep.x0", format!("start {x0} outside [0, 1]")));
                }
                let r = find_fixed_point(&pair, sigma, x0).map_err(|e| CliError::from_core(e, "sweep"))?;
                csv.row(vec![
                    sigma.into(),
                    x0.into(),
                    r.limit.into(),
                    r.iterations.into(),
                    r.residual.into(),
                    r.contraction_estimate.into(),
                    r.converged.into(),
                ]);
                if iterates.is_some() {
                    let xs =
                        fixed_point_iterates(&pair, sigma, x0, steps).map_err(|e| CliError::from_core(e, "sweep"))?;
                    for (t, x) in xs.into_iter().enumerate() {
                        long.row(vec![sigma.into(), x0.into(), t.into(), x.into()]);
                    }
                }
            }
        }
        Ok((csv, iterates.map(|p| (p.to_path_buf(), long))))
    }

    fn social_optimum(&self) -> CliResult<Csv> {
        let pair = self.file.pair()?;
        let opt = pair.social_optimum();
        let mut csv = Csv::with_header(&["n_star", "frac", "cost"]);
        csv.row(vec![
            opt.n_star.into(),
            (opt.n_star as f64 / pair.population_size() as f64).into(),
            opt.value.into(),
        ]);
        Ok(csv)
    }

    fn expected_cost(&self, n_prev: Option<usize>) -> CliResult<Csv> {
        let pair = self.file.pair()?;
        let n_prev = n_prev.unwrap_or(pair.social_optimum().n_star);
        if n_prev > pair.population_size() {
            return Err(CliError::invalid(
                "--n-prev",
                format!("{n_prev} exceeds N = {}", pair.population_size()),
            ));
        }
        let law = match self.file.scheme()? {
            Scheme::Scalar(s) => {
                let (pop, _) = self.population_for(&pair, false)?;
                // A constant history long enough for every delay class.
                let history = vec![n_prev; pop.max_delay().unwrap_or(1)];
                delayed_next_step_distribution(&pair, s.sigma(), &pop, &history)
            }
            Scheme::Interval(s) => {
                let (pop, _) = self.population_for(&pair, true)?;
                population_choice_prob(&pair, n_prev, s.delta(), s.gamma(), &pop)
                    .and_then(|p| next_step_distribution(pair.population_size(), p))
            }
        }
        .map_err(|e| CliError::from_core(e, "scheme"))?;
        let mut csv = Csv::with_header(&["n_prev", "expected_n_A", "expected_cost"]);
        csv.row(vec![
            n_prev.into(),
            law.mean().into(),
            expected_cost(&law, &pair)?.into(),
        ]);
        Ok(csv)
    }

    fn bounds(&self, eps: &[f64], lipschitz: Option<f64>, cost_max: Option<f64>) -> CliResult<Csv> {
        let pair = self.file.pair()?;
        let sigma = match self.file.scheme()? {
            Scheme::Scalar(s) => s.sigma(),
            Scheme::Interval(_) => return Err(CliError::invalid("scheme.kind", "bounds need scalar signalling")),
        };
        let lipschitz = lipschitz.unwrap_or_else(|| pair.fraction_lipschitz());
        let cost_max = cost_max.unwrap_or_else(|| pair.max_cost());
        if !(lipschitz >= 0.0) || !(cost_max >= 0.0) {
            return Err(CliError::invalid(
                "sweep",
                "lipschitz and cost_max must be non-negative",
            ));
        }
        if let Some(bad) = eps.iter().find(|e| !(**e > 0.0)) {
            return Err(CliError::invalid(
                "sweep.eps",
                format!("eps must be positive, got {bad}"),
            ));
        }
        let opt = pair.social_optimum();
        let c_star = opt.value;
        let cfg = self.sim_config(
            &pair,
            Scheme::Scalar(ScalarScheme::new(sigma).map_err(|e| CliError::from_core(e, "scheme"))?),
            2,
            InitialAllocation::Fixed(opt.n_star),
        )?;
        let law = delayed_next_step_distribution(&pair, sigma, &cfg.population, &[opt.n_star])
            .map_err(|e| CliError::from_core(e, "population"))?;
        let mean = expected_cost(&law, &pair)? / c_star;
        let traces = run_traces(&cfg).map_err(|e| CliError::from_core(e, "simulation"))?;
        let deviations: Vec<f64> = traces
            .iter()
            .map(|t| (t.steps[1].social_cost / c_star - mean).abs())
            .collect();
        let n = pair.population_size();
        let mut csv = Csv::with_header(&[
            "eps",
            "lipschitz",
            "c_star",
            "stated_bound",
            "mcdiarmid_bound",
            "mcdiarmid_range_bound",
            "empirical_freq",
        ]);
        for &e in eps {
            let freq = deviations.iter().filter(|d| **d >= e).count() as f64 / deviations.len() as f64;
            csv.row(vec![
                e.into(),
                lipschitz.into(),
                c_star.into(),
                concentration_bound_paper(e, lipschitz, c_star).into(),
                concentration_bound_mcdiarmid(e, lipschitz, n, c_star).into(),
                mcdiarmid_bound_with_range(e, lipschitz, n, c_star, cost_max).into(),
                freq.into(),
            ]);
        }
        Ok(csv)
    }
}

fn expected_cost(law: &CountDistribution, pair: &CostPair) -> CliResult<f64> {
    expected_next_step_cost(law, pair).map_err(|e| CliError::from_core(e, "costs"))
}

fn grid_from(flag: Option<&str>, section: Option<&GridSpec>, field: &str) -> CliResult<Vec<f64>> {
    match (flag, section) {
        (Some(text), _) => GridSpec::parse(text, field)?.values(field),
        (None, Some(spec)) => spec.values(field),
        (None, None) => Err(CliError::invalid(field, "no grid given")),
    }
}

fn sigma_grid(
    ctx: &Context,
    min: Option<f64>,
    max: Option<f64>,
    step: Option<f64>,
    list: Option<&str>,
) -> CliResult<Vec<f64>> {
    let grid = match (min, max, step) {
        (Some(min), Some(max), Some(step)) => GridSpec::Range { min, max, step }.values("sweep.sigma")?,
        (None, None, None) => grid_from(list, ctx.file.sweep().sigma.as_ref(), "sweep.sigma")?,
        _ => return Err(CliError::invalid("sweep.sigma", "--min, --max and --step go together")),
    };
    if let Some(bad) = grid.iter().find(|s| **s < 0.0) {
        return Err(CliError::invalid(
            "sweep.sigma",
            format!("sigma must be non-negative, got {bad}"),
        ));
    }
    Ok(grid)
}
