//! Fixed, mixed and dynamic simulated-regret harnesses on a parallel network
//! of free links plus one toll road with zero base cost.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::distributions::{DistributionSpec, LinkDistribution};
use crate::error::{Error, Result};
use crate::grid::PriceGrid;
use crate::history::{estimate_moment_envelope, mean_and_stdev};
use crate::metrics::relative_regret;
use crate::pricing::{optimal_toll_for_realized_costs, realized_revenue, two_point_robust_toll};
use crate::Money;

const LINK_STREAM: u64 = 1;
const FAMILY_STREAM: u64 = 2;
const HISTORY_STREAM: u64 = 1 << 32;
const EVAL_STREAM: u64 = 2 << 32;

pub const FULL_EVAL_SAMPLES: usize = 2500;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid: PriceGrid,
    pub links: usize,
    /// Periods per tolling period.
    pub periods: usize,
    /// Tolling periods per history sample.
    pub windows: usize,
    pub kappa_bar: f64,
    pub confidence_z: f64,
    pub history_samples: usize,
    pub eval_samples: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Desk scale: 5 links, `T = 50`, `#H = 1`, 50 history and 500 evaluation samples.
    pub fn desk(grid: PriceGrid, seed: u64) -> Self {
        Self {
            grid,
            links: 5,
            periods: 50,
            windows: 1,
            kappa_bar: 1.0,
            confidence_z: 1.96,
            history_samples: 50,
            eval_samples: 500,
            seed,
        }
    }

    pub fn full_scale(mut self) -> Self {
        self.eval_samples = FULL_EVAL_SAMPLES;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("links", self.links),
            ("T", self.periods),
            ("H", self.windows),
            ("history_samples", self.history_samples),
            ("eval_samples", self.eval_samples),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, n)| *n == 0) {
            return Err(Error::InvalidArgument(format!("{name} must be positive")));
        }
        if !(self.kappa_bar >= 0.0) || !(self.confidence_z >= 0.0) {
            return Err(Error::InvalidArgument("kappa_bar and confidence_z must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// One robust toll per history sample.
    Robust,
    /// The mean of the per-history robust tolls, snapped to the grid.
    AverageRobust,
    /// Toll fixed at the history sample mean.
    SampleMean,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Robust => "robust",
            Variant::AverageRobust => "average-robust",
            Variant::SampleMean => "sample-mean",
        }
    }
}

/// Relative regret over all evaluated pairs, in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretSummary {
    pub variant: Variant,
    pub avg_pct: f64,
    pub stdev_pct: f64,
    pub toll_stdev: f64,
}

impl RegretSummary {
    pub(crate) fn from_regrets(variant: Variant, regrets: &[f64], tolls: &[Money]) -> Self {
        let (avg, sd) = mean_and_stdev(regrets);
        let toll_stdev = if tolls.is_empty() { 0.0 } else { mean_and_stdev(tolls).1 };
        Self {
            variant,
            avg_pct: 100.0 * avg,
            stdev_pct: 100.0 * sd,
            toll_stdev,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub label: String,
    /// Spec descriptions, one per distinct spec used.
    pub mappings: Vec<String>,
    pub robust_tolls: Vec<Money>,
    pub mean_tolls: Vec<Money>,
    pub average_toll: Money,
    /// Per evaluation sample: optimal toll and revenue.
    pub optimal: Vec<(Money, Money)>,
    pub summaries: Vec<RegretSummary>,
    /// Two-point BR curve `(r, BR(r))` for the first history sample.
    pub br_curve: Vec<(Money, Money)>,
    /// Cumulative regret of the average robust toll against the best static
    /// toll, one value per evaluation sample.
    pub cumulative: Vec<f64>,
}

impl SimulationReport {
    pub fn summary(&self, variant: Variant) -> &RegretSummary {
        self.summaries
            .iter()
            .find(|s| s.variant == variant)
            .expect("every variant is summarized")
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Per-state toll-road margins: the cheapest free link in each state.
fn margin_sample(links: &[LinkDistribution], states: usize, rng: &mut ChaCha8Rng, grid: &PriceGrid) -> Vec<Money> {
    (0..states)
        .map(|_| {
            links
                .iter()
                .map(|l| l.sample(rng, grid))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn draw_links(cfg: &ExperimentConfig, specs: &[&DistributionSpec]) -> Result<Vec<LinkDistribution>> {
    let mut rng = stream(cfg.seed, LINK_STREAM);
    specs.iter().map(|s| s.draw_link(&mut rng)).collect()
}

/// All links share `spec`; parameters are drawn per link.
pub fn run_fixed_distribution_experiment(cfg: &ExperimentConfig, spec: &DistributionSpec) -> Result<SimulationReport> {
    cfg.validate()?;
    let specs = vec![spec; cfg.links];
    let links = draw_links(cfg, &specs)?;
    simulate(cfg, spec.name.clone(), vec![spec.describe()], &links)
}

/// Each link picks its spec uniformly from `pool`, on a stream separate from
/// the parameter draws; a one-element pool reproduces the fixed experiment.
pub fn run_mixed_distribution_experiment(cfg: &ExperimentConfig, pool: &[DistributionSpec]) -> Result<SimulationReport> {
    cfg.validate()?;
    if pool.is_empty() {
        return Err(Error::InvalidArgument("empty distribution pool".into()));
    }
    let mut pick = stream(cfg.seed, FAMILY_STREAM);
    let specs: Vec<&DistributionSpec> = (0..cfg.links)
        .map(|_| &pool[pick.random_range(0..pool.len())])
        .collect();
    let links = draw_links(cfg, &specs)?;
    let mut mappings: Vec<String> = specs.iter().map(|s| s.describe()).collect();
    mappings.sort();
    mappings.dedup();
    let label = if pool.len() == 1 { pool[0].name.clone() } else { "mixed".to_string() };
    simulate(cfg, label, mappings, &links)
}

/// Cumulative regret series of the averaged robust toll.
pub fn run_dynamic_cumulative_regret(cfg: &ExperimentConfig, spec: &DistributionSpec) -> Result<Vec<f64>> {
    Ok(run_fixed_distribution_experiment(cfg, spec)?.cumulative)
}

fn simulate(
    cfg: &ExperimentConfig,
    label: String,
    mappings: Vec<String>,
    links: &[LinkDistribution],
) -> Result<SimulationReport> {
    let grid = &cfg.grid;
    let history_states = cfg.periods * cfg.windows;

    let histories: Vec<Vec<Money>> = (0..cfg.history_samples)
        .into_par_iter()
        .map(|h| margin_sample(links, history_states, &mut stream(cfg.seed, HISTORY_STREAM + h as u64), grid))
        .collect();
    let evals: Vec<Vec<Money>> = (0..cfg.eval_samples)
        .into_par_iter()
        .map(|e| margin_sample(links, cfg.periods, &mut stream(cfg.seed, EVAL_STREAM + e as u64), grid))
        .collect();

    let robust: Vec<_> = histories
        .par_iter()
        .map(|m| {
            let env = estimate_moment_envelope(grid, m, cfg.confidence_z, cfg.kappa_bar)?;
            two_point_robust_toll(grid, &env, cfg.periods)
        })
        .collect::<Result<_>>()?;
    let robust_tolls: Vec<Money> = robust.iter().map(|r| r.toll).collect();
    let mean_tolls: Vec<Money> = histories.iter().map(|m| grid.snap(mean_and_stdev(m).0)).collect();
    let average_toll = grid.snap(mean_and_stdev(&robust_tolls).0);

    let optimal: Vec<(Money, Money)> = evals
        .par_iter()
        .map(|c| optimal_toll_for_realized_costs(c, grid))
        .collect::<Result<_>>()?;

    let pair_regrets = |tolls: &[Money]| -> Result<Vec<f64>> {
        let rows: Vec<Vec<f64>> = evals
            .par_iter()
            .zip(&optimal)
            .map(|(c, &(_, best))| {
                tolls
                    .iter()
                    .map(|&r| relative_regret(best, realized_revenue(c, r)))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        Ok(rows.concat())
    };

    let summaries = vec![
        RegretSummary::from_regrets(Variant::Robust, &pair_regrets(&robust_tolls)?, &robust_tolls),
        RegretSummary::from_regrets(Variant::AverageRobust, &pair_regrets(&[average_toll])?, &[]),
        RegretSummary::from_regrets(Variant::SampleMean, &pair_regrets(&mean_tolls)?, &mean_tolls),
    ];

    let cumulative = cumulative_regret(&evals, average_toll, grid)?;

    Ok(SimulationReport {
        label,
        mappings,
        robust_tolls,
        mean_tolls,
        average_toll,
        optimal,
        summaries,
        br_curve: robust.into_iter().next().map(|r| r.br_curve).unwrap_or_default(),
        cumulative,
    })
}

/// Regret up to each period of a fixed toll `r` against the single toll that
/// is best over the whole horizon. Prefixes where `r` earns more count as 0.
pub fn cumulative_regret(periods: &[Vec<Money>], r: Money, grid: &PriceGrid) -> Result<Vec<f64>> {
    let all: Vec<Money> = periods.concat();
    let (static_toll, _) = optimal_toll_for_realized_costs(&all, grid)?;
    let mut best = 0.0;
    let mut got = 0.0;
    Ok(periods
        .iter()
        .map(|c| {
            best += realized_revenue(c, static_toll);
            got += realized_revenue(c, r);
            if best > 0.0 {
                ((best - got) / best).max(0.0)
            } else {
                0.0
            }
        })
        .collect())
}
